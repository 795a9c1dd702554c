use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use propscan_core::ingest::extract_article;
use propscan_core::pipeline::{estimate_cost, CostModel, CostReport, Micros};
use propscan_core::prompt::estimate_tokens;
use propscan_core::{Article, ProviderRegistry, TemplateSet};
use propscan_stats::csvio::{read_matrix, read_scores, read_summaries};
use propscan_stats::report::{build_report, ReportInput};
use propscan_stats::{anova_oneway_summary, cronbach_alpha, nps, ttest_pooled_summary};

use crate::api::{build_state, router, AnalyzeResponse};
use crate::config::ServerConfig;
use crate::render::{to_ansi, to_html};

#[derive(Debug, Parser)]
#[command(name = "propscan", version, about = "Flag propaganda techniques in news articles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP API.
    Serve(ServeArgs),
    /// Analyze an HTML or text file, or a URL with --allow-fetch.
    Analyze(AnalyzeArgs),
    /// Estimate the cost of analyzing an article.
    Cost(CostArgs),
    /// Survey statistics.
    #[command(subcommand)]
    Stats(StatsCommand),
}

#[derive(Debug, Args, Default)]
pub struct ProviderArgs {
    /// Configuration file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Provider backend: live, mock or replay.
    #[arg(long)]
    pub provider: Option<String>,
    /// Replay fixture directory.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    /// Mock provider script (JSON).
    #[arg(long)]
    pub mock_script: Option<PathBuf>,
    /// Record every completion as a replay fixture in this directory.
    #[arg(long)]
    pub record: Option<PathBuf>,
}

impl ProviderArgs {
    fn config(&self) -> anyhow::Result<ServerConfig> {
        let mut cfg = ServerConfig::load(self.config.as_deref())?;
        if let Some(p) = &self.provider {
            cfg.provider = p.clone();
        }
        let s = &mut cfg.provider_settings;
        if self.fixtures.is_some() {
            s.fixtures_dir = self.fixtures.clone();
        }
        if self.mock_script.is_some() {
            s.mock_script = self.mock_script.clone();
        }
        if self.record.is_some() {
            s.record_dir = self.record.clone();
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub provider: ProviderArgs,
    /// Address to listen on, e.g. 127.0.0.1:8787.
    #[arg(long)]
    pub bind: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Html,
    Ansi,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Path to an .html/.txt file, or an http(s) URL.
    pub input: String,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(flatten)]
    pub provider: ProviderArgs,
    /// Treat the whole input as a text selection.
    #[arg(long)]
    pub selection: bool,
    /// Permit fetching `input` over the network.
    #[arg(long)]
    pub allow_fetch: bool,
    /// Write the session log (JSON lines) here.
    #[arg(long)]
    pub session_log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    /// Article length in words.
    pub words: u64,
    /// Number of techniques found.
    pub techniques: usize,
    /// Input price in dollars per 1000 tokens.
    #[arg(long)]
    pub input_rate: Option<f64>,
    /// Output price in dollars per 1000 tokens.
    #[arg(long)]
    pub output_rate: Option<f64>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Net promoter score from a CSV with a `score` column (optional `group`).
    Nps {
        csv: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Cronbach's alpha from a participants x items CSV.
    Alpha {
        csv: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// One-way ANOVA from a `label,n,mean,sd` CSV.
    Anova {
        csv: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Pooled two-sample t-test from a two-row `label,n,mean,sd` CSV.
    Ttest {
        csv: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Render tables from a JSON input; the bundled study data by default.
    Report {
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
}

/// Exit status 2 for usage problems, 1 for everything else.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Failed(e)
    }
}

impl From<propscan_stats::StatsError> for CliError {
    fn from(e: propscan_stats::StatsError) -> Self {
        CliError::Failed(e.into())
    }
}

fn existing_file(path: &Path) -> Result<std::fs::File, CliError> {
    std::fs::File::open(path).map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<(), CliError> {
    let s = serde_json::to_string_pretty(v).map_err(anyhow::Error::from)?;
    println!("{s}");
    Ok(())
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Serve(args) => serve(args),
        Command::Analyze(args) => analyze(args),
        Command::Cost(args) => cost(args),
        Command::Stats(cmd) => stats(cmd),
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    Ok(tokio::runtime::Runtime::new().context("starting async runtime")?)
}

fn serve(args: ServeArgs) -> Result<(), CliError> {
    let mut cfg = args.provider.config()?;
    if let Some(b) = args.bind {
        cfg.bind = b;
    }
    let bind = cfg.bind.clone();
    let state = Arc::new(build_state(cfg, &ProviderRegistry::with_builtins())?);
    runtime()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&bind).await.with_context(|| format!("binding {bind}"))?;
        tracing::info!("listening on {}", listener.local_addr()?);
        eprintln!("propscan listening on http://{}", listener.local_addr()?);
        axum::serve(listener, router(state)).await.context("server error")?;
        Ok::<_, anyhow::Error>(())
    })?;
    Ok(())
}

async fn load_input(args: &AnalyzeArgs) -> Result<Article, CliError> {
    let input = args.input.as_str();
    if input.starts_with("http://") || input.starts_with("https://") {
        if !args.allow_fetch {
            return Err(CliError::Usage("fetching a URL requires --allow-fetch".into()));
        }
        let html = reqwest::get(input)
            .await
            .and_then(|r| r.error_for_status())
            .with_context(|| format!("fetching {input}"))?
            .text()
            .await
            .context("reading response body")?;
        return Ok(extract_article(&html, Some(input)).map_err(anyhow::Error::from)?);
    }
    let path = Path::new(input);
    let raw = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let article = if args.selection {
        Article::from_selection(&raw)
    } else {
        let is_html = path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("html") || e.eq_ignore_ascii_case("htm"))
            || raw.trim_start().starts_with('<');
        if is_html { extract_article(&raw, None) } else { Article::from_plain_text(&raw, None) }
    };
    Ok(article.map_err(anyhow::Error::from)?)
}

fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let cfg = args.provider.config()?;
    let rt = runtime()?;
    let article = rt.block_on(load_input(&args))?;
    let state = build_state(cfg, &ProviderRegistry::with_builtins())?;
    let result = rt.block_on(state.pipeline.analyze(&article));
    let result = match result {
        Ok(r) => r,
        Err(e) => {
            if let (Some(path), propscan_core::pipeline::PipelineError::Provider { session_log, .. }
            | propscan_core::pipeline::PipelineError::UnparseableDetection { session_log }) = (&args.session_log, &e)
            {
                let _ = std::fs::write(path, session_log.to_jsonl());
            }
            return Err(CliError::Failed(e.into()));
        }
    };
    if let Some(path) = &args.session_log {
        std::fs::write(path, result.session_log.to_jsonl()).with_context(|| format!("writing {}", path.display()))?;
    }
    let resp = AnalyzeResponse::from(&result);
    let out = match args.format {
        Format::Json => serde_json::to_string_pretty(&resp).map_err(anyhow::Error::from)? + "\n",
        Format::Html => to_html(&resp, article.title.as_deref(), &state.config),
        Format::Ansi => to_ansi(&resp),
    };
    std::io::stdout().write_all(out.as_bytes()).context("writing output")?;
    Ok(())
}

fn cost_text(words: u64, r: &CostReport) -> String {
    let unit = r.per_technique.first().map(|t| t.cost);
    let mut s = String::new();
    s += &format!("article words          {words}\n");
    s += &format!("article tokens         {}\n", estimate_tokens(words));
    s += &format!(
        "detection              {}  (input {} for {} tokens, output {} for {} tokens)\n",
        r.detection_cost, r.detection_input_cost, r.detection_input_tokens, r.detection_output_cost, r.detection_output_tokens
    );
    if let Some(u) = unit {
        s += &format!(
            "per technique          {}  (input {} for {} tokens, output {} for {} tokens)\n",
            u.cost, u.input_cost, u.input_tokens, u.output_cost, u.output_tokens
        );
    }
    s += &format!("techniques             {}\n", r.per_technique.len());
    s += &format!("total                  {}\n", r.total_cost);
    s
}

fn cost(args: CostArgs) -> Result<(), CliError> {
    let mut model = CostModel::default();
    for (rate, slot) in [(args.input_rate, &mut model.pricing.input_rate), (args.output_rate, &mut model.pricing.output_rate)] {
        if let Some(r) = rate {
            if !r.is_finite() || r < 0.0 {
                return Err(CliError::Usage("rates must be non-negative numbers".into()));
            }
            *slot = Micros::from_dollars(r);
        }
    }
    let report = estimate_cost(args.words, args.techniques, &model, TemplateSet::bundled().version());
    if args.json {
        print_json(&report)
    } else {
        print!("{}", cost_text(args.words, &report));
        Ok(())
    }
}

fn stats(cmd: StatsCommand) -> Result<(), CliError> {
    match cmd {
        StatsCommand::Nps { csv, json } => {
            let groups = read_scores(existing_file(&csv)?)?;
            let results = groups
                .iter()
                .map(|(label, scores)| Ok((label.clone(), nps(scores)?)))
                .collect::<Result<Vec<_>, propscan_stats::StatsError>>()?;
            if json {
                return print_json(&results);
            }
            println!("{:<12} {:>5} {:>11} {:>9} {:>10} {:>9} {:>5}", "group", "N", "detractors", "passives", "promoters", "exact", "NPS");
            for (label, b) in results {
                println!(
                    "{:<12} {:>5} {:>11} {:>9} {:>10} {:>9.2} {:>+5}",
                    label, b.n, b.detractors, b.passives, b.promoters, b.nps, b.nps_rounded
                );
            }
        }
        StatsCommand::Alpha { csv, json } => {
            let (items, rows) = read_matrix(existing_file(&csv)?)?;
            let alpha = cronbach_alpha(&rows)?;
            if json {
                return print_json(&serde_json::json!({"alpha": alpha, "items": items.len(), "participants": rows.len()}));
            }
            println!("cronbach alpha {alpha:.4} ({} items, {} participants)", items.len(), rows.len());
        }
        StatsCommand::Anova { csv, json } => {
            let groups = read_summaries(existing_file(&csv)?)?;
            let r = anova_oneway_summary(&groups)?;
            if json {
                return print_json(&r);
            }
            println!("F({}, {}) = {:.4}, p = {:.6}{}", r.df_between, r.df_within, r.f, r.p, if r.degenerate { " (degenerate)" } else { "" });
        }
        StatsCommand::Ttest { csv, json } => {
            let groups = read_summaries(existing_file(&csv)?)?;
            let [a, b] = groups.as_slice() else {
                return Err(CliError::Failed(anyhow!("t-test needs exactly 2 groups, got {}", groups.len())));
            };
            let r = ttest_pooled_summary(a, b)?;
            if json {
                return print_json(&r);
            }
            println!("{} vs {}: t({}) = {:.4}, p = {:.6}{}", a.label, b.label, r.df, r.t, r.p, if r.degenerate { " (degenerate)" } else { "" });
        }
        StatsCommand::Report { input, format } => {
            let input = match input {
                Some(path) => {
                    let raw = std::fs::read_to_string(&path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
                    ReportInput::from_json(&raw)?
                }
                None => ReportInput::bundled(),
            };
            let report = build_report(&input)?;
            match format {
                ReportFormat::Text => print!("{}", report.to_text()),
                ReportFormat::Csv => print!("{}", report.to_csv()?),
                ReportFormat::Json => print_json(&report)?,
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_valid() {
        Cli::command().debug_assert();
    }

    #[test]
    fn cost_report_text() {
        let r = estimate_cost(500, 3, &CostModel::default(), "v");
        let s = cost_text(500, &r);
        assert!(s.contains("detection              $0.0637  (input $0.0427"));
        assert!(s.contains("per technique          $0.0328  (input $0.0268 for 892 tokens, output $0.0060"));
        assert!(s.contains("total                  $0.1621"));
    }
}
