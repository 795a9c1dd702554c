//! Tabular report over NPS histograms and group-summary comparisons.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::{anova_oneway_summary, nps_from_counts, ttest_pooled_summary, AnovaResult, GroupSummary, NpsBreakdown, StatsError, TTestResult};

/// Study data shipped with the crate.
pub const BUNDLED_TABLES: &str = include_str!("../data/study_tables.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportInput {
    #[serde(default)]
    pub nps: Vec<NpsRow>,
    #[serde(default)]
    pub comparisons: Vec<Comparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NpsRow {
    pub label: String,
    pub counts: [u64; 11],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupHeader {
    pub label: String,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Comparison {
    pub title: String,
    pub groups: Vec<GroupHeader>,
    /// Index pairs into `groups` for post-hoc t-tests.
    #[serde(default)]
    pub pairs: Vec<[usize; 2]>,
    pub rows: Vec<MeasureRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureRow {
    pub variable: String,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    #[serde(default)]
    pub reported: Option<Reported>,
}

/// Reported values, shown next to the recomputed ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reported {
    pub f: Option<f64>,
    pub p: Option<f64>,
    #[serde(default)]
    pub t: Vec<f64>,
}

impl ReportInput {
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_TABLES).expect("bundled tables are valid")
    }

    pub fn from_json(raw: &str) -> Result<Self, StatsError> {
        let input: Self = serde_json::from_str(raw).map_err(|e| StatsError::Schema(e.to_string()))?;
        input.validate()?;
        Ok(input)
    }

    fn validate(&self) -> Result<(), StatsError> {
        if self.nps.is_empty() && self.comparisons.is_empty() {
            return Err(StatsError::Schema("input has no `nps` or `comparisons` entries".into()));
        }
        for c in &self.comparisons {
            let k = c.groups.len();
            if k < 2 {
                return Err(StatsError::Schema(format!("{}: at least 2 groups required", c.title)));
            }
            if let Some(p) = c.pairs.iter().find(|[a, b]| *a >= k || *b >= k || a == b) {
                return Err(StatsError::Schema(format!("{}: bad pair {p:?}", c.title)));
            }
            for r in &c.rows {
                if r.means.len() != k || r.sds.len() != k {
                    return Err(StatsError::Schema(format!("{}: `{}` needs {k} means and sds", c.title, r.variable)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowResult {
    pub variable: String,
    pub anova: AnovaResult,
    pub ttests: Vec<(String, TTestResult)>,
    pub reported: Option<Reported>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonResult {
    pub title: String,
    pub rows: Vec<RowResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub nps: Vec<(String, NpsBreakdown)>,
    pub comparisons: Vec<ComparisonResult>,
}

pub fn build_report(input: &ReportInput) -> Result<Report, StatsError> {
    let nps = input
        .nps
        .iter()
        .map(|r| Ok((r.label.clone(), nps_from_counts(&r.counts)?)))
        .collect::<Result<Vec<_>, StatsError>>()?;
    let mut comparisons = Vec::new();
    for c in &input.comparisons {
        let mut rows = Vec::new();
        for r in &c.rows {
            let groups = c
                .groups
                .iter()
                .zip(r.means.iter().zip(&r.sds))
                .map(|(g, (&m, &s))| GroupSummary::new(g.label.clone(), g.n, m, s))
                .collect::<Result<Vec<_>, _>>()?;
            let anova = anova_oneway_summary(&groups)?;
            let ttests = c
                .pairs
                .iter()
                .map(|&[a, b]| {
                    let t = ttest_pooled_summary(&groups[a], &groups[b])?;
                    Ok((format!("{} vs {}", groups[a].label, groups[b].label), t))
                })
                .collect::<Result<Vec<_>, StatsError>>()?;
            rows.push(RowResult { variable: r.variable.clone(), anova, ttests, reported: r.reported.clone() });
        }
        comparisons.push(ComparisonResult { title: c.title.clone(), rows });
    }
    Ok(Report { nps, comparisons })
}

fn fmt_p(p: f64) -> String {
    if p < 0.0001 { format!("{p:.2e}") } else { format!("{p:.4}") }
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.digits$}"))
}

impl Report {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if !self.nps.is_empty() {
            s.push_str("Net promoter score\n");
            let _ = writeln!(s, "{:<12} {:>5} {:>11} {:>9} {:>10} {:>9} {:>5}", "group", "N", "detractors", "passives", "promoters", "exact", "NPS");
            for (label, b) in &self.nps {
                let _ = writeln!(
                    s,
                    "{:<12} {:>5} {:>11} {:>9} {:>10} {:>9.2} {:>+5}",
                    label, b.n, b.detractors, b.passives, b.promoters, b.nps, b.nps_rounded
                );
            }
        }
        for c in &self.comparisons {
            let _ = writeln!(s, "\n{}", c.title);
            let _ = writeln!(s, "{:<22} {:>14} {:>9} {:>10} {:>10}", "variable", "F(df)", "p", "reported F", "reported p");
            for r in &c.rows {
                let a = &r.anova;
                let rep = r.reported.as_ref();
                let _ = writeln!(
                    s,
                    "{:<22} {:>14} {:>9} {:>10} {:>10}",
                    r.variable,
                    format!("{:.3}({},{})", a.f, a.df_between, a.df_within),
                    fmt_p(a.p),
                    fmt_opt(rep.and_then(|r| r.f), 3),
                    fmt_opt(rep.and_then(|r| r.p), 4),
                );
                for (i, (pair, t)) in r.ttests.iter().enumerate() {
                    let _ = writeln!(
                        s,
                        "  {:<20} {:>14} {:>9} {:>10}",
                        pair,
                        format!("t={:.3}({})", t.t, t.df),
                        fmt_p(t.p),
                        fmt_opt(rep.and_then(|r| r.t.get(i).copied()), 3),
                    );
                }
            }
        }
        s
    }

    /// Long format: one line per statistic.
    pub fn to_csv(&self) -> Result<String, StatsError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["section", "variable", "statistic", "comparison", "value", "df1", "df2", "p", "reported"])?;
        for (label, b) in &self.nps {
            let row = ["nps", label.as_str(), "nps", "", &format!("{:.4}", b.nps), "", "", "", ""];
            w.write_record(row)?;
        }
        for c in &self.comparisons {
            for r in &c.rows {
                let rep = r.reported.as_ref();
                w.write_record([
                    c.title.as_str(),
                    &r.variable,
                    "F",
                    "",
                    &format!("{:.6}", r.anova.f),
                    &r.anova.df_between.to_string(),
                    &r.anova.df_within.to_string(),
                    &format!("{:.6}", r.anova.p),
                    &rep.and_then(|r| r.f).map(|v| v.to_string()).unwrap_or_default(),
                ])?;
                for (i, (pair, t)) in r.ttests.iter().enumerate() {
                    w.write_record([
                        c.title.as_str(),
                        &r.variable,
                        "t",
                        pair,
                        &format!("{:.6}", t.t),
                        &t.df.to_string(),
                        "",
                        &format!("{:.6}", t.p),
                        &rep.and_then(|r| r.t.get(i)).map(|v| v.to_string()).unwrap_or_default(),
                    ])?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| StatsError::Csv(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
