//! Server configuration: TOML file, then environment overrides.
//!
//! Credentials are never read from the file. The live provider takes its key
//! from the environment variable named by `provider_settings.api_key_env`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context};
use propscan_core::pipeline::{PipelineConfig, DEFAULT_FANOUT, DEFAULT_MAX_ARTICLE_WORDS};
use propscan_core::locator::{Locator, DEFAULT_THRESHOLD};
use propscan_core::provider::ProviderSettings;
use propscan_core::{Pricing, TechniqueId, TechniqueSet};
use serde::{Deserialize, Serialize};

/// Default highlight colors, one per technique in taxonomy order. Light
/// tints so dark body text stays readable on top of them.
pub const DEFAULT_PALETTE: [(&str, &str); 14] = [
    ("appeal_to_authority", "#ffd8a8"),
    ("appeal_to_fear_prejudice", "#ffc9c9"),
    ("bandwagon_reductio_ad_hitlerum", "#d0bfff"),
    ("black_and_white_fallacy", "#a5d8ff"),
    ("causal_oversimplification", "#b2f2bb"),
    ("doubt", "#ffec99"),
    ("exaggeration_minimisation", "#fcc2d7"),
    ("flag_waving", "#99e9f2"),
    ("loaded_language", "#ffa8a8"),
    ("name_calling_labeling", "#eebefa"),
    ("repetition", "#c0eb75"),
    ("slogans", "#96f2d7"),
    ("thought_terminating_cliches", "#bac8ff"),
    ("whataboutism_straw_men_red_herring", "#e6d5b8"),
];

/// Used for a technique that has no entry in a configured color map.
pub const FALLBACK_COLOR: &str = "#fff3bf";

pub fn default_colors() -> BTreeMap<TechniqueId, String> {
    DEFAULT_PALETTE.iter().map(|(id, c)| (TechniqueId::from(*id), c.to_string())).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: String,
    /// Registered provider name: `live`, `mock` or `replay`.
    pub provider: String,
    pub provider_settings: ProviderSettings,
    pub pricing: Pricing,
    /// Whether the extension analyzes pages without being asked.
    pub default_on: bool,
    pub colors: BTreeMap<TechniqueId, String>,
    pub cache_ttl_secs: u64,
    pub cache_dir: Option<PathBuf>,
    pub fuzzy_threshold: f64,
    pub max_article_words: usize,
    pub fanout: usize,
    pub request_timeout_secs: u64,
    /// Allowed CORS origins. A trailing `*` matches any suffix.
    pub cors_origins: Vec<String>,
    pub taxonomy_path: Option<PathBuf>,
    pub template_dir: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8787".into(),
            provider: "live".into(),
            provider_settings: ProviderSettings::default(),
            pricing: Pricing::default(),
            default_on: true,
            colors: default_colors(),
            cache_ttl_secs: 24 * 60 * 60,
            cache_dir: None,
            fuzzy_threshold: DEFAULT_THRESHOLD,
            max_article_words: DEFAULT_MAX_ARTICLE_WORDS,
            fanout: DEFAULT_FANOUT,
            request_timeout_secs: 60,
            cors_origins: vec!["chrome-extension://*".into(), "moz-extension://*".into()],
            taxonomy_path: None,
            template_dir: None,
        }
    }
}

impl ServerConfig {
    pub fn from_toml(raw: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(raw).context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let raw = std::fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?;
                Self::from_toml(&raw)?
            }
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    /// Applies `PROPSCAN_*` overrides read through `var`.
    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> anyhow::Result<()> {
        if let Some(v) = var("PROPSCAN_BIND") {
            self.bind = v;
        }
        if let Some(v) = var("PROPSCAN_PROVIDER") {
            self.provider = v;
        }
        if let Some(v) = var("PROPSCAN_MODEL") {
            self.provider_settings.model = v;
        }
        if let Some(v) = var("PROPSCAN_ENDPOINT") {
            self.provider_settings.endpoint = v;
        }
        if let Some(v) = var("PROPSCAN_FIXTURES") {
            self.provider_settings.fixtures_dir = Some(v.into());
        }
        if let Some(v) = var("PROPSCAN_MOCK_SCRIPT") {
            self.provider_settings.mock_script = Some(v.into());
        }
        if let Some(v) = var("PROPSCAN_CORS_ORIGINS") {
            self.cors_origins = v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
        }
        if let Some(v) = var("PROPSCAN_FUZZY_THRESHOLD") {
            self.fuzzy_threshold = v.parse().context("PROPSCAN_FUZZY_THRESHOLD")?;
        }
        self.validate()
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !(0.0..=1.0).contains(&self.fuzzy_threshold) {
            bail!("fuzzy_threshold must be within [0, 1]");
        }
        if self.fanout == 0 {
            bail!("fanout must be at least 1");
        }
        if self.max_article_words == 0 {
            bail!("max_article_words must be at least 1");
        }
        Ok(())
    }

    /// Problems with the color map relative to `taxonomy`.
    pub fn color_warnings(&self, taxonomy: &TechniqueSet) -> Vec<String> {
        let mut out: Vec<String> = taxonomy
            .iter()
            .filter(|t| !self.colors.contains_key(&t.id))
            .map(|t| format!("no color configured for {}; using {FALLBACK_COLOR}", t.id))
            .collect();
        out.extend(
            self.colors.keys().filter(|id| taxonomy.get(id).is_none()).map(|id| format!("color configured for unknown technique {id}")),
        );
        out
    }

    pub fn color_for(&self, id: &TechniqueId) -> &str {
        self.colors.get(id).map_or(FALLBACK_COLOR, String::as_str)
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            model_name: self.provider_settings.model.clone(),
            max_article_words: self.max_article_words,
            fanout: self.fanout,
            locator: Locator { threshold: self.fuzzy_threshold, ..Locator::default() },
            pricing: self.pricing,
            cache_ttl: Duration::from_secs(self.cache_ttl_secs),
            ..PipelineConfig::default()
        }
    }

    pub fn request_timeout(&self) -> Duration {
        Duration::from_secs(self.request_timeout_secs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_cover_taxonomy() {
        let cfg = ServerConfig::default();
        let tax = TechniqueSet::bundled();
        assert!(cfg.color_warnings(&tax).is_empty());
        let distinct: std::collections::BTreeSet<_> = cfg.colors.values().collect();
        assert_eq!(distinct.len(), 14);
        assert!(cfg.default_on);
    }

    #[test]
    fn partial_color_map_warns_and_falls_back() {
        let cfg = ServerConfig::from_toml("[colors]\ndoubt = \"#123456\"\nmade_up = \"red\"\n").unwrap();
        let w = cfg.color_warnings(&TechniqueSet::bundled());
        assert_eq!(w.len(), 14);
        assert!(w.iter().any(|m| m.contains("made_up")));
        assert_eq!(cfg.color_for(&"doubt".into()), "#123456");
        assert_eq!(cfg.color_for(&"slogans".into()), FALLBACK_COLOR);
    }

    #[test]
    fn toml_and_env_overrides() {
        let cfg = ServerConfig::from_toml(
            "bind = \"0.0.0.0:9000\"\nprovider = \"replay\"\nfuzzy_threshold = 0.7\n[provider_settings]\nfixtures_dir = \"fx\"\n[pricing]\ninput_rate = 0.01\noutput_rate = 0.03\n",
        )
        .unwrap();
        assert_eq!(cfg.bind, "0.0.0.0:9000");
        assert_eq!(cfg.provider_settings.fixtures_dir.as_deref(), Some(Path::new("fx")));
        assert_eq!(cfg.pricing.input_rate.0, 10_000);
        assert_eq!(cfg.pipeline_config().locator.threshold, 0.7);

        let mut cfg = cfg;
        let env: BTreeMap<&str, &str> =
            [("PROPSCAN_PROVIDER", "mock"), ("PROPSCAN_CORS_ORIGINS", "https://a.example, moz-extension://*")].into();
        cfg.apply_env(|k| env.get(k).map(|v| v.to_string())).unwrap();
        assert_eq!(cfg.provider, "mock");
        assert_eq!(cfg.cors_origins, ["https://a.example", "moz-extension://*"]);

        assert!(ServerConfig::from_toml("fuzzy_threshold = 2.0").is_err());
        assert!(ServerConfig::from_toml("api_key = \"sk-nope\"").is_err());
    }
}
