//! Token cost accounting.
//!
//! Amounts are integer micro-dollars. Each line item (input or output tokens
//! of one call) is priced exactly in nano-dollars and then rounded to a whole
//! ten-thousandth of a dollar, ties toward zero; stage and total costs are
//! sums of rounded line items. With the default model this reproduces the
//! reference per-article estimate: detection $0.0637, $0.0328 per technique,
//! $0.1621 for an article with three techniques.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::prompt::estimate_tokens;
use crate::taxonomy::TechniqueId;

/// Whole micro-dollars.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Micros(pub u64);

impl Micros {
    pub fn from_dollars(d: f64) -> Self {
        Self((d * 1e6).round().max(0.0) as u64)
    }

    pub fn dollars(self) -> f64 {
        self.0 as f64 / 1e6
    }
}

impl std::ops::Add for Micros {
    type Output = Micros;
    fn add(self, rhs: Self) -> Self {
        Micros(self.0 + rhs.0)
    }
}

impl std::iter::Sum for Micros {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Micros(0), |a, b| a + b)
    }
}

/// `$0.0637`
impl fmt::Display for Micros {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ten_thousandths = (self.0 + 50) / 100;
        write!(f, "${}.{:04}", ten_thousandths / 10_000, ten_thousandths % 10_000)
    }
}

impl Serialize for Micros {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.dollars())
    }
}

impl<'de> Deserialize<'de> for Micros {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if !v.is_finite() || v < 0.0 {
            return Err(serde::de::Error::custom("amount must be a non-negative number"));
        }
        Ok(Micros::from_dollars(v))
    }
}

/// Dollar rates per 1000 tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pricing {
    pub input_rate: Micros,
    pub output_rate: Micros,
}

impl Default for Pricing {
    /// $0.03 in / $0.06 out per 1000 tokens (8k-context GPT-4 list price).
    fn default() -> Self {
        Self { input_rate: Micros(30_000), output_rate: Micros(60_000) }
    }
}

impl Pricing {
    pub fn line_cost(rate: Micros, tokens: u64) -> Micros {
        const STEP: u64 = 100_000; // nano-dollars per $0.0001
        let nanos = tokens * rate.0;
        let (q, r) = (nanos / STEP, nanos % STEP);
        let q = if r > STEP / 2 { q + 1 } else { q };
        Micros(q * 100)
    }

    pub fn stage(&self, input_tokens: u64, output_tokens: u64) -> StageCost {
        let input_cost = Self::line_cost(self.input_rate, input_tokens);
        let output_cost = Self::line_cost(self.output_rate, output_tokens);
        StageCost { input_tokens, output_tokens, input_cost, output_cost, cost: input_cost + output_cost }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCost {
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub input_cost: Micros,
    pub output_cost: Micros,
    pub cost: Micros,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TechniqueCost {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub technique: Option<TechniqueId>,
    #[serde(flatten)]
    pub cost: StageCost,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub pricing: Pricing,
    pub detection_input_tokens: u64,
    pub detection_output_tokens: u64,
    pub detection_input_cost: Micros,
    pub detection_output_cost: Micros,
    pub detection_cost: Micros,
    pub per_technique: Vec<TechniqueCost>,
    pub per_technique_cost: Micros,
    pub total_cost: Micros,
    pub template_version: String,
}

impl CostReport {
    pub fn new(
        pricing: Pricing,
        detection: StageCost,
        per_technique: Vec<TechniqueCost>,
        template_version: impl Into<String>,
    ) -> Self {
        let per_technique_cost: Micros = per_technique.iter().map(|t| t.cost.cost).sum();
        Self {
            pricing,
            detection_input_tokens: detection.input_tokens,
            detection_output_tokens: detection.output_tokens,
            detection_input_cost: detection.input_cost,
            detection_output_cost: detection.output_cost,
            detection_cost: detection.cost,
            per_technique,
            per_technique_cost,
            total_cost: detection.cost + per_technique_cost,
            template_version: template_version.into(),
        }
    }
}

/// Assumptions behind an up-front cost estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModel {
    pub pricing: Pricing,
    pub detection_template_tokens: u64,
    pub localization_template_tokens: u64,
    pub detection_output_tokens: u64,
    pub per_technique_output_tokens: u64,
}

impl Default for CostModel {
    /// 758/225 template tokens, 350 detection output tokens, 100 per technique.
    fn default() -> Self {
        Self {
            pricing: Pricing::default(),
            detection_template_tokens: 758,
            localization_template_tokens: 225,
            detection_output_tokens: 350,
            per_technique_output_tokens: 100,
        }
    }
}

impl CostModel {
    pub fn detection(&self, article_words: u64) -> StageCost {
        self.pricing.stage(
            self.detection_template_tokens + estimate_tokens(article_words),
            self.detection_output_tokens,
        )
    }

    pub fn per_technique(&self, article_words: u64) -> StageCost {
        self.pricing.stage(
            self.localization_template_tokens + estimate_tokens(article_words),
            self.per_technique_output_tokens,
        )
    }
}

/// Estimated cost of analyzing an article of `article_words` words in which
/// `n_techniques` techniques are found.
pub fn estimate_cost(
    article_words: u64,
    n_techniques: usize,
    model: &CostModel,
    template_version: &str,
) -> CostReport {
    let unit = model.per_technique(article_words);
    let per_technique = vec![TechniqueCost { technique: None, cost: unit }; n_techniques];
    CostReport::new(model.pricing, model.detection(article_words), per_technique, template_version)
}
