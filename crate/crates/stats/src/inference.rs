use serde::{Deserialize, Serialize};

use crate::reliability::sample_variance;
use crate::special::{f_upper_tail, t_two_sided};
use crate::StatsError;

/// Size, mean and sample standard deviation of one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub n: u64,
    pub mean: f64,
    pub sd: f64,
}

impl GroupSummary {
    pub fn new(label: impl Into<String>, n: u64, mean: f64, sd: f64) -> Result<Self, StatsError> {
        let g = Self { label: label.into(), n, mean, sd };
        g.validate()?;
        Ok(g)
    }

    pub fn from_samples(label: impl Into<String>, xs: &[f64]) -> Result<Self, StatsError> {
        if xs.len() < 2 {
            return Err(StatsError::InvalidGroup("a group needs at least 2 observations".into()));
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let sd = sample_variance(xs.iter().copied()).sqrt();
        Self::new(label, xs.len() as u64, mean, sd)
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        if self.n < 2 {
            return Err(StatsError::InvalidGroup(format!("{}: n must be at least 2", self.label)));
        }
        if !self.mean.is_finite() || !self.sd.is_finite() || self.sd < 0.0 {
            return Err(StatsError::InvalidGroup(format!("{}: mean and sd must be finite, sd >= 0", self.label)));
        }
        Ok(())
    }

    fn ss_within(&self) -> f64 {
        (self.n as f64 - 1.0) * self.sd * self.sd
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f: f64,
    pub df_between: u64,
    pub df_within: u64,
    pub p: f64,
    /// Set when within-group variance is zero and F is not a ratio of finite
    /// positive quantities.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: u64,
    pub p: f64,
    pub degenerate: bool,
}

/// One-way ANOVA from group summaries.
pub fn anova_oneway_summary(groups: &[GroupSummary]) -> Result<AnovaResult, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::InvalidGroup("ANOVA needs at least 2 groups".into()));
    }
    for g in groups {
        g.validate()?;
    }
    let n_total: u64 = groups.iter().map(|g| g.n).sum();
    let k = groups.len() as u64;
    let grand = groups.iter().map(|g| g.n as f64 * g.mean).sum::<f64>() / n_total as f64;
    let ss_between: f64 = groups.iter().map(|g| g.n as f64 * (g.mean - grand).powi(2)).sum();
    let ss_within: f64 = groups.iter().map(GroupSummary::ss_within).sum();
    let (df_between, df_within) = (k - 1, n_total - k);

    if ss_within == 0.0 {
        let (f, p) = if ss_between == 0.0 { (0.0, 1.0) } else { (f64::INFINITY, 0.0) };
        return Ok(AnovaResult { f, df_between, df_within, p, degenerate: true });
    }
    let f = (ss_between / df_between as f64) / (ss_within / df_within as f64);
    let p = f_upper_tail(f, df_between as f64, df_within as f64);
    Ok(AnovaResult { f, df_between, df_within, p, degenerate: false })
}

/// Two-sided Student t-test with pooled variance.
pub fn ttest_pooled_summary(a: &GroupSummary, b: &GroupSummary) -> Result<TTestResult, StatsError> {
    a.validate()?;
    b.validate()?;
    let df = a.n + b.n - 2;
    let pooled = (a.ss_within() + b.ss_within()) / df as f64;
    let diff = a.mean - b.mean;
    if pooled == 0.0 {
        let (t, p) = match diff.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => (f64::INFINITY, 0.0),
            Some(std::cmp::Ordering::Less) => (f64::NEG_INFINITY, 0.0),
            _ => (0.0, 1.0),
        };
        return Ok(TTestResult { t, df, p, degenerate: true });
    }
    let t = diff / (pooled * (1.0 / a.n as f64 + 1.0 / b.n as f64)).sqrt();
    Ok(TTestResult { t, df, p: t_two_sided(t, df as f64), degenerate: false })
}
