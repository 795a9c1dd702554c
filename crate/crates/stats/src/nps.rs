use serde::{Deserialize, Serialize};

use crate::StatsError;

/// Classified 0..=10 ratings. `nps` is in percentage points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NpsBreakdown {
    pub n: u64,
    pub detractors: u64,
    pub passives: u64,
    pub promoters: u64,
    pub nps: f64,
    pub nps_rounded: i64,
}

impl NpsBreakdown {
    fn from_classes(detractors: u64, passives: u64, promoters: u64) -> Result<Self, StatsError> {
        let n = detractors + passives + promoters;
        if n == 0 {
            return Err(StatsError::EmptyInput);
        }
        let nps = 100.0 * (promoters as f64 - detractors as f64) / n as f64;
        Ok(Self { n, detractors, passives, promoters, nps, nps_rounded: nps.round() as i64 })
    }
}

/// Detractors score 0-6, passives 7-8, promoters 9-10.
pub fn nps(scores: &[i64]) -> Result<NpsBreakdown, StatsError> {
    let mut counts = [0u64; 11];
    for &s in scores {
        let idx = usize::try_from(s).ok().filter(|&i| i <= 10).ok_or(StatsError::OutOfRange { value: s as f64 })?;
        counts[idx] += 1;
    }
    nps_from_counts(&counts)
}

/// Same as [`nps`] from a histogram of the eleven score values.
pub fn nps_from_counts(counts: &[u64; 11]) -> Result<NpsBreakdown, StatsError> {
    let detractors = counts[..7].iter().sum();
    let passives = counts[7..9].iter().sum();
    let promoters = counts[9..].iter().sum();
    NpsBreakdown::from_classes(detractors, passives, promoters)
}

/// Expands a histogram into a score list, ascending.
pub fn expand_counts(counts: &[u64; 11]) -> Vec<i64> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(score, &c)| std::iter::repeat_n(score as i64, c as usize))
        .collect()
}
