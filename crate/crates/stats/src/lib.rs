//! Survey statistics: net promoter score, thinking-mode composites,
//! Cronbach's alpha, one-way ANOVA and pooled t-tests from group summaries.

pub mod csvio;
mod inference;
mod nps;
mod reliability;
pub mod report;
pub mod special;

pub use inference::{anova_oneway_summary, ttest_pooled_summary, AnovaResult, GroupSummary, TTestResult};
pub use nps::{expand_counts, nps, nps_from_counts, NpsBreakdown};
pub use reliability::{cronbach_alpha, thinking_mode_composite, THINKING_MODE_ITEMS};
pub use report::{build_report, Report, ReportInput};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("no data")]
    EmptyInput,
    #[error("value {value} is out of range")]
    OutOfRange { value: f64 },
    #[error("expected {expected} values, got {got}")]
    WrongArity { expected: usize, got: usize },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for StatsError {
    fn from(e: csv::Error) -> Self {
        StatsError::Csv(e.to_string())
    }
}
