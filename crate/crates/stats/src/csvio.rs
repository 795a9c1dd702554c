//! CSV inputs for the command-line tools.
//!
//! * scores: a `score` column of integers 0..=10, optional `group` column
//! * item matrix: one column per item, one row per participant
//! * summaries: `label,n,mean,sd`

use std::io::Read;

use crate::{GroupSummary, StatsError};

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r)
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.eq_ignore_ascii_case(name))
}

/// Scores grouped by the `group` column in order of first appearance. Without
/// a `group` column everything lands in one group labelled `all`.
pub fn read_scores<R: Read>(r: R) -> Result<Vec<(String, Vec<i64>)>, StatsError> {
    let mut rdr = reader(r);
    let headers = rdr.headers()?.clone();
    let score_col = column(&headers, "score").ok_or_else(|| StatsError::Schema("missing `score` column".into()))?;
    let group_col = column(&headers, "group");
    let mut groups: Vec<(String, Vec<i64>)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let raw = rec.get(score_col).unwrap_or_default();
        let score: i64 = raw
            .parse()
            .map_err(|_| StatsError::Schema(format!("row {}: score `{raw}` is not an integer", i + 1)))?;
        let label = group_col.and_then(|c| rec.get(c)).unwrap_or("all");
        match groups.iter_mut().find(|(l, _)| l == label) {
            Some((_, v)) => v.push(score),
            None => groups.push((label.to_string(), vec![score])),
        }
    }
    if groups.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    Ok(groups)
}

/// Item names and the participants × items matrix.
pub fn read_matrix<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>), StatsError> {
    let mut rdr = reader(r);
    let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = rec?
            .iter()
            .map(|v| v.parse::<f64>().map_err(|_| StatsError::Schema(format!("row {}: `{v}` is not a number", i + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    Ok((names, rows))
}

pub fn read_summaries<R: Read>(r: R) -> Result<Vec<GroupSummary>, StatsError> {
    let mut rdr = reader(r);
    let headers = rdr.headers()?.clone();
    for col in ["label", "n", "mean", "sd"] {
        if column(&headers, col).is_none() {
            return Err(StatsError::Schema(format!("missing `{col}` column")));
        }
    }
    let mut out = Vec::new();
    for rec in rdr.deserialize::<GroupSummary>() {
        let g = rec?;
        g.validate()?;
        out.push(g);
    }
    if out.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    Ok(out)
}
