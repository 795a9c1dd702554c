use crate::StatsError;

pub const THINKING_MODE_ITEMS: usize = 6;

/// Mean of the six 1..=7 thinking-mode ratings.
pub fn thinking_mode_composite(items: &[f64]) -> Result<f64, StatsError> {
    if items.len() != THINKING_MODE_ITEMS {
        return Err(StatsError::WrongArity { expected: THINKING_MODE_ITEMS, got: items.len() });
    }
    if let Some(&v) = items.iter().find(|v| !(1.0..=7.0).contains(*v)) {
        return Err(StatsError::OutOfRange { value: v });
    }
    Ok(items.iter().sum::<f64>() / THINKING_MODE_ITEMS as f64)
}

pub(crate) fn sample_variance(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = xs.clone().fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    let mean = sum / n as f64;
    xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)
}

/// Cronbach's alpha for a participants × items matrix (rows are participants).
pub fn cronbach_alpha(rows: &[Vec<f64>]) -> Result<f64, StatsError> {
    let k = rows.first().map_or(0, Vec::len);
    if rows.len() < 2 || k < 2 {
        return Err(StatsError::DegenerateData("need at least 2 participants and 2 items".into()));
    }
    if rows.iter().any(|r| r.len() != k) {
        return Err(StatsError::DegenerateData("rows have different numbers of items".into()));
    }
    let item_var: f64 = (0..k).map(|j| sample_variance(rows.iter().map(move |r| r[j]))).sum();
    let total_var = sample_variance(rows.iter().map(|r| r.iter().sum::<f64>()));
    if total_var == 0.0 || !total_var.is_finite() {
        return Err(StatsError::DegenerateData("total score variance is zero".into()));
    }
    let k = k as f64;
    Ok(k / (k - 1.0) * (1.0 - item_var / total_var))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composite() {
        assert_eq!(thinking_mode_composite(&[4.0; 6]).unwrap(), 4.0);
        assert_eq!(thinking_mode_composite(&[1.0, 7.0, 1.0, 7.0, 1.0, 7.0]).unwrap(), 4.0);
        let a = thinking_mode_composite(&[2.0, 3.0, 5.0, 7.0, 1.0, 6.0]).unwrap();
        let b = thinking_mode_composite(&[7.0, 6.0, 5.0, 3.0, 2.0, 1.0]).unwrap();
        assert_eq!(a, b);
        assert_eq!(thinking_mode_composite(&[4.0; 5]), Err(StatsError::WrongArity { expected: 6, got: 5 }));
        assert!(matches!(thinking_mode_composite(&[4.0, 4.0, 4.0, 4.0, 4.0, 8.0]), Err(StatsError::OutOfRange { .. })));
    }

    #[test]
    fn alpha_perfect_consistency() {
        let rows: Vec<Vec<f64>> = (1..=7).map(|v| vec![v as f64; 4]).collect();
        assert!((cronbach_alpha(&rows).unwrap() - 1.0).abs() < 1e-12);
        let shifted: Vec<Vec<f64>> = (1..=7).map(|v| vec![v as f64, v as f64 + 2.5]).collect();
        assert!((cronbach_alpha(&shifted).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_hand_computed() {
        // item variances 1, 1/3, 1/3 ; totals 3, 6, 6 -> variance 3
        let rows = vec![vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0], vec![3.0, 1.0, 2.0]];
        let expected = 1.5 * (1.0 - (1.0 + 1.0 / 3.0 + 1.0 / 3.0) / 3.0);
        assert!((cronbach_alpha(&rows).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn alpha_degenerate() {
        assert!(cronbach_alpha(&[vec![1.0, 2.0]]).is_err());
        assert!(cronbach_alpha(&[vec![1.0], vec![2.0]]).is_err());
        assert!(cronbach_alpha(&[vec![3.0, 3.0], vec![3.0, 3.0]]).is_err());
        assert!(cronbach_alpha(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }
}
