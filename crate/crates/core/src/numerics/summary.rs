//! Mean / standard deviation summaries.

use super::NumericsError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); `None` for n = 1.
    pub sd: Option<f64>,
    pub n: usize,
}

/// Weighted or unweighted mean and sd. Weights must be nonnegative with a
/// positive total; the weighted sd uses the frequency-style `sum(w) - 1`
/// denominator, which reduces to the usual n - 1 form for unit weights.
pub fn summary(values: &[f64], weights: Option<&[f64]>) -> Result<Summary, NumericsError> {
    if values.is_empty() {
        return Err(NumericsError::EmptyInput);
    }
    let n = values.len();
    let (mean, denom) = match weights {
        None => (values.iter().sum::<f64>() / n as f64, n as f64 - 1.0),
        Some(w) => {
            if w.len() != n {
                return Err(NumericsError::InvalidDist(
                    "weights length does not match values".into(),
                ));
            }
            if w.iter().any(|&x| x < 0.0 || !x.is_finite()) {
                return Err(NumericsError::Domain(
                    "weights must be nonnegative and finite".into(),
                ));
            }
            let total: f64 = w.iter().sum();
            if total <= 0.0 {
                return Err(NumericsError::Domain("weights sum to zero".into()));
            }
            let mean = values.iter().zip(w).map(|(v, wi)| v * wi).sum::<f64>() / total;
            (mean, total - 1.0)
        }
    };
    let sd = if denom > 0.0 {
        let ss = match weights {
            None => values.iter().map(|v| (v - mean).powi(2)).sum::<f64>(),
            Some(w) => values
                .iter()
                .zip(w)
                .map(|(v, wi)| wi * (v - mean).powi(2))
                .sum::<f64>(),
        };
        Some((ss / denom).sqrt())
    } else {
        None
    };
    Ok(Summary { mean, sd, n })
}
