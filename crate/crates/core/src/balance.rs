//! Balance features, covariate profiles, and balance diagnostics.
//!
//! A balance feature is a product of integer powers of raw columns (an empty
//! term list is the constant 1), which covers mean balance of raw covariates,
//! squares, and pairwise interactions while keeping profiles auditable as
//! plain JSON. A profile pairs feature targets with imbalance tolerances,
//! usually `multiplier * scale_sd` per feature.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::summary;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BalanceError {
    #[error("column {0:?} not found")]
    Column(String),
    #[error("non-finite value for feature {feature:?} at row {row}")]
    Data { feature: String, row: usize },
    #[error("feature {0:?} has zero variance on the scale population")]
    ZeroVariance(String),
    #[error("weights are all zero")]
    DegenerateWeights,
    #[error("scale sd must be positive, got {0}")]
    ZeroScale(f64),
    #[error("target rows are empty")]
    EmptyTarget,
}

/// Read-only columnar view over numeric data; implemented by the CSV-backed
/// dataset and by the simulation cohort.
pub trait Columnar {
    fn n_rows(&self) -> usize;
    fn column(&self, name: &str) -> Option<&[f64]>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTerm {
    pub col: String,
    pub pow: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    /// Product over terms of `col^pow`; empty means the constant 1.
    pub terms: Vec<FeatureTerm>,
}

impl FeatureSpec {
    /// Degree-1 feature on a single column.
    pub fn raw(col: &str) -> Self {
        FeatureSpec {
            name: col.to_string(),
            terms: vec![FeatureTerm { col: col.to_string(), pow: 1 }],
        }
    }

    pub fn power(col: &str, pow: u32) -> Self {
        let name = if pow == 1 {
            col.to_string()
        } else {
            format!("{col}^{pow}")
        };
        FeatureSpec {
            name,
            terms: vec![FeatureTerm { col: col.to_string(), pow }],
        }
    }

    pub fn interaction(a: &str, b: &str) -> Self {
        FeatureSpec {
            name: format!("{a}*{b}"),
            terms: vec![
                FeatureTerm { col: a.to_string(), pow: 1 },
                FeatureTerm { col: b.to_string(), pow: 1 },
            ],
        }
    }
}

/// Target values and tolerances for a list of balance features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub features: Vec<FeatureSpec>,
    pub targets: Vec<f64>,
    pub tolerances: Vec<f64>,
    /// Standard deviations used to set the tolerances, when tolerances were
    /// derived as `multiplier * sd`. Also the TASMD denominators.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale_sds: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiplier: Option<f64>,
}

impl Profile {
    /// Structural validation; returns a JSON-pointer-style location and a
    /// message on failure.
    pub fn validate(&self) -> Result<(), (String, String)> {
        let k = self.features.len();
        if self.targets.len() != k {
            return Err((
                "/targets".into(),
                format!("expected {k} targets, found {}", self.targets.len()),
            ));
        }
        if self.tolerances.len() != k {
            return Err((
                "/tolerances".into(),
                format!("expected {k} tolerances, found {}", self.tolerances.len()),
            ));
        }
        if let Some(sds) = &self.scale_sds {
            if sds.len() != k {
                return Err((
                    "/scale_sds".into(),
                    format!("expected {k} scale sds, found {}", sds.len()),
                ));
            }
        }
        for (i, f) in self.features.iter().enumerate() {
            for (j, t) in f.terms.iter().enumerate() {
                if t.pow < 1 {
                    return Err((
                        format!("/features/{i}/terms/{j}/pow"),
                        "exponent must be at least 1".into(),
                    ));
                }
            }
        }
        for (i, &t) in self.tolerances.iter().enumerate() {
            if !(t >= 0.0) {
                return Err((
                    format!("/tolerances/{i}"),
                    format!("tolerance must be nonnegative, got {t}"),
                ));
            }
        }
        for (i, &t) in self.targets.iter().enumerate() {
            if !t.is_finite() {
                return Err((format!("/targets/{i}"), "target must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Evaluates each feature on each row; returns one column per feature.
pub fn eval_features<D: Columnar + ?Sized>(
    data: &D,
    features: &[FeatureSpec],
) -> Result<Vec<Vec<f64>>, BalanceError> {
    let n = data.n_rows();
    let mut out = Vec::with_capacity(features.len());
    for f in features {
        let mut col = vec![1.0; n];
        for term in &f.terms {
            let values = data
                .column(&term.col)
                .ok_or_else(|| BalanceError::Column(term.col.clone()))?;
            for (i, v) in values.iter().enumerate() {
                col[i] *= v.powi(term.pow as i32);
            }
        }
        if let Some(row) = col.iter().position(|v| !v.is_finite()) {
            return Err(BalanceError::Data { feature: f.name.clone(), row });
        }
        out.push(col);
    }
    Ok(out)
}

/// Builds a profile whose targets are the feature means over the given rows
/// and whose tolerances are `multiplier` times the feature sds over the same
/// rows. Use [`profile_with_scale_sds`] when the tolerance scale comes from a
/// different population (for instance a pooled sd across exposure groups).
pub fn profile_from_target<D: Columnar + ?Sized>(
    target: &D,
    features: &[FeatureSpec],
    multiplier: f64,
) -> Result<Profile, BalanceError> {
    if target.n_rows() == 0 {
        return Err(BalanceError::EmptyTarget);
    }
    let cols = eval_features(target, features)?;
    let sds: Vec<f64> = cols
        .iter()
        .map(|c| summary(c, None).map(|s| s.sd.unwrap_or(0.0)).unwrap_or(0.0))
        .collect();
    profile_from_cols(features, &cols, sds, multiplier)
}

/// As [`profile_from_target`] with externally supplied tolerance scale sds.
pub fn profile_with_scale_sds<D: Columnar + ?Sized>(
    target: &D,
    features: &[FeatureSpec],
    multiplier: f64,
    scale_sds: Vec<f64>,
) -> Result<Profile, BalanceError> {
    if target.n_rows() == 0 {
        return Err(BalanceError::EmptyTarget);
    }
    assert_eq!(scale_sds.len(), features.len());
    let cols = eval_features(target, features)?;
    profile_from_cols(features, &cols, scale_sds, multiplier)
}

fn profile_from_cols(
    features: &[FeatureSpec],
    cols: &[Vec<f64>],
    sds: Vec<f64>,
    multiplier: f64,
) -> Result<Profile, BalanceError> {
    assert!(multiplier >= 0.0);
    let mut targets = Vec::with_capacity(features.len());
    let mut tolerances = Vec::with_capacity(features.len());
    for ((f, col), sd) in features.iter().zip(cols).zip(&sds) {
        if multiplier > 0.0 && *sd == 0.0 {
            return Err(BalanceError::ZeroVariance(f.name.clone()));
        }
        targets.push(col.iter().sum::<f64>() / col.len() as f64);
        tolerances.push(multiplier * sd);
    }
    Ok(Profile {
        features: features.to_vec(),
        targets,
        tolerances,
        scale_sds: Some(sds),
        multiplier: Some(multiplier),
    })
}

/// sqrt((s0^2 + s1^2 + s2^2) / 3), the tolerance scale used when balancing
/// three exposure groups both toward a target and toward each other.
pub fn three_way_pooled_sd(s0: f64, s1: f64, s2: f64) -> f64 {
    pooled_sd(&[s0, s1, s2])
}

/// Root mean square of per-group standard deviations.
pub fn pooled_sd(sds: &[f64]) -> f64 {
    debug_assert!(sds.iter().all(|s| *s >= 0.0));
    (sds.iter().map(|s| s * s).sum::<f64>() / sds.len() as f64).sqrt()
}

/// Target absolute standardized mean difference.
pub fn tasmd(sample_mean: f64, target_mean: f64, scale_sd: f64) -> Result<f64, BalanceError> {
    if !(scale_sd > 0.0) {
        return Err(BalanceError::ZeroScale(scale_sd));
    }
    Ok((sample_mean - target_mean).abs() / scale_sd)
}

/// Absolute standardized mean difference between two adjusted groups, on a
/// shared scale. With both groups within `m` TASMDs of one target this is at
/// most `2 m` by the triangle inequality.
pub fn asmd(mean_a: f64, mean_b: f64, scale_sd: f64) -> Result<f64, BalanceError> {
    if !(scale_sd > 0.0) {
        return Err(BalanceError::ZeroScale(scale_sd));
    }
    Ok((mean_a - mean_b).abs() / scale_sd)
}

/// Kish effective sample size, `(sum w)^2 / sum w^2`.
pub fn kish_ess(weights: &[f64]) -> Result<f64, BalanceError> {
    let total: f64 = weights.iter().sum();
    let total_sq: f64 = weights.iter().map(|w| w * w).sum();
    if total <= 0.0 || total_sq == 0.0 {
        return Err(BalanceError::DegenerateWeights);
    }
    Ok(total * total / total_sq)
}
