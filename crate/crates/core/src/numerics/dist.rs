//! Distribution specifications and sampling.

use nalgebra::{DMatrix, DVector};

use super::{NumericsError, RngStream};

/// A sampling law. Chi-square with one degree of freedom is generated as the
/// square of a standard normal, which is exact by definition.
#[derive(Debug, Clone, PartialEq)]
pub enum DistSpec {
    StandardNormal,
    Normal { mu: f64, sigma: f64 },
    Uniform { a: f64, b: f64 },
    ChiSquare1,
    Bernoulli { p: f64 },
    Mvn { mean: Vec<f64>, cov: Vec<Vec<f64>> },
}

impl DistSpec {
    pub fn validate(&self) -> Result<(), NumericsError> {
        match self {
            DistSpec::Normal { sigma, .. } if !(*sigma > 0.0) => Err(NumericsError::InvalidDist(
                format!("normal sigma must be positive, got {sigma}"),
            )),
            DistSpec::Uniform { a, b } if !(a < b) => Err(NumericsError::InvalidDist(format!(
                "uniform requires a < b, got [{a}, {b})"
            ))),
            DistSpec::Bernoulli { p } if !(0.0..=1.0).contains(p) => Err(
                NumericsError::InvalidDist(format!("bernoulli p must be in [0, 1], got {p}")),
            ),
            DistSpec::Mvn { mean, cov } => {
                // Symmetry and definiteness are checked at factorization time.
                if cov.len() != mean.len() || cov.iter().any(|row| row.len() != mean.len()) {
                    return Err(NumericsError::InvalidDist(
                        "mvn covariance shape does not match mean length".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Draws from [`sample`]: a flat vector for scalar laws, one row per draw
/// for the multivariate normal.
#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    Values(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

impl Samples {
    pub fn into_values(self) -> Vec<f64> {
        match self {
            Samples::Values(v) => v,
            Samples::Rows(_) => panic!("expected scalar samples, got mvn rows"),
        }
    }

    pub fn into_rows(self) -> Vec<Vec<f64>> {
        match self {
            Samples::Rows(r) => r,
            Samples::Values(_) => panic!("expected mvn rows, got scalar samples"),
        }
    }
}

/// Checks symmetry and factors a covariance matrix as `L L^T` with `L` lower
/// triangular. Falls back to a symmetric eigendecomposition when the Cholesky
/// fails, clamping eigenvalues in `[-tol, 0]` to zero; a genuinely negative
/// eigenvalue is an error.
pub fn validate_covariance(cov: &[Vec<f64>]) -> Result<DMatrix<f64>, NumericsError> {
    let d = cov.len();
    let mut max_abs = 0.0f64;
    for (i, row) in cov.iter().enumerate() {
        if row.len() != d {
            return Err(NumericsError::InvalidDist(
                "covariance matrix is not square".into(),
            ));
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(NumericsError::InvalidDist(
                    "covariance contains non-finite entries".into(),
                ));
            }
            max_abs = max_abs.max(v.abs());
            if (v - cov[j][i]).abs() > 1e-12 * max_abs.max(1.0) {
                return Err(NumericsError::InvalidDist(format!(
                    "covariance is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let m = DMatrix::from_fn(d, d, |i, j| cov[i][j]);
    if let Some(chol) = m.clone().cholesky() {
        return Ok(chol.unpack());
    }
    let tol = 1e-10 * max_abs.max(1.0);
    let eig = m.symmetric_eigen();
    let mut min_eig = f64::INFINITY;
    for &l in eig.eigenvalues.iter() {
        min_eig = min_eig.min(l);
    }
    if min_eig < -tol {
        return Err(NumericsError::Factorization(min_eig));
    }
    let sqrt_l = DVector::from_iterator(d, eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()));
    let mut factor = eig.eigenvectors;
    for j in 0..d {
        factor.column_mut(j).scale_mut(sqrt_l[j]);
    }
    Ok(factor)
}

/// Draws `n` samples from `dist`. The multivariate normal is generated as
/// `mean + L z` with `z` standard normal and `L` from [`validate_covariance`].
pub fn sample(stream: &mut RngStream, dist: &DistSpec, n: usize) -> Result<Samples, NumericsError> {
    dist.validate()?;
    match dist {
        DistSpec::StandardNormal => {
            let mut out = vec![0.0; n];
            stream.fill_standard_normal(&mut out);
            Ok(Samples::Values(out))
        }
        DistSpec::Normal { mu, sigma } => {
            let mut out = vec![0.0; n];
            stream.fill_standard_normal(&mut out);
            for x in &mut out {
                *x = mu + sigma * *x;
            }
            Ok(Samples::Values(out))
        }
        DistSpec::Uniform { a, b } => {
            Ok(Samples::Values((0..n).map(|_| stream.uniform(*a, *b)).collect()))
        }
        DistSpec::ChiSquare1 => {
            let mut out = vec![0.0; n];
            stream.fill_standard_normal(&mut out);
            for x in &mut out {
                *x *= *x;
            }
            Ok(Samples::Values(out))
        }
        DistSpec::Bernoulli { p } => Ok(Samples::Values(
            (0..n)
                .map(|_| if stream.bernoulli(*p) { 1.0 } else { 0.0 })
                .collect(),
        )),
        DistSpec::Mvn { mean, cov } => {
            let factor = validate_covariance(cov)?;
            let d = mean.len();
            let mut rows = Vec::with_capacity(n);
            let mut z = vec![0.0; d];
            for _ in 0..n {
                stream.fill_standard_normal(&mut z);
                let mut row = mean.clone();
                for i in 0..d {
                    let mut acc = 0.0;
                    for j in 0..d {
                        acc += factor[(i, j)] * z[j];
                    }
                    row[i] += acc;
                }
                rows.push(row);
            }
            Ok(Samples::Rows(rows))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::derive_substream;

    #[test]
    fn chi_square_1_has_unit_mean() {
        let mut s = derive_substream(10, 0);
        let draws = sample(&mut s, &DistSpec::ChiSquare1, 100_000)
            .unwrap()
            .into_values();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn bernoulli_half_is_symmetric() {
        let mut s = derive_substream(11, 0);
        let draws = sample(&mut s, &DistSpec::Bernoulli { p: 0.5 }, 100_000)
            .unwrap()
            .into_values();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn mvn_recovers_covariance() {
        // The three-variable covariance used by the cohort generator.
        let cov = vec![
            vec![2.0, 1.0, -1.0],
            vec![1.0, 1.0, -0.5],
            vec![-1.0, -0.5, 1.0],
        ];
        let dist = DistSpec::Mvn {
            mean: vec![0.0; 3],
            cov: cov.clone(),
        };
        let mut s = derive_substream(12, 0);
        let rows = sample(&mut s, &dist, 100_000).unwrap().into_rows();
        let n = rows.len() as f64;
        let mut mean = [0.0; 3];
        for r in &rows {
            for i in 0..3 {
                mean[i] += r[i];
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        for i in 0..3 {
            for j in 0..3 {
                let c = rows
                    .iter()
                    .map(|r| (r[i] - mean[i]) * (r[j] - mean[j]))
                    .sum::<f64>()
                    / n;
                assert!(
                    (c - cov[i][j]).abs() < 0.05,
                    "cov[{i}][{j}] = {c}, want {}",
                    cov[i][j]
                );
            }
        }
    }

    #[test]
    fn semidefinite_covariance_uses_eigen_fallback() {
        // Rank-one matrix: valid but singular.
        let dist = DistSpec::Mvn {
            mean: vec![0.0, 0.0],
            cov: vec![vec![1.0, 1.0], vec![1.0, 1.0]],
        };
        let mut s = derive_substream(13, 0);
        let rows = sample(&mut s, &dist, 1000).unwrap().into_rows();
        for r in rows {
            assert!((r[0] - r[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn indefinite_covariance_errors() {
        let dist = DistSpec::Mvn {
            mean: vec![0.0, 0.0],
            cov: vec![vec![1.0, 2.0], vec![2.0, 1.0]],
        };
        let mut s = derive_substream(14, 0);
        match sample(&mut s, &dist, 10) {
            Err(NumericsError::Factorization(_)) => {}
            other => panic!("expected factorization error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let mut s = derive_substream(15, 0);
        assert!(sample(&mut s, &DistSpec::Normal { mu: 0.0, sigma: 0.0 }, 1).is_err());
        assert!(sample(&mut s, &DistSpec::Uniform { a: 1.0, b: 1.0 }, 1).is_err());
        assert!(sample(&mut s, &DistSpec::Bernoulli { p: 1.5 }, 1).is_err());
    }
}
