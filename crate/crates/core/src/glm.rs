//! Probit, logistic, and ordinary least squares regression.
//!
//! Binary links are fit by Fisher scoring from a zero start; OLS goes through
//! a Householder QR. No intercept is added implicitly for binary links (the
//! selection models this crate fits are written without one); `fit_ols`
//! prepends an intercept column because every outcome model here wants it.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::numerics::{normal_cdf, normal_pdf};

/// Fitted-probability floor; keeps weights and log terms finite for
/// near-degenerate linear predictors.
const MU_EPS: f64 = 1e-10;
/// Coefficient magnitude at which a binary fit is declared separated.
const SEPARATION_BOUND: f64 = 1e3;
const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GlmError {
    #[error("design matrix is rank deficient")]
    Rank,
    #[error("fit diverged or data are separated (|beta| exceeded {SEPARATION_BOUND})")]
    Separation,
    #[error("response contains a single class")]
    DegenerateResponse,
    #[error("fewer rows than coefficients ({rows} rows, {cols} columns)")]
    Underdetermined { rows: usize, cols: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Probit,
    Logit,
    Identity,
}

#[derive(Debug, Clone)]
pub struct GlmFit {
    /// One coefficient per design column; when `intercept` is set the first
    /// entry belongs to the implicit leading ones column.
    pub coefficients: Vec<f64>,
    pub link: Link,
    pub converged: bool,
    pub iterations: usize,
    /// Binary links only.
    pub log_likelihood: Option<f64>,
    pub intercept: bool,
}

pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Column-major design matrix from covariate slices.
pub fn design_from_columns(columns: &[&[f64]]) -> DMatrix<f64> {
    let rows = columns.first().map_or(0, |c| c.len());
    assert!(columns.iter().all(|c| c.len() == rows));
    DMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i])
}

fn rank_of(design: &DMatrix<f64>) -> usize {
    let qr = design.clone().col_piv_qr();
    let r = qr.r();
    let k = r.nrows().min(r.ncols());
    let max_diag = (0..k).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    let tol = max_diag * 1e-10 * design.nrows().max(design.ncols()) as f64;
    (0..k).take_while(|&i| r[(i, i)].abs() > tol).count()
}

/// Returns (mu, score factor d, information weight w) at linear predictor
/// `eta`, with d = mu'(eta) / (mu (1 - mu)) and w = mu'(eta)^2 / (mu (1 - mu)).
fn mu_and_weights(link: Link, eta: f64) -> (f64, f64, f64) {
    match link {
        Link::Logit => {
            let mu = expit(eta).clamp(MU_EPS, 1.0 - MU_EPS);
            (mu, 1.0, mu * (1.0 - mu))
        }
        Link::Probit => {
            let mu = normal_cdf(eta).clamp(MU_EPS, 1.0 - MU_EPS);
            let phi = normal_pdf(eta);
            let v = mu * (1.0 - mu);
            (mu, phi / v, phi * phi / v)
        }
        Link::Identity => unreachable!("identity link is not a binary model"),
    }
}

/// Maximum-likelihood probit or logistic fit.
///
/// Converges on a relative log-likelihood change below 1e-10 or a step with
/// max-norm below 1e-8; `converged` additionally requires the score max-norm
/// to be below 1e-6 at the reported coefficients.
pub fn fit_binary_glm(
    design: &DMatrix<f64>,
    response: &[f64],
    link: Link,
) -> Result<GlmFit, GlmError> {
    assert!(
        matches!(link, Link::Probit | Link::Logit),
        "binary fit requires a probit or logit link"
    );
    let (n, p) = (design.nrows(), design.ncols());
    if response.len() != n {
        return Err(GlmError::Shape(format!(
            "{n} design rows but {} responses",
            response.len()
        )));
    }
    if n <= p {
        return Err(GlmError::Underdetermined { rows: n, cols: p });
    }
    if response.iter().all(|&y| y == 0.0) || response.iter().all(|&y| y == 1.0) {
        return Err(GlmError::DegenerateResponse);
    }
    if rank_of(design) < p {
        return Err(GlmError::Rank);
    }

    let mut beta = DVector::zeros(p);
    let mut ll_old = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let eta = design * &beta;
        let mut score = DVector::zeros(p);
        let mut info = DMatrix::zeros(p, p);
        let mut ll = 0.0;
        let mut perfectly_classified = true;
        for i in 0..n {
            let (m, d, w) = mu_and_weights(link, eta[i]);
            perfectly_classified &= (response[i] - m).abs() < 1e-8;
            let s = (response[i] - m) * d;
            for a in 0..p {
                let xa = design[(i, a)];
                score[a] += xa * s;
                for b in a..p {
                    info[(a, b)] += xa * design[(i, b)] * w;
                }
            }
            ll += response[i] * m.ln() + (1.0 - response[i]) * (1.0 - m).ln();
        }
        for a in 0..p {
            for b in 0..a {
                info[(a, b)] = info[(b, a)];
            }
        }
        // Every response fitted exactly means the likelihood has no interior
        // maximum: the data are separated.
        if perfectly_classified {
            return Err(GlmError::Separation);
        }
        let step = info
            .cholesky()
            .map(|c| c.solve(&score))
            .ok_or(GlmError::Separation)?;
        beta += &step;
        if beta.amax() > SEPARATION_BOUND {
            return Err(GlmError::Separation);
        }
        let rel_change = (ll - ll_old).abs() / ll.abs().max(1e-12);
        ll_old = ll;
        if rel_change < 1e-10 || step.amax() < 1e-8 {
            converged = true;
            break;
        }
    }

    // Score and likelihood at the reported coefficients.
    let eta = design * &beta;
    let mut score = DVector::<f64>::zeros(p);
    let mut ll = 0.0;
    for i in 0..n {
        let (m, d, _) = mu_and_weights(link, eta[i]);
        let s = (response[i] - m) * d;
        for a in 0..p {
            score[a] += design[(i, a)] * s;
        }
        ll += response[i] * m.ln() + (1.0 - response[i]) * (1.0 - m).ln();
    }
    if score.amax() >= 1e-6 {
        converged = false;
    }

    Ok(GlmFit {
        coefficients: beta.iter().copied().collect(),
        link,
        converged,
        iterations,
        log_likelihood: Some(ll),
        intercept: false,
    })
}

/// Least squares with an intercept column prepended to `design`.
/// Pass a zero-column design for an intercept-only model.
pub fn fit_ols(design: &DMatrix<f64>, response: &[f64]) -> Result<GlmFit, GlmError> {
    let n = design.nrows();
    if response.len() != n {
        return Err(GlmError::Shape(format!(
            "{n} design rows but {} responses",
            response.len()
        )));
    }
    let p = design.ncols() + 1;
    if n < p {
        return Err(GlmError::Underdetermined { rows: n, cols: p });
    }
    let x = design.clone().insert_column(0, 1.0);
    let qr = x.qr();
    let r = qr.r();
    let max_diag = (0..p).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    if max_diag == 0.0 || (0..p).any(|i| r[(i, i)].abs() <= max_diag * 1e-10 * n as f64) {
        return Err(GlmError::Rank);
    }
    let qty = qr.q().transpose() * DVector::from_column_slice(response);
    let beta = r.solve_upper_triangular(&qty).ok_or(GlmError::Rank)?;
    Ok(GlmFit {
        coefficients: beta.iter().copied().collect(),
        link: Link::Identity,
        converged: true,
        iterations: 1,
        log_likelihood: None,
        intercept: true,
    })
}

/// Applies a fit to new rows: `X beta` under the identity link, `Phi(X beta)`
/// under probit, `expit(X beta)` under logit.
pub fn predict(fit: &GlmFit, design: &DMatrix<f64>) -> Result<Vec<f64>, GlmError> {
    let expected = fit.coefficients.len() - usize::from(fit.intercept);
    if design.ncols() != expected {
        return Err(GlmError::Shape(format!(
            "fit has {} feature coefficients but design has {} columns",
            expected,
            design.ncols()
        )));
    }
    let offset = usize::from(fit.intercept);
    let base = if fit.intercept { fit.coefficients[0] } else { 0.0 };
    let out = (0..design.nrows())
        .map(|i| {
            let mut eta = base;
            for j in 0..design.ncols() {
                eta += design[(i, j)] * fit.coefficients[j + offset];
            }
            match fit.link {
                Link::Identity => eta,
                Link::Probit => normal_cdf(eta),
                Link::Logit => expit(eta),
            }
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{derive_substream, normal_quantile};

    fn ones_column(n: usize) -> DMatrix<f64> {
        DMatrix::from_element(n, 1, 1.0)
    }

    #[test]
    fn intercept_only_probit_matches_closed_form() {
        // MLE of an intercept-only probit is Phi^{-1}(k/n).
        let y: Vec<f64> = (0..10).map(|i| if i < 7 { 1.0 } else { 0.0 }).collect();
        let fit = fit_binary_glm(&ones_column(10), &y, Link::Probit).unwrap();
        let want = normal_quantile(0.7).unwrap();
        assert!(
            (fit.coefficients[0] - want).abs() < 1e-6,
            "got {}, want {want}",
            fit.coefficients[0]
        );
        assert!(fit.converged);
    }

    #[test]
    fn intercept_only_logit_is_zero_at_half() {
        let y: Vec<f64> = (0..10).map(|i| if i < 5 { 1.0 } else { 0.0 }).collect();
        let fit = fit_binary_glm(&ones_column(10), &y, Link::Logit).unwrap();
        assert!(fit.coefficients[0].abs() < 1e-8);
    }

    #[test]
    fn separated_covariate_errors() {
        let x = DMatrix::from_column_slice(6, 1, &[-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]);
        let y = vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        assert!(matches!(fit_binary_glm(&x, &y, Link::Logit), Err(GlmError::Separation)));
    }

    #[test]
    fn single_class_response_errors() {
        let y = vec![1.0; 5];
        assert!(matches!(
            fit_binary_glm(&ones_column(5), &y, Link::Probit),
            Err(GlmError::DegenerateResponse)
        ));
    }

    #[test]
    fn score_norm_is_small_at_reported_mle() {
        let mut s = derive_substream(21, 0);
        let n = 400;
        let mut x = DMatrix::zeros(n, 2);
        let mut y = vec![0.0; n];
        for i in 0..n {
            x[(i, 0)] = 1.0;
            x[(i, 1)] = s.standard_normal();
            let p = normal_cdf(0.3 + 0.8 * x[(i, 1)]);
            y[i] = if s.bernoulli(p) { 1.0 } else { 0.0 };
        }
        let fit = fit_binary_glm(&x, &y, Link::Probit).unwrap();
        assert!(fit.converged);
        // Independent score evaluation.
        let mut score = [0.0f64; 2];
        for i in 0..n {
            let eta = fit.coefficients[0] * x[(i, 0)] + fit.coefficients[1] * x[(i, 1)];
            let mu = normal_cdf(eta);
            let d = normal_pdf(eta) / (mu * (1.0 - mu));
            for (a, slot) in score.iter_mut().enumerate() {
                *slot += x[(i, a)] * (y[i] - mu) * d;
            }
        }
        assert!(score[0].abs() < 1e-6 && score[1].abs() < 1e-6, "{score:?}");
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x = DMatrix::from_column_slice(4, 1, &[0.0, 1.0, 2.0, 3.0]);
        let y = vec![3.0, 5.0, 7.0, 9.0];
        let fit = fit_ols(&x, &y).unwrap();
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-10);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn ols_duplicated_column_is_rank_deficient() {
        let x = DMatrix::from_fn(5, 2, |i, _| i as f64);
        assert!(matches!(fit_ols(&x, &[1.0; 5]), Err(GlmError::Rank)));
    }

    #[test]
    fn ols_intercept_only_is_the_mean() {
        let x = DMatrix::zeros(4, 0);
        let y = vec![1.0, 2.0, 4.0, 9.0];
        let fit = fit_ols(&x, &y).unwrap();
        assert!((fit.coefficients[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ols_matches_normal_equations() {
        let mut s = derive_substream(22, 0);
        for _ in 0..20 {
            let n = 40;
            let mut x = DMatrix::zeros(n, 3);
            let mut y = vec![0.0; n];
            for i in 0..n {
                for j in 0..3 {
                    x[(i, j)] = s.standard_normal();
                }
                y[i] = 1.0 + x[(i, 0)] - 2.0 * x[(i, 1)] + 0.5 * s.standard_normal();
            }
            let fit = fit_ols(&x, &y).unwrap();
            // Closed-form (X'X)^{-1} X'y with the explicit intercept column.
            let xi = x.clone().insert_column(0, 1.0);
            let xtx = xi.transpose() * &xi;
            let xty = xi.transpose() * DVector::from_column_slice(&y);
            let beta = xtx.cholesky().unwrap().solve(&xty);
            for j in 0..4 {
                assert!((fit.coefficients[j] - beta[j]).abs() < 1e-8);
            }
            // Residual orthogonality.
            let pred = predict(&fit, &x).unwrap();
            let resid = DVector::from_iterator(n, y.iter().zip(&pred).map(|(a, b)| a - b));
            let ortho = (xi.transpose() * resid).amax();
            let scale = y.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
            assert!(ortho < 1e-8 * scale.max(1.0));
        }
    }

    #[test]
    fn predict_links() {
        let fit = GlmFit {
            coefficients: vec![3.0, 2.0],
            link: Link::Identity,
            converged: true,
            iterations: 1,
            log_likelihood: None,
            intercept: true,
        };
        let x = DMatrix::from_column_slice(1, 1, &[1.0]);
        assert_eq!(predict(&fit, &x).unwrap()[0], 5.0);

        let probit = GlmFit {
            coefficients: vec![0.0],
            link: Link::Probit,
            converged: true,
            iterations: 1,
            log_likelihood: None,
            intercept: false,
        };
        assert_eq!(predict(&probit, &x).unwrap()[0], 0.5);

        let logit = GlmFit {
            coefficients: vec![1.0],
            link: Link::Logit,
            converged: true,
            iterations: 1,
            log_likelihood: None,
            intercept: false,
        };
        let big = DMatrix::from_column_slice(3, 1, &[1.0, 5.0, 10.0]);
        let p = predict(&logit, &big).unwrap();
        assert!(p[0] < p[1] && p[1] < p[2] && p[2] < 1.0 && p[0] > 0.0);
    }

    #[test]
    fn predict_shape_mismatch_errors() {
        let fit = GlmFit {
            coefficients: vec![1.0, 2.0],
            link: Link::Identity,
            converged: true,
            iterations: 1,
            log_likelihood: None,
            intercept: false,
        };
        let x = DMatrix::from_column_slice(1, 1, &[1.0]);
        assert!(matches!(predict(&fit, &x), Err(GlmError::Shape(_))));
    }

    #[test]
    fn probit_coefficients_recovered_on_synthetic_data() {
        // Coefficient recovery within 3 estimated SEs on nearly all seeds.
        let truth = [0.5, -1.0, 0.25];
        let mut hits = 0;
        let seeds = 60;
        for seed in 0..seeds {
            let mut s = derive_substream(23, seed);
            let n = 3000;
            let mut x = DMatrix::zeros(n, 3);
            let mut y = vec![0.0; n];
            for i in 0..n {
                x[(i, 0)] = 1.0;
                x[(i, 1)] = s.standard_normal();
                x[(i, 2)] = s.uniform(-1.0, 1.0);
                let eta: f64 = (0..3).map(|j| truth[j] * x[(i, j)]).sum();
                y[i] = if s.bernoulli(normal_cdf(eta)) { 1.0 } else { 0.0 };
            }
            let fit = fit_binary_glm(&x, &y, Link::Probit).unwrap();
            // Information-based standard errors, computed independently.
            let mut info = DMatrix::<f64>::zeros(3, 3);
            for i in 0..n {
                let eta: f64 = (0..3).map(|j| fit.coefficients[j] * x[(i, j)]).sum();
                let mu = normal_cdf(eta).clamp(1e-10, 1.0 - 1e-10);
                let w = normal_pdf(eta).powi(2) / (mu * (1.0 - mu));
                for a in 0..3 {
                    for b in 0..3 {
                        info[(a, b)] += x[(i, a)] * x[(i, b)] * w;
                    }
                }
            }
            let cov = info.try_inverse().unwrap();
            let ok = (0..3)
                .all(|j| (fit.coefficients[j] - truth[j]).abs() <= 3.0 * cov[(j, j)].sqrt());
            if ok {
                hits += 1;
            }
        }
        assert!(hits * 100 >= seeds * 95, "only {hits}/{seeds} recovered");
    }
}
