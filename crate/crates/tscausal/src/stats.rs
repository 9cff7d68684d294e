//! Shared numerical primitives: partial correlation with Fisher-z testing,
//! ordinary least squares, (adaptive) lasso with BIC selection, first
//! principal component scores, and the pairwise non-Gaussianity direction
//! measure used by the LiNGAM-family methods.
//!
//! Everything here is deterministic and thread-safe; no function draws
//! randomness.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// E[log cosh Z] for standard normal Z; the Gaussian baseline of the
/// log-cosh non-Gaussianity proxy.
const GAUSS_LOG_COSH: f64 = 0.374_567_207_491_438;

/// Relative tolerance below which a residual is considered numerically zero.
const DEGENERATE_TOL: f64 = 1e-18;

/// Outcome of one conditional-independence test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CITestResult {
    /// Partial correlation of the two variables given the conditioning set.
    pub statistic: f64,
    pub p_value: f64,
    pub n_effective: usize,
    pub cond_size: usize,
    /// Independence decision at the alpha the test was run with: `p > alpha`.
    pub independent: bool,
    /// True when a residual had (numerically) zero variance; the statistic
    /// is then defined as 0 and the decision should not be trusted.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    pub bic: f64,
}

impl RegressionFit {
    pub fn support(&self) -> Vec<usize> {
        (0..self.coefficients.len())
            .filter(|&j| self.coefficients[j] != 0.0)
            .collect()
    }

    pub fn rss(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum()
    }
}

/// `n ln(RSS / n) + k ln(n)`.
pub fn bic_score(n: usize, rss: f64, k: usize) -> f64 {
    let n = n as f64;
    n * (rss.max(1e-300) / n).ln() + k as f64 * n.ln()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numerically safe log cosh: `|x| - ln 2 + ln(1 + exp(-2|x|))`.
fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a - std::f64::consts::LN_2 + (-2.0 * a).exp().ln_1p()
}

/// Least-squares machinery based on modified Gram-Schmidt with a
/// re-orthogonalization pass. Columns whose orthogonalized norm collapses
/// relative to their input norm are flagged dependent and excluded from the
/// basis, which both names the offending columns and keeps projections
/// well defined on rank-deficient designs.
struct GramSchmidt {
    q: Vec<Vec<f64>>,
    /// r[j][i]: projection of selected column j onto basis vector i < j.
    r: Vec<Vec<f64>>,
    /// Diagonal entries (norms) per selected column.
    diag: Vec<f64>,
    /// Design-column index of each basis vector; `usize::MAX` marks the
    /// implicit intercept column.
    selected: Vec<usize>,
    dependent: Vec<usize>,
}

impl GramSchmidt {
    fn factor(columns: &[&[f64]], n: usize, intercept: bool) -> GramSchmidt {
        let mut gs = GramSchmidt {
            q: Vec::new(),
            r: Vec::new(),
            diag: Vec::new(),
            selected: Vec::new(),
            dependent: Vec::new(),
        };
        let absorb = |col: Vec<f64>, index: usize, gs: &mut GramSchmidt| {
            let orig_norm = dot(&col, &col).sqrt();
            let mut v = col;
            let mut coeffs = vec![0.0; gs.q.len()];
            // Two orthogonalization passes for numerical stability.
            for _ in 0..2 {
                for (i, q) in gs.q.iter().enumerate() {
                    let c = dot(q, &v);
                    coeffs[i] += c;
                    for (vk, qk) in v.iter_mut().zip(q) {
                        *vk -= c * qk;
                    }
                }
            }
            let norm = dot(&v, &v).sqrt();
            if norm <= orig_norm * 1e-10 + 1e-300 {
                if index != usize::MAX {
                    gs.dependent.push(index);
                }
                return;
            }
            for vk in v.iter_mut() {
                *vk /= norm;
            }
            gs.q.push(v);
            gs.r.push(coeffs);
            gs.diag.push(norm);
            gs.selected.push(index);
        };
        if intercept {
            absorb(vec![1.0; n], usize::MAX, &mut gs);
        }
        for (j, col) in columns.iter().enumerate() {
            absorb(col.to_vec(), j, &mut gs);
        }
        gs
    }

    /// Residual of `y` after projection onto the selected column space.
    fn residual(&self, y: &[f64]) -> Vec<f64> {
        let mut res = y.to_vec();
        for q in &self.q {
            let c = dot(q, &res);
            for (rk, qk) in res.iter_mut().zip(q) {
                *rk -= c * qk;
            }
        }
        res
    }

    /// Back-substitutes for the coefficients of the selected columns;
    /// dependent columns get zero.
    fn solve(&self, y: &[f64], n_columns: usize) -> (f64, Vec<f64>) {
        let k = self.q.len();
        let z: Vec<f64> = self.q.iter().map(|q| dot(q, y)).collect();
        let mut beta_sel = vec![0.0; k];
        for i in (0..k).rev() {
            let mut acc = z[i];
            for j in (i + 1)..k {
                acc -= self.r[j][i] * beta_sel[j];
            }
            beta_sel[i] = acc / self.diag[i];
        }
        let mut intercept = 0.0;
        let mut coefficients = vec![0.0; n_columns];
        for (i, &sel) in self.selected.iter().enumerate() {
            if sel == usize::MAX {
                intercept = beta_sel[i];
            } else {
                coefficients[sel] = beta_sel[i];
            }
        }
        (intercept, coefficients)
    }
}

fn check_lengths(columns: &[&[f64]], y_len: usize) -> Result<()> {
    for col in columns {
        if col.len() != y_len {
            return Err(Error::InvalidConfig(format!(
                "column length {} does not match {}",
                col.len(),
                y_len
            )));
        }
    }
    Ok(())
}

/// Residual of `target` after regressing on an intercept plus `z_columns`.
/// Rank-deficient conditioning sets are projected onto their independent
/// subset rather than rejected.
pub(crate) fn project_residual(target: &[f64], z_columns: &[&[f64]]) -> Vec<f64> {
    GramSchmidt::factor(z_columns, target.len(), true).residual(target)
}

/// Ordinary least squares of `y` on an intercept plus `columns`.
///
/// BIC uses `k = columns + 1` estimated parameters. Linearly dependent
/// columns are an error naming the offenders.
pub fn ols(columns: &[&[f64]], y: &[f64]) -> Result<RegressionFit> {
    let n = y.len();
    check_lengths(columns, n)?;
    if n <= columns.len() + 1 {
        return Err(Error::InsufficientSamples {
            n,
            need: columns.len() + 1,
        });
    }
    let gs = GramSchmidt::factor(columns, n, true);
    if !gs.dependent.is_empty() {
        return Err(Error::RankDeficient {
            columns: gs.dependent,
        });
    }
    let (intercept, coefficients) = gs.solve(y, columns.len());
    let residuals = gs.residual(y);
    let rss = dot(&residuals, &residuals);
    Ok(RegressionFit {
        bic: bic_score(n, rss, columns.len() + 1),
        coefficients,
        intercept,
        residuals,
    })
}

/// Partial correlation of `x` and `y` given the columns of `z`, with a
/// Fisher-z significance test on `n - |z| - 3` degrees of freedom.
///
/// A zero-variance residual yields statistic 0 with the `degenerate` flag
/// set instead of an error, so constant (sleeping) series cannot crash a
/// discovery loop.
pub fn partial_correlation_test(
    x: &[f64],
    y: &[f64],
    z: &[&[f64]],
    alpha: f64,
) -> Result<CITestResult> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::InvalidConfig(
            "x and y must have equal length".into(),
        ));
    }
    check_lengths(z, n)?;
    if n <= z.len() + 3 {
        return Err(Error::InsufficientSamples { n, need: z.len() + 3 });
    }
    let res_x = project_residual(x, z);
    let res_y = project_residual(y, z);
    let ss_x = dot(&res_x, &res_x);
    let ss_y = dot(&res_y, &res_y);
    let scale_x = dot(x, x).max(n as f64);
    let scale_y = dot(y, y).max(n as f64);
    if ss_x <= scale_x * DEGENERATE_TOL || ss_y <= scale_y * DEGENERATE_TOL {
        return Ok(CITestResult {
            statistic: 0.0,
            p_value: 1.0,
            n_effective: n,
            cond_size: z.len(),
            independent: true,
            degenerate: true,
        });
    }
    let r = (dot(&res_x, &res_y) / (ss_x * ss_y).sqrt()).clamp(-1.0, 1.0);
    let dof = (n - z.len() - 3) as f64;
    let stat = dof.sqrt() * 0.5 * ((1.0 + r) / (1.0 - r)).ln().abs();
    let p_value = erfc(stat / std::f64::consts::SQRT_2);
    Ok(CITestResult {
        statistic: r,
        p_value,
        n_effective: n,
        cond_size: z.len(),
        independent: p_value > alpha,
        degenerate: false,
    })
}

struct Standardized {
    cols: Vec<Vec<f64>>,
    means: Vec<f64>,
    sds: Vec<f64>,
    /// Indices of columns with nonzero variance.
    active: Vec<usize>,
}

fn standardize_columns(columns: &[&[f64]]) -> Standardized {
    let n = columns.first().map_or(0, |c| c.len()) as f64;
    let mut out = Standardized {
        cols: Vec::with_capacity(columns.len()),
        means: Vec::with_capacity(columns.len()),
        sds: Vec::with_capacity(columns.len()),
        active: Vec::new(),
    };
    for (j, col) in columns.iter().enumerate() {
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        let scale = (dot(col, col) / n).max(1.0);
        if var > scale * DEGENERATE_TOL {
            out.cols.push(col.iter().map(|v| (v - mean) / sd).collect());
            out.active.push(j);
        } else {
            out.cols.push(vec![0.0; col.len()]);
        }
        out.means.push(mean);
        out.sds.push(sd);
    }
    out
}

/// Weighted lasso by cyclic coordinate descent on internally standardized
/// columns and centered response:
///
/// `min (1/2n) ||y - X b||^2 + lambda * sum_j w_j |b_j|`
///
/// with the penalty applied to the standardized-scale coefficients. Returned
/// coefficients are on the original scale; zero-variance columns stay at
/// zero. Converges when the largest standardized coefficient change in a
/// sweep drops below 1e-7; gives up after 10000 sweeps, returning the last
/// iterate inside the error.
pub fn lasso(columns: &[&[f64]], y: &[f64], lambda: f64, weights: &[f64]) -> Result<RegressionFit> {
    lasso_capped(columns, y, lambda, weights, 10_000)
}

pub(crate) fn lasso_capped(
    columns: &[&[f64]],
    y: &[f64],
    lambda: f64,
    weights: &[f64],
    max_sweeps: usize,
) -> Result<RegressionFit> {
    let n = y.len();
    check_lengths(columns, n)?;
    if n < 2 {
        return Err(Error::InsufficientSamples { n, need: 2 });
    }
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidConfig(format!("invalid lambda {lambda}")));
    }
    if weights.len() != columns.len() || weights.iter().any(|&w| w <= 0.0 || !w.is_finite()) {
        return Err(Error::InvalidConfig(
            "weights must be positive, one per column".into(),
        ));
    }
    let std = standardize_columns(columns);
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();

    let p = columns.len();
    let inv_n = 1.0 / n as f64;
    let mut beta = vec![0.0; p];
    let mut residual = yc;
    let mut converged = false;
    let mut sweeps = 0;
    let mut last_change = f64::INFINITY;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for &j in &std.active {
            let xj = &std.cols[j];
            let rho = inv_n * dot(xj, &residual) + beta[j];
            let threshold = lambda * weights[j];
            let new = if rho.abs() <= threshold {
                0.0
            } else {
                rho - threshold.copysign(rho)
            };
            let delta = new - beta[j];
            if delta != 0.0 {
                for (rk, xk) in residual.iter_mut().zip(xj) {
                    *rk -= delta * xk;
                }
                beta[j] = new;
            }
            max_change = max_change.max(delta.abs());
        }
        last_change = max_change;
        if max_change < 1e-7 {
            converged = true;
            break;
        }
    }

    let to_original = |beta: &[f64]| -> (Vec<f64>, f64) {
        let mut coef = vec![0.0; p];
        let mut intercept = y_mean;
        for &j in &std.active {
            coef[j] = beta[j] / std.sds[j];
            intercept -= coef[j] * std.means[j];
        }
        (coef, intercept)
    };

    if !converged {
        let (coef, _) = to_original(&beta);
        return Err(Error::NonConvergence {
            sweeps,
            max_change: last_change,
            last_coefficients: coef,
        });
    }

    let (coefficients, intercept) = to_original(&beta);
    let rss = dot(&residual, &residual);
    let k = beta.iter().filter(|b| **b != 0.0).count();
    Ok(RegressionFit {
        bic: bic_score(n, rss, k),
        coefficients,
        intercept,
        residuals: residual,
    })
}

/// Objective of the internal standardized lasso problem; test hook for the
/// descent-monotonicity property.
#[cfg(test)]
pub(crate) fn lasso_objective(
    columns: &[&[f64]],
    y: &[f64],
    lambda: f64,
    weights: &[f64],
    coefficients_std: &[f64],
) -> f64 {
    let n = y.len() as f64;
    let std = standardize_columns(columns);
    let y_mean = y.iter().sum::<f64>() / n;
    let mut residual: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    for (j, &b) in coefficients_std.iter().enumerate() {
        for (rk, xk) in residual.iter_mut().zip(&std.cols[j]) {
            *rk -= b * xk;
        }
    }
    let rss: f64 = residual.iter().map(|r| r * r).sum();
    let penalty: f64 = coefficients_std
        .iter()
        .zip(weights)
        .map(|(b, w)| w * b.abs())
        .sum();
    0.5 * rss / n + lambda * penalty
}

/// Adaptive lasso with BIC-selected regularization strength.
///
/// Weights are `1 / max(|b_ols|, 1e-10)` from an OLS pilot fit on the
/// standardized design; lambda runs over 50 log-spaced points from the
/// smallest all-zero value down to 1e-4 of it. Each candidate support is
/// refit by OLS and scored with `k = support size`; the best refit wins
/// (ties go to the sparser, larger-lambda fit).
pub fn adaptive_lasso_bic(columns: &[&[f64]], y: &[f64]) -> Result<RegressionFit> {
    adaptive_lasso_bic_grid(columns, y, 50)
}

pub fn adaptive_lasso_bic_grid(
    columns: &[&[f64]],
    y: &[f64],
    grid_len: usize,
) -> Result<RegressionFit> {
    let n = y.len();
    check_lengths(columns, n)?;
    if grid_len == 0 {
        return Err(Error::InvalidConfig("empty lambda grid".into()));
    }
    let std = standardize_columns(columns);
    let intercept_only = || -> RegressionFit {
        let mean = y.iter().sum::<f64>() / n as f64;
        let residuals: Vec<f64> = y.iter().map(|v| v - mean).collect();
        let rss = dot(&residuals, &residuals);
        RegressionFit {
            coefficients: vec![0.0; columns.len()],
            intercept: mean,
            bic: bic_score(n, rss, 0),
            residuals,
        }
    };
    if std.active.is_empty() {
        return Ok(intercept_only());
    }

    // Pilot OLS on the standardized active columns for the adaptive weights.
    let std_refs: Vec<&[f64]> = std.active.iter().map(|&j| std.cols[j].as_slice()).collect();
    let pilot = ols(&std_refs, y)?;
    let mut weights = vec![1.0; columns.len()];
    for (slot, &j) in std.active.iter().enumerate() {
        weights[j] = 1.0 / pilot.coefficients[slot].abs().max(1e-10);
    }

    let y_mean = y.iter().sum::<f64>() / n as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let lambda_max = std
        .active
        .iter()
        .map(|&j| (dot(&std.cols[j], &yc) / n as f64).abs() / weights[j])
        .fold(0.0f64, f64::max);
    if lambda_max <= 0.0 || !lambda_max.is_finite() {
        return Ok(intercept_only());
    }

    let mut best: Option<RegressionFit> = None;
    for i in 0..grid_len {
        let lambda = if grid_len == 1 {
            lambda_max
        } else {
            lambda_max * 10f64.powf(-4.0 * i as f64 / (grid_len - 1) as f64)
        };
        let fit = lasso(columns, y, lambda, &weights)?;
        let support = fit.support();
        let refit = if support.is_empty() {
            intercept_only()
        } else {
            let sub: Vec<&[f64]> = support.iter().map(|&j| columns[j]).collect();
            let sub_fit = ols(&sub, y)?;
            let mut coefficients = vec![0.0; columns.len()];
            for (slot, &j) in support.iter().enumerate() {
                coefficients[j] = sub_fit.coefficients[slot];
            }
            RegressionFit {
                coefficients,
                intercept: sub_fit.intercept,
                bic: bic_score(n, sub_fit.rss(), support.len()),
                residuals: sub_fit.residuals,
            }
        };
        if best.as_ref().is_none_or(|b| refit.bic < b.bic) {
            best = Some(refit);
        }
    }
    Ok(best.expect("grid is non-empty"))
}

/// Scores of the first principal component of the column-standardized
/// matrix (correlation PCA). The component sign is fixed so the loading of
/// largest magnitude is positive. Zero-variance columns are dropped; if none
/// remain the matrix is rejected.
pub fn first_principal_component(columns: &[&[f64]]) -> Result<Vec<f64>> {
    let n = columns.first().map_or(0, |c| c.len());
    if columns.len() < 2 {
        return Err(Error::EmptyInput(
            "principal component needs at least 2 columns".into(),
        ));
    }
    if n < 2 {
        return Err(Error::InsufficientSamples { n, need: 2 });
    }
    check_lengths(columns, n)?;
    let std = standardize_columns(columns);
    if std.active.is_empty() {
        return Err(Error::ZeroVariance);
    }
    let k = std.active.len();
    let corr = DMatrix::from_fn(k, k, |i, j| {
        dot(&std.cols[std.active[i]], &std.cols[std.active[j]]) / n as f64
    });
    let eigen = SymmetricEigen::new(corr);
    let mut top = 0;
    for i in 1..k {
        if eigen.eigenvalues[i] > eigen.eigenvalues[top] {
            top = i;
        }
    }
    let v = eigen.eigenvectors.column(top);
    let mut lead = 0;
    for i in 1..k {
        if v[i].abs() > v[lead].abs() {
            lead = i;
        }
    }
    let sign = if v[lead] < 0.0 { -1.0 } else { 1.0 };
    let mut scores = vec![0.0; n];
    for (slot, &j) in std.active.iter().enumerate() {
        let w = sign * v[slot];
        for (s, x) in scores.iter_mut().zip(&std.cols[j]) {
            *s += w * x;
        }
    }
    Ok(scores)
}

fn standardize_vec(x: &[f64]) -> Option<Vec<f64>> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let scale = (dot(x, x) / n).max(1.0);
    if var <= scale * DEGENERATE_TOL {
        return None;
    }
    let sd = var.sqrt();
    Some(x.iter().map(|v| (v - mean) / sd).collect())
}

fn log_cosh_negentropy(x: &[f64]) -> f64 {
    let m = x.iter().map(|&v| log_cosh(v)).sum::<f64>() / x.len() as f64;
    let dev = m - GAUSS_LOG_COSH;
    dev * dev
}

/// Likelihood-ratio style direction score between two series. Positive
/// values evidence `u -> v`, negative `v -> u`; the score is exactly
/// antisymmetric in its arguments.
///
/// Both inputs are standardized; each is regressed on the other and the
/// log-cosh non-Gaussianity of the residuals is contrasted: the causally
/// correct factorization keeps driver and residual maximally non-Gaussian,
/// while the reverse regression mixes them toward Gaussianity. Jointly
/// Gaussian inputs give scores near zero (the direction is not identifiable
/// there).
pub fn pairwise_direction_measure(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::InvalidConfig(
            "u and v must have equal length".into(),
        ));
    }
    if u.len() < 3 {
        return Err(Error::InsufficientSamples {
            n: u.len(),
            need: 3,
        });
    }
    let us = standardize_vec(u).ok_or(Error::ConstantInput)?;
    let vs = standardize_vec(v).ok_or(Error::ConstantInput)?;
    let rho = dot(&us, &vs) / u.len() as f64;
    let res_v: Vec<f64> = vs.iter().zip(&us).map(|(y, x)| y - rho * x).collect();
    let res_u: Vec<f64> = us.iter().zip(&vs).map(|(y, x)| y - rho * x).collect();
    let (res_v, res_u) = match (standardize_vec(&res_v), standardize_vec(&res_u)) {
        (Some(a), Some(b)) => (a, b),
        // |rho| ~ 1: deterministic relation, no usable asymmetry.
        _ => return Ok(0.0),
    };
    let forward = log_cosh_negentropy(&us) + log_cosh_negentropy(&res_v);
    let backward = log_cosh_negentropy(&vs) + log_cosh_negentropy(&res_u);
    Ok(forward - backward)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Builds `k` exactly orthonormal zero-mean unit columns from
    /// deterministic waveforms.
    fn orthonormal_basis(n: usize, k: usize) -> Vec<Vec<f64>> {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for j in 0..k {
            let mut v: Vec<f64> = (0..n)
                .map(|i| {
                    let t = i as f64;
                    ((j + 1) as f64 * 0.17 * t).sin() + 0.1 * ((j as f64 + 0.3) * t).cos()
                })
                .collect();
            let mean = v.iter().sum::<f64>() / n as f64;
            v.iter_mut().for_each(|x| *x -= mean);
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &v);
                    v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
                let mean = v.iter().sum::<f64>() / n as f64;
                v.iter_mut().for_each(|x| *x -= mean);
            }
            let norm = dot(&v, &v).sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
        basis
    }

    #[test]
    fn partial_correlation_matches_closed_form() {
        // Exact construction with sample correlations rho_xy = 0.8,
        // rho_xz = rho_yz = 0.5; the partial correlation is
        // (0.8 - 0.25) / (1 - 0.25) = 0.7333...
        let n = 400;
        let basis = orthonormal_basis(n, 3);
        let (z, e1, e2) = (&basis[0], &basis[1], &basis[2]);
        let beta = 0.55 / 0.75f64.sqrt();
        let gamma = (0.75 - beta * beta).sqrt();
        let x: Vec<f64> = (0..n).map(|i| 0.5 * z[i] + 0.75f64.sqrt() * e1[i]).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 0.5 * z[i] + beta * e1[i] + gamma * e2[i])
            .collect();
        let res = partial_correlation_test(&x, &y, &[z], 0.05).unwrap();
        let expect = (0.8 - 0.25) / 0.75;
        assert!(
            (res.statistic - expect).abs() < 1e-9,
            "{} vs {expect}",
            res.statistic
        );
        assert!(!res.degenerate);
        assert!(!res.independent, "strong dependence must be detected");
    }

    #[test]
    fn independent_noise_is_accepted_as_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 10_000;
        let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let res = partial_correlation_test(&x, &y, &[], 0.05).unwrap();
        assert!(res.statistic.abs() < 0.05);
        assert_eq!(res.cond_size, 0);
        assert_eq!(res.n_effective, n);
    }

    #[test]
    fn identical_vectors_are_perfectly_correlated() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let res = partial_correlation_test(&x, &x, &[], 0.05).unwrap();
        assert_eq!(res.statistic, 1.0);
        assert!(res.p_value < 1e-12);
        assert!(!res.independent);
    }

    #[test]
    fn constant_series_flags_degenerate() {
        let x = vec![3.0; 40];
        let y: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let res = partial_correlation_test(&x, &y, &[], 0.05).unwrap();
        assert!(res.degenerate);
        assert_eq!(res.statistic, 0.0);
    }

    #[test]
    fn p_value_monotone_in_correlation_magnitude() {
        let n = 200;
        let basis = orthonormal_basis(n, 2);
        let mut last_p = f64::INFINITY;
        for &rho in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            let x = basis[0].clone();
            let y: Vec<f64> = (0..n)
                .map(|i| rho * basis[0][i] + (1.0 - rho * rho).sqrt() * basis[1][i])
                .collect();
            let res = partial_correlation_test(&x, &y, &[], 0.05).unwrap();
            assert!((res.statistic - rho).abs() < 1e-9);
            assert!(res.p_value < last_p);
            last_p = res.p_value;
        }
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let fit = ols(&[&x], &y).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-10);
        assert!((fit.intercept - 1.0).abs() < 1e-9);
        assert!(fit.rss() < 1e-16);
    }

    #[test]
    fn ols_matches_normal_equation_oracle() {
        // Independent oracle: solve (A^T A) b = A^T y by Gaussian
        // elimination with A = [1 | X].
        fn normal_solve(cols: &[&[f64]], y: &[f64]) -> Vec<f64> {
            let n = y.len();
            let k = cols.len() + 1;
            let col = |j: usize, i: usize| if j == 0 { 1.0 } else { cols[j - 1][i] };
            let mut a = vec![vec![0.0; k + 1]; k];
            for r in 0..k {
                for c in 0..k {
                    a[r][c] = (0..n).map(|i| col(r, i) * col(c, i)).sum();
                }
                a[r][k] = (0..n).map(|i| col(r, i) * y[i]).sum();
            }
            for pivot in 0..k {
                let mut best = pivot;
                for r in pivot + 1..k {
                    if a[r][pivot].abs() > a[best][pivot].abs() {
                        best = r;
                    }
                }
                a.swap(pivot, best);
                for r in 0..k {
                    if r != pivot {
                        let f = a[r][pivot] / a[pivot][pivot];
                        for c in pivot..=k {
                            a[r][c] -= f * a[pivot][c];
                        }
                    }
                }
            }
            (0..k).map(|r| a[r][k] / a[r][r]).collect()
        }

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 120;
        let cols: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..n).map(|_| rng.gen::<f64>() * 3.0 - 1.5).collect())
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 1.5 * cols[0][i] - 0.7 * cols[2][i] + rng.gen::<f64>())
            .collect();
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let fit = ols(&refs, &y).unwrap();
        let oracle = normal_solve(&refs, &y);
        assert!((fit.intercept - oracle[0]).abs() < 1e-8);
        for j in 0..4 {
            assert!(
                (fit.coefficients[j] - oracle[j + 1]).abs() < 1e-8,
                "coefficient {j}"
            );
        }
        // Residual orthogonality to the regressors.
        for col in &refs {
            assert!(dot(col, &fit.residuals).abs() < 1e-6);
        }
    }

    #[test]
    fn ols_on_constant_response() {
        let x: Vec<f64> = (0..25).map(|i| (i as f64).cos()).collect();
        let y = vec![4.0; 25];
        let fit = ols(&[&x], &y).unwrap();
        assert!(fit.coefficients[0].abs() < 1e-10);
        assert!((fit.intercept - 4.0).abs() < 1e-10);
    }

    #[test]
    fn ols_names_dependent_columns() {
        let a: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let b: Vec<f64> = a.iter().map(|v| 2.0 * v).collect();
        let c: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        match ols(&[&a, &b, &c], &c) {
            Err(Error::RankDeficient { columns }) => assert_eq!(columns, vec![1]),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn lasso_at_zero_lambda_equals_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200;
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect())
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 0.8 * cols[0][i] - 0.5 * cols[1][i] + 0.1 * rng.gen::<f64>())
            .collect();
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let ols_fit = ols(&refs, &y).unwrap();
        let lasso_fit = lasso(&refs, &y, 0.0, &[1.0; 3]).unwrap();
        for j in 0..3 {
            assert!(
                (ols_fit.coefficients[j] - lasso_fit.coefficients[j]).abs() < 1e-5,
                "coefficient {j}"
            );
        }
        assert!((ols_fit.intercept - lasso_fit.intercept).abs() < 1e-5);
    }

    #[test]
    fn lasso_kkt_threshold_zeroes_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 150;
        let cols: Vec<Vec<f64>> = (0..4)
            .map(|_| {
                let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
                standardize_vec(&raw).unwrap()
            })
            .collect();
        let y_raw: Vec<f64> = (0..n).map(|i| cols[0][i] + 0.3 * rng.gen::<f64>()).collect();
        let y = standardize_vec(&y_raw).unwrap();
        let weights = [1.0, 2.0, 0.5, 1.5];
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let lambda_max = refs
            .iter()
            .enumerate()
            .map(|(j, c)| (dot(c, &y) / n as f64).abs() / weights[j])
            .fold(0.0f64, f64::max);
        let fit = lasso(&refs, &y, lambda_max * 1.000001, &weights).unwrap();
        assert!(fit.coefficients.iter().all(|&c| c == 0.0));
        // Just below the threshold something activates.
        let fit = lasso(&refs, &y, lambda_max * 0.999, &weights).unwrap();
        assert!(fit.coefficients.iter().any(|&c| c != 0.0));
    }

    #[test]
    fn univariate_lasso_is_soft_thresholding() {
        let n = 300;
        let basis = orthonormal_basis(n, 2);
        let x: Vec<f64> = basis[0].iter().map(|v| v * (n as f64).sqrt()).collect();
        let corr = 0.6;
        let y: Vec<f64> = (0..n)
            .map(|i| (corr * basis[0][i] + 0.8 * basis[1][i]) * (n as f64).sqrt())
            .collect();
        for &lambda in &[0.0, 0.2, 0.5, 0.61, 0.9] {
            let fit = lasso(&[&x], &y, lambda, &[1.0]).unwrap();
            let expect = if corr.abs() <= lambda {
                0.0
            } else {
                corr - lambda * corr.signum()
            };
            // x is already unit-variance so original and standardized
            // coefficient scales coincide.
            let got = fit.coefficients[0];
            assert!(
                (got - expect).abs() < 1e-6,
                "lambda {lambda}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn lasso_objective_never_increases_across_sweeps() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..20 {
            let n = 60 + trial;
            let p = 5;
            let cols: Vec<Vec<f64>> = (0..p)
                .map(|_| (0..n).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect())
                .collect();
            let y: Vec<f64> = (0..n)
                .map(|i| cols[0][i] - 0.4 * cols[3][i] + rng.gen::<f64>())
                .collect();
            let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            let weights = vec![1.0; p];
            let lambda = 0.05;
            let std = standardize_columns(&refs);
            let mut last = f64::INFINITY;
            for sweeps in 1..8 {
                let beta_std: Vec<f64> = match lasso_capped(&refs, &y, lambda, &weights, sweeps) {
                    Ok(fit) => (0..p).map(|j| fit.coefficients[j] * std.sds[j]).collect(),
                    Err(Error::NonConvergence {
                        last_coefficients, ..
                    }) => (0..p).map(|j| last_coefficients[j] * std.sds[j]).collect(),
                    Err(other) => panic!("unexpected error {other}"),
                };
                let obj = lasso_objective(&refs, &y, lambda, &weights, &beta_std);
                assert!(
                    obj <= last + 1e-12,
                    "trial {trial}, sweeps {sweeps}: {obj} > {last}"
                );
                last = obj;
            }
        }
    }

    #[test]
    fn adaptive_lasso_recovers_sparse_support() {
        let truth = [3.0, 0.0, 0.0, 1.5];
        let mut hits = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 500;
            let cols: Vec<Vec<f64>> = (0..4)
                .map(|_| (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect())
                .collect();
            let y: Vec<f64> = (0..n)
                .map(|i| {
                    let signal: f64 = truth
                        .iter()
                        .enumerate()
                        .map(|(j, b)| b * cols[j][i])
                        .sum();
                    // Approximate N(0, 0.5) from 12 uniforms.
                    let noise = 0.5 * ((0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0);
                    signal + noise
                })
                .collect();
            let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            let fit = adaptive_lasso_bic(&refs, &y).unwrap();
            if fit.support() == vec![0, 3] {
                hits += 1;
            }
        }
        assert!(hits >= 95, "support recovered in only {hits}/100 seeds");
    }

    #[test]
    fn adaptive_lasso_on_pure_noise_is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 400;
        let cols: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let fit = adaptive_lasso_bic(&refs, &y).unwrap();
        assert!(fit.support().is_empty(), "support {:?}", fit.support());
    }

    #[test]
    fn adaptive_lasso_single_point_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let n = 200;
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect())
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 2.0 * cols[1][i] + 0.1 * rng.gen::<f64>())
            .collect();
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        // A one-point grid is the plain weighted lasso at lambda_max, whose
        // support is empty by the KKT condition.
        let fit = adaptive_lasso_bic_grid(&refs, &y, 1).unwrap();
        assert!(fit.support().is_empty());
    }

    #[test]
    fn pca_identical_columns_give_full_variance_component() {
        let col: Vec<f64> = (0..100)
            .map(|i| (i as f64 * 0.21).sin() * 2.0 + 1.0)
            .collect();
        let scores = first_principal_component(&[&col, &col]).unwrap();
        // Explained variance is 100%: var(scores) equals the trace of the
        // 2x2 correlation matrix.
        let var = scores.iter().map(|s| s * s).sum::<f64>() / scores.len() as f64;
        assert!((var - 2.0).abs() < 1e-9, "explained variance {var}");
        let std_col = standardize_vec(&col).unwrap();
        for (s, x) in scores.iter().zip(&std_col) {
            assert!((s - x * 2f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn pca_matches_closed_form_eigenvector() {
        // Sample covariance exactly diag(4, 1) rotated by 45 degrees; the
        // correlation matrix is then [[1, 0.6], [0.6, 1]] whose top
        // eigenvector is (1, 1)/sqrt(2).
        let n = 240;
        let basis = orthonormal_basis(n, 2);
        let scale = (n as f64).sqrt();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let l = [[2.0 * r, r], [2.0 * r, -r]];
        let cols: Vec<Vec<f64>> = (0..2)
            .map(|j| {
                (0..n)
                    .map(|i| scale * (l[j][0] * basis[0][i] + l[j][1] * basis[1][i]))
                    .collect()
            })
            .collect();
        let scores = first_principal_component(&[&cols[0], &cols[1]]).unwrap();
        let s0 = standardize_vec(&cols[0]).unwrap();
        let s1 = standardize_vec(&cols[1]).unwrap();
        for i in 0..n {
            let expect = (s0[i] + s1[i]) * r;
            assert!((scores[i] - expect).abs() < 1e-6, "row {i}");
        }
    }

    #[test]
    fn pca_scores_invariant_under_column_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 150;
        let shared: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|j| {
                (0..n)
                    .map(|i| shared[i] * (1.0 + j as f64 * 0.2) + 0.1 * rng.gen::<f64>())
                    .collect()
            })
            .collect();
        let forward = first_principal_component(&[&cols[0], &cols[1], &cols[2]]).unwrap();
        let permuted = first_principal_component(&[&cols[2], &cols[0], &cols[1]]).unwrap();
        for (a, b) in forward.iter().zip(&permuted) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn pca_rejects_constant_matrix() {
        let a = vec![1.0; 50];
        let b = vec![2.0; 50];
        assert!(matches!(
            first_principal_component(&[&a, &b]),
            Err(Error::ZeroVariance)
        ));
    }

    #[test]
    fn direction_measure_finds_the_causal_direction() {
        let mut hits = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let n = 5000;
            let u: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let v: Vec<f64> = u
                .iter()
                .map(|x| x + (rng.gen::<f64>() * 2.0 - 1.0))
                .collect();
            if pairwise_direction_measure(&u, &v).unwrap() > 0.0 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "correct direction in only {hits}/100 seeds");
    }

    #[test]
    fn direction_measure_is_exactly_antisymmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let n = 500;
            let u: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let v: Vec<f64> = u.iter().map(|x| 0.7 * x + rng.gen::<f64>()).collect();
            let fwd = pairwise_direction_measure(&u, &v).unwrap();
            let bwd = pairwise_direction_measure(&v, &u).unwrap();
            assert_eq!(fwd, -bwd);
        }
    }

    #[test]
    fn direction_measure_is_small_for_gaussian_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let n = 20_000;
        let gauss = |rng: &mut ChaCha8Rng| -> f64 {
            (0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0
        };
        let u: Vec<f64> = (0..n).map(|_| gauss(&mut rng)).collect();
        let v: Vec<f64> = u.iter().map(|x| 0.6 * x + gauss(&mut rng)).collect();
        let r = pairwise_direction_measure(&u, &v).unwrap();
        assert!(r.abs() < 0.01, "Gaussian pair scored {r}");
    }

    #[test]
    fn direction_measure_rejects_constants() {
        let u = vec![1.0; 100];
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert!(matches!(
            pairwise_direction_measure(&u, &v),
            Err(Error::ConstantInput)
        ));
    }

    #[test]
    fn gaussian_log_cosh_constant_matches_quadrature() {
        // Independent oracle: trapezoid quadrature over a wide interval.
        let steps = 2_000_000;
        let (lo, hi) = (-12.0f64, 12.0f64);
        let h = (hi - lo) / steps as f64;
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let f = |x: f64| log_cosh(x) * phi(x);
        let mut acc = 0.5 * (f(lo) + f(hi));
        for i in 1..steps {
            acc += f(lo + i as f64 * h);
        }
        let integral = acc * h;
        assert!(
            (integral - GAUSS_LOG_COSH).abs() < 1e-10,
            "quadrature {integral}"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn partial_correlation_stays_in_range(seed in any::<u64>(), n in 20usize..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 10.0 - 5.0).collect();
            let y: Vec<f64> = (0..n).map(|i| x[i] * 0.5 + rng.gen::<f64>()).collect();
            let z: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let res = partial_correlation_test(&x, &y, &[&z], 0.05).unwrap();
            prop_assert!(res.statistic.abs() <= 1.0);
            prop_assert!((0.0..=1.0).contains(&res.p_value));
        }

        #[test]
        fn direction_measure_antisymmetry_property(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 200;
            let u: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let v: Vec<f64> = (0..n).map(|i| 0.3 * u[i] + rng.gen::<f64>()).collect();
            let fwd = pairwise_direction_measure(&u, &v).unwrap();
            let bwd = pairwise_direction_measure(&v, &u).unwrap();
            prop_assert_eq!(fwd, -bwd);
        }
    }
}
