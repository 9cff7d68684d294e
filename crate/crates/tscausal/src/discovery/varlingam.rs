//! LiNGAM-family learner for autoregressive models: a VAR stage absorbs the
//! lagged structure, a DirectLiNGAM-style ordering stage reads the
//! instantaneous causal order out of the residuals' non-Gaussian
//! footprints, and an adaptive-lasso prune decides the final edge set.



use super::{DiscoveryConfig, LaggedFrame, RunStats};
use crate::data::AlignedPanel;
use crate::error::{Error, Result};
use crate::graphs::{EdgeMark, WindowCausalGraph};
use crate::stats::{adaptive_lasso_bic, ols, pairwise_direction_measure};

pub(crate) struct VarStage {
    /// Per-equation coefficients over the lagged variables, lexicographic
    /// (series, lag) order; `coeff[q][j]` belongs to `lagged_vars()[j]`.
    pub coeff: Vec<Vec<f64>>,
    pub residuals: Vec<Vec<f64>>,
}

/// Per-equation OLS fit of every series on all lagged columns.
pub(crate) fn fit_var(frame: &LaggedFrame) -> Result<VarStage> {
    let vars = frame.lagged_vars();
    let design: Vec<&[f64]> = vars.iter().map(|&(p, tau)| frame.col(p, tau)).collect();
    let mut coeff = Vec::with_capacity(frame.d);
    let mut residuals = Vec::with_capacity(frame.d);
    for q in 0..frame.d {
        let fit = ols(&design, frame.col(q, 0))?;
        coeff.push(fit.coefficients);
        residuals.push(fit.residuals);
    }
    Ok(VarStage { coeff, residuals })
}

/// DirectLiNGAM-style ordering: repeatedly pick the residual that is most
/// exogenous by the summed pairwise direction measure against the others,
/// regress it out of the remaining residuals, and append it to the order.
/// Ties break toward the smaller series index.
pub(crate) fn causal_order(residuals: &[Vec<f64>]) -> Result<Vec<usize>> {
    let d = residuals.len();
    let n = residuals.first().map_or(0, Vec::len);
    let mut working: Vec<Vec<f64>> = residuals.to_vec();
    let mut remaining: Vec<usize> = (0..d).collect();
    let mut order = Vec::with_capacity(d);
    while remaining.len() > 1 {
        let k = remaining.len();
        let mut score = vec![0.0f64; k];
        for i in 0..k {
            for j in i + 1..k {
                let r = match pairwise_direction_measure(
                    &working[remaining[i]],
                    &working[remaining[j]],
                ) {
                    Ok(r) => r,
                    // A residual collapsed to a constant: no directional
                    // information from this pair.
                    Err(Error::ConstantInput) => 0.0,
                    Err(e) => return Err(e),
                };
                score[i] += r;
                score[j] -= r;
            }
        }
        let mut best = 0;
        for i in 1..k {
            if score[i] > score[best] {
                best = i;
            }
        }
        let chosen = remaining[best];
        let var = working[chosen].iter().map(|v| v * v).sum::<f64>() / n as f64;
        if var > 1e-18 {
            let pivot = working[chosen].clone();
            for &j in &remaining {
                if j == chosen {
                    continue;
                }
                let cov = pivot
                    .iter()
                    .zip(&working[j])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    / n as f64;
                let slope = cov / var;
                for (w, p) in working[j].iter_mut().zip(&pivot) {
                    *w -= slope * p;
                }
            }
        }
        order.push(chosen);
        remaining.remove(best);
    }
    order.push(remaining[0]);
    Ok(order)
}

/// Full model detail for inspection: the causal order, the instantaneous
/// matrix, and the lagged matrices both in VAR form and structural form.
#[derive(Debug, Clone, PartialEq)]
pub struct VarLingamModel {
    pub order: Vec<usize>,
    /// `b0[q][p]`: instantaneous effect of series p on series q.
    pub b0: Vec<Vec<f64>>,
    /// `b_lagged[tau - 1][q][p]`: structural effect of p at `t - tau` on q.
    pub b_lagged: Vec<Vec<Vec<f64>>>,
    /// `var_coeff[tau - 1][q][p]`: reduced-form VAR coefficients.
    pub var_coeff: Vec<Vec<Vec<f64>>>,
}

pub fn varlingam_model(panel: &AlignedPanel, cfg: &DiscoveryConfig) -> Result<VarLingamModel> {
    let frame = LaggedFrame::build(panel, cfg)?;
    let var = fit_var(&frame)?;
    let order = causal_order(&var.residuals)?;
    Ok(build_model(&frame, &var, order))
}

fn build_model(frame: &LaggedFrame, var: &VarStage, order: Vec<usize>) -> VarLingamModel {
    let d = frame.d;
    let gamma_max = frame.gamma_max;
    let vars = frame.lagged_vars();

    // var_coeff[tau-1][q][p] from the flat per-equation coefficients.
    let mut var_coeff = vec![vec![vec![0.0; d]; d]; gamma_max];
    for q in 0..d {
        for (j, &(p, tau)) in vars.iter().enumerate() {
            var_coeff[tau - 1][q][p] = var.coeff[q][j];
        }
    }

    // Instantaneous matrix: each residual regressed on its order
    // predecessors.
    let mut rank = vec![0usize; d];
    for (pos, &p) in order.iter().enumerate() {
        rank[p] = pos;
    }
    let mut b0 = vec![vec![0.0; d]; d];
    for q in 0..d {
        let preds: Vec<usize> = (0..d).filter(|&p| rank[p] < rank[q]).collect();
        if preds.is_empty() {
            continue;
        }
        let design: Vec<&[f64]> = preds.iter().map(|&p| var.residuals[p].as_slice()).collect();
        if let Ok(fit) = ols(&design, &var.residuals[q]) {
            for (slot, &p) in preds.iter().enumerate() {
                b0[q][p] = fit.coefficients[slot];
            }
        }
    }

    // Structural lagged matrices: (I - B0) M_tau.
    let mut b_lagged = vec![vec![vec![0.0; d]; d]; gamma_max];
    for tau in 0..gamma_max {
        for q in 0..d {
            for p in 0..d {
                let mut acc = var_coeff[tau][q][p];
                for r in 0..d {
                    acc -= b0[q][r] * var_coeff[tau][r][p];
                }
                b_lagged[tau][q][p] = acc;
            }
        }
    }

    VarLingamModel {
        order,
        b0,
        b_lagged,
        var_coeff,
    }
}

pub fn varlingam(panel: &AlignedPanel, cfg: &DiscoveryConfig) -> Result<WindowCausalGraph> {
    varlingam_with_stats(panel, cfg).map(|(g, _)| g)
}

pub(crate) fn varlingam_with_stats(
    panel: &AlignedPanel,
    cfg: &DiscoveryConfig,
) -> Result<(WindowCausalGraph, RunStats)> {
    let frame = LaggedFrame::build(panel, cfg)?;
    let var = fit_var(&frame)?;
    let order = causal_order(&var.residuals)?;
    let mut stats = RunStats::default();
    stats.note(format!("causal order {order:?}"));
    let model = build_model(&frame, &var, order);
    let graph = prune_with_order(&frame, panel, cfg, &model.order)?;
    Ok((graph, stats))
}

/// Final edge selection: per target, an adaptive-lasso fit over the
/// order-admissible contemporaneous regressors plus all lagged regressors;
/// nonzero entries become edges (instantaneous ones directed along the
/// order).
fn prune_with_order(
    frame: &LaggedFrame,
    panel: &AlignedPanel,
    cfg: &DiscoveryConfig,
    order: &[usize],
) -> Result<WindowCausalGraph> {
    let d = frame.d;
    let vars = frame.lagged_vars();
    let mut rank = vec![0usize; d];
    for (pos, &p) in order.iter().enumerate() {
        rank[p] = pos;
    }
    let mut graph = WindowCausalGraph::new(panel.names().to_vec(), cfg.gamma_max)?;
    for q in 0..d {
        let admissible: Vec<usize> = (0..d).filter(|&p| rank[p] < rank[q]).collect();
        let mut design: Vec<&[f64]> = admissible.iter().map(|&p| frame.col(p, 0)).collect();
        design.extend(vars.iter().map(|&(p, tau)| frame.col(p, tau)));
        let fit = adaptive_lasso_bic(&design, frame.col(q, 0))?;
        for idx in fit.support() {
            if idx < admissible.len() {
                graph.set_contemporaneous(admissible[idx], q, EdgeMark::Directed)?;
            } else {
                let (p, tau) = vars[idx - admissible.len()];
                graph.add_lagged_edge(p, tau, q)?;
            }
        }
    }
    graph.validate()?;
    Ok(graph)
}

/// Shared entry for the hybrid methods: VAR residual stage plus ordering.
pub(crate) fn residuals_and_order(frame: &LaggedFrame) -> Result<(VarStage, Vec<usize>)> {
    let var = fit_var(frame)?;
    let order = causal_order(&var.residuals)?;
    Ok((var, order))
}
