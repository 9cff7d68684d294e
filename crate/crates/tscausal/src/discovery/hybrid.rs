//! Hybrid compositions of the noise-based and constraint-based stages.
//!
//! The forward hybrids run the residual-ordering stage first and hand the
//! resulting causal order to a constraint-based learner that then only
//! deletes edges. The backward hybrids run the constraint-based learner
//! first and use the residual direction measure to resolve whatever
//! instantaneous edges it left unoriented.

use super::pcgce::pcgce_impl;
use super::pcmci::{pcmci_impl, ContempOrientation};
use super::varlingam::{fit_var, residuals_and_order};
use super::{DiscoveryConfig, LaggedFrame, NativeGraph, RunStats};
use crate::data::AlignedPanel;
use crate::error::{Error, Result};
use crate::graphs::EdgeMark;
use crate::stats::pairwise_direction_measure;

/// Which constraint-based stage a hybrid uses: `W` pairs with the windowed
/// learner, `E` with the extended-summary learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HybridVariant {
    W,
    E,
}

/// Direction-measure ties below this magnitude leave an edge unoriented.
const TIE_EPS: f64 = 1e-12;

/// Noise-based stage first: the VAR-residual causal order pre-orients every
/// instantaneous pair that survives the constraint-based pruning stage.
pub fn nbcb(panel: &AlignedPanel, cfg: &DiscoveryConfig, variant: HybridVariant) -> Result<NativeGraph> {
    nbcb_with_stats(panel, cfg, variant).map(|(g, _)| g)
}

pub(crate) fn nbcb_with_stats(
    panel: &AlignedPanel,
    cfg: &DiscoveryConfig,
    variant: HybridVariant,
) -> Result<(NativeGraph, RunStats)> {
    let frame = LaggedFrame::build(panel, cfg)?;
    let (_, order) = residuals_and_order(&frame)?;
    let (native, mut stats) = match variant {
        HybridVariant::W => {
            let (g, stats) = pcmci_impl(panel, cfg, ContempOrientation::FixedOrder(&order))?;
            (NativeGraph::Window(g), stats)
        }
        HybridVariant::E => {
            let (g, stats) = pcgce_impl(panel, cfg, ContempOrientation::FixedOrder(&order))?;
            (NativeGraph::Extended(g), stats)
        }
    };
    stats.note(format!("causal order {order:?}"));
    Ok((native, stats))
}

/// Constraint-based stage first: unoriented (and conflicted) instantaneous
/// edges are then oriented by the pairwise direction measure on the VAR
/// residuals of the two endpoints. Orientations that would close a directed
/// cycle are left unoriented.
pub fn cbnb(panel: &AlignedPanel, cfg: &DiscoveryConfig, variant: HybridVariant) -> Result<NativeGraph> {
    cbnb_with_stats(panel, cfg, variant).map(|(g, _)| g)
}

pub(crate) fn cbnb_with_stats(
    panel: &AlignedPanel,
    cfg: &DiscoveryConfig,
    variant: HybridVariant,
) -> Result<(NativeGraph, RunStats)> {
    let frame = LaggedFrame::build(panel, cfg)?;
    match variant {
        HybridVariant::W => {
            let (mut g, mut stats) = pcmci_impl(panel, cfg, ContempOrientation::ColliderMeek)?;
            let unresolved: Vec<(usize, usize, EdgeMark)> = g
                .contemporaneous_edges()
                .filter(|&(_, _, m)| m != EdgeMark::Directed)
                .collect();
            if !unresolved.is_empty() {
                let var = fit_var(&frame)?;
                let directed: Vec<(usize, usize)> = g
                    .contemporaneous_edges()
                    .filter(|&(_, _, m)| m == EdgeMark::Directed)
                    .map(|(a, b, _)| (a, b))
                    .collect();
                let mut oriented = directed;
                for (a, b, _) in unresolved {
                    match decide(&var.residuals[a], &var.residuals[b], a, b, &mut oriented, &mut stats)? {
                        Some((src, dst)) => g.set_contemporaneous(src, dst, EdgeMark::Directed)?,
                        None => g.set_contemporaneous(a, b, EdgeMark::Unoriented)?,
                    }
                }
            }
            g.validate()?;
            Ok((NativeGraph::Window(g), stats))
        }
        HybridVariant::E => {
            let (mut g, mut stats) = pcgce_impl(panel, cfg, ContempOrientation::ColliderMeek)?;
            let unresolved: Vec<(usize, usize, EdgeMark)> = g
                .present_edges()
                .filter(|&(_, _, m)| m != EdgeMark::Directed)
                .collect();
            if !unresolved.is_empty() {
                let var = fit_var(&frame)?;
                let directed: Vec<(usize, usize)> = g
                    .present_edges()
                    .filter(|&(_, _, m)| m == EdgeMark::Directed)
                    .map(|(a, b, _)| (a, b))
                    .collect();
                let mut oriented = directed;
                for (a, b, _) in unresolved {
                    match decide(&var.residuals[a], &var.residuals[b], a, b, &mut oriented, &mut stats)? {
                        Some((src, dst)) => g.set_present(src, dst, EdgeMark::Directed)?,
                        None => g.set_present(a, b, EdgeMark::Unoriented)?,
                    }
                }
            }
            g.validate()?;
            Ok((NativeGraph::Extended(g), stats))
        }
    }
}

/// Orients one unresolved pair by the residual direction measure, refusing
/// ties and orientations that would close a cycle with edges oriented so
/// far.
fn decide(
    res_a: &[f64],
    res_b: &[f64],
    a: usize,
    b: usize,
    oriented: &mut Vec<(usize, usize)>,
    stats: &mut RunStats,
) -> Result<Option<(usize, usize)>> {
    let score = match pairwise_direction_measure(res_a, res_b) {
        Ok(s) => s,
        Err(Error::ConstantInput) => {
            stats.note(format!("constant residual on pair ({a}, {b})"));
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    if score.abs() < TIE_EPS {
        stats.note(format!("direction tie on pair ({a}, {b})"));
        return Ok(None);
    }
    let (src, dst) = if score > 0.0 { (a, b) } else { (b, a) };
    if creates_cycle(oriented, src, dst) {
        stats.note(format!("orientation {src} -> {dst} skipped: cycle"));
        return Ok(None);
    }
    oriented.push((src, dst));
    Ok(Some((src, dst)))
}

fn creates_cycle(edges: &[(usize, usize)], src: usize, dst: usize) -> bool {
    let mut stack = vec![dst];
    let mut seen = Vec::new();
    while let Some(v) = stack.pop() {
        if v == src {
            return true;
        }
        if seen.contains(&v) {
            continue;
        }
        seen.push(v);
        for &(s, t) in edges {
            if s == v {
                stack.push(t);
            }
        }
    }
    false
}
