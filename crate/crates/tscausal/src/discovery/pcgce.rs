//! Constraint-based learner over two slices: each series' past (lags 1..
//! gamma_max) is compressed to a single principal-component series, then a
//! PC skeleton runs over the 2d past/present variables under the temporal
//! constraint that past nodes admit no incoming edges.

use std::collections::{BTreeMap, BTreeSet};

use super::orient::OrientationProblem;
use super::pcmci::ContempOrientation;
use super::{for_each_combination, DiscoveryConfig, LaggedFrame, RunStats};
use crate::data::AlignedPanel;
use crate::error::{Error, Result};
use crate::graphs::{EdgeMark, ExtendedSummaryCausalGraph};
use crate::stats::{first_principal_component, partial_correlation_test};

pub fn pcgce(panel: &AlignedPanel, cfg: &DiscoveryConfig) -> Result<ExtendedSummaryCausalGraph> {
    pcgce_with_stats(panel, cfg).map(|(g, _)| g)
}

pub(crate) fn pcgce_with_stats(
    panel: &AlignedPanel,
    cfg: &DiscoveryConfig,
) -> Result<(ExtendedSummaryCausalGraph, RunStats)> {
    pcgce_impl(panel, cfg, ContempOrientation::ColliderMeek)
}

/// Node ids: `p` is the past node of series p, `d + p` its present node.
pub(crate) fn pcgce_impl(
    panel: &AlignedPanel,
    cfg: &DiscoveryConfig,
    orientation: ContempOrientation<'_>,
) -> Result<(ExtendedSummaryCausalGraph, RunStats)> {
    let frame = LaggedFrame::build(panel, cfg)?;
    let d = frame.d;
    let mut stats = RunStats::default();
    let cond_cap = cfg.cond_cap(d).min(frame.rows.saturating_sub(4));

    // One past column per series: the first principal component of its lag
    // matrix, or the lag-1 column itself when gamma_max = 1. Series whose
    // past is constant get no past node.
    let mut past_cols: Vec<Option<Vec<f64>>> = Vec::with_capacity(d);
    for p in 0..d {
        let col = if cfg.gamma_max == 1 {
            let lag = frame.col(p, 1);
            if is_constant(lag) {
                None
            } else {
                Some(lag.to_vec())
            }
        } else {
            let lags: Vec<&[f64]> = (1..=cfg.gamma_max).map(|tau| frame.col(p, tau)).collect();
            match first_principal_component(&lags) {
                Ok(scores) => Some(scores),
                Err(Error::ZeroVariance) => None,
                Err(e) => return Err(e),
            }
        };
        if col.is_none() {
            stats.note(format!("series {p}: constant past slice, no past node"));
        }
        past_cols.push(col);
    }

    let nodes: Vec<usize> = (0..d)
        .filter(|&p| past_cols[p].is_some())
        .chain(d..2 * d)
        .collect();
    let column = |node: usize| -> &[f64] {
        if node < d {
            past_cols[node].as_deref().expect("absent past nodes are not in the skeleton")
        } else {
            frame.col(node - d, 0)
        }
    };

    // PC skeleton over every pair of participating nodes. Past-past pairs
    // are tested and used as conditioning context but never emitted.
    let mut adjacency: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (i, &a) in nodes.iter().enumerate() {
        for &b in &nodes[i + 1..] {
            adjacency.insert((a, b));
        }
    }
    let mut sepsets: BTreeMap<(usize, usize), BTreeSet<usize>> = BTreeMap::new();

    for size in 0..=cond_cap {
        let snapshot = adjacency.clone();
        let mut tested_any = false;
        let mut removals: Vec<((usize, usize), BTreeSet<usize>)> = Vec::new();
        for &(a, b) in &snapshot {
            let mut pool: Vec<usize> = snapshot
                .iter()
                .filter_map(|&(x, y)| {
                    if x == a || x == b {
                        Some(y)
                    } else if y == a || y == b {
                        Some(x)
                    } else {
                        None
                    }
                })
                .filter(|&n| n != a && n != b)
                .collect();
            pool.sort_unstable();
            pool.dedup();
            if pool.len() < size {
                continue;
            }
            tested_any = true;
            let mut separator: Option<BTreeSet<usize>> = None;
            for_each_combination(pool.len(), size, |chosen| {
                let cond: Vec<&[f64]> = chosen.iter().map(|&ci| column(pool[ci])).collect();
                let res = partial_correlation_test(column(a), column(b), &cond, cfg.alpha)
                    .expect("validated sizes");
                stats.ci_tests += 1;
                if res.degenerate {
                    stats.degenerate_tests += 1;
                    stats.note(format!("degenerate test nodes ({a}, {b})"));
                    return true;
                }
                if res.independent {
                    separator = Some(chosen.iter().map(|&ci| pool[ci]).collect());
                    return false;
                }
                true
            });
            if let Some(sep) = separator {
                removals.push(((a, b), sep));
            }
        }
        for ((a, b), sep) in removals {
            adjacency.remove(&(a, b));
            sepsets.insert((a, b), sep);
        }
        if size > 0 && !tested_any {
            break;
        }
    }

    // Split the skeleton into fixed past -> present edges and present pairs.
    let mut past_edges: Vec<(usize, usize)> = Vec::new();
    let mut present_pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for &(a, b) in &adjacency {
        match (a < d, b < d) {
            (true, false) => past_edges.push((a, b - d)),
            (false, true) => past_edges.push((b, a - d)),
            (false, false) => {
                present_pairs.insert((a - d, b - d));
            }
            (true, true) => {} // conditioning context only
        }
    }

    let mut graph = ExtendedSummaryCausalGraph::new(panel.names().to_vec())?;
    for &(p, q) in &past_edges {
        graph.add_past_edge(p, q)?;
    }

    match orientation {
        ContempOrientation::FixedOrder(order) => {
            let mut rank = vec![0usize; d];
            for (pos, &p) in order.iter().enumerate() {
                rank[p] = pos;
            }
            for &(a, b) in &present_pairs {
                let (src, dst) = if rank[a] < rank[b] { (a, b) } else { (b, a) };
                graph.set_present(src, dst, EdgeMark::Directed)?;
            }
        }
        ContempOrientation::ColliderMeek => {
            let mut problem = OrientationProblem::default();
            for &(p, q) in &past_edges {
                problem.fixed.insert((p, d + q));
            }
            for &(a, b) in &present_pairs {
                problem.undirected.insert((d + a, d + b));
            }
            problem.orient_colliders(&nodes, &sepsets);
            problem.meek(&nodes);
            problem.downgrade_cycles();
            for &(a, b) in &problem.directed {
                graph.set_present(a - d, b - d, EdgeMark::Directed)?;
            }
            for &(a, b) in &problem.bidirected {
                graph.set_present(a - d, b - d, EdgeMark::Bidirected)?;
            }
            for &(a, b) in &problem.undirected {
                graph.set_present(a - d, b - d, EdgeMark::Unoriented)?;
            }
        }
    }
    graph.validate()?;
    Ok((graph, stats))
}

fn is_constant(col: &[f64]) -> bool {
    col.windows(2).all(|w| w[0] == w[1])
}
