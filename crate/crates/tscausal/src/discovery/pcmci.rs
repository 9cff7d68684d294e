//! Constraint-based learner over the lagged window: a lagged parent
//! screening phase followed by a PC-style skeleton over instantaneous pairs
//! and surviving lagged edges, then collider/Meek orientation.

use std::collections::{BTreeMap, BTreeSet};

use super::orient::OrientationProblem;
use super::{for_each_combination, DiscoveryConfig, LaggedFrame, RunStats};
use crate::data::AlignedPanel;
use crate::error::Result;
use crate::graphs::{EdgeMark, WindowCausalGraph};
use crate::stats::partial_correlation_test;

/// A removed instantaneous pair together with its separating variables.
type PairRemoval = ((usize, usize), BTreeSet<(usize, usize)>);

/// How surviving instantaneous edges get their direction.
#[derive(Debug, Clone, Copy)]
pub(crate) enum ContempOrientation<'a> {
    /// Unshielded colliders, then Meek rules; leftovers stay unoriented.
    ColliderMeek,
    /// A fixed causal order decides every surviving pair (used by the
    /// hybrid methods); the constraint stage then only deletes edges.
    FixedOrder(&'a [usize]),
}

pub fn pcmci_plus(panel: &AlignedPanel, cfg: &DiscoveryConfig) -> Result<WindowCausalGraph> {
    pcmci_plus_with_stats(panel, cfg).map(|(g, _)| g)
}

pub(crate) fn pcmci_plus_with_stats(
    panel: &AlignedPanel,
    cfg: &DiscoveryConfig,
) -> Result<(WindowCausalGraph, RunStats)> {
    pcmci_impl(panel, cfg, ContempOrientation::ColliderMeek)
}

pub(crate) fn pcmci_impl(
    panel: &AlignedPanel,
    cfg: &DiscoveryConfig,
    orientation: ContempOrientation<'_>,
) -> Result<(WindowCausalGraph, RunStats)> {
    let frame = LaggedFrame::build(panel, cfg)?;
    let d = frame.d;
    let mut stats = RunStats::default();
    // Conditioning sets larger than this leave no residual degrees of
    // freedom for the Fisher-z test.
    let cond_cap = cfg.cond_cap(d).min(frame.rows.saturating_sub(4));

    // Phase 1: per-target lagged parent screening with growing conditioning
    // sets drawn from the strongest surviving co-parents.
    let vars = frame.lagged_vars();
    let mut parents: Vec<BTreeSet<(usize, usize)>> = Vec::with_capacity(d);
    for q in 0..d {
        let y = frame.col(q, 0);
        let mut alive = vec![true; vars.len()];
        let mut strength = vec![0.0f64; vars.len()];
        for (i, &(p, tau)) in vars.iter().enumerate() {
            let res = partial_correlation_test(frame.col(p, tau), y, &[], cfg.alpha)?;
            stats.ci_tests += 1;
            if res.degenerate {
                stats.degenerate_tests += 1;
                stats.note(format!("degenerate test ({p}, {tau}) vs {q} | {{}}"));
                continue;
            }
            strength[i] = res.statistic.abs();
            if res.independent {
                alive[i] = false;
            }
        }
        let mut k = 1;
        loop {
            let alive_idx: Vec<usize> = (0..vars.len()).filter(|&i| alive[i]).collect();
            if k > cond_cap || alive_idx.len() < 2 || k > alive_idx.len() - 1 {
                break;
            }
            let mut next_strength = strength.clone();
            let mut removals = Vec::new();
            for &i in &alive_idx {
                let mut others: Vec<usize> =
                    alive_idx.iter().copied().filter(|&j| j != i).collect();
                others.sort_by(|&a, &b| {
                    strength[b]
                        .partial_cmp(&strength[a])
                        .expect("finite strengths")
                        .then(a.cmp(&b))
                });
                let cond: Vec<&[f64]> = others[..k]
                    .iter()
                    .map(|&j| frame.col(vars[j].0, vars[j].1))
                    .collect();
                let res =
                    partial_correlation_test(frame.col(vars[i].0, vars[i].1), y, &cond, cfg.alpha)?;
                stats.ci_tests += 1;
                if res.degenerate {
                    stats.degenerate_tests += 1;
                    stats.note(format!(
                        "degenerate test {:?} vs {q} at size {k}",
                        vars[i]
                    ));
                    continue;
                }
                next_strength[i] = res.statistic.abs();
                if res.independent {
                    removals.push(i);
                }
            }
            strength = next_strength;
            for i in removals {
                alive[i] = false;
            }
            k += 1;
        }
        parents.push(
            vars.iter()
                .enumerate()
                .filter(|&(i, _)| alive[i])
                .map(|(_, &v)| v)
                .collect(),
        );
    }

    // Phase 2: PC-style skeleton over instantaneous pairs and the surviving
    // lagged edges, conditioning on subsets of each pair's pooled
    // instantaneous adjacencies and lagged parents.
    let mut contemp: BTreeSet<(usize, usize)> = (0..d)
        .flat_map(|a| (a + 1..d).map(move |b| (a, b)))
        .collect();
    let mut lagged: BTreeSet<(usize, usize, usize)> = (0..d)
        .flat_map(|q| parents[q].iter().map(move |&(p, tau)| (p, tau, q)))
        .collect();
    let mut sepsets: BTreeMap<(usize, usize), BTreeSet<(usize, usize)>> = BTreeMap::new();

    // Pool entries are (series, lag) variables; lag 0 entries come from
    // instantaneous adjacency, the rest from surviving lagged parents.
    let neighbor_pool = |contemp: &BTreeSet<(usize, usize)>,
                         lagged: &BTreeSet<(usize, usize, usize)>,
                         a: usize,
                         b: Option<usize>|
     -> BTreeSet<(usize, usize)> {
        let mut pool = BTreeSet::new();
        for &(x, y) in contemp.iter() {
            if x == a && Some(y) != b {
                pool.insert((y, 0));
            } else if y == a && Some(x) != b {
                pool.insert((x, 0));
            }
        }
        for &(p, tau, q) in lagged.iter() {
            if q == a {
                pool.insert((p, tau));
            }
        }
        pool
    };

    for size in 0..=cond_cap {
        let contemp_snapshot = contemp.clone();
        let lagged_snapshot = lagged.clone();
        let mut tested_any = false;
        let mut pair_removals: Vec<PairRemoval> = Vec::new();
        let mut lag_removals: Vec<(usize, usize, usize)> = Vec::new();

        for &(a, b) in &contemp_snapshot {
            let mut pool: Vec<(usize, usize)> =
                neighbor_pool(&contemp_snapshot, &lagged_snapshot, a, Some(b))
                    .union(&neighbor_pool(
                        &contemp_snapshot,
                        &lagged_snapshot,
                        b,
                        Some(a),
                    ))
                    .copied()
                    .collect();
            pool.retain(|&(p, tau)| !(tau == 0 && (p == a || p == b)));
            if pool.len() < size {
                continue;
            }
            tested_any = true;
            let mut separator: Option<BTreeSet<(usize, usize)>> = None;
            for_each_combination(pool.len(), size, |chosen| {
                let cond: Vec<&[f64]> = chosen
                    .iter()
                    .map(|&ci| frame.col(pool[ci].0, pool[ci].1))
                    .collect();
                let res = partial_correlation_test(frame.col(a, 0), frame.col(b, 0), &cond, cfg.alpha)
                    .expect("validated sizes");
                stats.ci_tests += 1;
                if res.degenerate {
                    stats.degenerate_tests += 1;
                    stats.note(format!("degenerate test ({a}, 0) vs ({b}, 0)"));
                    return true;
                }
                if res.independent {
                    separator = Some(chosen.iter().map(|&ci| pool[ci]).collect());
                    return false;
                }
                true
            });
            if let Some(sep) = separator {
                pair_removals.push(((a, b), sep));
            }
        }

        for &(p, tau, q) in &lagged_snapshot {
            let mut pool: Vec<(usize, usize)> =
                neighbor_pool(&contemp_snapshot, &lagged_snapshot, q, None)
                    .into_iter()
                    .collect();
            pool.retain(|&v| v != (p, tau) && !(v.1 == 0 && v.0 == q));
            if pool.len() < size {
                continue;
            }
            tested_any = true;
            let mut remove = false;
            for_each_combination(pool.len(), size, |chosen| {
                let cond: Vec<&[f64]> = chosen
                    .iter()
                    .map(|&ci| frame.col(pool[ci].0, pool[ci].1))
                    .collect();
                let res =
                    partial_correlation_test(frame.col(p, tau), frame.col(q, 0), &cond, cfg.alpha)
                        .expect("validated sizes");
                stats.ci_tests += 1;
                if res.degenerate {
                    stats.degenerate_tests += 1;
                    stats.note(format!("degenerate test ({p}, {tau}) vs ({q}, 0)"));
                    return true;
                }
                if res.independent {
                    remove = true;
                    return false;
                }
                true
            });
            if remove {
                lag_removals.push((p, tau, q));
            }
        }

        for ((a, b), sep) in pair_removals {
            contemp.remove(&(a, b));
            sepsets.insert((a, b), sep);
        }
        for e in lag_removals {
            lagged.remove(&e);
        }
        if size > 0 && !tested_any {
            break;
        }
    }

    // Orientation.
    let names = panel.names().to_vec();
    let mut graph = WindowCausalGraph::new(names, cfg.gamma_max)?;
    for &(p, tau, q) in &lagged {
        graph.add_lagged_edge(p, tau, q)?;
    }
    apply_orientation(&mut graph, &contemp, &sepsets, orientation, d)?;
    graph.validate()?;
    Ok((graph, stats))
}

/// Shared by pcmci and the hybrid variants: orients the surviving
/// instantaneous pairs either by collider/Meek rules (with node-level
/// separating sets) or by an externally supplied causal order.
pub(crate) fn apply_orientation(
    graph: &mut WindowCausalGraph,
    surviving: &BTreeSet<(usize, usize)>,
    sepsets: &BTreeMap<(usize, usize), BTreeSet<(usize, usize)>>,
    orientation: ContempOrientation<'_>,
    d: usize,
) -> Result<()> {
    match orientation {
        ContempOrientation::FixedOrder(order) => {
            let mut rank = vec![0usize; d];
            for (pos, &p) in order.iter().enumerate() {
                rank[p] = pos;
            }
            for &(a, b) in surviving {
                let (src, dst) = if rank[a] < rank[b] { (a, b) } else { (b, a) };
                graph.set_contemporaneous(src, dst, EdgeMark::Directed)?;
            }
        }
        ContempOrientation::ColliderMeek => {
            let mut problem = OrientationProblem {
                undirected: surviving.clone(),
                ..OrientationProblem::default()
            };
            // Node-level separating sets: a series is in the set when its
            // lag-0 copy was conditioned on.
            let node_seps: BTreeMap<(usize, usize), BTreeSet<usize>> = sepsets
                .iter()
                .map(|(&pair, vars)| {
                    let nodes = vars
                        .iter()
                        .filter(|&&(_, tau)| tau == 0)
                        .map(|&(p, _)| p)
                        .collect();
                    (pair, nodes)
                })
                .collect();
            let nodes: Vec<usize> = (0..d).collect();
            problem.orient_colliders(&nodes, &node_seps);
            problem.meek(&nodes);
            problem.downgrade_cycles();
            for &(a, b) in &problem.directed {
                graph.set_contemporaneous(a, b, EdgeMark::Directed)?;
            }
            for &(a, b) in &problem.bidirected {
                graph.set_contemporaneous(a, b, EdgeMark::Bidirected)?;
            }
            for &(a, b) in &problem.undirected {
                graph.set_contemporaneous(a, b, EdgeMark::Unoriented)?;
            }
        }
    }
    Ok(())
}
