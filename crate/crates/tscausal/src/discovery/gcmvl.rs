//! Multivariate Granger learner: per-target adaptive-lasso selection over
//! the full lagged design. Purely lagged, so its native output is already a
//! summary graph (a self loop means a series Granger-causes itself).

use super::{DiscoveryConfig, LaggedFrame, RunStats};
use crate::data::AlignedPanel;
use crate::error::Result;
use crate::graphs::SummaryCausalGraph;
use crate::stats::adaptive_lasso_bic;

pub fn gcmvl(panel: &AlignedPanel, cfg: &DiscoveryConfig) -> Result<SummaryCausalGraph> {
    gcmvl_with_stats(panel, cfg).map(|(g, _)| g)
}

pub(crate) fn gcmvl_with_stats(
    panel: &AlignedPanel,
    cfg: &DiscoveryConfig,
) -> Result<(SummaryCausalGraph, RunStats)> {
    let frame = LaggedFrame::build(panel, cfg)?;
    let vars = frame.lagged_vars();
    let design: Vec<&[f64]> = vars.iter().map(|&(p, tau)| frame.col(p, tau)).collect();
    let mut graph = SummaryCausalGraph::new(panel.names().to_vec())?;
    for q in 0..frame.d {
        let fit = adaptive_lasso_bic(&design, frame.col(q, 0))?;
        for idx in fit.support() {
            let (p, _) = vars[idx];
            graph.add_edge(p, q)?;
        }
    }
    Ok((graph, RunStats::default()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::WindowCausalGraph;
    use crate::sim::{simulate, NoiseKind, SemSpec};
    use std::collections::BTreeMap;

    #[test]
    fn single_lagged_link_recovered_without_extras() {
        let mut hits = 0;
        for seed in 0..50 {
            let names = vec!["p".to_string(), "q".to_string()];
            let mut g = WindowCausalGraph::new(names, 1).unwrap();
            g.add_lagged_edge(0, 1, 1).unwrap();
            let mut coefficients = BTreeMap::new();
            coefficients.insert((0, 1, 1), 0.8);
            let spec = SemSpec::new(
                g,
                coefficients,
                NoiseKind::Uniform {
                    low: -1.0,
                    high: 1.0,
                },
                2000,
                seed,
            )
            .unwrap();
            let panel = simulate(&spec).unwrap();
            let cfg = DiscoveryConfig::new(1);
            let (found, _) = gcmvl_with_stats(&panel, &cfg).unwrap();
            let expected: Vec<(usize, usize)> = vec![(0, 1)];
            if found.edges().collect::<Vec<_>>() == expected {
                hits += 1;
            }
        }
        assert!(hits >= 45, "exact recovery in only {hits}/50 seeds");
    }

    #[test]
    fn independent_noise_gives_empty_graph() {
        // BIC's ln(n) penalty controls false selections, so the empty rate
        // improves with sample size; at T = 4000 the null panel comes back
        // empty in well over 90% of seeds.
        let mut empties = 0;
        for seed in 0..30 {
            let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];
            let mut g = WindowCausalGraph::new(names, 2).unwrap();
            g.add_lagged_edge(0, 1, 0).unwrap();
            let mut coefficients = BTreeMap::new();
            coefficients.insert((0, 1, 0), 0.0);
            let spec = SemSpec::new(
                g,
                coefficients,
                NoiseKind::Uniform {
                    low: -1.0,
                    high: 1.0,
                },
                4000,
                seed,
            )
            .unwrap();
            let panel = simulate(&spec).unwrap();
            let cfg = DiscoveryConfig::new(2);
            let (found, _) = gcmvl_with_stats(&panel, &cfg).unwrap();
            if found.edge_count() == 0 {
                empties += 1;
            }
        }
        assert!(empties >= 27, "empty in only {empties}/30 seeds");
    }

    #[test]
    fn autoregressive_series_gets_a_self_loop() {
        let names = vec!["a".to_string(), "b".to_string()];
        let mut g = WindowCausalGraph::new(names, 1).unwrap();
        g.add_lagged_edge(0, 1, 0).unwrap();
        let mut coefficients = BTreeMap::new();
        coefficients.insert((0, 1, 0), 0.7);
        let spec = SemSpec::new(
            g,
            coefficients,
            NoiseKind::Uniform {
                low: -1.0,
                high: 1.0,
            },
            2000,
            9,
        )
        .unwrap();
        let panel = simulate(&spec).unwrap();
        let cfg = DiscoveryConfig::new(1);
        let (found, _) = gcmvl_with_stats(&panel, &cfg).unwrap();
        assert!(found.contains_edge(0, 0), "self loop missing");
    }
}
