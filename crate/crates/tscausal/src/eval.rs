//! Oriented-edge scoring of summary causal graphs and benchmark report
//! tabulation.
//!
//! Edges are compared as ordered name pairs, so an inferred mutual pair
//! judged against a one-way truth edge counts one true positive plus one
//! false positive. Self loops are excluded from scoring by default; a flag
//! re-includes them for sensitivity studies.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::discovery::MethodId;
use crate::error::{Error, Result};
use crate::graphs::SummaryCausalGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeConfusion {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub include_self_loops: bool,
}

impl EdgeConfusion {
    pub fn f1(&self) -> f64 {
        f1(self)
    }
}

/// `2 tp / (2 tp + fp + fn)`, with the empty 0/0 case defined as 0.
pub fn f1(c: &EdgeConfusion) -> f64 {
    let denom = 2 * c.true_positives + c.false_positives + c.false_negatives;
    if denom == 0 {
        0.0
    } else {
        2.0 * c.true_positives as f64 / denom as f64
    }
}

/// Confusion counts of `inferred` against `truth` over ordered edge pairs.
/// The two graphs must cover the same node names (in any order).
pub fn edge_confusion(
    truth: &SummaryCausalGraph,
    inferred: &SummaryCausalGraph,
    include_self_loops: bool,
) -> Result<EdgeConfusion> {
    let truth_nodes: BTreeSet<&String> = truth.names().iter().collect();
    let inferred_nodes: BTreeSet<&String> = inferred.names().iter().collect();
    if truth_nodes != inferred_nodes {
        return Err(Error::NodeSetMismatch {
            only_truth: truth_nodes
                .difference(&inferred_nodes)
                .map(|s| s.to_string())
                .collect(),
            only_inferred: inferred_nodes
                .difference(&truth_nodes)
                .map(|s| s.to_string())
                .collect(),
        });
    }
    let scored = |g: &SummaryCausalGraph| -> BTreeSet<(String, String)> {
        g.edges_by_name()
            .into_iter()
            .filter(|(a, b)| include_self_loops || a != b)
            .collect()
    };
    let t = scored(truth);
    let i = scored(inferred);
    Ok(EdgeConfusion {
        true_positives: t.intersection(&i).count(),
        false_positives: i.difference(&t).count(),
        false_negatives: t.difference(&i).count(),
        include_self_loops,
    })
}

/// One benchmark cell: a (method, dataset, gamma_max) run. Error rows carry
/// the failure message and no counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: MethodId,
    pub dataset: String,
    pub gamma_max: usize,
    pub alpha: f64,
    pub confusion: Option<EdgeConfusion>,
    pub f1: Option<f64>,
    pub runtime_ms: u64,
    pub graph_paths: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub rows: Vec<ReportRow>,
}

pub const REPORT_HEADER: &str = "method,dataset,gamma_max,alpha,tp,fp,fn,f1,runtime_ms";

impl BenchReport {
    /// Orders rows deterministically: datasets in first-appearance order,
    /// then gamma_max in first-appearance order, then methods in enum order.
    pub fn tabulate(mut rows: Vec<ReportRow>) -> BenchReport {
        let mut dataset_rank: Vec<String> = Vec::new();
        let mut gamma_rank: Vec<usize> = Vec::new();
        for row in &rows {
            if !dataset_rank.contains(&row.dataset) {
                dataset_rank.push(row.dataset.clone());
            }
            if !gamma_rank.contains(&row.gamma_max) {
                gamma_rank.push(row.gamma_max);
            }
        }
        rows.sort_by_key(|r| {
            (
                dataset_rank.iter().position(|d| *d == r.dataset),
                gamma_rank.iter().position(|g| *g == r.gamma_max),
                MethodId::ALL.iter().position(|m| *m == r.method),
            )
        });
        BenchReport { rows }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            let (tp, fp, fn_, f1) = match (&r.confusion, r.f1) {
                (Some(c), Some(f)) => (
                    c.true_positives.to_string(),
                    c.false_positives.to_string(),
                    c.false_negatives.to_string(),
                    format!("{f}"),
                ),
                _ => (String::new(), String::new(), String::new(), String::new()),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{tp},{fp},{fn_},{f1},{}",
                r.method, r.dataset, r.gamma_max, r.alpha, r.runtime_ms
            );
        }
        out
    }

    /// Parses a CSV produced by [`BenchReport::to_csv`]. Graph paths and
    /// error messages are not part of the CSV schema and come back empty.
    pub fn parse_csv(text: &str) -> Result<BenchReport> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h == REPORT_HEADER => {}
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unexpected report header {other:?}"
                )))
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 9 {
                return Err(Error::InvalidConfig(format!(
                    "report line {} has {} fields",
                    i + 2,
                    fields.len()
                )));
            }
            let parse = |s: &str, what: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| Error::InvalidConfig(format!("bad {what} '{s}'")))
            };
            let confusion = if fields[4].is_empty() {
                None
            } else {
                Some(EdgeConfusion {
                    true_positives: parse(fields[4], "tp")? as usize,
                    false_positives: parse(fields[5], "fp")? as usize,
                    false_negatives: parse(fields[6], "fn")? as usize,
                    include_self_loops: false,
                })
            };
            let f1 = if fields[7].is_empty() {
                None
            } else {
                Some(parse(fields[7], "f1")?)
            };
            rows.push(ReportRow {
                method: fields[0].parse()?,
                dataset: fields[1].to_string(),
                gamma_max: parse(fields[2], "gamma_max")? as usize,
                alpha: parse(fields[3], "alpha")?,
                confusion,
                f1,
                runtime_ms: parse(fields[8], "runtime_ms")? as u64,
                graph_paths: Vec::new(),
                error: None,
            });
        }
        Ok(BenchReport { rows })
    }

    /// Fixed-width text rendering for terminals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:<16} {:>9} {:>6} {:>5} {:>5} {:>5} {:>7} {:>10}",
            "method", "dataset", "gamma_max", "alpha", "tp", "fp", "fn", "f1", "runtime_ms"
        );
        for r in &self.rows {
            match (&r.confusion, r.f1) {
                (Some(c), Some(f)) => {
                    let _ = writeln!(
                        out,
                        "{:<10} {:<16} {:>9} {:>6} {:>5} {:>5} {:>5} {:>7.3} {:>10}",
                        r.method.to_string(),
                        r.dataset,
                        r.gamma_max,
                        r.alpha,
                        c.true_positives,
                        c.false_positives,
                        c.false_negatives,
                        f,
                        r.runtime_ms
                    );
                }
                _ => {
                    let _ = writeln!(
                        out,
                        "{:<10} {:<16} {:>9} {:>6} error: {}",
                        r.method.to_string(),
                        r.dataset,
                        r.gamma_max,
                        r.alpha,
                        r.error.as_deref().unwrap_or("unknown")
                    );
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(names: &[&str], edges: &[(&str, &str)]) -> SummaryCausalGraph {
        let mut g =
            SummaryCausalGraph::new(names.iter().map(|s| s.to_string()).collect()).unwrap();
        for (a, b) in edges {
            g.add_edge_by_name(a, b).unwrap();
        }
        g
    }

    #[test]
    fn basic_confusion_counts() {
        let truth = graph(&["A", "B", "C"], &[("A", "B"), ("B", "C")]);
        let inferred = graph(&["A", "B", "C"], &[("A", "B"), ("C", "B")]);
        let c = edge_confusion(&truth, &inferred, false).unwrap();
        assert_eq!(
            (c.true_positives, c.false_positives, c.false_negatives),
            (1, 1, 1)
        );
        assert!((f1(&c) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mutual_pair_against_one_way_truth_scores_tp_plus_fp() {
        let truth = graph(&["A", "B"], &[("A", "B")]);
        let inferred = graph(&["A", "B"], &[("A", "B"), ("B", "A")]);
        let c = edge_confusion(&truth, &inferred, false).unwrap();
        assert_eq!(
            (c.true_positives, c.false_positives, c.false_negatives),
            (1, 1, 0)
        );
    }

    #[test]
    fn self_loops_are_excluded_by_default() {
        let truth = graph(
            &["A", "B"],
            &[("A", "B"), ("A", "A"), ("B", "B")],
        );
        let only_self = graph(&["A", "B"], &[("A", "A"), ("B", "B")]);
        let c = edge_confusion(&truth, &only_self, false).unwrap();
        assert_eq!(c.true_positives, 0);
        assert_eq!(f1(&c), 0.0);
        // Re-including them changes the verdict.
        let c = edge_confusion(&truth, &only_self, true).unwrap();
        assert_eq!(c.true_positives, 2);
    }

    #[test]
    fn node_set_mismatch_lists_the_difference() {
        let truth = graph(&["A", "B"], &[]);
        let inferred = graph(&["A", "C"], &[]);
        match edge_confusion(&truth, &inferred, false) {
            Err(Error::NodeSetMismatch {
                only_truth,
                only_inferred,
            }) => {
                assert_eq!(only_truth, vec!["B"]);
                assert_eq!(only_inferred, vec!["C"]);
            }
            other => panic!("expected mismatch, got {other:?}"),
        }
    }

    #[test]
    fn node_order_does_not_matter() {
        let truth = graph(&["A", "B"], &[("A", "B")]);
        let inferred = graph(&["B", "A"], &[("A", "B")]);
        let c = edge_confusion(&truth, &inferred, false).unwrap();
        assert_eq!(c.true_positives, 1);
        assert_eq!(c.false_positives, 0);
    }

    #[test]
    fn f1_edge_cases() {
        let c = |tp, fp, fn_| EdgeConfusion {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            include_self_loops: false,
        };
        assert_eq!(f1(&c(0, 0, 5)), 0.0);
        assert_eq!(f1(&c(7, 0, 0)), 1.0);
        assert_eq!(f1(&c(0, 0, 0)), 0.0);
        // Symmetric in fp/fn swaps.
        assert_eq!(f1(&c(3, 1, 4)), f1(&c(3, 4, 1)));
    }

    #[test]
    fn f1_monotone_under_single_edge_changes() {
        // Enumerate all graphs over 3 nodes (no self loops) as truth and
        // inferred; adding one correct edge never lowers F1, adding one
        // incorrect edge never raises it.
        let pairs: Vec<(usize, usize)> = (0..3)
            .flat_map(|a| (0..3).filter(move |&b| b != a).map(move |b| (a, b)))
            .collect();
        let names: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let build = |mask: u32| -> SummaryCausalGraph {
            let mut g = SummaryCausalGraph::new(names.clone()).unwrap();
            for (i, &(a, b)) in pairs.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    g.add_edge(a, b).unwrap();
                }
            }
            g
        };
        for truth_mask in 0u32..64 {
            let truth = build(truth_mask);
            for inf_mask in 0u32..64 {
                let inferred = build(inf_mask);
                let base = f1(&edge_confusion(&truth, &inferred, false).unwrap());
                for (i, _) in pairs.iter().enumerate() {
                    if inf_mask & (1 << i) != 0 {
                        continue;
                    }
                    let bigger = build(inf_mask | (1 << i));
                    let with_edge = f1(&edge_confusion(&truth, &bigger, false).unwrap());
                    if truth_mask & (1 << i) != 0 {
                        assert!(with_edge >= base - 1e-12, "correct edge lowered f1");
                    } else {
                        assert!(with_edge <= base + 1e-12, "incorrect edge raised f1");
                    }
                }
            }
        }
    }

    #[test]
    fn identical_graphs_score_perfectly() {
        let g = graph(&["A", "B", "C"], &[("A", "B"), ("B", "C"), ("C", "A")]);
        let c = edge_confusion(&g, &g, false).unwrap();
        assert_eq!(c.false_positives, 0);
        assert_eq!(c.false_negatives, 0);
        assert_eq!(f1(&c), 1.0);
    }

    fn sample_rows() -> Vec<ReportRow> {
        vec![
            ReportRow {
                method: MethodId::PcmciPlus,
                dataset: "web".into(),
                gamma_max: 15,
                alpha: 0.05,
                confusion: Some(EdgeConfusion {
                    true_positives: 3,
                    false_positives: 2,
                    false_negatives: 4,
                    include_self_loops: false,
                }),
                f1: Some(6.0 / 13.0),
                runtime_ms: 102,
                graph_paths: Vec::new(),
                error: None,
            },
            ReportRow {
                method: MethodId::Gcmvl,
                dataset: "web".into(),
                gamma_max: 15,
                alpha: 0.05,
                confusion: None,
                f1: None,
                runtime_ms: 11,
                graph_paths: Vec::new(),
                error: Some("rank-deficient design".into()),
            },
        ]
    }

    #[test]
    fn tabulate_orders_methods_canonically() {
        let report = BenchReport::tabulate(sample_rows());
        assert_eq!(report.rows[0].method, MethodId::Gcmvl);
        assert_eq!(report.rows[1].method, MethodId::PcmciPlus);
    }

    #[test]
    fn csv_roundtrip_preserves_rows() {
        let report = BenchReport::tabulate(sample_rows());
        let csv = report.to_csv();
        let parsed = BenchReport::parse_csv(&csv).unwrap();
        assert_eq!(parsed.rows.len(), report.rows.len());
        for (a, b) in report.rows.iter().zip(&parsed.rows) {
            assert_eq!(a.method, b.method);
            assert_eq!(a.dataset, b.dataset);
            assert_eq!(a.gamma_max, b.gamma_max);
            assert_eq!(a.alpha, b.alpha);
            assert_eq!(a.confusion, b.confusion);
            assert_eq!(a.f1, b.f1);
            assert_eq!(a.runtime_ms, b.runtime_ms);
        }
    }

    #[test]
    fn empty_report_is_a_bare_header() {
        let report = BenchReport::tabulate(Vec::new());
        assert_eq!(report.to_csv(), format!("{REPORT_HEADER}\n"));
        assert!(BenchReport::parse_csv(&report.to_csv())
            .unwrap()
            .rows
            .is_empty());
    }

    #[test]
    fn two_by_two_grid_has_four_rows() {
        let mut rows = Vec::new();
        for dataset in ["d1", "d2"] {
            for method in [MethodId::Gcmvl, MethodId::Pcgce] {
                rows.push(ReportRow {
                    method,
                    dataset: dataset.into(),
                    gamma_max: 3,
                    alpha: 0.05,
                    confusion: Some(EdgeConfusion {
                        true_positives: 1,
                        false_positives: 0,
                        false_negatives: 0,
                        include_self_loops: false,
                    }),
                    f1: Some(1.0),
                    runtime_ms: 1,
                    graph_paths: Vec::new(),
                    error: None,
                });
            }
        }
        assert_eq!(BenchReport::tabulate(rows).rows.len(), 4);
    }
}
