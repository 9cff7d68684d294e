//! Resampling of raw multi-rate series onto a shared uniform grid, plus
//! missing-value interpolation and the maximal-lag rule.
//!
//! Two strategies are provided. Strategy 1 takes the raw value closest in
//! time to each grid point. Strategy 2 integrates each series into a
//! cumulative sum and reads off windowed averages, which smooths instead of
//! sampling. Both default the target period to the coarsest (largest)
//! sampling period found among the series, i.e. the lowest sampling rate.
//!
//! Grid timestamps are pure integer arithmetic: row `r` is exactly
//! `start + r * period` with no float drift.

use crate::data::{estimate_sampling_period, AlignedPanel, RawPoint, TimeSeriesSet};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_DELAY_MS: i64 = 15 * 60 * 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Strategy1,
    Strategy2,
}

#[derive(Debug, Clone)]
pub struct AlignmentSpec {
    pub strategy: Strategy,
    /// Target sampling period; defaults to the largest per-series median gap.
    pub target_period_ms: Option<i64>,
    /// Fill missing cells by linear interpolation after resampling.
    pub interpolate: bool,
}

impl Default for AlignmentSpec {
    fn default() -> Self {
        AlignmentSpec {
            strategy: Strategy::Strategy1,
            target_period_ms: None,
            interpolate: true,
        }
    }
}

/// Maximal causal lag implied by a sampling period: `floor(max_delay /
/// period)`, at least 1. The default delay bound is 15 minutes.
pub fn gamma_max_rule(period_ms: i64, max_delay_ms: i64) -> usize {
    if period_ms <= 0 {
        return 1;
    }
    ((max_delay_ms / period_ms).max(1)) as usize
}

pub fn align(set: &TimeSeriesSet, spec: &AlignmentSpec) -> Result<AlignedPanel> {
    match spec.strategy {
        Strategy::Strategy1 => align_strategy1(set, spec),
        Strategy::Strategy2 => align_strategy2(set, spec),
    }
}

fn observed(points: &[RawPoint]) -> Vec<(i64, f64)> {
    points
        .iter()
        .filter_map(|p| p.value.map(|v| (p.timestamp_ms, v)))
        .collect()
}

struct Grid {
    start: i64,
    period: i64,
    rows: usize,
}

impl Grid {
    fn time(&self, row: usize) -> i64 {
        self.start + row as i64 * self.period
    }
}

/// Intersection span of all series' observed ranges, gridded at `period`.
fn build_grid(set: &TimeSeriesSet, period: i64) -> Result<Grid> {
    let mut latest_start: Option<(&str, i64)> = None;
    let mut earliest_end: Option<(&str, i64)> = None;
    for (name, points) in set.iter() {
        let obs = observed(points);
        if obs.is_empty() {
            return Err(Error::SeriesTooShort {
                series: name.to_string(),
                len: 0,
                need: 1,
            });
        }
        let first = obs.first().unwrap().0;
        let last = obs.last().unwrap().0;
        if latest_start.is_none_or(|(_, t)| first > t) {
            latest_start = Some((name, first));
        }
        if earliest_end.is_none_or(|(_, t)| last < t) {
            earliest_end = Some((name, last));
        }
    }
    let (start_name, start) = latest_start.ok_or_else(|| Error::EmptyInput("no series".into()))?;
    let (end_name, end) = earliest_end.unwrap();
    if start > end {
        return Err(Error::DisjointSpans {
            latest_start: start_name.to_string(),
            earliest_end: end_name.to_string(),
        });
    }
    let rows = ((end - start) / period + 1) as usize;
    if rows < 2 {
        return Err(Error::EmptyInput(format!(
            "overlapping span [{start}, {end}] ms holds fewer than 2 grid rows at period {period}"
        )));
    }
    Ok(Grid {
        start,
        period,
        rows,
    })
}

fn resolve_period(set: &TimeSeriesSet, spec: &AlignmentSpec) -> Result<i64> {
    if let Some(p) = spec.target_period_ms {
        if p <= 0 {
            return Err(Error::InvalidConfig(format!(
                "target period must be positive, got {p}"
            )));
        }
        return Ok(p);
    }
    let mut best: Option<i64> = None;
    for (name, points) in set.iter() {
        let est = estimate_sampling_period(points).map_err(|_| Error::SeriesTooShort {
            series: name.to_string(),
            len: observed(points).len(),
            need: 2,
        })?;
        best = Some(best.map_or(est, |b| b.max(est)));
    }
    best.ok_or_else(|| Error::EmptyInput("no series to align".into()))
}

/// Nearest-value resampling. Each cell takes the observed raw point closest
/// to the grid time; equidistant neighbours break toward the earlier point.
/// Cells with no raw point within half a period on either side are missing.
pub fn align_strategy1(set: &TimeSeriesSet, spec: &AlignmentSpec) -> Result<AlignedPanel> {
    let period = resolve_period(set, spec)?;
    let grid = build_grid(set, period)?;

    let mut names = Vec::new();
    let mut columns = Vec::new();
    let mut missing = Vec::new();
    for (name, points) in set.iter() {
        let obs = observed(points);
        let mut col = vec![0.0; grid.rows];
        let mut miss = vec![false; grid.rows];
        for r in 0..grid.rows {
            let g = grid.time(r);
            let idx = obs.partition_point(|&(t, _)| t < g);
            let before = idx.checked_sub(1).map(|i| obs[i]);
            let after = obs.get(idx).copied();
            let chosen = match (before, after) {
                (Some((tb, vb)), Some((ta, va))) => {
                    if g - tb <= ta - g {
                        Some((tb, vb))
                    } else {
                        Some((ta, va))
                    }
                }
                (Some(p), None) | (None, Some(p)) => Some(p),
                (None, None) => None,
            };
            match chosen {
                Some((t, v)) if 2 * (t - g).abs() <= period => col[r] = v,
                _ => miss[r] = true,
            }
        }
        names.push(name.to_string());
        columns.push(col);
        missing.push(miss);
    }
    let panel = AlignedPanel::new(names, period, grid.start, columns, missing)?;
    if spec.interpolate && panel.any_missing() {
        interpolate_missing(&panel)
    } else {
        Ok(panel)
    }
}

/// Integral resampling. Each raw value is accumulated into a running sum
/// `s_i = s_(i-1) + x_i * (t_i - t_(i-1))` anchored at `s_0 = 0`; the
/// resampled value at a grid time is the windowed average
/// `(s_i - s_(i-n)) / (t_i - t_(i-n))` where `t_i` is the first raw
/// timestamp at or after the grid time and `n` is the number of raw points
/// per target step. Leading cells without a full window are missing.
pub fn align_strategy2(set: &TimeSeriesSet, spec: &AlignmentSpec) -> Result<AlignedPanel> {
    let period = resolve_period(set, spec)?;
    let grid = build_grid(set, period)?;

    let mut names = Vec::new();
    let mut columns = Vec::new();
    let mut missing = Vec::new();
    for (name, points) in set.iter() {
        let obs = observed(points);
        let est = estimate_sampling_period(points).map_err(|_| Error::SeriesTooShort {
            series: name.to_string(),
            len: obs.len(),
            need: 2,
        })?;
        let steps = ((period as f64 / est as f64).round() as usize).max(1);
        if obs.len() < steps + 1 {
            return Err(Error::SeriesTooShort {
                series: name.to_string(),
                len: obs.len(),
                need: steps + 1,
            });
        }
        let mut cumulative = vec![0.0; obs.len()];
        for i in 1..obs.len() {
            cumulative[i] = cumulative[i - 1] + obs[i].1 * (obs[i].0 - obs[i - 1].0) as f64;
        }
        let mut col = vec![0.0; grid.rows];
        let mut miss = vec![false; grid.rows];
        for r in 0..grid.rows {
            let g = grid.time(r);
            let i = obs.partition_point(|&(t, _)| t < g);
            if i >= obs.len() || i < steps {
                miss[r] = true;
                continue;
            }
            let (ti, _) = obs[i];
            let (tn, _) = obs[i - steps];
            if ti == tn {
                return Err(Error::DegenerateWindow {
                    series: name.to_string(),
                    row: r,
                });
            }
            col[r] = (cumulative[i] - cumulative[i - steps]) / (ti - tn) as f64;
        }
        names.push(name.to_string());
        columns.push(col);
        missing.push(miss);
    }
    let panel = AlignedPanel::new(names, period, grid.start, columns, missing)?;
    if spec.interpolate && panel.any_missing() {
        interpolate_missing(&panel)
    } else {
        Ok(panel)
    }
}

/// Fills masked cells: interior runs linearly between the nearest observed
/// neighbours, leading and trailing runs by nearest-value extension. Errors
/// when a column has no observed cell at all.
pub fn interpolate_missing(panel: &AlignedPanel) -> Result<AlignedPanel> {
    let rows = panel.n_rows();
    let mut out = panel.clone();
    for c in 0..panel.n_cols() {
        let miss = panel.column_missing(c);
        if !miss.iter().any(|&m| m) {
            continue;
        }
        let col = panel.column(c);
        let known: Vec<usize> = (0..rows).filter(|&r| !miss[r]).collect();
        if known.is_empty() {
            return Err(Error::AllMissing { column: c });
        }
        let mut filled = col.to_vec();
        for r in 0..rows {
            if !miss[r] {
                continue;
            }
            let next = known.partition_point(|&k| k < r);
            let prev = next.checked_sub(1).map(|i| known[i]);
            let next = known.get(next).copied();
            filled[r] = match (prev, next) {
                (Some(lo), Some(hi)) => {
                    let w = (r - lo) as f64 / (hi - lo) as f64;
                    col[lo] + (col[hi] - col[lo]) * w
                }
                (Some(lo), None) => col[lo],
                (None, Some(hi)) => col[hi],
                (None, None) => unreachable!("known is non-empty"),
            };
        }
        out.replace_column(c, filled, vec![false; rows]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn set_from(series: &[(&str, &[(i64, f64)])]) -> TimeSeriesSet {
        let mut map = BTreeMap::new();
        for (name, pts) in series {
            map.insert(
                name.to_string(),
                pts.iter()
                    .map(|&(t, v)| RawPoint {
                        timestamp_ms: t,
                        value: Some(v),
                    })
                    .collect(),
            );
        }
        TimeSeriesSet::new(map).unwrap()
    }

    #[test]
    fn strategy1_is_identity_on_grid_aligned_input() {
        let values: Vec<(i64, f64)> = (0..50).map(|i| (i * 60000, (i as f64).sin())).collect();
        let set = set_from(&[("a", &values), ("b", &values)]);
        let panel = align_strategy1(&set, &AlignmentSpec::default()).unwrap();
        assert_eq!(panel.period_ms(), 60000);
        assert_eq!(panel.n_rows(), 50);
        for (r, &(_, v)) in values.iter().enumerate() {
            assert_eq!(panel.value(r, 0), v);
            assert_eq!(panel.value(r, 1), v);
        }
    }

    #[test]
    fn strategy1_takes_nearest_point() {
        let set = set_from(&[("a", &[(0, 1.0), (59_000, 2.0), (121_000, 3.0)])]);
        let spec = AlignmentSpec {
            target_period_ms: Some(60_000),
            interpolate: false,
            ..AlignmentSpec::default()
        };
        let panel = align_strategy1(&set, &spec).unwrap();
        assert_eq!(panel.n_rows(), 3);
        // Exhaustive-distance oracle for each grid time.
        let raw = [(0i64, 1.0), (59_000, 2.0), (121_000, 3.0)];
        for r in 0..3 {
            let g = panel.timestamp(r);
            let (_, expect) = raw
                .iter()
                .copied()
                .min_by_key(|&(t, _)| ((t - g).abs(), t))
                .unwrap();
            assert_eq!(panel.value(r, 0), expect, "grid row {r}");
        }
    }

    #[test]
    fn strategy1_ties_break_toward_earlier_point() {
        let set = set_from(&[("a", &[(-500, 10.0), (500, 20.0), (1500, 30.0)])]);
        let spec = AlignmentSpec {
            target_period_ms: Some(1000),
            interpolate: false,
            ..AlignmentSpec::default()
        };
        let panel = align_strategy1(&set, &spec).unwrap();
        // Grid starts at -500 (first observed); g = 500 is equidistant
        // between the points at 0.. wait, points are -500/500/1500 and the
        // grid is -500/500/1500, all exact hits.
        assert_eq!(panel.timestamp(0), -500);
        assert_eq!(panel.value(0, 0), 10.0);

        // A real tie: grid time 0 sits exactly between -500 and 500.
        let set = set_from(&[("a", &[(-1000, 1.0), (-500, 10.0), (500, 20.0), (1000, 2.0)])]);
        let spec = AlignmentSpec {
            target_period_ms: Some(1000),
            interpolate: false,
            ..AlignmentSpec::default()
        };
        let panel = align_strategy1(&set, &spec).unwrap();
        assert_eq!(panel.timestamp(1), 0);
        assert_eq!(panel.value(1, 0), 10.0, "tie breaks toward earlier point");
    }

    #[test]
    fn mixed_rate_series_default_to_coarsest_period() {
        let fast: Vec<(i64, f64)> = (0..100).map(|i| (i * 60_000, i as f64)).collect();
        let slow: Vec<(i64, f64)> = (0..20).map(|i| (i * 300_000, i as f64)).collect();
        let set = set_from(&[("fast", &fast), ("slow", &slow)]);
        let panel = align_strategy1(&set, &AlignmentSpec::default()).unwrap();
        assert_eq!(panel.period_ms(), 300_000);
        assert_eq!(panel.n_cols(), 2);
    }

    #[test]
    fn disjoint_spans_error_names_series() {
        let set = set_from(&[
            ("early", &[(0, 1.0), (1000, 2.0)]),
            ("late", &[(10_000, 1.0), (11_000, 2.0)]),
        ]);
        match align_strategy1(&set, &AlignmentSpec::default()) {
            Err(Error::DisjointSpans {
                latest_start,
                earliest_end,
            }) => {
                assert_eq!(latest_start, "late");
                assert_eq!(earliest_end, "early");
            }
            other => panic!("expected disjoint-span error, got {other:?}"),
        }
    }

    #[test]
    fn strategy2_worked_example() {
        // s = [0, 20000, 50000]; (50000 - 0) / 2000 = 25.
        let set = set_from(&[("a", &[(0, 10.0), (1000, 20.0), (2000, 30.0)])]);
        let spec = AlignmentSpec {
            strategy: Strategy::Strategy2,
            target_period_ms: Some(2000),
            interpolate: false,
        };
        let panel = align_strategy2(&set, &spec).unwrap();
        assert_eq!(panel.n_rows(), 2);
        assert!(panel.is_missing(0, 0), "leading cell lacks a full window");
        assert!((panel.value(1, 0) - 25.0).abs() < 1e-9);
        // With interpolation the leading cell extends from the first value.
        let spec = AlignmentSpec {
            interpolate: true,
            ..spec
        };
        let panel = align_strategy2(&set, &spec).unwrap();
        assert!((panel.value(0, 0) - 25.0).abs() < 1e-9);
    }

    #[test]
    fn strategy2_constant_series_stays_constant() {
        let pts: Vec<(i64, f64)> = (0..40).map(|i| (i * 1000, 7.25)).collect();
        let set = set_from(&[("c", &pts)]);
        let spec = AlignmentSpec {
            strategy: Strategy::Strategy2,
            target_period_ms: Some(5000),
            interpolate: false,
        };
        let panel = align_strategy2(&set, &spec).unwrap();
        for r in 0..panel.n_rows() {
            if !panel.is_missing(r, 0) {
                assert!((panel.value(r, 0) - 7.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ramp_strategy_comparison_matches_closed_form() {
        // x(t) = a * t sampled every second, resampled to 4 s.
        let a = 0.5;
        let pts: Vec<(i64, f64)> = (0..61).map(|i| (i * 1000, a * (i * 1000) as f64)).collect();
        let set = set_from(&[("ramp", &pts)]);
        let s1 = align_strategy1(
            &set,
            &AlignmentSpec {
                target_period_ms: Some(4000),
                interpolate: false,
                ..AlignmentSpec::default()
            },
        )
        .unwrap();
        let s2 = align_strategy2(
            &set,
            &AlignmentSpec {
                strategy: Strategy::Strategy2,
                target_period_ms: Some(4000),
                interpolate: false,
            },
        )
        .unwrap();
        for r in 1..s2.n_rows() {
            let g = s2.timestamp(r) as f64;
            // Strategy 1: the exact sample at the grid time.
            assert!((s1.value(r, 0) - a * g).abs() < 1e-9);
            // Strategy 2: average of the 4 raw samples in (g-4000, g], i.e.
            // the ramp midpoint shifted by half a raw step.
            let expect = a * (g - 1500.0);
            assert!(
                (s2.value(r, 0) - expect).abs() < 1e-9,
                "row {r}: {} vs {expect}",
                s2.value(r, 0)
            );
        }
    }

    #[test]
    fn strategy2_preserves_mean_on_uniform_data() {
        let pts: Vec<(i64, f64)> = (0..121)
            .map(|i| (i * 1000, (i as f64 * 0.37).sin() * 3.0 + 5.0))
            .collect();
        let set = set_from(&[("x", &pts)]);
        let spec = AlignmentSpec {
            strategy: Strategy::Strategy2,
            target_period_ms: Some(5000),
            interpolate: false,
        };
        let panel = align_strategy2(&set, &spec).unwrap();
        let resampled: Vec<f64> = (0..panel.n_rows())
            .filter(|&r| !panel.is_missing(r, 0))
            .map(|r| panel.value(r, 0))
            .collect();
        // Covered raw window: everything after the first raw point up to the
        // last full grid step (24 windows of 5 points).
        let covered = &pts[1..=120];
        let raw_mean: f64 = covered.iter().map(|&(_, v)| v).sum::<f64>() / covered.len() as f64;
        let res_mean: f64 = resampled.iter().sum::<f64>() / resampled.len() as f64;
        assert!(
            ((res_mean - raw_mean) / raw_mean).abs() < 1e-9,
            "{res_mean} vs {raw_mean}"
        );
    }

    #[test]
    fn alignment_is_affine_equivariant() {
        let pts: Vec<(i64, f64)> = (0..80)
            .map(|i| (i * 1000 + (i % 4) * 90, (i as f64 * 0.31).cos()))
            .collect();
        let (a, b) = (2.5, -7.0);
        let scaled: Vec<(i64, f64)> = pts.iter().map(|&(t, v)| (t, a * v + b)).collect();
        for strategy in [Strategy::Strategy1, Strategy::Strategy2] {
            let spec = AlignmentSpec {
                strategy,
                target_period_ms: Some(4000),
                interpolate: true,
            };
            let base = align(&set_from(&[("x", &pts)]), &spec).unwrap();
            let trans = align(&set_from(&[("x", &scaled)]), &spec).unwrap();
            for r in 0..base.n_rows() {
                let expect = a * base.value(r, 0) + b;
                assert!(
                    (trans.value(r, 0) - expect).abs() < 1e-9,
                    "{strategy:?} row {r}"
                );
            }
        }
    }

    #[test]
    fn grid_timestamps_are_exact_arithmetic_progressions() {
        let pts: Vec<(i64, f64)> = (0..30).map(|i| (i * 7000 + 13, i as f64)).collect();
        let set = set_from(&[("x", &pts)]);
        let spec = AlignmentSpec {
            target_period_ms: Some(7000),
            ..AlignmentSpec::default()
        };
        let panel = align_strategy1(&set, &spec).unwrap();
        for r in 0..panel.n_rows() {
            assert_eq!(panel.timestamp(r), 13 + r as i64 * 7000);
        }
    }

    #[test]
    fn interpolation_examples() {
        let panel = AlignedPanel::new(
            vec!["x".into()],
            1000,
            0,
            vec![vec![1.0, 0.0, 3.0]],
            vec![vec![false, true, false]],
        )
        .unwrap();
        let filled = interpolate_missing(&panel).unwrap();
        assert_eq!(filled.column(0), &[1.0, 2.0, 3.0]);

        let panel = AlignedPanel::new(
            vec!["x".into()],
            1000,
            0,
            vec![vec![0.0, 5.0, 7.0]],
            vec![vec![true, false, false]],
        )
        .unwrap();
        let filled = interpolate_missing(&panel).unwrap();
        assert_eq!(filled.column(0), &[5.0, 5.0, 7.0]);

        // No missing cells: identity.
        let panel = AlignedPanel::new(
            vec!["x".into()],
            1000,
            0,
            vec![vec![1.0, 2.0]],
            vec![vec![false, false]],
        )
        .unwrap();
        assert_eq!(interpolate_missing(&panel).unwrap(), panel);
    }

    #[test]
    fn interpolation_rejects_all_missing_column() {
        let panel = AlignedPanel::new(
            vec!["x".into()],
            1000,
            0,
            vec![vec![0.0, 0.0]],
            vec![vec![true, true]],
        )
        .unwrap();
        assert!(matches!(
            interpolate_missing(&panel),
            Err(Error::AllMissing { column: 0 })
        ));
    }

    #[test]
    fn gamma_max_rule_values() {
        assert_eq!(gamma_max_rule(60_000, DEFAULT_MAX_DELAY_MS), 15);
        assert_eq!(gamma_max_rule(300_000, DEFAULT_MAX_DELAY_MS), 3);
        // 15-second delay rule for second-sampled data.
        assert_eq!(gamma_max_rule(1000, 15_000), 15);
        // Never below 1.
        assert_eq!(gamma_max_rule(3_600_000, DEFAULT_MAX_DELAY_MS), 1);
    }
}
