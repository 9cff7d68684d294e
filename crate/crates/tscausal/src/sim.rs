//! Linear-SEM ground-truth generator over window causal graphs, plus
//! corruption operators that reproduce the raw-data pathologies the pipeline
//! has to cope with (mixed sampling rates, timestamp jitter, missing values,
//! sleeping intervals).
//!
//! Simulation is fully seeded: identical specs produce bit-identical panels.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::{json, Value};

use crate::data::{AlignedPanel, RawPoint, TimeSeriesSet};
use crate::error::{Error, Result};
use crate::graphs::{EdgeMark, WindowCausalGraph};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    Uniform { low: f64, high: f64 },
    Gaussian { sigma: f64 },
    Laplace { scale: f64 },
}

impl NoiseKind {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            NoiseKind::Uniform { low, high } => low + rng.gen::<f64>() * (high - low),
            NoiseKind::Gaussian { sigma } => {
                Normal::new(0.0, sigma).expect("validated sigma").sample(rng)
            }
            NoiseKind::Laplace { scale } => {
                let u = rng.gen::<f64>().clamp(1e-15, 1.0 - 1e-15) - 0.5;
                -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            NoiseKind::Uniform { low, high } => (high - low) * (high - low) / 12.0,
            NoiseKind::Gaussian { sigma } => sigma * sigma,
            NoiseKind::Laplace { scale } => 2.0 * scale * scale,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            NoiseKind::Uniform { low, high } => low < high,
            NoiseKind::Gaussian { sigma } => sigma > 0.0 && sigma.is_finite(),
            NoiseKind::Laplace { scale } => scale > 0.0 && scale.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSimSpec(format!("bad noise {self:?}")))
        }
    }

    fn to_json(self) -> Value {
        match self {
            NoiseKind::Uniform { low, high } => {
                json!({"kind": "uniform", "low": low, "high": high})
            }
            NoiseKind::Gaussian { sigma } => json!({"kind": "gaussian", "sigma": sigma}),
            NoiseKind::Laplace { scale } => json!({"kind": "laplace", "scale": scale}),
        }
    }

    fn from_json(v: &Value) -> Result<Self> {
        let kind = v
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::InvalidSimSpec("noise needs a kind".into()))?;
        let field = |name: &str| -> Result<f64> {
            v.get(name)
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::InvalidSimSpec(format!("noise needs numeric '{name}'")))
        };
        match kind {
            "uniform" => Ok(NoiseKind::Uniform {
                low: field("low")?,
                high: field("high")?,
            }),
            "gaussian" => Ok(NoiseKind::Gaussian {
                sigma: field("sigma")?,
            }),
            "laplace" => Ok(NoiseKind::Laplace {
                scale: field("scale")?,
            }),
            other => Err(Error::InvalidSimSpec(format!("unknown noise kind '{other}'"))),
        }
    }
}

/// Ground-truth model: a window causal graph whose lag-0 edges are all
/// `Directed`, one coefficient per edge, a noise law, and sampling controls.
#[derive(Debug, Clone, PartialEq)]
pub struct SemSpec {
    pub graph: WindowCausalGraph,
    /// Coefficient per edge, keyed (source, lag, target); lag 0 entries
    /// correspond to contemporaneous edges.
    pub coefficients: BTreeMap<(usize, usize, usize), f64>,
    pub noise: NoiseKind,
    pub t: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub period_ms: i64,
}

pub const DEFAULT_BURN_IN: usize = 200;

impl SemSpec {
    pub fn new(
        graph: WindowCausalGraph,
        coefficients: BTreeMap<(usize, usize, usize), f64>,
        noise: NoiseKind,
        t: usize,
        seed: u64,
    ) -> Result<Self> {
        let spec = SemSpec {
            graph,
            coefficients,
            noise,
            t,
            burn_in: DEFAULT_BURN_IN,
            seed,
            period_ms: 60_000,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the graph, the coefficient map (exactly one entry per edge)
    /// and stationarity of the implied VAR (companion spectral radius < 1).
    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        self.noise.validate()?;
        if self.t < 2 {
            return Err(Error::InvalidSimSpec("need at least 2 output rows".into()));
        }
        for (_, _, mark) in self.graph.contemporaneous_edges() {
            if mark != EdgeMark::Directed {
                return Err(Error::InvalidSimSpec(
                    "contemporaneous edges must be Directed for simulation".into(),
                ));
            }
        }
        let mut expected: Vec<(usize, usize, usize)> = self
            .graph
            .lagged_edges()
            .chain(
                self.graph
                    .contemporaneous_edges()
                    .map(|(p, q, _)| (p, 0, q)),
            )
            .collect();
        expected.sort_unstable();
        let mut have: Vec<(usize, usize, usize)> = self.coefficients.keys().copied().collect();
        have.sort_unstable();
        if expected != have {
            return Err(Error::InvalidSimSpec(
                "coefficient map must cover exactly the graph's edges".into(),
            ));
        }
        for (&key, &c) in &self.coefficients {
            if !c.is_finite() {
                return Err(Error::InvalidSimSpec(format!("non-finite coefficient at {key:?}")));
            }
        }
        let rho = self.companion_spectral_radius();
        if rho >= 1.0 {
            return Err(Error::NonStationary { rho });
        }
        Ok(())
    }

    /// Spectral radius of the companion matrix of the reduced-form VAR
    /// `X_t = sum A_tau X_(t-tau) + (I - B0)^-1 e_t`.
    fn companion_spectral_radius(&self) -> f64 {
        use nalgebra::DMatrix;
        let d = self.graph.node_count();
        let g = self.graph.gamma_max();
        let mut b0 = DMatrix::zeros(d, d);
        let mut lagged = vec![DMatrix::zeros(d, d); g];
        for (&(p, lag, q), &c) in &self.coefficients {
            if lag == 0 {
                b0[(q, p)] = c;
            } else {
                lagged[lag - 1][(q, p)] = c;
            }
        }
        let inv = (DMatrix::identity(d, d) - b0)
            .try_inverse()
            .expect("acyclic contemporaneous part is unit-triangular");
        let mut companion = DMatrix::zeros(d * g, d * g);
        for (tau, b) in lagged.iter().enumerate() {
            let a = &inv * b;
            companion.view_mut((0, tau * d), (d, d)).copy_from(&a);
        }
        for i in 0..d * (g - 1) {
            companion[(d + i, i)] = 1.0;
        }
        spectral_radius(companion)
    }

    pub fn to_json(&self) -> Value {
        let coefficients: serde_json::Map<String, Value> = self
            .coefficients
            .iter()
            .map(|(&(p, lag, q), &c)| {
                let names = self.graph.names();
                (format!("{}->{}@{}", names[p], names[q], lag), json!(c))
            })
            .collect();
        json!({
            "graph": self.graph.to_json(),
            "coefficients": coefficients,
            "noise": self.noise.to_json(),
            "t": self.t,
            "burn_in": self.burn_in,
            "seed": self.seed,
            "period_ms": self.period_ms,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let graph = WindowCausalGraph::from_json(
            v.get("graph")
                .ok_or_else(|| Error::InvalidSimSpec("missing graph".into()))?,
        )?;
        let mut coefficients = BTreeMap::new();
        let coeff_obj = v
            .get("coefficients")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::InvalidSimSpec("missing coefficients block".into()))?;
        for (key, value) in coeff_obj {
            let (pair, lag) = key
                .rsplit_once('@')
                .ok_or_else(|| Error::InvalidSimSpec(format!("bad coefficient key '{key}'")))?;
            let (src, dst) = pair
                .split_once("->")
                .ok_or_else(|| Error::InvalidSimSpec(format!("bad coefficient key '{key}'")))?;
            let lag: usize = lag
                .parse()
                .map_err(|_| Error::InvalidSimSpec(format!("bad lag in '{key}'")))?;
            let p = graph
                .node_index(src)
                .ok_or_else(|| Error::InvalidSimSpec(format!("unknown node '{src}'")))?;
            let q = graph
                .node_index(dst)
                .ok_or_else(|| Error::InvalidSimSpec(format!("unknown node '{dst}'")))?;
            let c = value
                .as_f64()
                .ok_or_else(|| Error::InvalidSimSpec(format!("non-numeric coefficient '{key}'")))?;
            coefficients.insert((p, lag, q), c);
        }
        let noise = NoiseKind::from_json(
            v.get("noise")
                .ok_or_else(|| Error::InvalidSimSpec("missing noise".into()))?,
        )?;
        let int = |name: &str, default: Option<u64>| -> Result<u64> {
            match v.get(name).and_then(Value::as_u64) {
                Some(x) => Ok(x),
                None => default.ok_or_else(|| Error::InvalidSimSpec(format!("missing '{name}'"))),
            }
        };
        let spec = SemSpec {
            graph,
            coefficients,
            noise,
            t: int("t", None)? as usize,
            burn_in: int("burn_in", Some(DEFAULT_BURN_IN as u64))? as usize,
            seed: int("seed", Some(0))?,
            period_ms: int("period_ms", Some(60_000))? as i64,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Spectral radius by Gelfand's formula with repeated squaring:
/// `rho = lim ||A^(2^k)||^(1/2^k)`. Each squaring renormalizes the matrix
/// and tracks the log scale, so the estimate is immune to over/underflow
/// and needs no iterative eigensolver.
fn spectral_radius(a: nalgebra::DMatrix<f64>) -> f64 {
    let mut current = a;
    let mut log_accum = 0.0f64;
    let mut estimate = f64::NEG_INFINITY;
    for k in 0..60u32 {
        let norm = current.norm();
        if norm == 0.0 || !norm.is_finite() {
            return if norm == 0.0 { 0.0 } else { f64::INFINITY };
        }
        let log_power_norm = log_accum + norm.ln();
        let next_estimate = log_power_norm / 2f64.powi(k as i32);
        if k > 8 && (next_estimate - estimate).abs() < 1e-13 {
            estimate = next_estimate;
            break;
        }
        estimate = next_estimate;
        let scaled = current / norm;
        current = &scaled * &scaled;
        log_accum = 2.0 * log_power_norm;
    }
    estimate.exp()
}

/// The 4-series diamond with self causes: `s` drives `p` at lag 2 and `q`
/// at lag 1, `p` and `q` drive `r` instantaneously, and every series has a
/// lag-1 self cause. Coefficients are all 0.5, noise Uniform(-1, 1).
pub fn diamond_fixture() -> SemSpec {
    let names = ["s", "p", "q", "r"].map(String::from).to_vec();
    let mut g = WindowCausalGraph::new(names, 2).expect("static names");
    let mut coefficients = BTreeMap::new();
    for i in 0..4 {
        g.add_lagged_edge(i, 1, i).unwrap();
        coefficients.insert((i, 1, i), 0.5);
    }
    g.add_lagged_edge(0, 2, 1).unwrap();
    coefficients.insert((0, 2, 1), 0.5);
    g.add_lagged_edge(0, 1, 2).unwrap();
    coefficients.insert((0, 1, 2), 0.5);
    g.set_contemporaneous(1, 3, EdgeMark::Directed).unwrap();
    coefficients.insert((1, 0, 3), 0.5);
    g.set_contemporaneous(2, 3, EdgeMark::Directed).unwrap();
    coefficients.insert((2, 0, 3), 0.5);
    SemSpec::new(
        g,
        coefficients,
        NoiseKind::Uniform {
            low: -1.0,
            high: 1.0,
        },
        3000,
        0,
    )
    .expect("fixture is stationary")
}

/// Variant of [`diamond_fixture`] where the edges into `r` act at lag 1
/// instead of instantaneously, for methods that cannot represent lag-0
/// relations.
pub fn diamond_fixture_lagged() -> SemSpec {
    let names = ["s", "p", "q", "r"].map(String::from).to_vec();
    let mut g = WindowCausalGraph::new(names, 2).expect("static names");
    let mut coefficients = BTreeMap::new();
    for i in 0..4 {
        g.add_lagged_edge(i, 1, i).unwrap();
        coefficients.insert((i, 1, i), 0.5);
    }
    g.add_lagged_edge(0, 2, 1).unwrap();
    coefficients.insert((0, 2, 1), 0.5);
    g.add_lagged_edge(0, 1, 2).unwrap();
    coefficients.insert((0, 1, 2), 0.5);
    g.add_lagged_edge(1, 1, 3).unwrap();
    coefficients.insert((1, 1, 3), 0.5);
    g.add_lagged_edge(2, 1, 3).unwrap();
    coefficients.insert((2, 1, 3), 0.5);
    SemSpec::new(
        g,
        coefficients,
        NoiseKind::Uniform {
            low: -1.0,
            high: 1.0,
        },
        3000,
        0,
    )
    .expect("fixture is stationary")
}

/// Generates a panel from the SEM: at each step noise is drawn for every
/// series in index order, then values are solved in topological order of the
/// contemporaneous DAG. Pre-history is zero and `burn_in` leading rows are
/// discarded.
pub fn simulate(spec: &SemSpec) -> Result<AlignedPanel> {
    spec.validate()?;
    let d = spec.graph.node_count();
    let gamma_max = spec.graph.gamma_max();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Topological order of the contemporaneous DAG, smallest index first.
    let mut indegree = vec![0usize; d];
    let mut children = vec![Vec::new(); d];
    for (p, q, _) in spec.graph.contemporaneous_edges() {
        indegree[q] += 1;
        children[p].push(q);
    }
    let mut order = Vec::with_capacity(d);
    let mut remaining: Vec<bool> = vec![true; d];
    while order.len() < d {
        let next = (0..d)
            .find(|&i| remaining[i] && indegree[i] == 0)
            .expect("validated acyclic");
        remaining[next] = false;
        order.push(next);
        for &c in &children[next] {
            indegree[c] -= 1;
        }
    }

    let total = spec.burn_in + spec.t;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(total);
    let mut noise_buf = vec![0.0; d];
    for t in 0..total {
        for e in noise_buf.iter_mut() {
            *e = spec.noise.sample(&mut rng);
        }
        let mut row = vec![0.0; d];
        for &q in &order {
            let mut acc = noise_buf[q];
            for (&(p, lag, target), &c) in &spec.coefficients {
                if target != q {
                    continue;
                }
                if lag == 0 {
                    acc += c * row[p];
                } else if t >= lag {
                    acc += c * rows[t - lag][p];
                }
            }
            row[q] = acc;
        }
        rows.push(row);
    }

    let names = spec.graph.names().to_vec();
    let mut columns = vec![vec![0.0; spec.t]; d];
    for (r, row) in rows[spec.burn_in..].iter().enumerate() {
        for c in 0..d {
            columns[c][r] = row[c];
        }
    }
    let missing = vec![vec![false; spec.t]; d];
    let _ = gamma_max;
    AlignedPanel::new(names, spec.period_ms, 0, columns, missing)
}

/// A sleeping window: the value at `start_row` is held over
/// `[start_row, start_row + len)` of the named series.
#[derive(Debug, Clone, PartialEq)]
pub struct SleepWindow {
    pub series: String,
    pub start_row: usize,
    pub len: usize,
}

/// Corruption operators applied when converting a clean panel back to raw
/// per-series form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorruptionSpec {
    /// Per-series resampling period; must be a positive multiple of the
    /// panel period. Absent series keep the panel period.
    pub resample_period_ms: BTreeMap<String, i64>,
    /// Maximum absolute timestamp perturbation; must stay below half the
    /// smallest resample period.
    pub timestamp_jitter_ms: i64,
    /// Bernoulli probability that a point loses its value.
    pub missing_rate: f64,
    pub sleeping: Vec<SleepWindow>,
}

impl CorruptionSpec {
    fn validate(&self, panel: &AlignedPanel) -> Result<()> {
        if !(0.0..=1.0).contains(&self.missing_rate) {
            return Err(Error::InvalidSimSpec(format!(
                "missing rate {} outside [0, 1]",
                self.missing_rate
            )));
        }
        let mut min_period = panel.period_ms();
        for (name, &p) in &self.resample_period_ms {
            if panel.names().iter().all(|n| n != name) {
                return Err(Error::InvalidSimSpec(format!("unknown series '{name}'")));
            }
            if p <= 0 || p % panel.period_ms() != 0 {
                return Err(Error::InvalidSimSpec(format!(
                    "resample period {p} is not a positive multiple of the panel period {}",
                    panel.period_ms()
                )));
            }
            min_period = min_period.min(p);
        }
        if self.timestamp_jitter_ms < 0 || 2 * self.timestamp_jitter_ms >= min_period {
            return Err(Error::InvalidSimSpec(format!(
                "jitter {} must be non-negative and below half the smallest period {min_period}",
                self.timestamp_jitter_ms
            )));
        }
        for w in &self.sleeping {
            if panel.names().iter().all(|n| *n != w.series) {
                return Err(Error::InvalidSimSpec(format!(
                    "unknown sleeping series '{}'",
                    w.series
                )));
            }
            if w.start_row >= panel.n_rows() || w.len == 0 {
                return Err(Error::InvalidSimSpec(format!(
                    "sleeping window {w:?} outside panel rows"
                )));
            }
        }
        Ok(())
    }
}

/// Converts a panel to raw series and applies, per series in name order:
/// sleeping freezes, resampling, timestamp jitter, and missing masking.
/// Deterministic for a given seed.
pub fn corrupt(panel: &AlignedPanel, spec: &CorruptionSpec, seed: u64) -> Result<TimeSeriesSet> {
    spec.validate(panel)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut series = BTreeMap::new();
    let mut ordered: Vec<(usize, &String)> = panel.names().iter().enumerate().collect();
    ordered.sort_by_key(|&(_, name)| name.clone());
    for (c, name) in ordered {
        let mut values: Vec<f64> = panel.column(c).to_vec();
        for w in spec.sleeping.iter().filter(|w| &w.series == name) {
            let frozen = values[w.start_row];
            let end = (w.start_row + w.len).min(values.len());
            for v in &mut values[w.start_row..end] {
                *v = frozen;
            }
        }
        let period = spec
            .resample_period_ms
            .get(name)
            .copied()
            .unwrap_or_else(|| panel.period_ms());
        let stride = (period / panel.period_ms()) as usize;
        let mut points = Vec::new();
        for r in (0..panel.n_rows()).step_by(stride) {
            let mut ts = panel.timestamp(r);
            if spec.timestamp_jitter_ms > 0 {
                ts += rng.gen_range(-spec.timestamp_jitter_ms..=spec.timestamp_jitter_ms);
            }
            let value = if spec.missing_rate > 0.0 && rng.gen::<f64>() < spec.missing_rate {
                None
            } else {
                Some(values[r])
            };
            points.push(RawPoint {
                timestamp_ms: ts,
                value,
            });
        }
        series.insert(name.clone(), points);
    }
    TimeSeriesSet::new(series)
}
