//! The discovery methods: a multivariate Granger-lasso learner, two
//! constraint-based learners, a LiNGAM-family autoregressive learner, and
//! the four hybrid compositions of the noise-based and constraint-based
//! stages.
//!
//! Every method is a deterministic function from an aligned panel plus a
//! [`DiscoveryConfig`] to a causal graph; candidate and subset iteration
//! orders are lexicographic throughout so repeated runs (and runs under any
//! thread count) return identical graphs.

mod gcmvl;
mod hybrid;
mod orient;
mod pcgce;
mod pcmci;
mod varlingam;

pub use gcmvl::gcmvl;
pub use hybrid::{cbnb, nbcb, HybridVariant};
pub use pcgce::pcgce;
pub use pcmci::pcmci_plus;
pub use varlingam::{varlingam, varlingam_model, VarLingamModel};

use std::fmt;
use std::str::FromStr;

use crate::data::AlignedPanel;
use crate::error::{Error, Result};
use crate::graphs::{ExtendedSummaryCausalGraph, SummaryCausalGraph, WindowCausalGraph};

/// Shared hyper-parameters. The defaults (`alpha = 0.05`, unbounded
/// conditioning up to `gamma_max * d`) match the benchmark protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscoveryConfig {
    pub gamma_max: usize,
    pub alpha: f64,
    /// Cap on conditioning-set size; defaults to `gamma_max * d`.
    pub max_cond_size: Option<usize>,
}

impl DiscoveryConfig {
    pub fn new(gamma_max: usize) -> Self {
        DiscoveryConfig {
            gamma_max,
            alpha: 0.05,
            max_cond_size: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma_max < 1 {
            return Err(Error::InvalidConfig("gamma_max must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha {} outside (0, 1)",
                self.alpha
            )));
        }
        Ok(())
    }

    pub(crate) fn cond_cap(&self, d: usize) -> usize {
        self.max_cond_size.unwrap_or(self.gamma_max * d)
    }
}

/// The eight discovery methods, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MethodId {
    Gcmvl,
    PcmciPlus,
    Pcgce,
    VarLingam,
    NbcbW,
    NbcbE,
    CbnbW,
    CbnbE,
}

impl MethodId {
    pub const ALL: [MethodId; 8] = [
        MethodId::Gcmvl,
        MethodId::PcmciPlus,
        MethodId::Pcgce,
        MethodId::VarLingam,
        MethodId::NbcbW,
        MethodId::NbcbE,
        MethodId::CbnbW,
        MethodId::CbnbE,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodId::Gcmvl => "gcmvl",
            MethodId::PcmciPlus => "pcmciplus",
            MethodId::Pcgce => "pcgce",
            MethodId::VarLingam => "varlingam",
            MethodId::NbcbW => "nbcb-w",
            MethodId::NbcbE => "nbcb-e",
            MethodId::CbnbW => "cbnb-w",
            MethodId::CbnbE => "cbnb-e",
        }
    }

    /// Which graph type the method natively produces.
    pub fn native_kind(&self) -> GraphKind {
        match self {
            MethodId::Gcmvl => GraphKind::Summary,
            MethodId::PcmciPlus | MethodId::VarLingam | MethodId::NbcbW | MethodId::CbnbW => {
                GraphKind::Window
            }
            MethodId::Pcgce | MethodId::NbcbE | MethodId::CbnbE => GraphKind::Extended,
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodId::ALL
            .iter()
            .find(|m| m.as_str() == s)
            .copied()
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Summary,
    Window,
    Extended,
}

/// A method's native output before projection.
#[derive(Debug, Clone, PartialEq)]
pub enum NativeGraph {
    Summary(SummaryCausalGraph),
    Window(WindowCausalGraph),
    Extended(ExtendedSummaryCausalGraph),
}

impl NativeGraph {
    pub fn to_summary(&self) -> SummaryCausalGraph {
        match self {
            NativeGraph::Summary(g) => g.clone(),
            NativeGraph::Window(g) => g.to_summary(),
            NativeGraph::Extended(g) => g.to_summary(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            NativeGraph::Summary(g) => g.to_json(),
            NativeGraph::Window(g) => g.to_json(),
            NativeGraph::Extended(g) => g.to_json(),
        }
    }

    pub fn to_dot(&self) -> String {
        match self {
            NativeGraph::Summary(g) => g.to_dot(),
            NativeGraph::Window(g) => g.to_dot(),
            NativeGraph::Extended(g) => g.to_dot(),
        }
    }
}

/// Counters and flags accumulated during one discovery run, surfaced in the
/// benchmark run log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub ci_tests: u64,
    pub degenerate_tests: u64,
    pub notes: Vec<String>,
}

impl RunStats {
    pub(crate) fn note(&mut self, message: String) {
        if self.notes.len() < 32 {
            self.notes.push(message);
        }
    }
}

/// Result of [`discover`]: the summary projection plus the method's native
/// graph and run statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryOutcome {
    pub summary: SummaryCausalGraph,
    pub native: NativeGraph,
    pub stats: RunStats,
}

/// Runs a method and projects its native output down to a summary causal
/// graph.
pub fn discover(
    method: MethodId,
    panel: &AlignedPanel,
    cfg: &DiscoveryConfig,
) -> Result<DiscoveryOutcome> {
    let tag = |e: Error| e.for_method(method.as_str());
    let (native, stats) = match method {
        MethodId::Gcmvl => {
            let (g, stats) = gcmvl::gcmvl_with_stats(panel, cfg).map_err(tag)?;
            (NativeGraph::Summary(g), stats)
        }
        MethodId::PcmciPlus => {
            let (g, stats) = pcmci::pcmci_plus_with_stats(panel, cfg).map_err(tag)?;
            (NativeGraph::Window(g), stats)
        }
        MethodId::Pcgce => {
            let (g, stats) = pcgce::pcgce_with_stats(panel, cfg).map_err(tag)?;
            (NativeGraph::Extended(g), stats)
        }
        MethodId::VarLingam => {
            let (g, stats) = varlingam::varlingam_with_stats(panel, cfg).map_err(tag)?;
            (NativeGraph::Window(g), stats)
        }
        MethodId::NbcbW => {
            let (g, stats) =
                hybrid::nbcb_with_stats(panel, cfg, HybridVariant::W).map_err(tag)?;
            (g, stats)
        }
        MethodId::NbcbE => {
            let (g, stats) =
                hybrid::nbcb_with_stats(panel, cfg, HybridVariant::E).map_err(tag)?;
            (g, stats)
        }
        MethodId::CbnbW => {
            let (g, stats) =
                hybrid::cbnb_with_stats(panel, cfg, HybridVariant::W).map_err(tag)?;
            (g, stats)
        }
        MethodId::CbnbE => {
            let (g, stats) =
                hybrid::cbnb_with_stats(panel, cfg, HybridVariant::E).map_err(tag)?;
            (g, stats)
        }
    };
    Ok(DiscoveryOutcome {
        summary: native.to_summary(),
        native,
        stats,
    })
}

/// Lagged view of a panel over the shared effective window: row `t` of the
/// frame corresponds to panel row `gamma_max + t`, and column `(p, tau)`
/// holds series `p` shifted back by `tau`. Dropping the first `gamma_max`
/// rows gives every regression one common sample window.
pub(crate) struct LaggedFrame {
    pub d: usize,
    pub gamma_max: usize,
    pub rows: usize,
    cols: Vec<Vec<f64>>,
}

impl LaggedFrame {
    pub fn build(panel: &AlignedPanel, cfg: &DiscoveryConfig) -> Result<LaggedFrame> {
        cfg.validate()?;
        if panel.any_missing() {
            return Err(Error::InvalidConfig(
                "panel still contains missing cells; interpolate before discovery".into(),
            ));
        }
        let d = panel.n_cols();
        let gamma_max = cfg.gamma_max;
        let t = panel.n_rows();
        let need = (gamma_max + 1) * d + 10;
        let rows = t.saturating_sub(gamma_max);
        if rows <= need {
            return Err(Error::InsufficientSamples { n: rows, need });
        }
        let mut cols = Vec::with_capacity(d * (gamma_max + 1));
        for p in 0..d {
            let series = panel.column(p);
            for tau in 0..=gamma_max {
                let col: Vec<f64> = (0..rows).map(|r| series[gamma_max + r - tau]).collect();
                cols.push(col);
            }
        }
        Ok(LaggedFrame {
            d,
            gamma_max,
            rows,
            cols,
        })
    }

    /// Column for series `p` at lag `tau` (0 = contemporaneous).
    pub fn col(&self, p: usize, tau: usize) -> &[f64] {
        &self.cols[p * (self.gamma_max + 1) + tau]
    }

    /// All lagged columns `(p, tau)`, `tau >= 1`, in lexicographic order.
    pub fn lagged_vars(&self) -> Vec<(usize, usize)> {
        let mut vars = Vec::with_capacity(self.d * self.gamma_max);
        for p in 0..self.d {
            for tau in 1..=self.gamma_max {
                vars.push((p, tau));
            }
        }
        vars
    }
}

/// Lexicographic combinations of `k` indices out of `0..n`, invoked with a
/// scratch buffer; returns false from the callback to stop early.
pub(crate) fn for_each_combination(
    n: usize,
    k: usize,
    mut f: impl FnMut(&[usize]) -> bool,
) -> bool {
    if k > n {
        return true;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if !f(&idx) {
            return false;
        }
        // Advance to the next combination.
        let mut i = k;
        loop {
            if i == 0 {
                return true;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return true;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
