//! Causal graph types for time series and the projections between them.
//!
//! Three finite abstractions are provided, ordered from most to least
//! detailed:
//!
//! * [`WindowCausalGraph`]: lag-annotated edges over a window of
//!   `gamma_max + 1` time slices, assuming causal relations repeat at every
//!   time step;
//! * [`ExtendedSummaryCausalGraph`]: two slices, separating lagged
//!   (past -> present) from instantaneous (present -> present) relations;
//! * [`SummaryCausalGraph`]: one node per series, an edge whenever any lag
//!   carries a relation; may contain cycles and self loops.
//!
//! Instantaneous edges carry an orientation mark because constraint-based
//! learners legitimately emit edges they could not orient.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Orientation state of an instantaneous (lag-0) edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeMark {
    Directed,
    Bidirected,
    Unoriented,
}

impl EdgeMark {
    fn as_str(&self) -> &'static str {
        match self {
            EdgeMark::Directed => "directed",
            EdgeMark::Bidirected => "bidirected",
            EdgeMark::Unoriented => "unoriented",
        }
    }

    fn parse(s: &str) -> Option<EdgeMark> {
        match s {
            "directed" => Some(EdgeMark::Directed),
            "bidirected" => Some(EdgeMark::Bidirected),
            "unoriented" => Some(EdgeMark::Unoriented),
            _ => None,
        }
    }
}

fn validate_names(names: &[String]) -> Result<()> {
    if names.is_empty() {
        return Err(Error::InvalidGraph("graph has no nodes".into()));
    }
    let mut seen = BTreeSet::new();
    for n in names {
        if n.is_empty() {
            return Err(Error::InvalidGraph("empty node name".into()));
        }
        if !seen.insert(n) {
            return Err(Error::InvalidGraph(format!("duplicate node name '{n}'")));
        }
    }
    Ok(())
}

/// Kahn topological check over a directed adjacency list; returns true when
/// the graph is acyclic.
fn is_acyclic(d: usize, edges: impl Iterator<Item = (usize, usize)> + Clone) -> bool {
    let mut indegree = vec![0usize; d];
    let mut adj = vec![Vec::new(); d];
    for (p, q) in edges {
        indegree[q] += 1;
        adj[p].push(q);
    }
    let mut queue: Vec<usize> = (0..d).filter(|&i| indegree[i] == 0).collect();
    let mut removed = 0;
    while let Some(v) = queue.pop() {
        removed += 1;
        for &w in &adj[v] {
            indegree[w] -= 1;
            if indegree[w] == 0 {
                queue.push(w);
            }
        }
    }
    removed == d
}

/// Finite representation of the repeating causal structure over time slices
/// `t - gamma_max ..= t`.
///
/// A lagged edge `(p, lag, q)` means series `p` at `t - lag` causes series
/// `q` at `t`, for every `t`. Lag-0 edges are kept separately with an
/// orientation mark; lag-0 self edges are rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowCausalGraph {
    names: Vec<String>,
    gamma_max: usize,
    lagged: BTreeSet<(usize, usize, usize)>,
    contemporaneous: BTreeMap<(usize, usize), EdgeMark>,
}

impl WindowCausalGraph {
    pub fn new(names: Vec<String>, gamma_max: usize) -> Result<Self> {
        validate_names(&names)?;
        if gamma_max < 1 {
            return Err(Error::InvalidGraph("gamma_max must be >= 1".into()));
        }
        Ok(WindowCausalGraph {
            names,
            gamma_max,
            lagged: BTreeSet::new(),
            contemporaneous: BTreeMap::new(),
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn gamma_max(&self) -> usize {
        self.gamma_max
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Adds `source` at `t - lag` -> `target` at `t`; requires `1 <= lag <= gamma_max`.
    pub fn add_lagged_edge(&mut self, source: usize, lag: usize, target: usize) -> Result<()> {
        let d = self.names.len();
        if source >= d || target >= d {
            return Err(Error::InvalidGraph(format!(
                "edge ({source}, {lag}, {target}) out of range for {d} nodes"
            )));
        }
        if lag < 1 || lag > self.gamma_max {
            return Err(Error::InvalidGraph(format!(
                "lag {lag} outside 1..={}",
                self.gamma_max
            )));
        }
        self.lagged.insert((source, lag, target));
        Ok(())
    }

    /// Sets the single lag-0 adjacency between `source` and `target`,
    /// replacing any previous mark on the pair. Self edges are rejected.
    pub fn set_contemporaneous(
        &mut self,
        source: usize,
        target: usize,
        mark: EdgeMark,
    ) -> Result<()> {
        let d = self.names.len();
        if source >= d || target >= d {
            return Err(Error::InvalidGraph(format!(
                "contemporaneous edge ({source}, {target}) out of range for {d} nodes"
            )));
        }
        if source == target {
            return Err(Error::InvalidGraph(format!(
                "lag-0 self edge on node {source}"
            )));
        }
        self.contemporaneous.remove(&(source, target));
        self.contemporaneous.remove(&(target, source));
        let key = match mark {
            EdgeMark::Directed => (source, target),
            _ => (source.min(target), source.max(target)),
        };
        self.contemporaneous.insert(key, mark);
        Ok(())
    }

    pub fn remove_contemporaneous(&mut self, a: usize, b: usize) {
        self.contemporaneous.remove(&(a, b));
        self.contemporaneous.remove(&(b, a));
    }

    pub fn lagged_edges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.lagged.iter().copied()
    }

    pub fn has_lagged_edge(&self, source: usize, lag: usize, target: usize) -> bool {
        self.lagged.contains(&(source, lag, target))
    }

    /// Lag-0 adjacencies as stored: `Directed` entries read source -> target,
    /// symmetric marks are reported with the lower index first.
    pub fn contemporaneous_edges(&self) -> impl Iterator<Item = (usize, usize, EdgeMark)> + '_ {
        self.contemporaneous.iter().map(|(&(a, b), &m)| (a, b, m))
    }

    pub fn contemporaneous_mark(&self, a: usize, b: usize) -> Option<(usize, usize, EdgeMark)> {
        if let Some(&m) = self.contemporaneous.get(&(a, b)) {
            return Some((a, b, m));
        }
        self.contemporaneous.get(&(b, a)).map(|&m| (b, a, m))
    }

    pub fn edge_count(&self) -> usize {
        self.lagged.len() + self.contemporaneous.len()
    }

    /// Checks all structural invariants: index bounds, lag bounds, one entry
    /// per unordered lag-0 pair, and acyclicity of the lag-0 directed
    /// sub-graph (which makes the implied full-time graph acyclic).
    pub fn validate(&self) -> Result<()> {
        let d = self.names.len();
        for &(p, lag, q) in &self.lagged {
            if p >= d || q >= d || lag < 1 || lag > self.gamma_max {
                return Err(Error::InvalidGraph(format!(
                    "lagged edge ({p}, {lag}, {q}) violates bounds"
                )));
            }
        }
        for &(a, b) in self.contemporaneous.keys() {
            if a >= d || b >= d || a == b {
                return Err(Error::InvalidGraph(format!(
                    "contemporaneous edge ({a}, {b}) violates bounds"
                )));
            }
            if a > b && self.contemporaneous.contains_key(&(b, a)) {
                return Err(Error::InvalidGraph(format!(
                    "conflicting contemporaneous entries for pair ({b}, {a})"
                )));
            }
        }
        let directed = self
            .contemporaneous
            .iter()
            .filter(|(_, &m)| m == EdgeMark::Directed)
            .map(|(&(p, q), _)| (p, q));
        if !is_acyclic(d, directed) {
            return Err(Error::InvalidGraph(
                "lag-0 directed sub-graph contains a cycle".into(),
            ));
        }
        Ok(())
    }

    /// Collapses every strictly positive lag into a past -> present edge and
    /// copies lag-0 edges with their marks.
    pub fn to_extended(&self) -> ExtendedSummaryCausalGraph {
        let mut past = BTreeSet::new();
        for &(p, _, q) in &self.lagged {
            past.insert((p, q));
        }
        ExtendedSummaryCausalGraph {
            names: self.names.clone(),
            past_edges: past,
            present: self.contemporaneous.clone(),
        }
    }

    /// Projects to the summary graph: `p -> q` whenever some lag carries an
    /// edge. Lag-0 `Directed` marks project one way; `Bidirected` and
    /// `Unoriented` marks project to both ordered pairs.
    pub fn to_summary(&self) -> SummaryCausalGraph {
        let mut edges = BTreeSet::new();
        for &(p, _, q) in &self.lagged {
            edges.insert((p, q));
        }
        for (&(a, b), &m) in &self.contemporaneous {
            match m {
                EdgeMark::Directed => {
                    edges.insert((a, b));
                }
                EdgeMark::Bidirected | EdgeMark::Unoriented => {
                    edges.insert((a, b));
                    edges.insert((b, a));
                }
            }
        }
        SummaryCausalGraph {
            names: self.names.clone(),
            edges,
        }
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph window {\n  rankdir=LR;\n");
        for (i, name) in self.names.iter().enumerate() {
            for lag in (0..=self.gamma_max).rev() {
                let _ = writeln!(
                    out,
                    "  n{i}_l{lag} [label=\"{name}(t{})\"];",
                    if lag == 0 {
                        String::new()
                    } else {
                        format!("-{lag}")
                    }
                );
            }
        }
        // One representative edge per (source, lag, target); homologous
        // copies are implied by consistency through time.
        for &(p, lag, q) in &self.lagged {
            let _ = writeln!(out, "  n{p}_l{lag} -> n{q}_l0;");
        }
        for (&(a, b), &m) in &self.contemporaneous {
            match m {
                EdgeMark::Directed => {
                    let _ = writeln!(out, "  n{a}_l0 -> n{b}_l0;");
                }
                EdgeMark::Bidirected => {
                    let _ = writeln!(out, "  n{a}_l0 -> n{b}_l0 [dir=both];");
                }
                EdgeMark::Unoriented => {
                    let _ = writeln!(out, "  n{a}_l0 -> n{b}_l0 [dir=none];");
                }
            }
        }
        out.push_str("}\n");
        out
    }

    /// JSON form: `{"kind": "window", "nodes": [...], "gamma_max": N,
    /// "edges": [[src, dst, lag], [src, dst, 0, mark], ...]}`.
    pub fn to_json(&self) -> Value {
        let mut edges = Vec::new();
        for &(p, lag, q) in &self.lagged {
            edges.push(json!([self.names[p], self.names[q], lag]));
        }
        for (&(a, b), &m) in &self.contemporaneous {
            edges.push(json!([self.names[a], self.names[b], 0, m.as_str()]));
        }
        json!({
            "kind": "window",
            "nodes": self.names,
            "gamma_max": self.gamma_max,
            "edges": edges,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let (names, gamma_max) = json_header(v, "window")?;
        let gamma_max =
            gamma_max.ok_or_else(|| Error::InvalidGraph("missing gamma_max".into()))? as usize;
        let mut g = WindowCausalGraph::new(names, gamma_max)?;
        for e in json_edges(v)? {
            let (src, dst, rest) = split_edge(&g.names, e)?;
            match rest {
                (Some(0), Some(mark)) => g.set_contemporaneous(src, dst, mark)?,
                (Some(0), None) => g.set_contemporaneous(src, dst, EdgeMark::Directed)?,
                (Some(lag), _) => g.add_lagged_edge(src, lag as usize, dst)?,
                (None, _) => {
                    return Err(Error::InvalidGraph(
                        "window edge without lag field".into(),
                    ))
                }
            }
        }
        g.validate()?;
        Ok(g)
    }
}

/// Two-slice abstraction: a `past_edges` entry `(p, q)` means the past of
/// `p` causes `q` at `t` (self pairs allowed); `present` holds lag-0 edges
/// between distinct series with orientation marks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedSummaryCausalGraph {
    names: Vec<String>,
    past_edges: BTreeSet<(usize, usize)>,
    present: BTreeMap<(usize, usize), EdgeMark>,
}

impl ExtendedSummaryCausalGraph {
    pub fn new(names: Vec<String>) -> Result<Self> {
        validate_names(&names)?;
        Ok(ExtendedSummaryCausalGraph {
            names,
            past_edges: BTreeSet::new(),
            present: BTreeMap::new(),
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn add_past_edge(&mut self, source: usize, target: usize) -> Result<()> {
        let d = self.names.len();
        if source >= d || target >= d {
            return Err(Error::InvalidGraph(format!(
                "past edge ({source}, {target}) out of range for {d} nodes"
            )));
        }
        self.past_edges.insert((source, target));
        Ok(())
    }

    pub fn set_present(&mut self, source: usize, target: usize, mark: EdgeMark) -> Result<()> {
        let d = self.names.len();
        if source >= d || target >= d {
            return Err(Error::InvalidGraph(format!(
                "present edge ({source}, {target}) out of range for {d} nodes"
            )));
        }
        if source == target {
            return Err(Error::InvalidGraph(format!(
                "present self edge on node {source}"
            )));
        }
        self.present.remove(&(source, target));
        self.present.remove(&(target, source));
        let key = match mark {
            EdgeMark::Directed => (source, target),
            _ => (source.min(target), source.max(target)),
        };
        self.present.insert(key, mark);
        Ok(())
    }

    pub fn past_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.past_edges.iter().copied()
    }

    pub fn present_edges(&self) -> impl Iterator<Item = (usize, usize, EdgeMark)> + '_ {
        self.present.iter().map(|(&(a, b), &m)| (a, b, m))
    }

    pub fn edge_count(&self) -> usize {
        self.past_edges.len() + self.present.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.names.len();
        for &(p, q) in &self.past_edges {
            if p >= d || q >= d {
                return Err(Error::InvalidGraph(format!(
                    "past edge ({p}, {q}) violates bounds"
                )));
            }
        }
        for &(a, b) in self.present.keys() {
            if a >= d || b >= d || a == b {
                return Err(Error::InvalidGraph(format!(
                    "present edge ({a}, {b}) violates bounds"
                )));
            }
            if a > b && self.present.contains_key(&(b, a)) {
                return Err(Error::InvalidGraph(format!(
                    "conflicting present entries for pair ({b}, {a})"
                )));
            }
        }
        let directed = self
            .present
            .iter()
            .filter(|(_, &m)| m == EdgeMark::Directed)
            .map(|(&(p, q), _)| (p, q));
        if !is_acyclic(d, directed) {
            return Err(Error::InvalidGraph(
                "present directed sub-graph contains a cycle".into(),
            ));
        }
        Ok(())
    }

    /// Past edges and present `Directed` edges project one way; symmetric
    /// present marks project to both ordered pairs.
    pub fn to_summary(&self) -> SummaryCausalGraph {
        let mut edges = BTreeSet::new();
        for &(p, q) in &self.past_edges {
            edges.insert((p, q));
        }
        for (&(a, b), &m) in &self.present {
            match m {
                EdgeMark::Directed => {
                    edges.insert((a, b));
                }
                EdgeMark::Bidirected | EdgeMark::Unoriented => {
                    edges.insert((a, b));
                    edges.insert((b, a));
                }
            }
        }
        SummaryCausalGraph {
            names: self.names.clone(),
            edges,
        }
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph extended {\n  rankdir=LR;\n");
        for (i, name) in self.names.iter().enumerate() {
            let _ = writeln!(out, "  p{i} [label=\"{name}(t-)\"];");
            let _ = writeln!(out, "  n{i} [label=\"{name}(t)\"];");
        }
        for &(p, q) in &self.past_edges {
            let _ = writeln!(out, "  p{p} -> n{q};");
        }
        for (&(a, b), &m) in &self.present {
            match m {
                EdgeMark::Directed => {
                    let _ = writeln!(out, "  n{a} -> n{b};");
                }
                EdgeMark::Bidirected => {
                    let _ = writeln!(out, "  n{a} -> n{b} [dir=both];");
                }
                EdgeMark::Unoriented => {
                    let _ = writeln!(out, "  n{a} -> n{b} [dir=none];");
                }
            }
        }
        out.push_str("}\n");
        out
    }

    /// JSON form: past edges are encoded with lag 1 (some strictly positive
    /// lag), present edges with lag 0 plus a mark.
    pub fn to_json(&self) -> Value {
        let mut edges = Vec::new();
        for &(p, q) in &self.past_edges {
            edges.push(json!([self.names[p], self.names[q], 1]));
        }
        for (&(a, b), &m) in &self.present {
            edges.push(json!([self.names[a], self.names[b], 0, m.as_str()]));
        }
        json!({
            "kind": "extended",
            "nodes": self.names,
            "edges": edges,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let (names, _) = json_header(v, "extended")?;
        let mut g = ExtendedSummaryCausalGraph::new(names)?;
        for e in json_edges(v)? {
            let (src, dst, rest) = split_edge(&g.names, e)?;
            match rest {
                (Some(0), Some(mark)) => g.set_present(src, dst, mark)?,
                (Some(0), None) => g.set_present(src, dst, EdgeMark::Directed)?,
                (Some(_), _) => g.add_past_edge(src, dst)?,
                (None, _) => {
                    return Err(Error::InvalidGraph(
                        "extended edge without lag field".into(),
                    ))
                }
            }
        }
        g.validate()?;
        Ok(g)
    }
}

/// One node per series; a plain directed relation that may contain cycles,
/// mutual pairs, and self loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryCausalGraph {
    names: Vec<String>,
    edges: BTreeSet<(usize, usize)>,
}

impl SummaryCausalGraph {
    pub fn new(names: Vec<String>) -> Result<Self> {
        validate_names(&names)?;
        Ok(SummaryCausalGraph {
            names,
            edges: BTreeSet::new(),
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn add_edge(&mut self, source: usize, target: usize) -> Result<()> {
        let d = self.names.len();
        if source >= d || target >= d {
            return Err(Error::InvalidGraph(format!(
                "edge ({source}, {target}) out of range for {d} nodes"
            )));
        }
        self.edges.insert((source, target));
        Ok(())
    }

    pub fn add_edge_by_name(&mut self, source: &str, target: &str) -> Result<()> {
        let s = self
            .node_index(source)
            .ok_or_else(|| Error::InvalidGraph(format!("unknown node name '{source}'")))?;
        let t = self
            .node_index(target)
            .ok_or_else(|| Error::InvalidGraph(format!("unknown node name '{target}'")))?;
        self.add_edge(s, t)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn contains_edge(&self, source: usize, target: usize) -> bool {
        self.edges.contains(&(source, target))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Ordered name pairs, the form used for scoring.
    pub fn edges_by_name(&self) -> BTreeSet<(String, String)> {
        self.edges
            .iter()
            .map(|&(p, q)| (self.names[p].clone(), self.names[q].clone()))
            .collect()
    }

    /// Edge-list fixture format: a `nodes:` header followed by one
    /// `a -> b` line per edge. Lines starting with `#` are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut graph: Option<SummaryCausalGraph> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(list) = line.strip_prefix("nodes:") {
                if graph.is_some() {
                    return Err(Error::GraphParse {
                        line: i + 1,
                        reason: "duplicate nodes: header".into(),
                    });
                }
                let names: Vec<String> = list
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                graph = Some(SummaryCausalGraph::new(names).map_err(|e| Error::GraphParse {
                    line: i + 1,
                    reason: e.to_string(),
                })?);
                continue;
            }
            let g = graph.as_mut().ok_or_else(|| Error::GraphParse {
                line: i + 1,
                reason: "edge before nodes: header".into(),
            })?;
            let (src, dst) = line.split_once("->").ok_or_else(|| Error::GraphParse {
                line: i + 1,
                reason: format!("expected 'a -> b', got '{line}'"),
            })?;
            g.add_edge_by_name(src.trim(), dst.trim())
                .map_err(|e| Error::GraphParse {
                    line: i + 1,
                    reason: e.to_string(),
                })?;
        }
        graph.ok_or_else(|| Error::GraphParse {
            line: 0,
            reason: "missing nodes: header".into(),
        })
    }

    /// Inverse of [`SummaryCausalGraph::parse`].
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("nodes: {}\n", self.names.join(","));
        for &(p, q) in &self.edges {
            let _ = writeln!(out, "{} -> {}", self.names[p], self.names[q]);
        }
        out
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph summary {\n");
        for (i, name) in self.names.iter().enumerate() {
            let _ = writeln!(out, "  n{i} [label=\"{name}\"];");
        }
        for &(p, q) in &self.edges {
            let _ = writeln!(out, "  n{p} -> n{q};");
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> Value {
        let edges: Vec<Value> = self
            .edges
            .iter()
            .map(|&(p, q)| json!([self.names[p], self.names[q]]))
            .collect();
        json!({
            "kind": "summary",
            "nodes": self.names,
            "edges": edges,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let (names, _) = json_header(v, "summary")?;
        let mut g = SummaryCausalGraph::new(names)?;
        for e in json_edges(v)? {
            let (src, dst, _) = split_edge(&g.names, e)?;
            g.add_edge(src, dst)?;
        }
        Ok(g)
    }
}

fn json_header(v: &Value, kind: &str) -> Result<(Vec<String>, Option<u64>)> {
    let actual = v.get("kind").and_then(Value::as_str).unwrap_or(kind);
    if actual != kind {
        return Err(Error::InvalidGraph(format!(
            "expected kind '{kind}', found '{actual}'"
        )));
    }
    let names = v
        .get("nodes")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::InvalidGraph("missing nodes array".into()))?
        .iter()
        .map(|n| {
            n.as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::InvalidGraph("node name is not a string".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((names, v.get("gamma_max").and_then(Value::as_u64)))
}

fn json_edges(v: &Value) -> Result<&Vec<Value>> {
    v.get("edges")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::InvalidGraph("missing edges array".into()))
}

type EdgeParts = (usize, usize, (Option<u64>, Option<EdgeMark>));

fn split_edge(names: &[String], e: &Value) -> Result<EdgeParts> {
    let arr = e
        .as_array()
        .ok_or_else(|| Error::InvalidGraph("edge is not an array".into()))?;
    if arr.len() < 2 {
        return Err(Error::InvalidGraph("edge needs at least [src, dst]".into()));
    }
    let name_of = |v: &Value| -> Result<usize> {
        let s = v
            .as_str()
            .ok_or_else(|| Error::InvalidGraph("edge endpoint is not a string".into()))?;
        names
            .iter()
            .position(|n| n == s)
            .ok_or_else(|| Error::InvalidGraph(format!("unknown node name '{s}'")))
    };
    let src = name_of(&arr[0])?;
    let dst = name_of(&arr[1])?;
    let lag = arr.get(2).and_then(Value::as_u64);
    let mark = arr
        .get(3)
        .and_then(Value::as_str)
        .map(|s| EdgeMark::parse(s).ok_or_else(|| Error::InvalidGraph(format!("bad mark '{s}'"))))
        .transpose()?;
    Ok((src, dst, (lag, mark)))
}
