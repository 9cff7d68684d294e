//! Edge orientation for PC-style skeletons: unshielded-collider detection,
//! Meek propagation rules, and a cycle-downgrade pass that keeps the final
//! directed part acyclic.

use std::collections::{BTreeMap, BTreeSet};

/// A mixed graph under orientation. `fixed` edges are background knowledge
/// (e.g. past -> present) that participates in the rules but is never
/// changed; `undirected` pairs are stored with the lower index first.
#[derive(Debug, Clone, Default)]
pub(crate) struct OrientationProblem {
    pub fixed: BTreeSet<(usize, usize)>,
    pub directed: BTreeSet<(usize, usize)>,
    pub undirected: BTreeSet<(usize, usize)>,
    pub bidirected: BTreeSet<(usize, usize)>,
}

impl OrientationProblem {
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        self.undirected.contains(&key)
            || self.bidirected.contains(&key)
            || self.directed.contains(&(a, b))
            || self.directed.contains(&(b, a))
            || self.fixed.contains(&(a, b))
            || self.fixed.contains(&(b, a))
    }

    fn points_into(&self, from: usize, to: usize) -> bool {
        self.directed.contains(&(from, to)) || self.fixed.contains(&(from, to))
    }

    fn is_undirected(&self, a: usize, b: usize) -> bool {
        self.undirected.contains(&(a.min(b), a.max(b)))
    }

    /// Demands orientation `from -> to`. An undirected edge is directed; an
    /// edge already directed the other way becomes bidirected (conflict).
    fn demand(&mut self, from: usize, to: usize) {
        let key = (from.min(to), from.max(to));
        if self.undirected.remove(&key) {
            self.directed.insert((from, to));
        } else if self.directed.contains(&(to, from)) {
            self.directed.remove(&(to, from));
            self.bidirected.insert(key);
        }
        // Already directed the right way, bidirected, or fixed: no change.
    }

    /// Orients unshielded colliders x -> z <- y for every triple where x and
    /// y are non-adjacent and z is outside their separating set. Triples are
    /// visited in lexicographic (z, x, y) order and orientations apply
    /// immediately.
    pub fn orient_colliders(
        &mut self,
        nodes: &[usize],
        sepsets: &BTreeMap<(usize, usize), BTreeSet<usize>>,
    ) {
        for &z in nodes {
            for (xi, &x) in nodes.iter().enumerate() {
                if x == z || !self.adjacent(x, z) {
                    continue;
                }
                for &y in &nodes[xi + 1..] {
                    if y == z || y == x || !self.adjacent(y, z) || self.adjacent(x, y) {
                        continue;
                    }
                    let key = (x.min(y), x.max(y));
                    let Some(sep) = sepsets.get(&key) else {
                        continue;
                    };
                    if sep.contains(&z) {
                        continue;
                    }
                    self.demand(x, z);
                    self.demand(y, z);
                }
            }
        }
    }

    /// Meek rules 1-3 to a fixed point, orienting only undirected edges.
    pub fn meek(&mut self, nodes: &[usize]) {
        loop {
            let mut changed = false;
            let pairs: Vec<(usize, usize)> = self.undirected.iter().copied().collect();
            for (a, b) in pairs {
                if !self.is_undirected(a, b) {
                    continue;
                }
                for (u, v) in [(a, b), (b, a)] {
                    // R1: x -> u, u - v, x and v non-adjacent => u -> v.
                    let r1 = nodes.iter().any(|&x| {
                        x != u && x != v && self.points_into(x, u) && !self.adjacent(x, v)
                    });
                    // R2: u -> x -> v with u - v => u -> v.
                    let r2 = nodes.iter().any(|&x| {
                        x != u && x != v && self.points_into(u, x) && self.points_into(x, v)
                    });
                    // R3: u - x, u - y, x -> v, y -> v, x and y non-adjacent
                    // => u -> v.
                    let r3 = nodes.iter().enumerate().any(|(xi, &x)| {
                        if x == u || x == v || !self.is_undirected(u, x) || !self.points_into(x, v)
                        {
                            return false;
                        }
                        nodes[xi + 1..].iter().any(|&y| {
                            y != u
                                && y != v
                                && self.is_undirected(u, y)
                                && self.points_into(y, v)
                                && !self.adjacent(x, y)
                        })
                    });
                    if r1 || r2 || r3 {
                        self.demand(u, v);
                        changed = true;
                        break;
                    }
                }
            }
            if !changed {
                return;
            }
        }
    }

    /// Would adding `from -> to` close a directed cycle through `directed`
    /// and `fixed` edges?
    pub fn would_cycle(&self, from: usize, to: usize) -> bool {
        // DFS from `to` looking for `from`.
        let mut stack = vec![to];
        let mut seen = BTreeSet::new();
        while let Some(v) = stack.pop() {
            if v == from {
                return true;
            }
            if !seen.insert(v) {
                continue;
            }
            for &(s, t) in self.directed.iter().chain(self.fixed.iter()) {
                if s == v {
                    stack.push(t);
                }
            }
        }
        false
    }

    /// Downgrades directed edges that sit on a directed cycle to bidirected
    /// until the directed part is acyclic. Finite-sample collider conflicts
    /// can otherwise produce cyclic instantaneous graphs.
    pub fn downgrade_cycles(&mut self) {
        loop {
            // An existing edge (a, b) lies on a cycle iff b reaches a.
            let Some(cycle_edge) = self
                .directed
                .iter()
                .copied()
                .find(|&(a, b)| self.would_cycle(a, b))
            else {
                return;
            };
            self.directed.remove(&cycle_edge);
            self.bidirected
                .insert((cycle_edge.0.min(cycle_edge.1), cycle_edge.0.max(cycle_edge.1)));
        }
    }
}
