//! Runtime invariant checks, compared against an oracle graph.

use std::collections::{HashMap, HashSet};

use super::state::{FrdKey, NbrKey};
use super::Engine;
use crate::error::{Error, Result};
use crate::geometry::PointId;
use crate::graph::KnnGraph;
use crate::rst::NodeId;

fn violation(msg: String) -> Error {
    Error::Invariant(msg)
}

impl Engine<'_> {
    /// Checks the mirror, frontier containment, threshold soundness and
    /// coverage invariants on the current frontier.
    pub fn check_invariants(&mut self, oracle: &KnnGraph) -> Result<()> {
        self.report.invariant_checks += 1;
        let frontier: Vec<NodeId> = self.frontier().collect();
        let in_frontier: HashSet<NodeId> = frontier.iter().copied().collect();
        if frontier.len() != self.frontier_len {
            return Err(violation(format!(
                "frontier size {} but {} nodes hold state",
                self.frontier_len,
                frontier.len()
            )));
        }

        let owner = self.owners();
        if let Some(p) = owner.iter().position(|o| o.0 == u32::MAX) {
            return Err(violation(format!(
                "point {p} is not covered by the frontier"
            )));
        }
        let covered: usize = frontier.iter().map(|&f| self.rst.node(f).size()).sum();
        if covered != self.points.len() {
            return Err(violation(format!(
                "frontier covers {covered} points, expected {}",
                self.points.len()
            )));
        }

        let mut nbr_sets: HashMap<NodeId, HashSet<NodeId>> = HashMap::new();
        for &f in &frontier {
            let st = self.st(f);
            let radius = self.ball_radius(f);
            for key in &st.knbr {
                if !in_frontier.contains(&key.node) {
                    return Err(violation(format!(
                        "kNbr({}) holds {} outside the frontier",
                        f.0, key.node.0
                    )));
                }
                let mirror = self.st(key.node).kfrd.get(&FrdKey { radius, node: f });
                if mirror.map(|b| b.rank_cmp(&key.lower).is_eq()) != Some(true) {
                    return Err(violation(format!(
                        "kNbr({}) holds {} without a matching kFrd entry",
                        f.0, key.node.0
                    )));
                }
            }
            for (frd, lower) in &st.kfrd {
                if !in_frontier.contains(&frd.node) {
                    return Err(violation(format!(
                        "kFrd({}) holds {} outside the frontier",
                        f.0, frd.node.0
                    )));
                }
                let key = NbrKey {
                    lower: *lower,
                    node: f,
                };
                if !self.st(frd.node).knbr.contains(&key) {
                    return Err(violation(format!(
                        "kFrd({}) holds {} without a matching kNbr entry",
                        f.0, frd.node.0
                    )));
                }
            }
            let set: HashSet<NodeId> = st.knbr.iter().map(|k| k.node).collect();
            if st.is_leaf {
                if st.cand.len() > self.k {
                    return Err(violation(format!("cand({}) exceeds k", f.0)));
                }
                if let Some(e) = st
                    .cand
                    .entries()
                    .iter()
                    .find(|e| !in_frontier.contains(&e.node))
                {
                    return Err(violation(format!(
                        "cand({}) holds {} outside the frontier",
                        f.0, e.node.0
                    )));
                }
            }
            nbr_sets.insert(f, set);
        }

        for p in self.points.ids() {
            let f = owner[p.index()];
            let kthres = self.st(f).kthres.value;
            let tk = oracle.kth_distance(p);
            if tk > kthres {
                return Err(violation(format!(
                    "point {p}: k-th neighbor distance {tk} exceeds threshold {kthres} of node {}",
                    f.0
                )));
            }
            let nbrs = &nbr_sets[&f];
            for nb in oracle.neighbors(p) {
                let g = owner[nb.id.index()];
                if g != f && !nbrs.contains(&g) {
                    return Err(violation(format!(
                        "point {p}: neighbor {} lives in node {} missing from kNbr({})",
                        nb.id, g.0, f.0
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks the post-termination state: every leaf's kNbr equals its cand
    /// set, and the frontier grew by at most `2n` pushes.
    pub fn check_terminal(&self) -> Result<()> {
        let n = self.points.len();
        if self.report.pushes > 2 * n as u64 {
            return Err(violation(format!(
                "{} frontier pushes for {n} points",
                self.report.pushes
            )));
        }
        for p in (0..n as u32).map(PointId) {
            let leaf = self.rst.leaf_of(p);
            let st = self.st(leaf);
            let knbr: HashSet<NodeId> = st.knbr.iter().map(|k| k.node).collect();
            let cand: HashSet<NodeId> = st.cand.entries().iter().map(|e| e.node).collect();
            if knbr != cand {
                return Err(violation(format!(
                    "point {p}: residual kNbr has {} nodes, cand has {}",
                    knbr.len(),
                    cand.len()
                )));
            }
        }
        Ok(())
    }
}
