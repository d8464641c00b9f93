//! Exact all-kNN over an annotated rectangle split tree.
//!
//! The frontier `H` starts as the root and is refined by repeatedly popping
//! the node with the largest ball and replacing it with its children (or, for
//! children with at most `k` points, with their leaves). Each frontier node
//! keeps
//!
//! * `kNbr`: frontier nodes that may hold a k-NN of one of its points,
//!   ordered by `D(c', c) - r'`;
//! * `kFrd`: the reverse index of `kNbr`;
//! * `kThres`: a radius guaranteed to contain `k` other points around any of
//!   its points (`2r` for internal nodes, the k-th best quality for leaves);
//! * `Cand` (leaves only): the `k` candidates with the best quality.
//!
//! When only leaves remain, every leaf's `Cand` is exactly its k-NN.

mod check;
pub mod state;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::annotate::annotate;
use crate::error::{Error, Result};
use crate::geometry::{distance, Ball, PointSet};
use crate::graph::{check_k, KnnGraph, Neighbor};
use crate::instrument;
use crate::oracle::brute_all_knn_parallel;
use crate::rst::{build_rst, NodeId, Rst};

use state::{Bound, CandEntry, FrdKey, NbrKey, NodeState, TB_HIGH, TB_LOW};

/// Relative slack added to internal-node radii inside the engine's
/// predicates, scaled by the largest coordinate magnitude.
const RADIUS_MARGIN: f64 = 1e-9;

/// Which upper bound on "distance to some point of a node" drives `Cand`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum QualityBound {
    /// `sqrt((D + (sqrt5/3) r)^2 + (4/9) r^2)`; holds for every ball with
    /// `r <= 1.5 R`.
    #[default]
    Certified,
    /// `sqrt((D + r/2)^2 + r^2)`, see [`qlty`]. Tighter, but not proven for
    /// every 3/2-approximate ball.
    Compact,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct KnnOptions {
    /// Run the invariant checks every this many pops; 0 disables them.
    pub assert_every: usize,
    pub quality: QualityBound,
}

/// Counters from one engine run.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EngineReport {
    pub distance_evals: u64,
    pub knbr_inserts: u64,
    pub knbr_deletes: u64,
    pub truncations: u64,
    pub pops: u64,
    pub pushes: u64,
    pub max_knbr_nonleaf: usize,
    pub max_knbr_leaf: usize,
    /// Sum of `|small child|` over all tree splits.
    pub split_work: u64,
    pub node_count: usize,
    pub leaf_count: usize,
    pub invariant_checks: u64,
    /// Pops whose radius exceeded the previous pop's.
    pub pop_radius_increases: u64,
}

/// Relative quality of a candidate ball against a target ball:
/// `sqrt((D(c', c) + r'/2)^2 + r'^2)`.
pub fn qlty(candidate: &Ball, target: &Ball) -> f64 {
    compact_quality(
        distance(&candidate.center, &target.center),
        candidate.radius,
    )
}

fn compact_quality(dist: f64, radius: f64) -> f64 {
    if radius == 0.0 {
        return dist;
    }
    let a = dist + 0.5 * radius;
    (a * a + radius * radius).sqrt()
}

/// Upper bound on the distance from a query at `dist` from the center of a
/// 3/2-approximate ball of radius `radius` to the nearest enclosed point.
pub fn certified_quality(dist: f64, radius: f64) -> f64 {
    if radius == 0.0 {
        return dist;
    }
    let a = dist + (5f64.sqrt() / 3.0) * radius;
    (a * a + (4.0 / 9.0) * radius * radius).sqrt()
}

/// Computes the exact kNN graph.
pub fn all_knn(points: &PointSet, k: usize) -> Result<KnnGraph> {
    all_knn_with(points, k, &KnnOptions::default()).map(|(g, _)| g)
}

/// Computes the exact kNN graph and returns the run's counters.
pub fn all_knn_with(
    points: &PointSet,
    k: usize,
    opts: &KnnOptions,
) -> Result<(KnnGraph, EngineReport)> {
    check_k(points.len(), k)?;
    let oracle = if opts.assert_every > 0 {
        Some(instrument::paused(|| brute_all_knn_parallel(points, k))?)
    } else {
        None
    };
    let (out, evals) = instrument::count_distances(|| -> Result<_> {
        let mut engine = Engine::new(points, k, *opts)?;
        engine.run(oracle.as_ref())?;
        let graph = engine.extract_result()?;
        Ok((graph, engine.report))
    });
    let (graph, mut report) = out?;
    report.distance_evals = evals;
    Ok((graph, report))
}

/// kNbr admission: `D <= r' + r + kThres`. Leaf targets compare the stored
/// key lexicographically so admission agrees exactly with truncation.
fn admits(
    target_leaf: bool,
    dist: f64,
    r_cand: f64,
    r_target: f64,
    lower: Bound,
    kthres: Bound,
) -> bool {
    if target_leaf {
        lower.le(&kthres)
    } else {
        dist <= r_cand + r_target + kthres.value
    }
}

#[derive(Clone, Copy, Debug)]
struct HeapItem {
    radius: f64,
    node: NodeId,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    // max radius first, ties to the smaller id
    fn cmp(&self, other: &Self) -> Ordering {
        self.radius
            .total_cmp(&other.radius)
            .then(other.node.cmp(&self.node))
    }
}

/// The frontier sweep. Holds the tree, the frontier and every frontier
/// node's state.
pub struct Engine<'a> {
    points: &'a PointSet,
    rst: Rst,
    k: usize,
    opts: KnnOptions,
    /// Radius used in predicates: 0 for leaves, ball radius plus margin
    /// otherwise.
    eff_radius: Vec<f64>,
    states: Vec<Option<NodeState>>,
    /// Internal frontier nodes; leaves never need popping.
    heap: BinaryHeap<HeapItem>,
    frontier_len: usize,
    last_pop: f64,
    report: EngineReport,
}

impl<'a> Engine<'a> {
    /// Builds and annotates the tree and seeds the frontier with its root.
    pub fn new(points: &'a PointSet, k: usize, opts: KnnOptions) -> Result<Self> {
        check_k(points.len(), k)?;
        let mut rst = build_rst(points)?;
        annotate(&mut rst, points)?;

        let root_rect = rst.node(rst.root()).rect();
        let scale = root_rect
            .lo
            .iter()
            .chain(&root_rect.hi)
            .fold(0.0f64, |m, c| m.max(c.abs()));
        let margin = RADIUS_MARGIN * scale;
        let eff_radius = rst
            .nodes()
            .iter()
            .map(|n| {
                if n.is_leaf() {
                    0.0
                } else {
                    n.ball().expect("annotated").radius + margin
                }
            })
            .collect();

        let report = EngineReport {
            split_work: rst.stats().split_work,
            node_count: rst.node_count(),
            leaf_count: rst.leaf_count(),
            ..EngineReport::default()
        };
        let mut engine = Engine {
            points,
            k,
            opts,
            eff_radius,
            states: vec![None; rst.node_count()],
            heap: BinaryHeap::new(),
            frontier_len: 0,
            last_pop: f64::INFINITY,
            report,
            rst,
        };
        let root = engine.rst.root();
        engine.enter_frontier(root);
        Ok(engine)
    }

    pub fn rst(&self) -> &Rst {
        &self.rst
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn report(&self) -> &EngineReport {
        &self.report
    }

    pub fn state(&self, id: NodeId) -> Option<&NodeState> {
        self.states[id.index()].as_ref()
    }

    pub fn frontier_len(&self) -> usize {
        self.frontier_len
    }

    /// Ids of all current frontier nodes.
    pub fn frontier(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_some())
            .map(|(i, _)| NodeId(i as u32))
    }

    pub fn is_done(&self) -> bool {
        self.frontier_len >= self.points.len()
    }

    fn center(&self, id: NodeId) -> &[f64] {
        &self.rst.node(id).ball().expect("annotated").center
    }

    fn ball_radius(&self, id: NodeId) -> f64 {
        self.rst.node(id).ball().expect("annotated").radius
    }

    fn tiebreak_low(&self, id: NodeId) -> u64 {
        match self.rst.node(id).point() {
            Some(p) => p.0 as u64 + 1,
            None => TB_LOW,
        }
    }

    fn tiebreak_high(&self, id: NodeId) -> u64 {
        match self.rst.node(id).point() {
            Some(p) => p.0 as u64 + 1,
            None => TB_HIGH,
        }
    }

    fn quality(&self, dist: f64, candidate: NodeId) -> f64 {
        let r = self.eff_radius[candidate.index()];
        match self.opts.quality {
            QualityBound::Certified => certified_quality(dist, r),
            QualityBound::Compact => compact_quality(dist, r),
        }
    }

    fn enter_frontier(&mut self, id: NodeId) {
        let node = self.rst.node(id);
        let state = if node.is_leaf() {
            NodeState::leaf()
        } else {
            self.heap.push(HeapItem {
                radius: self.ball_radius(id),
                node: id,
            });
            NodeState::internal(self.eff_radius[id.index()])
        };
        self.states[id.index()] = Some(state);
        self.frontier_len += 1;
        self.report.pushes += 1;
    }

    fn st(&self, id: NodeId) -> &NodeState {
        self.states[id.index()]
            .as_ref()
            .expect("node not in frontier")
    }

    fn st_mut(&mut self, id: NodeId) -> &mut NodeState {
        self.states[id.index()]
            .as_mut()
            .expect("node not in frontier")
    }

    /// Runs the sweep to completion.
    pub fn run(&mut self, oracle: Option<&KnnGraph>) -> Result<()> {
        while !self.is_done() {
            if let Some(oracle) = oracle {
                if self.opts.assert_every > 0
                    && self
                        .report
                        .pops
                        .is_multiple_of(self.opts.assert_every as u64)
                {
                    self.check_invariants(oracle)?;
                }
            }
            self.step()?;
        }
        if let Some(oracle) = oracle {
            self.check_invariants(oracle)?;
            self.check_terminal()?;
        }
        Ok(())
    }

    /// One iteration: pop the largest ball, replace it by its sons and
    /// repair the neighbor sets.
    pub fn step(&mut self) -> Result<()> {
        let top = self
            .heap
            .pop()
            .ok_or_else(|| Error::Invariant("frontier has no internal node left".into()))?;
        let r = top.node;
        self.report.pops += 1;
        if top.radius > self.last_pop {
            self.report.pop_radius_increases += 1;
        }
        self.last_pop = top.radius;

        let node = self.rst.node(r);
        let children = [
            node.large_child().expect("internal node"),
            node.small_child().expect("internal node"),
        ];
        let mut sons = Vec::with_capacity(2 * self.k);
        for child in children {
            if self.rst.node(child).size() < self.k + 1 {
                sons.extend(self.rst.collapse(child, r));
            } else {
                sons.push(child);
            }
        }
        for &s in &sons {
            self.enter_frontier(s);
        }
        self.frontier_len -= 1;
        self.mntn_nbr_frd(r, &sons);
        Ok(())
    }

    /// Hands `r`'s neighbor relations over to its sons, then releases `r`.
    pub fn mntn_nbr_frd(&mut self, r: NodeId, sons: &[NodeId]) {
        let parent = self.states[r.index()]
            .take()
            .expect("popped node has state");

        // 1. r's neighbors become candidate neighbors of every son
        for key in &parent.knbr {
            self.del_from_frd(r, key.node);
            for &s in sons {
                self.add_in_nbr(key.node, s);
            }
        }
        // 2. every node that listed r now considers the sons instead
        for (frd, lower) in &parent.kfrd {
            self.del_from_nbr(r, frd.node, *lower);
            for &s in sons {
                self.add_in_nbr(s, frd.node);
            }
        }
        // 3. sons against each other
        for &si in sons {
            for &sj in sons {
                if si != sj {
                    self.add_in_nbr(si, sj);
                }
            }
        }
        // 4. leaves whose thresholds may have dropped
        let touched = sons
            .iter()
            .copied()
            .chain(parent.kfrd.keys().map(|f| f.node));
        for l in touched.collect::<Vec<_>>() {
            if self.rst.node(l).is_leaf() {
                self.truncate_nbr(l);
            }
        }
    }

    /// Offers `candidate` to `target`: updates the target's cand set if it is
    /// a leaf, then admits the candidate into `kNbr(target)` when the ball
    /// distance test passes.
    pub fn add_in_nbr(&mut self, candidate: NodeId, target: NodeId) {
        debug_assert_ne!(candidate, target);
        let dist = distance(self.center(candidate), self.center(target));
        let k = self.k;
        let target_leaf = self.st(target).is_leaf;

        if target_leaf {
            let entry = CandEntry {
                quality: Bound {
                    value: self.quality(dist, candidate),
                    tb: self.tiebreak_high(candidate),
                },
                node: candidate,
            };
            let st = self.st_mut(target);
            if !st.cand.contains(candidate) {
                if st.cand.len() < k {
                    st.cand.push(entry);
                    st.refresh_kthres(k);
                } else if st.cand.beats_max(&entry) {
                    st.cand.replace_max(entry);
                    st.refresh_kthres(k);
                }
            }
        }

        let r_cand = self.eff_radius[candidate.index()];
        let r_target = self.eff_radius[target.index()];
        let lower = Bound {
            value: dist - r_cand,
            tb: self.tiebreak_low(candidate),
        };
        let kthres = self.st(target).kthres;
        if !admits(target_leaf, dist, r_cand, r_target, lower, kthres) {
            return;
        }
        let target_radius = self.ball_radius(target);
        let st = self.st_mut(target);
        if st.knbr.insert(NbrKey {
            lower,
            node: candidate,
        }) {
            let len = st.knbr.len();
            self.report.knbr_inserts += 1;
            let max = if target_leaf {
                &mut self.report.max_knbr_leaf
            } else {
                &mut self.report.max_knbr_nonleaf
            };
            *max = (*max).max(len);
            self.st_mut(candidate).kfrd.insert(
                FrdKey {
                    radius: target_radius,
                    node: target,
                },
                lower,
            );
        }
    }

    /// Removes `node` from `kNbr(owner)`, and from `Cand(owner)` if present.
    /// The mirror entry in `kFrd(node)` is the caller's business.
    pub fn del_from_nbr(&mut self, node: NodeId, owner: NodeId, lower: Bound) {
        let k = self.k;
        let st = self.states[owner.index()]
            .as_mut()
            .expect("node not in frontier");
        if st.knbr.remove(&NbrKey { lower, node }) {
            self.report.knbr_deletes += 1;
        }
        if st.is_leaf && st.cand.remove(node) {
            st.refresh_kthres(k);
        }
    }

    /// Removes `node` from `kFrd(owner)`.
    pub fn del_from_frd(&mut self, node: NodeId, owner: NodeId) {
        let key = FrdKey {
            radius: self.ball_radius(node),
            node,
        };
        self.st_mut(owner).kfrd.remove(&key);
    }

    /// Drops every `kNbr(leaf)` member whose lower bound exceeds the leaf's
    /// threshold, keeping the mirrors in sync.
    pub fn truncate_nbr(&mut self, leaf: NodeId) {
        let removed = self.st_mut(leaf).truncate();
        if removed.is_empty() {
            return;
        }
        self.report.truncations += 1;
        self.report.knbr_deletes += removed.len() as u64;
        let key = FrdKey {
            radius: self.ball_radius(leaf),
            node: leaf,
        };
        for nb in removed {
            self.st_mut(nb.node).kfrd.remove(&key);
        }
    }

    /// Reads the graph off the terminal cand sets.
    pub fn extract_result(&self) -> Result<KnnGraph> {
        if !self.is_done() {
            return Err(Error::Invariant("sweep has not finished".into()));
        }
        let mut lists = Vec::with_capacity(self.points.len());
        for p in self.points.ids() {
            let leaf = self.rst.leaf_of(p);
            let st = self.states[leaf.index()]
                .as_ref()
                .ok_or_else(|| Error::Invariant(format!("leaf of point {p} left the frontier")))?;
            if st.cand.len() != self.k {
                return Err(Error::Invariant(format!(
                    "point {p} ended with {} candidates, expected {}",
                    st.cand.len(),
                    self.k
                )));
            }
            let mut list = Vec::with_capacity(self.k);
            for e in st.cand.entries() {
                let q = self.rst.node(e.node).point().ok_or_else(|| {
                    Error::Invariant(format!("point {p} kept an internal candidate"))
                })?;
                list.push(Neighbor {
                    id: q,
                    dist: e.quality.value,
                });
            }
            list.sort_unstable_by(Neighbor::cmp_rank);
            lists.push(list);
        }
        KnnGraph::new(self.k, lists)
    }

    /// Frontier node containing each point.
    fn owners(&self) -> Vec<NodeId> {
        let mut owner = vec![NodeId(u32::MAX); self.points.len()];
        for f in self.frontier() {
            for p in self.rst.points_of(f) {
                owner[p.index()] = f;
            }
        }
        owner
    }
}
