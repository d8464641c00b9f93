//! Rectangle split tree.
//!
//! Every node holds the bounding rectangle of its points. A node with two or
//! more points is split by bisecting the longest side of its rectangle; each
//! child's rectangle is then shrunk to the bounding rectangle of its own
//! points. Splitting stops at single-point leaves.
//!
//! Construction keeps one sorted doubly-linked list per axis. Every point owns
//! one cell in each list, so removing a point from all `d` lists is `O(d)`.
//! A split locates the smaller half with a scan that walks inward from both
//! ends of the split-axis list at once, unlinks only the smaller half's cells
//! and re-sorts them into fresh lists. The larger child keeps the parent's
//! lists in place. Work per split is therefore proportional to the smaller
//! child (up to a log factor for the re-sort).

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{Ball, PointId, PointSet, Rect};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// How an internal node was split.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Split {
    /// Points with `coord[axis] <= threshold` went to the low side.
    Plane { axis: usize, threshold: f64 },
    /// All points coincide; the lower ids went to the large child.
    Coincident,
}

#[derive(Clone, Debug)]
pub struct RstNode {
    id: NodeId,
    rect: Rect,
    size: usize,
    parent: Option<NodeId>,
    large: Option<NodeId>,
    small: Option<NodeId>,
    /// Whether the large child is the low side of the split plane.
    large_is_low: bool,
    split: Option<Split>,
    ball: Option<Ball>,
    point: Option<PointId>,
    /// Half-open range into `Rst::leaf_order`.
    leaves: (u32, u32),
    alive: bool,
}

impl RstNode {
    pub fn id(&self) -> NodeId {
        self.id
    }
    pub fn rect(&self) -> &Rect {
        &self.rect
    }
    pub fn size(&self) -> usize {
        self.size
    }
    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }
    pub fn large_child(&self) -> Option<NodeId> {
        self.large
    }
    pub fn small_child(&self) -> Option<NodeId> {
        self.small
    }
    pub fn large_is_low(&self) -> bool {
        self.large_is_low
    }
    pub fn split(&self) -> Option<Split> {
        self.split
    }
    pub fn ball(&self) -> Option<&Ball> {
        self.ball.as_ref()
    }
    /// The resident point of a leaf.
    pub fn point(&self) -> Option<PointId> {
        self.point
    }
    pub fn is_leaf(&self) -> bool {
        self.size == 1
    }
    /// False once the node has been removed by a subtree collapse.
    pub fn is_alive(&self) -> bool {
        self.alive
    }
}

/// Counters gathered while building.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildStats {
    /// Sum of `|small child|` over all splits.
    pub split_work: u64,
    /// List cells visited by the bidirectional scans.
    pub scan_steps: u64,
    pub splits: u64,
}

#[derive(Clone, Debug)]
pub struct Rst {
    nodes: Vec<RstNode>,
    n: usize,
    /// Leaves in depth-first order; every subtree owns a contiguous run.
    leaf_order: Vec<NodeId>,
    leaf_of: Vec<NodeId>,
    stats: BuildStats,
}

const NIL: u32 = u32::MAX;

/// Per-axis sorted doubly-linked lists over point ids. Cell `(axis, p)` lives
/// at `axis * n + p`.
struct AxisLists {
    n: usize,
    next: Vec<u32>,
    prev: Vec<u32>,
}

/// Head and tail of one node's lists, one pair per axis.
#[derive(Clone, Debug)]
struct Ends {
    head: Vec<u32>,
    tail: Vec<u32>,
}

impl AxisLists {
    #[inline]
    fn cell(&self, axis: usize, p: u32) -> usize {
        axis * self.n + p as usize
    }

    fn link_sorted(&mut self, axis: usize, ids: &[u32], ends: &mut Ends) {
        let mut prev = NIL;
        for &p in ids {
            let c = self.cell(axis, p);
            self.prev[c] = prev;
            self.next[c] = NIL;
            if prev != NIL {
                let pc = self.cell(axis, prev);
                self.next[pc] = p;
            }
            prev = p;
        }
        ends.head[axis] = ids.first().copied().unwrap_or(NIL);
        ends.tail[axis] = ids.last().copied().unwrap_or(NIL);
    }

    fn unlink(&mut self, axis: usize, p: u32, ends: &mut Ends) {
        let c = self.cell(axis, p);
        let (pv, nx) = (self.prev[c], self.next[c]);
        if pv != NIL {
            let pc = self.cell(axis, pv);
            self.next[pc] = nx;
        } else {
            ends.head[axis] = nx;
        }
        if nx != NIL {
            let nc = self.cell(axis, nx);
            self.prev[nc] = pv;
        } else {
            ends.tail[axis] = pv;
        }
    }

    #[inline]
    fn next(&self, axis: usize, p: u32) -> u32 {
        self.next[self.cell(axis, p)]
    }

    #[inline]
    fn prev(&self, axis: usize, p: u32) -> u32 {
        self.prev[self.cell(axis, p)]
    }
}

fn sort_by_axis(points: &PointSet, axis: usize, ids: &mut [u32]) {
    ids.sort_unstable_by(|&a, &b| {
        points
            .coord(PointId(a), axis)
            .total_cmp(&points.coord(PointId(b), axis))
            .then(a.cmp(&b))
    });
}

fn rect_from_ends(points: &PointSet, ends: &Ends) -> Rect {
    let d = points.dim();
    let lo = (0..d)
        .map(|a| points.coord(PointId(ends.head[a]), a))
        .collect();
    let hi = (0..d)
        .map(|a| points.coord(PointId(ends.tail[a]), a))
        .collect();
    Rect { lo, hi }
}

struct Builder<'a> {
    points: &'a PointSet,
    lists: AxisLists,
    nodes: Vec<RstNode>,
    stats: BuildStats,
}

struct SplitOutcome {
    split: Split,
    large_is_low: bool,
    large_size: usize,
    small_ids: Vec<u32>,
}

impl Builder<'_> {
    fn new_node(&mut self, rect: Rect, size: usize, parent: Option<NodeId>) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(RstNode {
            id,
            rect,
            size,
            parent,
            large: None,
            small: None,
            large_is_low: true,
            split: None,
            ball: None,
            point: None,
            leaves: (0, 0),
            alive: true,
        });
        id
    }

    /// Partitions the node's points and returns the smaller side's ids in
    /// split-axis order. `ends` is left describing the larger side.
    fn split(&mut self, rect: &Rect, size: usize, ends: &mut Ends) -> SplitOutcome {
        let (axis, len) = rect.longest_side();
        let points = self.points;
        let coord = |p: u32| points.coord(PointId(p), axis);

        let (split, low_count) = if len > 0.0 {
            let (lo, hi) = (rect.lo[axis], rect.hi[axis]);
            let mut threshold = 0.5 * (lo + hi);
            if threshold >= hi {
                // lo and hi are adjacent floats
                threshold = lo;
            }
            // Walk inward from both ends; whichever side runs out first is
            // no larger than the other, so the scan costs O(min side).
            let (mut fwd, mut bwd) = (ends.head[axis], ends.tail[axis]);
            let (mut low_seen, mut high_seen) = (0usize, 0usize);
            let low_count = loop {
                self.stats.scan_steps += 1;
                if coord(fwd) <= threshold {
                    low_seen += 1;
                    fwd = self.lists.next(axis, fwd);
                } else {
                    break low_seen;
                }
                self.stats.scan_steps += 1;
                if coord(bwd) > threshold {
                    high_seen += 1;
                    bwd = self.lists.prev(axis, bwd);
                } else {
                    break size - high_seen;
                }
            };
            (Split::Plane { axis, threshold }, low_count)
        } else {
            (Split::Coincident, size - size / 2)
        };

        let high_count = size - low_count;
        debug_assert!(low_count >= 1 && high_count >= 1);
        let large_is_low = low_count >= high_count;
        let small_size = low_count.min(high_count);

        // Collect the small side from the appropriate end of the split-axis
        // list, keeping ascending order.
        let mut small_ids = Vec::with_capacity(small_size);
        if large_is_low {
            let mut p = ends.tail[axis];
            for _ in 0..small_size {
                small_ids.push(p);
                p = self.lists.prev(axis, p);
            }
            small_ids.reverse();
        } else {
            let mut p = ends.head[axis];
            for _ in 0..small_size {
                small_ids.push(p);
                p = self.lists.next(axis, p);
            }
        }
        self.stats.split_work += small_size as u64;
        self.stats.splits += 1;

        for b in 0..points.dim() {
            for &p in &small_ids {
                self.lists.unlink(b, p, ends);
            }
        }

        SplitOutcome {
            split,
            large_is_low,
            large_size: size - small_size,
            small_ids,
        }
    }

    fn build(mut self) -> Rst {
        let points = self.points;
        let n = points.len();
        let d = points.dim();

        let mut root_ends = Ends {
            head: vec![NIL; d],
            tail: vec![NIL; d],
        };
        let mut ids: Vec<u32> = (0..n as u32).collect();
        for axis in 0..d {
            sort_by_axis(points, axis, &mut ids);
            self.lists.link_sorted(axis, &ids, &mut root_ends);
        }
        let root_rect = rect_from_ends(points, &root_ends);
        let root = self.new_node(root_rect, n, None);

        let mut stack = vec![(root, root_ends)];
        while let Some((id, mut ends)) = stack.pop() {
            let (rect, size) = {
                let node = &self.nodes[id.index()];
                (node.rect.clone(), node.size)
            };
            if size == 1 {
                self.nodes[id.index()].point = Some(PointId(ends.head[0]));
                continue;
            }
            let out = self.split(&rect, size, &mut ends);

            let mut small_ends = Ends {
                head: vec![NIL; d],
                tail: vec![NIL; d],
            };
            let split_axis = match out.split {
                Split::Plane { axis, .. } => axis,
                Split::Coincident => 0,
            };
            let mut scratch = out.small_ids.clone();
            for b in 0..d {
                if b == split_axis {
                    self.lists.link_sorted(b, &out.small_ids, &mut small_ends);
                } else {
                    sort_by_axis(points, b, &mut scratch);
                    self.lists.link_sorted(b, &scratch, &mut small_ends);
                }
            }

            let large = self.new_node(rect_from_ends(points, &ends), out.large_size, Some(id));
            let small = self.new_node(
                rect_from_ends(points, &small_ends),
                out.small_ids.len(),
                Some(id),
            );
            let node = &mut self.nodes[id.index()];
            node.large = Some(large);
            node.small = Some(small);
            node.large_is_low = out.large_is_low;
            node.split = Some(out.split);

            stack.push((small, small_ends));
            stack.push((large, ends));
        }

        let mut rst = Rst {
            nodes: self.nodes,
            n,
            leaf_order: Vec::with_capacity(n),
            leaf_of: vec![NodeId(0); n],
            stats: self.stats,
        };
        rst.index_leaves();
        rst
    }
}

/// Builds the fully split tree over `points`.
pub fn build_rst(points: &PointSet) -> Result<Rst> {
    let n = points.len();
    if n == 0 {
        return Err(Error::usage("cannot build a tree over zero points"));
    }
    let d = points.dim();
    let builder = Builder {
        points,
        lists: AxisLists {
            n,
            next: vec![NIL; n * d],
            prev: vec![NIL; n * d],
        },
        nodes: Vec::with_capacity(2 * n),
        stats: BuildStats::default(),
    };
    Ok(builder.build())
}

impl Rst {
    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node(&self, id: NodeId) -> &RstNode {
        &self.nodes[id.index()]
    }

    pub fn nodes(&self) -> &[RstNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn point_count(&self) -> usize {
        self.n
    }

    pub fn stats(&self) -> BuildStats {
        self.stats
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// The leaf holding point `p`.
    pub fn leaf_of(&self, p: PointId) -> NodeId {
        self.leaf_of[p.index()]
    }

    /// Leaves of the subtree rooted at `id`, in depth-first order.
    pub fn leaves(&self, id: NodeId) -> &[NodeId] {
        let (a, b) = self.nodes[id.index()].leaves;
        &self.leaf_order[a as usize..b as usize]
    }

    /// Points of the subtree rooted at `id`.
    pub fn points_of(&self, id: NodeId) -> impl Iterator<Item = PointId> + '_ {
        self.leaves(id)
            .iter()
            .map(|&l| self.nodes[l.index()].point.expect("leaf without a point"))
    }

    pub(crate) fn set_ball(&mut self, id: NodeId, ball: Ball) {
        self.nodes[id.index()].ball = Some(ball);
    }

    /// Balls of every node, if annotated.
    pub fn is_annotated(&self) -> bool {
        self.nodes.iter().any(|n| n.ball.is_some())
    }

    /// Nodes of the subtree rooted at `id` with each child before its parent.
    pub fn post_order(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            out.push(v);
            let node = &self.nodes[v.index()];
            if let (Some(l), Some(s)) = (node.large, node.small) {
                stack.push(l);
                stack.push(s);
            }
        }
        out.reverse();
        out
    }

    /// Removes every internal node of the subtree rooted at `id` and hangs its
    /// leaves directly under `new_parent`. Returns the leaves.
    pub(crate) fn collapse(&mut self, id: NodeId, new_parent: NodeId) -> Vec<NodeId> {
        let leaves = self.leaves(id).to_vec();
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            let node = &mut self.nodes[v.index()];
            if let (Some(l), Some(s)) = (node.large, node.small) {
                node.alive = false;
                stack.push(l);
                stack.push(s);
            }
        }
        for &leaf in &leaves {
            self.nodes[leaf.index()].parent = Some(new_parent);
        }
        leaves
    }

    fn index_leaves(&mut self) {
        let mut stack = vec![(self.root(), false)];
        while let Some((v, done)) = stack.pop() {
            let (large, small) = (self.nodes[v.index()].large, self.nodes[v.index()].small);
            if done {
                let (l, s) = (large.unwrap(), small.unwrap());
                self.nodes[v.index()].leaves = (
                    self.nodes[l.index()].leaves.0,
                    self.nodes[s.index()].leaves.1,
                );
                continue;
            }
            match (large, small) {
                (Some(l), Some(s)) => {
                    stack.push((v, true));
                    stack.push((s, false));
                    stack.push((l, false));
                }
                _ => {
                    let at = self.leaf_order.len() as u32;
                    self.leaf_order.push(v);
                    let p = self.nodes[v.index()].point.unwrap();
                    self.leaf_of[p.index()] = v;
                    self.nodes[v.index()].leaves = (at, at + 1);
                }
            }
        }
    }

    /// Checks the structural invariants of a freshly built tree against the
    /// points it was built from.
    pub fn validate(&self, points: &PointSet) -> Result<()> {
        let fail = |msg: String| Err(Error::Invariant(msg));
        if self.leaf_count() != self.n {
            return fail(format!(
                "{} leaves for {} points",
                self.leaf_count(),
                self.n
            ));
        }
        if self.nodes.len() > 2 * self.n {
            return fail(format!(
                "{} nodes exceed 2n = {}",
                self.nodes.len(),
                2 * self.n
            ));
        }
        let mut seen = vec![false; self.n];
        for node in &self.nodes {
            let ids: Vec<PointId> = self.points_of(node.id).collect();
            if ids.len() != node.size {
                return fail(format!("node {} size mismatch", node.id.0));
            }
            let rect = Rect::bounding(ids.iter().map(|&p| points.point(p)))?;
            if rect != node.rect {
                return fail(format!("node {} rect is not minimal", node.id.0));
            }
            match (node.large, node.small) {
                (Some(l), Some(s)) => {
                    let (l, s) = (self.node(l), self.node(s));
                    if l.size + s.size != node.size || l.size < s.size || s.size < 1 {
                        return fail(format!("node {} has bad child sizes", node.id.0));
                    }
                    if let Some(Split::Plane { axis, threshold }) = node.split {
                        let (low, high) = if node.large_is_low { (l, s) } else { (s, l) };
                        let low_ok = self
                            .points_of(low.id)
                            .all(|p| points.coord(p, axis) <= threshold);
                        let high_ok = self
                            .points_of(high.id)
                            .all(|p| points.coord(p, axis) > threshold);
                        if !low_ok || !high_ok {
                            return fail(format!("node {} children straddle the split", node.id.0));
                        }
                    }
                }
                (None, None) => {
                    if node.size != 1 {
                        return fail(format!("leaf {} holds {} points", node.id.0, node.size));
                    }
                    let p = node.point.unwrap().index();
                    if seen[p] {
                        return fail(format!("point {p} in two leaves"));
                    }
                    seen[p] = true;
                }
                _ => return fail(format!("node {} has one child", node.id.0)),
            }
        }
        Ok(())
    }

    /// Indented human-readable dump: one line per node.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![(self.root(), 0usize)];
        while let Some((v, depth)) = stack.pop() {
            let node = &self.nodes[v.index()];
            let _ = write!(
                out,
                "{:indent$}#{} size={} rect={}",
                "",
                v.0,
                node.size,
                node.rect,
                indent = 2 * depth
            );
            if let Some(b) = &node.ball {
                let _ = write!(out, " r={}", b.radius);
            }
            if let Some(p) = node.point {
                let _ = write!(out, " point={p}");
            }
            out.push('\n');
            if let (Some(l), Some(s)) = (node.large, node.small) {
                stack.push((s, depth + 1));
                stack.push((l, depth + 1));
            }
        }
        out
    }
}
