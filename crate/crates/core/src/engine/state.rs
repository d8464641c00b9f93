//! Per-frontier-node neighbor bookkeeping.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use crate::rst::NodeId;

/// Secondary rank attached to real-valued bounds so that ties resolve the
/// same way the oracle does: by point id. A leaf carries `point id + 1`;
/// a non-leaf carries [`TB_LOW`] on lower bounds and [`TB_HIGH`] on upper
/// bounds, since it could hold any id.
pub type Tiebreak = u64;
pub const TB_LOW: Tiebreak = 0;
pub const TB_HIGH: Tiebreak = u64::MAX;

/// A real bound refined by a tie-break rank, ordered lexicographically.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bound {
    pub value: f64,
    pub tb: Tiebreak,
}

impl Bound {
    pub const INFINITE: Bound = Bound {
        value: f64::INFINITY,
        tb: TB_HIGH,
    };

    pub fn rank_cmp(&self, other: &Bound) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.tb.cmp(&other.tb))
    }

    pub fn le(&self, other: &Bound) -> bool {
        self.rank_cmp(other) != Ordering::Greater
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// kNbr entry, ordered by `D(c', c) - r'`, then tie-break, then node id.
#[derive(Clone, Copy, Debug)]
pub struct NbrKey {
    pub lower: Bound,
    pub node: NodeId,
}

impl PartialEq for NbrKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for NbrKey {}
impl PartialOrd for NbrKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for NbrKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.lower
            .rank_cmp(&other.lower)
            .then(self.node.cmp(&other.node))
    }
}

/// kFrd entry, keyed by the owner's ball radius and id.
#[derive(Clone, Copy, Debug)]
pub struct FrdKey {
    pub radius: f64,
    pub node: NodeId,
}

impl PartialEq for FrdKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for FrdKey {}
impl PartialOrd for FrdKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for FrdKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.radius
            .total_cmp(&other.radius)
            .then(self.node.cmp(&other.node))
    }
}

/// Cand entry: a candidate node and its quality bound.
#[derive(Clone, Copy, Debug)]
pub struct CandEntry {
    pub quality: Bound,
    pub node: NodeId,
}

impl CandEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.quality
            .rank_cmp(&other.quality)
            .then(self.node.cmp(&other.node))
    }
}

/// The k best candidates of a leaf, bounded by capacity `k`.
///
/// `k` is small, so a flat vector with linear max search beats a heap once
/// arbitrary removal is needed.
#[derive(Clone, Debug, Default)]
pub struct Cand {
    entries: Vec<CandEntry>,
}

impl Cand {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.entries.iter().any(|e| e.node == node)
    }

    pub fn entries(&self) -> &[CandEntry] {
        &self.entries
    }

    pub fn max(&self) -> Option<CandEntry> {
        self.entries.iter().copied().max_by(|a, b| a.cmp(b))
    }

    pub fn push(&mut self, e: CandEntry) {
        self.entries.push(e);
    }

    /// Inserts `e` and evicts the largest entry.
    pub fn replace_max(&mut self, e: CandEntry) -> CandEntry {
        let (at, _) = self
            .entries
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1))
            .expect("replace_max on empty cand");
        std::mem::replace(&mut self.entries[at], e)
    }

    pub fn remove(&mut self, node: NodeId) -> bool {
        match self.entries.iter().position(|e| e.node == node) {
            Some(at) => {
                self.entries.swap_remove(at);
                true
            }
            None => false,
        }
    }

    /// True when `e` ranks strictly below the current maximum.
    pub fn beats_max(&self, e: &CandEntry) -> bool {
        self.max().is_some_and(|m| e.cmp(&m) == Ordering::Less)
    }
}

/// State of one frontier node.
#[derive(Clone, Debug)]
pub struct NodeState {
    pub is_leaf: bool,
    pub kthres: Bound,
    pub knbr: BTreeSet<NbrKey>,
    /// Owner `o` maps to the lower bound under which this node sits in
    /// `knbr(o)`, so the mirror entry can be found without recomputing it.
    pub kfrd: BTreeMap<FrdKey, Bound>,
    pub cand: Cand,
}

impl NodeState {
    pub fn leaf() -> Self {
        NodeState {
            is_leaf: true,
            kthres: Bound::INFINITE,
            knbr: BTreeSet::new(),
            kfrd: BTreeMap::new(),
            cand: Cand::default(),
        }
    }

    pub fn internal(radius: f64) -> Self {
        NodeState {
            is_leaf: false,
            kthres: Bound {
                value: 2.0 * radius,
                tb: TB_HIGH,
            },
            knbr: BTreeSet::new(),
            kfrd: BTreeMap::new(),
            cand: Cand::default(),
        }
    }

    /// Recomputes a leaf's threshold from its cand set.
    pub fn refresh_kthres(&mut self, k: usize) {
        debug_assert!(self.is_leaf);
        self.kthres = if self.cand.len() >= k {
            self.cand.max().map_or(Bound::INFINITE, |m| m.quality)
        } else {
            Bound::INFINITE
        };
    }

    /// Removes every kNbr entry whose lower bound exceeds `kthres` and returns
    /// the removed nodes.
    pub fn truncate(&mut self) -> Vec<NbrKey> {
        if !self.kthres.is_finite() {
            return Vec::new();
        }
        let pivot = NbrKey {
            lower: self.kthres,
            node: NodeId(u32::MAX),
        };
        self.knbr.split_off(&pivot).into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(value: f64, node: u32) -> NbrKey {
        NbrKey {
            lower: Bound { value, tb: TB_LOW },
            node: NodeId(node),
        }
    }

    #[test]
    fn truncate_removes_suffix_above_threshold() {
        let mut s = NodeState::leaf();
        for (i, v) in [1.0, 2.0, 5.0, 9.0].into_iter().enumerate() {
            s.knbr.insert(key(v, i as u32));
        }
        s.kthres = Bound {
            value: 4.0,
            tb: TB_HIGH,
        };
        let removed: Vec<f64> = s.truncate().iter().map(|k| k.lower.value).collect();
        assert_eq!(removed, vec![5.0, 9.0]);
        assert_eq!(s.knbr.len(), 2);
    }

    #[test]
    fn truncate_with_infinite_threshold_is_noop() {
        let mut s = NodeState::leaf();
        s.knbr.insert(key(1e300, 0));
        assert!(s.truncate().is_empty());
        assert_eq!(s.knbr.len(), 1);
    }

    #[test]
    fn truncate_keeps_everything_below() {
        let mut s = NodeState::leaf();
        s.knbr.insert(key(1.0, 0));
        s.knbr.insert(key(4.0, 1));
        s.kthres = Bound {
            value: 4.0,
            tb: TB_HIGH,
        };
        assert!(s.truncate().is_empty());
    }

    #[test]
    fn truncate_respects_tiebreak() {
        // equal distance: point id 3 (tb 4) survives a threshold with tb 4, id 7 does not
        let mut s = NodeState::leaf();
        s.knbr.insert(NbrKey {
            lower: Bound { value: 2.0, tb: 4 },
            node: NodeId(10),
        });
        s.knbr.insert(NbrKey {
            lower: Bound { value: 2.0, tb: 8 },
            node: NodeId(11),
        });
        s.kthres = Bound { value: 2.0, tb: 4 };
        let removed = s.truncate();
        assert_eq!(removed.len(), 1);
        assert_eq!(removed[0].node, NodeId(11));
    }

    #[test]
    fn delete_then_reinsert_restores_set() {
        let mut s = NodeState::leaf();
        for i in 0..5 {
            s.knbr.insert(key(i as f64, i));
        }
        let before = s.knbr.clone();
        assert!(s.knbr.remove(&key(2.0, 2)));
        assert!(!s.knbr.remove(&key(2.0, 2)));
        assert_eq!(s.knbr.len(), 4);
        s.knbr.insert(key(2.0, 2));
        assert_eq!(s.knbr, before);
    }

    #[test]
    fn cand_bounded_replacement() {
        let mut c = Cand::default();
        let e = |v: f64, n: u32| CandEntry {
            quality: Bound {
                value: v,
                tb: n as u64 + 1,
            },
            node: NodeId(n),
        };
        c.push(e(3.0, 0));
        c.push(e(1.0, 1));
        assert!(c.beats_max(&e(2.0, 2)));
        let out = c.replace_max(e(2.0, 2));
        assert_eq!(out.node, NodeId(0));
        assert_eq!(c.max().unwrap().node, NodeId(2));
        assert!(!c.beats_max(&e(2.0, 9)));
        assert!(c.remove(NodeId(1)));
        assert!(!c.remove(NodeId(1)));
    }
}
