use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::PointId;

/// A neighbor of some point: its id and exact distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub id: PointId,
    pub dist: f64,
}

impl Neighbor {
    /// Ascending distance, ties to the smaller id.
    pub fn cmp_rank(&self, other: &Neighbor) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.id.cmp(&other.id))
    }
}

/// Directed kNN graph: `lists[p]` holds the `k` nearest neighbors of point
/// `p`, sorted by (distance, id).
#[derive(Clone, Debug, PartialEq)]
pub struct KnnGraph {
    k: usize,
    lists: Vec<Vec<Neighbor>>,
}

impl KnnGraph {
    /// Wraps per-point lists, checking lengths, sortedness and self-edges.
    pub fn new(k: usize, lists: Vec<Vec<Neighbor>>) -> Result<Self> {
        for (p, list) in lists.iter().enumerate() {
            if list.len() != k {
                return Err(Error::Invariant(format!(
                    "point {p} has {} neighbors, expected {k}",
                    list.len()
                )));
            }
            if list.iter().any(|nb| nb.id.index() == p) {
                return Err(Error::Invariant(format!("point {p} lists itself")));
            }
            if list
                .windows(2)
                .any(|w| w[0].cmp_rank(&w[1]) != Ordering::Less)
            {
                return Err(Error::Invariant(format!(
                    "neighbors of point {p} are not sorted"
                )));
            }
        }
        Ok(KnnGraph { k, lists })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn neighbors(&self, p: PointId) -> &[Neighbor] {
        &self.lists[p.index()]
    }

    pub fn lists(&self) -> &[Vec<Neighbor>] {
        &self.lists
    }

    /// Distance from `p` to its k-th nearest neighbor.
    pub fn kth_distance(&self, p: PointId) -> f64 {
        self.lists[p.index()].last().map_or(0.0, |nb| nb.dist)
    }

    /// First point whose list differs from `other`'s, if any.
    pub fn first_difference(&self, other: &KnnGraph) -> Option<PointId> {
        if self.len() != other.len() || self.k != other.k {
            return Some(PointId(0));
        }
        self.lists
            .iter()
            .zip(&other.lists)
            .position(|(a, b)| {
                a.len() != b.len()
                    || a.iter()
                        .zip(b)
                        .any(|(x, y)| x.id != y.id || x.dist.to_bits() != y.dist.to_bits())
            })
            .map(|i| PointId(i as u32))
    }
}

pub(crate) fn check_k(n: usize, k: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::usage(format!("need at least 2 points, got {n}")));
    }
    if k == 0 || k > n - 1 {
        return Err(Error::usage(format!("k must be in 1..={}, got {k}", n - 1)));
    }
    Ok(())
}
