//! Points, rectangles, balls and the Euclidean metric.

use std::fmt;

use crate::error::{Error, Result};
use crate::instrument;

/// Stable identity of an input point: its zero-based position in the dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointId(pub u32);

impl PointId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A dataset of `n` points in `R^dim`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    /// Builds a point set from flat row-major coordinates.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::usage("dimension must be at least 1"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::usage(format!(
                "{} coordinates do not divide into rows of dimension {dim}",
                coords.len()
            )));
        }
        if coords.len() / dim > u32::MAX as usize {
            return Err(Error::usage("too many points"));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::usage(format!(
                "point {} has a non-finite coordinate",
                i / dim
            )));
        }
        Ok(PointSet { dim, coords })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = match rows.first() {
            Some(r) => r.as_ref().len(),
            None => {
                return Err(Error::usage(
                    "cannot infer dimension of an empty point list",
                ))
            }
        };
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::usage(format!(
                    "point {i} has dimension {} but expected {dim}",
                    r.len()
                )));
            }
            coords.extend_from_slice(r);
        }
        Self::from_flat(dim, coords)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, id: PointId) -> &[f64] {
        let start = id.index() * self.dim;
        &self.coords[start..start + self.dim]
    }

    #[inline]
    pub fn coord(&self, id: PointId, axis: usize) -> f64 {
        self.coords[id.index() * self.dim + axis]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (PointId, &[f64])> + '_ {
        self.coords
            .chunks_exact(self.dim)
            .enumerate()
            .map(|(i, c)| (PointId(i as u32), c))
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = PointId> {
        (0..self.len() as u32).map(PointId)
    }

    /// Copies the selected points into a new set, renumbering them from zero.
    pub fn subset(&self, ids: &[PointId]) -> PointSet {
        let mut coords = Vec::with_capacity(ids.len() * self.dim);
        for &id in ids {
            coords.extend_from_slice(self.point(id));
        }
        PointSet {
            dim: self.dim,
            coords,
        }
    }
}

/// Euclidean distance. Counts one evaluation when instrumentation is on.
///
/// Both slices must have the same length; see [`checked_distance`] for the
/// validating variant.
#[inline]
pub fn distance(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    instrument::record_distance();
    p.iter()
        .zip(q)
        .map(|(a, b)| {
            let t = a - b;
            t * t
        })
        .sum::<f64>()
        .sqrt()
}

pub fn checked_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::usage(format!(
            "dimension mismatch: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    Ok(distance(p, q))
}

/// Axis-aligned closed box `[lo_0, hi_0] x ... x [lo_{d-1}, hi_{d-1}]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rect {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Rect {
    /// The smallest rectangle containing every point.
    pub fn bounding<'a, I>(points: I) -> Result<Rect>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut it = points.into_iter();
        let first = it
            .next()
            .ok_or_else(|| Error::usage("bounding rectangle of an empty set"))?;
        let mut lo = first.to_vec();
        let mut hi = first.to_vec();
        for p in it {
            if p.len() != lo.len() {
                return Err(Error::usage("points of mixed dimension"));
            }
            for (i, &c) in p.iter().enumerate() {
                if c < lo[i] {
                    lo[i] = c;
                }
                if c > hi[i] {
                    hi[i] = c;
                }
            }
        }
        Ok(Rect { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    /// Dimension of maximal extent and that extent. Ties go to the lowest
    /// dimension index.
    pub fn longest_side(&self) -> (usize, f64) {
        let mut best = (0, self.extent(0));
        for axis in 1..self.dim() {
            let len = self.extent(axis);
            if len > best.1 {
                best = (axis, len);
            }
        }
        best
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .enumerate()
            .all(|(i, &c)| self.lo[i] <= c && c <= self.hi[i])
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.dim() {
            if i > 0 {
                f.write_str(" x ")?;
            }
            write!(f, "{}..{}", self.lo[i], self.hi[i])?;
        }
        f.write_str("]")
    }
}

/// Closed ball `{x : |x - center| <= radius}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        debug_assert!(radius >= 0.0);
        Ball { center, radius }
    }

    pub fn point(p: &[f64]) -> Self {
        Ball {
            center: p.to_vec(),
            radius: 0.0,
        }
    }

    /// Containment with an absolute slack for accumulated rounding.
    pub fn contains_within(&self, p: &[f64], slack: f64) -> bool {
        distance(&self.center, p) <= self.radius + slack
    }
}
