//! Seeded synthetic point clouds.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::PointSet;

/// Standard deviation of each cluster around its center.
pub const CLUSTER_SPREAD: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Distribution {
    /// iid uniform in `[0, 1]^d`.
    Uniform,
    /// iid standard normal per coordinate.
    Gaussian,
    /// Centers uniform in `[0, 1]^d`, points normal around a uniformly
    /// chosen center.
    Clustered { clusters: usize },
}

impl Distribution {
    pub fn name(&self) -> &'static str {
        match self {
            Distribution::Uniform => "uniform",
            Distribution::Gaussian => "gaussian",
            Distribution::Clustered { .. } => "clustered",
        }
    }

    /// Parses a distribution name; `clusters` only applies to `clustered`.
    pub fn parse(name: &str, clusters: usize) -> Result<Self> {
        match name {
            "uniform" => Ok(Distribution::Uniform),
            "gaussian" => Ok(Distribution::Gaussian),
            "clustered" => Ok(Distribution::Clustered { clusters }),
            other => Err(Error::usage(format!("unknown distribution {other:?}"))),
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Distribution::parse(s, 10)
    }
}

/// Draws `n` points in `d` dimensions. The same arguments always produce the
/// same points.
pub fn generate(n: usize, d: usize, dist: Distribution, seed: u64) -> Result<PointSet> {
    if n == 0 || d == 0 {
        return Err(Error::usage(format!(
            "need n >= 1 and d >= 1, got n={n} d={d}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::with_capacity(n * d);
    match dist {
        Distribution::Uniform => coords.extend((0..n * d).map(|_| rng.gen::<f64>())),
        Distribution::Gaussian => {
            coords.extend((0..n * d).map(|_| -> f64 { StandardNormal.sample(&mut rng) }))
        }
        Distribution::Clustered { clusters } => {
            if clusters == 0 {
                return Err(Error::usage("clustered data needs at least one cluster"));
            }
            let centers: Vec<f64> = (0..clusters * d).map(|_| rng.gen()).collect();
            let spread = Normal::new(0.0, CLUSTER_SPREAD).expect("valid spread");
            for _ in 0..n {
                let c = rng.gen_range(0..clusters);
                for axis in 0..d {
                    coords.push(centers[c * d + axis] + spread.sample(&mut rng));
                }
            }
        }
    }
    PointSet::from_flat(d, coords)
}
