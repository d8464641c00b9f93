//! Log-log least-squares fits for empirical complexity checks, and the
//! size ladder that feeds them.

use std::time::Instant;

use serde::Serialize;

use crate::engine::{all_knn_with, KnnOptions};
use crate::error::Result;
use crate::gen::{generate, Distribution};
use crate::instrument;
use crate::oracle::brute_all_knn;

/// Slope `b` of the least-squares line through `(ln x, ln y)`, so that
/// `y ≈ a·x^b`. Returns `None` with fewer than two distinct `x` values or
/// any non-positive input.
pub fn fit_exponent(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    if xs
        .iter()
        .chain(ys)
        .any(|&v| v.is_nan() || v <= 0.0 || v.is_infinite())
    {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn n_log_n(n: usize) -> f64 {
    let n = n as f64;
    n * n.ln()
}

pub fn n_squared(n: usize) -> f64 {
    let n = n as f64;
    n * n
}

/// One rung of a scaling run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub wall_ms_min: f64,
    pub wall_ms_median: f64,
    pub distance_evals: u64,
    pub split_work: u64,
    pub pops: u64,
    pub brute_evals: Option<u64>,
    pub brute_ms: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Ladder {
    pub n_list: Vec<usize>,
    pub d: usize,
    pub k: usize,
    pub distribution: Distribution,
    pub seed: u64,
    pub repeats: usize,
    /// Also run the quadratic baseline on every rung.
    pub brute: bool,
}

/// Exponents fitted over a whole ladder.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingFit {
    /// Engine distance evaluations against `n log n`.
    pub evals_vs_nlogn: Option<f64>,
    /// Total small-side split work against `n log n`.
    pub split_vs_nlogn: Option<f64>,
    /// Brute-force distance evaluations against `n^2`.
    pub brute_vs_n2: Option<f64>,
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// Runs the engine (and optionally the baseline) on every size. Counters are
/// deterministic, so only wall time is repeated.
pub fn run_ladder(ladder: &Ladder) -> Result<Vec<ScalingRow>> {
    let repeats = ladder.repeats.max(1);
    let mut rows = Vec::with_capacity(ladder.n_list.len());
    for &n in &ladder.n_list {
        let points = generate(n, ladder.d, ladder.distribution, ladder.seed)?;
        let mut walls = Vec::with_capacity(repeats);
        let mut report = None;
        for _ in 0..repeats {
            let start = Instant::now();
            let (_, r) = all_knn_with(&points, ladder.k, &KnnOptions::default())?;
            walls.push(start.elapsed().as_secs_f64() * 1e3);
            report = Some(r);
        }
        let report = report.expect("at least one repeat");
        let (brute_evals, brute_ms) = if ladder.brute {
            let start = Instant::now();
            let (g, evals) = instrument::count_distances(|| brute_all_knn(&points, ladder.k));
            g?;
            (Some(evals), Some(start.elapsed().as_secs_f64() * 1e3))
        } else {
            (None, None)
        };
        rows.push(ScalingRow {
            n,
            wall_ms_min: walls.iter().copied().fold(f64::INFINITY, f64::min),
            wall_ms_median: median(&mut walls),
            distance_evals: report.distance_evals,
            split_work: report.split_work,
            pops: report.pops,
            brute_evals,
            brute_ms,
        });
    }
    Ok(rows)
}

pub fn fit_ladder(rows: &[ScalingRow]) -> ScalingFit {
    let nlogn: Vec<f64> = rows.iter().map(|r| n_log_n(r.n)).collect();
    let evals: Vec<f64> = rows.iter().map(|r| r.distance_evals as f64).collect();
    let split: Vec<f64> = rows.iter().map(|r| r.split_work as f64).collect();
    let brute: Option<Vec<f64>> = rows
        .iter()
        .map(|r| r.brute_evals.map(|b| b as f64))
        .collect();
    let n2: Vec<f64> = rows.iter().map(|r| n_squared(r.n)).collect();
    ScalingFit {
        evals_vs_nlogn: fit_exponent(&nlogn, &evals),
        split_vs_nlogn: fit_exponent(&nlogn, &split),
        brute_vs_n2: brute.and_then(|b| fit_exponent(&n2, &b)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_laws() {
        let xs = [10.0, 20.0, 40.0, 80.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        assert!((fit_exponent(&xs, &ys).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn n_log_n_against_itself() {
        let ns = [1000, 2000, 4000];
        let xs: Vec<f64> = ns.iter().map(|&n| n_log_n(n)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 7.0 * x).collect();
        assert!((fit_exponent(&xs, &ys).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_ladder() {
        let ladder = Ladder {
            n_list: vec![100, 200, 400],
            d: 2,
            k: 3,
            distribution: Distribution::Uniform,
            seed: 1,
            repeats: 2,
            brute: true,
        };
        let rows = run_ladder(&ladder).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].brute_evals, Some(100 * 99));
        assert!(rows.iter().all(|r| r.wall_ms_min <= r.wall_ms_median));
        let fit = fit_ladder(&rows);
        assert!((fit.brute_vs_n2.unwrap() - 1.0).abs() < 0.01);
        assert!(fit.evals_vs_nlogn.is_some());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(fit_exponent(&[1.0], &[1.0]), None);
        assert_eq!(fit_exponent(&[2.0, 2.0], &[1.0, 3.0]), None);
        assert_eq!(fit_exponent(&[1.0, 2.0], &[0.0, 3.0]), None);
        assert_eq!(fit_exponent(&[1.0, 2.0], &[1.0]), None);
    }
}
