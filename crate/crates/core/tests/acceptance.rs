//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the lines always reach the test log.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use allknn::io::graph_to_string;
use allknn::oracle::brute_all_knn_parallel;
use allknn::scaling::{fit_ladder, run_ladder, Ladder};
use allknn::{
    all_knn_with, annotate, build_rst, exact_meb, generate, meb_update, Distribution, KnnOptions,
    PointSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

const DISTRIBUTIONS: [Distribution; 3] = [
    Distribution::Uniform,
    Distribution::Gaussian,
    Distribution::Clustered { clusters: 10 },
];

/// Byte comparison of engine and oracle graph files, plus the tree's
/// structural bounds. `Err` carries a description of the first failure.
fn engine_vs_oracle(points: &PointSet, k: usize, opts: &KnnOptions) -> Result<TreeShape, String> {
    let (graph, _) = all_knn_with(points, k, opts).map_err(|e| e.to_string())?;
    let oracle = brute_all_knn_parallel(points, k).map_err(|e| e.to_string())?;
    if graph_to_string(&graph) != graph_to_string(&oracle) {
        let p = graph.first_difference(&oracle).map(|p| p.0);
        return Err(format!("graph differs from oracle at point {p:?}"));
    }
    tree_shape(points)
}

struct TreeShape {
    ok: bool,
}

fn tree_shape(points: &PointSet) -> Result<TreeShape, String> {
    let mut t = build_rst(points).map_err(|e| e.to_string())?;
    annotate(&mut t, points).map_err(|e| e.to_string())?;
    let n = points.len();
    let ok = t.leaf_count() == n && t.node_count() <= 2 * n && t.validate(points).is_ok();
    Ok(TreeShape { ok })
}

struct GridResult {
    instances: usize,
    failures: Vec<String>,
    trees_ok: usize,
    elapsed: Duration,
}

fn oracle_grid() -> GridResult {
    let start = Instant::now();
    let mut cases = Vec::new();
    for n in [2usize, 3, 10, 100, 500, 2000] {
        for d in [1usize, 2, 3, 5] {
            let mut ks: Vec<usize> = [1, 2, 5, 10.min(n - 1)]
                .into_iter()
                .filter(|&k| k < n)
                .collect();
            ks.dedup();
            for k in ks {
                for dist in DISTRIBUTIONS {
                    for seed in 0..3u64 {
                        cases.push((n, d, k, dist, seed));
                    }
                }
            }
        }
    }
    let results: Vec<(String, Result<TreeShape, String>)> = cases
        .par_iter()
        .map(|&(n, d, k, dist, seed)| {
            let label = format!("n={n} d={d} k={k} {dist} seed={seed}");
            let out = generate(n, d, dist, seed)
                .map_err(|e| e.to_string())
                .and_then(|pts| engine_vs_oracle(&pts, k, &KnnOptions::default()));
            (label, out)
        })
        .collect();
    let mut failures = Vec::new();
    let mut trees_ok = 0;
    for (label, r) in &results {
        match r {
            Ok(shape) => trees_ok += shape.ok as usize,
            Err(e) => failures.push(format!("{label}: {e}")),
        }
    }
    GridResult {
        instances: results.len(),
        failures,
        trees_ok,
        elapsed: start.elapsed(),
    }
}

fn invariant_suite() -> GridResult {
    let start = Instant::now();
    let opts = KnnOptions {
        assert_every: 1,
        ..KnnOptions::default()
    };
    let results: Vec<(String, Result<TreeShape, String>)> = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + i);
            let n = rng.gen_range(2..=500);
            let d = rng.gen_range(1..=5);
            let k = rng.gen_range(1..=10.min(n - 1));
            let dist = DISTRIBUTIONS[i as usize % 3];
            let label = format!("n={n} d={d} k={k} {dist} seed={i}");
            let out = generate(n, d, dist, i)
                .map_err(|e| e.to_string())
                .and_then(|pts| engine_vs_oracle(&pts, k, &opts));
            (label, out)
        })
        .collect();
    let mut failures = Vec::new();
    let mut trees_ok = 0;
    for (label, r) in &results {
        match r {
            Ok(shape) => trees_ok += shape.ok as usize,
            Err(e) => failures.push(format!("{label}: {e}")),
        }
    }
    GridResult {
        instances: results.len(),
        failures,
        trees_ok,
        elapsed: start.elapsed(),
    }
}

fn grid_outcome(g: &GridResult) -> Outcome {
    let detail = match g.failures.first() {
        None => format!("{} instances identical in {:.1?}", g.instances, g.elapsed),
        Some(first) => format!(
            "{} of {} failed, first: {first}",
            g.failures.len(),
            g.instances
        ),
    };
    Outcome::new(g.failures.is_empty(), detail)
}

fn meb_guarantee() -> Outcome {
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_ratio = 0.0f64;
    let mut failures = 0;
    for i in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + i);
        let n = rng.gen_range(1..=200);
        let d = rng.gen_range(1..=5);
        let rows: Vec<Vec<f64>> = match i % 4 {
            0 => (0..n)
                .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect(),
            1 => {
                // points on a sphere
                (0..n)
                    .map(|_| {
                        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                        v.iter().map(|x| 3.0 * x / norm).collect()
                    })
                    .collect()
            }
            2 => {
                // two far clumps
                (0..n)
                    .map(|j| {
                        let off = if j % 2 == 0 { 0.0 } else { 50.0 };
                        (0..d).map(|_| off + rng.gen_range(0.0..0.5)).collect()
                    })
                    .collect()
            }
            _ => {
                // nearly collinear
                (0..n)
                    .map(|_| {
                        let t: f64 = rng.gen_range(-10.0..10.0);
                        (0..d)
                            .map(|a| {
                                if a == 0 {
                                    t
                                } else {
                                    0.5 * t + rng.gen_range(-1e-3..1e-3)
                                }
                            })
                            .collect()
                    })
                    .collect()
            }
        };
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let approx = meb_update(None, refs.iter().copied()).expect("nonempty batch");
        let exact = exact_meb(&refs).expect("exact ball");
        let excess = refs
            .iter()
            .map(|p| allknn::distance(&approx.center, p) - approx.radius)
            .fold(f64::NEG_INFINITY, f64::max);
        worst_excess = worst_excess.max(excess);
        let ratio = if exact.radius > 0.0 {
            approx.radius / exact.radius
        } else {
            1.0
        };
        worst_ratio = worst_ratio.max(ratio);
        let contains = excess <= 1e-9;
        let within = approx.radius <= 1.5 * exact.radius * (1.0 + 1e-6);
        if !contains || !within {
            failures += 1;
        }
    }
    Outcome::new(
        failures == 0,
        format!("200 sets, worst containment excess {worst_excess:.3e}, worst radius ratio {worst_ratio:.4}"),
    )
}

fn structural(grid: &GridResult, inv: &GridResult) -> Outcome {
    let total = grid.instances + inv.instances;
    let ok = grid.trees_ok + inv.trees_ok;
    let failed_runs = grid.failures.len() + inv.failures.len();
    Outcome::new(
        ok == total,
        format!("{ok} of {total} trees have n leaves and at most 2n nodes ({failed_runs} runs errored before the tree check)"),
    )
}

fn in_range(b: Option<f64>, lo: f64, hi: f64) -> bool {
    b.is_some_and(|b| (lo..=hi).contains(&b))
}

fn fmt_b(b: Option<f64>) -> String {
    b.map_or("n/a".into(), |b| format!("{b:.4}"))
}

fn scaling() -> (Outcome, Outcome) {
    let start = Instant::now();
    let ladder = Ladder {
        n_list: vec![1000, 2000, 4000, 8000, 16000],
        d: 2,
        k: 5,
        distribution: Distribution::Uniform,
        seed: 1,
        repeats: 1,
        brute: true,
    };
    let rows = match run_ladder(&ladder) {
        Ok(rows) => rows,
        Err(e) => {
            let o = Outcome::new(false, format!("ladder failed: {e}"));
            return (Outcome::new(false, o.detail.clone()), o);
        }
    };
    let fit = fit_ladder(&rows);
    let elapsed = start.elapsed();
    let evals_ok = in_range(fit.evals_vs_nlogn, 0.9, 1.15);
    let brute_ok = in_range(fit.brute_vs_n2, 0.95, 1.05);
    let linearithmic = Outcome::new(
        evals_ok && brute_ok,
        format!(
            "dist_evals vs n log n b={} (want [0.9, 1.15]), brute vs n^2 b={} (want [0.95, 1.05]), {:.1?}",
            fmt_b(fit.evals_vs_nlogn),
            fmt_b(fit.brute_vs_n2),
            elapsed
        ),
    );
    let split = Outcome::new(
        in_range(fit.split_vs_nlogn, 0.9, 1.1),
        format!(
            "split work vs n log n b={} (want [0.9, 1.1])",
            fmt_b(fit.split_vs_nlogn)
        ),
    );
    (linearithmic, split)
}

fn degenerate() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut cases: Vec<(String, PointSet, usize)> = Vec::new();

    let sites: Vec<[f64; 3]> = (0..10).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
    let dup: Vec<[f64; 3]> = (0..1000).map(|_| sites[rng.gen_range(0..10)]).collect();
    let dup = PointSet::from_rows(&dup).unwrap();
    for k in [1, 5, 10, 150] {
        cases.push((format!("duplicates k={k}"), dup.clone(), k));
    }

    let line: Vec<[f64; 3]> = (0..1000)
        .map(|_| {
            let t: f64 = rng.gen_range(-5.0..5.0);
            [t, 2.0 * t + 1.0, -t]
        })
        .collect();
    let line = PointSet::from_rows(&line).unwrap();
    let grid_line =
        PointSet::from_flat(2, (0..600).flat_map(|i| [(i % 300) as f64, 0.0]).collect()).unwrap();
    for k in [1, 5, 10] {
        cases.push((format!("collinear k={k}"), line.clone(), k));
        cases.push((format!("collinear lattice k={k}"), grid_line.clone(), k));
    }

    for (n, d) in [(2, 1), (3, 2), (40, 3), (120, 2)] {
        let pts = generate(n, d, Distribution::Uniform, 9).unwrap();
        cases.push((format!("k=n-1 n={n} d={d}"), pts, n - 1));
    }
    let same = PointSet::from_flat(2, vec![0.5; 2 * 50]).unwrap();
    cases.push(("all coincident k=n-1".into(), same, 49));

    let failures: Vec<String> = cases
        .par_iter()
        .filter_map(|(label, pts, k)| {
            engine_vs_oracle(pts, *k, &KnnOptions::default())
                .err()
                .map(|e| format!("{label}: {e}"))
        })
        .collect();
    let detail = match failures.first() {
        None => format!("{} degenerate instances terminated and match", cases.len()),
        Some(f) => format!("{} of {} failed, first: {f}", failures.len(), cases.len()),
    };
    Outcome::new(failures.is_empty(), detail)
}

fn report(id: u32, name: &str, o: &Outcome) {
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    println!("[{verdict}] criterion {id} {name}: {}", o.detail);
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let grid = oracle_grid();
    let inv = invariant_suite();
    let results = [
        (1, "oracle equivalence", grid_outcome(&grid)),
        (2, "invariant suite", grid_outcome(&inv)),
        (3, "3/2 enclosing ball", meb_guarantee()),
        (4, "structural bounds", structural(&grid, &inv)),
    ];
    let (linearithmic, split) = scaling();
    let results = results.into_iter().chain([
        (5, "linearithmic scaling", linearithmic),
        (6, "split work", split),
        (7, "degenerate inputs", degenerate()),
    ]);
    let mut all = true;
    for (id, name, o) in results {
        report(id, name, &o);
        all &= o.pass;
    }
    if all {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: some criteria failed");
        ExitCode::FAILURE
    }
}
