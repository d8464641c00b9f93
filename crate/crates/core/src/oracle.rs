//! Brute-force ground truth: quadratic all-kNN and exact minimum enclosing
//! balls for small sets.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{distance, Ball, PointId, PointSet};
use crate::graph::{check_k, KnnGraph, Neighbor};

/// Largest set [`exact_meb`] accepts by default.
pub const EXACT_MEB_CAP: usize = 200;

fn knn_of(points: &PointSet, p: PointId, k: usize) -> Vec<Neighbor> {
    let here = points.point(p);
    let mut all: Vec<Neighbor> = points
        .iter()
        .filter(|&(q, _)| q != p)
        .map(|(q, c)| Neighbor {
            id: q,
            dist: distance(here, c),
        })
        .collect();
    if k < all.len() {
        all.select_nth_unstable_by(k, Neighbor::cmp_rank);
        all.truncate(k);
    }
    all.sort_unstable_by(Neighbor::cmp_rank);
    all
}

/// Computes every point's k nearest neighbors from all `n - 1` distances.
/// Runs on the calling thread, so its distance evaluations are counted there.
pub fn brute_all_knn(points: &PointSet, k: usize) -> Result<KnnGraph> {
    check_k(points.len(), k)?;
    let lists = points.ids().map(|p| knn_of(points, p, k)).collect();
    KnnGraph::new(k, lists)
}

/// Same result as [`brute_all_knn`], spread over the rayon pool.
pub fn brute_all_knn_parallel(points: &PointSet, k: usize) -> Result<KnnGraph> {
    check_k(points.len(), k)?;
    let lists = (0..points.len() as u32)
        .into_par_iter()
        .map(|p| knn_of(points, PointId(p), k))
        .collect();
    KnnGraph::new(k, lists)
}

/// Exact minimum enclosing ball of at most [`EXACT_MEB_CAP`] points.
pub fn exact_meb(points: &[&[f64]]) -> Result<Ball> {
    exact_meb_with_cap(points, EXACT_MEB_CAP)
}

/// Welzl's move-to-front recursion. The support set never exceeds `d + 1`
/// points, so recursion depth is bounded by the dimension.
pub fn exact_meb_with_cap(points: &[&[f64]], cap: usize) -> Result<Ball> {
    if points.is_empty() {
        return Err(Error::usage("exact MEB of an empty set"));
    }
    if points.len() > cap {
        return Err(Error::usage(format!(
            "exact MEB limited to {cap} points, got {}",
            points.len()
        )));
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::usage("points of mixed dimension"));
    }
    let mut pts: Vec<&[f64]> = points.to_vec();
    let mut support: Vec<&[f64]> = Vec::with_capacity(d + 1);
    let end = pts.len();
    let ball = mtf(&mut pts, end, &mut support, d).expect("nonempty input");

    let scale = ball.radius.max(1e-300);
    for p in points {
        let excess = distance(&ball.center, p) - ball.radius;
        if excess > 1e-9 * scale + 1e-12 {
            return Err(Error::Invariant(format!(
                "exact MEB misses a point by {excess:e}"
            )));
        }
    }
    Ok(ball)
}

fn contains(ball: &Option<Ball>, p: &[f64]) -> bool {
    match ball {
        None => false,
        Some(b) => distance(&b.center, p) <= b.radius * (1.0 + 1e-12) + 1e-14,
    }
}

fn mtf<'a>(
    pts: &mut [&'a [f64]],
    end: usize,
    support: &mut Vec<&'a [f64]>,
    d: usize,
) -> Option<Ball> {
    let mut ball = circumball(support);
    if support.len() == d + 1 {
        return ball;
    }
    for i in 0..end {
        if !contains(&ball, pts[i]) {
            support.push(pts[i]);
            ball = mtf(pts, i, support, d);
            support.pop();
            pts[..=i].rotate_right(1);
        }
    }
    ball
}

/// Smallest ball with every support point on its boundary: the center lies in
/// the affine hull of the support, found by solving the Gram system.
fn circumball(support: &[&[f64]]) -> Option<Ball> {
    let (&p0, rest) = support.split_first()?;
    if rest.is_empty() {
        return Some(Ball::point(p0));
    }
    let m = rest.len();
    let vs: Vec<Vec<f64>> = rest
        .iter()
        .map(|p| p.iter().zip(p0).map(|(a, b)| a - b).collect())
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    // augmented matrix [G | rhs]
    let mut a: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row: Vec<f64> = (0..m).map(|j| dot(&vs[i], &vs[j])).collect();
            row.push(0.5 * dot(&vs[i], &vs[i]));
            row
        })
        .collect();
    let lambda = solve(&mut a, m);
    let mut center = p0.to_vec();
    for (l, v) in lambda.iter().zip(&vs) {
        for (c, x) in center.iter_mut().zip(v) {
            *c += l * x;
        }
    }
    let radius = support
        .iter()
        .map(|p| distance(&center, p))
        .fold(0.0, f64::max);
    Some(Ball { center, radius })
}

/// Gaussian elimination with partial pivoting. Near-singular pivots are
/// treated as zero and their unknowns set to zero.
fn solve(a: &mut [Vec<f64>], m: usize) -> Vec<f64> {
    let scale = a
        .iter()
        .flat_map(|r| r[..m].iter())
        .fold(0.0f64, |s, x| s.max(x.abs()))
        .max(1e-300);
    let mut pivots = vec![usize::MAX; m];
    let mut row = 0;
    for col in 0..m {
        let best = (row..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()));
        let Some(best) = best else { break };
        if a[best][col].abs() <= 1e-12 * scale {
            continue;
        }
        a.swap(row, best);
        let pivot = a[row].clone();
        for (i, r) in a.iter_mut().enumerate() {
            if i != row {
                let f = r[col] / pivot[col];
                if f != 0.0 {
                    for (x, p) in r[col..=m].iter_mut().zip(&pivot[col..=m]) {
                        *x -= f * p;
                    }
                }
            }
        }
        pivots[col] = row;
        row += 1;
    }
    (0..m)
        .map(|col| match pivots[col] {
            usize::MAX => 0.0,
            r => a[r][m] / a[r][col],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;
    use proptest::prelude::*;

    fn ids(list: &[Neighbor]) -> Vec<u32> {
        list.iter().map(|nb| nb.id.0).collect()
    }

    #[test]
    fn line_k1() {
        let pts = PointSet::from_flat(1, vec![0.0, 1.0, 3.0, 7.0]).unwrap();
        let g = brute_all_knn(&pts, 1).unwrap();
        let got: Vec<Vec<u32>> = g.lists().iter().map(|l| ids(l)).collect();
        assert_eq!(got, vec![vec![1], vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn complete_lists_when_k_is_n_minus_1() {
        let pts = PointSet::from_flat(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 2.0, 5.0, 5.0]).unwrap();
        let g = brute_all_knn(&pts, 3).unwrap();
        for (p, list) in g.lists().iter().enumerate() {
            let mut got = ids(list);
            got.sort();
            let want: Vec<u32> = (0..4).filter(|&q| q != p as u32).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn ties_go_to_smaller_id() {
        // 0 is equidistant from 1 and 2
        let pts = PointSet::from_flat(1, vec![0.0, -1.0, 1.0]).unwrap();
        let g = brute_all_knn(&pts, 1).unwrap();
        assert_eq!(ids(g.neighbors(PointId(0))), vec![1]);
    }

    #[test]
    fn k_out_of_range() {
        let pts = PointSet::from_flat(1, vec![0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(brute_all_knn(&pts, 0), Err(Error::Usage(_))));
        assert!(matches!(brute_all_knn(&pts, 3), Err(Error::Usage(_))));
        let one = PointSet::from_flat(1, vec![0.0]).unwrap();
        assert!(matches!(brute_all_knn(&one, 1), Err(Error::Usage(_))));
    }

    #[test]
    fn parallel_matches_sequential() {
        let coords: Vec<f64> = (0..600)
            .map(|i| ((i * 7919) % 1000) as f64 / 1000.0)
            .collect();
        let pts = PointSet::from_flat(3, coords).unwrap();
        assert_eq!(
            brute_all_knn(&pts, 4).unwrap(),
            brute_all_knn_parallel(&pts, 4).unwrap()
        );
    }

    #[test]
    fn meb_two_points() {
        let b = exact_meb(&[&[0.0, 0.0], &[2.0, 4.0]]).unwrap();
        assert!((b.center[0] - 1.0).abs() < 1e-12 && (b.center[1] - 2.0).abs() < 1e-12);
        assert!((b.radius - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn meb_equilateral_triangle() {
        let s = 3.0;
        let h = s * 3f64.sqrt() / 2.0;
        let b = exact_meb(&[&[0.0, 0.0], &[s, 0.0], &[s / 2.0, h]]).unwrap();
        assert!((b.radius - s / 3f64.sqrt()).abs() < 1e-7 * b.radius);
    }

    #[test]
    fn meb_sphere_with_interior_points() {
        // points on the unit sphere in R^4 plus interior clutter
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for i in 0..4 {
            for s in [-1.0, 1.0] {
                let mut v = vec![0.0; 4];
                v[i] = s;
                rows.push(v);
            }
        }
        for i in 0..40 {
            let t = i as f64;
            rows.push(vec![
                0.3 * t.sin(),
                0.2 * t.cos(),
                0.1,
                -0.4 * (t * 0.3).sin(),
            ]);
        }
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let b = exact_meb(&refs).unwrap();
        assert!((b.radius - 1.0).abs() < 1e-7);
    }

    #[test]
    fn meb_cap_enforced() {
        let rows = [[0.0]; 5];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        assert!(matches!(exact_meb_with_cap(&refs, 4), Err(Error::Usage(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]
        #[test]
        fn rect_and_radius_bracket(
            d in 1usize..5,
            flat in prop::collection::vec(-10.0..10.0f64, 4..120),
        ) {
            let n = flat.len() / d;
            prop_assume!(n >= 1);
            let rows: Vec<&[f64]> = flat[..n * d].chunks(d).collect();
            let ball = exact_meb(&rows).unwrap();
            let lmax = Rect::bounding(rows.iter().copied()).unwrap().longest_side().1;
            let tol = 1e-9 * (1.0 + lmax);
            prop_assert!(lmax <= 2.0 * ball.radius + tol);
            prop_assert!(2.0 * ball.radius <= (d as f64).sqrt() * lmax + tol);
        }

        #[test]
        fn exact_radius_is_minimal_against_shifts(
            flat in prop::collection::vec(-5.0..5.0f64, 6..60),
        ) {
            // no perturbed center encloses the points with a smaller radius
            let rows: Vec<&[f64]> = flat.chunks_exact(3).collect();
            let ball = exact_meb(&rows).unwrap();
            for axis in 0..3 {
                for s in [-1e-3, 1e-3] {
                    let mut c = ball.center.clone();
                    c[axis] += s;
                    let r = rows.iter().map(|p| distance(&c, p)).fold(0.0, f64::max);
                    prop_assert!(r >= ball.radius * (1.0 - 1e-9));
                }
            }
        }
    }
}
