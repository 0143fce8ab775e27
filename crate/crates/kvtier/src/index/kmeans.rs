//! Seeded k-means with k-means++ initialization and empty-cluster repair.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 25;
pub const REL_INERTIA_TOL: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub centroids: Vec<Vec<f32>>,
    /// Cluster id per input point.
    pub assignment: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
}

fn sq_dist(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = *x as f64 - *y as f64;
            d * d
        })
        .sum()
}

/// Argmin over centroids; ties resolved toward the lower centroid id.
fn nearest(point: &[f32], centroids: &[Vec<f32>]) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (ci, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best_d {
            best_d = d;
            best = ci;
        }
    }
    (best, best_d)
}

fn kmeanspp_init(points: &[Vec<f32>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f32>> {
    let mut centroids: Vec<Vec<f32>> = Vec::with_capacity(k);
    let first = rng.random_range(0..points.len());
    centroids.push(points[first].clone());
    let mut dists: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = dists.iter().sum();
        let next = if total <= 0.0 {
            // All remaining points coincide with a centroid; any point works.
            rng.random_range(0..points.len())
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, d) in dists.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centroids.push(points[next].clone());
        let latest = centroids.last().unwrap();
        for (i, p) in points.iter().enumerate() {
            let d = sq_dist(p, latest);
            if d < dists[i] {
                dists[i] = d;
            }
        }
    }
    centroids
}

/// Move the farthest point of the largest cluster into each empty cluster.
fn repair_empty(
    points: &[Vec<f32>],
    centroids: &mut [Vec<f32>],
    assignment: &mut [usize],
    counts: &mut [usize],
) {
    for empty in 0..centroids.len() {
        if counts[empty] > 0 {
            continue;
        }
        let donor = (0..centroids.len())
            .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
            .unwrap();
        if counts[donor] <= 1 {
            continue;
        }
        let victim = (0..points.len())
            .filter(|&i| assignment[i] == donor)
            .max_by(|&a, &b| {
                sq_dist(&points[a], &centroids[donor])
                    .total_cmp(&sq_dist(&points[b], &centroids[donor]))
                    .then(b.cmp(&a))
            })
            .unwrap();
        assignment[victim] = empty;
        counts[donor] -= 1;
        counts[empty] += 1;
        centroids[empty] = points[victim].clone();
    }
}

pub fn kmeans(points: &[Vec<f32>], k: usize, seed: u64) -> Result<KMeansResult> {
    if points.is_empty() {
        return Err(Error::EmptyInput("k-means over no points"));
    }
    if k == 0 || k > points.len() {
        return Err(Error::InvalidConfig(format!(
            "k must be in [1, {}], got {k}",
            points.len()
        )));
    }
    let dim = points[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeanspp_init(points, k, &mut rng);
    let mut assignment = vec![0usize; points.len()];
    let mut prev_inertia = f64::INFINITY;
    let mut iterations = 0;

    for iter in 0..MAX_ITERATIONS {
        iterations = iter + 1;
        let mut inertia = 0.0;
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            let (ci, d) = nearest(p, &centroids);
            assignment[i] = ci;
            counts[ci] += 1;
            inertia += d;
        }
        repair_empty(points, &mut centroids, &mut assignment, &mut counts);

        // Mean update.
        let mut sums = vec![vec![0f64; dim]; k];
        for (i, p) in points.iter().enumerate() {
            let acc = &mut sums[assignment[i]];
            for (a, x) in acc.iter_mut().zip(p) {
                *a += *x as f64;
            }
        }
        for ci in 0..k {
            if counts[ci] > 0 {
                centroids[ci] = sums[ci]
                    .iter()
                    .map(|s| (s / counts[ci] as f64) as f32)
                    .collect();
            }
        }

        let rel = (prev_inertia - inertia).abs() / prev_inertia.max(1e-12);
        if prev_inertia.is_finite() && rel < REL_INERTIA_TOL {
            break;
        }
        prev_inertia = inertia;
    }

    // Final assignment against the updated centroids.
    let mut inertia = 0.0;
    let mut counts = vec![0usize; k];
    for (i, p) in points.iter().enumerate() {
        let (ci, d) = nearest(p, &centroids);
        assignment[i] = ci;
        counts[ci] += 1;
        inertia += d;
    }
    repair_empty(points, &mut centroids, &mut assignment, &mut counts);

    Ok(KMeansResult {
        centroids,
        assignment,
        inertia,
        iterations,
    })
}

/// Inertia of an arbitrary labeling, with centroids at the label means.
/// Reference oracle for "k-means beats random assignment".
pub fn labeling_inertia(points: &[Vec<f32>], labels: &[usize], k: usize) -> f64 {
    let dim = points[0].len();
    let mut sums = vec![vec![0f64; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (a, x) in sums[l].iter_mut().zip(p) {
            *a += *x as f64;
        }
    }
    let means: Vec<Vec<f32>> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| {
            if c == 0 {
                vec![0.0; dim]
            } else {
                s.iter().map(|v| (v / c as f64) as f32).collect()
            }
        })
        .collect();
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, &means[l]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn two_clouds(seed: u64, per_cloud: usize) -> Vec<Vec<f32>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::new();
        for c in 0..2 {
            let center = if c == 0 { -5.0f32 } else { 5.0 };
            for _ in 0..per_cloud {
                pts.push(vec![
                    center + rng.random_range(-0.5..0.5),
                    center + rng.random_range(-0.5..0.5),
                ]);
            }
        }
        pts
    }

    #[test]
    fn separable_clouds_split_cleanly() {
        let pts = two_clouds(3, 16);
        let result = kmeans(&pts, 2, 0).unwrap();
        let first = result.assignment[0];
        assert!(result.assignment[..16].iter().all(|&a| a == first));
        assert!(result.assignment[16..].iter().all(|&a| a != first));
    }

    #[test]
    fn k_equals_points_gives_singletons() {
        let pts = two_clouds(4, 4);
        let result = kmeans(&pts, 8, 1).unwrap();
        let mut seen = vec![0usize; 8];
        for (&a, p) in result.assignment.iter().zip(&pts) {
            seen[a] += 1;
            assert_eq!(&result.centroids[a], p);
        }
        assert!(seen.iter().all(|&c| c == 1));
        assert!(result.inertia < 1e-12);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let pts = two_clouds(5, 32);
        let a = kmeans(&pts, 4, 9).unwrap();
        let b = kmeans(&pts, 4, 9).unwrap();
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.centroids, b.centroids);
    }

    #[test]
    fn beats_random_assignment_over_seeds() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for seed in 0..20u64 {
            let pts: Vec<Vec<f32>> = (0..64)
                .map(|_| (0..6).map(|_| rng.random_range(-1.0f32..1.0)).collect())
                .collect();
            let fit = kmeans(&pts, 8, seed).unwrap();
            let labels: Vec<usize> = (0..64).map(|_| rng.random_range(0..8)).collect();
            let random_inertia = labeling_inertia(&pts, &labels, 8);
            assert!(
                fit.inertia <= random_inertia,
                "seed {seed}: {} > {}",
                fit.inertia,
                random_inertia
            );
        }
    }
}
