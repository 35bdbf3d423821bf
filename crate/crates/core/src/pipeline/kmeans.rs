use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PipelineError;

pub const MAX_ITERATIONS: usize = 300;
pub const SHIFT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult<const D: usize> {
    pub assignments: Vec<usize>,
    pub centroids: Vec<[f64; D]>,
    pub inertia: f64,
    pub iterations: usize,
}

fn dist2<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

// nearest centroid, lowest index on ties
fn nearest<const D: usize>(p: &[f64; D], centroids: &[[f64; D]]) -> (usize, f64) {
    centroids
        .iter()
        .enumerate()
        .map(|(j, c)| (j, dist2(p, c)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

fn plus_plus_init<const D: usize>(points: &[[f64; D]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; D]> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)]];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if *w > 0.0 && target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            // guard against rounding leaving us on a zero-weight tail point
            if d2[chosen] == 0.0 {
                chosen = d2.iter().rposition(|w| *w > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick];
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min(dist2(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd's algorithm with k-means++ seeding. Empty clusters are re-seeded at
/// the point farthest from its own centroid; deterministic for a fixed seed.
pub fn kmeans<const D: usize>(points: &[[f64; D]], k: usize, seed: u64) -> Result<KMeansResult<D>, PipelineError> {
    let n = points.len();
    if k == 0 || n < k {
        return Err(PipelineError::InsufficientPoints { n, k });
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(PipelineError::InvalidInput("non-finite coordinate".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut assignments = vec![0usize; n];
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        for (a, p) in assignments.iter_mut().zip(points) {
            *a = nearest(p, &centroids).0;
        }

        let mut sums = vec![[0.0; D]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut next = centroids.clone();
        for j in 0..k {
            if counts[j] > 0 {
                next[j] = sums[j].map(|s| s / counts[j] as f64);
            }
        }

        let mut taken = vec![false; n];
        for j in (0..k).filter(|&j| counts[j] == 0) {
            let far = (0..n)
                .filter(|&i| !taken[i])
                .map(|i| (i, dist2(&points[i], &next[assignments[i]])))
                .fold(None, |best: Option<(usize, f64)>, cur| match best {
                    Some(b) if b.1 >= cur.1 => Some(b),
                    _ => Some(cur),
                });
            if let Some((i, d)) = far {
                if d > 0.0 {
                    taken[i] = true;
                    next[j] = points[i];
                }
            }
        }

        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| dist2(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        if shift < SHIFT_TOLERANCE {
            break;
        }
    }

    let mut inertia = 0.0;
    for (a, p) in assignments.iter_mut().zip(points) {
        let (j, d) = nearest(p, &centroids);
        *a = j;
        inertia += d;
    }
    Ok(KMeansResult { assignments, centroids, inertia, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn each_point_its_own_cluster() {
        let pts = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 5.0, 0.0], [3.0, 3.0, 3.0]];
        let r = kmeans(&pts, 4, 11).unwrap();
        assert_eq!(r.inertia, 0.0);
        let mut ids = r.assignments.clone();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 4);
    }

    #[test]
    fn identical_points() {
        let pts = [[2.0, 2.0, 2.0]; 7];
        let r = kmeans(&pts, 2, 3).unwrap();
        assert_eq!(r.inertia, 0.0);
        let nonempty = (0..2).filter(|j| r.assignments.contains(j)).count();
        assert_eq!(nonempty, 1);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            kmeans(&[[0.0; 3]; 2], 3, 0),
            Err(PipelineError::InsufficientPoints { n: 2, k: 3 })
        ));
    }

    #[test]
    fn deterministic_for_seed() {
        let pts: Vec<[f64; 3]> = (0..40).map(|i| [(i * 7 % 13) as f64, (i * 3 % 5) as f64, (i % 4) as f64]).collect();
        assert_eq!(kmeans(&pts, 5, 9).unwrap(), kmeans(&pts, 5, 9).unwrap());
    }
}
