use rand::Rng;

use crate::geometry::Vec3;

pub const MAX_LLOYD_ROUNDS: usize = 100;

fn nearest_center(p: &Vec3, centers: &[Vec3]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = (p - c).norm_squared();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// k-means++ seeding followed by Lloyd iterations until the assignment is
/// a fixpoint or [`MAX_LLOYD_ROUNDS`] rounds have run. Empty clusters keep
/// their previous center.
///
/// Panics unless `1 <= k <= points.len()`.
pub fn kmeans_centers<R: Rng + ?Sized>(points: &[Vec3], k: usize, rng: &mut R) -> Vec<Vec3> {
    assert!(k >= 1 && k <= points.len(), "need 1 <= k <= |points|");
    let mut centers = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|p| (p - centers[0]).norm_squared()).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    chosen = Some(i);
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            chosen.expect("positive total implies a positive weight")
        } else {
            // Every point coincides with a center already.
            0
        };
        let c = points[pick];
        centers.push(c);
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min((p - c).norm_squared());
        }
    }

    let mut assignment: Vec<usize> = points.iter().map(|p| nearest_center(p, &centers)).collect();
    for _ in 0..MAX_LLOYD_ROUNDS {
        let mut sums = vec![Vec3::zeros(); k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignment) {
            sums[a] += p;
            counts[a] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centers[j] = sums[j] / counts[j] as f64;
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest_center(p, &centers)).collect();
        if next == assignment {
            break;
        }
        assignment = next;
    }
    centers
}
