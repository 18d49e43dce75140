use nalgebra::{Matrix3, SymmetricEigen};

use super::{GeometryError, KdTree, SurfaceCloud, Vec3};

pub const DEFAULT_NORMAL_NEIGHBORS: usize = 10;

/// Centroid raised by one meter along +z.
pub fn default_viewpoint(points: &[Vec3]) -> Vec3 {
    let c = if points.is_empty() {
        Vec3::zeros()
    } else {
        points.iter().sum::<Vec3>() / points.len() as f64
    };
    c + Vec3::new(0.0, 0.0, 1.0)
}

/// Per-point normal from the smallest principal axis of the `k` nearest
/// neighbors (the point itself included), flipped to face `viewpoint`.
pub fn estimate_normals(points: &[Vec3], k: usize, viewpoint: Option<Vec3>) -> Result<SurfaceCloud, GeometryError> {
    if k < 3 || points.len() <= k {
        return Err(GeometryError::InvalidArgument(format!(
            "normal estimation needs k >= 3 and more than k points (k = {k}, n = {})",
            points.len()
        )));
    }
    let viewpoint = viewpoint.unwrap_or_else(|| default_viewpoint(points));
    let tree = KdTree::new(points);
    let mut normals = Vec::with_capacity(points.len());
    for (index, p) in points.iter().enumerate() {
        let hood = tree.knn(p, k);
        let mean = hood.iter().map(|&(i, _)| points[i]).sum::<Vec3>() / hood.len() as f64;
        let mut cov = Matrix3::zeros();
        for &(i, _) in &hood {
            let d = points[i] - mean;
            cov += d * d.transpose();
        }
        let eig = SymmetricEigen::new(cov);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let largest = eig.eigenvalues[order[2]];
        let middle = eig.eigenvalues[order[1]];
        if largest <= 0.0 || middle <= largest * 1e-12 {
            return Err(GeometryError::DegenerateNeighborhood { index });
        }
        let mut n: Vec3 = eig.eigenvectors.column(order[0]).into_owned();
        if n.dot(&(viewpoint - p)) < 0.0 {
            n = -n;
        }
        normals.push(n);
    }
    SurfaceCloud::new(points.to_vec(), normals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{RigidMotion, Rotation};

    fn grid_plane() -> Vec<Vec3> {
        let mut pts = Vec::new();
        for i in 0..12 {
            for j in 0..12 {
                pts.push(Vec3::new(i as f64 * 0.01, j as f64 * 0.01, 0.0));
            }
        }
        pts
    }

    fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        (0..n)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let th = golden * i as f64;
                Vec3::new(r * th.cos(), r * th.sin(), z)
            })
            .collect()
    }

    #[test]
    fn plane_normals_face_viewpoint() {
        let c = estimate_normals(&grid_plane(), 10, Some(Vec3::new(0.0, 0.0, 1.0))).unwrap();
        for n in c.normals() {
            assert!((n.into_inner() - Vec3::z()).abs().max() < 1e-6);
        }
    }

    #[test]
    fn sphere_normals_are_radial() {
        let pts = fibonacci_sphere(2000);
        // Oriented toward the center, then flipped outward.
        let c = estimate_normals(&pts, 10, Some(Vec3::zeros())).unwrap().flipped();
        let max_angle = c
            .points()
            .iter()
            .zip(c.normals())
            .map(|(p, n)| n.dot(&p.normalize()).clamp(-1.0, 1.0).acos())
            .fold(0.0f64, f64::max);
        assert!(max_angle < 5f64.to_radians(), "max angle {}", max_angle.to_degrees());
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let pts: Vec<Vec3> = (0..8).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        assert!(matches!(
            estimate_normals(&pts, 3, None),
            Err(GeometryError::DegenerateNeighborhood { .. })
        ));
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            estimate_normals(&grid_plane()[..5], 10, None),
            Err(GeometryError::InvalidArgument(_))
        ));
    }

    #[test]
    fn rigid_motion_equivariance() {
        let pts = fibonacci_sphere(800);
        let m = RigidMotion::new(Rotation::exp_map(&Vec3::new(0.4, -0.2, 1.1)), Vec3::new(0.3, -0.1, 0.2));
        let base = estimate_normals(&pts, 10, Some(Vec3::zeros())).unwrap();
        let moved_pts: Vec<Vec3> = pts.iter().map(|p| m.transform_point(p)).collect();
        let moved = estimate_normals(&moved_pts, 10, Some(m.translation)).unwrap();
        for (a, b) in base.normals().iter().zip(moved.normals()) {
            let rotated = m.transform_vector(a);
            assert!((rotated - b.into_inner()).abs().max() < 1e-6);
        }
    }
}
