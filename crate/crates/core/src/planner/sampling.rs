use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Rotation, UnitVec3, Vec3};

/// Uniform rotation from a uniformly distributed unit quaternion.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Rotation {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let u3: f64 = rng.random();
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    let (s2, c2) = (TAU * u2).sin_cos();
    let (s3, c3) = (TAU * u3).sin_cos();
    Rotation::from_quaternion(b * c3, a * s2, a * c2, b * s3)
}

/// Restricts the sampled approach direction to a cone around `direction`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproachCone {
    pub direction: [f64; 3],
    /// Radians.
    pub half_angle: f64,
}

/// Rotation taking unit `a` to unit `b` along the shortest arc.
fn align(a: &Vec3, b: &Vec3) -> Rotation {
    let axis = a.cross(b);
    let s = axis.norm();
    let c = a.dot(b);
    if s < 1e-12 {
        if c > 0.0 {
            return Rotation::identity();
        }
        // Antipodal: any axis orthogonal to `a`.
        let helper = if a.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        return Rotation::from_axis_angle(&a.cross(&helper), std::f64::consts::PI);
    }
    Rotation::from_axis_angle(&axis, s.atan2(c))
}

/// Random rotation whose image of the gripper `approach` axis is uniform
/// over the cone, with uniform roll about it.
pub fn random_rotation_in_cone<R: Rng + ?Sized>(rng: &mut R, approach: &UnitVec3, cone: &ApproachCone) -> Rotation {
    let dir = Vec3::from(cone.direction).normalize();
    let cos_max = cone.half_angle.clamp(0.0, std::f64::consts::PI).cos();
    let cos_t = 1.0 - rng.random::<f64>() * (1.0 - cos_max);
    let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    let phi = TAU * rng.random::<f64>();
    let roll = TAU * rng.random::<f64>();
    let helper = if dir.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = dir.cross(&helper).normalize();
    let e2 = dir.cross(&e1);
    let target = dir * cos_t + (e1 * phi.cos() + e2 * phi.sin()) * sin_t;
    let a = approach.into_inner();
    align(&a, &target).compose(&Rotation::from_axis_angle(&a, roll))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pinned_sequence() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let got: Vec<[f64; 4]> = (0..3).map(|_| random_rotation(&mut rng).to_quaternion()).collect();
        let pinned: [[f64; 4]; 3] = PINNED;
        for (g, p) in got.iter().zip(pinned.iter()) {
            for k in 0..4 {
                assert!((g[k] - p[k]).abs() < 1e-12, "{got:?}");
            }
        }
    }

    const PINNED: [[f64; 4]; 3] = [
        [
            0.16061584583245794,
            0.1002998352208016,
            -0.9071498157614304,
            0.3757947643145222,
        ],
        [
            0.9526377191777666,
            0.28334662586986525,
            0.10887126975206554,
            -0.018523288868836484,
        ],
        [
            0.18867599159642823,
            -0.9044379568832245,
            0.3822235202575166,
            -0.01727810481375383,
        ],
    ];

    #[test]
    fn uniform_mean_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10_000;
        let mut mean = Vec3::zeros();
        for _ in 0..n {
            let r = random_rotation(&mut rng);
            assert!(r.orthonormality_error() < 1e-9);
            assert!((r.determinant() - 1.0).abs() < 1e-9);
            mean += r.apply(&Vec3::x());
        }
        mean /= n as f64;
        assert!(mean.abs().max() < 0.05, "{mean}");
    }

    #[test]
    fn cone_bounds_approach() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let approach = UnitVec3::new_normalize(-Vec3::z());
        let cone = ApproachCone {
            direction: [0.0, 0.0, -1.0],
            half_angle: 0.4,
        };
        for _ in 0..1000 {
            let r = random_rotation_in_cone(&mut rng, &approach, &cone);
            let d = r.apply(&approach);
            assert!(d.dot(&Vec3::new(0.0, 0.0, -1.0)).acos() <= 0.4 + 1e-9);
            assert!(r.orthonormality_error() < 1e-9);
        }
    }
}
