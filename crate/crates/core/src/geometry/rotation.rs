use std::ops::Mul;

use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion};

use super::Vec3;

/// Skew-symmetric cross-product matrix, `skew(a) * b == a.cross(b)`.
pub fn skew(v: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// A proper rotation stored as an orthonormal 3x3 matrix.
///
/// Every constructor that can accumulate rounding error (`compose`,
/// `from_matrix`) re-orthonormalizes, so long chains of small solver
/// increments stay on SO(3).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rotation {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Projects an approximately orthonormal matrix back onto SO(3) by
    /// Gram-Schmidt on its columns.
    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        let c0 = m.column(0).normalize();
        let c1 = m.column(1) - c0 * c0.dot(&m.column(1));
        let c1 = c1.normalize();
        let c2 = c0.cross(&c1);
        Self(Matrix3::from_columns(&[c0, c1, c2]))
    }

    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Rodrigues formula: rotation by angle `|r|` about `r / |r|`.
    pub fn exp_map(r: &Vec3) -> Self {
        let theta2 = r.norm_squared();
        let theta = theta2.sqrt();
        // sin(t)/t and (1 - cos(t))/t^2, with series expansions near zero.
        let (a, b) = if theta < 1e-6 {
            (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
        } else {
            (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
        };
        let k = skew(r);
        Self(Matrix3::identity() + k * a + k * k * b)
    }

    /// Inverse of [`Rotation::exp_map`]; the returned angle lies in `[0, pi]`.
    pub fn log_map(&self) -> Vec3 {
        let q = self.to_unit_quaternion();
        q.scaled_axis()
    }

    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::identity();
        }
        Self::exp_map(&(axis * (angle / n)))
    }

    /// Builds a rotation from quaternion components; the input is normalized.
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Self {
        let q = UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z));
        Self::from_unit_quaternion(&q)
    }

    pub fn from_unit_quaternion(q: &UnitQuaternion<f64>) -> Self {
        Self::from_matrix(q.to_rotation_matrix().matrix())
    }

    pub fn to_unit_quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.0))
    }

    /// Quaternion `[w, x, y, z]` with the sign fixed so that `w >= 0`.
    pub fn to_quaternion(&self) -> [f64; 4] {
        let q = self.to_unit_quaternion();
        let s = if q.w < 0.0 { -1.0 } else { 1.0 };
        [s * q.w, s * q.i, s * q.j, s * q.k]
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.transpose())
    }

    /// `self * other`, re-orthonormalized.
    pub fn compose(&self, other: &Rotation) -> Self {
        Self::from_matrix(&(self.0 * other.0))
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    /// Largest entry of `|R^T R - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Matrix3::identity()).abs().max()
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    /// Geodesic angle between two rotations, in radians.
    pub fn angle_to(&self, other: &Rotation) -> f64 {
        let c = ((self.0.transpose() * other.0).trace() - 1.0) / 2.0;
        c.clamp(-1.0, 1.0).acos()
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        self.compose(&rhs)
    }
}

impl Mul<Vec3> for Rotation {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn exp_of_zero_is_identity() {
        assert_eq!(Rotation::exp_map(&Vec3::zeros()), Rotation::identity());
    }

    #[test]
    fn quarter_turn_about_z() {
        let r = Rotation::exp_map(&Vec3::new(0.0, 0.0, FRAC_PI_2));
        let v = r.apply(&Vec3::x());
        assert!((v - Vec3::y()).abs().max() <= 1e-12, "{v}");
    }

    #[test]
    fn quaternion_round_trip() {
        let r = Rotation::exp_map(&Vec3::new(0.3, -1.2, 0.7));
        let [w, x, y, z] = r.to_quaternion();
        assert!(w >= 0.0);
        let back = Rotation::from_quaternion(w, x, y, z);
        assert!((back.matrix() - r.matrix()).abs().max() < 1e-14);
    }

    #[test]
    fn log_inverts_exp() {
        let r = Vec3::new(0.4, 0.1, -0.9);
        let back = Rotation::exp_map(&r).log_map();
        assert!((back - r).abs().max() < 1e-12);
    }

    fn small_vec() -> impl Strategy<Value = Vec3> {
        (-0.3f64..0.3, -0.3f64..0.3, -0.3f64..0.3).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn exp_map_is_proper_rotation(x in -4.0f64..4.0, y in -4.0f64..4.0, z in -4.0f64..4.0) {
            let r = Rotation::exp_map(&Vec3::new(x, y, z));
            prop_assert!(r.orthonormality_error() < 1e-9);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-9);
        }

        // ||exp(r) - (I + r^)||_F is O(|r|^2 / 2), bounded by |r|^2.
        #[test]
        fn small_angle_consistency(r in small_vec()) {
            let exact = Rotation::exp_map(&r);
            let first_order = Matrix3::identity() + skew(&r);
            let gap = (exact.matrix() - first_order).norm();
            prop_assert!(gap <= r.norm_squared() + 1e-15, "gap {} |r|^2 {}", gap, r.norm_squared());
        }
    }
}
