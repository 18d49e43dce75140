use nalgebra::Matrix3;
use thiserror::Error;

use crate::geometry::{Finger, RigidMotion, Rotation, SurfaceCloud, UnitVec3, Vec3};
use crate::ipfo::WidthLimits;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GripperError {
    #[error("contact patch for finger {0} is empty")]
    EmptyPatch(u8),
    #[error("width limits must satisfy min < max (got [{min}, {max}])")]
    BadLimits { min: f64, max: f64 },
    #[error("home width {home} outside [{min}, {max}]")]
    HomeOutOfRange { home: f64, min: f64, max: f64 },
    #[error("axis `{0}` has zero length")]
    ZeroAxis(&'static str),
    #[error("collision box `{name}`: {reason}")]
    BadBox { name: String, reason: String },
}

/// A box in the gripper frame. Its center slides along the opening axis by
/// `width_coupling * (d - home_width)`: `-0.5` for the first finger, `+0.5`
/// for the second, `0` for the palm.
#[derive(Clone, Debug, PartialEq)]
pub struct CollisionBox {
    pub name: String,
    pub center: Vec3,
    /// Box axes as the columns of an orthonormal matrix.
    pub axes: Rotation,
    pub half_extents: Vec3,
    pub width_coupling: f64,
}

/// A collision box placed in the world.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientedBox {
    pub center: Vec3,
    pub axes: Matrix3<f64>,
    pub half_extents: Vec3,
}

impl OrientedBox {
    /// Whether `p` lies strictly further than `depth` inside every face pair.
    pub fn penetrated_by(&self, p: &Vec3, depth: f64) -> bool {
        let local = self.axes.transpose() * (p - self.center);
        (0..3).all(|k| local[k].abs() < self.half_extents[k] - depth)
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let mut out = [Vec3::zeros(); 8];
        for (i, c) in out.iter_mut().enumerate() {
            let s = Vec3::new(
                if i & 1 == 0 { -1.0 } else { 1.0 },
                if i & 2 == 0 { -1.0 } else { 1.0 },
                if i & 4 == 0 { -1.0 } else { 1.0 },
            );
            *c = self.center + self.axes * s.component_mul(&self.half_extents);
        }
        out
    }
}

/// A one-degree-of-freedom two-finger gripper described in its own frame at
/// `home_width`. Contact patch normals point into the grasped volume.
#[derive(Clone, Debug, PartialEq)]
pub struct GripperModel {
    pub name: String,
    first: SurfaceCloud,
    second: SurfaceCloud,
    opening_axis: UnitVec3,
    approach_axis: UnitVec3,
    home_width: f64,
    limits: WidthLimits,
    boxes: Vec<CollisionBox>,
}

impl GripperModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        first: SurfaceCloud,
        second: SurfaceCloud,
        opening_axis: Vec3,
        approach_axis: Vec3,
        home_width: f64,
        limits: WidthLimits,
        boxes: Vec<CollisionBox>,
    ) -> Result<Self, GripperError> {
        if first.is_empty() {
            return Err(GripperError::EmptyPatch(1));
        }
        if second.is_empty() {
            return Err(GripperError::EmptyPatch(2));
        }
        if !(limits.min < limits.max) {
            return Err(GripperError::BadLimits {
                min: limits.min,
                max: limits.max,
            });
        }
        if !limits.contains(home_width) {
            return Err(GripperError::HomeOutOfRange {
                home: home_width,
                min: limits.min,
                max: limits.max,
            });
        }
        let opening_axis = UnitVec3::try_new(opening_axis, 1e-12).ok_or(GripperError::ZeroAxis("opening"))?;
        let approach_axis = UnitVec3::try_new(approach_axis, 1e-12).ok_or(GripperError::ZeroAxis("approach"))?;
        for b in &boxes {
            if !(b.half_extents.min() > 0.0) {
                return Err(GripperError::BadBox {
                    name: b.name.clone(),
                    reason: "half extents must be positive".into(),
                });
            }
            if b.axes.orthonormality_error() > 1e-9 || b.axes.determinant() < 0.0 {
                return Err(GripperError::BadBox {
                    name: b.name.clone(),
                    reason: "axes must form a right-handed orthonormal frame".into(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            first: first.labeled(Finger::First),
            second: second.labeled(Finger::Second),
            opening_axis,
            approach_axis,
            home_width,
            limits,
            boxes,
        })
    }

    pub fn patch(&self, finger: Finger) -> &SurfaceCloud {
        match finger {
            Finger::First => &self.first,
            Finger::Second => &self.second,
        }
    }

    pub fn opening_axis(&self) -> UnitVec3 {
        self.opening_axis
    }

    pub fn approach_axis(&self) -> UnitVec3 {
        self.approach_axis
    }

    pub fn home_width(&self) -> f64 {
        self.home_width
    }

    pub fn limits(&self) -> WidthLimits {
        self.limits
    }

    pub fn boxes(&self) -> &[CollisionBox] {
        &self.boxes
    }

    /// Both patches, first finger then second, labeled, at home width.
    pub fn contact_cloud(&self) -> SurfaceCloud {
        SurfaceCloud::concat(&[&self.first, &self.second])
    }

    /// Places a labeled home-frame cloud at jaw width `width` under `motion`.
    pub fn pose_cloud(&self, home: &SurfaceCloud, motion: &RigidMotion, width: f64) -> SurfaceCloud {
        let fingers = home.fingers().expect("gripper clouds carry finger labels");
        let v = self.opening_axis.into_inner();
        let shift = width - self.home_width;
        let points = home
            .points()
            .iter()
            .zip(fingers)
            .map(|(p, f)| motion.transform_point(&(p + v * (0.5 * f.sign() * shift))))
            .collect();
        let normals = home
            .normals()
            .iter()
            .map(|n| UnitVec3::new_normalize(motion.transform_vector(n)))
            .collect();
        SurfaceCloud::from_unit(points, normals)
            .and_then(|c| c.with_fingers(fingers.to_vec()))
            .expect("pose preserves cloud shape")
    }

    pub fn posed_contact(&self, motion: &RigidMotion, width: f64) -> SurfaceCloud {
        self.pose_cloud(&self.contact_cloud(), motion, width)
    }

    pub fn posed_boxes(&self, motion: &RigidMotion, width: f64) -> Vec<OrientedBox> {
        let v = self.opening_axis.into_inner();
        let shift = width - self.home_width;
        self.boxes
            .iter()
            .map(|b| OrientedBox {
                center: motion.transform_point(&(b.center + v * (b.width_coupling * shift))),
                axes: motion.rotation.matrix() * b.axes.matrix(),
                half_extents: b.half_extents,
            })
            .collect()
    }
}

/// True iff some object point sits deeper than `penetration` inside some
/// posed collision box.
pub fn collide(
    gripper: &GripperModel,
    pose: &RigidMotion,
    width: f64,
    object: &SurfaceCloud,
    penetration: f64,
) -> bool {
    boxes_collide(&gripper.posed_boxes(pose, width), object, penetration)
}

pub fn boxes_collide(boxes: &[OrientedBox], object: &SurfaceCloud, penetration: f64) -> bool {
    boxes
        .iter()
        .any(|b| object.points().iter().any(|p| b.penetrated_by(p, penetration)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patch(x: f64, nx: f64) -> SurfaceCloud {
        SurfaceCloud::new(vec![Vec3::new(x, 0.0, 0.0)], vec![Vec3::new(nx, 0.0, 0.0)]).unwrap()
    }

    fn gripper(boxes: Vec<CollisionBox>) -> GripperModel {
        GripperModel::new(
            "test",
            patch(-0.01, 1.0),
            patch(0.01, -1.0),
            Vec3::x(),
            -Vec3::z(),
            0.02,
            WidthLimits::new(0.01, 0.03),
            boxes,
        )
        .unwrap()
    }

    fn cube(center: Vec3, half: f64, coupling: f64) -> CollisionBox {
        CollisionBox {
            name: "cube".into(),
            center,
            axes: Rotation::identity(),
            half_extents: Vec3::repeat(half),
            width_coupling: coupling,
        }
    }

    fn single(p: Vec3) -> SurfaceCloud {
        SurfaceCloud::new(vec![p], vec![Vec3::z()]).unwrap()
    }

    #[test]
    fn outside_is_free() {
        let g = gripper(vec![cube(Vec3::zeros(), 0.005, 0.0)]);
        let obj = single(Vec3::new(0.1, 0.0, 0.0));
        assert!(!collide(&g, &RigidMotion::identity(), 0.02, &obj, 0.001));
    }

    #[test]
    fn center_point_collides() {
        let g = gripper(vec![cube(Vec3::zeros(), 0.005, 0.0)]);
        assert!(collide(
            &g,
            &RigidMotion::identity(),
            0.02,
            &single(Vec3::zeros()),
            0.001
        ));
    }

    #[test]
    fn exact_penetration_depth_is_free() {
        let half = 0.005;
        let depth = 0.001;
        let g = gripper(vec![cube(Vec3::zeros(), half, 0.0)]);
        let obj = single(Vec3::new(half - depth, 0.0, 0.0));
        assert!(!collide(&g, &RigidMotion::identity(), 0.02, &obj, depth));
        let deeper = single(Vec3::new((half - depth).next_down(), 0.0, 0.0));
        assert!(collide(&g, &RigidMotion::identity(), 0.02, &deeper, depth));
    }

    #[test]
    fn boxes_follow_pose_and_width() {
        let g = gripper(vec![cube(Vec3::new(0.02, 0.0, 0.0), 0.002, 0.5)]);
        let obj = single(Vec3::new(0.025, 0.0, 0.0));
        assert!(!collide(&g, &RigidMotion::identity(), 0.02, &obj, 0.0));
        // Opening by 1 cm slides the second-finger box 5 mm along +x.
        assert!(collide(&g, &RigidMotion::identity(), 0.03, &obj, 0.0));
        let shifted = RigidMotion::from_translation(Vec3::new(0.005, 0.0, 0.0));
        assert!(collide(&g, &shifted, 0.02, &obj, 0.0));
    }

    #[test]
    fn patches_move_oppositely_with_width() {
        let g = gripper(vec![]);
        let posed = g.posed_contact(&RigidMotion::identity(), 0.03);
        assert!((posed.point(0).x + 0.015).abs() < 1e-15);
        assert!((posed.point(1).x - 0.015).abs() < 1e-15);
        assert_eq!(posed.finger(0), Some(Finger::First));
        assert_eq!(posed.finger(1), Some(Finger::Second));
    }

    #[test]
    fn validation() {
        let bad = GripperModel::new(
            "bad",
            patch(-0.01, 1.0),
            patch(0.01, -1.0),
            Vec3::x(),
            -Vec3::z(),
            0.02,
            WidthLimits::new(0.03, 0.01),
            vec![],
        );
        assert!(matches!(bad, Err(GripperError::BadLimits { .. })));
        let empty = SurfaceCloud::new(vec![], vec![]).unwrap();
        let bad = GripperModel::new(
            "bad",
            empty,
            patch(0.01, -1.0),
            Vec3::x(),
            -Vec3::z(),
            0.02,
            WidthLimits::new(0.01, 0.03),
            vec![],
        );
        assert_eq!(bad.unwrap_err(), GripperError::EmptyPatch(1));
    }
}
