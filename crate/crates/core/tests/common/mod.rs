#![allow(dead_code)]

use std::f64::consts::PI;

use graspfit::fixtures::{cylinder, cylinder_surface_distance, parallel_jaw_gripper};
use graspfit::geometry::{RigidMotion, Rotation, SurfaceCloud, Vec3};
use graspfit::planner::GripperModel;
use rand::Rng;

pub const RADIUS: f64 = 0.01;
pub const HEIGHT: f64 = 0.06;

pub fn gripper() -> GripperModel {
    parallel_jaw_gripper()
}

pub fn cylinder_cloud() -> SurfaceCloud {
    cylinder(RADIUS, HEIGHT, 2000)
}

/// Gripper pose whose fingertip arcs lie on the z-axis cylinder.
pub fn ground_truth() -> RigidMotion {
    RigidMotion::from_rotation(Rotation::exp_map(&Vec3::new(PI / 2.0, 0.0, 0.0)))
}

/// The cylinder cloud plus the exact fingertip contact points at the ground
/// truth pose, so that ground truth is an exact fixed point of the fit.
pub fn cylinder_through_contacts(g: &GripperModel) -> SurfaceCloud {
    let posed = g.posed_contact(&ground_truth(), g.home_width());
    let contacts =
        SurfaceCloud::from_unit(posed.points().to_vec(), posed.normals().iter().map(|n| -*n).collect()).unwrap();
    SurfaceCloud::concat(&[&cylinder_cloud(), &contacts])
}

pub fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    (sum / n as f64).sqrt()
}

/// RMS distance of the posed contact points to the cylinder surface.
pub fn rms_surface_distance(g: &GripperModel, m: &RigidMotion, width: f64) -> f64 {
    let posed = g.posed_contact(m, width);
    rms(posed.points().iter().map(|p| cylinder_surface_distance(p, RADIUS)))
}

/// RMS displacement of the contact points between two poses at home width.
pub fn rms_displacement(g: &GripperModel, a: &RigidMotion, b: &RigidMotion) -> f64 {
    let pa = g.posed_contact(a, g.home_width());
    let pb = g.posed_contact(b, g.home_width());
    rms(pa.points().iter().zip(pb.points()).map(|(p, q)| (p - q).norm()))
}

pub fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Ground truth moved by a random rotation of at most `max_angle` and a
/// translation sized so the contact points move by `target` RMS.
pub fn misaligned_start<R: Rng>(rng: &mut R, g: &GripperModel, target: f64, max_angle: f64) -> RigidMotion {
    let truth = ground_truth();
    let axis = random_unit(rng);
    let mut angle = rng.random_range(0.0..max_angle);
    let dir = random_unit(rng);
    let home = g.posed_contact(&truth, g.home_width());
    // |d_i + s u|^2 averaged over points is s^2 + 2 b s + c; the rotation
    // alone must leave room for a real root.
    let (rot, b, c) = loop {
        let rot = Rotation::exp_map(&(axis * angle));
        let deltas: Vec<Vec3> = home.points().iter().map(|p| rot.apply(p) - p).collect();
        let n = deltas.len() as f64;
        let b = deltas.iter().map(|d| d.dot(&dir)).sum::<f64>() / n;
        let c = deltas.iter().map(|d| d.norm_squared()).sum::<f64>() / n;
        if c <= 0.8 * target * target {
            break (rot, b, c);
        }
        angle *= 0.5;
    };
    let s = -b + (b * b - c + target * target).sqrt();
    RigidMotion::new(rot, dir * s).compose(&truth)
}

/// Ground truth moved by exactly `shift` meters along a random direction and
/// `angle` radians about a random axis through the grasp center.
pub fn perturbed_start<R: Rng>(rng: &mut R, shift: f64, angle: f64) -> RigidMotion {
    let rot = Rotation::exp_map(&(random_unit(rng) * angle));
    RigidMotion::new(rot, random_unit(rng) * shift).compose(&ground_truth())
}
