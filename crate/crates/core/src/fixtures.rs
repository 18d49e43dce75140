//! Analytic test objects and the bundled parallel-jaw gripper.
//!
//! Every cloud here has exact normals, so fitting results can be checked
//! against closed-form surface distances.

use std::f64::consts::PI;

use crate::geometry::{Rotation, SurfaceCloud, Vec3};
use crate::ipfo::WidthLimits;
use crate::planner::{CollisionBox, GripperModel};

fn golden_angle() -> f64 {
    PI * (3.0 - 5f64.sqrt())
}

/// Side surface of a cylinder along +z centered at the origin, `n` points
/// on a golden-angle spiral with outward radial normals.
pub fn cylinder(radius: f64, height: f64, n: usize) -> SurfaceCloud {
    let ga = golden_angle();
    let (points, normals) = (0..n)
        .map(|i| {
            let z = height * ((i as f64 + 0.5) / n as f64 - 0.5);
            let th = ga * i as f64;
            let (s, c) = th.sin_cos();
            (Vec3::new(radius * c, radius * s, z), Vec3::new(c, s, 0.0))
        })
        .unzip();
    SurfaceCloud::new(points, normals).expect("analytic cloud")
}

/// Distance from `p` to the infinite side surface of a z-axis cylinder.
pub fn cylinder_surface_distance(p: &Vec3, radius: f64) -> f64 {
    ((p.x * p.x + p.y * p.y).sqrt() - radius).abs()
}

/// The two faces of a slab of thickness `gap`: squares of side `side` at
/// `z = -gap/2` and `z = +gap/2`, normals pointing away from each other.
/// `per_side` is rounded down to a square grid.
pub fn plane_pair(gap: f64, side: f64, per_side: usize) -> SurfaceCloud {
    let m = (per_side as f64).sqrt().floor().max(1.0) as usize;
    let step = if m > 1 { side / (m - 1) as f64 } else { 0.0 };
    let mut points = Vec::with_capacity(2 * m * m);
    let mut normals = Vec::with_capacity(2 * m * m);
    for &sz in &[-1.0, 1.0] {
        for i in 0..m {
            for j in 0..m {
                points.push(Vec3::new(
                    i as f64 * step - side / 2.0,
                    j as f64 * step - side / 2.0,
                    sz * gap / 2.0,
                ));
                normals.push(Vec3::new(0.0, 0.0, sz));
            }
        }
    }
    SurfaceCloud::new(points, normals).expect("analytic cloud")
}

/// Fibonacci sphere with outward normals.
pub fn sphere(radius: f64, n: usize) -> SurfaceCloud {
    let ga = golden_angle();
    let (points, normals): (Vec<Vec3>, Vec<Vec3>) = (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let (s, c) = (ga * i as f64).sin_cos();
            let dir = Vec3::new(r * c, r * s, z);
            (dir * radius, dir)
        })
        .unzip();
    SurfaceCloud::new(points, normals).expect("analytic cloud")
}

/// Axis positions and radii of the cylinders in [`blob_scene`].
pub fn blob_scene_layout(count: usize) -> Vec<(Vec3, f64)> {
    const RADII: [f64; 3] = [0.01, 0.009, 0.011];
    (0..count)
        .map(|i| {
            let ring = i as f64 * 2.0 * PI / count.max(1) as f64;
            let center = if count == 1 {
                Vec3::zeros()
            } else {
                Vec3::new(0.045 * ring.cos(), 0.045 * ring.sin(), 0.0)
            };
            (center, RADII[i % RADII.len()])
        })
        .collect()
}

/// Several upright cylinders (6 cm tall) merged into one unsegmented cloud.
pub fn blob_scene(count: usize, points_per_object: usize) -> SurfaceCloud {
    let parts: Vec<SurfaceCloud> = blob_scene_layout(count)
        .into_iter()
        .map(|(center, r)| {
            let c = cylinder(r, 0.06, points_per_object);
            let moved: Vec<Vec3> = c.points().iter().map(|p| p + center).collect();
            SurfaceCloud::from_unit(moved, c.normals().to_vec()).expect("same length")
        })
        .collect();
    SurfaceCloud::concat(&parts.iter().collect::<Vec<_>>())
}

/// Shape parameters of [`parallel_jaw_gripper`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParallelJawParams {
    /// Radius of the concave fingertip arc; also half the home width.
    pub patch_radius: f64,
    pub arc_half_angle: f64,
    /// Patch extent along the arc axis (gripper y).
    pub patch_length: f64,
    pub arc_samples: usize,
    pub length_samples: usize,
    pub limits: WidthLimits,
}

impl Default for ParallelJawParams {
    fn default() -> Self {
        Self {
            patch_radius: 0.01,
            arc_half_angle: 45f64.to_radians(),
            patch_length: 0.016,
            arc_samples: 20,
            length_samples: 12,
            limits: WidthLimits::new(0.01, 0.03),
        }
    }
}

/// Parallel-jaw gripper with concave cylindrical fingertips.
///
/// Gripper frame: the jaws open along +x (finger 1 at `-x`), the fingertip
/// arcs wrap around the y axis, and the palm sits at `+z` so the gripper
/// approaches along `-z`. At home width both arcs lie on a circle of radius
/// `patch_radius` about the y axis.
pub fn parallel_jaw_gripper_with(params: &ParallelJawParams) -> GripperModel {
    let rho = params.patch_radius;
    let home = 2.0 * rho;
    let mut first = (Vec::new(), Vec::new());
    let mut second = (Vec::new(), Vec::new());
    for a in 0..params.arc_samples {
        let t = a as f64 / (params.arc_samples - 1).max(1) as f64;
        let phi = params.arc_half_angle * (2.0 * t - 1.0);
        let (s, c) = phi.sin_cos();
        for l in 0..params.length_samples {
            let u = l as f64 / (params.length_samples - 1).max(1) as f64;
            let y = params.patch_length * (u - 0.5);
            first.0.push(Vec3::new(-rho * c, y, rho * s));
            first.1.push(Vec3::new(c, 0.0, -s));
            second.0.push(Vec3::new(rho * c, y, rho * s));
            second.1.push(Vec3::new(-c, 0.0, -s));
        }
    }
    let first = SurfaceCloud::new(first.0, first.1).expect("patch");
    let second = SurfaceCloud::new(second.0, second.1).expect("patch");

    let finger_top = 0.045;
    let finger_bottom = -rho * params.arc_half_angle.sin() - 0.001;
    let finger_half_z = 0.5 * (finger_top - finger_bottom);
    let finger_center_z = 0.5 * (finger_top + finger_bottom);
    let finger_half = Vec3::new(0.003, 0.5 * params.patch_length + 0.001, finger_half_z);
    let boxes = vec![
        CollisionBox {
            name: "finger1".into(),
            center: Vec3::new(-rho - finger_half.x, 0.0, finger_center_z),
            axes: Rotation::identity(),
            half_extents: finger_half,
            width_coupling: -0.5,
        },
        CollisionBox {
            name: "finger2".into(),
            center: Vec3::new(rho + finger_half.x, 0.0, finger_center_z),
            axes: Rotation::identity(),
            half_extents: finger_half,
            width_coupling: 0.5,
        },
        CollisionBox {
            name: "palm".into(),
            center: Vec3::new(0.0, 0.0, finger_top + 0.0075),
            axes: Rotation::identity(),
            half_extents: Vec3::new(0.025, 0.012, 0.0075),
            width_coupling: 0.0,
        },
    ];
    GripperModel::new(
        "parallel-jaw-curved",
        first,
        second,
        Vec3::x(),
        -Vec3::z(),
        home,
        params.limits,
        boxes,
    )
    .expect("bundled gripper is valid")
}

pub fn parallel_jaw_gripper() -> GripperModel {
    parallel_jaw_gripper_with(&ParallelJawParams::default())
}
