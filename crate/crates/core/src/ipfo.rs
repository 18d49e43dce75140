//! Alternating palm/finger solver under fixed correspondences.
//!
//! The palm step is a point-to-plane least-squares problem augmented with
//! normal-alignment rows, linearized about the current iterate. The finger
//! step is a scalar quadratic in the jaw width change, clamped to the width
//! limits. The two alternate until the fitting error stops decreasing.

use nalgebra::{Matrix6, SymmetricEigen, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correspondence::CorrespondenceSet;
use crate::geometry::{RigidMotion, Rotation, UnitVec3, Vec3};

/// Eigenvalues of the palm normal matrix below this fraction of the largest
/// are treated as unobservable directions.
pub const RANK_TOLERANCE: f64 = 1e-12;
/// Observable palm directions required for a solve.
pub const MIN_PALM_RANK: usize = 3;
const MIN_WIDTH_CURVATURE: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IpfoError {
    #[error("palm system is singular: {pairs} pairs, observable rank {rank}")]
    SingularSystem { pairs: usize, rank: usize },
    #[error("finger width does not affect the fitting error")]
    IndeterminateWidth,
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthLimits {
    pub min: f64,
    pub max: f64,
}

impl WidthLimits {
    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, d: f64) -> bool {
        self.min <= d && d <= self.max
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IpfoConfig {
    /// Weight on the normal-alignment term; the error uses `alpha^2`.
    pub alpha: f64,
    /// Stop once an iteration lowers the error by no more than this.
    pub delta_e: f64,
    pub max_iterations: usize,
}

impl Default for IpfoConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            delta_e: 1e-5,
            max_iterations: 100,
        }
    }
}

#[derive(Clone, Debug)]
pub struct IpfoProblem<'a> {
    pub correspondences: &'a CorrespondenceSet,
    /// Opening axis, finger 1 toward finger 2, in the frame of the pairs.
    pub opening_axis: UnitVec3,
    /// Jaw width at the start of the solve.
    pub width: f64,
    pub limits: WidthLimits,
    pub config: IpfoConfig,
}

impl<'a> IpfoProblem<'a> {
    pub fn new(
        correspondences: &'a CorrespondenceSet,
        opening_axis: UnitVec3,
        width: f64,
        limits: WidthLimits,
        config: IpfoConfig,
    ) -> Result<Self, IpfoError> {
        if !limits.contains(width) {
            return Err(IpfoError::InvalidProblem(format!(
                "width {width} outside [{}, {}]",
                limits.min, limits.max
            )));
        }
        if !(config.alpha >= 0.0) {
            return Err(IpfoError::InvalidProblem("alpha must be >= 0".into()));
        }
        if !(config.delta_e > 0.0) {
            return Err(IpfoError::InvalidProblem("delta_e must be > 0".into()));
        }
        if correspondences.is_empty() {
            return Err(IpfoError::InvalidProblem("no correspondences".into()));
        }
        Ok(Self {
            correspondences,
            opening_axis,
            width,
            limits,
            config,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IpfoSolution {
    /// Palm motion relative to the pose the pairs were sampled at.
    pub motion: RigidMotion,
    pub width_change: f64,
    /// Fitting error at the returned iterate.
    pub error: f64,
    pub iterations: usize,
    /// Error at the start and after every accepted iteration.
    pub error_trace: Vec<f64>,
    /// Set when the width step was skipped because the width had no effect.
    pub width_indeterminate: bool,
}

/// Result of one linearized palm solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PalmStep {
    /// `[r, t]`: axis-angle and translation increment.
    pub x: Vector6<f64>,
    pub rank: usize,
    pub motion: RigidMotion,
}

/// `E = E_p + alpha^2 E_n` at palm motion `m` and width change `dd`.
pub fn fitting_error(prob: &IpfoProblem<'_>, m: &RigidMotion, dd: f64) -> f64 {
    let rv = m.transform_vector(&prob.opening_axis);
    let a2 = prob.config.alpha * prob.config.alpha;
    let mut e_point = 0.0;
    let mut e_normal = 0.0;
    for pair in prob.correspondences.iter() {
        let moved = m.transform_point(&pair.source) + rv * (0.5 * pair.finger.sign() * dd);
        let r = (moved - pair.target).dot(&pair.target_normal);
        e_point += r * r;
        let c = m.transform_vector(&pair.source_normal).dot(&pair.target_normal) + 1.0;
        e_normal += c * c;
    }
    e_point + a2 * e_normal
}

/// Palm solve linearized about `current`; returns the increment and the
/// updated motion `exp(r), t ∘ current`.
pub fn palm_step(prob: &IpfoProblem<'_>, current: &RigidMotion, dd: f64) -> Result<PalmStep, IpfoError> {
    let pairs = prob.correspondences.len();
    let alpha = prob.config.alpha;
    let axis = prob.opening_axis.into_inner();
    let mut h = Matrix6::<f64>::zeros();
    let mut g = Vector6::<f64>::zeros();
    let mut push = |a: Vector6<f64>, b: f64| {
        h += a * a.transpose();
        g += a * b;
    };
    for pair in prob.correspondences.iter() {
        let shifted = pair.source + axis * (0.5 * pair.finger.sign() * dd);
        let p = current.transform_point(&shifted);
        let nq = pair.target_normal.into_inner();
        let c = p.cross(&nq);
        push(
            Vector6::new(c.x, c.y, c.z, nq.x, nq.y, nq.z),
            (pair.target - p).dot(&nq),
        );
        if alpha > 0.0 {
            let np = current.transform_vector(&pair.source_normal);
            let c = np.cross(&nq) * alpha;
            push(Vector6::new(c.x, c.y, c.z, 0.0, 0.0, 0.0), -alpha * np.dot(&nq) - alpha);
        }
    }
    let (x, rank) = solve_truncated(&h, &g);
    if pairs < MIN_PALM_RANK || rank < MIN_PALM_RANK {
        return Err(IpfoError::SingularSystem { pairs, rank });
    }
    let increment = RigidMotion::new(
        Rotation::exp_map(&Vec3::new(x[0], x[1], x[2])),
        Vec3::new(x[3], x[4], x[5]),
    );
    Ok(PalmStep {
        x,
        rank,
        motion: increment.compose(current),
    })
}

/// Minimum-norm solution of `h x = g` over the directions whose eigenvalue
/// exceeds `RANK_TOLERANCE` times the largest.
fn solve_truncated(h: &Matrix6<f64>, g: &Vector6<f64>) -> (Vector6<f64>, usize) {
    let eig = SymmetricEigen::new(*h);
    let largest = eig.eigenvalues.max();
    if !(largest > 0.0) {
        return (Vector6::zeros(), 0);
    }
    let cutoff = largest * RANK_TOLERANCE;
    let mut x = Vector6::zeros();
    let mut rank = 0;
    for k in 0..6 {
        let lambda = eig.eigenvalues[k];
        if lambda > cutoff {
            let u = eig.eigenvectors.column(k);
            x += u * (u.dot(g) / lambda);
            rank += 1;
        }
    }
    (x, rank)
}

/// Palm motion minimizing the linearized error at fixed `dd`, starting from
/// the identity.
pub fn solve_palm(prob: &IpfoProblem<'_>, dd: f64) -> Result<RigidMotion, IpfoError> {
    palm_step(prob, &RigidMotion::identity(), dd).map(|s| s.motion)
}

/// Unconstrained minimizer of the width quadratic at fixed palm motion.
pub fn unconstrained_width_change(prob: &IpfoProblem<'_>, m: &RigidMotion) -> Result<f64, IpfoError> {
    let rv = m.transform_vector(&prob.opening_axis);
    let mut saa = 0.0;
    let mut sab = 0.0;
    for pair in prob.correspondences.iter() {
        let nq = pair.target_normal.into_inner();
        let a = -0.5 * pair.finger.sign() * rv.dot(&nq);
        let b = (m.transform_point(&pair.source) - pair.target).dot(&nq);
        saa += a * a;
        sab += a * b;
    }
    if saa < MIN_WIDTH_CURVATURE {
        return Err(IpfoError::IndeterminateWidth);
    }
    Ok(sab / saa)
}

/// Clamps a width change so that `width + change` stays inside `limits`.
///
/// The limit values are hit exactly whenever `limit - width` is exact in
/// floating point; otherwise the change is nudged by an ulp toward the
/// interior.
pub fn clamp_width_change(change: f64, width: f64, limits: WidthLimits) -> f64 {
    let mut dd = if width + change < limits.min {
        limits.min - width
    } else if width + change > limits.max {
        limits.max - width
    } else {
        change
    };
    while width + dd > limits.max {
        dd = dd.next_down();
    }
    while width + dd < limits.min {
        dd = dd.next_up();
    }
    dd
}

/// Width change minimizing the error at fixed palm motion, within limits.
pub fn solve_finger(prob: &IpfoProblem<'_>, m: &RigidMotion) -> Result<f64, IpfoError> {
    let hat = unconstrained_width_change(prob, m)?;
    Ok(clamp_width_change(hat, prob.width, prob.limits))
}

/// Alternates palm and finger solves until an iteration lowers the error by
/// no more than `delta_e`. An iteration that would raise the error is
/// discarded and the previous iterate is returned.
pub fn run_ipfo(prob: &IpfoProblem<'_>) -> Result<IpfoSolution, IpfoError> {
    let mut motion = RigidMotion::identity();
    let mut dd = 0.0;
    let mut error = fitting_error(prob, &motion, dd);
    let mut previous = f64::INFINITY;
    let mut trace = vec![error];
    let mut iterations = 0;
    let mut indeterminate = false;
    while previous - error > prob.config.delta_e && iterations < prob.config.max_iterations {
        previous = error;
        iterations += 1;
        let palm = palm_step(prob, &motion, dd)?.motion;
        let next_dd = match solve_finger(prob, &palm) {
            Ok(v) => v,
            Err(IpfoError::IndeterminateWidth) => {
                indeterminate = true;
                0.0
            }
            Err(e) => return Err(e),
        };
        let next_error = fitting_error(prob, &palm, next_dd);
        if next_error > error {
            break;
        }
        motion = palm;
        dd = next_dd;
        error = next_error;
        trace.push(error);
    }
    if indeterminate {
        log::warn!("width step skipped: opening axis is orthogonal to every target normal");
    }
    Ok(IpfoSolution {
        motion,
        width_change: dd,
        error,
        iterations,
        error_trace: trace,
        width_indeterminate: indeterminate,
    })
}
