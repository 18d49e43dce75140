//! Multi-resolution surface fitting of the gripper contact patches.
//!
//! Each pyramid level samples the contact surface by stride `2^level` and
//! repeats match → filter → IPFO → update until the cumulative displacement
//! of the sample stops changing (`eta` within `1 ± tol_l`) or the level's
//! iteration cap is reached.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correspondence::{filter, match_nearest, CorrespondenceError, FilterConfig};
use crate::geometry::{RigidMotion, SpatialIndex, SurfaceCloud, UnitVec3, Vec3};
use crate::ipfo::{run_ipfo, IpfoConfig, IpfoError, IpfoProblem};
use crate::planner::GripperModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AbandonCause {
    #[error(transparent)]
    Correspondence(#[from] CorrespondenceError),
    #[error(transparent)]
    Solver(#[from] IpfoError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsfError {
    #[error("sample abandoned at level {level}, iteration {iteration}: {cause}")]
    SampleAbandoned {
        level: usize,
        iteration: usize,
        #[source]
        cause: AbandonCause,
    },
    #[error("invalid surface-fitting input: {0}")]
    InvalidInput(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsfConfig {
    /// Pyramid depth `L`.
    pub levels: usize,
    /// Iteration cap at level 0; level `l` gets `max(1, I0 / 2^l)`.
    pub base_max_iterations: usize,
    /// Displacement-ratio tolerance at level 0; level `l` gets `2^l * eps0`.
    pub base_tolerance: f64,
    pub ipfo: IpfoConfig,
    pub filter: FilterConfig,
}

impl Default for IsfConfig {
    fn default() -> Self {
        Self {
            levels: 4,
            base_max_iterations: 200,
            base_tolerance: 0.008,
            ipfo: IpfoConfig::default(),
            filter: FilterConfig::default(),
        }
    }
}

impl IsfConfig {
    pub fn validate(&self) -> Result<(), IsfError> {
        if self.levels < 1 || self.levels > 30 {
            return Err(IsfError::InvalidInput(format!(
                "levels must be in 1..=30, got {}",
                self.levels
            )));
        }
        if self.base_max_iterations < 1 << (self.levels - 1) {
            return Err(IsfError::InvalidInput(format!(
                "base max iterations {} must be at least 2^(levels-1) = {}",
                self.base_max_iterations,
                1usize << (self.levels - 1)
            )));
        }
        if !(self.base_tolerance > 0.0) {
            return Err(IsfError::InvalidInput("base tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn max_iterations(&self, level: usize) -> usize {
        (self.base_max_iterations >> level).max(1)
    }

    pub fn tolerance(&self, level: usize) -> f64 {
        self.base_tolerance * (1u64 << level) as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// Running iteration count across all levels, starting at 1.
    pub iteration: usize,
    pub level: usize,
    /// IPFO error divided by the number of surviving pairs.
    pub error: f64,
    pub width_change: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsfResult {
    pub motion: RigidMotion,
    pub width: f64,
    pub fitting_error: f64,
    pub pairs: usize,
    pub trace: Vec<TraceEntry>,
    /// Iterations run per level, indexed by level.
    pub level_iterations: Vec<usize>,
    /// Level 0 stopped on the displacement-ratio test rather than the cap.
    pub converged: bool,
}

impl IsfResult {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// Ratio of successive cumulative displacements; equal values (including
/// two zeros) count as stationary.
fn displacement_ratio(current: f64, previous: f64) -> f64 {
    if current == previous {
        1.0
    } else {
        current / previous
    }
}

fn rms_displacement(a: &[Vec3], b: &[Vec3]) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(p, q)| (p - q).norm_squared()).sum();
    (sum / a.len() as f64).sqrt()
}

/// Fits the gripper contact surface to `object`, starting from `initial`
/// pose at jaw width `width`.
pub fn run_isf(
    initial: &RigidMotion,
    width: f64,
    object: &SpatialIndex,
    gripper: &GripperModel,
    cfg: &IsfConfig,
) -> Result<IsfResult, IsfError> {
    cfg.validate()?;
    let limits = gripper.limits();
    if !limits.contains(width) {
        return Err(IsfError::InvalidInput(format!(
            "start width {width} outside [{}, {}]",
            limits.min, limits.max
        )));
    }
    let finite = initial
        .rotation
        .matrix()
        .iter()
        .chain(initial.translation.iter())
        .all(|v| v.is_finite());
    if !finite {
        return Err(IsfError::InvalidInput("initial pose is not finite".into()));
    }
    if object.cloud().is_empty() {
        return Err(IsfError::InvalidInput("object cloud is empty".into()));
    }
    let home = gripper.contact_cloud();
    let mut motion = *initial;
    let mut width = width;
    let mut trace = Vec::new();
    let mut level_iterations = vec![0; cfg.levels];
    let mut fitting_error = f64::INFINITY;
    let mut pairs = 0;
    let mut converged = false;

    for level in (0..cfg.levels).rev() {
        let indices = SurfaceCloud::stride_indices(home.len(), 1 << level);
        let sample_home = home.select(&indices);
        let cap = cfg.max_iterations(level);
        let tol = cfg.tolerance(level);
        let start = gripper.pose_cloud(&sample_home, &motion, width).points().to_vec();
        let mut displacement = f64::INFINITY;
        let mut eta = 0.0;
        let mut it = 0;
        while !((1.0 - tol..=1.0 + tol).contains(&eta)) && it < cap {
            it += 1;
            let previous = displacement;
            let abandon = |cause: AbandonCause| IsfError::SampleAbandoned {
                level,
                iteration: it,
                cause,
            };
            let sample = gripper.pose_cloud(&sample_home, &motion, width);
            let raw = match_nearest(&sample, object).map_err(|e| abandon(e.into()))?;
            let set = filter(&raw, cfg.filter.threshold(&raw)).map_err(|e| abandon(e.into()))?;
            let axis = UnitVec3::new_normalize(motion.transform_vector(&gripper.opening_axis()));
            let prob = IpfoProblem::new(&set, axis, width, limits, cfg.ipfo)
                .map_err(|e| IsfError::InvalidInput(e.to_string()))?;
            let sol = run_ipfo(&prob).map_err(|e| abandon(e.into()))?;

            motion = sol.motion.compose(&motion);
            width += sol.width_change;
            fitting_error = sol.error / set.len() as f64;
            pairs = set.len();
            trace.push(TraceEntry {
                iteration: trace.len() + 1,
                level,
                error: fitting_error,
                width_change: sol.width_change,
            });

            let moved = gripper.pose_cloud(&sample_home, &motion, width);
            displacement = rms_displacement(moved.points(), &start);
            eta = displacement_ratio(displacement, previous);
        }
        level_iterations[level] = it;
        if level == 0 {
            converged = (1.0 - tol..=1.0 + tol).contains(&eta);
        }
    }

    Ok(IsfResult {
        motion,
        width,
        fitting_error,
        pairs,
        trace,
        level_iterations,
        converged,
    })
}

/// Writes `iteration,level,error,delta_d` rows.
pub fn write_trace_csv<W: Write>(trace: &[TraceEntry], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "level", "error", "delta_d"])?;
    for e in trace {
        w.write_record([
            e.iteration.to_string(),
            e.level.to_string(),
            e.error.to_string(),
            e.width_change.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
