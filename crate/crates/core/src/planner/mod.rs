//! Guided sampling of ISF starts over k-means centers of the object.
//!
//! Each center is an arm with an average regret. Every sample picks the
//! arm with the lowest regret, starts ISF there with a random orientation,
//! checks the fitted pose for collision, and folds the fitting error into
//! the arm's running average, inflated by `1 + gamma` on collision.

mod gripper;
mod kmeans;
mod sampling;

use std::io::Write;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gripper::{boxes_collide, collide, CollisionBox, GripperError, GripperModel, OrientedBox};
pub use kmeans::{kmeans_centers, MAX_LLOYD_ROUNDS};
pub use sampling::{random_rotation, random_rotation_in_cone, ApproachCone};

use crate::geometry::{RigidMotion, Rotation, SpatialIndex, SurfaceCloud, Vec3};
use crate::isf::{run_isf, IsfConfig, IsfError, IsfResult, TraceEntry};

/// Regret fed for an abandoned sample when no finite error has been seen.
pub const ABANDONED_FALLBACK_ERROR: f64 = 1.0;
/// Multiple of the worst finite error fed for an abandoned sample.
pub const ABANDONED_ERROR_FACTOR: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("invalid planner input: {0}")]
    InvalidInput(String),
    #[error("no collision-free grasp among {samples} samples")]
    NoFeasibleGrasp { samples: usize },
    #[error(transparent)]
    Isf(#[from] IsfError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Number of k-means centers `K`.
    pub centers: usize,
    /// Number of ISF samples `K_s`.
    pub samples: usize,
    /// Collision penalty `gamma`.
    pub gamma: f64,
    /// Box penetration tolerated before a pose counts as colliding (m).
    pub penetration: f64,
    /// Samples evaluated per regret snapshot; 1 is strictly sequential.
    pub batch_size: usize,
    /// Worker cap for batch evaluation; `None` uses the rayon default.
    pub threads: Option<usize>,
    /// Start width; `None` uses the gripper's home width.
    pub start_width: Option<f64>,
    pub approach_cone: Option<ApproachCone>,
    pub isf: IsfConfig,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            centers: 6,
            samples: 60,
            gamma: 0.2,
            penetration: 0.001,
            batch_size: 1,
            threads: None,
            start_width: None,
            approach_cone: None,
            isf: IsfConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraspCandidate {
    pub sample: usize,
    pub center: usize,
    pub motion: RigidMotion,
    pub width: f64,
    pub fitting_error: f64,
    pub collision_free: bool,
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
}

/// One row of the planning log: the regret and trial vectors are the
/// values after this sample's update.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub sample: usize,
    pub center: usize,
    pub seed_pose: RigidMotion,
    pub error: f64,
    pub abandoned: bool,
    pub collision: bool,
    pub regret: Vec<f64>,
    pub trial: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlannerState {
    pub centers: Vec<Vec3>,
    pub regret: Vec<f64>,
    pub trial: Vec<u64>,
    pub seed: u64,
    pub candidates: Vec<GraspCandidate>,
}

impl PlannerState {
    pub fn new(centers: Vec<Vec3>, seed: u64) -> Self {
        let k = centers.len();
        Self {
            centers,
            regret: vec![0.0; k],
            trial: vec![0; k],
            seed,
            candidates: Vec::new(),
        }
    }

    /// Lowest-regret arm; ties go to the lowest index.
    pub fn select(&self) -> usize {
        select_arm(&self.regret)
    }

    /// Folds `error` into arm `k`'s running average, then applies the
    /// collision factor `1 + gamma`.
    pub fn update(&mut self, k: usize, error: f64, collision: bool, gamma: f64) {
        self.regret[k] = regret_update(self.regret[k], self.trial[k], error, collision, gamma);
        self.trial[k] += 1;
    }
}

pub fn select_arm(regret: &[f64]) -> usize {
    let mut best = 0;
    for (i, r) in regret.iter().enumerate() {
        if *r < regret[best] {
            best = i;
        }
    }
    best
}

pub fn regret_update(regret: f64, trial: u64, error: f64, collision: bool, gamma: f64) -> f64 {
    let n = trial as f64;
    let avg = (regret * n + error) / (n + 1.0);
    let col = if collision { 1.0 } else { 0.0 };
    (1.0 + gamma * col) * avg
}

#[derive(Clone, Debug)]
pub struct PlanReport {
    pub state: PlannerState,
    pub log: Vec<SampleRecord>,
    pub elapsed: Duration,
}

impl PlanReport {
    /// Candidates, collision-free first, then by ascending fitting error.
    pub fn candidates(&self) -> &[GraspCandidate] {
        &self.state.candidates
    }

    pub fn collision_free_count(&self) -> usize {
        self.state.candidates.iter().filter(|c| c.collision_free).count()
    }

    pub fn best(&self) -> Result<&GraspCandidate, PlanError> {
        self.state
            .candidates
            .first()
            .filter(|c| c.collision_free)
            .ok_or(PlanError::NoFeasibleGrasp {
                samples: self.log.len(),
            })
    }

    /// Wall time per collision-free grasp, if any were found.
    pub fn time_per_feasible_grasp(&self) -> Option<Duration> {
        match self.collision_free_count() {
            0 => None,
            n => Some(self.elapsed / n as u32),
        }
    }
}

fn validate(object: &SurfaceCloud, gripper: &GripperModel, cfg: &PlannerConfig) -> Result<f64, PlanError> {
    if cfg.samples < 1 {
        return Err(PlanError::InvalidInput("need at least one sample".into()));
    }
    if cfg.centers < 1 || cfg.centers > object.len() {
        return Err(PlanError::InvalidInput(format!(
            "center count {} must be in 1..={}",
            cfg.centers,
            object.len()
        )));
    }
    if cfg.batch_size < 1 {
        return Err(PlanError::InvalidInput("batch size must be at least 1".into()));
    }
    if !(cfg.gamma >= 0.0) || !(cfg.penetration >= 0.0) {
        return Err(PlanError::InvalidInput("gamma and penetration must be >= 0".into()));
    }
    cfg.isf.validate()?;
    let width = cfg.start_width.unwrap_or(gripper.home_width());
    if !gripper.limits().contains(width) {
        return Err(PlanError::InvalidInput(format!(
            "start width {width} outside gripper limits"
        )));
    }
    Ok(width)
}

/// Runs guided sampling on `object` and returns every evaluated candidate.
pub fn plan(
    object: &SurfaceCloud,
    gripper: &GripperModel,
    cfg: &PlannerConfig,
    seed: u64,
) -> Result<PlanReport, PlanError> {
    let started = Instant::now();
    let start_width = validate(object, gripper, cfg)?;
    let centers = kmeans_centers(object.points(), cfg.centers, &mut ChaCha8Rng::seed_from_u64(seed));
    let index = SpatialIndex::new(object.clone());
    let mut orientations = ChaCha8Rng::seed_from_u64(seed);
    orientations.set_stream(1);

    let pool = if cfg.batch_size > 1 {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cfg.threads {
            builder = builder.num_threads(n);
        }
        Some(
            builder
                .build()
                .map_err(|e| PlanError::InvalidInput(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };

    let mut state = PlannerState::new(centers, seed);
    let mut log = Vec::with_capacity(cfg.samples);
    let mut worst_error: Option<f64> = None;
    let mut sample = 0;
    while sample < cfg.samples {
        let batch = cfg.batch_size.min(cfg.samples - sample);
        let arm = state.select();
        let seeds: Vec<RigidMotion> = (0..batch)
            .map(|_| {
                let r = match &cfg.approach_cone {
                    Some(cone) => random_rotation_in_cone(&mut orientations, &gripper.approach_axis(), cone),
                    None => random_rotation(&mut orientations),
                };
                RigidMotion::new(r, state.centers[arm])
            })
            .collect();
        let evaluate = |seed_pose: &RigidMotion| run_isf(seed_pose, start_width, &index, gripper, &cfg.isf);
        let results: Vec<Result<IsfResult, IsfError>> = match &pool {
            Some(pool) => pool.install(|| {
                use rayon::prelude::*;
                seeds.par_iter().map(evaluate).collect()
            }),
            None => seeds.iter().map(evaluate).collect(),
        };

        for (seed_pose, result) in seeds.into_iter().zip(results) {
            let (error, abandoned, collision) = match result {
                Ok(fit) => {
                    let collision = collide(gripper, &fit.motion, fit.width, object, cfg.penetration);
                    let error = fit.fitting_error;
                    worst_error = Some(worst_error.map_or(error, |w: f64| w.max(error)));
                    state.candidates.push(GraspCandidate {
                        sample,
                        center: arm,
                        motion: fit.motion,
                        width: fit.width,
                        fitting_error: error,
                        collision_free: !collision,
                        converged: fit.converged,
                        trace: fit.trace,
                    });
                    (error, false, collision)
                }
                Err(IsfError::SampleAbandoned { level, cause, .. }) => {
                    log::debug!("sample {sample} at center {arm} abandoned at level {level}: {cause}");
                    let error = worst_error.map_or(ABANDONED_FALLBACK_ERROR, |w| ABANDONED_ERROR_FACTOR * w);
                    (error, true, false)
                }
                Err(e) => return Err(e.into()),
            };
            state.update(arm, error, collision, cfg.gamma);
            log.push(SampleRecord {
                sample,
                center: arm,
                seed_pose,
                error,
                abandoned,
                collision,
                regret: state.regret.clone(),
                trial: state.trial.clone(),
            });
            sample += 1;
        }
    }

    state.candidates.sort_by(|a, b| {
        b.collision_free
            .cmp(&a.collision_free)
            .then(a.fitting_error.total_cmp(&b.fitting_error))
            .then(a.sample.cmp(&b.sample))
    });
    Ok(PlanReport {
        state,
        log,
        elapsed: started.elapsed(),
    })
}

/// Writes the planning log as CSV:
/// `sample,center,qw,qx,qy,qz,tx,ty,tz,error,abandoned,collision,regret_0..,trial_0..`.
pub fn write_log_csv<W: Write>(log: &[SampleRecord], out: W) -> csv::Result<()> {
    let k = log.first().map_or(0, |r| r.regret.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = [
        "sample",
        "center",
        "qw",
        "qx",
        "qy",
        "qz",
        "tx",
        "ty",
        "tz",
        "error",
        "abandoned",
        "collision",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((0..k).map(|i| format!("regret_{i}")));
    header.extend((0..k).map(|i| format!("trial_{i}")));
    w.write_record(&header)?;
    for r in log {
        let q = r.seed_pose.rotation.to_quaternion();
        let t = r.seed_pose.translation;
        let mut row = vec![r.sample.to_string(), r.center.to_string()];
        row.extend(q.iter().map(|v| v.to_string()));
        row.extend([t.x, t.y, t.z].iter().map(|v| v.to_string()));
        row.push(r.error.to_string());
        row.push(u8::from(r.abandoned).to_string());
        row.push(u8::from(r.collision).to_string());
        row.extend(r.regret.iter().map(|v| v.to_string()));
        row.extend(r.trial.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// A log row parsed back from CSV, for audit and replay.
#[derive(Clone, Debug, PartialEq)]
pub struct LoggedSample {
    pub sample: usize,
    pub center: usize,
    pub seed_rotation: Rotation,
    pub error: f64,
    pub abandoned: bool,
    pub collision: bool,
    pub regret: Vec<f64>,
    pub trial: Vec<u64>,
}

pub fn read_log_csv<R: std::io::Read>(input: R) -> Result<Vec<LoggedSample>, String> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers().map_err(|e| e.to_string())?.clone();
    let k = headers.iter().filter(|h| h.starts_with("regret_")).count();
    let mut out = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let field = |i: usize| -> Result<&str, String> {
            rec.get(i)
                .ok_or_else(|| format!("row {}: missing column {i}", line + 1))
        };
        let f = |i: usize| -> Result<f64, String> {
            field(i)?.parse::<f64>().map_err(|e| format!("row {}: {e}", line + 1))
        };
        let u = |i: usize| -> Result<u64, String> {
            field(i)?.parse::<u64>().map_err(|e| format!("row {}: {e}", line + 1))
        };
        out.push(LoggedSample {
            sample: u(0)? as usize,
            center: u(1)? as usize,
            seed_rotation: Rotation::from_quaternion(f(2)?, f(3)?, f(4)?, f(5)?),
            error: f(9)?,
            abandoned: u(10)? == 1,
            collision: u(11)? == 1,
            regret: (0..k).map(|i| f(12 + i)).collect::<Result<_, _>>()?,
            trial: (0..k).map(|i| u(12 + k + i)).collect::<Result<_, _>>()?,
        });
    }
    Ok(out)
}
