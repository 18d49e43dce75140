use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_text, write_text, Diagnostic, IoError};
use crate::geometry::{RigidMotion, Rotation, Vec3};
use crate::planner::{GraspCandidate, PlanReport, PlannerConfig};

pub const RESULT_SCHEMA_VERSION: u32 = 1;

const QUATERNION_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateRecord {
    pub sample: usize,
    pub center: usize,
    /// Unit quaternion `(w, x, y, z)`, `w >= 0`.
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
    pub width: f64,
    pub fitting_error: f64,
    pub collision_free: bool,
    pub converged: bool,
    /// Row-major rotation matrix, present when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_matrix: Option<[[f64; 3]; 3]>,
}

impl CandidateRecord {
    pub fn from_candidate(c: &GraspCandidate, with_matrix: bool) -> Self {
        let m = c.motion.rotation.matrix();
        Self {
            sample: c.sample,
            center: c.center,
            rotation: c.motion.rotation.to_quaternion(),
            translation: c.motion.translation.into(),
            width: c.width,
            fitting_error: c.fitting_error,
            collision_free: c.collision_free,
            converged: c.converged,
            rotation_matrix: with_matrix.then(|| [0, 1, 2].map(|r| [0, 1, 2].map(|k| m[(r, k)]))),
        }
    }

    pub fn motion(&self) -> RigidMotion {
        let [w, x, y, z] = self.rotation;
        RigidMotion::new(Rotation::from_quaternion(w, x, y, z), Vec3::from(self.translation))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub total_seconds: f64,
    pub seconds_per_collision_free_grasp: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub schema_version: u32,
    pub units: String,
    pub seed: u64,
    pub config: PlannerConfig,
    pub samples: usize,
    pub collision_free: usize,
    pub candidates: Vec<CandidateRecord>,
    /// Wall-clock figures vary between runs, so they are opt-in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl ResultFile {
    pub fn from_report(
        report: &PlanReport,
        config: &PlannerConfig,
        seed: u64,
        with_matrix: bool,
        with_timing: bool,
    ) -> Self {
        Self {
            schema_version: RESULT_SCHEMA_VERSION,
            units: "m".into(),
            seed,
            config: config.clone(),
            samples: report.log.len(),
            collision_free: report.collision_free_count(),
            candidates: report
                .candidates()
                .iter()
                .map(|c| CandidateRecord::from_candidate(c, with_matrix))
                .collect(),
            timing: with_timing.then(|| Timing {
                total_seconds: report.elapsed.as_secs_f64(),
                seconds_per_collision_free_grasp: report.time_per_feasible_grasp().map(|d| d.as_secs_f64()),
            }),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result file serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, Diagnostic> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ResultFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            Diagnostic::at(inner.line(), inner.to_string()).with_field(field)
        })?;
        if file.schema_version != RESULT_SCHEMA_VERSION {
            return Err(
                Diagnostic::general(format!("unsupported schema_version {}", file.schema_version))
                    .with_field("schema_version"),
            );
        }
        if file.units != "m" {
            return Err(Diagnostic::general(format!("units must be \"m\", got {:?}", file.units)).with_field("units"));
        }
        for (i, c) in file.candidates.iter().enumerate() {
            let norm = c.rotation.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > QUATERNION_TOLERANCE {
                return Err(Diagnostic::general(format!("quaternion norm {norm} is not 1"))
                    .with_field(format!("candidates[{i}].rotation")));
            }
        }
        Ok(file)
    }
}

pub fn write_result(path: &Path, result: &ResultFile) -> Result<(), IoError> {
    write_text(path, &result.to_json())
}

pub fn read_result(path: &Path) -> Result<ResultFile, IoError> {
    ResultFile::from_json(&read_text(path)?).map_err(|d| d.into_error(path))
}
