//! Point-cloud, gripper-model and result-file formats.
//!
//! Clouds are ASCII PLY or OBJ; gripper models and grasp results are JSON.
//! All lengths are meters. The formats are documented in `docs/formats.md`.

mod gripper_file;
mod obj;
mod ply;
mod result_file;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use gripper_file::{
    gripper_to_file, load_gripper, save_gripper, BoxSpec, GripperFile, NormalConvention, PatchFiles, WidthSpec,
    GRIPPER_SCHEMA_VERSION,
};
pub use obj::read_obj;
pub use ply::{read_ply, write_ply, PlyData};
pub use result_file::{read_result, write_result, CandidateRecord, ResultFile, Timing, RESULT_SCHEMA_VERSION};

use crate::geometry::{estimate_normals, RigidMotion, SurfaceCloud, DEFAULT_NORMAL_NEIGHBORS};
use crate::planner::GripperModel;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}{}{}: {message}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default(), field.as_ref().map(|f| format!(" (field `{f}`)")).unwrap_or_default())]
    Parse {
        path: PathBuf,
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Validation { path: PathBuf, message: String },
}

/// Parse failure location inside a single document, before the path is known.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl Diagnostic {
    pub(crate) fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            field: None,
            message: message.into(),
        }
    }

    pub(crate) fn general(message: impl Into<String>) -> Self {
        Self {
            line: None,
            field: None,
            message: message.into(),
        }
    }

    pub(crate) fn with_field(mut self, field: impl Into<String>) -> Self {
        self.field = Some(field.into());
        self
    }

    pub fn into_error(self, path: &Path) -> IoError {
        IoError::Parse {
            path: path.to_path_buf(),
            line: self.line,
            field: self.field,
            message: self.message,
        }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Points and optional normals read from a PLY or OBJ file.
#[derive(Clone, Debug, PartialEq)]
pub struct RawCloud {
    pub points: Vec<crate::geometry::Vec3>,
    pub normals: Option<Vec<crate::geometry::Vec3>>,
}

pub fn read_cloud_file(path: &Path) -> Result<RawCloud, IoError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    let text = read_text(path)?;
    match ext.as_deref() {
        Some("ply") => read_ply(&text)
            .map(|d| RawCloud {
                points: d.points,
                normals: d.normals,
            })
            .map_err(|d| d.into_error(path)),
        Some("obj") => read_obj(&text).map_err(|d| d.into_error(path)),
        _ => Err(Diagnostic::general("unsupported extension (expected .ply or .obj)").into_error(path)),
    }
}

/// Loads an object cloud; normals are estimated from neighborhoods when the
/// file has none.
pub fn load_object(path: &Path) -> Result<SurfaceCloud, IoError> {
    let raw = read_cloud_file(path)?;
    let invalid = |message: String| IoError::Validation {
        path: path.to_path_buf(),
        message,
    };
    if raw.points.is_empty() {
        return Err(invalid("cloud has no points".into()));
    }
    match raw.normals {
        Some(normals) => SurfaceCloud::new(raw.points, normals).map_err(|e| invalid(e.to_string())),
        None => {
            log::info!("{}: no normals in file, estimating", path.display());
            estimate_normals(&raw.points, DEFAULT_NORMAL_NEIGHBORS, None).map_err(|e| invalid(e.to_string()))
        }
    }
}

/// Writes a cloud with its normals as ASCII PLY.
pub fn save_cloud(path: &Path, cloud: &SurfaceCloud) -> Result<(), IoError> {
    write_text(path, &write_ply(cloud.points(), Some(cloud.normals()), &[]))
}

/// Writes the posed contact patches and posed collision boxes of a grasp.
pub fn export_posed_gripper(
    path: &Path,
    gripper: &GripperModel,
    motion: &RigidMotion,
    width: f64,
) -> Result<(), IoError> {
    let contact = gripper.posed_contact(motion, width);
    let boxes = gripper.posed_boxes(motion, width);
    write_text(path, &write_ply(contact.points(), Some(contact.normals()), &boxes))
}
