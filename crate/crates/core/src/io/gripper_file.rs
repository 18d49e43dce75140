use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::{read_cloud_file, read_text, save_cloud, write_text, Diagnostic, IoError};
use crate::geometry::{Finger, Rotation, SurfaceCloud, Vec3};
use crate::ipfo::WidthLimits;
use crate::planner::{CollisionBox, GripperModel};

pub const GRIPPER_SCHEMA_VERSION: u32 = 1;

/// Orthonormality tolerance for box axes written by hand.
const AXES_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalConvention {
    /// Patch normals point into the grasped volume.
    Inward,
    /// Patch normals point out of the finger; flipped on load.
    Outward,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchFiles {
    /// Paths relative to the model file.
    pub first: PathBuf,
    pub second: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WidthSpec {
    pub home: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub name: String,
    pub center: [f64; 3],
    /// The three box axes, each a unit vector in the gripper frame.
    pub axes: [[f64; 3]; 3],
    pub half_extents: [f64; 3],
    /// Center offset along the opening axis per meter of width change.
    #[serde(default)]
    pub width_coupling: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GripperFile {
    pub schema_version: u32,
    pub name: String,
    pub version: String,
    pub patches: PatchFiles,
    pub normals: NormalConvention,
    /// Points from finger 1 toward finger 2.
    pub opening_axis: [f64; 3],
    pub approach_axis: [f64; 3],
    pub width: WidthSpec,
    pub collision_boxes: Vec<BoxSpec>,
}

pub fn parse_gripper_json(text: &str) -> Result<GripperFile, Diagnostic> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: GripperFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        let d = Diagnostic::at(inner.line(), inner.to_string());
        if field == "." {
            d
        } else {
            d.with_field(field)
        }
    })?;
    Ok(file)
}

fn load_patch(model: &Path, field: &str, rel: &Path, convention: NormalConvention) -> Result<SurfaceCloud, IoError> {
    let path = model.parent().unwrap_or(Path::new(".")).join(rel);
    let raw = read_cloud_file(&path).map_err(|e| match e {
        IoError::Io { path, source } => Diagnostic::general(format!("cannot read patch {}: {source}", path.display()))
            .with_field(field)
            .into_error(model),
        other => other,
    })?;
    let normals = raw.normals.ok_or_else(|| {
        Diagnostic::general("contact patch needs normals")
            .with_field("nx")
            .into_error(&path)
    })?;
    let cloud = SurfaceCloud::new(raw.points, normals).map_err(|e| IoError::Validation {
        path: path.clone(),
        message: e.to_string(),
    })?;
    Ok(match convention {
        NormalConvention::Inward => cloud,
        NormalConvention::Outward => cloud.flipped(),
    })
}

fn box_from_spec(spec: &BoxSpec) -> Result<CollisionBox, String> {
    let m = Matrix3::from_columns(&spec.axes.map(Vec3::from));
    let err = (m.transpose() * m - Matrix3::identity()).abs().max();
    if err > AXES_TOLERANCE || m.determinant() < 0.0 {
        return Err(format!(
            "collision box `{}`: axes must be a right-handed orthonormal frame",
            spec.name
        ));
    }
    Ok(CollisionBox {
        name: spec.name.clone(),
        center: Vec3::from(spec.center),
        axes: Rotation::from_matrix(&m),
        half_extents: Vec3::from(spec.half_extents),
        width_coupling: spec.width_coupling,
    })
}

/// Reads and validates a gripper model file and the patch clouds it names.
pub fn load_gripper(path: &Path) -> Result<GripperModel, IoError> {
    let file = parse_gripper_json(&read_text(path)?).map_err(|d| d.into_error(path))?;
    let invalid = |message: String| IoError::Validation {
        path: path.to_path_buf(),
        message,
    };
    if file.schema_version != GRIPPER_SCHEMA_VERSION {
        return Err(invalid(format!(
            "unsupported schema_version {} (expected {GRIPPER_SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    let w = file.width;
    if !(w.min < w.max) {
        return Err(invalid(format!(
            "width.min {} must be below width.max {}",
            w.min, w.max
        )));
    }
    let first = load_patch(path, "patches.first", &file.patches.first, file.normals)?;
    let second = load_patch(path, "patches.second", &file.patches.second, file.normals)?;
    let boxes = file
        .collision_boxes
        .iter()
        .map(box_from_spec)
        .collect::<Result<Vec<_>, _>>()
        .map_err(invalid)?;
    GripperModel::new(
        file.name,
        first,
        second,
        Vec3::from(file.opening_axis),
        Vec3::from(file.approach_axis),
        w.home,
        WidthLimits::new(w.min, w.max),
        boxes,
    )
    .map_err(|e| invalid(e.to_string()))
}

/// Describes `gripper` as a model file with patches `finger1.ply` and
/// `finger2.ply`.
pub fn gripper_to_file(gripper: &GripperModel, version: &str) -> GripperFile {
    let limits = gripper.limits();
    GripperFile {
        schema_version: GRIPPER_SCHEMA_VERSION,
        name: gripper.name.clone(),
        version: version.to_string(),
        patches: PatchFiles {
            first: "finger1.ply".into(),
            second: "finger2.ply".into(),
        },
        normals: NormalConvention::Inward,
        opening_axis: gripper.opening_axis().into_inner().into(),
        approach_axis: gripper.approach_axis().into_inner().into(),
        width: WidthSpec {
            home: gripper.home_width(),
            min: limits.min,
            max: limits.max,
        },
        collision_boxes: gripper
            .boxes()
            .iter()
            .map(|b| {
                let m = b.axes.matrix();
                BoxSpec {
                    name: b.name.clone(),
                    center: b.center.into(),
                    axes: [0, 1, 2].map(|k| m.column(k).into_owned().into()),
                    half_extents: b.half_extents.into(),
                    width_coupling: b.width_coupling,
                }
            })
            .collect(),
    }
}

/// Writes `gripper.json` and its two patch files into `dir`, returning the
/// model file path.
pub fn save_gripper(dir: &Path, gripper: &GripperModel, version: &str) -> Result<PathBuf, IoError> {
    fs::create_dir_all(dir).map_err(|source| IoError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let file = gripper_to_file(gripper, version);
    save_cloud(&dir.join(&file.patches.first), gripper.patch(Finger::First))?;
    save_cloud(&dir.join(&file.patches.second), gripper.patch(Finger::Second))?;
    let path = dir.join("gripper.json");
    let mut text = serde_json::to_string_pretty(&file).expect("gripper file serializes");
    text.push('\n');
    write_text(&path, &text)?;
    Ok(path)
}
