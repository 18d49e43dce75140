//! Spatial primitives shared by the fitting and planning stages.
//!
//! Positions are in meters throughout. Directions are unit vectors.

mod cloud;
mod kdtree;
mod motion;
mod normals;
mod rotation;

pub use cloud::{Finger, SurfaceCloud};
pub use kdtree::{KdTree, Neighbor, SpatialIndex};
pub use motion::RigidMotion;
pub use normals::{default_viewpoint, estimate_normals, DEFAULT_NORMAL_NEIGHBORS};
pub use rotation::{skew, Rotation};

use nalgebra::{Unit, Vector3};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type UnitVec3 = Unit<Vector3<f64>>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("cloud has {points} points but {normals} normals")]
    LengthMismatch { points: usize, normals: usize },
    #[error("cloud has {points} points but {labels} finger labels")]
    LabelMismatch { points: usize, labels: usize },
    #[error("normal {index} has zero or non-finite length")]
    ZeroNormal { index: usize },
    #[error("neighborhood of point {index} is degenerate (covariance rank < 2)")]
    DegenerateNeighborhood { index: usize },
    #[error("operation produced an empty cloud")]
    EmptyResult,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
