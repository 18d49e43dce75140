use serde::{Deserialize, Serialize};

use super::{GeometryError, RigidMotion, UnitVec3, Vec3};

/// Which jaw a contact point belongs to. The opening axis points from
/// `First` to `Second`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Finger {
    First,
    Second,
}

impl Finger {
    /// `(-1)^j` for finger index `j`: a positive width change moves the
    /// first finger against the opening axis and the second along it.
    pub fn sign(self) -> f64 {
        match self {
            Finger::First => -1.0,
            Finger::Second => 1.0,
        }
    }

    /// One-based finger number.
    pub fn number(self) -> u8 {
        match self {
            Finger::First => 1,
            Finger::Second => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Finger::First),
            2 => Some(Finger::Second),
            _ => None,
        }
    }
}

/// Oriented point samples of a surface.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceCloud {
    points: Vec<Vec3>,
    normals: Vec<UnitVec3>,
    fingers: Option<Vec<Finger>>,
}

impl SurfaceCloud {
    /// Builds a cloud, normalizing each normal.
    pub fn new(points: Vec<Vec3>, normals: Vec<Vec3>) -> Result<Self, GeometryError> {
        if points.len() != normals.len() {
            return Err(GeometryError::LengthMismatch {
                points: points.len(),
                normals: normals.len(),
            });
        }
        let normals = normals
            .into_iter()
            .enumerate()
            .map(|(index, n)| {
                let len = n.norm();
                if len.is_finite() && len > 0.0 {
                    Ok(UnitVec3::new_unchecked(n / len))
                } else {
                    Err(GeometryError::ZeroNormal { index })
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            points,
            normals,
            fingers: None,
        })
    }

    pub fn from_unit(points: Vec<Vec3>, normals: Vec<UnitVec3>) -> Result<Self, GeometryError> {
        if points.len() != normals.len() {
            return Err(GeometryError::LengthMismatch {
                points: points.len(),
                normals: normals.len(),
            });
        }
        Ok(Self {
            points,
            normals,
            fingers: None,
        })
    }

    pub fn with_fingers(mut self, fingers: Vec<Finger>) -> Result<Self, GeometryError> {
        if fingers.len() != self.points.len() {
            return Err(GeometryError::LabelMismatch {
                points: self.points.len(),
                labels: fingers.len(),
            });
        }
        self.fingers = Some(fingers);
        Ok(self)
    }

    /// Labels every point with the same finger.
    pub fn labeled(self, finger: Finger) -> Self {
        let n = self.len();
        Self {
            fingers: Some(vec![finger; n]),
            ..self
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn normals(&self) -> &[UnitVec3] {
        &self.normals
    }

    pub fn fingers(&self) -> Option<&[Finger]> {
        self.fingers.as_deref()
    }

    pub fn point(&self, i: usize) -> &Vec3 {
        &self.points[i]
    }

    pub fn normal(&self, i: usize) -> &UnitVec3 {
        &self.normals[i]
    }

    pub fn finger(&self, i: usize) -> Option<Finger> {
        self.fingers.as_ref().map(|f| f[i])
    }

    pub fn centroid(&self) -> Vec3 {
        if self.points.is_empty() {
            return Vec3::zeros();
        }
        self.points.iter().sum::<Vec3>() / self.points.len() as f64
    }

    /// Maps points through `p -> R p + t` and normals through `n -> R n`.
    pub fn apply_motion(&self, m: &RigidMotion) -> Self {
        Self {
            points: self.points.iter().map(|p| m.transform_point(p)).collect(),
            normals: self
                .normals
                .iter()
                .map(|n| UnitVec3::new_normalize(m.transform_vector(n)))
                .collect(),
            fingers: self.fingers.clone(),
        }
    }

    /// Indices kept by [`SurfaceCloud::downsample`]: `0, factor, 2*factor, ...`.
    pub fn stride_indices(len: usize, factor: usize) -> Vec<usize> {
        (0..len).step_by(factor.max(1)).collect()
    }

    /// Keeps every `factor`-th point in stable order.
    pub fn downsample(&self, factor: usize) -> Result<Self, GeometryError> {
        if factor == 0 {
            return Err(GeometryError::InvalidArgument(
                "downsample factor must be at least 1".into(),
            ));
        }
        if self.is_empty() {
            return Err(GeometryError::EmptyResult);
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        Ok(self.select(&Self::stride_indices(self.len(), factor)))
    }

    /// Subset in the given index order. Panics on out-of-range indices.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            normals: indices.iter().map(|&i| self.normals[i]).collect(),
            fingers: self.fingers.as_ref().map(|f| indices.iter().map(|&i| f[i]).collect()),
        }
    }

    /// Concatenates clouds. Labels survive only if every part is labeled.
    pub fn concat(parts: &[&SurfaceCloud]) -> Self {
        let labeled = parts.iter().all(|c| c.fingers.is_some());
        let mut out = Self {
            points: Vec::new(),
            normals: Vec::new(),
            fingers: labeled.then(Vec::new),
        };
        for c in parts {
            out.points.extend_from_slice(&c.points);
            out.normals.extend_from_slice(&c.normals);
            if let (Some(dst), Some(src)) = (out.fingers.as_mut(), c.fingers.as_ref()) {
                dst.extend_from_slice(src);
            }
        }
        out
    }

    /// Reverses every normal.
    pub fn flipped(&self) -> Self {
        Self {
            points: self.points.clone(),
            normals: self.normals.iter().map(|n| -*n).collect(),
            fingers: self.fingers.clone(),
        }
    }
}
