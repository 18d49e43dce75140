//! Gripper-to-object correspondences and outlier/duplicate rejection.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Finger, SpatialIndex, SurfaceCloud, UnitVec3, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrespondenceError {
    #[error("gripper sample carries no finger labels")]
    Unlabeled,
    #[error("outlier threshold must be positive and finite, got {0}")]
    InvalidThreshold(f64),
    #[error("all {candidates} correspondences were rejected (threshold {threshold} m)")]
    AllFiltered { candidates: usize, threshold: f64 },
}

/// A gripper point matched to its nearest object point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrespondencePair {
    pub source_index: usize,
    pub source: Vec3,
    pub source_normal: UnitVec3,
    pub target_index: usize,
    pub target: Vec3,
    pub target_normal: UnitVec3,
    pub finger: Finger,
    pub distance: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CorrespondenceSet {
    pub pairs: Vec<CorrespondencePair>,
}

impl CorrespondenceSet {
    pub fn new(pairs: Vec<CorrespondencePair>) -> Self {
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CorrespondencePair> {
        self.pairs.iter()
    }

    /// Median pair distance; the mean of the two middle values for even counts.
    pub fn median_distance(&self) -> Option<f64> {
        if self.pairs.is_empty() {
            return None;
        }
        let mut d: Vec<f64> = self.pairs.iter().map(|p| p.distance).collect();
        d.sort_by(f64::total_cmp);
        let n = d.len();
        Some(if n % 2 == 1 {
            d[n / 2]
        } else {
            0.5 * (d[n / 2 - 1] + d[n / 2])
        })
    }
}

/// Outlier threshold `max(min_threshold, median_factor * median distance)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub min_threshold: f64,
    pub median_factor: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_threshold: 0.005,
            median_factor: 2.5,
        }
    }
}

impl FilterConfig {
    pub fn threshold(&self, set: &CorrespondenceSet) -> f64 {
        let median = set.median_distance().unwrap_or(0.0);
        self.min_threshold.max(self.median_factor * median)
    }
}

/// One pair per source point, targeting the nearest object point.
pub fn match_nearest(
    gripper_sample: &SurfaceCloud,
    object: &SpatialIndex,
) -> Result<CorrespondenceSet, CorrespondenceError> {
    let fingers = gripper_sample.fingers().ok_or(CorrespondenceError::Unlabeled)?;
    let pairs = gripper_sample
        .points()
        .iter()
        .zip(gripper_sample.normals())
        .zip(fingers)
        .enumerate()
        .map(|(source_index, ((p, n), &finger))| {
            let hit = object.nearest(p);
            CorrespondencePair {
                source_index,
                source: *p,
                source_normal: *n,
                target_index: hit.index,
                target: hit.point,
                target_normal: hit.normal,
                finger,
                distance: hit.distance,
            }
        })
        .collect();
    Ok(CorrespondenceSet { pairs })
}

/// Drops pairs farther than `tau`, then keeps only the closest pair per
/// target point (lowest source index on ties). Survivors keep input order.
pub fn filter(set: &CorrespondenceSet, tau: f64) -> Result<CorrespondenceSet, CorrespondenceError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(CorrespondenceError::InvalidThreshold(tau));
    }
    let mut best: HashMap<usize, usize> = HashMap::new();
    for (pos, pair) in set.pairs.iter().enumerate() {
        if pair.distance > tau {
            continue;
        }
        best.entry(pair.target_index)
            .and_modify(|cur| {
                let c = &set.pairs[*cur];
                if pair.distance < c.distance || (pair.distance == c.distance && pair.source_index < c.source_index) {
                    *cur = pos;
                }
            })
            .or_insert(pos);
    }
    let pairs: Vec<CorrespondencePair> = set
        .pairs
        .iter()
        .enumerate()
        .filter(|(pos, p)| best.get(&p.target_index) == Some(pos))
        .map(|(_, p)| *p)
        .collect();
    if pairs.is_empty() {
        return Err(CorrespondenceError::AllFiltered {
            candidates: set.len(),
            threshold: tau,
        });
    }
    Ok(CorrespondenceSet { pairs })
}
