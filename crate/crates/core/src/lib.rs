//! Grasp planning for customized grippers by iterative surface fitting.

// Negated comparisons are used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correspondence;
pub mod fixtures;
pub mod geometry;
pub mod io;
pub mod ipfo;
pub mod isf;
pub mod planner;
