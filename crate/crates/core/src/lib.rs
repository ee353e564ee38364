// negated comparisons in this crate deliberately treat NaN as out of range
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ambient;
pub mod calculus;
pub mod catalog;
pub mod error;
pub mod flow;
pub mod grid;
pub mod report;
pub mod samples;
pub mod stencil;
pub mod surface;
