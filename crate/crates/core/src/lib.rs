//! Planar three-body approximations built on the Lambert W function.
//!
//! Each body is reduced to a two-body problem against its companions'
//! barycenter, solved in closed form, and checked against numerical ground
//! truth. See the README for the command-line interface.

// NaN must fail range checks, so `!(x > 0.0)` is intended
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_form;
pub mod harness;
pub mod lambert_w;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod trajectory;
pub mod validity;
