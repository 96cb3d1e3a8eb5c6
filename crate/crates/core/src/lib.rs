//! Symbolic machinery for Lie point symmetries of the Ricci flow.
//!
//! The crate is `no_std` and only needs `alloc`. Modules build on each other
//! bottom-up: [`expr`] is the computer-algebra kernel, [`geometry`] computes
//! curvature of metric families, [`flow`] forms the Ricci flow residual,
//! [`lie`] prolongs generators and checks symmetry conditions, [`restrict`]
//! induces symmetries on metric ansätze, [`reduce`] builds similarity
//! reductions and closed-form solutions, and [`numerics`] cross-checks the
//! symbolic results in floating point.

#![no_std]

extern crate alloc;

pub mod expr;
pub mod flow;
pub mod geometry;
pub mod jet;
pub mod lie;
pub mod numerics;
pub mod reduce;
pub mod restrict;

pub use expr::{Expr, Symbol};
