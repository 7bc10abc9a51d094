//! Exact algebraic analysis of linear systems of partial differential
//! equations over presented differential fields.

pub mod basis;
pub mod diffpoly;
pub mod duality;
pub mod error;
pub mod expr;
pub mod field;
pub mod geometry;
pub mod involution;
pub mod linalg;
pub mod ore;

pub use error::{Error, Result};
