//! Finite models for generating partitions of measure-preserving actions.
//!
//! The crate covers entropy calculus on weighted partitions, exact counting of
//! typical names, d̄-separated codebooks, ternary prefix codes, permutation
//! systems with expressible partial maps and towers, and a recoding pipeline
//! that turns a labeling into a pre-partition with prescribed masses and
//! decodes it back.

pub mod coding;
pub mod error;
pub mod partition;
pub mod probvec;
pub mod recoder;
pub mod system;
pub mod typical;

pub use error::{Error, Result};
