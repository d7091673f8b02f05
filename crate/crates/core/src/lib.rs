//! Structure-preserving balanced truncation of networked linear passive systems.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyze;
pub mod decompose;
pub mod error;
pub mod gramian;
pub mod io;
pub mod linalg;
pub mod lti;
pub mod manipulator;
pub mod model;
pub mod pipeline;
pub mod realize;
pub mod reduce;
pub mod sdp;

pub use error::{Error, Result};

#[cfg(feature = "cli")]
pub mod cli;
