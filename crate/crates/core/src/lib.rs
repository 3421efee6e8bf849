//! Geometric tools for classical and quantum machine learning.
//!
//! - [`spd`]: affine-invariant and log-Euclidean geometry on SPD matrices.
//! - [`grassmann`]: principal angles and geodesic distance between subspaces.
//! - [`state`]: pure/mixed states, fidelities, Bures and Fubini-Study
//!   distances, entanglement diagnostics, the fidelity kernel.
//! - [`circuit`]: statevector simulation with `exp(−iθG)` rotations and
//!   parameter-shift gradients.
//! - [`geometry`]: quantum geometric tensor, quantum Fisher information,
//!   natural-gradient steps.
//! - [`pipeline`]: hybrid quantum-classical regression/classification models
//!   and the benchmark harness.
//! - [`io`]: the CSV and text formats shared with the command-line tool.

pub mod circuit;
pub mod error;
pub mod geometry;
pub mod grassmann;
pub mod io;
pub mod pipeline;
pub mod spd;
pub mod state;

pub use error::{Error, Result};
