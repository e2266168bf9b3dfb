//! Exact-arithmetic stability invariants of polarized pairs on three
//! concrete backends (curves, surfaces, toric varieties): energies of
//! divisorial valuations and measures, beta-invariants, entropy,
//! delta-invariants, Ding and Mabuchi functionals, valuative and divisorial
//! stability thresholds, and an ample-cone scanner.

pub mod curve;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod linalg;
pub mod numclass;
pub mod poly;
pub mod rat;
pub mod scan;
pub mod stability;
pub mod surface;
pub mod toric;

pub use error::{Error, Result};
pub use numclass::{BackendKind, NumClass, VarietyModel};
pub use rat::Rat;
