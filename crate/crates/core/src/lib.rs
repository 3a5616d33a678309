//! Sharpened Heisenberg position–momentum uncertainty bounds from angular
//! momentum statistics.
//!
//! The library computes the closed-form lower bounds on σ_r·σ_p (the 3/2
//! baseline, the eigenstate bound l + 3/2, and the interpolating bound
//! Ω(L², R)), constructs the three-level variational solutions that attain
//! them, and cross-checks every analytic claim with independent numerics:
//! radial quadrature for the matrix elements, exhaustive integer search for
//! the variational minimum, and direct constrained minimization over a
//! truncated oscillator basis.
//!
//! The `parallel` feature (on by default) runs scans, searches and
//! optimizer restarts on rayon; the sequential fallbacks produce identical
//! results and stay available either way.

pub mod basis;
pub mod bounds;
pub mod constraints;
pub mod error;
pub mod oracle;
pub mod optimizer;
mod serde_util;

pub use basis::{AngularStats, MomentReport, QuantumNumbers, SuperpositionState};
pub use bounds::{BoundInputs, BoundKind, BoundValue};
pub use constraints::{Domain, Multipliers, TripleSolution, WAudit};
pub use error::{Error, Result};
pub use oracle::{Parity, Quadrature, QuadratureConfig, ScanReport};
pub use optimizer::{OptimizeProblem, OptimizeResult, StationarityReport};
