//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("magnetic number m={m} exceeds angular momentum l={l}")]
    MagneticNumberOutOfRange { l: u32, m: i32 },

    #[error("superposition has no terms")]
    EmptyState,

    #[error("duplicate basis label (n={n}, l={l}, m={m})")]
    DuplicateTerm { n: u32, l: u32, m: i32 },

    #[error("state norm² deviates from 1 by {defect:.3e}")]
    NotNormalized { defect: f64 },

    #[error("⟨r⟩, ⟨p⟩ are not guaranteed to vanish: dipole-coupled pair l={la}, l={lb}")]
    NonzeroMeans { la: u32, lb: u32 },

    #[error("{name} must be finite and nonnegative, got {value}")]
    NegativeInput { name: &'static str, value: f64 },

    #[error("{name} must be finite and positive, got {value}")]
    NonPositiveInput { name: &'static str, value: f64 },

    #[error("two-level family needs l0 > 1, got l0={l0}")]
    FamilyLevelTooSmall { l0: u32 },

    #[error("two-level family needs 0 < L² < l0(l0+1) = {limit}, got L² = {l2}")]
    FamilyMeanOutOfRange { l2: f64, limit: f64 },

    #[error("grid needs 0 ≤ L_min < L_max and steps ≥ 2")]
    InvalidGrid,

    #[error("levels must satisfy l1 ≥ l2 ≥ l3, got ({l1}, {l2}, {l3})")]
    UnorderedLevels { l1: u32, l2: u32, l3: u32 },

    #[error("F = {f} lies below (L²)² = {lower}; no state realizes these moments")]
    MomentsInconsistent { f: f64, lower: f64 },

    #[error("triple is infeasible; ω is undefined")]
    InfeasibleTriple,

    #[error("no feasible triple up to l_max; raise the search cap")]
    NoFeasibleTriple,

    #[error("search cap l_max={l_max} is below the required {required}")]
    SearchRangeTooSmall { l_max: u32, required: u32 },

    #[error("multipliers are underdetermined for degenerate levels")]
    UnderdeterminedMultipliers,

    #[error("continuous levels must satisfy l1 > l2 > l3 ≥ 0 with gaps above {min_gap:.1e}")]
    DegenerateContinuousLevels { min_gap: f64 },

    #[error("probabilities leave [0, 1] at the evaluation point")]
    InfeasiblePoint,

    #[error("quadrature needs at least 64 nodes, got {nodes}")]
    TooFewNodes { nodes: usize },

    #[error("quadrature support radius {support:.1} exceeds the configured r_cut {r_cut:.1}")]
    SupportExceedsCut { support: f64, r_cut: f64 },

    #[error("quadrature did not converge: doubling nodes moved a moment by {delta:.3e}")]
    QuadratureNotConverged { delta: f64 },

    #[error("requested {requested} distinct terms but the basis holds {available}")]
    BasisExhausted { requested: usize, available: usize },

    #[error("truncation too small: {detail}")]
    TruncationTooSmall { detail: String },

    #[error("no optimizer restart converged")]
    NoRestartConverged,

    #[error("state JSON malformed: {0}")]
    StateJson(String),
}
