//! Three-level variational machinery: probability constraints, feasibility
//! domains, the ω objective, Lagrange-multiplier recovery, and exhaustive
//! minimization over integer quantum numbers.
//!
//! A candidate solution is a triple of angular momenta l1 ≥ l2 ≥ l3 whose
//! occupation probabilities must reproduce ⟨L̂²⟩ = L² and ⟨L̂⁴⟩ = F. With
//! distinct levels the probabilities have closed forms; degenerate triples
//! reduce to smaller linear systems that are only consistent at special
//! (L², F) points.

use nalgebra::{Matrix3, Vector3};
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundInputs};
use crate::error::{Error, Result};

/// Probabilities may stray this far outside [0, 1] before a triple is
/// declared infeasible; such strays are clamped.
pub const PROB_CLAMP_TOL: f64 = 1e-12;

/// Consistency tolerance for the over-determined degenerate cases.
pub const DEGENERATE_TOL: f64 = 1e-9;

/// Step used by [`derivative_signs`] finite differences.
pub const FD_STEP: f64 = 1e-5;

/// Feasibility classification of a level triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    /// Distinct levels with l3, l2 below L² ≤ … ≤ l1 (one level above L²).
    Dom1,
    /// Distinct levels with two levels above L².
    Dom2,
    /// Repeated levels; consistent only at special (L², F) points.
    Degenerate,
    Infeasible,
}

/// Lagrange multipliers of the constrained eigenproblem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub eta: f64,
    pub lambda: f64,
    pub energy: f64,
}

/// A level triple with its probabilities, objective value and multipliers.
///
/// `omega` is NaN (serialized as `null`) when the triple is infeasible; the
/// probability slots then hold the raw closed-form values as diagnostics.
/// For degenerate triples the weight of each repeated group sits on its
/// first slot (any split within a group realizes the same moments).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripleSolution {
    pub l1: u32,
    pub l2: u32,
    pub l3: u32,
    pub probs: [f64; 3],
    #[serde(with = "crate::serde_util::nan_as_null")]
    pub omega: f64,
    pub domain: Domain,
    pub eta: Option<f64>,
    #[serde(rename = "Lambda")]
    pub lambda: Option<f64>,
    pub energy: Option<f64>,
}

impl TripleSolution {
    pub fn feasible(&self) -> bool {
        self.domain != Domain::Infeasible
    }

    pub fn levels(&self) -> [u32; 3] {
        [self.l1, self.l2, self.l3]
    }

    pub fn multipliers(&self) -> Option<Multipliers> {
        match (self.eta, self.lambda, self.energy) {
            (Some(eta), Some(lambda), Some(energy)) => Some(Multipliers {
                eta,
                lambda,
                energy,
            }),
            _ => None,
        }
    }
}

fn l2_eigenvalue(l: f64) -> f64 {
    l * (l + 1.0)
}

/// Closed-form probabilities for three distinct L̂² eigenvalues. Symmetric
/// under simultaneous permutation of the eigenvalues and the output slots,
/// and satisfies the three constraint equations identically. No range
/// checks: callers decide what out-of-[0,1] values mean.
pub fn closed_form_probs(v: [f64; 3], l2_mean: f64, f_mean: f64) -> [f64; 3] {
    let [a, b, c] = v;
    [
        (b * c - l2_mean * (b + c) + f_mean) / ((a - b) * (a - c)),
        (a * c - l2_mean * (a + c) + f_mean) / ((b - a) * (b - c)),
        (a * b - l2_mean * (a + b) + f_mean) / ((c - a) * (c - b)),
    ]
}

fn in_unit_interval(p: f64) -> bool {
    (-PROB_CLAMP_TOL..=1.0 + PROB_CLAMP_TOL).contains(&p)
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

fn validate_targets(l2_mean: f64, f_mean: f64) -> Result<()> {
    if !(l2_mean > 0.0 && l2_mean.is_finite()) {
        return Err(Error::NonPositiveInput {
            name: "L2",
            value: l2_mean,
        });
    }
    if !f_mean.is_finite() || f_mean < l2_mean * l2_mean {
        return Err(Error::MomentsInconsistent {
            f: f_mean,
            lower: l2_mean * l2_mean,
        });
    }
    Ok(())
}

fn omega_from_probs(levels: [u32; 3], probs: [f64; 3]) -> f64 {
    1.5 + probs
        .iter()
        .zip(levels)
        .map(|(p, l)| p * f64::from(l))
        .sum::<f64>()
}

fn infeasible(levels: [u32; 3], probs: [f64; 3]) -> TripleSolution {
    TripleSolution {
        l1: levels[0],
        l2: levels[1],
        l3: levels[2],
        probs,
        omega: f64::NAN,
        domain: Domain::Infeasible,
        eta: None,
        lambda: None,
        energy: None,
    }
}

fn feasible_solution(levels: [u32; 3], probs: [f64; 3], domain: Domain) -> TripleSolution {
    TripleSolution {
        l1: levels[0],
        l2: levels[1],
        l3: levels[2],
        probs,
        omega: omega_from_probs(levels, probs),
        domain,
        eta: None,
        lambda: None,
        energy: None,
    }
}

/// Two-level reduction: weight on eigenvalues v_hi ≠ v_lo fixed by the
/// normalization and L² constraints, feasible only if the F constraint is
/// then met on its own.
fn two_level_probs(v_hi: f64, v_lo: f64, l2_mean: f64, f_mean: f64) -> Option<(f64, f64)> {
    let p_hi = (l2_mean - v_lo) / (v_hi - v_lo);
    let p_lo = 1.0 - p_hi;
    if !in_unit_interval(p_hi) || !in_unit_interval(p_lo) {
        return None;
    }
    let p_hi = clamp_prob(p_hi);
    let p_lo = clamp_prob(p_lo);
    let f_residual = p_hi * v_hi * v_hi + p_lo * v_lo * v_lo - f_mean;
    if f_residual.abs() > DEGENERATE_TOL {
        return None;
    }
    Some((p_hi, p_lo))
}

fn triple_solution_unchecked(levels: [u32; 3], l2_mean: f64, f_mean: f64) -> TripleSolution {
    let [l1, l2, l3] = levels;
    let v = [
        l2_eigenvalue(f64::from(l1)),
        l2_eigenvalue(f64::from(l2)),
        l2_eigenvalue(f64::from(l3)),
    ];
    if l1 == l2 && l2 == l3 {
        let ok = (l2_mean - v[0]).abs() <= DEGENERATE_TOL
            && (f_mean - v[0] * v[0]).abs() <= DEGENERATE_TOL;
        return if ok {
            feasible_solution(levels, [1.0, 0.0, 0.0], Domain::Degenerate)
        } else {
            infeasible(levels, [f64::NAN; 3])
        };
    }
    if l1 == l2 {
        return match two_level_probs(v[0], v[2], l2_mean, f_mean) {
            Some((p_hi, p_lo)) => {
                feasible_solution(levels, [p_hi, 0.0, p_lo], Domain::Degenerate)
            }
            None => infeasible(levels, [f64::NAN; 3]),
        };
    }
    if l2 == l3 {
        return match two_level_probs(v[0], v[1], l2_mean, f_mean) {
            Some((p_hi, p_lo)) => {
                feasible_solution(levels, [p_hi, p_lo, 0.0], Domain::Degenerate)
            }
            None => infeasible(levels, [f64::NAN; 3]),
        };
    }
    let probs = closed_form_probs(v, l2_mean, f_mean);
    if probs.iter().all(|&p| in_unit_interval(p)) {
        let probs = probs.map(clamp_prob);
        let domain = if v[1] >= l2_mean { Domain::Dom1 } else { Domain::Dom2 };
        feasible_solution(levels, probs, domain)
    } else {
        infeasible(levels, probs)
    }
}

/// Solves the three probability constraints for an ordered level triple.
///
/// Distinct levels use the closed forms; degenerate triples solve the
/// reduced system and demand the leftover constraint within
/// [`DEGENERATE_TOL`]. Feasible distinct triples come back with their
/// multipliers attached.
pub fn solve_probabilities(
    l1: u32,
    l2: u32,
    l3: u32,
    l2_mean: f64,
    f_mean: f64,
) -> Result<TripleSolution> {
    if !(l1 >= l2 && l2 >= l3) {
        return Err(Error::UnorderedLevels { l1, l2, l3 });
    }
    validate_targets(l2_mean, f_mean)?;
    let mut sol = triple_solution_unchecked([l1, l2, l3], l2_mean, f_mean);
    attach_multipliers(&mut sol);
    Ok(sol)
}

fn attach_multipliers(sol: &mut TripleSolution) {
    if sol.feasible() && sol.l1 > sol.l2 && sol.l2 > sol.l3 {
        if let Ok(m) = recover_multipliers(sol, sol.omega) {
            sol.eta = Some(m.eta);
            sol.lambda = Some(m.lambda);
            sol.energy = Some(m.energy);
        }
    }
}

/// Classifies a triple without keeping the solution around.
pub fn feasibility_domain(l1: u32, l2: u32, l3: u32, l2_mean: f64, f_mean: f64) -> Result<Domain> {
    solve_probabilities(l1, l2, l3, l2_mean, f_mean).map(|s| s.domain)
}

/// ω = 3/2 + Σ probs·(2nᵢ + lᵢ) for a feasible solution and radial labels n.
pub fn omega_of_triple(sol: &TripleSolution, n: [u32; 3]) -> Result<f64> {
    if !sol.feasible() {
        return Err(Error::InfeasibleTriple);
    }
    Ok(1.5
        + sol
            .probs
            .iter()
            .zip(sol.levels())
            .zip(n)
            .map(|((p, l), ni)| p * (2.0 * f64::from(ni) + f64::from(l)))
            .sum::<f64>())
}

/// Lexicographic preference: lower ω first, then the smaller triple. Ties in
/// ω are compared exactly, which keeps parallel and sequential reductions
/// identical.
fn better(a: TripleSolution, b: TripleSolution) -> TripleSolution {
    if (a.omega, a.levels()) <= (b.omega, b.levels()) {
        a
    } else {
        b
    }
}

fn merge(a: Option<TripleSolution>, b: Option<TripleSolution>) -> Option<TripleSolution> {
    match (a, b) {
        (Some(x), Some(y)) => Some(better(x, y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn best_for_l1(l1: u32, l2_mean: f64, f_mean: f64) -> Option<TripleSolution> {
    let mut best: Option<TripleSolution> = None;
    for l2 in 0..=l1 {
        for l3 in 0..=l2 {
            let sol = triple_solution_unchecked([l1, l2, l3], l2_mean, f_mean);
            if sol.feasible() {
                best = merge(best, Some(sol));
            }
        }
    }
    best
}

fn required_l_max(l2_mean: f64, r: f64) -> Result<u32> {
    let inputs = BoundInputs::new(l2_mean, r)?;
    let (x, _) = bounds::optimal_l_continuous(inputs)?;
    Ok(bounds::snap_to_integer(x).ceil() as u32 + 1)
}

fn check_search_range(l2_mean: f64, r: f64, l_max: u32) -> Result<f64> {
    validate_targets(l2_mean, r + l2_mean * l2_mean)?;
    let required = required_l_max(l2_mean, r)?;
    if l_max < required {
        return Err(Error::SearchRangeTooSmall { l_max, required });
    }
    Ok(r + l2_mean * l2_mean)
}

fn finish_search(best: Option<TripleSolution>) -> Result<TripleSolution> {
    let mut sol = best.ok_or(Error::NoFeasibleTriple)?;
    attach_multipliers(&mut sol);
    Ok(sol)
}

/// Exhaustive minimum of ω over all triples l1 ≥ l2 ≥ l3 up to `l_max`,
/// degenerate triples included. `l_max` must cover the continuous optimum
/// (⌈x⌉ + 1) or the call is rejected rather than silently truncated.
pub fn omega_min_integer(l2_mean: f64, r: f64, l_max: u32) -> Result<TripleSolution> {
    #[cfg(feature = "parallel")]
    {
        let f_mean = check_search_range(l2_mean, r, l_max)?;
        let best = (0..=l_max)
            .into_par_iter()
            .map(|l1| best_for_l1(l1, l2_mean, f_mean))
            .reduce(|| None, merge);
        finish_search(best)
    }
    #[cfg(not(feature = "parallel"))]
    {
        omega_min_integer_sequential(l2_mean, r, l_max)
    }
}

/// Sequential variant of [`omega_min_integer`]; always available and
/// bit-identical to the parallel path.
pub fn omega_min_integer_sequential(l2_mean: f64, r: f64, l_max: u32) -> Result<TripleSolution> {
    let f_mean = check_search_range(l2_mean, r, l_max)?;
    let best = (0..=l_max)
        .map(|l1| best_for_l1(l1, l2_mean, f_mean))
        .fold(None, merge);
    finish_search(best)
}

/// Solves ω(3/2 + lᵢ) + η·lᵢ(lᵢ+1) + Λ·lᵢ²(lᵢ+1)² = 𝓔 for (η, Λ, 𝓔).
///
/// The system is nonsingular exactly when the three levels are distinct;
/// degenerate triples yield an explicit underdetermined signal.
pub fn recover_multipliers(sol: &TripleSolution, omega: f64) -> Result<Multipliers> {
    if !sol.feasible() {
        return Err(Error::InfeasibleTriple);
    }
    if sol.l1 == sol.l2 || sol.l2 == sol.l3 {
        return Err(Error::UnderdeterminedMultipliers);
    }
    let v = sol.levels().map(|l| l2_eigenvalue(f64::from(l)));
    let mat = Matrix3::new(
        v[0], v[0] * v[0], -1.0,
        v[1], v[1] * v[1], -1.0,
        v[2], v[2] * v[2], -1.0,
    );
    let rhs = Vector3::new(
        -omega * (1.5 + f64::from(sol.l1)),
        -omega * (1.5 + f64::from(sol.l2)),
        -omega * (1.5 + f64::from(sol.l3)),
    );
    let x = mat
        .lu()
        .solve(&rhs)
        .ok_or(Error::UnderdeterminedMultipliers)?;
    Ok(Multipliers {
        eta: x[0],
        lambda: x[1],
        energy: x[2],
    })
}

fn continuous_omega(levels: [f64; 3], l2_mean: f64, f_mean: f64) -> Result<f64> {
    let v = levels.map(l2_eigenvalue);
    let probs = closed_form_probs(v, l2_mean, f_mean);
    if !probs.iter().all(|&p| in_unit_interval(p)) {
        return Err(Error::InfeasiblePoint);
    }
    Ok(1.5
        + probs
            .iter()
            .zip(levels)
            .map(|(p, l)| p * l)
            .sum::<f64>())
}

/// Finite-difference ∂ω/∂lᵢ at a continuous, strictly ordered triple.
///
/// Central differences with step [`FD_STEP`], falling back to a one-sided
/// difference at the l3 = 0 boundary. The expected sign pattern is
/// (≥0, ≤0, ≥0) up to 1e-8 slack; callers assert it, this function only
/// reports the values.
pub fn derivative_signs(levels: [f64; 3], l2_mean: f64, f_mean: f64) -> Result<[f64; 3]> {
    let [l1, l2, l3] = levels;
    let min_gap = 2.5 * FD_STEP;
    if !(l3 >= 0.0 && l1 - l2 > min_gap && l2 - l3 > min_gap && levels.iter().all(|x| x.is_finite()))
    {
        return Err(Error::DegenerateContinuousLevels { min_gap });
    }
    validate_targets(l2_mean, f_mean)?;
    // Fails fast when the base point itself is infeasible.
    continuous_omega(levels, l2_mean, f_mean)?;
    let mut out = [0.0; 3];
    for i in 0..3 {
        let mut up = levels;
        up[i] += FD_STEP;
        let omega_up = continuous_omega(up, l2_mean, f_mean)?;
        out[i] = if levels[i] >= FD_STEP {
            let mut down = levels;
            down[i] -= FD_STEP;
            (omega_up - continuous_omega(down, l2_mean, f_mean)?) / (2.0 * FD_STEP)
        } else {
            (omega_up - continuous_omega(levels, l2_mean, f_mean)?) / FD_STEP
        };
    }
    Ok(out)
}

/// Comparison of the printed refinement W against exhaustive search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WAudit {
    /// Continuous optimum x = √(4F + L²)/(2L) − 1/2.
    pub x: f64,
    pub w_as_printed: f64,
    pub omega_min: f64,
    /// Whether W agrees with the search minimum within 1e-9.
    pub consistent: bool,
    /// The (⌈x⌉, ⌊x⌋) level pair the printed refinement is built from.
    pub rounding_pair: (u32, u32),
    /// Whether the triple (⌈x⌉, ⌊x⌋, 0) is feasible and already attains the
    /// search minimum.
    pub rounding_pair_matches: bool,
}

/// Evaluates W "as printed" next to the exhaustive-search ground truth.
///
/// The search result is authoritative; W is reported with a consistency
/// flag only and never enforced.
pub fn audit_w(l2_mean: f64, r: f64, l_max: Option<u32>) -> Result<WAudit> {
    let inputs = BoundInputs::new(l2_mean, r)?;
    let (x_raw, _) = bounds::optimal_l_continuous(inputs)?;
    let x = bounds::snap_to_integer(x_raw);
    let cap = l_max.unwrap_or_else(|| (2.0 * x).ceil() as u32 + 2);
    let search = omega_min_integer(l2_mean, r, cap)?;
    let w = bounds::w_bound_as_printed(inputs)?.value;
    let pair = (x.ceil() as u32, x.floor() as u32);
    let rounding_pair_matches = solve_probabilities(pair.0, pair.1, 0, l2_mean, inputs.f())
        .map(|sol| sol.feasible() && (sol.omega - search.omega).abs() <= 1e-10)
        .unwrap_or(false);
    Ok(WAudit {
        x: x_raw,
        w_as_printed: w,
        omega_min: search.omega,
        consistent: (w - search.omega).abs() <= 1e-9,
        rounding_pair: pair,
        rounding_pair_matches,
    })
}
