//! Independent numerical ground truth: radial quadrature that validates the
//! analytic matrix elements, and randomized scans that try to violate the
//! Ω bound.
//!
//! Integrals run over t = r² with the weight t^(−1/2)·e^(−t), whose
//! Gauss nodes make every radial integrand in play a polynomial times the
//! weight, so the rules are exact to rounding. The Gaussian factors of the
//! wavefunctions are folded into the weight and never exponentiated,
//! keeping large-node evaluations overflow-free for n ≤ 20, l ≤ 30.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{
    angular_stats, moments_superposition, MomentReport, QuantumNumbers, SuperpositionState,
};
use crate::bounds::{omega_bound, BoundInputs};
use crate::error::{Error, Result};

/// Margin below which `product − Ω` counts as a bound violation.
pub const VIOLATION_TOL: f64 = 1e-8;

/// Quadrature sizing. `nodes` is the base rule; convergence is checked
/// against a doubled rule, and `r_cut` caps the radial support the doubled
/// rule may reach.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub nodes: usize,
    pub r_cut: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes: 128,
            r_cut: 60.0,
        }
    }
}

impl QuadratureConfig {
    pub fn new(nodes: usize, r_cut: f64) -> Result<Self> {
        if nodes < 64 {
            return Err(Error::TooFewNodes { nodes });
        }
        Ok(Self { nodes, r_cut })
    }
}

/// Gauss rule for ∫₀^∞ t^(−1/2) e^(−t) g(t) dt ≈ Σ wᵢ g(tᵢ).
struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Orthonormal-recurrence evaluation for the α = −1/2 Laguerre family:
/// returns (p_n(t), p_n'(t), Σ_{k<n} p_k(t)²). Recurrence coefficients are
/// a_k = 2k + α + 1 and b_k = √(k(k + α)).
fn orthonormal_laguerre_half(n: usize, t: f64) -> (f64, f64, f64) {
    const ALPHA: f64 = -0.5;
    let mu0 = std::f64::consts::PI.sqrt(); // Γ(1/2)
    let mut p_prev = 0.0;
    let mut dp_prev = 0.0;
    let mut p = 1.0 / mu0.sqrt();
    let mut dp = 0.0;
    let mut sum_sq = 0.0;
    for k in 0..n {
        sum_sq += p * p;
        let a_k = 2.0 * k as f64 + ALPHA + 1.0;
        let b_k = (k as f64 * (k as f64 + ALPHA)).sqrt();
        let b_next = ((k as f64 + 1.0) * (k as f64 + 1.0 + ALPHA)).sqrt();
        let p_next = ((t - a_k) * p - b_k * p_prev) / b_next;
        let dp_next = (p + (t - a_k) * dp - b_k * dp_prev) / b_next;
        p_prev = p;
        dp_prev = dp;
        p = p_next;
        dp = dp_next;
    }
    (p, dp, sum_sq)
}

impl GaussRule {
    /// Golub–Welsch eigenvalues seed the nodes, a Newton polish on the
    /// orthonormal recurrence refines them, and the weights come from
    /// wᵢ = 1/Σ_k p_k(tᵢ)². Weights of far-tail nodes underflow to zero,
    /// which is harmless: their true size is below 1e-300.
    fn half_integer_laguerre(n: usize) -> Self {
        const ALPHA: f64 = -0.5;
        let mut jacobi = DMatrix::zeros(n, n);
        for k in 0..n {
            jacobi[(k, k)] = 2.0 * k as f64 + ALPHA + 1.0;
        }
        for k in 1..n {
            let b = (k as f64 * (k as f64 + ALPHA)).sqrt();
            jacobi[(k, k - 1)] = b;
            jacobi[(k - 1, k)] = b;
        }
        let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
        nodes.sort_by(f64::total_cmp);
        let mut weights = Vec::with_capacity(n);
        for t in &mut nodes {
            for _ in 0..3 {
                let (p, dp, _) = orthonormal_laguerre_half(n, *t);
                let step = p / dp;
                if step.is_finite() {
                    *t -= step;
                }
            }
            let (_, _, sum_sq) = orthonormal_laguerre_half(n, *t);
            weights.push(if sum_sq.is_finite() { sum_sq.recip() } else { 0.0 });
        }
        let rule = Self { nodes, weights };
        // low moments pin the construction; Γ(k + 1/2) = (k − 1/2)·Γ(k − 1/2)
        let mu0 = std::f64::consts::PI.sqrt();
        let mut expected = mu0;
        for k in 0..6 {
            let m = rule.integrate(|t| t.powi(k));
            assert!(
                (m - expected).abs() < 1e-12 * expected,
                "rule moment {k} off: {m} vs {expected}"
            );
            expected *= k as f64 + 0.5;
        }
        rule
    }

    fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * g(t))
            .sum()
    }

    fn max_radius(&self) -> f64 {
        self.nodes.last().copied().unwrap_or(0.0).sqrt()
    }
}

/// Generalized Laguerre L_k^(α)(x) by the upward three-term recurrence.
fn laguerre(k: u32, alpha: f64, x: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + alpha - x;
    for j in 1..k {
        let jf = f64::from(j);
        let next = ((2.0 * jf + 1.0 + alpha - x) * cur - (jf + alpha) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// d/dx L_k^(α)(x) = −L_{k−1}^(α+1)(x).
fn laguerre_derivative(k: u32, alpha: f64, x: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        -laguerre(k - 1, alpha + 1.0, x)
    }
}

/// N_{nl} with N² = 2·n!/Γ(n + l + 3/2), accumulated as a running ratio so
/// nothing overflows for n ≤ 20, l ≤ 30.
fn radial_norm_constant(n: u32, l: u32) -> f64 {
    // Γ(l + 3/2) = (√π/2)·Π_{j=1..l} (j + 1/2)
    let mut gamma = std::f64::consts::PI.sqrt() / 2.0;
    for j in 1..=l {
        gamma *= f64::from(j) + 0.5;
    }
    let mut ratio = 2.0 / gamma;
    for k in 1..=n {
        ratio *= f64::from(k) / (f64::from(k) + f64::from(l) + 0.5);
    }
    ratio.sqrt()
}

/// Polynomial part of R_{nl}: the full function is this times e^(−r²/2).
fn radial_bare(n: u32, l: u32, r: f64) -> f64 {
    radial_norm_constant(n, l) * r.powi(l as i32) * laguerre(n, f64::from(l) + 0.5, r * r)
}

/// d/dr of [`radial_bare`].
fn radial_bare_derivative(n: u32, l: u32, r: f64) -> f64 {
    let alpha = f64::from(l) + 0.5;
    let t = r * r;
    let norm = radial_norm_constant(n, l);
    let lag = laguerre(n, alpha, t);
    let dlag = laguerre_derivative(n, alpha, t);
    if l == 0 {
        norm * 2.0 * r * dlag
    } else {
        norm * r.powi(l as i32 - 1) * (f64::from(l) * lag + 2.0 * t * dlag)
    }
}

/// Normalized radial eigenfunction R_{nl}(r) with ∫ R² r² dr = 1.
pub fn radial_wavefunction(q: QuantumNumbers, r: f64) -> f64 {
    radial_bare(q.n(), q.l(), r) * (-r * r / 2.0).exp()
}

/// Reusable quadrature engine. Build once, evaluate many states.
pub struct Quadrature {
    cfg: QuadratureConfig,
    rule: GaussRule,
    check_rule: GaussRule,
}

impl Quadrature {
    pub fn new(cfg: QuadratureConfig) -> Result<Self> {
        if cfg.nodes < 64 {
            return Err(Error::TooFewNodes { nodes: cfg.nodes });
        }
        let rule = GaussRule::half_integer_laguerre(cfg.nodes);
        let check_rule = GaussRule::half_integer_laguerre(cfg.nodes * 2);
        let support = check_rule.max_radius();
        if support > cfg.r_cut {
            return Err(Error::SupportExceedsCut {
                support,
                r_cut: cfg.r_cut,
            });
        }
        Ok(Self {
            cfg,
            rule,
            check_rule,
        })
    }

    pub fn config(&self) -> QuadratureConfig {
        self.cfg
    }

    /// ∫ R_a R_b r² dr for equal (l, m); zero otherwise by the analytic
    /// angular integral.
    pub fn overlap(&self, a: QuantumNumbers, b: QuantumNumbers) -> f64 {
        if a.l() != b.l() || a.m() != b.m() {
            return 0.0;
        }
        pair_overlap(&self.rule, a, b)
    }

    /// ⟨a|r²|b⟩ by quadrature (equal (l, m) only).
    pub fn r2_element(&self, a: QuantumNumbers, b: QuantumNumbers) -> f64 {
        if a.l() != b.l() || a.m() != b.m() {
            return 0.0;
        }
        pair_r2(&self.rule, a, b)
    }

    /// ⟨a|p²|b⟩ via the symmetric radial form ∫ R'_a R'_b r² dr plus the
    /// centrifugal term l(l+1)·∫ R_a R_b dr, both with analytic derivatives.
    pub fn p2_element(&self, a: QuantumNumbers, b: QuantumNumbers) -> f64 {
        if a.l() != b.l() || a.m() != b.m() {
            return 0.0;
        }
        pair_p2(&self.rule, a, b)
    }

    /// Quadrature moments of a superposition, cross-checked against a
    /// doubled rule; disagreement beyond [`VIOLATION_TOL`] is an error.
    pub fn moments(&self, s: &SuperpositionState) -> Result<MomentReport> {
        if !s.zero_means() {
            // same guard as the analytic path; find the witness pair again
            let terms = s.terms();
            for (i, (qi, _)) in terms.iter().enumerate() {
                for (qj, _) in &terms[i + 1..] {
                    if qi.l().abs_diff(qj.l()) == 1 {
                        return Err(Error::NonzeroMeans {
                            la: qi.l(),
                            lb: qj.l(),
                        });
                    }
                }
            }
        }
        let (r2, p2) = state_second_moments(&self.rule, s);
        let (r2_fine, p2_fine) = state_second_moments(&self.check_rule, s);
        let delta = (r2 - r2_fine).abs().max((p2 - p2_fine).abs());
        if delta > 1e-8 {
            return Err(Error::QuadratureNotConverged { delta });
        }
        Ok(MomentReport::from_second_moments(r2, p2))
    }
}

fn pair_overlap(rule: &GaussRule, a: QuantumNumbers, b: QuantumNumbers) -> f64 {
    0.5 * rule.integrate(|t| {
        let r = t.sqrt();
        radial_bare(a.n(), a.l(), r) * radial_bare(b.n(), b.l(), r) * t
    })
}

fn pair_r2(rule: &GaussRule, a: QuantumNumbers, b: QuantumNumbers) -> f64 {
    0.5 * rule.integrate(|t| {
        let r = t.sqrt();
        radial_bare(a.n(), a.l(), r) * radial_bare(b.n(), b.l(), r) * t * t
    })
}

fn pair_p2(rule: &GaussRule, a: QuantumNumbers, b: QuantumNumbers) -> f64 {
    let l = a.l();
    let centrifugal = f64::from(l) * (f64::from(l) + 1.0);
    0.5 * rule.integrate(|t| {
        let r = t.sqrt();
        // full derivative of R = bare·e^(−t/2) is (bare' − r·bare)·e^(−t/2)
        let da = radial_bare_derivative(a.n(), l, r) - r * radial_bare(a.n(), l, r);
        let db = radial_bare_derivative(b.n(), l, r) - r * radial_bare(b.n(), l, r);
        let gradient = da * db * t;
        let barrier = if l == 0 {
            0.0
        } else {
            centrifugal * radial_bare(a.n(), l, r) * radial_bare(b.n(), l, r)
        };
        gradient + barrier
    })
}

fn state_second_moments(rule: &GaussRule, s: &SuperpositionState) -> (f64, f64) {
    let terms = s.terms();
    let mut r2 = 0.0;
    let mut p2 = 0.0;
    for (i, (qi, ai)) in terms.iter().enumerate() {
        let w = ai.norm_sqr();
        r2 += w * pair_r2(rule, *qi, *qi);
        p2 += w * pair_p2(rule, *qi, *qi);
        for (qj, aj) in &terms[i + 1..] {
            if qi.l() != qj.l() || qi.m() != qj.m() {
                continue;
            }
            // all Δn couplings enter here; the |Δn| ≤ 1 selection rule is a
            // prediction of the analytic module, not an assumption of this one
            let cross = 2.0 * (ai.conj() * aj).re;
            if cross != 0.0 {
                r2 += cross * pair_r2(rule, *qi, *qj);
                p2 += cross * pair_p2(rule, *qi, *qj);
            }
        }
    }
    (r2, p2)
}

/// Convenience one-shot wrapper around [`Quadrature::moments`].
pub fn quadrature_moments(s: &SuperpositionState, cfg: QuadratureConfig) -> Result<MomentReport> {
    Quadrature::new(cfg)?.moments(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

/// Uniformly samples `terms` distinct labels of one parity with isotropic
/// complex amplitudes, normalized. Deterministic per seed.
pub fn random_state(
    n_max: u32,
    l_max: u32,
    parity: Parity,
    terms: usize,
    seed: u64,
) -> Result<SuperpositionState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_state_from_rng(n_max, l_max, parity, terms, &mut rng)
}

fn random_state_from_rng(
    n_max: u32,
    l_max: u32,
    parity: Parity,
    terms: usize,
    rng: &mut ChaCha8Rng,
) -> Result<SuperpositionState> {
    let rem = match parity {
        Parity::Even => 0,
        Parity::Odd => 1,
    };
    let mut labels = Vec::new();
    for l in (rem..=l_max).step_by(2) {
        for n in 0..=n_max {
            for m in -(l as i32)..=(l as i32) {
                labels.push(QuantumNumbers::new(n, l, m).expect("|m| ≤ l by construction"));
            }
        }
    }
    if terms == 0 || terms > labels.len() {
        return Err(Error::BasisExhausted {
            requested: terms,
            available: labels.len(),
        });
    }
    // partial Fisher–Yates: the first `terms` slots become the sample
    for i in 0..terms {
        let j = rng.random_range(i..labels.len());
        labels.swap(i, j);
    }
    let picked: Vec<(QuantumNumbers, Complex64)> = labels[..terms]
        .iter()
        .map(|&q| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            (q, Complex64::new(re, im))
        })
        .collect();
    SuperpositionState::normalized(picked)
}

/// The per-sample state used by [`scan`]: parity and term count are drawn
/// from the sample's own seeded stream, so sample i of a scan is
/// reproducible in isolation.
pub fn random_scan_state(
    n_max: u32,
    l_max: u32,
    max_terms: usize,
    sample_seed: u64,
) -> Result<SuperpositionState> {
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
    let parity = if rng.random_range(0..2u8) == 0 {
        Parity::Even
    } else {
        Parity::Odd
    };
    let terms = rng.random_range(1..=max_terms.max(1));
    random_state_from_rng(n_max, l_max, parity, terms, &mut rng)
}

/// Outcome of a randomized falsification scan.
///
/// `worst_margin` is the minimum of product − Ω over all samples; the empty
/// scan reports the +∞ sentinel (serialized as `null`).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScanReport {
    pub samples: u64,
    pub violations: u64,
    #[serde(with = "crate::serde_util::inf_as_null")]
    pub worst_margin: f64,
    pub seed: u64,
}

fn sample_margin(n_max: u32, l_max: u32, max_terms: usize, sample_seed: u64) -> Result<f64> {
    let state = random_scan_state(n_max, l_max, max_terms, sample_seed)?;
    let product = moments_superposition(&state)?.product;
    let stats = angular_stats(&state);
    let omega = omega_bound(BoundInputs::from(&stats)).value;
    Ok(product - omega)
}

fn reduce_margins(acc: (u64, f64), margin: f64) -> (u64, f64) {
    let violations = acc.0 + u64::from(margin < -VIOLATION_TOL);
    (violations, acc.1.min(margin))
}

fn merge_reports(a: (u64, f64), b: (u64, f64)) -> (u64, f64) {
    (a.0 + b.0, a.1.min(b.1))
}

/// Samples random parity-pure states and compares each analytic product
/// against Ω of the state's own angular statistics. Sample i uses the
/// derived seed `seed + i`.
pub fn scan(samples: u64, n_max: u32, l_max: u32, terms: usize, seed: u64) -> Result<ScanReport> {
    #[cfg(feature = "parallel")]
    {
        let (violations, worst_margin) = (0..samples)
            .into_par_iter()
            .map(|i| sample_margin(n_max, l_max, terms, seed.wrapping_add(i)))
            .try_fold(
                || (0u64, f64::INFINITY),
                |acc, m| m.map(|m| reduce_margins(acc, m)),
            )
            .try_reduce(|| (0u64, f64::INFINITY), |a, b| Ok(merge_reports(a, b)))?;
        Ok(ScanReport {
            samples,
            violations,
            worst_margin,
            seed,
        })
    }
    #[cfg(not(feature = "parallel"))]
    {
        scan_sequential(samples, n_max, l_max, terms, seed)
    }
}

/// Sequential variant of [`scan`]; identical output for identical inputs.
pub fn scan_sequential(
    samples: u64,
    n_max: u32,
    l_max: u32,
    terms: usize,
    seed: u64,
) -> Result<ScanReport> {
    let mut acc = (0u64, f64::INFINITY);
    for i in 0..samples {
        let margin = sample_margin(n_max, l_max, terms, seed.wrapping_add(i))?;
        acc = reduce_margins(acc, margin);
    }
    Ok(ScanReport {
        samples,
        violations: acc.0,
        worst_margin: acc.1,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn q(n: u32, l: u32, m: i32) -> QuantumNumbers {
        QuantumNumbers::new(n, l, m).unwrap()
    }

    fn engine() -> Quadrature {
        Quadrature::new(QuadratureConfig::default()).unwrap()
    }

    #[test]
    fn radial_functions_are_normalized() {
        let quad = engine();
        for (n, l) in [(0, 0), (0, 2), (1, 0), (3, 5), (4, 8), (20, 30)] {
            let norm = quad.overlap(q(n, l, 0), q(n, l, 0));
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn n0_radial_matches_the_closed_coefficient() {
        // closed n = 0 form: (2^(1+l)/π^(1/4))·√(l!/(2l+1)!)·r^l·e^(−r²/2)
        let l = 2u32;
        let coef = 2f64.powi(1 + l as i32) / std::f64::consts::PI.powf(0.25)
            * (fact(l) / fact(2 * l + 1)).sqrt();
        for r in [0.1_f64, 0.7, 1.3, 2.9] {
            let expected = coef * r.powi(l as i32) * (-r * r / 2.0).exp();
            assert_relative_eq!(
                radial_wavefunction(q(0, l, 0), r),
                expected,
                max_relative = 1e-13
            );
        }
        // positive near the origin for every (n, l): the sign convention
        assert!(radial_wavefunction(q(3, 1, 0), 1e-3) > 0.0);
    }

    fn fact(k: u32) -> f64 {
        (1..=k).map(f64::from).product::<f64>().max(1.0)
    }

    #[test]
    fn radial_orthogonality() {
        let quad = engine();
        for l in [0, 2, 5] {
            assert_abs_diff_eq!(quad.overlap(q(0, l, 0), q(1, l, 0)), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(quad.overlap(q(1, l, 0), q(3, l, 0)), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn quadrature_matrix_elements_pin_the_analytic_ones() {
        let quad = engine();
        for (n, l) in [(0u32, 0u32), (0, 3), (2, 1), (4, 6)] {
            let diag = quad.r2_element(q(n, l, 0), q(n, l, 0));
            assert_abs_diff_eq!(diag, 2.0 * f64::from(n) + f64::from(l) + 1.5, epsilon = 1e-11);
            let p_diag = quad.p2_element(q(n, l, 0), q(n, l, 0));
            assert_abs_diff_eq!(p_diag, diag, epsilon = 1e-10);

            // the sign-fixing run: r² off-diagonal is negative, p² positive
            let off = quad.r2_element(q(n, l, 0), q(n + 1, l, 0));
            let expected = -((f64::from(n) + 1.0) * (f64::from(n) + f64::from(l) + 1.5)).sqrt();
            assert_abs_diff_eq!(off, expected, epsilon = 1e-10);
            let p_off = quad.p2_element(q(n, l, 0), q(n + 1, l, 0));
            assert_abs_diff_eq!(p_off, -expected, epsilon = 1e-10);

            // beyond the tridiagonal band everything vanishes
            let far = quad.r2_element(q(n, l, 0), q(n + 2, l, 0));
            assert_abs_diff_eq!(far, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn quadrature_elements_are_symmetric() {
        let quad = engine();
        for (a, b) in [(q(0, 2, 0), q(1, 2, 0)), (q(2, 4, 1), q(3, 4, 1))] {
            assert_abs_diff_eq!(quad.r2_element(a, b), quad.r2_element(b, a), epsilon = 1e-10);
            assert_abs_diff_eq!(quad.p2_element(a, b), quad.p2_element(b, a), epsilon = 1e-10);
        }
    }

    #[test]
    fn single_eigenstate_moments_match_the_spectrum() {
        let quad = engine();
        for l in [0u32, 1, 4, 8] {
            let s = SuperpositionState::new(vec![(q(0, l, 0), Complex64::from(1.0))]).unwrap();
            let rep = quad.moments(&s).unwrap();
            assert_abs_diff_eq!(rep.r2, f64::from(l) + 1.5, epsilon = 1e-10);
            assert_abs_diff_eq!(rep.p2, f64::from(l) + 1.5, epsilon = 1e-10);
        }
    }

    #[test]
    fn example_family_product_by_quadrature() {
        let s = crate::basis::example_state(3, 2.0).unwrap();
        let rep = engine().moments(&s).unwrap();
        assert_abs_diff_eq!(rep.product, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn mixed_radial_state_fixes_the_off_diagonal_sign() {
        let amp = Complex64::from(0.5_f64.sqrt());
        let s = SuperpositionState::new(vec![(q(0, 0, 0), amp), (q(1, 0, 0), amp)]).unwrap();
        let quad_rep = engine().moments(&s).unwrap();
        let analytic = moments_superposition(&s).unwrap();
        assert_abs_diff_eq!(quad_rep.r2, analytic.r2, epsilon = 1e-10);
        assert_abs_diff_eq!(quad_rep.p2, analytic.p2, epsilon = 1e-10);
        assert_abs_diff_eq!(quad_rep.r2, 2.5 - 1.5f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn random_states_are_reproducible_and_parity_pure() {
        let a = random_state(4, 8, Parity::Even, 5, 1).unwrap();
        let b = random_state(4, 8, Parity::Even, 5, 1).unwrap();
        assert_eq!(a, b);
        assert!(a.terms().iter().all(|(q, _)| q.l() % 2 == 0));
        assert_eq!(a.terms().len(), 5);

        let c = random_state(4, 8, Parity::Odd, 5, 1).unwrap();
        assert!(c.terms().iter().all(|(q, _)| q.l() % 2 == 1));

        let d = random_state(4, 8, Parity::Even, 5, 2).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn random_state_rejects_oversized_requests() {
        // even basis for n_max=0, l_max=0 holds a single label
        assert!(matches!(
            random_state(0, 0, Parity::Even, 2, 7),
            Err(Error::BasisExhausted { .. })
        ));
        assert!(random_state(0, 0, Parity::Odd, 1, 7).is_err());
    }

    #[test]
    fn quick_scan_sees_no_violations() {
        let report = scan(500, 4, 8, 4, 42).unwrap();
        assert_eq!(report.samples, 500);
        assert_eq!(report.violations, 0);
        assert!(report.worst_margin >= -VIOLATION_TOL);
    }

    #[test]
    fn empty_scan_reports_the_sentinel() {
        let report = scan(0, 4, 8, 3, 9).unwrap();
        assert_eq!(report.violations, 0);
        assert!(report.worst_margin.is_infinite());
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"worst_margin\":null"));
        let back: ScanReport = serde_json::from_str(&json).unwrap();
        assert!(back.worst_margin.is_infinite());
    }

    #[test]
    fn single_term_scan_touches_saturation() {
        // eigenstates with n = 0 saturate the eigenstate bound exactly
        let report = scan(300, 4, 8, 1, 11).unwrap();
        assert_eq!(report.violations, 0);
        assert!(report.worst_margin.abs() < 1e-10);
    }

    #[test]
    fn parallel_and_sequential_scans_agree() {
        let a = scan(200, 3, 6, 3, 5).unwrap();
        let b = scan_sequential(200, 3, 6, 3, 5).unwrap();
        assert_eq!(a.violations, b.violations);
        assert_eq!(a.worst_margin.to_bits(), b.worst_margin.to_bits());
    }

    #[test]
    fn config_validation() {
        assert!(matches!(
            QuadratureConfig::new(32, 60.0),
            Err(Error::TooFewNodes { .. })
        ));
        assert!(matches!(
            Quadrature::new(QuadratureConfig { nodes: 128, r_cut: 10.0 }),
            Err(Error::SupportExceedsCut { .. })
        ));
    }
}
