//! Analytic algebra over isotropic harmonic-oscillator eigenstates.
//!
//! Everything is expressed in oscillator units (ħ = 1, ω = 1), where the
//! eigenstate labeled (n, l, m) has energy 2n + l + 3/2 and the diagonal
//! matrix elements of r² and p² both equal that energy. The product
//! σ_r·σ_p is dilation invariant, so fixing the basis scale loses no
//! generality for bound verification.

use std::collections::HashSet;

use num_complex::Complex64;
use serde::de::Error as DeError;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Tolerance on |Σ|Cᵢ|² − 1| accepted by [`SuperpositionState::new`].
pub const NORM_TOL: f64 = 1e-12;

/// Oscillator labels: n radial, l angular momentum, m magnetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuantumNumbers {
    n: u32,
    l: u32,
    m: i32,
}

impl QuantumNumbers {
    pub fn new(n: u32, l: u32, m: i32) -> Result<Self> {
        if m.unsigned_abs() > l {
            return Err(Error::MagneticNumberOutOfRange { l, m });
        }
        Ok(Self { n, l, m })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn m(&self) -> i32 {
        self.m
    }

    /// Oscillator energy 2n + l + 3/2.
    pub fn energy(&self) -> f64 {
        2.0 * f64::from(self.n) + f64::from(self.l) + 1.5
    }

    /// L̂² eigenvalue l(l+1).
    pub fn l2_eigenvalue(&self) -> f64 {
        let l = f64::from(self.l);
        l * (l + 1.0)
    }
}

/// ⟨n l|r²|n l⟩ = 2n + l + 3/2. The p² diagonal is identical.
pub(crate) fn r2_diagonal(n: u32, l: u32) -> f64 {
    2.0 * f64::from(n) + f64::from(l) + 1.5
}

/// ⟨n+1 l|r²|n l⟩ = −√((n+1)(n + l + 3/2)).
///
/// Sign convention: radial functions carry the standard Laguerre
/// normalization with R(0⁺) > 0, which makes this element negative. The p²
/// element is the same magnitude with the opposite sign. Both are pinned by
/// the quadrature oracle (see the oracle module tests).
pub(crate) fn r2_offdiagonal(n: u32, l: u32) -> f64 {
    let nf = f64::from(n);
    -(((nf + 1.0) * (nf + f64::from(l) + 1.5)).sqrt())
}

/// Finite normalized superposition of oscillator eigenstates.
///
/// Construction validates normalization and distinctness, and records
/// whether ⟨r⟩ = ⟨p⟩ = 0 holds exactly. That is guaranteed when no pair of
/// terms is dipole-coupled (|Δl| = 1); parity-pure states are the common
/// special case, and mixed-parity states with all |Δl| ≥ 2 (such as the
/// two-level example family) qualify as well.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpositionState {
    terms: Vec<(QuantumNumbers, Complex64)>,
    parity_pure: bool,
    zero_means: bool,
}

impl SuperpositionState {
    /// Builds a state from already-normalized amplitudes.
    pub fn new(terms: Vec<(QuantumNumbers, Complex64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyState);
        }
        let mut seen = HashSet::new();
        for (q, _) in &terms {
            if !seen.insert(*q) {
                return Err(Error::DuplicateTerm {
                    n: q.n,
                    l: q.l,
                    m: q.m,
                });
            }
        }
        let norm2: f64 = terms.iter().map(|(_, a)| a.norm_sqr()).sum();
        let defect = (norm2 - 1.0).abs();
        if defect > NORM_TOL {
            return Err(Error::NotNormalized { defect });
        }
        let parity = terms[0].0.l % 2;
        let parity_pure = terms.iter().all(|(q, _)| q.l % 2 == parity);
        let zero_means = dipole_coupled_pair(&terms).is_none();
        Ok(Self {
            terms,
            parity_pure,
            zero_means,
        })
    }

    /// Rescales the amplitudes to unit norm, then builds the state.
    pub fn normalized(mut terms: Vec<(QuantumNumbers, Complex64)>) -> Result<Self> {
        let norm2: f64 = terms.iter().map(|(_, a)| a.norm_sqr()).sum();
        if norm2 <= 0.0 {
            return Err(Error::NotNormalized { defect: 1.0 });
        }
        let scale = norm2.sqrt().recip();
        for (_, a) in &mut terms {
            *a *= scale;
        }
        Self::new(terms)
    }

    pub fn terms(&self) -> &[(QuantumNumbers, Complex64)] {
        &self.terms
    }

    /// True when every l shares one parity.
    pub fn parity_pure(&self) -> bool {
        self.parity_pure
    }

    /// True when ⟨r⟩ = ⟨p⟩ = 0 exactly (no dipole-coupled pair of terms).
    pub fn zero_means(&self) -> bool {
        self.zero_means
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::StateJson(e.to_string()))
    }
}

fn dipole_coupled_pair(terms: &[(QuantumNumbers, Complex64)]) -> Option<(u32, u32)> {
    for (i, (qi, _)) in terms.iter().enumerate() {
        for (qj, _) in &terms[i + 1..] {
            if qi.l.abs_diff(qj.l) == 1 {
                return Some((qi.l, qj.l));
            }
        }
    }
    None
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    n: u32,
    l: u32,
    m: i32,
    re: f64,
    im: f64,
}

impl Serialize for SuperpositionState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.terms.len()))?;
        for (q, a) in &self.terms {
            seq.serialize_element(&TermRecord {
                n: q.n,
                l: q.l,
                m: q.m,
                re: a.re,
                im: a.im,
            })?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for SuperpositionState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let records = Vec::<TermRecord>::deserialize(deserializer)?;
        let mut terms = Vec::with_capacity(records.len());
        for r in records {
            let q = QuantumNumbers::new(r.n, r.l, r.m).map_err(D::Error::custom)?;
            terms.push((q, Complex64::new(r.re, r.im)));
        }
        SuperpositionState::new(terms).map_err(D::Error::custom)
    }
}

/// Angular momentum statistics of a state: ⟨L̂²⟩, ⟨L̂⁴⟩, the variance R and
/// F = R + ⟨L̂²⟩² = ⟨L̂⁴⟩ (ħ = 1 units throughout).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AngularStats {
    pub l2_mean: f64,
    pub l4_mean: f64,
    pub r: f64,
    pub f: f64,
}

/// Position/momentum second moments and the uncertainty product.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MomentReport {
    pub r2: f64,
    pub p2: f64,
    pub sigma_r: f64,
    pub sigma_p: f64,
    pub product: f64,
}

impl MomentReport {
    pub(crate) fn from_second_moments(r2: f64, p2: f64) -> Self {
        Self {
            r2,
            p2,
            sigma_r: r2.sqrt(),
            sigma_p: p2.sqrt(),
            // one rounding instead of three; exact on eigenstates
            product: (r2 * p2).sqrt(),
        }
    }
}

/// Moments of a single eigenstate: r² = p² = 2n + l + 3/2.
pub fn moments_single(q: QuantumNumbers) -> MomentReport {
    let e = q.energy();
    MomentReport::from_second_moments(e, e)
}

/// Moments of a superposition from closed-form matrix elements.
///
/// r² couples only terms with equal (l, m) and |Δn| ≤ 1. The state must
/// certify ⟨r⟩ = ⟨p⟩ = 0, otherwise σ_r ≠ √⟨r²⟩ and the report would lie.
pub fn moments_superposition(s: &SuperpositionState) -> Result<MomentReport> {
    if !s.zero_means() {
        let (la, lb) = dipole_coupled_pair(&s.terms).expect("flag implies a coupled pair");
        return Err(Error::NonzeroMeans { la, lb });
    }
    let terms = s.terms();
    let mut r2 = 0.0;
    let mut p2 = 0.0;
    for (i, (qi, ai)) in terms.iter().enumerate() {
        let w = ai.norm_sqr();
        let diag = r2_diagonal(qi.n, qi.l);
        r2 += w * diag;
        p2 += w * diag;
        for (qj, aj) in &terms[i + 1..] {
            if qi.l == qj.l && qi.m == qj.m && qi.n.abs_diff(qj.n) == 1 {
                let n_low = qi.n.min(qj.n);
                let elem = r2_offdiagonal(n_low, qi.l);
                let cross = 2.0 * (ai.conj() * aj).re;
                r2 += cross * elem;
                p2 -= cross * elem;
            }
        }
    }
    Ok(MomentReport::from_second_moments(r2, p2))
}

/// ⟨L̂²⟩, ⟨L̂⁴⟩ and the variance R. L̂² is diagonal on the basis, so this
/// needs no parity certificate. R is accumulated as Σ|Cᵢ|²(vᵢ − ⟨L̂²⟩)²,
/// which cannot go negative.
pub fn angular_stats(s: &SuperpositionState) -> AngularStats {
    let l2_mean: f64 = s
        .terms()
        .iter()
        .map(|(q, a)| a.norm_sqr() * q.l2_eigenvalue())
        .sum();
    let mut l4_mean = 0.0;
    let mut r = 0.0;
    for (q, a) in s.terms() {
        let w = a.norm_sqr();
        let v = q.l2_eigenvalue();
        l4_mean += w * v * v;
        r += w * (v - l2_mean) * (v - l2_mean);
    }
    AngularStats {
        l2_mean,
        l4_mean,
        r,
        f: r + l2_mean * l2_mean,
    }
}

/// Two-level state mixing the ground state with (n=0, l=l0, m=0) so that
/// ⟨L̂²⟩ equals the requested value. Its product is 3/2 + L²/(l0+1) and it
/// saturates the Ω bound. Requires l0 > 1 so the levels are not
/// dipole-coupled and the means vanish exactly.
pub fn example_state(l0: u32, l2_mean: f64) -> Result<SuperpositionState> {
    if l0 <= 1 {
        return Err(Error::FamilyLevelTooSmall { l0 });
    }
    let cap = f64::from(l0) * f64::from(l0 + 1);
    if !(l2_mean > 0.0 && l2_mean < cap) {
        return Err(Error::FamilyMeanOutOfRange {
            l2: l2_mean,
            limit: cap,
        });
    }
    let p_high = l2_mean / cap;
    let terms = vec![
        (QuantumNumbers::new(0, 0, 0)?, Complex64::from((1.0 - p_high).sqrt())),
        (QuantumNumbers::new(0, l0, 0)?, Complex64::from(p_high.sqrt())),
    ];
    SuperpositionState::new(terms)
}
