//! Property tests for the algebraic invariants: constraint identities of
//! the closed-form probabilities, permutation symmetry, Ω monotonicity and
//! route agreement, bound-chain positivity on random states, and bit-exact
//! state serialization.

use num_complex::Complex64;
use proptest::prelude::*;

use uncbound::basis::{angular_stats, moments_superposition};
use uncbound::bounds::{omega_bound, omega_bound_expanded, BoundInputs};
use uncbound::constraints::closed_form_probs;
use uncbound::oracle::random_scan_state;
use uncbound::{QuantumNumbers, SuperpositionState};

/// Distinct continuous levels with comfortable gaps, plus simplex weights.
fn feasible_triple() -> impl Strategy<Value = ([f64; 3], [f64; 3])> {
    (
        0.0..3.0f64,
        0.1..4.0f64,
        0.1..4.0f64,
        0.02..1.0f64,
        0.02..1.0f64,
        0.02..1.0f64,
    )
        .prop_map(|(l3, gap2, gap1, w1, w2, w3)| {
            let levels = [l3 + gap2 + gap1, l3 + gap2, l3];
            let total = w1 + w2 + w3;
            (levels, [w1 / total, w2 / total, w3 / total])
        })
}

proptest! {
    /// The closed forms satisfy all three constraint equations identically.
    #[test]
    fn closed_form_probs_satisfy_the_constraints((levels, probs) in feasible_triple()) {
        let v = levels.map(|l| l * (l + 1.0));
        let l2_mean: f64 = probs.iter().zip(v).map(|(p, vi)| p * vi).sum();
        let f_mean: f64 = probs.iter().zip(v).map(|(p, vi)| p * vi * vi).sum();
        let solved = closed_form_probs(v, l2_mean, f_mean);
        let scale = 1.0 + f_mean.abs();
        let norm: f64 = solved.iter().sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
        let got_l2: f64 = solved.iter().zip(v).map(|(p, vi)| p * vi).sum();
        prop_assert!((got_l2 - l2_mean).abs() < 1e-12 * scale);
        let got_f: f64 = solved.iter().zip(v).map(|(p, vi)| p * vi * vi).sum();
        prop_assert!((got_f - f_mean).abs() < 1e-12 * scale);
        for (a, b) in solved.iter().zip(probs) {
            prop_assert!((a - b).abs() < 1e-9, "recovered {a} vs sampled {b}");
        }
    }

    /// Permuting the eigenvalues permutes the probabilities identically.
    #[test]
    fn closed_form_probs_permute((levels, probs) in feasible_triple()) {
        let v = levels.map(|l| l * (l + 1.0));
        let l2_mean: f64 = probs.iter().zip(v).map(|(p, vi)| p * vi).sum();
        let f_mean: f64 = probs.iter().zip(v).map(|(p, vi)| p * vi * vi).sum();
        let base = closed_form_probs(v, l2_mean, f_mean);
        for perm in [[1usize, 0, 2], [2, 1, 0], [1, 2, 0], [0, 2, 1], [2, 0, 1]] {
            let pv = [v[perm[0]], v[perm[1]], v[perm[2]]];
            let permuted = closed_form_probs(pv, l2_mean, f_mean);
            for i in 0..3 {
                prop_assert!((permuted[i] - base[perm[i]]).abs() < 1e-12);
            }
        }
    }

    /// Ω stays above 3/2, decreases with R, and both algebraic routes agree.
    #[test]
    fn omega_invariants(l2 in 1e-3..1e4f64, r in 0.0..1e6f64, dr in 0.0..1e6f64) {
        let v = omega_bound(BoundInputs::new(l2, r).unwrap()).value;
        prop_assert!(v >= 1.5);
        let expanded = omega_bound_expanded(BoundInputs::new(l2, r).unwrap()).value;
        prop_assert!((v - expanded).abs() <= 1e-12 * v);
        let further = omega_bound(BoundInputs::new(l2, r + dr).unwrap()).value;
        prop_assert!(further <= v + 1e-12);
    }

    /// Every sampled parity-pure state obeys the bound chain.
    #[test]
    fn random_states_respect_omega(seed in 0u64..10_000) {
        let state = random_scan_state(4, 8, 5, seed).unwrap();
        let product = moments_superposition(&state).unwrap().product;
        let stats = angular_stats(&state);
        let omega = omega_bound(BoundInputs::from(&stats)).value;
        prop_assert!(product >= omega - 1e-10, "product {product} < Ω {omega}");
        prop_assert!(product >= 1.5 - 1e-12);
    }

    /// JSON round-trips preserve amplitudes bit-exactly.
    #[test]
    fn state_json_round_trip(
        picks in proptest::collection::vec((0u32..5, 0u32..9, any::<f64>(), any::<f64>()), 1..6)
    ) {
        let mut terms = Vec::new();
        for (i, (n, l, re, im)) in picks.iter().enumerate() {
            // m distinguishes the terms, keeping labels distinct by construction
            let m = -(*l as i32) + i as i32;
            if m.unsigned_abs() > *l || !re.is_finite() || !im.is_finite() {
                continue;
            }
            terms.push((QuantumNumbers::new(*n, *l, m).unwrap(), Complex64::new(*re, *im)));
        }
        let norm: f64 = terms.iter().map(|(_, a)| a.norm_sqr()).sum();
        prop_assume!(norm.is_finite() && norm > 1e-12);
        let state = SuperpositionState::normalized(terms).unwrap();
        let back = SuperpositionState::from_json(&state.to_json()).unwrap();
        for ((qa, aa), (qb, ab)) in state.terms().iter().zip(back.terms()) {
            prop_assert_eq!(qa, qb);
            prop_assert_eq!(aa.re.to_bits(), ab.re.to_bits());
            prop_assert_eq!(aa.im.to_bits(), ab.im.to_bits());
        }
    }
}
