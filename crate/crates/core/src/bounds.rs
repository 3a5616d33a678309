//! Closed-form lower bounds on σ_r·σ_p (reported as multiples of ħ).
//!
//! The main bound Ω(L², R) interpolates between the Heisenberg constant 3/2
//! (at L² = 0 or R → ∞) and the eigenstate bound l + 3/2 (at L² = l(l+1),
//! R = 0). A printed ceiling/floor refinement W ships as well, but only
//! behind an explicit "as printed" label: it disagrees with exhaustive
//! integer search (see [`crate::constraints::audit_w`]) and is never used
//! for enforcement.

use serde::{Deserialize, Serialize};

use crate::basis::AngularStats;
use crate::error::{Error, Result};

/// The three-dimensional Heisenberg constant 3/2.
pub const HEISENBERG: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    Heisenberg,
    Eigenstate,
    Omega,
    W,
}

/// A lower bound on σ_r·σ_p together with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    pub kind: BoundKind,
}

/// Validated angular inputs: L² = ⟨L̂²⟩ ≥ 0 and the variance R ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    l2: f64,
    r: f64,
}

impl BoundInputs {
    pub fn new(l2: f64, r: f64) -> Result<Self> {
        if !(l2 >= 0.0 && l2.is_finite()) {
            return Err(Error::NegativeInput {
                name: "L2",
                value: l2,
            });
        }
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::NegativeInput { name: "R", value: r });
        }
        Ok(Self { l2, r })
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// F = R + (L²)² = ⟨L̂⁴⟩.
    pub fn f(&self) -> f64 {
        self.r + self.l2 * self.l2
    }
}

impl From<&AngularStats> for BoundInputs {
    fn from(stats: &AngularStats) -> Self {
        // AngularStats guarantees both entries nonnegative.
        Self {
            l2: stats.l2_mean,
            r: stats.r,
        }
    }
}

pub fn heisenberg_bound() -> BoundValue {
    BoundValue {
        value: HEISENBERG,
        kind: BoundKind::Heisenberg,
    }
}

/// Eigenstate bound l + 3/2, valid when the state is an L̂² eigenstate.
pub fn eigenstate_bound(l: u32) -> BoundValue {
    BoundValue {
        value: f64::from(l) + 1.5,
        kind: BoundKind::Eigenstate,
    }
}

/// The sharpened bound Ω(L², R) = 3/2 + 2L³/(√(4F + L²) + L), F = R + L⁴.
///
/// This is the rationalized form of [`omega_bound_expanded`]; it avoids the
/// cancellation in √(1 + 4F/L²) − 1 at large F and is the default. L² = 0
/// returns the limit value 3/2 directly.
pub fn omega_bound(inputs: BoundInputs) -> BoundValue {
    let value = if inputs.l2 == 0.0 {
        HEISENBERG
    } else {
        let l = inputs.l2.sqrt();
        let s = (4.0 * inputs.f() + inputs.l2).sqrt();
        HEISENBERG + 2.0 * inputs.l2 * l / (s + l)
    };
    BoundValue {
        value,
        kind: BoundKind::Omega,
    }
}

/// Ω in the expanded form 3/2 + (L⁴/2F)(√(1 + 4F/L²) − 1).
///
/// Algebraically identical to [`omega_bound`] but loses digits when
/// 4F/L² is large; kept as the second route for cross-checking.
pub fn omega_bound_expanded(inputs: BoundInputs) -> BoundValue {
    let value = if inputs.l2 == 0.0 {
        HEISENBERG
    } else {
        let f = inputs.f();
        let l4 = inputs.l2 * inputs.l2;
        HEISENBERG + l4 / (2.0 * f) * ((1.0 + 4.0 * f / inputs.l2).sqrt() - 1.0)
    };
    BoundValue {
        value,
        kind: BoundKind::Omega,
    }
}

/// Continuous minimizers of ω: l1 = l2 = √(4F + L²)/(2L) − 1/2 and l3 = 0.
pub fn optimal_l_continuous(inputs: BoundInputs) -> Result<(f64, f64)> {
    if inputs.l2 <= 0.0 {
        return Err(Error::NonPositiveInput {
            name: "L2",
            value: inputs.l2,
        });
    }
    let l = inputs.l2.sqrt();
    let s = (4.0 * inputs.f() + inputs.l2).sqrt();
    Ok((s / (2.0 * l) - 0.5, 0.0))
}

/// Snaps values a hair away from an integer (relative 1e-9) onto it, so that
/// ceiling/floor of an analytically-integer quantity do not straddle it.
pub(crate) fn snap_to_integer(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x
    }
}

/// The ceiling/floor refinement W, transcribed exactly as printed.
///
/// Evaluated at x = √(4R + 4L⁴ + L²)/(2L) − 1/2:
///
///   W(x) = (L²((1+⌈x⌉)² + (1+⌊x⌋)² + ⌈x⌉⌊x⌋ − 1) − F) / ((1+⌈x⌉)(1+⌊x⌋))
///
/// This value exceeds the exhaustive-search minimum at every point tested
/// (for example it gives 3.0 at L² = 2, R = 0 where the true minimum is
/// 2.5), so it is quarantined: use it only through the audit in the
/// constraints module, never as an enforcement bound.
pub fn w_bound_as_printed(inputs: BoundInputs) -> Result<BoundValue> {
    let (x, _) = optimal_l_continuous(inputs)?;
    let x = snap_to_integer(x);
    let cp1 = 1.0 + x.ceil();
    let fp1 = 1.0 + x.floor();
    let num = inputs.l2 * (cp1 * cp1 + fp1 * fp1 + x.ceil() * x.floor() - 1.0) - inputs.f();
    Ok(BoundValue {
        value: num / (cp1 * fp1),
        kind: BoundKind::W,
    })
}

/// Continuous-l version of the eigenstate bound: solving l(l+1) = L² gives
/// the reference line 3/2 + (√(4L² + 1) − 1)/2, which coincides with
/// Ω(L², 0).
pub fn eigenstate_reference(l: f64) -> f64 {
    HEISENBERG + ((4.0 * l * l + 1.0).sqrt() - 1.0) / 2.0
}

/// One sampled point of the bound curve at fixed R.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CurveRow {
    pub l: f64,
    pub omega: f64,
    pub pj_reference: f64,
}

/// Uniformly samples Ω(L², R) for L ∈ [l_min, l_max] together with the
/// eigenstate reference line.
pub fn curve(r: f64, l_min: f64, l_max: f64, steps: usize) -> Result<Vec<CurveRow>> {
    if r < 0.0 || !r.is_finite() {
        return Err(Error::NegativeInput { name: "R", value: r });
    }
    if !(l_min >= 0.0 && l_min < l_max && l_max.is_finite()) || steps < 2 {
        return Err(Error::InvalidGrid);
    }
    let mut rows = Vec::with_capacity(steps);
    for k in 0..steps {
        let l = l_min + (l_max - l_min) * k as f64 / (steps - 1) as f64;
        let inputs = BoundInputs::new(l * l, r)?;
        rows.push(CurveRow {
            l,
            omega: omega_bound(inputs).value,
            pj_reference: eigenstate_reference(l),
        });
    }
    Ok(rows)
}

/// Renders the curve as CSV: header `L,omega,pj_reference`, decimal
/// notation with 15 significant digits, '\n' line endings. The output is
/// byte-stable for fixed arguments.
pub fn curve_csv(r: f64, l_min: f64, l_max: f64, steps: usize) -> Result<String> {
    let rows = curve(r, l_min, l_max, steps)?;
    let mut out = String::from("L,omega,pj_reference\n");
    for row in rows {
        out.push_str(&format_significant(row.l, 15));
        out.push(',');
        out.push_str(&format_significant(row.omega, 15));
        out.push(',');
        out.push_str(&format_significant(row.pj_reference, 15));
        out.push('\n');
    }
    Ok(out)
}

/// Fixed-point decimal with `sig` significant digits.
fn format_significant(x: f64, sig: i32) -> String {
    if x == 0.0 {
        return format!("{:.*}", (sig - 1) as usize, 0.0);
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (sig - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn inputs(l2: f64, r: f64) -> BoundInputs {
        BoundInputs::new(l2, r).unwrap()
    }

    #[test]
    fn heisenberg_is_three_halves() {
        assert_eq!(heisenberg_bound().value, 1.5);
        assert_eq!(heisenberg_bound().value, eigenstate_bound(0).value);
        assert_eq!(heisenberg_bound().value, omega_bound(inputs(0.0, 7.3)).value);
    }

    #[test]
    fn eigenstate_bound_values() {
        assert_eq!(eigenstate_bound(1).value, 2.5);
        assert_eq!(eigenstate_bound(5).value, 6.5);
        assert_eq!(eigenstate_bound(3).kind, BoundKind::Eigenstate);
    }

    #[test]
    fn omega_limits_and_spot_values() {
        assert_eq!(omega_bound(inputs(0.0, 5.0)).value, 1.5);
        // eigenstate l = 1
        assert_relative_eq!(omega_bound(inputs(2.0, 0.0)).value, 2.5, max_relative = 1e-15);
        // frozen: 3/2 + 6/(√21 + 1)
        assert_relative_eq!(
            omega_bound(inputs(3.0, 6.0)).value,
            1.5 + 6.0 / (21.0_f64.sqrt() + 1.0),
            max_relative = 1e-15
        );
        // coincides with the two-level family product for l0 = 3
        assert_relative_eq!(omega_bound(inputs(2.0, 20.0)).value, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn omega_decays_to_heisenberg_at_large_variance() {
        assert!(omega_bound(inputs(2.0, 1e12)).value - 1.5 < 1e-4);
    }

    #[test]
    fn omega_grid_properties() {
        // 50×50 grid: Ω ≥ 3/2, non-increasing in R, both algebraic routes agree.
        let mut prev_col = vec![f64::INFINITY; 50];
        for j in 0..50 {
            let r = 1e4 * j as f64 / 49.0;
            for i in 0..50 {
                let l2 = 0.1 + (100.0 - 0.1) * i as f64 / 49.0;
                let v = omega_bound(inputs(l2, r)).value;
                assert!(v >= 1.5);
                assert!(v <= prev_col[i] + 1e-12, "Ω must not increase with R");
                let expanded = omega_bound_expanded(inputs(l2, r)).value;
                assert_relative_eq!(v, expanded, max_relative = 1e-12);
                prev_col[i] = v;
            }
        }
    }

    #[test]
    fn eigenstate_inputs_recover_integer_bound() {
        for l in 1..=10u32 {
            let lf = f64::from(l);
            let v = omega_bound(inputs(lf * (lf + 1.0), 0.0)).value;
            assert_relative_eq!(v, lf + 1.5, max_relative = 1e-12);
            let (l12, l3) = optimal_l_continuous(inputs(lf * (lf + 1.0), 0.0)).unwrap();
            assert_relative_eq!(l12, lf, max_relative = 1e-12);
            assert_eq!(l3, 0.0);
        }
    }

    #[test]
    fn continuous_optimum_spot_values() {
        let (l12, l3) = optimal_l_continuous(inputs(2.0, 20.0)).unwrap();
        assert_relative_eq!(l12, 3.0, max_relative = 1e-14);
        assert_eq!(l3, 0.0);
        let (l12, _) = optimal_l_continuous(inputs(3.0, 6.0)).unwrap();
        assert_relative_eq!(l12, 1.7912878474779204, max_relative = 1e-14);
        assert!(optimal_l_continuous(inputs(0.0, 1.0)).is_err());
    }

    #[test]
    fn w_as_printed_spot_values() {
        // Both exceed the search ground truth (2.5 and 2.625); the audit in
        // the constraints module records the discrepancy.
        let w = w_bound_as_printed(inputs(2.0, 0.0)).unwrap();
        assert_relative_eq!(w.value, 3.0, max_relative = 1e-12);
        assert_eq!(w.kind, BoundKind::W);
        let w = w_bound_as_printed(inputs(3.0, 6.0)).unwrap();
        assert_relative_eq!(w.value, 4.5, max_relative = 1e-12);
        assert!(w_bound_as_printed(inputs(0.0, 1.0)).is_err());
    }

    #[test]
    fn reference_line_equals_omega_at_zero_variance() {
        for k in 1..40 {
            let l = 0.25 * k as f64;
            assert_relative_eq!(
                eigenstate_reference(l),
                omega_bound(inputs(l * l, 0.0)).value,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn curve_starts_at_heisenberg_and_stays_above() {
        let rows = curve(1e3, 0.0, 10.0, 11).unwrap();
        assert_eq!(rows.len(), 11);
        assert_eq!(rows[0].l, 0.0);
        assert_eq!(rows[0].omega, 1.5);
        for row in &rows {
            assert!(row.omega >= 1.5);
        }
        let rows = curve(1e5, 0.0, 25.0, 40).unwrap();
        for row in &rows {
            assert!(row.omega >= 1.5);
        }
    }

    #[test]
    fn curve_rejects_bad_grids() {
        assert!(matches!(curve(1.0, 5.0, 5.0, 10), Err(Error::InvalidGrid)));
        assert!(matches!(curve(1.0, -1.0, 5.0, 10), Err(Error::InvalidGrid)));
        assert!(matches!(curve(1.0, 0.0, 5.0, 1), Err(Error::InvalidGrid)));
        assert!(matches!(curve(-1.0, 0.0, 5.0, 10), Err(Error::NegativeInput { .. })));
    }

    #[test]
    fn csv_formatting_is_fixed_width_significant() {
        assert_eq!(format_significant(1.5, 15), "1.50000000000000");
        assert_eq!(format_significant(10.0, 15), "10.0000000000000");
        assert_eq!(format_significant(0.0, 15), "0.00000000000000");
        assert_eq!(format_significant(0.0625, 15), "0.0625000000000000");
        let csv = curve_csv(1e3, 0.0, 10.0, 3).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "L,omega,pj_reference");
        assert!(lines.next().unwrap().starts_with("0.00000000000000,1.50000000000000,"));
    }

    #[test]
    fn bound_inputs_reject_negatives() {
        assert!(BoundInputs::new(-0.5, 0.0).is_err());
        assert!(BoundInputs::new(1.0, -2.0).is_err());
        assert!(BoundInputs::new(f64::NAN, 0.0).is_err());
    }
}
