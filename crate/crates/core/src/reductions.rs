//! Gauss hypergeometric series and the `a = -1` reduction of the Heun
//! solutions.
//!
//! At `a = -1` with `q = 0` and `δ = ε` the Heun equation is invariant under
//! `x ↦ -x` and both local solutions become `₂F₁` functions of `x²`:
//!
//! ```text
//! first:  ₂F₁(α/2, β/2; (1+γ)/2; x²)
//! second: x^{1-γ} ₂F₁((α+1-γ)/2, (β+1-γ)/2; (3-γ)/2; x²)
//! ```
//!
//! With `α = -2α₀` (resp. `α = -2α₀ - 1 + γ`) the series are polynomials.

use serde::Serialize;

use crate::error::{HeunError, Result};
use crate::params::{Branch, BranchKind, HeunParams};
use crate::recurrence::series_power;
use crate::trf::{trf_eval_infinite, TrfTruncation};

const MAX_TERMS: usize = 100_000;

/// `₂F₁(a, b; c; z)` by direct summation.
///
/// Terminates exactly when a numerator parameter reaches zero; otherwise stops
/// after three consecutive terms below `tol · |sum|`.
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64, tol: f64) -> Result<f64> {
    if z.abs() >= 1.0 && !terminates(a, b) {
        return Err(HeunError::NonconvergentArgument(z.abs()));
    }
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut quiet = 0;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        let num = (a + kf) * (b + kf);
        if num == 0.0 || z == 0.0 {
            return Ok(sum);
        }
        if c + kf == 0.0 {
            return Err(HeunError::PolarParameter(c));
        }
        term *= num / ((c + kf) * (kf + 1.0)) * z;
        sum += term;
        if term.abs() <= tol * sum.abs() {
            quiet += 1;
            if quiet == 3 {
                return Ok(sum);
            }
        } else {
            quiet = 0;
        }
    }
    Err(HeunError::NoConvergence {
        what: "hypergeometric series",
        limit: MAX_TERMS,
    })
}

/// Does `gauss_2f1` terminate for these numerator parameters?
fn terminates(a: f64, b: f64) -> bool {
    [a, b].iter().any(|&v| v <= 0.0 && v.fract() == 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReductionCheck {
    pub heun_value: f64,
    pub f21_value: f64,
    pub abs_diff: f64,
    /// Whether `q = 0` and `δ = ε`, the condition under which the two sides
    /// are the same function.
    pub symmetric: bool,
}

impl ReductionCheck {
    fn new(heun_value: f64, f21_value: f64, params: &HeunParams) -> Self {
        ReductionCheck {
            heun_value,
            f21_value,
            abs_diff: (heun_value - f21_value).abs(),
            symmetric: is_symmetric(params),
        }
    }
}

/// `q = 0` and `δ = ε` (to rounding).
pub fn is_symmetric(params: &HeunParams) -> bool {
    let scale = 1.0 + params.delta.abs().max(params.epsilon().abs());
    params.q == 0.0 && (params.delta - params.epsilon()).abs() <= 1e-12 * scale
}

fn require_a_minus_one(params: &HeunParams) -> Result<()> {
    if params.a != -1.0 {
        return Err(HeunError::Domain(format!(
            "the hypergeometric reduction needs a = -1 (got a = {})",
            params.a
        )));
    }
    Ok(())
}

fn f21_tol(a: f64, b: f64) -> f64 {
    if terminates(a, b) {
        0.0
    } else {
        1e-16
    }
}

/// First-branch Heun value at `a = -1` against `₂F₁(α/2, β/2; (1+γ)/2; x²)`.
pub fn reduction_check_first(params: &HeunParams, x: f64) -> Result<ReductionCheck> {
    require_a_minus_one(params)?;
    let branch = Branch::new(BranchKind::First, params)?;
    let heun = trf_eval_infinite(params, &branch, x, &TrfTruncation::default())?;
    let (a1, b1) = (params.alpha / 2.0, params.beta / 2.0);
    let f = gauss_2f1(a1, b1, (1.0 + params.gamma) / 2.0, x * x, f21_tol(a1, b1))?;
    Ok(ReductionCheck::new(heun.value, f, params))
}

/// Second-branch Heun value at `a = -1` (normalized `c0 = 1`) against
/// `x^{1-γ} ₂F₁((α+1-γ)/2, (β+1-γ)/2; (3-γ)/2; x²)`.
pub fn reduction_check_second(params: &HeunParams, x: f64) -> Result<ReductionCheck> {
    require_a_minus_one(params)?;
    let branch = Branch::unit(BranchKind::Second, params)?;
    let g = params.gamma;
    let prefactor = series_power(x, 1.0 - g)?;
    let heun = trf_eval_infinite(params, &branch, x, &TrfTruncation::default())?;
    let (a1, b1) = ((params.alpha + 1.0 - g) / 2.0, (params.beta + 1.0 - g) / 2.0);
    let f = gauss_2f1(a1, b1, (3.0 - g) / 2.0, x * x, f21_tol(a1, b1))?;
    Ok(ReductionCheck::new(heun.value, prefactor * f, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::validate_params;

    #[test]
    fn f21_examples() {
        assert_eq!(gauss_2f1(0.3, -1.7, 2.2, 0.0, 1e-15).unwrap(), 1.0);
        let v = gauss_2f1(1.0, 1.0, 2.0, 0.5, 1e-16).unwrap();
        assert!((v - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!((v - 1.386_294_361_119_890_6).abs() < 1e-15);
        assert_eq!(gauss_2f1(-2.0, 3.0, 1.0, 1.0, 1e-15).unwrap(), 1.0);
    }

    #[test]
    fn f21_errors() {
        assert!(matches!(gauss_2f1(0.5, 0.5, 1.0, 1.2, 1e-15), Err(HeunError::NonconvergentArgument(_))));
        assert!(matches!(gauss_2f1(0.5, 0.5, -2.0, 0.3, 1e-15), Err(HeunError::PolarParameter(_))));
        // terminates before reaching the pole
        assert!(gauss_2f1(-1.0, 0.5, -2.0, 0.3, 1e-15).is_ok());
        // terminating series is fine outside the unit disk
        assert_eq!(gauss_2f1(-1.0, 2.0, 4.0, 3.0, 1e-15).unwrap(), 1.0 - 1.5);
    }

    #[test]
    fn terminating_sum_is_insensitive_to_tol() {
        let a = gauss_2f1(-4.0, 1.3, 0.7, 0.6, 1e-3).unwrap();
        let b = gauss_2f1(-4.0, 1.3, 0.7, 0.6, 1e-16).unwrap();
        assert_eq!(a, b);
    }

    fn first_set() -> HeunParams {
        // α = -4 (α₀ = 2), β = 2, γ = 1, q = 0 and δ = ε = -1
        validate_params(-1.0, 0.0, -4.0, 2.0, 1.0, -1.0).unwrap()
    }

    #[test]
    fn first_branch_collapse() {
        let p = first_set();
        assert!(is_symmetric(&p));
        let c = reduction_check_first(&p, 0.3).unwrap();
        assert!(c.abs_diff <= 1e-12, "{c:?}");
        // ₂F₁(-2, 1; 1; x²) = (1-x²)²
        assert!((c.f21_value - 0.91f64.powi(2)).abs() < 1e-15);
        let c = reduction_check_first(&p, 0.0).unwrap();
        assert_eq!((c.heun_value, c.f21_value, c.abs_diff), (1.0, 1.0, 0.0));
        let c = reduction_check_first(&p, 0.9).unwrap();
        assert!(c.abs_diff <= 1e-10);
    }

    #[test]
    fn collapse_needs_symmetry() {
        // δ = 1 gives ε = -3 ≠ δ: the η-series survive at a = -1
        let p = validate_params(-1.0, 0.0, -4.0, 2.0, 1.0, 1.0).unwrap();
        let c = reduction_check_first(&p, 0.3).unwrap();
        assert!(!c.symmetric);
        assert!(c.abs_diff > 1e-3);
    }

    #[test]
    fn second_branch_collapse() {
        // α₀ = 0: α = -1 + γ, so the ₂F₁ is 1
        let p = validate_params(-1.0, 0.0, -0.5, 1.0, 0.5, 0.5).unwrap();
        assert!(is_symmetric(&p));
        let c = reduction_check_second(&p, 0.4).unwrap();
        assert!(c.abs_diff <= 1e-13);
        assert!((c.f21_value - 0.4f64.sqrt()).abs() < 1e-15);

        // α₀ = 1, β = 2, γ = 0.5, δ = ε = 0
        let p = validate_params(-1.0, 0.0, -2.5, 2.0, 0.5, 0.0).unwrap();
        assert!(is_symmetric(&p));
        let c = reduction_check_second(&p, 0.3).unwrap();
        assert!(c.abs_diff <= 1e-11);

        assert!(reduction_check_second(&p, -0.3).is_err());
    }

    #[test]
    fn requires_a_minus_one() {
        let p = validate_params(2.0, 0.0, -4.0, 2.0, 1.0, 1.0).unwrap();
        assert!(reduction_check_first(&p, 0.3).is_err());
    }
}
