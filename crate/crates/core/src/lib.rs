//! Local Frobenius solutions of the general Heun equation
//!
//! ```text
//! y'' + (γ/x + δ/(x-1) + ε/(x-a)) y' + (αβx - q)/(x(x-1)(x-a)) y = 0,   ε = α+β-γ-δ+1
//! ```
//!
//! evaluated two ways: by the three-term recurrence for the power-series
//! coefficients, and by its closed-form resummation into nested sums grouped
//! by powers of `η = (1+a)x/a` with inner series in `z = -x²/a`. The two are
//! cross-checked against each other, against `₂F₁` at `a = -1`, against the ODE
//! residual and against numerical integration.
//!
//! ```
//! use heun_core::{validate_params, Branch, BranchKind, trf_eval_infinite, TrfTruncation};
//!
//! // y = 2/(2-x) solves this member of the family
//! let p = validate_params(2.0, 1.0, 1.0, 2.0, 1.0, 1.0).unwrap();
//! let b = Branch::new(BranchKind::First, &p).unwrap();
//! let v = trf_eval_infinite(&p, &b, 0.1, &TrfTruncation::default()).unwrap();
//! assert!((v.value - 2.0 / 1.9).abs() < 1e-14);
//! ```

pub mod error;
pub mod params;
pub mod recurrence;
pub mod reductions;
pub mod transform;
pub mod trf;
pub mod verify;

#[cfg(feature = "cli")]
pub mod cli;

pub use error::{ErrorClass, HeunError, Result};
pub use params::{indicial_roots, pochhammer, validate_params, Branch, BranchKind, HeunParams, SeriesValue, TrfVariables};
pub use recurrence::{
    coeff_a, coeff_a_alt, coeff_b, coeff_b_alt, frobenius_coeffs, frobenius_eval, CoefficientTable, SeriesControl,
};
pub use reductions::{gauss_2f1, reduction_check_first, reduction_check_second, ReductionCheck};
pub use transform::{
    apply_transformation, builtin_record, eq61_record, identity_record, load_transformation_table,
    parse_param_expr, parse_transformation_table, transformed_eval, ParamExpr, TransformationRecord,
};
pub use trf::{
    detect_b_termination, generic_trf_sum, trf_eval_infinite, trf_eval_poly_ab, trf_eval_poly_b,
    trf_extract_coeffs, trf_subseries_coeffs, TerminationReport, TrfTruncation,
};
pub use verify::{compare_methods, ode_residual, residual_scale, rk_oracle, ComparisonReport, Method};
