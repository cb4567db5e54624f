//! Independent checks: the ODE residual, an adaptive Runge–Kutta oracle and
//! multi-method comparison reports.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{HeunError, Result};
use crate::params::{Branch, BranchKind, HeunParams};
use crate::recurrence::{frobenius_eval, SeriesControl};
use crate::trf::{trf_eval_infinite, TrfTruncation};

/// The three summands of the left-hand side: `y''`, `P(x) y'`, `Q(x) y`.
fn residual_terms(p: &HeunParams, x: f64, y: f64, d1: f64, d2: f64) -> [f64; 3] {
    let pc = p.gamma / x + p.delta / (x - 1.0) + p.epsilon() / (x - p.a);
    let qc = (p.alpha * p.beta * x - p.q) / (x * (x - 1.0) * (x - p.a));
    [d2, pc * d1, qc * y]
}

fn check_regular(p: &HeunParams, x: f64) -> Result<()> {
    if x == 0.0 || x == 1.0 || x == p.a {
        return Err(HeunError::SingularPoint(x));
    }
    if !x.is_finite() {
        return Err(HeunError::Domain(format!("x = {x} is not finite")));
    }
    Ok(())
}

/// Left-hand side of the Heun equation at `x` for the given `y, y', y''`.
pub fn ode_residual(p: &HeunParams, x: f64, y: f64, d1: f64, d2: f64) -> Result<f64> {
    check_regular(p, x)?;
    let [t2, t1, t0] = residual_terms(p, x, y, d1, d2);
    Ok(t2 + t1 + t0)
}

/// `max(1, |y|, |y'|, |y''|, largest summand)`, the yardstick for residual
/// tolerances.
pub fn residual_scale(p: &HeunParams, x: f64, y: f64, d1: f64, d2: f64) -> f64 {
    residual_terms(p, x, y, d1, d2)
        .into_iter()
        .chain([1.0, y, d1, d2])
        .map(f64::abs)
        .fold(0.0, f64::max)
}

const MAX_STEPS: usize = 1_000_000;

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn rhs(p: &HeunParams, x: f64, u: [f64; 2]) -> [f64; 2] {
    let [_, t1, t0] = residual_terms(p, x, u[0], u[1], 0.0);
    [u[1], -(t1 + t0)]
}

/// Integrates `(y, y')` from `x0` to `x1` with an adaptive Dormand–Prince
/// 5(4) pair under mixed absolute/relative tolerance `tol`.
fn dopri5(p: &HeunParams, x0: f64, x1: f64, mut u: [f64; 2], tol: f64) -> Result<[f64; 2]> {
    let mut x = x0;
    let span = x1 - x0;
    let mut h = span.abs().min(1e-3) * span.signum();
    for _ in 0..MAX_STEPS {
        if (x1 - x) * span.signum() <= 0.0 {
            return Ok(u);
        }
        if (x + h - x1) * span.signum() > 0.0 {
            h = x1 - x;
        }
        let mut k = [[0.0; 2]; 7];
        for s in 0..7 {
            let mut v = u;
            for (j, kj) in k.iter().enumerate().take(s) {
                v[0] += h * A[s][j] * kj[0];
                v[1] += h * A[s][j] * kj[1];
            }
            k[s] = rhs(p, x + C[s] * h, v);
        }
        let mut next = u;
        let mut err = 0.0f64;
        for i in 0..2 {
            let (mut hi, mut lo) = (0.0, 0.0);
            for s in 0..7 {
                hi += B5[s] * k[s][i];
                lo += B4[s] * k[s][i];
            }
            next[i] = u[i] + h * hi;
            let sc = tol + tol * u[i].abs().max(next[i].abs());
            err = err.max((h * (hi - lo)).abs() / sc);
        }
        if !err.is_finite() || !next.iter().all(|v| v.is_finite()) {
            err = f64::INFINITY;
        }
        if err <= 1.0 {
            x += h;
            u = next;
        }
        let factor = if err == 0.0 {
            5.0
        } else if err.is_finite() {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            0.2
        };
        h *= factor;
        if h.abs() <= 1e-14 * x.abs().max(1e-300) {
            return Err(HeunError::StepUnderflow(x));
        }
    }
    Err(HeunError::NoConvergence {
        what: "adaptive integrator steps",
        limit: MAX_STEPS,
    })
}

/// `y(x_target)` by numerical integration of the Heun equation, started from
/// the Frobenius value and slope at `x0`.
///
/// Requires `0 < x0 <= x_target` below the first singular point on the
/// positive axis.
pub fn rk_oracle(p: &HeunParams, branch: &Branch, x_target: f64, x0: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(HeunError::InvalidTruncation(format!("tol must be positive (got {tol})")));
    }
    let limit = if p.a > 0.0 { p.a.min(1.0) } else { 1.0 };
    if x_target == 1.0 || x_target == p.a {
        return Err(HeunError::SingularPoint(x_target));
    }
    if !(x0 > 0.0 && x0 <= x_target && x_target < limit) {
        return Err(HeunError::Domain(format!(
            "integration path needs 0 < x0 <= x_target < {limit} (got x0 = {x0}, x_target = {x_target})"
        )));
    }
    let start = frobenius_eval(p, branch, x0, &SeriesControl::default())?;
    if x0 == x_target {
        return Ok(start.value);
    }
    Ok(dopri5(p, x0, x_target, [start.value, start.d1], tol)?[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Frobenius,
    Trf,
    Rk,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Frobenius, Method::Trf, Method::Rk];

    pub fn name(self) -> &'static str {
        match self {
            Method::Frobenius => "frobenius",
            Method::Trf => "trf",
            Method::Rk => "rk",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = HeunError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| HeunError::Usage(format!("unknown method `{s}` (frobenius, trf, rk)")))
    }
}

/// Integration tolerance used by [`compare_methods`].
pub const RK_TOL: f64 = 1e-12;

/// Start of the integration path for a target `x`.
pub fn rk_start(x: f64) -> f64 {
    0.05f64.min(x / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointComparison {
    pub x: f64,
    pub values: BTreeMap<Method, f64>,
    pub error_estimates: BTreeMap<Method, f64>,
    pub errors: BTreeMap<Method, String>,
    /// Largest pairwise relative discrepancy among the values at this point.
    pub rel_discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub params: HeunParams,
    pub branch: BranchKind,
    pub points: Vec<PointComparison>,
    pub max_rel_discrepancy: f64,
    /// Largest error estimate reported by each series method over all points.
    pub per_method_error_estimates: BTreeMap<Method, f64>,
}

fn rel_diff(u: f64, v: f64) -> f64 {
    let d = (u - v).abs();
    if d == 0.0 {
        0.0
    } else {
        d / u.abs().max(v.abs())
    }
}

fn evaluate(p: &HeunParams, branch: &Branch, x: f64, m: Method) -> Result<(f64, Option<f64>)> {
    match m {
        Method::Frobenius => {
            frobenius_eval(p, branch, x, &SeriesControl::default()).map(|v| (v.value, Some(v.error_estimate)))
        }
        Method::Trf => {
            trf_eval_infinite(p, branch, x, &TrfTruncation::default()).map(|v| (v.value, Some(v.error_estimate)))
        }
        Method::Rk => rk_oracle(p, branch, x, rk_start(x), RK_TOL).map(|v| (v, None)),
    }
}

/// Evaluates every requested method at every point. Failures are recorded
/// per point and method; they never abort the report.
pub fn compare_methods(p: &HeunParams, branch: &Branch, xs: &[f64], methods: &[Method]) -> ComparisonReport {
    let mut methods = methods.to_vec();
    methods.sort();
    methods.dedup();
    let points: Vec<PointComparison> = xs
        .iter()
        .map(|&x| {
            let mut pt = PointComparison {
                x,
                values: BTreeMap::new(),
                error_estimates: BTreeMap::new(),
                errors: BTreeMap::new(),
                rel_discrepancy: 0.0,
            };
            for &m in &methods {
                match evaluate(p, branch, x, m) {
                    Ok((v, est)) => {
                        pt.values.insert(m, v);
                        if let Some(e) = est {
                            pt.error_estimates.insert(m, e);
                        }
                    }
                    Err(e) => {
                        pt.errors.insert(m, e.to_string());
                    }
                }
            }
            let vals: Vec<f64> = pt.values.values().copied().collect();
            for (i, &u) in vals.iter().enumerate() {
                for &v in &vals[i + 1..] {
                    pt.rel_discrepancy = pt.rel_discrepancy.max(rel_diff(u, v));
                }
            }
            pt
        })
        .collect();

    let max_rel_discrepancy = points.iter().map(|pt| pt.rel_discrepancy).fold(0.0, f64::max);
    let mut per_method_error_estimates = BTreeMap::new();
    for pt in &points {
        for (&m, &e) in &pt.error_estimates {
            let slot = per_method_error_estimates.entry(m).or_insert(0.0f64);
            *slot = slot.max(e);
        }
    }
    ComparisonReport {
        params: *p,
        branch: branch.kind,
        points,
        max_rel_discrepancy,
        per_method_error_estimates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::validate_params;
    use crate::reductions::gauss_2f1;

    fn pstar() -> HeunParams {
        validate_params(2.0, 1.0, 1.0, 2.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn constant_test_function() {
        let r = ode_residual(&pstar(), 0.25, 1.0, 0.0, 0.0).unwrap();
        assert!((r + 32.0 / 21.0).abs() < 1e-15);
        assert!(matches!(ode_residual(&pstar(), 1.0, 1.0, 0.0, 0.0), Err(HeunError::SingularPoint(_))));
        assert!(ode_residual(&pstar(), 0.0, 1.0, 0.0, 0.0).is_err());
        assert!(ode_residual(&pstar(), 2.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn frobenius_value_solves_the_equation() {
        let p = pstar();
        let v = frobenius_eval(&p, &Branch::first(), 0.1, &SeriesControl::default()).unwrap();
        let r = ode_residual(&p, 0.1, v.value, v.d1, v.d2).unwrap();
        assert!(r.abs() <= 1e-8 * residual_scale(&p, 0.1, v.value, v.d1, v.d2));
        // exact solution 2/(2-x)
        let r = ode_residual(&p, 0.3, 2.0 / 1.7, 2.0 / 1.7f64.powi(2), 4.0 / 1.7f64.powi(3)).unwrap();
        assert!(r.abs() < 1e-13);
    }

    #[test]
    fn residual_is_linear() {
        let p = validate_params(3.0, 0.5, 1.0, 1.5, 0.8, 0.4).unwrap();
        let r1 = ode_residual(&p, 0.3, 1.2, -0.7, 2.5).unwrap();
        let r2 = ode_residual(&p, 0.3, 2.4, -1.4, 5.0).unwrap();
        assert!((r2 - 2.0 * r1).abs() <= 1e-14 * r2.abs());
    }

    #[test]
    fn rk_examples() {
        let p = pstar();
        let b = Branch::first();
        let f = frobenius_eval(&p, &b, 0.05, &SeriesControl::default()).unwrap();
        assert_eq!(rk_oracle(&p, &b, 0.05, 0.05, 1e-10).unwrap(), f.value);
        let v = rk_oracle(&p, &b, 0.2, 0.05, 1e-10).unwrap();
        let f = frobenius_eval(&p, &b, 0.2, &SeriesControl::default()).unwrap();
        assert!((v - f.value).abs() <= 1e-8 * f.value.abs());
        assert!((v - 2.0 / 1.8).abs() <= 1e-8);
        assert!(matches!(rk_oracle(&p, &b, 1.0, 0.05, 1e-10), Err(HeunError::SingularPoint(_))));
        assert!(rk_oracle(&p, &b, 0.2, 0.0, 1e-10).is_err());
        assert!(rk_oracle(&p, &b, 0.2, 0.05, 0.0).is_err());
    }

    #[test]
    fn rk_matches_hypergeometric_reduction() {
        // a = -1, q = 0, δ = ε: y = ₂F₁(-2, 1; 1; x²) = (1-x²)²
        let p = validate_params(-1.0, 0.0, -4.0, 2.0, 1.0, -1.0).unwrap();
        let v = rk_oracle(&p, &Branch::first(), 0.8, 0.05, 1e-12).unwrap();
        let f = gauss_2f1(-2.0, 1.0, 1.0, 0.64, 0.0).unwrap();
        assert!((v - f).abs() <= 1e-7);
    }

    #[test]
    fn comparison_report() {
        let p = pstar();
        let r = compare_methods(&p, &Branch::first(), &[0.05, 0.1, 0.15], &Method::ALL);
        assert_eq!(r.points.len(), 3);
        assert!(r.max_rel_discrepancy <= 1e-8, "{}", r.max_rel_discrepancy);
        assert!(r.points.iter().all(|pt| pt.values.len() == 3 && pt.errors.is_empty()));
        assert!(r.per_method_error_estimates.contains_key(&Method::Trf));

        let empty = compare_methods(&p, &Branch::first(), &[], &Method::ALL);
        assert!(empty.points.is_empty());
        assert_eq!(empty.max_rel_discrepancy, 0.0);

        let r = compare_methods(&p, &Branch::first(), &[0.1, 1.5, 1.0], &Method::ALL);
        assert_eq!(r.points[0].values.len(), 3);
        assert_eq!(r.points[1].errors.len(), 3);
        assert_eq!(r.points[2].errors.len(), 3);
        assert!(r.max_rel_discrepancy <= 1e-8);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("euler".parse::<Method>().is_err());
    }
}
