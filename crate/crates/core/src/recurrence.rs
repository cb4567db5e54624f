//! Classical Frobenius series at `x = 0`.
//!
//! Substituting `y = Σ c_n x^{n+λ}` into the Heun equation gives
//! `c_{n+1} = A_n c_n + B_n c_{n-1}` with `c_1 = A_0 c_0`. This module is the
//! reference route every other evaluator is checked against.

use crate::error::{HeunError, Result};
use crate::params::{real_pow, Branch, HeunParams, SeriesValue};

fn denominator(n: usize, lambda: f64, p: &HeunParams) -> Result<f64> {
    let nf = n as f64;
    let d = p.a * (nf + 1.0 + lambda) * (nf + p.gamma + lambda);
    if d == 0.0 {
        Err(HeunError::ResonantIndex(n))
    } else {
        Ok(d)
    }
}

/// `A_n` in its ε form.
pub fn coeff_a(n: usize, lambda: f64, p: &HeunParams) -> Result<f64> {
    let nf = n as f64;
    let num = (nf + lambda)
        * (nf - 1.0 + p.gamma + p.epsilon() + lambda
            + p.a * (nf - 1.0 + p.gamma + lambda + p.delta))
        + p.q;
    Ok(num / denominator(n, lambda, p)?)
}

/// `A_n` written with `α + β - δ` in place of `γ + ε - 1`.
pub fn coeff_a_alt(n: usize, lambda: f64, p: &HeunParams) -> Result<f64> {
    let nf = n as f64;
    let num = (nf + lambda)
        * (nf + p.alpha + p.beta - p.delta + lambda + p.a * (nf + p.delta + p.gamma - 1.0 + lambda))
        + p.q;
    Ok(num / denominator(n, lambda, p)?)
}

/// `B_n` in factored form `-(n-1+λ+α)(n-1+λ+β) / [a(n+1+λ)(n+γ+λ)]`.
pub fn coeff_b(n: usize, lambda: f64, p: &HeunParams) -> Result<f64> {
    let m = n as f64 - 1.0 + lambda;
    Ok(-(m + p.alpha) * (m + p.beta) / denominator(n, lambda, p)?)
}

/// `B_n` in its unfactored γδε form.
pub fn coeff_b_alt(n: usize, lambda: f64, p: &HeunParams) -> Result<f64> {
    let nf = n as f64;
    let m = nf - 1.0 + lambda;
    let num = m * (nf + p.gamma + p.delta + p.epsilon() - 2.0 + lambda) + p.alpha * p.beta;
    Ok(-num / denominator(n, lambda, p)?)
}

/// Frobenius coefficients `c_0 ..= c_N` of one branch.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub lambda: f64,
    pub c: Vec<f64>,
}

pub fn frobenius_coeffs(params: &HeunParams, branch: &Branch, order: usize) -> Result<CoefficientTable> {
    let lambda = branch.lambda;
    let mut c = Vec::with_capacity(order + 1);
    c.push(branch.c0);
    if order >= 1 {
        c.push(coeff_a(0, lambda, params)? * branch.c0);
    }
    for n in 1..order {
        let next = coeff_a(n, lambda, params)? * c[n] + coeff_b(n, lambda, params)? * c[n - 1];
        c.push(next);
    }
    Ok(CoefficientTable { lambda, c })
}

/// Truncation control for the direct Frobenius sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub tol: f64,
    pub n_max: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            tol: 1e-14,
            n_max: 500,
        }
    }
}

/// `x^p` for a series exponent, rejecting negative `x` with a non-integer power.
pub(crate) fn series_power(x: f64, p: f64) -> Result<f64> {
    real_pow(x, p).ok_or_else(|| {
        HeunError::Domain(format!("x^{p} is not real for x = {x}; non-integer exponents need x > 0"))
    })
}

pub(crate) fn check_point(params: &HeunParams, branch: &Branch, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(HeunError::Domain(format!("x = {x} is not finite")));
    }
    if x == 1.0 || x == params.a {
        return Err(HeunError::SingularPoint(x));
    }
    let r = params.convergence_radius();
    if x.abs() >= r {
        return Err(HeunError::Domain(format!(
            "|x| = {} outside the convergence disk |x| < min(1, |a|) = {r}",
            x.abs()
        )));
    }
    if x < 0.0 && branch.lambda.fract() != 0.0 {
        return Err(HeunError::Domain(format!(
            "x = {x} < 0 with non-integer exponent lambda = {}",
            branch.lambda
        )));
    }
    Ok(())
}

/// Value and derivatives of the series at `x = 0`, given `c_0, c_1, c_2`.
pub(crate) fn value_at_origin(lambda: f64, c: &[f64]) -> Result<SeriesValue> {
    let c_at = |i: usize| c.get(i).copied().unwrap_or(0.0);
    if lambda == 0.0 {
        return Ok(SeriesValue {
            value: c_at(0),
            d1: c_at(1),
            d2: 2.0 * c_at(2),
            terms_used: 1,
            error_estimate: 0.0,
        });
    }
    if lambda < 0.0 {
        return Err(HeunError::Domain(format!(
            "x = 0 with negative exponent lambda = {lambda}: solution is unbounded"
        )));
    }
    // leading behaviour c0 x^λ: derivatives are finite only for λ >= 1 (resp. 2)
    let lead = |order: i32| -> f64 {
        let coeff = match order {
            1 => lambda,
            _ => lambda * (lambda - 1.0),
        };
        let power = lambda - order as f64;
        if power > 0.0 {
            0.0
        } else if power == 0.0 {
            coeff * c_at(0)
        } else {
            f64::INFINITY.copysign(coeff * c_at(0))
        }
    };
    Ok(SeriesValue {
        value: 0.0,
        d1: lead(1),
        d2: if lambda == 1.0 { 2.0 * c_at(1) } else { lead(2) },
        terms_used: 1,
        error_estimate: 0.0,
    })
}

/// Direct summation of `Σ c_n x^{n+λ}` with first and second derivatives.
///
/// Stops once three consecutive terms are each below `tol · |partial sum|`.
pub fn frobenius_eval(
    params: &HeunParams,
    branch: &Branch,
    x: f64,
    control: &SeriesControl,
) -> Result<SeriesValue> {
    let lambda = branch.lambda;
    if x == 0.0 {
        let table = frobenius_coeffs(params, branch, 2)?;
        return value_at_origin(lambda, &table.c);
    }
    check_point(params, branch, x)?;

    // t_n = c_n x^n, advanced with the recurrence scaled by powers of x
    let mut prev = 0.0;
    let mut cur = branch.c0;
    let (mut s0, mut s1, mut s2) = (cur, cur * lambda, cur * lambda * (lambda - 1.0));
    let mut quiet = 0;
    let mut n = 0;
    while n < control.n_max {
        let next = if n == 0 {
            coeff_a(0, lambda, params)? * x * cur
        } else {
            coeff_a(n, lambda, params)? * x * cur + coeff_b(n, lambda, params)? * x * x * prev
        };
        n += 1;
        prev = cur;
        cur = next;
        let p = n as f64 + lambda;
        s0 += cur;
        s1 += cur * p;
        s2 += cur * p * (p - 1.0);
        let last = cur.abs();
        if last <= control.tol * s0.abs() {
            quiet += 1;
            if quiet == 3 {
                let scale = series_power(x, lambda)?;
                return Ok(SeriesValue {
                    value: s0 * scale,
                    d1: s1 * scale / x,
                    d2: s2 * scale / (x * x),
                    terms_used: n + 1,
                    error_estimate: last * scale.abs(),
                });
            }
        } else {
            quiet = 0;
        }
    }
    Err(HeunError::NoConvergence {
        what: "Frobenius series",
        limit: control.n_max,
    })
}
