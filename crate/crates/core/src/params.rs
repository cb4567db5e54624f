//! Parameters of the general Heun equation
//!
//! ```text
//! y'' + (γ/x + δ/(x-1) + ε/(x-a)) y' + (αβx - q)/(x(x-1)(x-a)) y = 0,   ε = α+β-γ-δ+1
//! ```
//!
//! together with the two Frobenius branches at `x = 0` and the small result
//! types shared by every evaluator.

use serde::{Deserialize, Serialize};

use crate::error::{HeunError, Result};

/// Tolerance used when deciding whether a real number is an integer.
pub(crate) const INTEGER_TOL: f64 = 1e-9;

/// Returns `Some(n)` when `v` lies within [`INTEGER_TOL`] of the integer `n`.
pub(crate) fn near_integer(v: f64) -> Option<i64> {
    let r = v.round();
    if (v - r).abs() <= INTEGER_TOL && r.abs() < 1e15 {
        Some(r as i64)
    } else {
        None
    }
}

/// The six free parameters of the Heun equation. `epsilon` is always derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeunParams {
    pub a: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    epsilon: f64,
}

impl HeunParams {
    /// Validates the raw parameters and derives `epsilon`.
    pub fn new(a: f64, q: f64, alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        for (name, v) in [
            ("a", a),
            ("q", q),
            ("alpha", alpha),
            ("beta", beta),
            ("gamma", gamma),
            ("delta", delta),
        ] {
            if !v.is_finite() {
                return Err(HeunError::NonFiniteParameter(name));
            }
        }
        if a == 0.0 {
            return Err(HeunError::SingularParameter);
        }
        Ok(HeunParams {
            a,
            q,
            alpha,
            beta,
            gamma,
            delta,
            epsilon: alpha + beta - gamma - delta + 1.0,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Radius of the disk around `x = 0` free of other finite singularities.
    pub fn convergence_radius(&self) -> f64 {
        self.a.abs().min(1.0)
    }
}

/// Free-function form of [`HeunParams::new`].
pub fn validate_params(
    a: f64,
    q: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
) -> Result<HeunParams> {
    HeunParams::new(a, q, alpha, beta, gamma, delta)
}

/// Rising factorial `x (x+1) ... (x+n-1)`; `1` for `n = 0`.
pub fn pochhammer(x: f64, n: usize) -> f64 {
    (0..n).fold(1.0, |acc, k| acc * (x + k as f64))
}

/// The indicial roots at `x = 0`: `(0, 1 - γ)`.
pub fn indicial_roots(params: &HeunParams) -> (f64, f64) {
    (0.0, 1.0 - params.gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchKind {
    First,
    Second,
}

impl std::fmt::Display for BranchKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BranchKind::First => "first",
            BranchKind::Second => "second",
        })
    }
}

/// One of the two local Frobenius solutions at `x = 0`, with its exponent and
/// normalization `c0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Branch {
    pub kind: BranchKind,
    pub lambda: f64,
    pub c0: f64,
}

impl Branch {
    /// Builds the branch with the standard normalization: `c0 = 1` for the
    /// first branch and `c0 = a^{-(1-γ)/2}` for the second.
    pub fn new(kind: BranchKind, params: &HeunParams) -> Result<Self> {
        let lambda = Self::check(kind, params)?;
        let c0 = match kind {
            BranchKind::First => 1.0,
            BranchKind::Second => {
                let e = -(1.0 - params.gamma) / 2.0;
                real_pow(params.a, e).ok_or_else(|| {
                    HeunError::DegenerateBranch(format!(
                        "c0 = a^{e} is not real for a = {} (use a unit-normalized branch)",
                        params.a
                    ))
                })?
            }
        };
        Ok(Branch { kind, lambda, c0 })
    }

    /// Same exponent as [`Branch::new`] but with `c0 = 1`. Used where
    /// `a^{-(1-γ)/2}` is not real, e.g. `a = -1`.
    pub fn unit(kind: BranchKind, params: &HeunParams) -> Result<Self> {
        let lambda = Self::check(kind, params)?;
        Ok(Branch { kind, lambda, c0: 1.0 })
    }

    pub fn first() -> Self {
        Branch {
            kind: BranchKind::First,
            lambda: 0.0,
            c0: 1.0,
        }
    }

    fn check(kind: BranchKind, params: &HeunParams) -> Result<f64> {
        let g = params.gamma;
        match kind {
            BranchKind::First => {
                if let Some(n) = near_integer(g) {
                    if n <= 0 {
                        return Err(HeunError::DegenerateBranch(format!(
                            "first branch requires gamma not in {{0, -1, -2, ...}} (gamma = {g})"
                        )));
                    }
                }
                Ok(0.0)
            }
            BranchKind::Second => {
                if let Some(n) = near_integer(g) {
                    if n == 1 {
                        return Err(HeunError::DegenerateBranch(
                            "gamma = 1: both indicial roots coincide, second solution is logarithmic"
                                .into(),
                        ));
                    }
                    if n >= 2 {
                        return Err(HeunError::DegenerateBranch(format!(
                            "second branch requires gamma not in {{2, 3, 4, ...}} (gamma = {g})"
                        )));
                    }
                }
                Ok(1.0 - g)
            }
        }
    }
}

/// `base^e` over the reals; `None` when the result would be complex.
pub(crate) fn real_pow(base: f64, e: f64) -> Option<f64> {
    if e == 0.0 {
        return Some(1.0);
    }
    if let Some(n) = near_integer(e) {
        if (e - n as f64).abs() == 0.0 && n.abs() < i32::MAX as i64 {
            return Some(base.powi(n as i32));
        }
    }
    if base > 0.0 {
        Some(base.powf(e))
    } else if base == 0.0 && e > 0.0 {
        Some(0.0)
    } else {
        None
    }
}

/// Result of evaluating a local solution at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub terms_used: usize,
    /// Magnitude of the last accepted term (or term group).
    pub error_estimate: f64,
}

/// The auxiliary variables `z = -x²/a` and `η = (1+a)x/a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrfVariables {
    pub z: f64,
    pub eta: f64,
}

impl TrfVariables {
    pub fn new(params: &HeunParams, x: f64) -> Self {
        TrfVariables {
            z: -x * x / params.a,
            eta: (1.0 + params.a) * x / params.a,
        }
    }
}
