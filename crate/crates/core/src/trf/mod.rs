//! Closed-form multi-sum expansion of the Heun local solutions.
//!
//! The Frobenius coefficients are regrouped by the number `N` of `A`-factors
//! they contain. Each group `y_N` is a power series in `z = -x²/a` multiplied
//! by `η^N`, `η = (1+a)x/a`, whose coefficients are ratios of rising
//! factorials. The generic kernel lives in [`engine`]; this module supplies the
//! Heun-specific weights and the polynomial (terminating) variants.

mod engine;
mod termination;

pub use engine::StepWeights;
pub use termination::{detect_b_termination, TerminationReport};

use crate::error::{HeunError, Result};
use crate::params::{near_integer, Branch, HeunParams, SeriesValue, TrfVariables};
use crate::recurrence::{check_point, value_at_origin};

use engine::{collect_powers, level_coeffs, sum_levels, SequenceWeights};

/// Truncation of the formally infinite nested sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrfTruncation {
    /// Cap on the number of sub-series (powers of `η`).
    pub n_max: usize,
    /// Cap on each inner index.
    pub inner_cap: usize,
    /// Relative tail tolerance.
    pub tol: f64,
}

impl Default for TrfTruncation {
    fn default() -> Self {
        TrfTruncation {
            n_max: 60,
            inner_cap: 400,
            tol: 1e-12,
        }
    }
}

impl TrfTruncation {
    pub fn validate(&self) -> Result<()> {
        if self.n_max < 2 {
            return Err(HeunError::InvalidTruncation(format!("n_max = {} < 2", self.n_max)));
        }
        if self.inner_cap < 1 {
            return Err(HeunError::InvalidTruncation("inner_cap must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(HeunError::InvalidTruncation(format!("tol = {} must be positive", self.tol)));
        }
        Ok(())
    }
}

/// Nested-sum evaluation for arbitrary recurrence sequences `A_n`, `B_n`
/// (normalized to `c_0 = 1`).
pub fn generic_trf_sum<FA, FB>(a: FA, b: FB, lambda: f64, x: f64, trunc: &TrfTruncation) -> Result<SeriesValue>
where
    FA: Fn(usize) -> f64,
    FB: Fn(usize) -> f64,
{
    trunc.validate()?;
    if x == 0.0 {
        let c1 = a(0);
        return value_at_origin(lambda, &[1.0, c1, a(1) * c1 + b(1)]);
    }
    sum_levels(&SequenceWeights { a, b, x }, lambda, x, trunc)
}

/// What the weights are multiplied by.
#[derive(Debug, Clone, Copy)]
enum Scaling {
    /// Evaluation at a point `x`.
    Point(f64),
    /// Unit argument, so levels collect plain power-series coefficients.
    Unit,
    /// No powers of `z` or `η` at all: coefficients of `z^j η^N`.
    Formal,
}

/// Step weights of the Heun expansion in rising-factorial form.
///
/// Inner steps of sub-series `k` carry
/// `z (i + (k+α+λ)/2)(i + (k+β+λ)/2) / [(i + 1 + (k+λ)/2)(i + 1/2 + (k+λ+γ)/2)]`
/// and the step into sub-series `k+1` carries the rational `A`-type factor
/// with its `1/(1+a)` already cancelled against one power of `η`.
#[derive(Debug, Clone)]
struct HeunWeights {
    lambda: f64,
    a: f64,
    q: f64,
    gamma: f64,
    delta: f64,
    /// `α + λ`, exact integer when snapped to a termination pattern.
    alpha_shift: f64,
    beta_shift: f64,
    rise_scale: f64,
    jump_scale: f64,
}

impl HeunWeights {
    fn new(params: &HeunParams, lambda: f64, shifts: (f64, f64), scaling: Scaling) -> Result<Self> {
        let a = params.a;
        let (rise_scale, jump_scale) = match scaling {
            Scaling::Point(x) => (x / a, TrfVariables::new(params, x).z),
            Scaling::Unit => (1.0 / a, -1.0 / a),
            Scaling::Formal => {
                if 1.0 + a == 0.0 {
                    return Err(HeunError::Domain(
                        "coefficients of powers of eta are undefined at a = -1".into(),
                    ));
                }
                (1.0 / (1.0 + a), 1.0)
            }
        };
        Ok(HeunWeights {
            lambda,
            a,
            q: params.q,
            gamma: params.gamma,
            delta: params.delta,
            alpha_shift: shifts.0,
            beta_shift: shifts.1,
            rise_scale,
            jump_scale,
        })
    }

    fn raw_shifts(params: &HeunParams, lambda: f64) -> (f64, f64) {
        (params.alpha + lambda, params.beta + lambda)
    }
}

impl StepWeights for HeunWeights {
    fn rise(&self, level: usize, i: usize) -> f64 {
        let k = level as f64;
        let i = i as f64;
        let h = (k + self.lambda) / 2.0;
        // α + β - δ + k + λ + a(δ + γ + λ + k - 1), with α+λ and β+λ as stored
        let c = self.alpha_shift + self.beta_shift - self.lambda - self.delta
            + k
            + self.a * (self.delta + self.gamma + self.lambda + k - 1.0);
        let num = 4.0 * (1.0 + self.a) * (i + h) * i + 2.0 * (i + h) * c + self.q;
        let den = 4.0 * (i + h + 0.5) * (i + h + self.gamma / 2.0);
        self.rise_scale * num / den
    }

    fn jump(&self, level: usize, i: usize) -> f64 {
        let k = level as f64;
        let i = i as f64;
        let h = (k + self.lambda) / 2.0;
        let num = (i + (k + self.alpha_shift) / 2.0) * (i + (k + self.beta_shift) / 2.0);
        if num == 0.0 {
            return 0.0;
        }
        let den = (i + 1.0 + h) * (i + 0.5 + h + self.gamma / 2.0);
        self.jump_scale * num / den
    }
}

/// `α + λ` snapped to the integer `1 - n` when `B_n` vanishes for some `n ≥ 1`.
pub(crate) fn snapped_shift(value: f64, lambda: f64) -> Option<f64> {
    match near_integer(value + lambda) {
        Some(m) if m <= 0 => Some(m as f64),
        _ => None,
    }
}

fn evaluate(
    params: &HeunParams,
    branch: &Branch,
    x: f64,
    trunc: &TrfTruncation,
    shifts: (f64, f64),
) -> Result<SeriesValue> {
    trunc.validate()?;
    if x == 0.0 {
        let w = HeunWeights::new(params, branch.lambda, shifts, Scaling::Unit)?;
        let c: Vec<f64> = collect_powers(&w, 2).iter().map(|v| v * branch.c0).collect();
        return value_at_origin(branch.lambda, &c);
    }
    check_point(params, branch, x)?;
    let w = HeunWeights::new(params, branch.lambda, shifts, Scaling::Point(x))?;
    let mut v = sum_levels(&w, branch.lambda, x, trunc)?;
    v.value *= branch.c0;
    v.d1 *= branch.c0;
    v.d2 *= branch.c0;
    v.error_estimate *= branch.c0.abs();
    Ok(v)
}

/// Infinite-series form: both `α` and `β` enter through
/// `((k+α+λ)/2)_i ((k+β+λ)/2)_i`. Finite at `a = -1`.
pub fn trf_eval_infinite(
    params: &HeunParams,
    branch: &Branch,
    x: f64,
    trunc: &TrfTruncation,
) -> Result<SeriesValue> {
    evaluate(params, branch, x, trunc, HeunWeights::raw_shifts(params, branch.lambda))
}

/// Polynomial form for a `B`-terminated expansion: the terminating parameter
/// is taken at its exact integer pattern so each inner sum stops at the first
/// vanishing `B`.
pub fn trf_eval_poly_b(
    params: &HeunParams,
    branch: &Branch,
    x: f64,
    trunc: &TrfTruncation,
) -> Result<SeriesValue> {
    if !detect_b_termination(params, branch).terminated {
        return Err(HeunError::NotBTerminated);
    }
    evaluate(params, branch, x, trunc, termination_shifts(params, branch.lambda))
}

/// Doubly-terminated form: both `α` and `β` follow the termination pattern and
/// the `α` side stops first.
pub fn trf_eval_poly_ab(
    params: &HeunParams,
    branch: &Branch,
    x: f64,
    trunc: &TrfTruncation,
) -> Result<SeriesValue> {
    let lambda = branch.lambda;
    let (Some(sa), Some(sb)) = (snapped_shift(params.alpha, lambda), snapped_shift(params.beta, lambda)) else {
        return Err(HeunError::NotDoublyTerminated);
    };
    // B_n vanishes at n = 1 - (α+λ) on the α side
    let (na, nb) = ((1.0 - sa) as usize, (1.0 - sb) as usize);
    if na > nb {
        return Err(HeunError::OrderViolated {
            alpha_bound: na,
            beta_bound: nb,
        });
    }
    evaluate(params, branch, x, trunc, (sa, sb))
}

fn termination_shifts(params: &HeunParams, lambda: f64) -> (f64, f64) {
    let raw = HeunWeights::raw_shifts(params, lambda);
    (
        snapped_shift(params.alpha, lambda).unwrap_or(raw.0),
        snapped_shift(params.beta, lambda).unwrap_or(raw.1),
    )
}

/// Power-series coefficients `c_0 ..= c_M` rebuilt from the nested sums:
/// every term lands on `x^{2 i_N + N}` (relative to `x^λ`).
pub fn trf_extract_coeffs(params: &HeunParams, branch: &Branch, order: usize) -> Result<Vec<f64>> {
    let w = HeunWeights::new(
        params,
        branch.lambda,
        HeunWeights::raw_shifts(params, branch.lambda),
        Scaling::Unit,
    )?;
    // Each weight depends on its level only through n = 2i + level. Evaluating
    // it once per n keeps rounding of the weights from being amplified by the
    // cancellation between levels.
    let rises: Vec<f64> = (0..=order).map(|n| w.rise(n % 2, n / 2)).collect();
    let jumps: Vec<f64> = (0..=order).map(|n| w.jump(n % 2, n / 2)).collect();
    let shared = SequenceWeights {
        a: |n: usize| rises[n],
        b: |n: usize| jumps[n - 1],
        x: 1.0,
    };
    Ok(collect_powers(&shared, order).into_iter().map(|v| v * branch.c0).collect())
}

/// Coefficients of `z^j`, `j < len`, in sub-series `level`, i.e.
/// `y_level = c_0 x^λ η^level Σ_j s_j z^j`. Terminating parameters are taken at
/// their exact integer pattern. Undefined at `a = -1` for `level > 0`.
pub fn trf_subseries_coeffs(
    params: &HeunParams,
    branch: &Branch,
    level: usize,
    len: usize,
) -> Result<Vec<f64>> {
    let scaling = if level == 0 { Scaling::Unit } else { Scaling::Formal };
    let mut w = HeunWeights::new(params, branch.lambda, termination_shifts(params, branch.lambda), scaling)?;
    w.jump_scale = 1.0;
    Ok(level_coeffs(&w, level, len))
}
