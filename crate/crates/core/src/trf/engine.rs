//! Nested-sum kernel for three-term recurrences.
//!
//! Unrolling `c_{n+1} = A_n c_n + B_n c_{n-1}` from `c_0` writes every `c_n`
//! as a sum over walks made of single steps (weight `A_p` at position `p`) and
//! double steps (weight `B_{p+1}`). Grouping walks by their number `N` of
//! single steps gives the sub-series `y_N`:
//!
//! ```text
//! y_N = Σ_{i_0 ≤ i_1 ≤ ... ≤ i_N}  Π_{i<i_0} B_{2i+1}
//!        · Π_{k=1..N} [ A_{2 i_{k-1} + k-1} · Π_{i=i_{k-1}}^{i_k - 1} B_{2i+k+1} ] · x^{2 i_N + N + λ}
//! ```
//!
//! The nested sums are evaluated level by level: `W_k(j)` collects every
//! prefix whose last index is `i_k = j`, so
//! `W_k(j) = W_k(j-1)·jump(k, j-1) + W_{k-1}(j)·rise(k-1, j)` and
//! `y_k = x^λ Σ_j W_k(j)`. A vanishing `jump` halts the running product of
//! that inner sum exactly.

use crate::error::{HeunError, Result};
use crate::params::SeriesValue;
use crate::recurrence::series_power;

use super::TrfTruncation;

/// Step weights of one walk through a three-term recurrence, already carrying
/// their powers of the expansion variable.
pub trait StepWeights {
    /// Weight of the single step leaving sub-series `level` at inner index `i`
    /// (`A_{2i+level}` times one power of `x`).
    fn rise(&self, level: usize, i: usize) -> f64;

    /// Weight of one inner step of sub-series `level` at index `i`
    /// (`B_{2i+level+1}` times `x²`).
    fn jump(&self, level: usize, i: usize) -> f64;
}

/// Adapts plain `A_n`, `B_n` sequences to [`StepWeights`] at a point `x`.
pub(crate) struct SequenceWeights<FA, FB> {
    pub a: FA,
    pub b: FB,
    pub x: f64,
}

impl<FA: Fn(usize) -> f64, FB: Fn(usize) -> f64> StepWeights for SequenceWeights<FA, FB> {
    fn rise(&self, level: usize, i: usize) -> f64 {
        (self.a)(2 * i + level) * self.x
    }

    fn jump(&self, level: usize, i: usize) -> f64 {
        (self.b)(2 * i + level + 1) * self.x * self.x
    }
}

/// Sums of one sub-series: value, the two weighted sums needed for
/// derivatives, and the absolute mass used by the stopping rule.
#[derive(Debug, Default, Clone, Copy)]
struct LevelSums {
    value: f64,
    first: f64,
    second: f64,
    mass: f64,
}

impl LevelSums {
    fn add(&mut self, w: f64, power: f64) {
        self.value += w;
        self.first += w * power;
        self.second += w * power * (power - 1.0);
        self.mass += w.abs();
    }
}

/// Number of consecutive negligible entries that ends a sum.
const QUIET_RUN: usize = 3;

/// Computes one level of the nested sums from the previous one.
fn next_level<W: StepWeights>(
    weights: &W,
    level: usize,
    prev: &[f64],
    trunc: &TrfTruncation,
    base: f64,
) -> Result<Vec<f64>> {
    let mut cur: Vec<f64> = Vec::with_capacity(prev.len() + 8);
    let mut partial = 0.0;
    let mut floor;
    let mut quiet = 0;
    let mut j = 0;
    loop {
        let carried = if j == 0 {
            0.0
        } else {
            let w = cur[j - 1];
            if w == 0.0 {
                0.0
            } else {
                w * weights.jump(level, j - 1)
            }
        };
        let fresh = match (level, prev.get(j)) {
            (0, _) => {
                if j == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            (_, Some(&w)) if w != 0.0 => w * weights.rise(level - 1, j),
            _ => 0.0,
        };
        let w = carried + fresh;
        if !w.is_finite() {
            return Err(HeunError::NoConvergence {
                what: "3TRF inner sum (overflow)",
                limit: j,
            });
        }
        cur.push(w);
        partial += w;
        // entries this small relative to the running sums cannot move them
        floor = trunc.tol * 1e-4 * base.max(partial.abs());
        if j + 1 >= prev.len() {
            if w.abs() <= floor {
                quiet += 1;
                if quiet >= QUIET_RUN {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        j += 1;
        if j > trunc.inner_cap {
            return Err(HeunError::NoConvergence {
                what: "3TRF inner sum",
                limit: trunc.inner_cap,
            });
        }
    }
    // trailing entries below the floor carry nothing forward
    while cur.len() > 1 && cur.last().is_some_and(|w| w.abs() <= floor) && cur.len() > prev.len() {
        cur.pop();
    }
    Ok(cur)
}

/// Evaluates `x^λ Σ_N y_N` with derivatives. `x` must be nonzero.
pub(crate) fn sum_levels<W: StepWeights>(
    weights: &W,
    lambda: f64,
    x: f64,
    trunc: &TrfTruncation,
) -> Result<SeriesValue> {
    trunc.validate()?;
    let mut total = LevelSums::default();
    let mut prev: Vec<f64> = Vec::new();
    let mut quiet = 0;
    for level in 0..=trunc.n_max {
        let cur = next_level(weights, level, &prev, trunc, total.value.abs())?;
        let mut sums = LevelSums::default();
        for (j, &w) in cur.iter().enumerate() {
            sums.add(w, (2 * j + level) as f64 + lambda);
        }
        total.value += sums.value;
        total.first += sums.first;
        total.second += sums.second;

        let exhausted = cur.iter().all(|&w| w == 0.0);
        if sums.mass <= trunc.tol * total.value.abs() {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if exhausted || quiet >= QUIET_RUN {
            let scale = series_power(x, lambda)?;
            return Ok(SeriesValue {
                value: total.value * scale,
                d1: total.first * scale / x,
                d2: total.second * scale / (x * x),
                terms_used: level + 1,
                error_estimate: sums.mass * scale.abs(),
            });
        }
        prev = cur;
    }
    Err(HeunError::NoConvergence {
        what: "3TRF outer sum over sub-series",
        limit: trunc.n_max,
    })
}

/// Unevaluated sum `hi + lo` carrying about twice the precision of `f64`.
///
/// Coefficient extraction sums walks of mixed sign across levels; with plain
/// doubles the rounding of each level entry is amplified by that
/// cancellation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    fn renorm(a: f64, b: f64) -> Dd {
        let s = a + b;
        Dd { hi: s, lo: b - (s - a) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = self.hi + o.hi;
        let bb = s - self.hi;
        let e = (self.hi - (s - bb)) + (o.hi - bb);
        Dd::renorm(s, e + self.lo + o.lo)
    }

    fn mul(self, b: f64) -> Dd {
        let p = self.hi * b;
        let e = self.hi.mul_add(b, -p);
        Dd::renorm(p, e + self.lo * b)
    }

    fn is_zero(self) -> bool {
        self.hi == 0.0 && self.lo == 0.0
    }
}

/// Coefficients of `x^m`, `m = 0..=order`, of `Σ_N y_N / x^λ`, given weights
/// evaluated at unit argument.
pub(crate) fn collect_powers<W: StepWeights>(weights: &W, order: usize) -> Vec<f64> {
    let mut coeffs = vec![Dd::ZERO; order + 1];
    let mut prev: Vec<Dd> = Vec::new();
    for level in 0..=order {
        let len = (order - level) / 2 + 1;
        let mut cur = vec![Dd::ZERO; len];
        for j in 0..len {
            let carried = if j == 0 || cur[j - 1].is_zero() {
                Dd::ZERO
            } else {
                cur[j - 1].mul(weights.jump(level, j - 1))
            };
            let fresh = if level == 0 {
                if j == 0 {
                    Dd::ONE
                } else {
                    Dd::ZERO
                }
            } else {
                match prev.get(j) {
                    Some(w) if !w.is_zero() => w.mul(weights.rise(level - 1, j)),
                    _ => Dd::ZERO,
                }
            };
            cur[j] = carried.add(fresh);
            coeffs[2 * j + level] = coeffs[2 * j + level].add(cur[j]);
        }
        prev = cur;
    }
    coeffs.into_iter().map(|c| c.hi + c.lo).collect()
}

/// Coefficients of `z^j`, `j < len`, of one sub-series, given formal
/// (argument-free) weights.
pub(crate) fn level_coeffs<W: StepWeights>(weights: &W, level: usize, len: usize) -> Vec<f64> {
    let mut prev: Vec<f64> = Vec::new();
    for k in 0..=level {
        let mut cur = vec![0.0; len];
        for j in 0..len {
            let carried = if j == 0 { 0.0 } else { cur[j - 1] * weights.jump(k, j - 1) };
            let fresh = if k == 0 {
                if j == 0 {
                    1.0
                } else {
                    0.0
                }
            } else if prev[j] == 0.0 {
                0.0
            } else {
                prev[j] * weights.rise(k - 1, j)
            };
            cur[j] = carried + fresh;
        }
        prev = cur;
    }
    prev
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Literal nested enumeration of the walk sums, for small depth.
    fn brute<W: StepWeights>(w: &W, level: usize, cap: usize) -> Vec<f64> {
        fn rec<W: StepWeights>(w: &W, k: usize, level: usize, start: usize, acc: f64, cap: usize, out: &mut [f64]) {
            for i in start..=cap {
                let mut prod = acc;
                for t in start..i {
                    prod *= w.jump(k, t);
                }
                if k == level {
                    out[i] += prod;
                } else {
                    rec(w, k + 1, level, i, prod * w.rise(k, i), cap, out);
                }
            }
        }
        let mut out = vec![0.0; cap + 1];
        rec(w, 0, level, 0, 1.0, cap, &mut out);
        out
    }

    struct Toy;
    impl StepWeights for Toy {
        fn rise(&self, level: usize, i: usize) -> f64 {
            0.3 + 0.1 * level as f64 - 0.05 * i as f64
        }
        fn jump(&self, level: usize, i: usize) -> f64 {
            -0.2 + 0.07 * (i as f64) * (level as f64 + 1.0).sqrt()
        }
    }

    #[test]
    fn level_recursion_matches_literal_nested_sums() {
        for level in 0..4 {
            let fast = level_coeffs(&Toy, level, 6);
            let slow = brute(&Toy, level, 5);
            for (f, s) in fast.iter().zip(&slow) {
                assert!((f - s).abs() <= 1e-14 * s.abs().max(1e-300), "level {level}: {f} vs {s}");
            }
        }
    }

    #[test]
    fn double_double_keeps_cancelled_bits() {
        let big = Dd::ONE.mul(1e17);
        let sum = big.add(Dd::ONE).add(big.mul(-1.0));
        assert_eq!(sum.hi + sum.lo, 1.0);
        let third = Dd::ONE.mul(1.0 / 3.0).mul(3.0);
        assert!((third.hi - 1.0).abs() + third.lo.abs() < 1e-16);
    }

    #[test]
    fn collect_powers_groups_by_exponent() {
        let c = collect_powers(&Toy, 6);
        let mut expect = vec![0.0; 7];
        for level in 0..=6 {
            let l = brute(&Toy, level, 3);
            for (j, v) in l.iter().enumerate() {
                if 2 * j + level <= 6 {
                    expect[2 * j + level] += v;
                }
            }
        }
        for (a, b) in c.iter().zip(&expect) {
            assert!((a - b).abs() <= 1e-14 * b.abs().max(1e-300));
        }
    }
}
