#![allow(dead_code)]

use heun_core::{validate_params, HeunParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `|a|` in `[lo, hi]` with a random sign.
pub fn signed(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let m = rng.gen_range(lo..=hi);
    if rng.gen_bool(0.5) {
        m
    } else {
        -m
    }
}

/// Distance from `v` to the nearest integer in `set`.
fn distance_to(v: f64, set: impl Iterator<Item = i64>) -> f64 {
    set.map(|n| (v - n as f64).abs()).fold(f64::INFINITY, f64::min)
}

/// A `γ` in `[-3, 3]` at least 0.1 away from `{0, -1, -2, ...}` and, when
/// `second` is set, also from `{1, 2, 3, ...}`.
pub fn gamma(rng: &mut ChaCha8Rng, second: bool) -> f64 {
    loop {
        let g: f64 = rng.gen_range(-3.0..=3.0);
        let bad = if second { distance_to(g, -3..=3) } else { distance_to(g, -3..=0) };
        if bad >= 0.1 {
            return g;
        }
    }
}

/// Random valid parameters: `0.5 <= |a| <= 3`, the rest in `[-3, 3]`.
pub fn params(rng: &mut ChaCha8Rng, second: bool) -> HeunParams {
    let a = signed(rng, 0.5, 3.0);
    let g = gamma(rng, second);
    let mut v = || rng.gen_range(-3.0..=3.0);
    validate_params(a, v(), v(), v(), g, v()).unwrap()
}

pub fn pstar() -> HeunParams {
    validate_params(2.0, 1.0, 1.0, 2.0, 1.0, 1.0).unwrap()
}

pub fn rel(u: f64, v: f64) -> f64 {
    let d = (u - v).abs();
    if d == 0.0 {
        0.0
    } else {
        d / u.abs().max(v.abs())
    }
}
