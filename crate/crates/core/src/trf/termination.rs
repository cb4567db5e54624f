use serde::Serialize;

use crate::params::{Branch, HeunParams};

use super::snapped_shift;

/// Where `B_n` vanishes and how that bounds each sub-series.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TerminationReport {
    /// True when some `B_n`, `n ≥ 1`, vanishes exactly.
    pub terminated: bool,
    /// Every `n ≥ 1` with `B_n = 0`, ascending.
    pub zero_indices: Vec<usize>,
    /// For sub-series `k = 0, 1, ...` up to the last one that can meet a zero:
    /// the largest inner index before its `B`-product (started at 0) vanishes.
    pub inner_bounds: Vec<Option<usize>>,
    /// Sub-series within `inner_bounds` that never meet a zero factor. Every
    /// sub-series past `inner_bounds.len()` is open as well.
    pub open_levels: Vec<usize>,
}

/// Scans the numerator factors `(n-1+λ+α)(n-1+λ+β)` of `B_n` for exact zeros.
///
/// Sub-series `k` multiplies `B_{2i+k+1}`, so a zero at `n` bounds it at
/// `i = (n-k-1)/2` whenever `n-k-1` is even and non-negative.
pub fn detect_b_termination(params: &HeunParams, branch: &Branch) -> TerminationReport {
    let lambda = branch.lambda;
    let mut zero_indices: Vec<usize> = [params.alpha, params.beta]
        .iter()
        .filter_map(|&v| snapped_shift(v, lambda))
        .map(|shift| (1.0 - shift) as usize)
        .collect();
    zero_indices.sort_unstable();
    zero_indices.dedup();

    let levels = zero_indices.last().copied().unwrap_or(0);
    let inner_bounds: Vec<Option<usize>> = (0..levels)
        .map(|k| {
            zero_indices
                .iter()
                .find(|&&n| n > k && (n - k - 1) % 2 == 0)
                .map(|&n| (n - k - 1) / 2)
        })
        .collect();
    let open_levels = inner_bounds
        .iter()
        .enumerate()
        .filter(|(_, b)| b.is_none())
        .map(|(k, _)| k)
        .collect();

    TerminationReport {
        terminated: !zero_indices.is_empty(),
        zero_indices,
        inner_bounds,
        open_levels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{validate_params, BranchKind};
    use crate::recurrence::coeff_b;

    #[test]
    fn alpha_minus_two() {
        let p = validate_params(2.0, 1.0, -2.0, 2.0, 1.0, 1.0).unwrap();
        let r = detect_b_termination(&p, &Branch::first());
        assert!(r.terminated);
        assert_eq!(r.zero_indices, vec![3]);
        // 2β₀ + 1 = 3  =>  β₀ = 1 bounds the leading sub-series
        assert_eq!(r.inner_bounds, vec![Some(1), None, Some(0)]);
        assert_eq!(r.open_levels, vec![1]);
        assert_eq!(coeff_b(3, 0.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn alpha_minus_six_bounds_leading_sum_at_three() {
        let p = validate_params(2.0, 1.0, -6.0, 2.0, 1.0, 1.0).unwrap();
        let r = detect_b_termination(&p, &Branch::first());
        assert_eq!(r.inner_bounds[0], Some(3));
    }

    #[test]
    fn generic_parameters_do_not_terminate() {
        let p = validate_params(2.0, 1.0, 0.7, 1.3, 1.0, 1.0).unwrap();
        let r = detect_b_termination(&p, &Branch::first());
        assert!(!r.terminated);
        assert!(r.zero_indices.is_empty());
        assert!(r.inner_bounds.is_empty());
    }

    #[test]
    fn second_branch_pattern() {
        // α = -2α₀ - 1 + γ with α₀ = 1, γ = 0.5  =>  B_3 = 0 for λ = 1-γ
        let p = validate_params(2.0, 1.0, -2.5, 2.0, 0.5, 1.0).unwrap();
        let b = Branch::new(BranchKind::Second, &p).unwrap();
        let r = detect_b_termination(&p, &b);
        assert_eq!(r.zero_indices, vec![3]);
        assert_eq!(coeff_b(3, b.lambda, &p).unwrap(), 0.0);
    }

    #[test]
    fn both_sides_and_near_integer_entry() {
        let p = validate_params(2.0, 1.0, -2.0 + 1e-12, -3.0, 1.0, 1.0).unwrap();
        let r = detect_b_termination(&p, &Branch::first());
        assert_eq!(r.zero_indices, vec![3, 4]);
        assert_eq!(r.inner_bounds, vec![Some(1), Some(1), Some(0), Some(0)]);
        assert!(r.open_levels.is_empty());
    }
}
