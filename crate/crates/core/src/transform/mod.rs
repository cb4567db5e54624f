//! Local-solution transformations: `y(x) = Π b_i(x)^{e_i} · H(params'; m(x))`
//! with `b_i` drawn from `x`, `1-x`, `a-x`, `1-x/a` and `m` a Möbius map.

mod expr;
mod table;

pub use expr::{parse_param_expr, BinOp, ExprError, ParamExpr, Symbol};
pub use table::{load_transformation_table, parse_transformation_table, PROBE_PARAMS};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{HeunError, Result};
use crate::params::{real_pow, Branch, BranchKind, HeunParams, SeriesValue};
use crate::trf::{trf_eval_infinite, TrfTruncation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefactorBase {
    X,
    OneMinusX,
    AMinusX,
    OneMinusXOverA,
}

impl PrefactorBase {
    pub const ALL: [PrefactorBase; 4] = [
        PrefactorBase::X,
        PrefactorBase::OneMinusX,
        PrefactorBase::AMinusX,
        PrefactorBase::OneMinusXOverA,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrefactorBase::X => "x",
            PrefactorBase::OneMinusX => "one_minus_x",
            PrefactorBase::AMinusX => "a_minus_x",
            PrefactorBase::OneMinusXOverA => "one_minus_x_over_a",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == s)
    }

    /// The base as `u + v·x`.
    fn linear(self, a: f64) -> (f64, f64) {
        match self {
            PrefactorBase::X => (0.0, 1.0),
            PrefactorBase::OneMinusX => (1.0, -1.0),
            PrefactorBase::AMinusX => (a, -1.0),
            PrefactorBase::OneMinusXOverA => (1.0, -1.0 / a),
        }
    }
}

impl fmt::Display for PrefactorBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrefactorTerm {
    pub base: PrefactorBase,
    pub exponent: ParamExpr,
}

/// `x ↦ (p·x + r) / (s·x + t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MobiusMap {
    pub p: ParamExpr,
    pub r: ParamExpr,
    pub s: ParamExpr,
    pub t: ParamExpr,
}

impl MobiusMap {
    pub fn identity() -> Self {
        MobiusMap {
            p: ParamExpr::num(1.0),
            r: ParamExpr::num(0.0),
            s: ParamExpr::num(0.0),
            t: ParamExpr::num(1.0),
        }
    }

    pub fn eval(&self, params: &HeunParams) -> Result<[f64; 4]> {
        Ok([
            self.p.eval(params)?,
            self.r.eval(params)?,
            self.s.eval(params)?,
            self.t.eval(params)?,
        ])
    }
}

/// Inner parameters as expressions in the outer ones. `ε` is always
/// re-derived from the mapped values.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamMap {
    pub a: ParamExpr,
    pub q: ParamExpr,
    pub alpha: ParamExpr,
    pub beta: ParamExpr,
    pub gamma: ParamExpr,
    pub delta: ParamExpr,
}

impl ParamMap {
    pub fn identity() -> Self {
        ParamMap {
            a: ParamExpr::Sym(Symbol::A),
            q: ParamExpr::Sym(Symbol::Q),
            alpha: ParamExpr::Sym(Symbol::Alpha),
            beta: ParamExpr::Sym(Symbol::Beta),
            gamma: ParamExpr::Sym(Symbol::Gamma),
            delta: ParamExpr::Sym(Symbol::Delta),
        }
    }

    pub fn eval(&self, params: &HeunParams) -> Result<HeunParams> {
        HeunParams::new(
            self.a.eval(params)?,
            self.q.eval(params)?,
            self.alpha.eval(params)?,
            self.beta.eval(params)?,
            self.gamma.eval(params)?,
            self.delta.eval(params)?,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformationRecord {
    pub name: String,
    pub prefactor: Vec<PrefactorTerm>,
    pub arg_map: MobiusMap,
    pub params: ParamMap,
    /// Validation notes attached at load time (e.g. a degenerate Möbius map
    /// at the probe parameters).
    pub warnings: Vec<String>,
}

fn expr(s: &str) -> ParamExpr {
    parse_param_expr(s).expect("built-in expression")
}

/// `Hl(a, q, α, β, γ, δ; x)` itself.
pub fn identity_record() -> TransformationRecord {
    TransformationRecord {
        name: "identity".into(),
        prefactor: Vec::new(),
        arg_map: MobiusMap::identity(),
        params: ParamMap::identity(),
        warnings: Vec::new(),
    }
}

/// `(1-x)^{1-δ} Hl(a, q - (δ-1)γa, β-δ+1, α-δ+1, γ, 2-δ; x)`.
pub fn eq61_record() -> TransformationRecord {
    TransformationRecord {
        name: "eq61".into(),
        prefactor: vec![PrefactorTerm {
            base: PrefactorBase::OneMinusX,
            exponent: expr("1 - delta"),
        }],
        arg_map: MobiusMap::identity(),
        params: ParamMap {
            q: expr("q - (delta - 1)*gamma*a"),
            alpha: expr("beta - delta + 1"),
            beta: expr("alpha - delta + 1"),
            delta: expr("2 - delta"),
            ..ParamMap::identity()
        },
        warnings: Vec::new(),
    }
}

/// Looks up a built-in record by name (`identity`, `eq61`).
pub fn builtin_record(name: &str) -> Option<TransformationRecord> {
    match name {
        "identity" => Some(identity_record()),
        "eq61" => Some(eq61_record()),
        _ => None,
    }
}

/// A record bound to concrete outer parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AppliedTransformation {
    /// Parameters of the inner Heun call.
    pub params: HeunParams,
    /// Evaluated `(base, exponent)` pairs; zero exponents are dropped.
    pub prefactor: Vec<(PrefactorBase, f64)>,
    /// Evaluated `(p, r, s, t)`.
    pub mobius: [f64; 4],
    outer_a: f64,
}

/// Binds a record to `params`: evaluates the parameter map, exponents and
/// Möbius coefficients.
pub fn apply_transformation(rec: &TransformationRecord, params: &HeunParams) -> Result<AppliedTransformation> {
    let mapped = rec.params.eval(params)?;
    let mut prefactor = Vec::with_capacity(rec.prefactor.len());
    for term in &rec.prefactor {
        let e = term.exponent.eval(params)?;
        if !e.is_finite() {
            return Err(HeunError::Transformation(format!("non-finite exponent for base {}", term.base)));
        }
        if e != 0.0 {
            prefactor.push((term.base, e));
        }
    }
    let mobius = rec.arg_map.eval(params)?;
    let [p, r, s, t] = mobius;
    if p * t - r * s == 0.0 {
        return Err(HeunError::Transformation(format!(
            "record `{}`: argument map is degenerate (p·t - r·s = 0)",
            rec.name
        )));
    }
    Ok(AppliedTransformation {
        params: mapped,
        prefactor,
        mobius,
        outer_a: params.a,
    })
}

impl AppliedTransformation {
    /// Prefactor value with first and second derivatives in `x`.
    pub fn prefactor_at(&self, x: f64) -> Result<(f64, f64, f64)> {
        let (mut value, mut log_d1, mut log_d1_prime) = (1.0, 0.0, 0.0);
        for &(base, e) in &self.prefactor {
            let (u, v) = base.linear(self.outer_a);
            let b = u + v * x;
            if b == 0.0 {
                return Err(HeunError::SingularPoint(x));
            }
            value *= real_pow(b, e).ok_or_else(|| {
                HeunError::Domain(format!("prefactor {base}^{e} is not real at x = {x}"))
            })?;
            log_d1 += e * v / b;
            log_d1_prime -= e * v * v / (b * b);
        }
        Ok((value, value * log_d1, value * (log_d1 * log_d1 + log_d1_prime)))
    }

    /// Mapped argument with first and second derivatives in `x`.
    pub fn argument_at(&self, x: f64) -> Result<(f64, f64, f64)> {
        let [p, r, s, t] = self.mobius;
        let den = s * x + t;
        if den == 0.0 {
            return Err(HeunError::Domain(format!("argument map has a pole at x = {x}")));
        }
        let det = p * t - r * s;
        // the identity map stays exact
        let m = if s == 0.0 && t == 1.0 && r == 0.0 { p * x } else { (p * x + r) / den };
        Ok((m, det / (den * den), -2.0 * s * det / (den * den * den)))
    }
}

/// `prefactor(x) · H(params'; m(x))` by the infinite-series form, with
/// derivatives by the product and chain rules.
pub fn transformed_eval(
    rec: &TransformationRecord,
    params: &HeunParams,
    kind: BranchKind,
    x: f64,
    trunc: &TrfTruncation,
) -> Result<SeriesValue> {
    let applied = apply_transformation(rec, params)?;
    let branch = Branch::new(kind, &applied.params)?;
    let (m, m1, m2) = applied.argument_at(x)?;
    let (f, f1, f2) = applied.prefactor_at(x)?;
    let h = trf_eval_infinite(&applied.params, &branch, m, trunc)?;
    let (hx, hxx) = (h.d1 * m1, h.d2 * m1 * m1 + h.d1 * m2);
    Ok(SeriesValue {
        value: f * h.value,
        d1: f1 * h.value + f * hx,
        d2: f2 * h.value + 2.0 * f1 * hx + f * hxx,
        terms_used: h.terms_used,
        error_estimate: f.abs() * h.error_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::validate_params;
    use crate::verify::{ode_residual, residual_scale};

    fn pstar() -> HeunParams {
        validate_params(2.0, 1.0, 1.0, 2.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn eq61_parameter_map() {
        let p = validate_params(3.0, 0.5, 1.0, 1.5, 0.8, 0.4).unwrap();
        let t = apply_transformation(&eq61_record(), &p).unwrap();
        let m = t.params;
        assert_eq!((m.a, m.gamma), (3.0, 0.8));
        assert!((m.q - (0.5 + 0.6 * 0.8 * 3.0)).abs() < 1e-15);
        assert!((m.alpha - 2.1).abs() < 1e-15);
        assert!((m.beta - 1.6).abs() < 1e-15);
        assert!((m.delta - 1.6).abs() < 1e-15);
        assert!((m.epsilon() - p.epsilon()).abs() < 1e-14);
        assert_eq!(t.prefactor.len(), 1);
        assert!((t.prefactor[0].1 - 0.6).abs() < 1e-15);
        assert_eq!(t.argument_at(0.3).unwrap(), (0.3, 1.0, 0.0));
    }

    #[test]
    fn eq61_with_unit_delta_swaps_alpha_beta() {
        let p = pstar();
        let t = apply_transformation(&eq61_record(), &p).unwrap();
        assert_eq!(t.params, validate_params(2.0, 1.0, 2.0, 1.0, 1.0, 1.0).unwrap());
        assert!(t.prefactor.is_empty());
        assert_eq!(t.prefactor_at(0.4).unwrap(), (1.0, 0.0, 0.0));

        let trunc = TrfTruncation::default();
        let plain = trf_eval_infinite(&p, &Branch::first(), 0.1, &trunc).unwrap();
        let v = transformed_eval(&eq61_record(), &p, BranchKind::First, 0.1, &trunc).unwrap();
        assert!((v.value - plain.value).abs() <= 1e-12);
    }

    #[test]
    fn identity_is_exact() {
        let p = pstar();
        let trunc = TrfTruncation::default();
        let plain = trf_eval_infinite(&p, &Branch::first(), 0.1, &trunc).unwrap();
        let v = transformed_eval(&identity_record(), &p, BranchKind::First, 0.1, &trunc).unwrap();
        assert_eq!(v, plain);
    }

    #[test]
    fn eq61_is_involution() {
        let p = validate_params(3.0, 0.5, 1.0, 1.5, 0.8, 0.4).unwrap();
        let once = apply_transformation(&eq61_record(), &p).unwrap().params;
        let twice = apply_transformation(&eq61_record(), &once).unwrap().params;
        for (u, v) in [
            (p.q, twice.q),
            (p.alpha, twice.alpha),
            (p.beta, twice.beta),
            (p.gamma, twice.gamma),
            (p.delta, twice.delta),
        ] {
            assert!((u - v).abs() <= 1e-13);
        }
    }

    #[test]
    fn eq61_solves_the_original_equation() {
        let p = validate_params(3.0, 0.5, 1.0, 1.5, 0.8, 0.4).unwrap();
        let trunc = TrfTruncation::default();
        for kind in [BranchKind::First, BranchKind::Second] {
            for x in [0.05, 0.2, 0.3] {
                let v = transformed_eval(&eq61_record(), &p, kind, x, &trunc).unwrap();
                let r = ode_residual(&p, x, v.value, v.d1, v.d2).unwrap();
                let scale = residual_scale(&p, x, v.value, v.d1, v.d2);
                assert!(r.abs() <= 1e-8 * scale, "{kind} x={x}: {r}");
            }
        }
    }

    #[test]
    fn mobius_and_prefactor_derivatives() {
        let p = validate_params(3.0, 0.5, 1.0, 1.5, 0.8, 0.4).unwrap();
        let rec = TransformationRecord {
            name: "probe".into(),
            prefactor: vec![
                PrefactorTerm {
                    base: PrefactorBase::X,
                    exponent: expr("1 - gamma"),
                },
                PrefactorTerm {
                    base: PrefactorBase::OneMinusXOverA,
                    exponent: expr("delta"),
                },
                PrefactorTerm {
                    base: PrefactorBase::AMinusX,
                    exponent: expr("-2"),
                },
            ],
            arg_map: MobiusMap {
                p: expr("2"),
                r: expr("1"),
                s: expr("1"),
                t: expr("a"),
            },
            params: ParamMap::identity(),
            warnings: Vec::new(),
        };
        let t = apply_transformation(&rec, &p).unwrap();
        let x = 0.37;
        let h = 1e-4;
        for f in [
            &(|x| t.prefactor_at(x).unwrap()) as &dyn Fn(f64) -> (f64, f64, f64),
            &|x| t.argument_at(x).unwrap(),
        ] {
            let (v, d1, d2) = f(x);
            let (vp, d1p, _) = f(x + h);
            let (vm, d1m, _) = f(x - h);
            assert!((d1 - (vp - vm) / (2.0 * h)).abs() <= 1e-7 * (1.0 + d1.abs()));
            assert!((d2 - (d1p - d1m) / (2.0 * h)).abs() <= 1e-6 * (1.0 + d2.abs()));
            assert!(v.is_finite());
        }
    }

    #[test]
    fn degenerate_map_is_rejected() {
        let mut rec = identity_record();
        rec.arg_map.t = expr("0");
        assert!(matches!(
            apply_transformation(&rec, &pstar()),
            Err(HeunError::Transformation(_))
        ));
    }
}
