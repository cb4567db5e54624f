//! JSON transformation tables.
//!
//! ```json
//! [{"name": "eq61",
//!   "prefactor": [{"base": "one_minus_x", "exponent": "1 - delta"}],
//!   "arg_map": {"p": "1", "r": "0", "s": "0", "t": "1"},
//!   "params": {"a": "a", "q": "q - (delta - 1)*gamma*a", "alpha": "beta - delta + 1",
//!              "beta": "alpha - delta + 1", "gamma": "gamma", "delta": "2 - delta"}}]
//! ```

use std::collections::HashSet;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{HeunError, Result};
use crate::params::HeunParams;

use super::{parse_param_expr, MobiusMap, ParamExpr, ParamMap, PrefactorBase, PrefactorTerm, TransformationRecord};

/// Generic parameters used to probe a loaded record for a degenerate
/// argument map: `(a, q, α, β, γ, δ)`.
pub const PROBE_PARAMS: [f64; 6] = [3.7, 0.41, 1.3, 2.9, 0.63, 0.27];

pub fn load_transformation_table(path: impl AsRef<Path>) -> Result<Vec<TransformationRecord>> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| HeunError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_transformation_table(&text)
}

pub fn parse_transformation_table(text: &str) -> Result<Vec<TransformationRecord>> {
    let root: Value = serde_json::from_str(text).map_err(|e| HeunError::Io(format!("invalid JSON: {e}")))?;
    let Value::Array(items) = root else {
        return Err(HeunError::Io("a transformation table must be a JSON array".into()));
    };
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(items.len());
    for (index, item) in items.iter().enumerate() {
        let rec = record(index, item)?;
        if !seen.insert(rec.name.clone()) {
            return Err(fail(index, "name", format!("duplicate record name `{}`", rec.name)));
        }
        out.push(rec);
    }
    Ok(out)
}

fn fail(index: usize, field: impl Into<String>, message: impl Into<String>) -> HeunError {
    HeunError::TableFormat {
        index,
        field: field.into(),
        message: message.into(),
    }
}

fn object<'a>(index: usize, field: &str, v: &'a Value, keys: &[&str]) -> Result<&'a Map<String, Value>> {
    let Value::Object(map) = v else {
        return Err(fail(index, field, "expected an object"));
    };
    if let Some(k) = map.keys().find(|k| !keys.contains(&k.as_str())) {
        return Err(fail(index, field, format!("unknown key `{k}`")));
    }
    Ok(map)
}

fn get<'a>(index: usize, field: &str, map: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    map.get(key).ok_or_else(|| fail(index, join(field, key), "missing"))
}

fn join(parent: &str, key: &str) -> String {
    if parent.is_empty() {
        key.to_string()
    } else {
        format!("{parent}.{key}")
    }
}

fn string<'a>(index: usize, field: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| fail(index, field, "expected a string"))
}

fn expression(index: usize, field: &str, v: &Value) -> Result<ParamExpr> {
    parse_param_expr(string(index, field, v)?).map_err(|e| fail(index, field, e.to_string()))
}

fn record(index: usize, v: &Value) -> Result<TransformationRecord> {
    let map = object(index, "", v, &["name", "prefactor", "arg_map", "params"])?;
    let name = string(index, "name", get(index, "", map, "name")?)?.to_string();

    let Value::Array(terms) = get(index, "", map, "prefactor")? else {
        return Err(fail(index, "prefactor", "expected an array"));
    };
    let mut prefactor = Vec::with_capacity(terms.len());
    for (i, term) in terms.iter().enumerate() {
        let field = format!("prefactor[{i}]");
        let t = object(index, &field, term, &["base", "exponent"])?;
        let base_field = join(&field, "base");
        let base_name = string(index, &base_field, get(index, &field, t, "base")?)?;
        let base = PrefactorBase::from_name(base_name)
            .ok_or_else(|| fail(index, &base_field, format!("unknown base `{base_name}`")))?;
        let exponent = expression(index, &join(&field, "exponent"), get(index, &field, t, "exponent")?)?;
        prefactor.push(PrefactorTerm { base, exponent });
    }

    let m = object(index, "arg_map", get(index, "", map, "arg_map")?, &["p", "r", "s", "t"])?;
    let coef = |k: &str| expression(index, &join("arg_map", k), get(index, "arg_map", m, k)?);
    let arg_map = MobiusMap {
        p: coef("p")?,
        r: coef("r")?,
        s: coef("s")?,
        t: coef("t")?,
    };

    let keys = ["a", "q", "alpha", "beta", "gamma", "delta"];
    let pm = object(index, "params", get(index, "", map, "params")?, &keys)?;
    let param = |k: &str| expression(index, &join("params", k), get(index, "params", pm, k)?);
    let params = ParamMap {
        a: param("a")?,
        q: param("q")?,
        alpha: param("alpha")?,
        beta: param("beta")?,
        gamma: param("gamma")?,
        delta: param("delta")?,
    };

    let mut rec = TransformationRecord {
        name,
        prefactor,
        arg_map,
        params,
        warnings: Vec::new(),
    };
    rec.warnings = probe_warnings(&rec);
    Ok(rec)
}

fn probe_warnings(rec: &TransformationRecord) -> Vec<String> {
    let [a, q, alpha, beta, gamma, delta] = PROBE_PARAMS;
    let probe = HeunParams::new(a, q, alpha, beta, gamma, delta).expect("valid probe parameters");
    let mut warnings = Vec::new();
    match rec.arg_map.eval(&probe) {
        Ok([p, r, s, t]) if p * t - r * s == 0.0 => {
            warnings.push("arg_map determinant p*t - r*s vanishes at the probe parameters".to_string())
        }
        Ok(_) => {}
        Err(e) => warnings.push(format!("arg_map does not evaluate at the probe parameters: {e}")),
    }
    if let Err(e) = rec.params.eval(&probe) {
        warnings.push(format!("params do not evaluate at the probe parameters: {e}"));
    }
    warnings
}
