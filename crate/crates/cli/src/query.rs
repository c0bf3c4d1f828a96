//! Query files: probability and expectation requests against one theory.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use gbf_core::measurement::{observable_expectation, probability, MeasurementOptions, Subspace};
use gbf_core::theory::TheorySpec;
use gbf_core::Result;

#[derive(Debug, Deserialize)]
pub struct QueryFile {
    pub queries: Vec<Query>,
}

/// One request. With `observable` set this asks for `⟨O⟩_S`; otherwise for
/// `P(A|S)`, where `A` defaults to `S`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Query {
    #[serde(default)]
    pub id: Option<String>,
    pub region: String,
    pub s: Vec<Vec<Complex64>>,
    #[serde(default)]
    pub a: Option<Vec<Vec<Complex64>>>,
    #[serde(default)]
    pub observable: Option<String>,
    #[serde(default)]
    pub relax_superselection: bool,
}

#[derive(Debug, Serialize)]
pub struct QueryResult {
    pub id: String,
    pub value: Value,
    pub defined: bool,
    pub deviation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl QueryResult {
    fn error(id: String, message: String) -> Self {
        Self {
            id,
            value: Value::Null,
            defined: false,
            deviation: 0.0,
            error: Some(message),
        }
    }
}

fn evaluate(theory: &TheorySpec, q: &Query, tol: f64) -> Result<(Value, bool, f64)> {
    let opts = MeasurementOptions {
        tol,
        strict_superselection: !q.relax_superselection,
    };
    let layout = theory.amplitude(&q.region)?.layout;
    let s = Subspace::span(layout.clone(), &q.s, tol)?;
    if let Some(obs) = &q.observable {
        let o = theory.observable(obs)?;
        if o.region != q.region {
            return Err(gbf_core::GbfError::InvalidArgument(format!(
                "observable `{obs}` lives on `{}`, not `{}`",
                o.region, q.region
            )));
        }
        let out = observable_expectation(theory, obs, &s, &opts)?;
        let value = out.value.map_or(Value::Null, |v| json!([v.re, v.im]));
        return Ok((value, out.defined, out.cross_check_deviation));
    }
    let a = match &q.a {
        Some(vectors) => Subspace::span(layout, vectors, tol)?,
        None => s.clone(),
    };
    let out = probability(theory, &q.region, &a, &s, &opts)?;
    Ok((out.value.map_or(Value::Null, |v| json!(v)), out.defined, out.cross_check_deviation))
}

/// Answer every query; a failing query is reported and the rest still run.
pub fn run(theory: &TheorySpec, file: &QueryFile, tol: f64) -> Vec<QueryResult> {
    file.queries
        .iter()
        .enumerate()
        .map(|(k, q)| {
            let id = q.id.clone().unwrap_or_else(|| format!("q{k}"));
            match evaluate(theory, q, tol) {
                Ok((value, defined, deviation)) => QueryResult {
                    id,
                    value,
                    defined,
                    deviation,
                    error: None,
                },
                Err(e) => QueryResult::error(id, e.to_string()),
            }
        })
        .collect()
}
