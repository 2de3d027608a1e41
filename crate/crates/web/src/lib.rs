//! Browser bindings. Each export takes loop source text and returns a JSON
//! object with `"ok": true` and the result, or `"ok": false` and an error.

use std::str::FromStr;

use num_bigint::BigInt;
use serde::Serialize;
use triterm::decide::{Analysis, DecideOptions, Verdict};
use triterm::oracle::simulate;
use triterm::{parse_loop, triangularize, Error};
use wasm_bindgen::prelude::wasm_bindgen;

/// Longest trace the page will ask for.
pub const MAX_STEPS: u64 = 2_000;

#[derive(Serialize)]
struct Failure {
    ok: bool,
    kind: &'static str,
    error: String,
}

fn failure(kind: &'static str, error: impl ToString) -> String {
    json(&Failure { ok: false, kind, error: error.to_string() })
}

fn from_error(e: Error) -> String {
    let kind = match e {
        Error::Parse(_) => "parse",
        Error::NotTriangularizable(_) => "not_triangularizable",
        _ => "internal",
    };
    failure(kind, e)
}

fn json(v: &impl Serialize) -> String {
    serde_json::to_string(v).expect("results serialize")
}

fn analyze(src: &str) -> Result<Analysis, String> {
    let lp = parse_loop(src).map_err(|e| from_error(e.into()))?;
    let parsed = triangularize(&lp).map_err(|e| from_error(e.into()))?;
    Analysis::new(parsed).map_err(from_error)
}

#[derive(Serialize)]
struct Decision {
    ok: bool,
    terminates: bool,
    variables: Vec<String>,
    witness: Option<Vec<String>>,
    prefix: Option<u64>,
    chained: String,
    formula: String,
}

#[wasm_bindgen]
pub fn decide(src: &str) -> String {
    let a = match analyze(src) {
        Ok(a) => a,
        Err(e) => return e,
    };
    let verdict = match a.decide(&DecideOptions::default()) {
        Ok(v) => v,
        Err(e) => return from_error(e),
    };
    let (witness, prefix) = match verdict {
        Verdict::Terminates => (None, None),
        Verdict::NonTerminates { witness, prefix } => {
            (Some(witness.iter().map(|v| v.to_string()).collect()), prefix)
        }
    };
    let formula = a.formula.display(a.names()).to_string();
    json(&Decision {
        ok: true,
        terminates: witness.is_none(),
        variables: a.parsed.to_declared(a.names()),
        witness,
        prefix,
        chained: a.chained.to_string(),
        formula,
    })
}

#[derive(Serialize)]
struct Component {
    variable: String,
    closed_form: String,
    normalized: String,
}

#[derive(Serialize)]
struct ClosedForms {
    ok: bool,
    components: Vec<Component>,
}

#[wasm_bindgen]
pub fn closed_form(src: &str) -> String {
    let a = match analyze(src) {
        Ok(a) => a,
        Err(e) => return e,
    };
    let names = a.names();
    let components = a
        .parsed
        .permutation
        .iter()
        .map(|&k| Component {
            variable: names[k].clone(),
            closed_form: a.closed_form.components[k].display(names).to_string(),
            normalized: a.normalized[k].display(names).to_string(),
        })
        .collect();
    json(&ClosedForms { ok: true, components })
}

#[derive(Serialize)]
struct Run {
    ok: bool,
    variables: Vec<String>,
    states: Vec<Vec<String>>,
    guard: Vec<bool>,
    halted: bool,
}

/// `init` is comma separated in declaration order; `steps` is capped at
/// [`MAX_STEPS`].
#[wasm_bindgen]
pub fn trace(src: &str, init: &str, steps: u32) -> String {
    let lp = match parse_loop(src) {
        Ok(lp) => lp,
        Err(e) => return from_error(e.into()),
    };
    let c: Vec<BigInt> = match init.split(',').map(|v| BigInt::from_str(v.trim())).collect() {
        Ok(c) => c,
        Err(_) => return failure("input", format!("initial state {init:?} is not a list of integers")),
    };
    let t = match simulate(&lp, &c, u64::from(steps).min(MAX_STEPS)) {
        Ok(t) => t,
        Err(e) => return failure("input", e),
    };
    json(&Run {
        ok: true,
        variables: lp.var_names.clone(),
        halted: t.halted(),
        states: t
            .states
            .iter()
            .map(|s| s.iter().map(|v| v.to_string()).collect())
            .collect(),
        guard: t.guard_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    const EVENTUAL: &str = "vars: x y\nguard: x > 0\nupdate:\nx := x + y\ny := 1\n";

    fn parse(s: String) -> Value {
        serde_json::from_str(&s).unwrap()
    }

    #[test]
    fn decide_reports_witness_in_declaration_order() {
        let v = parse(decide(EVENTUAL));
        assert_eq!(v["ok"], true);
        assert_eq!(v["terminates"], false);
        assert_eq!(v["variables"], serde_json::json!(["x", "y"]));
        assert_eq!(v["witness"], serde_json::json!(["0", "0"]));
        assert_eq!(v["prefix"], 1);
    }

    #[test]
    fn errors_are_tagged() {
        assert_eq!(parse(decide("vars x"))["kind"], "parse");
        let cyc = "vars: a b\nguard: a > 0\nupdate:\na := b\nb := a\n";
        assert_eq!(parse(closed_form(cyc))["kind"], "not_triangularizable");
        assert_eq!(parse(trace(EVENTUAL, "1", 5))["kind"], "input");
        assert_eq!(parse(trace(EVENTUAL, "1,z", 5))["kind"], "input");
    }

    #[test]
    fn closed_forms_in_declaration_order() {
        let v = parse(closed_form(EVENTUAL));
        assert_eq!(v["components"][0]["variable"], "x");
        assert_eq!(v["components"][1]["normalized"], "1");
    }

    #[test]
    fn trace_is_capped() {
        let v = parse(trace(EVENTUAL, "1, 0", 1_000_000));
        assert_eq!(v["states"].as_array().unwrap().len() as u64, MAX_STEPS + 1);
        assert_eq!(v["halted"], false);
        let v = parse(trace(EVENTUAL, "-1,0", 10));
        assert_eq!(v["states"], serde_json::json!([["-1", "0"]]));
        assert_eq!(v["halted"], true);
    }
}
