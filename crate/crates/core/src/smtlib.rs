//! SMT-LIB 2 (QF_LIA) export and an optional external solver backend.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::process::Command;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::affine::{var_name, VarId};
use crate::decide::{ConstraintKind, LiaFormula, LinConstraint};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("empty solver command")]
    EmptyCommand,
    #[error("could not run solver: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver answered neither sat nor unsat: {0:?}")]
    UnexpectedOutput(String),
    #[error("malformed model from solver: {0}")]
    BadModel(String),
    #[error("solver model does not satisfy the formula")]
    InvalidModel,
    #[error("external solver disagrees with the built-in procedure (built-in says {})", if *.builtin { "sat" } else { "unsat" })]
    Disagreement { builtin: bool },
}

const RESERVED: &[&str] = &[
    "and", "assert", "distinct", "div", "exists", "false", "forall", "ite", "let", "mod", "not",
    "or", "true", "xor", "Int", "Bool", "abs", "par", "_", "!", "as",
];

fn symbol(name: &str) -> String {
    if RESERVED.contains(&name) {
        format!("|{name}|")
    } else {
        name.to_string()
    }
}

fn int_lit(k: &BigInt) -> String {
    if k.is_negative() {
        format!("(- {})", k.magnitude())
    } else {
        k.to_string()
    }
}

/// `lhs op rhs` with the constant moved to the right.
fn constraint_sexp(c: &LinConstraint, names: &[String]) -> String {
    let (coeffs, constant) = c
        .expr
        .clear_denominators()
        .integer_coeffs()
        .expect("cleared expression has integer coefficients");
    let terms: Vec<String> = coeffs
        .iter()
        .map(|(v, k)| {
            let name = symbol(&var_name(names, *v));
            if k.is_one() {
                name
            } else if (-k).is_one() {
                format!("(- {name})")
            } else {
                format!("(* {} {name})", int_lit(k))
            }
        })
        .collect();
    let lhs = match terms.len() {
        0 => "0".to_string(),
        1 => terms[0].clone(),
        _ => format!("(+ {})", terms.join(" ")),
    };
    let op = match c.kind {
        ConstraintKind::GreaterZero => ">",
        ConstraintKind::EqualZero => "=",
    };
    format!("({op} {lhs} {})", int_lit(&-constant))
}

fn nary(op: &str, mut items: Vec<String>) -> String {
    if items.len() == 1 {
        items.pop().expect("one item")
    } else {
        format!("({op} {})", items.join(" "))
    }
}

/// A QF_LIA script declaring one `Int` per entry of `names`, asserting `f`.
pub fn export_smtlib(f: &LiaFormula, names: &[String]) -> String {
    let mut out = String::from("(set-logic QF_LIA)\n");
    let dim = names.len().max(f.var_bound());
    for i in 0..dim {
        let _ = writeln!(out, "(declare-const {} Int)", symbol(&var_name(names, VarId(i))));
    }
    let body = if f.conjuncts.is_empty() {
        "true".to_string()
    } else {
        nary(
            "and",
            f.conjuncts
                .iter()
                .map(|dis| {
                    nary(
                        "or",
                        dis.iter()
                            .map(|con| {
                                if con.is_empty() {
                                    "true".to_string()
                                } else {
                                    nary("and", con.iter().map(|c| constraint_sexp(c, names)).collect())
                                }
                            })
                            .collect(),
                    )
                })
                .collect(),
        )
    };
    let _ = writeln!(out, "(assert {body})");
    out.push_str("(check-sat)\n(get-model)\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SmtAnswer {
    /// Values in variable order; variables the solver left out are 0.
    Sat(Vec<BigInt>),
    Unsat,
}

/// A solver invoked as `command... <script path>`.
#[derive(Debug, Clone)]
pub struct ExternalSolver {
    command: String,
}

impl ExternalSolver {
    pub fn new(command: &str) -> Self {
        ExternalSolver {
            command: command.to_string(),
        }
    }

    pub fn check(&self, script: &str, names: &[String]) -> Result<SmtAnswer, BackendError> {
        let mut parts = self.command.split_whitespace();
        let program = parts.next().ok_or(BackendError::EmptyCommand)?;
        let mut file = tempfile::Builder::new().suffix(".smt2").tempfile()?;
        file.write_all(script.as_bytes())?;
        file.flush()?;
        let output = Command::new(program).args(parts).arg(file.path()).output()?;
        let stdout = String::from_utf8_lossy(&output.stdout);
        parse_answer(&stdout, names)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn tokenize(s: &str) -> Vec<String> {
    let mut toks = Vec::new();
    let mut cur = String::new();
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' | ')' => {
                if !cur.is_empty() {
                    toks.push(std::mem::take(&mut cur));
                }
                toks.push(c.to_string());
            }
            '|' => {
                cur.push(c);
                for d in chars.by_ref() {
                    cur.push(d);
                    if d == '|' {
                        break;
                    }
                }
            }
            ';' => {
                for d in chars.by_ref() {
                    if d == '\n' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    toks.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        toks.push(cur);
    }
    toks
}

fn parse_sexps(toks: &[String]) -> Result<Vec<Sexp>, BackendError> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    for t in toks {
        match t.as_str() {
            "(" => stack.push(Vec::new()),
            ")" => {
                let list = stack.pop().expect("non-empty stack");
                stack
                    .last_mut()
                    .ok_or_else(|| BackendError::BadModel("unbalanced ')'".into()))?
                    .push(Sexp::List(list));
            }
            _ => stack.last_mut().expect("non-empty stack").push(Sexp::Atom(t.clone())),
        }
    }
    if stack.len() != 1 {
        return Err(BackendError::BadModel("unbalanced '('".into()));
    }
    Ok(stack.pop().expect("top level"))
}

fn int_value(e: &Sexp) -> Result<BigInt, BackendError> {
    match e {
        Sexp::Atom(a) => a
            .parse()
            .map_err(|_| BackendError::BadModel(format!("not an integer: {a}"))),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(op), v] if op == "-" => Ok(-int_value(v)?),
            _ => Err(BackendError::BadModel(format!("unsupported value {e:?}"))),
        },
    }
}

fn unquote(s: &str) -> &str {
    s.strip_prefix('|')
        .and_then(|s| s.strip_suffix('|'))
        .unwrap_or(s)
}

/// Collects `(define-fun v () Int k)` and `((v k) ...)` bindings anywhere in
/// the model.
fn collect(e: &Sexp, out: &mut BTreeMap<String, BigInt>) -> Result<(), BackendError> {
    let Sexp::List(items) = e else { return Ok(()) };
    match items.as_slice() {
        [Sexp::Atom(kw), Sexp::Atom(name), Sexp::List(args), Sexp::Atom(ty), value]
            if kw == "define-fun" && args.is_empty() && ty == "Int" =>
        {
            out.insert(unquote(name).to_string(), int_value(value)?);
        }
        [Sexp::Atom(name), value] if !name.starts_with(|c: char| c.is_ascii_digit()) && name != "-" => {
            if let Ok(v) = int_value(value) {
                out.insert(unquote(name).to_string(), v);
            }
        }
        _ => {
            for item in items {
                collect(item, out)?;
            }
        }
    }
    Ok(())
}

/// Interprets solver stdout: first token `sat`/`unsat`, then an optional
/// model.
pub fn parse_answer(stdout: &str, names: &[String]) -> Result<SmtAnswer, BackendError> {
    let toks = tokenize(stdout);
    match toks.first().map(String::as_str) {
        Some("unsat") => Ok(SmtAnswer::Unsat),
        Some("sat") => {
            let mut bindings = BTreeMap::new();
            for e in parse_sexps(&toks[1..])? {
                collect(&e, &mut bindings)?;
            }
            Ok(SmtAnswer::Sat(
                names
                    .iter()
                    .map(|n| bindings.get(n).cloned().unwrap_or_else(BigInt::zero))
                    .collect(),
            ))
        }
        _ => Err(BackendError::UnexpectedOutput(
            stdout.lines().next().unwrap_or("").to_string(),
        )),
    }
}
