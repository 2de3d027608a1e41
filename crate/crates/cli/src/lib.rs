//! Command-line driver: argument model, mode dispatch and output rendering.

use std::fmt::Write as _;
use std::io::Read;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use num_bigint::BigInt;
use serde::Serialize;
use triterm::decide::{Analysis, Backend, DecideOptions, Verdict};
use triterm::oracle::{simulate, DEFAULT_HORIZON};
use triterm::records::{pe_records, ClosedFormRecord};
use triterm::{export_smtlib, parse_loop, triangularize, Error, Loop};

pub const EXIT_TERMINATES: i32 = 0;
pub const EXIT_NONTERMINATES: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_TRIANGULAR: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

/// Steps simulated by `--mode simulate` when no horizon is given.
pub const SIMULATE_HORIZON: u64 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Decide,
    Chain,
    ClosedForm,
    Formula,
    Smtlib,
    Simulate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Records,
}

/// Decide termination of triangular affine integer loops.
#[derive(Clone, Debug, Parser)]
#[command(name = "triterm", version)]
pub struct RunConfig {
    /// Loop file; reads standard input when absent or "-".
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "decide")]
    pub mode: Mode,
    /// `records` prints one JSON object per line.
    #[arg(long, value_enum, default_value = "human")]
    pub format: Format,
    /// SMT-LIB solver to run alongside the built-in one, e.g. "z3 -smt2".
    #[arg(long)]
    pub solver_cmd: Option<String>,
    /// Steps to simulate (default 10000 for decide, 100 for simulate).
    #[arg(long)]
    pub horizon: Option<u64>,
    /// Initial state for simulate, comma separated in declaration order.
    #[arg(long, allow_hyphen_values = true)]
    pub init: Option<String>,
    /// Write results here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// What a run produced; `main` decides where it goes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(code: i32, stdout: String) -> Self {
        Outcome { code, stdout, stderr: String::new() }
    }

    fn fail(code: i32, msg: impl std::fmt::Display) -> Self {
        Outcome { code, stdout: String::new(), stderr: format!("error: {msg}\n") }
    }
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) => EXIT_INPUT,
        Error::NotTriangularizable(_) => EXIT_NOT_TRIANGULAR,
        _ => EXIT_INTERNAL,
    }
}

struct Failure(i32, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(error_code(&e), e.to_string())
    }
}

#[derive(Serialize)]
struct Binding {
    variable: String,
    value: String,
}

fn bindings(names: &[String], values: &[BigInt]) -> Vec<Binding> {
    names
        .iter()
        .zip(values)
        .map(|(n, v)| Binding { variable: n.clone(), value: v.to_string() })
        .collect()
}

#[derive(Serialize)]
struct FormulaRecord {
    text: String,
    /// Conjunction over guard atoms of disjunctions of conjunctions.
    conjuncts: Vec<Vec<Vec<String>>>,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record {
    Decide {
        verdict: &'static str,
        witness: Option<Vec<Binding>>,
        prefix: Option<u64>,
        permutation: Vec<usize>,
    },
    Chain {
        permutation: Vec<usize>,
        program: String,
    },
    ClosedForm {
        permutation: Vec<usize>,
        closed_form: Vec<ClosedFormRecord>,
    },
    Formula {
        permutation: Vec<usize>,
        formula: FormulaRecord,
    },
    Smtlib {
        script: String,
    },
    Simulate {
        variables: Vec<String>,
        states: Vec<Vec<String>>,
        guard: Vec<bool>,
        halted: bool,
    },
}

fn to_line(r: &Record) -> String {
    let mut s = serde_json::to_string(r).expect("records serialize");
    s.push('\n');
    s
}

fn read_input(config: &RunConfig, stdin: &mut dyn Read) -> Result<String, Failure> {
    let mut text = String::new();
    match &config.input {
        Some(p) if p.as_os_str() != "-" => {
            text = std::fs::read_to_string(p)
                .map_err(|e| Failure(EXIT_INPUT, format!("{}: {e}", p.display())))?;
        }
        _ => {
            stdin
                .read_to_string(&mut text)
                .map_err(|e| Failure(EXIT_INPUT, format!("stdin: {e}")))?;
        }
    }
    Ok(text)
}

fn parse_init(s: &str, dim: usize) -> Result<Vec<BigInt>, Failure> {
    let values = s
        .split(',')
        .map(|v| BigInt::from_str(v.trim()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| Failure(EXIT_INPUT, format!("--init: expected comma separated integers, got {s:?}")))?;
    if values.len() != dim {
        return Err(Failure(
            EXIT_INPUT,
            format!("--init: loop has {dim} variables, got {} values", values.len()),
        ));
    }
    Ok(values)
}

/// Runs one invocation against the given standard input.
pub fn run(config: &RunConfig, stdin: &mut dyn Read) -> Outcome {
    match execute(config, stdin) {
        Ok((code, out)) => Outcome::ok(code, out),
        Err(Failure(code, msg)) => Outcome::fail(code, msg),
    }
}

fn execute(config: &RunConfig, stdin: &mut dyn Read) -> Result<(i32, String), Failure> {
    let text = read_input(config, stdin)?;
    let lp = parse_loop(&text).map_err(Error::from)?;
    if config.mode == Mode::Simulate {
        return run_simulate(config, &lp);
    }
    let parsed = triangularize(&lp).map_err(Error::from)?;
    let analysis = Analysis::new(parsed)?;
    let records = config.format == Format::Records;
    let permutation = analysis.parsed.permutation.clone();
    let names = analysis.names();
    let out = match config.mode {
        Mode::Decide => return run_decide(config, &lp, &analysis),
        Mode::Chain => {
            let program = analysis.chained.to_string();
            if records {
                to_line(&Record::Chain { permutation, program })
            } else {
                program
            }
        }
        Mode::ClosedForm => {
            let cf = &analysis.closed_form.components;
            if records {
                let closed_form = permutation
                    .iter()
                    .map(|&k| ClosedFormRecord {
                        variable: names[k].clone(),
                        text: cf[k].display(names).to_string(),
                        normalized: analysis.normalized[k].display(names).to_string(),
                        terms: pe_records(&cf[k], names),
                    })
                    .collect();
                to_line(&Record::ClosedForm { permutation, closed_form })
            } else {
                let mut s = String::new();
                for &k in &permutation {
                    let _ = writeln!(s, "{}(n) = {}", names[k], cf[k].display(names));
                    let _ = writeln!(s, "{}(n) ~ {}", names[k], analysis.normalized[k].display(names));
                }
                s
            }
        }
        Mode::Formula => {
            let f = &analysis.formula;
            let text = f.display(names).to_string();
            if records {
                let conjuncts = f
                    .conjuncts
                    .iter()
                    .map(|dis| {
                        dis.iter()
                            .map(|con| con.iter().map(|c| c.display(names).to_string()).collect())
                            .collect()
                    })
                    .collect();
                to_line(&Record::Formula { permutation, formula: FormulaRecord { text, conjuncts } })
            } else {
                text + "\n"
            }
        }
        Mode::Smtlib => {
            let script = export_smtlib(&analysis.formula, names);
            if records {
                to_line(&Record::Smtlib { script })
            } else {
                script
            }
        }
        Mode::Simulate => unreachable!("handled above"),
    };
    Ok((EXIT_TERMINATES, out))
}

fn run_decide(config: &RunConfig, lp: &Loop, analysis: &Analysis) -> Result<(i32, String), Failure> {
    let opts = DecideOptions {
        backend: config.solver_cmd.clone().map_or(Backend::Builtin, Backend::External),
        horizon: config.horizon.unwrap_or(DEFAULT_HORIZON),
        ..DecideOptions::default()
    };
    let verdict = analysis.decide(&opts)?;
    let permutation = analysis.parsed.permutation.clone();
    let code = if verdict.terminates() { EXIT_TERMINATES } else { EXIT_NONTERMINATES };
    let out = match (&verdict, config.format) {
        (Verdict::Terminates, Format::Human) => "TERMINATES\n".to_string(),
        (Verdict::NonTerminates { witness, prefix }, Format::Human) => {
            let assignment: Vec<String> = lp
                .var_names
                .iter()
                .zip(witness)
                .map(|(n, v)| format!("{n}={v}"))
                .collect();
            let n0 = match prefix {
                Some(n0) => n0.to_string(),
                None => format!("unknown within {} steps", opts.horizon),
            };
            format!("NONTERMINATES witness: {}\nheuristic n0: {n0}\n", assignment.join(" "))
        }
        (Verdict::Terminates, Format::Records) => to_line(&Record::Decide {
            verdict: "terminates",
            witness: None,
            prefix: None,
            permutation,
        }),
        (Verdict::NonTerminates { witness, prefix }, Format::Records) => to_line(&Record::Decide {
            verdict: "nonterminates",
            witness: Some(bindings(&lp.var_names, witness)),
            prefix: *prefix,
            permutation,
        }),
    };
    Ok((code, out))
}

fn run_simulate(config: &RunConfig, lp: &Loop) -> Result<(i32, String), Failure> {
    let init = config
        .init
        .as_deref()
        .ok_or_else(|| Failure(EXIT_INPUT, "--mode simulate needs --init".into()))?;
    let c = parse_init(init, lp.dim())?;
    let horizon = config.horizon.unwrap_or(SIMULATE_HORIZON);
    let trace = simulate(lp, &c, horizon).expect("dimension checked");
    let out = match config.format {
        Format::Records => to_line(&Record::Simulate {
            variables: lp.var_names.clone(),
            states: trace
                .states
                .iter()
                .map(|s| s.iter().map(|v| v.to_string()).collect())
                .collect(),
            guard: trace.guard_holds.clone(),
            halted: trace.halted(),
        }),
        Format::Human => {
            let mut header = vec!["n".to_string()];
            header.extend(lp.var_names.iter().cloned());
            header.push("guard".into());
            let mut rows = vec![header];
            for (i, (s, g)) in trace.states.iter().zip(&trace.guard_holds).enumerate() {
                let mut row = vec![i.to_string()];
                row.extend(s.iter().map(|v| v.to_string()));
                row.push(if *g { "true" } else { "false" }.into());
                rows.push(row);
            }
            let widths: Vec<usize> = (0..rows[0].len())
                .map(|j| rows.iter().map(|r| r[j].len()).max().unwrap_or(0))
                .collect();
            let mut s = String::new();
            for r in &rows {
                let cells: Vec<String> =
                    r.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
                let _ = writeln!(s, "{}", cells.join("  ").trim_end());
            }
            if trace.halted() {
                let _ = writeln!(s, "exited after {} steps", trace.len() - 1);
            } else {
                let _ = writeln!(s, "guard held for {horizon} steps");
            }
            s
        }
    };
    Ok((EXIT_TERMINATES, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(args: &[&str]) -> RunConfig {
        RunConfig::try_parse_from(std::iter::once("triterm").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn init_parsing() {
        assert_eq!(parse_init(" 3, -1", 2).ok().unwrap(), vec![BigInt::from(3), BigInt::from(-1)]);
        assert_eq!(parse_init("3", 2).err().unwrap().0, EXIT_INPUT);
        assert_eq!(parse_init("3,x", 2).err().unwrap().0, EXIT_INPUT);
    }

    #[test]
    fn defaults() {
        let c = config(&[]);
        assert_eq!(c.mode, Mode::Decide);
        assert_eq!(c.format, Format::Human);
        assert!(c.input.is_none());
        let c = config(&["--mode", "closed-form", "--init", "-3,4", "f.loop"]);
        assert_eq!(c.mode, Mode::ClosedForm);
        assert_eq!(c.init.as_deref(), Some("-3,4"));
    }

    #[test]
    fn simulate_table() {
        let src = "vars: x y\nguard: x > 0\nupdate:\nx := x + y\ny := y - 1\n";
        let out = run(&config(&["--mode", "simulate", "--init", "3,1"]), &mut src.as_bytes());
        assert_eq!(out.code, 0);
        let lines: Vec<&str> = out.stdout.lines().collect();
        assert_eq!(lines[0], "n   x   y  guard");
        assert_eq!(lines[6], "5  -2  -4  false");
        assert_eq!(lines[7], "exited after 5 steps");
    }

    #[test]
    fn simulate_needs_init() {
        let src = "vars: x\nguard: x > 0\nupdate:\nx := x - 1\n";
        let out = run(&config(&["--mode", "simulate"]), &mut src.as_bytes());
        assert_eq!(out.code, EXIT_INPUT);
        assert!(out.stderr.contains("--init"));
    }
}
