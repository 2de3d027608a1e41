use std::io::Write;
use std::process::{Command, Output, Stdio};

use num_bigint::BigInt;
use triterm::affine::int_assignment;
use triterm::records::{pe_from_records, ClosedFormRecord};
use triterm::{chain, closed_form, parse_triangular};

const LEADING: &str = "vars: w x y z\nguard: y + z > 0\nupdate:\nw := 2\nx := x + 1\ny := -w - 2*y\nz := x\n";
const EVENTUAL: &str = "vars: x y\nguard: x > 0\nupdate:\nx := x + y\ny := 1\n";
const CYCLIC: &str = "vars: a b\nguard: a > 0\nupdate:\na := b\nb := a\n";

fn triterm(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_triterm"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn leading_loop_terminates() {
    let o = triterm(&[], LEADING);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "TERMINATES\n");
}

#[test]
fn eventual_loop_reports_witness() {
    let o = triterm(&["--mode", "decide"], EVENTUAL);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("NONTERMINATES witness: x=0 y=0"));
    assert_eq!(out.lines().nth(1), Some("heuristic n0: 1"));
}

#[test]
fn input_from_file_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("eventual.loop");
    let output = dir.path().join("out.txt");
    std::fs::write(&input, EVENTUAL).unwrap();
    let o = triterm(
        &["--format", "records", "--output", output.to_str().unwrap(), input.to_str().unwrap()],
        "",
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    let rec: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&output).unwrap()).unwrap();
    assert_eq!(rec["verdict"], "nonterminates");
    assert_eq!(rec["witness"][0]["variable"], "x");
    assert_eq!(rec["witness"][1]["value"], "0");
    assert_eq!(rec["prefix"], 1);
}

#[test]
fn formula_mentions_degenerate_coefficient() {
    let o = triterm(&["--mode", "formula"], LEADING);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("1/2*w + y - 1/3 > 0"), "{}", stdout(&o));
}

#[test]
fn error_exit_codes() {
    assert_eq!(triterm(&[], "vars x\n").status.code(), Some(2));
    assert_eq!(triterm(&[], "vars: x\nguard: y > 0\nupdate:\nx := x\n").status.code(), Some(2));
    let o = triterm(&[], CYCLIC);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("a -> b -> a"));
    assert_eq!(triterm(&["/nonexistent/loop"], "").status.code(), Some(2));
    assert_eq!(triterm(&["--mode", "simulate", "--init", "1"], EVENTUAL).status.code(), Some(2));
}

#[test]
fn every_mode_is_byte_deterministic() {
    for mode in ["decide", "chain", "closed-form", "formula", "smtlib"] {
        for format in ["human", "records"] {
            let a = triterm(&["--mode", mode, "--format", format], LEADING);
            let b = triterm(&["--mode", mode, "--format", format], LEADING);
            assert_eq!(a.stdout, b.stdout, "{mode} {format}");
            assert!(!a.stdout.is_empty());
        }
    }
}

#[test]
fn chain_output_parses_back() {
    let o = triterm(&["--mode", "chain"], LEADING);
    let again = triterm(&["--mode", "chain"], &stdout(&o));
    assert_eq!(again.status.code(), Some(0));
    let chained = parse_triangular(&stdout(&o)).unwrap();
    assert_eq!(chained.internal, chain(&parse_triangular(LEADING).unwrap().internal));
}

#[test]
fn closed_form_records_round_trip() {
    for src in [LEADING, EVENTUAL] {
        let o = triterm(&["--mode", "closed-form", "--format", "records"], src);
        assert_eq!(o.status.code(), Some(0));
        let rec: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        let comps: Vec<ClosedFormRecord> = serde_json::from_value(rec["closed_form"].clone()).unwrap();

        let parsed = parse_triangular(src).unwrap();
        let nnt = chain(&parsed.internal);
        let cf = closed_form(&nnt).unwrap();
        let names = &nnt.var_names;
        for (i, comp) in comps.iter().enumerate() {
            let k = parsed.permutation[i];
            assert_eq!(comp.variable, names[k]);
            let back = pe_from_records(&comp.terms, names).unwrap();
            for c in [[3i64, -1, 4, 0], [-2, 5, 0, 7], [0, 0, 0, 0]] {
                let asg = int_assignment(&c[..names.len()].iter().map(|&v| BigInt::from(v)).collect::<Vec<_>>());
                for n in 0..12 {
                    assert_eq!(back.eval(n, &asg).unwrap(), cf.components[k].eval(n, &asg).unwrap());
                }
            }
        }
    }
}

#[test]
fn simulate_records() {
    let o = triterm(&["--mode", "simulate", "--format", "records", "--init", "-2,0", "--horizon", "5"], EVENTUAL);
    assert_eq!(o.status.code(), Some(0));
    let rec: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rec["states"][0], serde_json::json!(["-2", "0"]));
    assert_eq!(rec["halted"], true);
    assert_eq!(rec["guard"], serde_json::json!([false]));
}

fn fake_solver(dir: &std::path::Path, name: &str, reply: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, format!("test -f \"$1\" || exit 9\nprintf '{reply}'\n")).unwrap();
    format!("sh {}", path.display())
}

#[test]
fn external_solver_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let agrees = fake_solver(dir.path(), "unsat.sh", "unsat\\n");
    assert_eq!(triterm(&["--solver-cmd", &agrees], LEADING).status.code(), Some(0));
    // disagreement is an internal error
    let o = triterm(&["--solver-cmd", &agrees], EVENTUAL);
    assert_eq!(o.status.code(), Some(4));

    let model = fake_solver(dir.path(), "model.sh", "sat\\n((x 5)\\n (y (- 1)))\\n");
    assert_eq!(triterm(&["--solver-cmd", &model], EVENTUAL).status.code(), Some(1));
    // a model that does not satisfy the formula is rejected
    let bad = fake_solver(dir.path(), "bad.sh", "sat\\n((x 0))\\n");
    let constant = "vars: x\nguard: x > 0\nupdate:\nx := x\n";
    assert_eq!(triterm(&["--solver-cmd", &bad], constant).status.code(), Some(4));
    let garbage = fake_solver(dir.path(), "garbage.sh", "unknown\\n");
    assert_eq!(triterm(&["--solver-cmd", &garbage], EVENTUAL).status.code(), Some(4));
}

#[test]
fn real_solver_when_configured() {
    let Ok(cmd) = std::env::var("TRITERM_SMT_CMD") else { return };
    assert_eq!(triterm(&["--solver-cmd", &cmd], LEADING).status.code(), Some(0));
    assert_eq!(triterm(&["--solver-cmd", &cmd], EVENTUAL).status.code(), Some(1));
}
