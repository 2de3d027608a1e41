//! Decides termination of affine integer loops
//! `while φ do x ← A·x + a` whose update matrix is triangular.
//!
//! The loop is chained so the matrix becomes non-negative triangular, its
//! iterates get an exact closed form as poly-exponential expressions in the
//! iteration count `n`, and eventual positivity of every guard atom is
//! reduced to a linear integer formula. The loop terminates iff that formula
//! is unsatisfiable; a model is an initial state from which the guard holds
//! forever after finitely many steps.
//!
//! ```
//! use triterm::{decide_termination, parse_loop, Verdict};
//!
//! let lp = parse_loop("vars: x y\nguard: x > 0\nupdate:\nx := x + y\ny := y - 1\n").unwrap();
//! assert_eq!(decide_termination(&lp).unwrap(), Verdict::Terminates);
//! ```

pub mod affine;
pub mod closedform;
pub mod decide;
mod error;
pub mod frontend;
pub mod omega;
pub mod oracle;
pub mod pe;
pub mod poly;
pub mod program;
pub mod records;
pub mod smtlib;

pub use affine::{AffineExpr, Rational, VarId};
pub use closedform::{chain, closed_form, normalize, ClosedForm};
pub use decide::{
    build_formula, decide_termination, decide_with, lia, marked_coeffs, sign_at_infinity,
    solve_lia, Analysis, Backend, DecideOptions, LiaFormula, LiaResult, LinConstraint, Verdict,
};
pub use error::{Error, EvalError};
pub use frontend::{parse_loop, parse_triangular, triangularize, ParsedLoop};
pub use oracle::{check_eventual_witness, lift_witness, simulate, EventualCheck, Trace};
pub use pe::{NormPolyExp, PolyExp};
pub use program::{Guard, IntMatrix, Loop};
pub use smtlib::export_smtlib;
