//! Reduction of termination to integer satisfiability: marked coefficients,
//! `lia(p)`, formula assembly, solving, and the verdict.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};

use crate::affine::AffineExpr;
use crate::closedform::{chain, closed_form, ClosedForm};
use crate::error::Error;
use crate::frontend::{triangularize, ParsedLoop};
use crate::omega::{IntConstraint, Omega, Relation, SolverError, DEFAULT_BUDGET};
use crate::oracle::{check_eventual_witness, EventualCheck, DEFAULT_HORIZON};
use crate::pe::NormPolyExp;
use crate::program::Loop;
use crate::smtlib::{export_smtlib, BackendError, ExternalSolver, SmtAnswer};

/// A coefficient `α` of an NPE tagged with its growth `(b, a)` of `n^a·bⁿ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedCoeff {
    pub alpha: AffineExpr,
    pub base: BigUint,
    pub npow: u32,
}

impl MarkedCoeff {
    /// `≻`: base first, then power.
    pub fn growth_cmp(&self, other: &MarkedCoeff) -> Ordering {
        (&self.base, self.npow).cmp(&(&other.base, other.npow))
    }
}

/// Marked coefficients of `p`, strictly descending by growth. The empty sum
/// has the single coefficient `0^(1,0)`.
pub fn marked_coeffs(p: &NormPolyExp) -> Vec<MarkedCoeff> {
    if p.is_zero() {
        return vec![MarkedCoeff {
            alpha: AffineExpr::zero(),
            base: BigUint::one(),
            npow: 0,
        }];
    }
    // NPE terms are already sorted descending by (base, npow)
    p.terms()
        .iter()
        .map(|t| MarkedCoeff {
            alpha: t.alpha.clone(),
            base: t.base.clone(),
            npow: t.npow,
        })
        .collect()
}

/// Sign of `lim_{n→∞} p` for a variable-free `p`: the sign of its fastest
/// growing coefficient.
pub fn sign_at_infinity(p: &NormPolyExp) -> Ordering {
    assert!(p.is_ground(), "sign_at_infinity needs an instantiated expression");
    let top = &marked_coeffs(p)[0];
    top.alpha.constant_term().cmp(&Zero::zero())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    GreaterZero,
    EqualZero,
}

/// `expr > 0` or `expr = 0` over rationals; denominators are cleared when the
/// constraint reaches the solver.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinConstraint {
    pub expr: AffineExpr,
    pub kind: ConstraintKind,
}

impl LinConstraint {
    pub fn gt(expr: AffineExpr) -> Self {
        LinConstraint {
            expr,
            kind: ConstraintKind::GreaterZero,
        }
    }

    pub fn eq(expr: AffineExpr) -> Self {
        LinConstraint {
            expr,
            kind: ConstraintKind::EqualZero,
        }
    }

    pub fn holds(&self, state: &[BigInt]) -> bool {
        let v = self.expr.eval_int(state);
        match self.kind {
            ConstraintKind::GreaterZero => v.is_positive(),
            ConstraintKind::EqualZero => v.is_zero(),
        }
    }

    /// Truth value when no variable occurs.
    pub fn ground_value(&self) -> Option<bool> {
        self.expr.is_ground().then(|| self.holds(&[]))
    }

    /// Integer form: `α > 0` becomes `lcm·α - 1 >= 0`.
    pub fn to_int(&self) -> IntConstraint {
        let (coeffs, constant) = self
            .expr
            .clear_denominators()
            .integer_coeffs()
            .expect("cleared expression has integer coefficients");
        let coeffs = coeffs.into_iter().map(|(v, c)| (v.index(), c)).collect();
        match self.kind {
            ConstraintKind::GreaterZero => {
                IntConstraint::new(coeffs, constant - BigInt::one(), Relation::Geq)
            }
            ConstraintKind::EqualZero => IntConstraint::new(coeffs, constant, Relation::Eq),
        }
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        ConstraintDisplay { c: self, names }
    }
}

struct ConstraintDisplay<'a> {
    c: &'a LinConstraint,
    names: &'a [String],
}

impl fmt::Display for ConstraintDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.c.kind {
            ConstraintKind::GreaterZero => ">",
            ConstraintKind::EqualZero => "=",
        };
        write!(f, "{} {op} 0", self.c.expr.display(self.names))
    }
}

/// A conjunction of [`LinConstraint`]s.
pub type Disjunct = Vec<LinConstraint>;

/// `lia(p) = ⋁_j (α_j > 0 ∧ ⋀_{i<j} α_i = 0)` over the marked coefficients
/// of `p` in descending order; the equalities are listed from `α_{j-1}` down. Holds under `c` iff `p[x/c]` is eventually
/// positive.
pub fn lia(p: &NormPolyExp) -> Vec<Disjunct> {
    let coeffs = marked_coeffs(p);
    (0..coeffs.len())
        .map(|j| {
            std::iter::once(LinConstraint::gt(coeffs[j].alpha.clone()))
                .chain(coeffs[..j].iter().rev().map(|c| LinConstraint::eq(c.alpha.clone())))
                .collect()
        })
        .collect()
}

/// `⋀_i ⋁_j ⋀ constraints`, one outer conjunct per guard atom.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LiaFormula {
    pub conjuncts: Vec<Vec<Disjunct>>,
}

impl LiaFormula {
    pub fn holds(&self, state: &[BigInt]) -> bool {
        self.conjuncts
            .iter()
            .all(|dis| dis.iter().any(|con| con.iter().all(|c| c.holds(state))))
    }

    /// Largest variable index mentioned, plus one.
    pub fn var_bound(&self) -> usize {
        self.constraints()
            .flat_map(|c| c.expr.vars())
            .map(|v| v.index() + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn constraints(&self) -> impl Iterator<Item = &LinConstraint> {
        self.conjuncts.iter().flatten().flatten()
    }

    /// One guard atom per line; `true` for the empty conjunction.
    pub fn display<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        FormulaDisplay { f: self, names }
    }
}

struct FormulaDisplay<'a> {
    f: &'a LiaFormula,
    names: &'a [String],
}

impl fmt::Display for FormulaDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.f.conjuncts.is_empty() {
            return write!(f, "true");
        }
        for (i, dis) in self.f.conjuncts.iter().enumerate() {
            if i > 0 {
                write!(f, "\n&& ")?;
            }
            write!(f, "(")?;
            for (j, con) in dis.iter().enumerate() {
                if j > 0 {
                    write!(f, " || ")?;
                }
                let parts: Vec<String> = con
                    .iter()
                    .map(|c| c.display(self.names).to_string())
                    .collect();
                if con.len() > 1 && dis.len() > 1 {
                    write!(f, "({})", parts.join(" && "))?;
                } else {
                    write!(f, "{}", parts.join(" && "))?;
                }
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// `⋀ lia(p_i)` where `p_i` is guard atom `i` with the normalized closed form
/// substituted for the variables.
pub fn formula_from(nnt: &Loop, normalized: &[NormPolyExp]) -> LiaFormula {
    LiaFormula {
        conjuncts: nnt
            .guard
            .atoms
            .iter()
            .map(|atom| lia(&NormPolyExp::substitute_into(atom, normalized)))
            .collect(),
    }
}

pub fn build_formula(nnt: &Loop) -> Result<LiaFormula, Error> {
    let q = closed_form(nnt)?;
    Ok(formula_from(nnt, &q.normalize()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LiaResult {
    Sat(Vec<BigInt>),
    Unsat,
}

/// Decides `f` over `dim` integer variables with the built-in Omega test.
/// Disjunctions are explored depth first in order, so the model comes from
/// the first satisfiable choice of disjuncts.
pub fn solve_lia(f: &LiaFormula, dim: usize, budget: u64) -> Result<LiaResult, SolverError> {
    let dim = dim.max(f.var_bound());
    let mut omega = Omega::new(budget);
    let mut chosen = Vec::new();
    match search(f, 0, dim, &mut chosen, &mut omega)? {
        Some(model) => Ok(LiaResult::Sat(model)),
        None => Ok(LiaResult::Unsat),
    }
}

fn search(
    f: &LiaFormula,
    depth: usize,
    dim: usize,
    chosen: &mut Vec<IntConstraint>,
    omega: &mut Omega,
) -> Result<Option<Vec<BigInt>>, SolverError> {
    if depth == f.conjuncts.len() {
        return omega.solve(dim, chosen);
    }
    for dis in &f.conjuncts[depth] {
        if dis.iter().any(|c| c.ground_value() == Some(false)) {
            continue;
        }
        let mark = chosen.len();
        chosen.extend(
            dis.iter()
                .filter(|c| c.ground_value().is_none())
                .map(LinConstraint::to_int),
        );
        let feasible = depth + 1 == f.conjuncts.len() || omega.solve(dim, chosen)?.is_some();
        if feasible {
            if let Some(model) = search(f, depth + 1, dim, chosen, omega)? {
                return Ok(Some(model));
            }
        }
        chosen.truncate(mark);
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Terminates,
    /// `witness` is in declaration order; `prefix` is a simulated `n₀` after
    /// which the guard held up to the horizon (a heuristic, not a bound).
    NonTerminates {
        witness: Vec<BigInt>,
        prefix: Option<u64>,
    },
}

impl Verdict {
    pub fn terminates(&self) -> bool {
        matches!(self, Verdict::Terminates)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Builtin,
    /// Runs the command as well and requires agreement.
    External(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecideOptions {
    pub backend: Backend,
    pub budget: u64,
    /// Simulation length for the reported `n₀`; 0 skips it.
    pub horizon: u64,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            backend: Backend::Builtin,
            budget: DEFAULT_BUDGET,
            horizon: DEFAULT_HORIZON,
        }
    }
}

/// Every intermediate artifact of the pipeline, internal variable order.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub parsed: ParsedLoop,
    pub chained: Loop,
    pub closed_form: ClosedForm,
    pub normalized: Vec<NormPolyExp>,
    pub formula: LiaFormula,
}

impl Analysis {
    pub fn new(parsed: ParsedLoop) -> Result<Self, Error> {
        let chained = chain(&parsed.internal);
        let closed_form = closed_form(&chained)?;
        let normalized = closed_form.normalize();
        let formula = formula_from(&chained, &normalized);
        Ok(Analysis {
            parsed,
            chained,
            closed_form,
            normalized,
            formula,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.parsed.internal.var_names
    }

    pub fn decide(&self, opts: &DecideOptions) -> Result<Verdict, Error> {
        let dim = self.parsed.internal.dim();
        let result = solve_lia(&self.formula, dim, opts.budget)?;
        if let Backend::External(cmd) = &opts.backend {
            let script = export_smtlib(&self.formula, self.names());
            let answer = ExternalSolver::new(cmd).check(&script, self.names())?;
            match (&result, &answer) {
                (LiaResult::Sat(_), SmtAnswer::Sat(model)) => {
                    if !self.formula.holds(model) {
                        return Err(BackendError::InvalidModel.into());
                    }
                }
                (LiaResult::Unsat, SmtAnswer::Unsat) => {}
                _ => {
                    return Err(BackendError::Disagreement {
                        builtin: matches!(result, LiaResult::Sat(_)),
                    }
                    .into())
                }
            }
        }
        Ok(match result {
            LiaResult::Unsat => Verdict::Terminates,
            LiaResult::Sat(model) => {
                debug_assert!(self.formula.holds(&model));
                let witness = self.parsed.to_declared(&model);
                let prefix = if opts.horizon == 0 {
                    None
                } else {
                    match check_eventual_witness(&self.parsed.internal, &model, opts.horizon)
                        .expect("witness has the loop's dimension")
                    {
                        EventualCheck::Confirmed(n0) => Some(n0),
                        EventualCheck::Inconclusive => None,
                    }
                };
                Verdict::NonTerminates { witness, prefix }
            }
        })
    }
}

/// Decides termination of a triangularizable loop given in declaration order.
pub fn decide_termination(lp: &Loop) -> Result<Verdict, Error> {
    decide_with(lp, &DecideOptions::default())
}

pub fn decide_with(lp: &Loop, opts: &DecideOptions) -> Result<Verdict, Error> {
    Analysis::new(triangularize(lp)?)?.decide(opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{rat, ratio};
    use crate::frontend::parse_loop;
    use crate::affine::VarId;
    use crate::pe::NormTerm;

    fn term(alpha: AffineExpr, npow: u32, base: u32) -> NormTerm {
        NormTerm {
            alpha,
            npow,
            base: BigUint::from(base),
        }
    }

    fn x(i: usize) -> AffineExpr {
        AffineExpr::var(VarId(i))
    }

    #[test]
    fn zero_has_single_zero_coefficient() {
        let c = marked_coeffs(&NormPolyExp::zero());
        assert_eq!(c.len(), 1);
        assert!(c[0].alpha.is_zero());
        assert_eq!((c[0].base.clone(), c[0].npow), (BigUint::one(), 0));
        assert_eq!(lia(&NormPolyExp::zero()), vec![vec![LinConstraint::gt(AffineExpr::zero())]]);
    }

    #[test]
    fn constant_coefficient() {
        let c = marked_coeffs(&NormPolyExp::constant(rat(5)));
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].alpha, AffineExpr::constant(rat(5)));
    }

    #[test]
    fn single_variable_lia() {
        let p = NormPolyExp::from_terms([term(x(0), 0, 1)]);
        assert_eq!(lia(&p), vec![vec![LinConstraint::gt(x(0))]]);
    }

    #[test]
    fn coefficients_are_descending() {
        let p = NormPolyExp::from_terms([
            term(x(1), 0, 1),
            term(AffineExpr::constant(rat(2)), 1, 1),
            term(x(0), 0, 4),
        ]);
        let c = marked_coeffs(&p);
        for w in c.windows(2) {
            assert_eq!(w[0].growth_cmp(&w[1]), Ordering::Greater);
        }
        assert_eq!(c[0].alpha, x(0));
    }

    #[test]
    fn sign_examples() {
        // -1/6·4ⁿ + 2n - 5
        let p = NormPolyExp::from_terms([
            term(AffineExpr::constant(ratio(-1, 6)), 0, 4),
            term(AffineExpr::constant(rat(2)), 1, 1),
            term(AffineExpr::constant(rat(-5)), 0, 1),
        ]);
        assert_eq!(sign_at_infinity(&p), Ordering::Less);
        assert_eq!(sign_at_infinity(&NormPolyExp::zero()), Ordering::Equal);
        let q = NormPolyExp::from_terms([
            term(AffineExpr::constant(rat(2)), 1, 1),
            term(AffineExpr::constant(rat(-5)), 0, 1),
        ]);
        assert_eq!(sign_at_infinity(&q), Ordering::Greater);
    }

    #[test]
    fn empty_guard_is_satisfied_by_zero() {
        let f = LiaFormula::default();
        assert_eq!(solve_lia(&f, 2, DEFAULT_BUDGET).unwrap(), LiaResult::Sat(vec![BigInt::zero(); 2]));
    }

    #[test]
    fn ground_true_formula_is_sat_at_zero() {
        let f = LiaFormula {
            conjuncts: vec![vec![vec![LinConstraint::gt(AffineExpr::constant(rat(1)))]]],
        };
        assert_eq!(solve_lia(&f, 2, DEFAULT_BUDGET).unwrap(), LiaResult::Sat(vec![BigInt::zero(); 2]));
    }

    #[test]
    fn rational_equality_without_integer_solution() {
        // y - 1/3 + 1/2·w = 0  ⇔  6y - 2 + 3w = 0
        let e = x(1) + AffineExpr::constant(ratio(-1, 3)) + AffineExpr::term(VarId(0), ratio(1, 2));
        let f = LiaFormula {
            conjuncts: vec![vec![vec![LinConstraint::eq(e)]]],
        };
        assert_eq!(solve_lia(&f, 2, DEFAULT_BUDGET).unwrap(), LiaResult::Unsat);
    }

    #[test]
    fn strict_rational_inequality_clears_to_integer_bound() {
        // x/2 > 0 and -x + 2 > 0: only x = 1
        let f = LiaFormula {
            conjuncts: vec![
                vec![vec![LinConstraint::gt(AffineExpr::term(VarId(0), ratio(1, 2)))]],
                vec![vec![LinConstraint::gt(AffineExpr::constant(rat(2)) - x(0))]],
            ],
        };
        assert_eq!(solve_lia(&f, 1, DEFAULT_BUDGET).unwrap(), LiaResult::Sat(vec![BigInt::one()]));
    }

    #[test]
    fn countdown_terminates() {
        let lp = parse_loop("vars: x\nguard: x > 0\nupdate: x := x - 1\n").unwrap();
        assert_eq!(decide_termination(&lp).unwrap(), Verdict::Terminates);
    }

    #[test]
    fn empty_guard_nonterminates_at_zero() {
        let lp = parse_loop("vars: x y\nguard: true\nupdate: x := x + y\ny := 1\n").unwrap();
        assert_eq!(
            decide_termination(&lp).unwrap(),
            Verdict::NonTerminates {
                witness: vec![BigInt::zero(); 2],
                prefix: Some(0)
            }
        );
    }
}
