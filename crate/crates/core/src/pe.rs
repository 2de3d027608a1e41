//! Poly-exponential expressions `Σ ⟦ψⱼ⟧·αⱼ·n^aⱼ·bⱼⁿ` and their normalized
//! (condition-free) counterparts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};

use crate::affine::{fmt_rational, AffineExpr, Assignment, Rational};
use crate::error::EvalError;

/// A conjunction of literals `n = c` / `n ≠ c` over the iteration counter.
///
/// Canonical: a positive literal absorbs all negative ones (they are either
/// implied or contradictory), so at most one of the two fields is non-empty.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CondConj {
    positive: Option<u64>,
    negatives: BTreeSet<u64>,
}

impl CondConj {
    /// The empty conjunction.
    pub fn top() -> Self {
        Self::default()
    }

    pub fn eq(c: u64) -> Self {
        CondConj {
            positive: Some(c),
            negatives: BTreeSet::new(),
        }
    }

    pub fn ne(c: u64) -> Self {
        CondConj {
            positive: None,
            negatives: [c].into_iter().collect(),
        }
    }

    /// `⟦n > c⟧`, stored as `n ≠ 0 ∧ … ∧ n ≠ c`.
    pub fn gt(c: u64) -> Self {
        CondConj {
            positive: None,
            negatives: (0..=c).collect(),
        }
    }

    /// Canonical conjunction, or `None` when it is unsatisfiable.
    pub fn new(positive: Option<u64>, negatives: impl IntoIterator<Item = u64>) -> Option<Self> {
        let negatives: BTreeSet<u64> = negatives.into_iter().collect();
        match positive {
            Some(c) if negatives.contains(&c) => None,
            Some(c) => Some(Self::eq(c)),
            None => Some(CondConj {
                positive: None,
                negatives,
            }),
        }
    }

    pub fn positive(&self) -> Option<u64> {
        self.positive
    }

    pub fn negatives(&self) -> &BTreeSet<u64> {
        &self.negatives
    }

    pub fn is_top(&self) -> bool {
        self.positive.is_none() && self.negatives.is_empty()
    }

    /// `⟦ψ⟧(n)`.
    pub fn holds(&self, n: u64) -> bool {
        self.positive.is_none_or(|c| c == n) && !self.negatives.contains(&n)
    }

    pub fn and(&self, other: &CondConj) -> Option<CondConj> {
        let positive = match (self.positive, other.positive) {
            (Some(a), Some(b)) if a != b => return None,
            (a, b) => a.or(b),
        };
        CondConj::new(
            positive,
            self.negatives.iter().chain(&other.negatives).copied(),
        )
    }

    /// `ψ[n/n-1] ∧ n ≠ 0`: every constant moves up by one.
    pub fn shift_after_zero(&self) -> CondConj {
        match self.positive {
            Some(c) => Self::eq(c + 1),
            None => CondConj {
                positive: None,
                negatives: std::iter::once(0)
                    .chain(self.negatives.iter().map(|c| c + 1))
                    .collect(),
            },
        }
    }

    /// Largest constant mentioned, if any.
    pub fn max_const(&self) -> Option<u64> {
        self.positive
            .into_iter()
            .chain(self.negatives.iter().copied())
            .max()
    }
}

impl fmt::Display for CondConj {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(c) = self.positive {
            return write!(f, "n={c}");
        }
        let max = match self.negatives.last() {
            None => return write!(f, "true"),
            Some(&m) => m,
        };
        if max > 0 && self.negatives.len() as u64 == max + 1 {
            return write!(f, "n>{max}");
        }
        let parts: Vec<String> = self.negatives.iter().map(|c| format!("n!={c}")).collect();
        write!(f, "{}", parts.join(" && "))
    }
}

/// One addend `⟦ψ⟧·α·n^a·bⁿ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PeTerm {
    pub cond: CondConj,
    pub alpha: AffineExpr,
    pub npow: u32,
    pub base: BigUint,
}

impl PeTerm {
    pub fn new(cond: CondConj, alpha: AffineExpr, npow: u32, base: BigUint) -> Self {
        assert!(!base.is_zero(), "exponential base must be at least 1");
        PeTerm {
            cond,
            alpha,
            npow,
            base,
        }
    }

    /// `n^a·bⁿ` with `0⁰ = 1`.
    fn growth(&self, n: u64) -> Rational {
        growth_factor(self.npow, &self.base, n)
    }
}

pub(crate) fn growth_factor(npow: u32, base: &BigUint, n: u64) -> Rational {
    let np: BigInt = num_traits::pow(BigInt::from(n), npow as usize);
    let bp: BigUint = num_traits::pow(base.clone(), n as usize);
    Rational::from_integer(np * BigInt::from(bp))
}

/// A poly-exponential expression in canonical form: terms sorted by
/// `(base, npow, cond)` descending, no repeated triple, no zero coefficient,
/// no unsatisfiable condition.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PolyExp {
    terms: Vec<PeTerm>,
}

impl PolyExp {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Lifts an affine expression (`ψ = true`, `a = 0`, `b = 1`).
    pub fn affine(alpha: AffineExpr) -> Self {
        Self::from_terms([PeTerm::new(CondConj::top(), alpha, 0, BigUint::one())])
    }

    pub fn constant(c: Rational) -> Self {
        Self::affine(AffineExpr::constant(c))
    }

    pub fn from_terms(terms: impl IntoIterator<Item = PeTerm>) -> Self {
        let mut merged: BTreeMap<(BigUint, u32, CondConj), AffineExpr> = BTreeMap::new();
        for t in terms {
            let slot = merged.entry((t.base, t.npow, t.cond)).or_default();
            *slot = std::mem::take(slot) + t.alpha;
        }
        PolyExp {
            terms: merged
                .into_iter()
                .rev()
                .filter(|(_, alpha)| !alpha.is_zero())
                .map(|((base, npow, cond), alpha)| PeTerm {
                    cond,
                    alpha,
                    npow,
                    base,
                })
                .collect(),
        }
    }

    pub fn terms(&self) -> &[PeTerm] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<PeTerm> {
        self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &PolyExp) -> PolyExp {
        PolyExp::from_terms(self.terms.iter().chain(&other.terms).cloned())
    }

    pub fn scale(&self, r: &Rational) -> PolyExp {
        PolyExp::from_terms(self.terms.iter().map(|t| PeTerm {
            alpha: t.alpha.scale(r),
            ..t.clone()
        }))
    }

    pub fn eval(&self, n: u64, asg: &Assignment) -> Result<Rational, EvalError> {
        let mut acc = Rational::zero();
        for t in &self.terms {
            if t.cond.holds(n) {
                acc += t.alpha.eval(asg)? * t.growth(n);
            }
        }
        Ok(acc)
    }

    /// Largest constant in any condition.
    pub fn max_const(&self) -> Option<u64> {
        self.terms.iter().filter_map(|t| t.cond.max_const()).max()
    }

    /// `expr[x/q]`: replaces each variable of an affine expression by the
    /// corresponding expression in `q`.
    pub fn substitute_into(expr: &AffineExpr, q: &[PolyExp]) -> PolyExp {
        let mut out = PolyExp::constant(expr.constant_term().clone());
        for (v, c) in expr.coeffs() {
            out = out.add(&q[v.index()].scale(c));
        }
        out
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> PeDisplay<'a> {
        PeDisplay { pe: self, names }
    }
}

/// One addend `α·n^a·bⁿ` of a normalized expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NormTerm {
    pub alpha: AffineExpr,
    pub npow: u32,
    pub base: BigUint,
}

/// A normalized poly-exponential expression: no conditions, pairwise
/// distinct `(base, npow)`, sorted strictly descending by `(base, npow)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct NormPolyExp {
    terms: Vec<NormTerm>,
}

impl NormPolyExp {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_terms([NormTerm {
            alpha: AffineExpr::constant(c),
            npow: 0,
            base: BigUint::one(),
        }])
    }

    pub fn from_terms(terms: impl IntoIterator<Item = NormTerm>) -> Self {
        let mut merged: BTreeMap<(BigUint, u32), AffineExpr> = BTreeMap::new();
        for t in terms {
            assert!(!t.base.is_zero(), "exponential base must be at least 1");
            let slot = merged.entry((t.base, t.npow)).or_default();
            *slot = std::mem::take(slot) + t.alpha;
        }
        NormPolyExp {
            terms: merged
                .into_iter()
                .rev()
                .filter(|(_, alpha)| !alpha.is_zero())
                .map(|((base, npow), alpha)| NormTerm { alpha, npow, base })
                .collect(),
        }
    }

    pub fn terms(&self) -> &[NormTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when no program variable occurs in any coefficient.
    pub fn is_ground(&self) -> bool {
        self.terms.iter().all(|t| t.alpha.is_ground())
    }

    pub fn add(&self, other: &NormPolyExp) -> NormPolyExp {
        NormPolyExp::from_terms(self.terms.iter().chain(&other.terms).cloned())
    }

    pub fn scale(&self, r: &Rational) -> NormPolyExp {
        NormPolyExp::from_terms(self.terms.iter().map(|t| NormTerm {
            alpha: t.alpha.scale(r),
            ..t.clone()
        }))
    }

    pub fn eval(&self, n: u64, asg: &Assignment) -> Result<Rational, EvalError> {
        let mut acc = Rational::zero();
        for t in &self.terms {
            acc += t.alpha.eval(asg)? * growth_factor(t.npow, &t.base, n);
        }
        Ok(acc)
    }

    /// `p[x/c]` for an integer state: every coefficient becomes a constant.
    pub fn instantiate(&self, state: &[BigInt]) -> NormPolyExp {
        NormPolyExp::from_terms(self.terms.iter().map(|t| NormTerm {
            alpha: AffineExpr::constant(t.alpha.eval_int(state)),
            ..t.clone()
        }))
    }

    pub fn substitute_into(expr: &AffineExpr, q: &[NormPolyExp]) -> NormPolyExp {
        let mut out = NormPolyExp::constant(expr.constant_term().clone());
        for (v, c) in expr.coeffs() {
            out = out.add(&q[v.index()].scale(c));
        }
        out
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> NpeDisplay<'a> {
        NpeDisplay { npe: self, names }
    }
}

/// Renders `α·n^a·bⁿ` as `(sign, text)`; a lone negative factor is pulled
/// out so sums read `a - b` rather than `a + -b`.
fn render_addend(
    alpha: &AffineExpr,
    npow: u32,
    base: &BigUint,
    names: &[String],
    sign_outside: bool,
) -> (bool, String) {
    let mut factors = Vec::new();
    if npow == 1 {
        factors.push("n".to_string());
    } else if npow > 1 {
        factors.push(format!("n^{npow}"));
    }
    if !base.is_one() {
        factors.push(format!("{base}^n"));
    }
    let single = alpha.is_single_addend();
    let lone_negative = single
        && sign_outside
        && match alpha.coeffs().next() {
            Some((_, c)) => c.is_negative(),
            None => alpha.constant_term().is_negative(),
        };
    let alpha = if lone_negative { -alpha.clone() } else { alpha.clone() };
    let alpha_text = alpha.display(names).to_string();
    let is_unit = alpha.is_ground() && alpha.constant_term().is_one();
    let mut parts = Vec::new();
    if !(is_unit && !factors.is_empty()) {
        if single && (sign_outside || !alpha_text.starts_with('-')) {
            parts.push(alpha_text);
        } else {
            parts.push(format!("({alpha_text})"));
        }
    }
    parts.extend(factors);
    (lone_negative, parts.join("*"))
}

fn join_addends(f: &mut fmt::Formatter<'_>, addends: Vec<(bool, String)>) -> fmt::Result {
    if addends.is_empty() {
        return write!(f, "0");
    }
    for (i, (neg, text)) in addends.into_iter().enumerate() {
        match (i == 0, neg) {
            (true, false) => write!(f, "{text}")?,
            (true, true) => write!(f, "-{text}")?,
            (false, false) => write!(f, " + {text}")?,
            (false, true) => write!(f, " - {text}")?,
        }
    }
    Ok(())
}

pub struct PeDisplay<'a> {
    pe: &'a PolyExp,
    names: &'a [String],
}

impl fmt::Display for PeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let addends = self
            .pe
            .terms
            .iter()
            .map(|t| {
                if t.cond.is_top() {
                    render_addend(&t.alpha, t.npow, &t.base, self.names, true)
                } else {
                    let (_, body) = render_addend(&t.alpha, t.npow, &t.base, self.names, false);
                    (false, format!("⟦{}⟧*{}", t.cond, body))
                }
            })
            .collect();
        join_addends(f, addends)
    }
}

pub struct NpeDisplay<'a> {
    npe: &'a NormPolyExp,
    names: &'a [String],
}

impl fmt::Display for NpeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let addends = self
            .npe
            .terms
            .iter()
            .map(|t| render_addend(&t.alpha, t.npow, &t.base, self.names, true))
            .collect();
        join_addends(f, addends)
    }
}

/// Rational rendering shared with the record writers.
pub fn fmt_base(b: &BigUint) -> String {
    fmt_rational(&Rational::from_integer(BigInt::from(b.clone())))
}
