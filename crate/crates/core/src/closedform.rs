//! Chaining to a non-negative triangular loop and exact closed forms
//! `q` with `q[n/c] = fᶜ(x)` built from poly-exponential expressions.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::affine::{AffineExpr, Assignment, Rational, VarId};
use crate::error::EvalError;
use crate::pe::{CondConj, NormPolyExp, NormTerm, PeTerm, PolyExp};
use crate::poly::{binomial, pow_rational, Polynomial};
use crate::program::{Guard, Loop};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClosedFormError {
    #[error("update matrix is not lower triangular")]
    NotLowerTriangular,
    #[error("diagonal entry {index} of the update matrix is negative")]
    NegativeDiagonal { index: usize },
}

/// `while φ ∧ φ[x/Ax+a] do x ← A²x + Aa + a`: one iteration of the result is
/// two iterations of `lp`. For a triangular `lp` the result is non-negative
/// triangular.
pub fn chain(lp: &Loop) -> Loop {
    let next: Vec<AffineExpr> = (0..lp.dim()).map(|i| lp.update_expr(i)).collect();
    let mut atoms = lp.guard.atoms.clone();
    atoms.extend(
        lp.guard
            .atoms
            .iter()
            .map(|a| a.substitute(|v| next[v.index()].clone())),
    );
    let squared = lp.matrix.mul(&lp.matrix);
    let offset = lp
        .matrix
        .mul_vec(&lp.offset)
        .into_iter()
        .zip(&lp.offset)
        .map(|(x, a)| x + a)
        .collect();
    Loop::new(lp.var_names.clone(), Guard::new(atoms), squared, offset)
}

/// Solves `q(n) = r(n) - c·r(n-1)` for the polynomial `r`.
pub fn compute_r(q: &Polynomial, c: &Rational) -> Polynomial {
    let one = Rational::one();
    let degree = match q.degree() {
        None => return Polynomial::zero(),
        Some(d) => d,
    };
    if degree == 0 {
        let c0 = q.coeff(0);
        return if *c == one {
            Polynomial::monomial(c0, 1)
        } else {
            Polynomial::constant(c0 / (&one - c))
        };
    }
    let cd = q.leading();
    let s = if *c == one {
        Polynomial::monomial(cd / Rational::from_integer(BigInt::from(degree + 1)), degree + 1)
    } else {
        Polynomial::monomial(cd / (&one - c), degree)
    };
    let rest = q.clone() - s.clone() + s.shift_back().scale(c);
    assert!(
        rest.degree().is_none_or(|d| d < degree),
        "compute_r: degree did not decrease ({:?} -> {:?})",
        q.degree(),
        rest.degree()
    );
    s + compute_r(&rest, c)
}

fn base_rational(b: &BigUint) -> Rational {
    Rational::from_integer(BigInt::from(b.clone()))
}

fn u32_exp(c: u64) -> u32 {
    c.to_u32().expect("condition constant exceeds exponent range")
}

/// A poly-exponential expression equivalent to `Σ_{i=1}^{n} m^{n-i}·p[n/i-1]`.
pub fn symbolic_sum(m: &BigUint, p: &PolyExp) -> PolyExp {
    let mut out = Vec::new();
    for t in p.terms() {
        if m.is_zero() {
            sum_m_zero(t, &mut out);
        } else if let Some(c) = t.cond.positive() {
            sum_positive_literal(m, t, c, &mut out);
        } else {
            sum_negative_literals(m, t, &mut out);
        }
    }
    PolyExp::from_terms(out)
}

/// `m = 0`: only `i = n` survives, giving
/// `⟦n≠0⟧·⟦ψ[n/n-1]⟧·(α/b)·(n-1)^a·bⁿ`, expanded binomially.
fn sum_m_zero(t: &PeTerm, out: &mut Vec<PeTerm>) {
    let cond = t.cond.shift_after_zero();
    let alpha_over_b = t.alpha.scale(&(Rational::one() / base_rational(&t.base)));
    for i in 0..=t.npow {
        let sign = if i % 2 == 0 { Rational::one() } else { -Rational::one() };
        let coeff = binomial(t.npow, i) * sign;
        out.push(PeTerm::new(
            cond.clone(),
            alpha_over_b.scale(&coeff),
            t.npow - i,
            t.base.clone(),
        ));
    }
}

/// `ψ` contains `n = c`: only `i = c+1` contributes, giving
/// `⟦n>c⟧·(α·cᵃ·bᶜ / m^{c+1})·mⁿ`.
fn sum_positive_literal(m: &BigUint, t: &PeTerm, c: u64, out: &mut Vec<PeTerm>) {
    if !t.cond.holds(c) {
        return;
    }
    let m_r = base_rational(m);
    let c_r = Rational::from_integer(BigInt::from(c));
    let factor = pow_rational(&c_r, t.npow) * pow_rational(&base_rational(&t.base), u32_exp(c))
        / pow_rational(&m_r, u32_exp(c + 1));
    out.push(PeTerm::new(
        CondConj::gt(c),
        t.alpha.scale(&factor),
        0,
        m.clone(),
    ));
}

/// `ψ` has only negative literals, `c` its largest constant (or -1). The sum
/// splits into a finite prefix `i ≤ c+1`, one addend per `i` with
/// `⟦ψ⟧(i-1) = 1`, and a tail `i ≥ c+2` where `⟦ψ⟧` is always 1 and the
/// polynomial-difference solution `r` telescopes the sum.
fn sum_negative_literals(m: &BigUint, t: &PeTerm, out: &mut Vec<PeTerm>) {
    let m_r = base_rational(m);
    let b_r = base_rational(&t.base);
    let c: Option<u64> = t.cond.max_const();

    // prefix: Σ_{1≤i≤c+1, ψ(i-1)} ⟦n>i-1⟧·(α·(i-1)^a·b^{i-1} / mⁱ)·mⁿ
    if let Some(c) = c {
        for i in 1..=c + 1 {
            let k = i - 1;
            if !t.cond.holds(k) {
                continue;
            }
            let k_r = Rational::from_integer(BigInt::from(k));
            let factor = pow_rational(&k_r, t.npow) * pow_rational(&b_r, u32_exp(k))
                / pow_rational(&m_r, u32_exp(i));
            out.push(PeTerm::new(CondConj::gt(k), t.alpha.scale(&factor), 0, m.clone()));
        }
    }

    // tail: Σ_{i=c+2}^{n} m^{n-i}·α·(i-1)^a·b^{i-1}
    //   = ⟦n>c+1⟧·(α/b)·r·bⁿ - ⟦n>c+1⟧·r(c+1)·(b/m)^{c+1}·(α/b)·mⁿ
    // with (i-1)^a = r(i) - (m/b)·r(i-1).
    let start: u64 = c.map_or(0, |c| c + 1);
    let cond = CondConj::gt(start);
    let r = compute_r(
        &Polynomial::shifted_power(t.npow, &-Rational::one()),
        &(&m_r / &b_r),
    );
    let alpha_over_b = t.alpha.scale(&(Rational::one() / &b_r));
    for (i, mi) in r.coeffs().iter().enumerate() {
        if mi.is_zero() {
            continue;
        }
        out.push(PeTerm::new(
            cond.clone(),
            alpha_over_b.scale(mi),
            i as u32,
            t.base.clone(),
        ));
    }
    let start_r = Rational::from_integer(BigInt::from(start));
    let factor = r.eval(&start_r) * pow_rational(&(&b_r / &m_r), u32_exp(start));
    out.push(PeTerm::new(cond, alpha_over_b.scale(&-factor), 0, m.clone()));
}

/// `q` with `q[n/0] = x` and `q = (m·q + p)[n/n-1]` for `n > 0`, i.e.
/// `q = mⁿ·x + Σ_{i=1}^{n} m^{n-i}·p[n/i-1]`.
pub fn closed_form_var(x: VarId, m: &BigUint, p: &PolyExp) -> PolyExp {
    let head = if m.is_zero() {
        PeTerm::new(CondConj::eq(0), AffineExpr::var(x), 0, BigUint::one())
    } else {
        PeTerm::new(CondConj::top(), AffineExpr::var(x), 0, m.clone())
    };
    PolyExp::from_terms(std::iter::once(head)).add(&symbolic_sum(m, p))
}

/// A vector `q` of poly-exponential expressions with `q[n/c] = fᶜ(x)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedForm {
    pub components: Vec<PolyExp>,
}

impl ClosedForm {
    pub fn eval(&self, n: u64, asg: &Assignment) -> Result<Vec<Rational>, EvalError> {
        self.components.iter().map(|q| q.eval(n, asg)).collect()
    }

    pub fn normalize(&self) -> Vec<NormPolyExp> {
        self.components.iter().map(normalize).collect()
    }
}

/// Closed form of a non-negative lower-triangular loop, one variable at a
/// time: variable `i` sees `p = aᵢ + Σ_{j<i} A_{ij}·q_j`.
pub fn closed_form(lp: &Loop) -> Result<ClosedForm, ClosedFormError> {
    if !lp.matrix.is_lower_triangular() {
        return Err(ClosedFormError::NotLowerTriangular);
    }
    let mut components: Vec<PolyExp> = Vec::with_capacity(lp.dim());
    for i in 0..lp.dim() {
        let diag = lp.matrix.get(i, i);
        if diag.is_negative() {
            return Err(ClosedFormError::NegativeDiagonal { index: i });
        }
        let m = diag.magnitude().clone();
        let mut p = PolyExp::constant(Rational::from_integer(lp.offset[i].clone()));
        for (j, qj) in components.iter().enumerate() {
            let a = lp.matrix.get(i, j);
            if !a.is_zero() {
                p = p.add(&qj.scale(&Rational::from_integer(a.clone())));
            }
        }
        components.push(closed_form_var(VarId(i), &m, &p));
    }
    Ok(ClosedForm { components })
}

/// Drops addends whose condition has a positive literal and strips the
/// remaining conditions. Agrees with `q` for all `n` above `q.max_const()`.
pub fn normalize(q: &PolyExp) -> NormPolyExp {
    NormPolyExp::from_terms(
        q.terms()
            .iter()
            .filter(|t| t.cond.positive().is_none())
            .map(|t| NormTerm {
                alpha: t.alpha.clone(),
                npow: t.npow,
                base: t.base.clone(),
            }),
    )
}
