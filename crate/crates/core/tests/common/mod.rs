//! Random instance generators and brute-force oracles shared by the
//! integration tests and the acceptance runner.

#![allow(dead_code)]

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Pow, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use triterm::decide::{ConstraintKind, Disjunct, LiaFormula, LinConstraint};
use triterm::pe::{CondConj, NormTerm, PeTerm};
use triterm::{AffineExpr, Guard, IntMatrix, Loop, NormPolyExp, PolyExp, Rational, VarId};

pub const LEADING: &str = "vars: w x y z\nguard: y + z > 0\nupdate:\nw := 2\nx := x + 1\ny := -w - 2*y\nz := x\n";
pub const EVENTUAL: &str = "vars: x y\nguard: x > 0\nupdate:\nx := x + y\ny := 1\n";
pub const DRIFT: &str = "vars: x y\nguard: x > 0\nupdate:\nx := x + y\ny := y - 1\n";
pub const DRIFT5: &str =
    "vars: x y z1 z2 z3\nguard: x > 0\nupdate:\nx := x + y + z1 + z2 + z3\ny := y - 1\nz1 := z1\nz2 := z2\nz3 := z3\n";

pub fn ints(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn names(d: usize) -> Vec<String> {
    (0..d).map(|i| format!("x{}", i + 1)).collect()
}

fn affine(rng: &mut impl Rng, d: usize, coeff: i64, constant: i64) -> AffineExpr {
    let coeffs: Vec<(VarId, BigRational)> = (0..d)
        .map(|j| (VarId(j), BigRational::from_integer(rng.gen_range(-coeff..=coeff).into())))
        .collect();
    AffineExpr::from_parts(coeffs, BigRational::from_integer(rng.gen_range(-constant..=constant).into()))
}

fn random_guard(rng: &mut impl Rng, d: usize) -> Guard {
    let k = rng.gen_range(1..=2);
    Guard::new((0..k).map(|_| affine(rng, d, 2, 3)).collect())
}

/// Lower-triangular matrix with entries in `[-lim, lim]` and diagonal in
/// `diag`.
pub fn lower_matrix(rng: &mut impl Rng, d: usize, lim: i64, diag: (i64, i64)) -> IntMatrix {
    IntMatrix::new(
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        let v = match j.cmp(&i) {
                            std::cmp::Ordering::Less => rng.gen_range(-lim..=lim),
                            std::cmp::Ordering::Equal => rng.gen_range(diag.0..=diag.1),
                            std::cmp::Ordering::Greater => 0,
                        };
                        BigInt::from(v)
                    })
                    .collect()
            })
            .collect(),
    )
}

pub fn random_nnt_loop(rng: &mut impl Rng, d: usize) -> Loop {
    let matrix = lower_matrix(rng, d, 2, (0, 2));
    let offset = (0..d).map(|_| BigInt::from(rng.gen_range(-3..=3))).collect();
    Loop::new(names(d), random_guard(rng, d), matrix, offset)
}

/// A triangular loop with entries in `[-2, 2]`, variables shuffled so the
/// matrix is usually not literally triangular.
pub fn random_triangular_loop(rng: &mut impl Rng, d: usize) -> Loop {
    let lower = lower_matrix(rng, d, 2, (-2, 2));
    let offset: Vec<BigInt> = (0..d).map(|_| BigInt::from(rng.gen_range(-2..=2))).collect();
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(rng);
    // variable perm[i] plays the role of triangular variable i
    let mut rows = vec![vec![BigInt::zero(); d]; d];
    let mut off = vec![BigInt::zero(); d];
    for i in 0..d {
        for j in 0..d {
            rows[perm[i]][perm[j]] = lower.get(i, j).clone();
        }
        off[perm[i]] = offset[i].clone();
    }
    Loop::new(names(d), random_guard(rng, d), IntMatrix::new(rows), off)
}

pub fn random_npe(rng: &mut impl Rng, d: usize) -> NormPolyExp {
    let k = rng.gen_range(0..=4);
    NormPolyExp::from_terms((0..k).map(|_| {
        let mut alpha = affine(rng, d, 2, 3);
        // sparse coefficients make vanishing leading terms common
        if rng.gen_bool(0.4) {
            alpha = AffineExpr::constant(alpha.constant_term().clone());
        }
        if rng.gen_bool(0.2) {
            alpha = alpha.scale(&q(1, rng.gen_range(2..=3)));
        }
        NormTerm {
            alpha,
            npow: rng.gen_range(0..=2),
            base: BigUint::from(rng.gen_range(1u32..=3)),
        }
    }))
}

pub fn random_formula(rng: &mut impl Rng, d: usize) -> LiaFormula {
    let constraint = |rng: &mut dyn rand::RngCore| {
        let coeffs: Vec<(VarId, BigRational)> = (0..d)
            .map(|j| (VarId(j), BigRational::from_integer(rng.gen_range(-3i64..=3).into())))
            .collect();
        let mut e = AffineExpr::from_parts(coeffs, BigRational::from_integer(rng.gen_range(-6i64..=6).into()));
        if rng.gen_bool(0.25) {
            e = e.scale(&q(1, rng.gen_range(2..=3)));
        }
        if rng.gen_bool(0.35) {
            LinConstraint::eq(e)
        } else {
            LinConstraint::gt(e)
        }
    };
    let conjuncts = (0..rng.gen_range(1..=3))
        .map(|_| {
            (0..rng.gen_range(1..=3))
                .map(|_| (0..rng.gen_range(1..=3)).map(|_| constraint(rng)).collect::<Disjunct>())
                .collect()
        })
        .collect();
    LiaFormula { conjuncts }
}

/// Independent evaluation of a formula over integers, without the library's
/// own evaluator.
pub fn formula_holds(f: &LiaFormula, c: &[BigInt]) -> bool {
    f.conjuncts.iter().all(|dis| {
        dis.iter().any(|con| {
            con.iter().all(|lc| {
                let mut v = lc.expr.constant_term().clone();
                for (var, k) in lc.expr.coeffs() {
                    v += k * BigRational::from_integer(c[var.index()].clone());
                }
                match lc.kind {
                    ConstraintKind::GreaterZero => v.is_positive(),
                    ConstraintKind::EqualZero => v.is_zero(),
                }
            })
        })
    })
}

/// Every point of `[-b, b]^d`.
pub fn boxed_points(d: usize, b: i64) -> Vec<Vec<BigInt>> {
    let mut pts = vec![vec![]];
    for _ in 0..d {
        pts = pts
            .into_iter()
            .flat_map(|p: Vec<BigInt>| {
                (-b..=b).map(move |v| {
                    let mut p = p.clone();
                    p.push(BigInt::from(v));
                    p
                })
            })
            .collect();
    }
    pts
}

/// Direct evaluation of `Σ α(c)·n^a·bⁿ`.
pub fn npe_value(p: &NormPolyExp, c: &[BigInt], n: u64) -> BigRational {
    let mut acc = BigRational::zero();
    for t in p.terms() {
        let mut a = t.alpha.constant_term().clone();
        for (v, k) in t.alpha.coeffs() {
            a += k * BigRational::from_integer(c[v.index()].clone());
        }
        let growth = BigInt::from(n).pow(t.npow) * BigInt::from(t.base.clone()).pow(n as u32);
        acc += a * BigRational::from_integer(growth);
    }
    acc
}

/// `x ← A·x + a` by hand, for cross-checking `Loop::step`.
pub fn naive_step(lp: &Loop, s: &[BigInt]) -> Vec<BigInt> {
    (0..lp.dim())
        .map(|i| {
            let mut v = lp.offset[i].clone();
            for (j, sj) in s.iter().enumerate() {
                v += lp.matrix.get(i, j) * sj;
            }
            v
        })
        .collect()
}

pub fn naive_guard(lp: &Loop, s: &[BigInt]) -> bool {
    lp.guard.atoms.iter().all(|a| {
        let mut v = a.constant_term().clone();
        for (var, k) in a.coeffs() {
            v += k * BigRational::from_integer(s[var.index()].clone());
        }
        v.is_positive()
    })
}

/// Number of steps before the guard fails, or `None` within `horizon`.
pub fn halts_within(lp: &Loop, c: &[BigInt], horizon: u64) -> Option<u64> {
    let mut s = c.to_vec();
    for n in 0..=horizon {
        if !naive_guard(lp, &s) {
            return Some(n);
        }
        s = naive_step(lp, &s);
    }
    None
}

// The chained leading loop, worked out by hand.

pub const W: VarId = VarId(0);
pub const X: VarId = VarId(1);
pub const Y: VarId = VarId(2);
pub const Z: VarId = VarId(3);

pub fn r(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

pub fn lin(terms: &[(VarId, Rational)], c: Rational) -> AffineExpr {
    AffineExpr::from_parts(terms.iter().cloned(), c)
}

pub fn nterm(alpha: AffineExpr, npow: u32, base: u32) -> NormTerm {
    NormTerm {
        alpha,
        npow,
        base: BigUint::from(base),
    }
}

pub fn pow4(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(4).pow(n as u32))
}

/// The closed form of the chained leading loop, written out by hand.
pub fn expected_closed_form(s: &[Rational; 4], n: u64) -> [Rational; 4] {
    let [w, x, y, z] = s.clone();
    let nr = Rational::from_integer(n.into());
    let qw = if n == 0 { w.clone() } else { r(2) };
    let qx = &x + r(2) * &nr;
    let mut qy = &y * pow4(n) + q(2, 3) - q(2, 3) * pow4(n);
    if n != 0 {
        qy += q(1, 2) * &w * pow4(n);
    }
    if n > 1 {
        qy += q(-4, 3) + q(1, 3) * pow4(n);
    }
    let qz = if n == 0 { z } else { &x - r(1) + r(2) * &nr };
    [qw, qx, qy, qz]
}


pub fn expected_normalized() -> Vec<NormPolyExp> {
    let lead = lin(&[(W, q(1, 2)), (Y, r(1))], q(-1, 3));
    vec![
        NormPolyExp::constant(r(2)),
        NormPolyExp::from_terms([nterm(lin(&[(X, r(1))], r(0)), 0, 1), nterm(AffineExpr::constant(r(2)), 1, 1)]),
        NormPolyExp::from_terms([nterm(lead, 0, 4), nterm(AffineExpr::constant(q(-2, 3)), 0, 1)]),
        NormPolyExp::from_terms([nterm(lin(&[(X, r(1))], r(-1)), 0, 1), nterm(AffineExpr::constant(r(2)), 1, 1)]),
    ]
}

pub type Signature = Vec<(AffineExpr, u32, u32)>;

/// Marked coefficients as `(α, base, power)` triples.
pub fn signature(p: &NormPolyExp) -> Signature {
    triterm::marked_coeffs(p)
        .into_iter()
        .map(|m| (m.alpha, u32::try_from(m.base).unwrap(), m.npow))
        .collect()
}

/// Marked coefficients of the two chained guard atoms.
pub fn expected_signatures() -> [Signature; 2] {
    [
        vec![
            (lin(&[(W, q(1, 2)), (Y, r(1))], q(-1, 3)), 4, 0),
            (AffineExpr::constant(r(2)), 1, 1),
            (lin(&[(X, r(1))], q(-5, 3)), 1, 0),
        ],
        vec![
            (lin(&[(W, r(-1)), (Y, r(-2))], q(2, 3)), 4, 0),
            (AffineExpr::constant(r(2)), 1, 1),
            (lin(&[(X, r(1))], q(-2, 3)), 1, 0),
        ],
    ]
}

/// `⟦n=0⟧·2w + ⟦n≠0⟧·4 - 2` over the single variable `w`.
pub fn sum_input() -> PolyExp {
    let one = || BigUint::from(1u32);
    PolyExp::from_terms([
        PeTerm::new(CondConj::eq(0), AffineExpr::term(VarId(0), r(2)), 0, one()),
        PeTerm::new(CondConj::ne(0), AffineExpr::constant(r(4)), 0, one()),
        PeTerm::new(CondConj::top(), AffineExpr::constant(r(-2)), 0, one()),
    ])
}

/// `Σ_{i=1}^{n} 4^{n-i}·p(i-1)` for [`sum_input`], in its hand-derived closed
/// form `⟦n≠0⟧·w/2·4ⁿ + ⟦n>1⟧·(4ⁿ/3 - 4/3) + 2/3 - 2/3·4ⁿ`.
pub fn sum_expected(w: &Rational, n: u64) -> Rational {
    let mut v = q(2, 3) - q(2, 3) * pow4(n);
    if n != 0 {
        v += q(1, 2) * w * pow4(n);
    }
    if n > 1 {
        v += q(-4, 3) + q(1, 3) * pow4(n);
    }
    v
}
