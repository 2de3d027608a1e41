//! Exact rationals, program variables and affine expressions over them.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::EvalError;

/// Exact arbitrary-precision rational, always kept in lowest terms.
pub type Rational = BigRational;

/// Shorthand for an integer-valued rational.
pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Shorthand for `num / den`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Renders a rational as `p/q`, or as a plain integer when `q = 1`.
pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses the `p/q` or `p` rendering produced by [`fmt_rational`].
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rational::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

/// A program variable, identified by its position in the declared order.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A (partial) assignment of rationals to variables.
pub type Assignment = BTreeMap<VarId, Rational>;

/// Builds an assignment from integer values for variables `0..values.len()`.
pub fn int_assignment(values: &[BigInt]) -> Assignment {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| (VarId(i), Rational::from_integer(v.clone())))
        .collect()
}

/// `c₁·x₁ + … + c_d·x_d + c` with rational coefficients.
///
/// Zero coefficients are never stored, so structural equality is semantic
/// equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct AffineExpr {
    coeffs: BTreeMap<VarId, Rational>,
    constant: Rational,
}

impl PartialOrd for AffineExpr {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AffineExpr {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.coeffs
            .iter()
            .cmp(other.coeffs.iter())
            .then_with(|| self.constant.cmp(&other.constant))
    }
}

impl AffineExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational) -> Self {
        AffineExpr {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(v: VarId) -> Self {
        Self::term(v, Rational::one())
    }

    /// `c·v`.
    pub fn term(v: VarId, c: Rational) -> Self {
        let mut e = Self::zero();
        e.add_coeff(v, c);
        e
    }

    pub fn from_parts(coeffs: impl IntoIterator<Item = (VarId, Rational)>, constant: Rational) -> Self {
        let mut e = Self::constant(constant);
        for (v, c) in coeffs {
            e.add_coeff(v, c);
        }
        e
    }

    /// Adds `c` to the coefficient of `v`, dropping it if it becomes zero.
    pub fn add_coeff(&mut self, v: VarId, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(v).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&v);
        }
    }

    pub fn coeff(&self, v: VarId) -> Rational {
        self.coeffs.get(&v).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (VarId, &Rational)> {
        self.coeffs.iter().map(|(v, c)| (*v, c))
    }

    pub fn constant_term(&self) -> &Rational {
        &self.constant
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && self.constant.is_zero()
    }

    /// True when no variable occurs.
    pub fn is_ground(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn scale(&self, r: &Rational) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        AffineExpr {
            coeffs: self.coeffs.iter().map(|(v, c)| (*v, c * r)).collect(),
            constant: &self.constant * r,
        }
    }

    pub fn eval(&self, asg: &Assignment) -> Result<Rational, EvalError> {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            let val = asg.get(v).ok_or(EvalError::MissingVariable(*v))?;
            acc += c * val;
        }
        Ok(acc)
    }

    /// Evaluates under an integer state vector indexed by variable position.
    pub fn eval_int(&self, state: &[BigInt]) -> Rational {
        let den = self.denominator_lcm();
        Rational::new(self.scaled_int_value(&den, state), den)
    }

    /// Sign of the value under an integer state, without rational arithmetic.
    pub fn sign_int(&self, state: &[BigInt]) -> std::cmp::Ordering {
        let den = self.denominator_lcm();
        self.scaled_int_value(&den, state).cmp(&BigInt::zero())
    }

    /// `den·self` evaluated in integers; `den` must clear every denominator.
    fn scaled_int_value(&self, den: &BigInt, state: &[BigInt]) -> BigInt {
        let scale = |r: &Rational| r.numer() * (den / r.denom());
        let mut acc = scale(&self.constant);
        for (v, c) in &self.coeffs {
            acc += scale(c) * &state[v.0];
        }
        acc
    }

    /// Replaces every variable `v` by `subst(v)`.
    pub fn substitute(&self, subst: impl Fn(VarId) -> AffineExpr) -> AffineExpr {
        let mut out = AffineExpr::constant(self.constant.clone());
        for (v, c) in &self.coeffs {
            out = out + subst(*v).scale(c);
        }
        out
    }

    /// Renames variables through `f` (which must be injective).
    pub fn rename(&self, f: impl Fn(VarId) -> VarId) -> AffineExpr {
        AffineExpr::from_parts(
            self.coeffs.iter().map(|(v, c)| (f(*v), c.clone())),
            self.constant.clone(),
        )
    }

    /// Least common multiple of all denominators (coefficients and constant).
    pub fn denominator_lcm(&self) -> BigInt {
        self.coeffs
            .values()
            .chain(std::iter::once(&self.constant))
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
    }

    /// Multiplies through by the denominator lcm, yielding integer
    /// coefficients with the same sign everywhere.
    pub fn clear_denominators(&self) -> AffineExpr {
        self.scale(&Rational::from_integer(self.denominator_lcm()))
    }

    /// Integer coefficients, valid only after [`Self::clear_denominators`].
    pub fn integer_coeffs(&self) -> Option<(BTreeMap<VarId, BigInt>, BigInt)> {
        if !self.constant.is_integer() || self.coeffs.values().any(|c| !c.is_integer()) {
            return None;
        }
        Some((
            self.coeffs
                .iter()
                .map(|(v, c)| (*v, c.to_integer()))
                .collect(),
            self.constant.to_integer(),
        ))
    }

    /// Human rendering: variables in index order, then the constant.
    pub fn display<'a>(&'a self, names: &'a [String]) -> AffineDisplay<'a> {
        AffineDisplay { expr: self, names }
    }

    /// True when the rendering is a single signed factor (no `+`/`-` joins).
    pub fn is_single_addend(&self) -> bool {
        match self.coeffs.len() {
            0 => true,
            1 => self.constant.is_zero(),
            _ => false,
        }
    }
}

impl Add for AffineExpr {
    type Output = AffineExpr;
    fn add(mut self, rhs: AffineExpr) -> AffineExpr {
        for (v, c) in rhs.coeffs {
            self.add_coeff(v, c);
        }
        self.constant += rhs.constant;
        self
    }
}

impl Sub for AffineExpr {
    type Output = AffineExpr;
    fn sub(self, rhs: AffineExpr) -> AffineExpr {
        self + (-rhs)
    }
}

impl Neg for AffineExpr {
    type Output = AffineExpr;
    fn neg(self) -> AffineExpr {
        self.scale(&-Rational::one())
    }
}

impl Mul<&Rational> for &AffineExpr {
    type Output = AffineExpr;
    fn mul(self, rhs: &Rational) -> AffineExpr {
        self.scale(rhs)
    }
}

/// Variable names fall back to `x{i}` when the table is too short.
pub fn var_name(names: &[String], v: VarId) -> String {
    names
        .get(v.0)
        .cloned()
        .unwrap_or_else(|| format!("x{}", v.0 + 1))
}

pub struct AffineDisplay<'a> {
    expr: &'a AffineExpr,
    names: &'a [String],
}

impl fmt::Display for AffineDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut emit = |f: &mut fmt::Formatter<'_>, c: &Rational, body: Option<String>| {
            let neg = c.is_negative();
            let mag = c.abs();
            let text = match body {
                Some(name) if mag.is_one() => name,
                Some(name) => format!("{}*{}", fmt_rational(&mag), name),
                None => fmt_rational(&mag),
            };
            let res = match (first, neg) {
                (true, false) => write!(f, "{text}"),
                (true, true) => write!(f, "-{text}"),
                (false, false) => write!(f, " + {text}"),
                (false, true) => write!(f, " - {text}"),
            };
            first = false;
            res
        };
        for (v, c) in &self.expr.coeffs {
            emit(f, c, Some(var_name(self.names, *v)))?;
        }
        if !self.expr.constant.is_zero() || self.expr.coeffs.is_empty() {
            emit(f, &self.expr.constant, None)?;
        }
        Ok(())
    }
}
