//! Univariate polynomials in `n` with rational coefficients.

use std::fmt;
use std::ops::{Add, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::affine::{fmt_rational, Rational};

/// `coeffs[i]` is the coefficient of `nⁱ`. Trailing zeros are trimmed, so
/// the zero polynomial is the empty list.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Polynomial {
    coeffs: Vec<Rational>,
}

/// Binomial coefficient `C(n, k)` as a rational.
pub(crate) fn binomial(n: u32, k: u32) -> Rational {
    if k > n {
        return Rational::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    Rational::from_integer(acc)
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(coeffs: Vec<Rational>) -> Self {
        let mut p = Polynomial { coeffs };
        p.trim();
        p
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(vec![c])
    }

    /// `c·nᵏ`.
    pub fn monomial(c: Rational, k: usize) -> Self {
        let mut coeffs = vec![Rational::zero(); k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    /// `(n + shift)ᵏ` expanded by the binomial theorem.
    pub fn shifted_power(k: u32, shift: &Rational) -> Self {
        let coeffs = (0..=k)
            .map(|i| binomial(k, i) * pow_rational(shift, k - i))
            .collect();
        Self::new(coeffs)
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Rational {
        self.coeffs.get(i).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn leading(&self) -> Rational {
        self.coeffs.last().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn scale(&self, r: &Rational) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * r).collect())
    }

    /// Horner evaluation.
    pub fn eval(&self, n: &Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * n + c)
    }

    /// `p[n/n-1]`.
    pub fn shift_back(&self) -> Self {
        let minus_one = -Rational::one();
        self.coeffs
            .iter()
            .enumerate()
            .fold(Polynomial::zero(), |acc, (k, c)| {
                acc + Polynomial::shifted_power(k as u32, &minus_one).scale(c)
            })
    }
}

pub(crate) fn pow_rational(base: &Rational, exp: u32) -> Rational {
    num_traits::pow(base.clone(), exp as usize)
}

impl Add for Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: Polynomial) -> Polynomial {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..len).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: Polynomial) -> Polynomial {
        self + rhs.scale(&-Rational::one())
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            let body = match k {
                0 => fmt_rational(&mag),
                _ => {
                    let npow = if k == 1 { "n".to_string() } else { format!("n^{k}") };
                    if mag.is_one() {
                        npow
                    } else {
                        format!("{}*{}", fmt_rational(&mag), npow)
                    }
                }
            };
            match (first, c.is_negative()) {
                (true, false) => write!(f, "{body}")?,
                (true, true) => write!(f, "-{body}")?,
                (false, false) => write!(f, " + {body}")?,
                (false, true) => write!(f, " - {body}")?,
            }
            first = false;
        }
        Ok(())
    }
}
