//! Affine loops `while φ do x ← A·x + a`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};


use crate::affine::{AffineExpr, Rational, VarId};

/// Conjunction of strict inequalities `atom > 0`. Empty means `true`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Guard {
    pub atoms: Vec<AffineExpr>,
}

impl Guard {
    pub fn new(atoms: Vec<AffineExpr>) -> Self {
        Guard { atoms }
    }

    pub fn holds(&self, state: &[BigInt]) -> bool {
        self.atoms.iter().all(|a| a.sign_int(state).is_gt())
    }

    pub fn is_true(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// Square integer matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    rows: Vec<Vec<BigInt>>,
}

impl IntMatrix {
    pub fn new(rows: Vec<Vec<BigInt>>) -> Self {
        let d = rows.len();
        assert!(rows.iter().all(|r| r.len() == d), "matrix must be square");
        IntMatrix { rows }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::new(
            rows.iter()
                .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
                .collect(),
        )
    }

    pub fn identity(d: usize) -> Self {
        Self::new(
            (0..d)
                .map(|i| (0..d).map(|j| BigInt::from((i == j) as i64)).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        let d = self.dim();
        IntMatrix::new(
            (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| (0..d).map(|k| &self.rows[i][k] * &other.rows[k][j]).sum())
                        .collect()
                })
                .collect(),
        )
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        self.rows
            .iter()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn is_lower_triangular(&self) -> bool {
        (0..self.dim()).all(|i| (i + 1..self.dim()).all(|j| self.rows[i][j].is_zero()))
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.dim()).all(|i| (0..i).all(|j| self.rows[i][j].is_zero()))
    }
}

/// An affine integer loop.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Loop {
    pub var_names: Vec<String>,
    pub guard: Guard,
    pub matrix: IntMatrix,
    pub offset: Vec<BigInt>,
}

impl Loop {
    pub fn new(var_names: Vec<String>, guard: Guard, matrix: IntMatrix, offset: Vec<BigInt>) -> Self {
        assert!(!var_names.is_empty(), "a loop needs at least one variable");
        assert_eq!(matrix.dim(), var_names.len());
        assert_eq!(offset.len(), var_names.len());
        Loop {
            var_names,
            guard,
            matrix,
            offset,
        }
    }

    pub fn dim(&self) -> usize {
        self.var_names.len()
    }

    /// `f(x) = A·x + a`.
    pub fn step(&self, state: &[BigInt]) -> Vec<BigInt> {
        self.matrix
            .mul_vec(state)
            .into_iter()
            .zip(&self.offset)
            .map(|(v, a)| v + a)
            .collect()
    }

    /// The update of variable `i` as an affine expression over the old state.
    pub fn update_expr(&self, i: usize) -> AffineExpr {
        AffineExpr::from_parts(
            self.matrix.rows()[i]
                .iter()
                .enumerate()
                .map(|(j, c)| (VarId(j), Rational::from_integer(c.clone()))),
            Rational::from_integer(self.offset[i].clone()),
        )
    }

    /// Lower triangular with a non-negative diagonal.
    pub fn is_nnt(&self) -> bool {
        self.matrix.is_lower_triangular()
            && (0..self.dim()).all(|i| !self.matrix.get(i, i).is_negative())
    }
}

impl fmt::Display for Loop {
    /// Canonical rendering in the loop input language.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vars: {}", self.var_names.join(" "))?;
        if self.guard.is_true() {
            writeln!(f, "guard: true")?;
        } else {
            let atoms: Vec<String> = self
                .guard
                .atoms
                .iter()
                .map(|a| format!("{} > 0", a.display(&self.var_names)))
                .collect();
            writeln!(f, "guard: {}", atoms.join(" && "))?;
        }
        writeln!(f, "update:")?;
        for (i, name) in self.var_names.iter().enumerate() {
            writeln!(f, "{name} := {}", self.update_expr(i).display(&self.var_names))?;
        }
        Ok(())
    }
}
