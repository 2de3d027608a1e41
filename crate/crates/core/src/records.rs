//! Serializable forms of pipeline results. Closed-form records carry exact
//! coefficients as `"p/q"` strings and convert back losslessly.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affine::{fmt_rational, parse_rational, AffineExpr, VarId};
use crate::pe::{CondConj, PeTerm, PolyExp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("unknown variable {0:?} in record")]
    UnknownVariable(String),
    #[error("malformed number {0:?} in record")]
    BadNumber(String),
    #[error("inconsistent condition in record")]
    BadCondition,
}

/// `⟦n = eq ∧ n ≠ ne…⟧`; both empty means no condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct CondRecord {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eq: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub ne: Vec<u64>,
}

/// `⟦cond⟧·(Σ coeffs·x + constant)·n^power·baseⁿ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermRecord {
    pub cond: CondRecord,
    pub coeffs: BTreeMap<String, String>,
    pub constant: String,
    pub power: u32,
    pub base: String,
}

/// One component of a closed form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosedFormRecord {
    pub variable: String,
    pub text: String,
    pub normalized: String,
    pub terms: Vec<TermRecord>,
}

pub fn term_record(t: &PeTerm, names: &[String]) -> TermRecord {
    TermRecord {
        cond: CondRecord {
            eq: t.cond.positive(),
            ne: t.cond.negatives().iter().copied().collect(),
        },
        coeffs: t
            .alpha
            .coeffs()
            .map(|(v, c)| (names[v.index()].clone(), fmt_rational(c)))
            .collect(),
        constant: fmt_rational(t.alpha.constant_term()),
        power: t.npow,
        base: t.base.to_string(),
    }
}

pub fn pe_records(q: &PolyExp, names: &[String]) -> Vec<TermRecord> {
    q.terms().iter().map(|t| term_record(t, names)).collect()
}

fn number(s: &str) -> Result<crate::affine::Rational, RecordError> {
    parse_rational(s).ok_or_else(|| RecordError::BadNumber(s.to_string()))
}

pub fn pe_from_records(terms: &[TermRecord], names: &[String]) -> Result<PolyExp, RecordError> {
    let mut out = Vec::with_capacity(terms.len());
    for t in terms {
        let mut alpha = AffineExpr::constant(number(&t.constant)?);
        for (name, c) in &t.coeffs {
            let i = names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| RecordError::UnknownVariable(name.clone()))?;
            alpha.add_coeff(VarId(i), number(c)?);
        }
        let base: BigUint = t
            .base
            .parse()
            .map_err(|_| RecordError::BadNumber(t.base.clone()))?;
        if base == BigUint::default() {
            return Err(RecordError::BadNumber(t.base.clone()));
        }
        let cond =
            CondConj::new(t.cond.eq, t.cond.ne.iter().copied()).ok_or(RecordError::BadCondition)?;
        out.push(PeTerm::new(cond, alpha, t.power, base));
    }
    Ok(PolyExp::from_terms(out))
}
