//! Concrete execution of loops, used to check closed forms, chaining and
//! witnesses against ground truth.

use num_bigint::BigInt;
use thiserror::Error;

use crate::program::Loop;

pub const DEFAULT_HORIZON: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("initial state has {found} values but the loop has {expected} variables")]
pub struct DimensionMismatch {
    pub expected: usize,
    pub found: usize,
}

fn check_dim(lp: &Loop, c: &[BigInt]) -> Result<(), DimensionMismatch> {
    if c.len() == lp.dim() {
        Ok(())
    } else {
        Err(DimensionMismatch {
            expected: lp.dim(),
            found: c.len(),
        })
    }
}

/// `states[i] = fⁱ(c)`; `guard_holds[i]` tells whether the guard held there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub states: Vec<Vec<BigInt>>,
    pub guard_holds: Vec<bool>,
}

impl Trace {
    /// True when the guard failed somewhere, i.e. the loop exited.
    pub fn halted(&self) -> bool {
        self.guard_holds.last() == Some(&false)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Iterates `c, f(c), f²(c), …` without bound.
pub fn orbit<'a>(lp: &'a Loop, c: &[BigInt]) -> impl Iterator<Item = Vec<BigInt>> + 'a {
    std::iter::successors(Some(c.to_vec()), move |s| Some(lp.step(s)))
}

/// Runs the loop from `c` until the guard fails or `horizon` steps were
/// taken. The failing state, if any, is the last one recorded.
pub fn simulate(lp: &Loop, c: &[BigInt], horizon: u64) -> Result<Trace, DimensionMismatch> {
    check_dim(lp, c)?;
    let mut trace = Trace {
        states: Vec::new(),
        guard_holds: Vec::new(),
    };
    for (i, s) in orbit(lp, c).enumerate() {
        let holds = lp.guard.holds(&s);
        trace.states.push(s);
        trace.guard_holds.push(holds);
        if !holds || i as u64 == horizon {
            break;
        }
    }
    Ok(trace)
}

/// Outcome of a bounded check of eventual non-termination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventualCheck {
    /// The guard held on `fⁿ(c)` for every `n` in `(n₀, horizon]`.
    Confirmed(u64),
    /// The guard failed at the horizon itself.
    Inconclusive,
}

/// Streams `fⁿ(c)` for `n = 0..=horizon` and reports the last index where the
/// guard failed.
pub fn check_eventual_witness(
    lp: &Loop,
    c: &[BigInt],
    horizon: u64,
) -> Result<EventualCheck, DimensionMismatch> {
    check_dim(lp, c)?;
    let mut last_fail = 0;
    for (n, s) in orbit(lp, c).take(horizon as usize + 1).enumerate() {
        if !lp.guard.holds(&s) {
            last_fail = n as u64;
        }
    }
    Ok(if last_fail == horizon {
        EventualCheck::Inconclusive
    } else {
        EventualCheck::Confirmed(last_fail)
    })
}

/// `f^{n₀+1}(c)`: a candidate witness of genuine non-termination when `n₀`
/// bounds the guard violations from `c`.
pub fn lift_witness(lp: &Loop, c: &[BigInt], n0: u64) -> Result<Vec<BigInt>, DimensionMismatch> {
    check_dim(lp, c)?;
    Ok(orbit(lp, c)
        .nth(n0 as usize + 1)
        .expect("orbit is infinite"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_loop;

    const DRIFT: &str = "vars: x y\nguard: x > 0\nupdate:\nx := x + y\ny := y - 1\n";
    const EVENTUAL: &str = "vars: x y\nguard: x > 0\nupdate:\nx := x + y\ny := 1\n";

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    /// Hand-rolled stepping over i64, independent of `Loop::step`.
    fn naive(mut x: i64, mut y: i64) -> Vec<i64> {
        let mut xs = vec![x];
        while x > 0 {
            (x, y) = (x + y, y - 1);
            xs.push(x);
        }
        xs
    }

    #[test]
    fn drift_trace_from_three_one() {
        let lp = parse_loop(DRIFT).unwrap();
        let t = simulate(&lp, &ints(&[3, 1]), 100).unwrap();
        let xs: Vec<BigInt> = t.states.iter().map(|s| s[0].clone()).collect();
        assert_eq!(xs, ints(&naive(3, 1)));
        assert_eq!(xs, ints(&[3, 4, 4, 3, 1, -2]));
        assert!(t.halted());
        assert_eq!(t.guard_holds.iter().filter(|h| !**h).count(), 1);
    }

    #[test]
    fn initial_violation() {
        let lp = parse_loop(EVENTUAL).unwrap();
        let t = simulate(&lp, &ints(&[0, 0]), 100).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.halted());
    }

    #[test]
    fn guard_true_runs_to_horizon() {
        let lp = parse_loop("vars: a b\nguard: true\nupdate:\na := 2*a\nb := a + b + 1\n").unwrap();
        let t = simulate(&lp, &ints(&[1, -4]), 50).unwrap();
        assert_eq!(t.len(), 51);
        assert!(t.guard_holds.iter().all(|h| *h));
        assert_eq!(t.states[50][0], BigInt::from(2).pow(50u32));
    }

    #[test]
    fn dimension_mismatch() {
        let lp = parse_loop(EVENTUAL).unwrap();
        assert_eq!(
            simulate(&lp, &ints(&[1]), 3),
            Err(DimensionMismatch {
                expected: 2,
                found: 1
            })
        );
        assert!(check_eventual_witness(&lp, &ints(&[1, 2, 3]), 3).is_err());
    }

    #[test]
    fn eventual_witnesses() {
        let lp = parse_loop(EVENTUAL).unwrap();
        assert_eq!(
            check_eventual_witness(&lp, &ints(&[0, 0]), 100).unwrap(),
            EventualCheck::Confirmed(1)
        );
        assert_eq!(
            check_eventual_witness(&lp, &ints(&[-5, 0]), 100).unwrap(),
            EventualCheck::Confirmed(6)
        );
        let drift = parse_loop(DRIFT).unwrap();
        assert_eq!(
            check_eventual_witness(&drift, &ints(&[3, 1]), DEFAULT_HORIZON).unwrap(),
            EventualCheck::Inconclusive
        );
    }

    #[test]
    fn lifting() {
        let lp = parse_loop(EVENTUAL).unwrap();
        assert_eq!(lift_witness(&lp, &ints(&[0, 0]), 1).unwrap(), ints(&[1, 1]));
        assert_eq!(lift_witness(&lp, &ints(&[4, 7]), 0).unwrap(), ints(&[11, 1]));
        let id = parse_loop("vars: a b\nguard: true\nupdate:\na := a\nb := b\n").unwrap();
        assert_eq!(lift_witness(&id, &ints(&[3, -2]), 17).unwrap(), ints(&[3, -2]));
    }
}
