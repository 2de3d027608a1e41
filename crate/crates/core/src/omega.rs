//! Omega test: exact integer satisfiability of conjunctions of linear
//! equalities and inequalities.
//!
//! Equalities are removed by substitution (with Pugh's symmetric-modulo
//! trick when no coefficient is ±1). Inequalities are removed one variable
//! at a time: exact Fourier–Motzkin when a unit coefficient makes the real
//! shadow exact, otherwise dark shadow, real shadow and splinters. Models are
//! rebuilt by back-substitution, picking the value closest to zero inside
//! each variable's bounds.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("solver step budget of {0} exhausted")]
    ResourceLimit(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// `expr = 0`
    Eq,
    /// `expr >= 0`
    Geq,
}

/// `Σ coeffs[v]·x_v + constant (= | ≥) 0` over integer variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntConstraint {
    pub coeffs: BTreeMap<usize, BigInt>,
    pub constant: BigInt,
    pub relation: Relation,
}

impl IntConstraint {
    pub fn new(coeffs: BTreeMap<usize, BigInt>, constant: BigInt, relation: Relation) -> Self {
        let coeffs = coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        IntConstraint {
            coeffs,
            constant,
            relation,
        }
    }

    pub fn holds(&self, model: &[BigInt]) -> bool {
        let v: BigInt = self.constant.clone()
            + self
                .coeffs
                .iter()
                .map(|(i, c)| c * model.get(*i).cloned().unwrap_or_default())
                .sum::<BigInt>();
        match self.relation {
            Relation::Eq => v.is_zero(),
            Relation::Geq => !v.is_negative(),
        }
    }
}

pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Solver state; the step counter is shared across all sub-problems.
#[derive(Debug)]
pub struct Omega {
    budget: u64,
    steps: u64,
}

impl Default for Omega {
    fn default() -> Self {
        Self::new(DEFAULT_BUDGET)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Lin {
    coeffs: BTreeMap<usize, BigInt>,
    k: BigInt,
}

type Model = BTreeMap<usize, BigInt>;

impl Lin {
    fn coeff(&self, v: usize) -> BigInt {
        self.coeffs.get(&v).cloned().unwrap_or_default()
    }

    fn eval(&self, model: &Model) -> BigInt {
        self.k.clone()
            + self
                .coeffs
                .iter()
                .map(|(v, c)| c * model.get(v).cloned().unwrap_or_default())
                .sum::<BigInt>()
    }

    fn scale(&self, s: &BigInt) -> Lin {
        Lin {
            coeffs: self
                .coeffs
                .iter()
                .map(|(v, c)| (*v, c * s))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
            k: &self.k * s,
        }
    }

    fn add(&self, other: &Lin) -> Lin {
        let mut coeffs = self.coeffs.clone();
        for (v, c) in &other.coeffs {
            let e = coeffs.entry(*v).or_default();
            *e += c;
            if e.is_zero() {
                coeffs.remove(v);
            }
        }
        Lin {
            coeffs,
            k: &self.k + &other.k,
        }
    }

    /// Replaces `x_v` by `def`.
    fn substitute(&self, v: usize, def: &Lin) -> Lin {
        match self.coeffs.get(&v) {
            None => self.clone(),
            Some(c) => {
                let mut rest = self.clone();
                rest.coeffs.remove(&v);
                rest.add(&def.scale(c))
            }
        }
    }

    fn without(&self, v: usize) -> Lin {
        let mut out = self.clone();
        out.coeffs.remove(&v);
        out
    }

    fn gcd(&self) -> BigInt {
        self.coeffs
            .values()
            .fold(BigInt::zero(), |g, c| g.gcd(c))
    }
}

/// `a mod̂ m = a - m·⌊a/m + 1/2⌋`, the residue in `[-m/2, m/2)`.
fn mod_hat(a: &BigInt, m: &BigInt) -> BigInt {
    let two = BigInt::from(2);
    let q = (&two * a + m).div_floor(&(&two * m));
    a - m * q
}

#[derive(Debug, Clone, Default)]
struct Problem {
    eqs: Vec<Lin>,
    geqs: Vec<Lin>,
    next_var: usize,
}

impl Problem {
    fn vars(&self) -> BTreeSet<usize> {
        self.eqs
            .iter()
            .chain(&self.geqs)
            .flat_map(|l| l.coeffs.keys().copied())
            .collect()
    }

    /// Divides by coefficient gcds, tightens inequalities, folds ground
    /// constraints, merges parallel inequalities. `false` on contradiction.
    fn normalize(&mut self) -> bool {
        let mut eqs = Vec::new();
        for e in self.eqs.drain(..) {
            let g = e.gcd();
            if g.is_zero() {
                if !e.k.is_zero() {
                    return false;
                }
                continue;
            }
            if !e.k.is_multiple_of(&g) {
                return false;
            }
            let mut e = Lin {
                coeffs: e.coeffs.into_iter().map(|(v, c)| (v, c / &g)).collect(),
                k: e.k / &g,
            };
            // canonical sign: first coefficient positive
            if e.coeffs.values().next().is_some_and(Signed::is_negative) {
                e = e.scale(&-BigInt::one());
            }
            if !eqs.contains(&e) {
                eqs.push(e);
            }
        }

        // tightest constant per coefficient vector
        let mut tight: BTreeMap<BTreeMap<usize, BigInt>, BigInt> = BTreeMap::new();
        for l in self.geqs.drain(..) {
            let g = l.gcd();
            if g.is_zero() {
                if l.k.is_negative() {
                    return false;
                }
                continue;
            }
            let coeffs: BTreeMap<usize, BigInt> =
                l.coeffs.into_iter().map(|(v, c)| (v, c / &g)).collect();
            let k = l.k.div_floor(&g);
            tight
                .entry(coeffs)
                .and_modify(|old| {
                    if k < *old {
                        *old = k.clone()
                    }
                })
                .or_insert(k);
        }
        let mut geqs = Vec::new();
        for (coeffs, k) in &tight {
            let neg: BTreeMap<usize, BigInt> = coeffs.iter().map(|(v, c)| (*v, -c)).collect();
            if let Some(k2) = tight.get(&neg) {
                let s = k + k2;
                if s.is_negative() {
                    return false;
                }
                if s.is_zero() {
                    // c·x + k >= 0 and -c·x - k >= 0
                    let e = Lin {
                        coeffs: coeffs.clone(),
                        k: k.clone(),
                    };
                    let e = if e.coeffs.values().next().is_some_and(Signed::is_negative) {
                        e.scale(&-BigInt::one())
                    } else {
                        e
                    };
                    if !eqs.contains(&e) {
                        eqs.push(e);
                    }
                    continue;
                }
            }
            geqs.push(Lin {
                coeffs: coeffs.clone(),
                k: k.clone(),
            });
        }
        self.eqs = eqs;
        self.geqs = geqs;
        true
    }

    fn substitute(&mut self, v: usize, def: &Lin) {
        for l in self.eqs.iter_mut().chain(self.geqs.iter_mut()) {
            *l = l.substitute(v, def);
        }
    }
}

/// Value closest to zero in `[lo, hi]` (either side may be open).
fn pick(lo: Option<BigInt>, hi: Option<BigInt>) -> BigInt {
    let mut v = BigInt::zero();
    if let Some(lo) = lo {
        if lo > v {
            v = lo;
        }
    }
    if let Some(hi) = hi {
        if hi < v {
            v = hi;
        }
    }
    v
}

/// Bounds on `x_v` implied by `geqs` under `model`, and a value inside.
fn choose_value(v: usize, geqs: &[Lin], model: &Model) -> BigInt {
    let mut lo: Option<BigInt> = None;
    let mut hi: Option<BigInt> = None;
    for l in geqs {
        let a = l.coeff(v);
        if a.is_zero() {
            continue;
        }
        let rest = l.without(v).eval(model);
        if a.is_positive() {
            // a·x >= -rest
            let b = (-rest).div_ceil(&a);
            lo = Some(lo.map_or(b.clone(), |x| x.max(b)));
        } else {
            // |a|·x <= rest
            let b = rest.div_floor(&(-a));
            hi = Some(hi.map_or(b.clone(), |x| x.min(b)));
        }
    }
    if let (Some(lo), Some(hi)) = (&lo, &hi) {
        assert!(lo <= hi, "omega: empty bounds while rebuilding model for x{v}");
    }
    pick(lo, hi)
}

impl Omega {
    pub fn new(budget: u64) -> Self {
        Omega { budget, steps: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// A model over `0..nvars`, or `None` if the conjunction has no integer
    /// solution.
    pub fn solve(
        &mut self,
        nvars: usize,
        constraints: &[IntConstraint],
    ) -> Result<Option<Vec<BigInt>>, SolverError> {
        let mut pb = Problem {
            next_var: nvars,
            ..Problem::default()
        };
        for c in constraints {
            if let Some(&bad) = c.coeffs.keys().find(|&&v| v >= nvars) {
                panic!("constraint mentions x{bad} but only {nvars} variables exist");
            }
            let lin = Lin {
                coeffs: c.coeffs.clone(),
                k: c.constant.clone(),
            };
            match c.relation {
                Relation::Eq => pb.eqs.push(lin),
                Relation::Geq => pb.geqs.push(lin),
            }
        }
        Ok(self.solve_problem(pb)?.map(|m| {
            (0..nvars)
                .map(|v| m.get(&v).cloned().unwrap_or_default())
                .collect()
        }))
    }

    fn tick(&mut self) -> Result<(), SolverError> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(SolverError::ResourceLimit(self.budget))
        } else {
            Ok(())
        }
    }

    fn solve_problem(&mut self, mut pb: Problem) -> Result<Option<Model>, SolverError> {
        self.tick()?;
        if !pb.normalize() {
            return Ok(None);
        }
        let vars = pb.vars();
        let model = if !pb.eqs.is_empty() {
            self.eliminate_equality(pb)?
        } else if pb.geqs.is_empty() {
            Some(Model::new())
        } else {
            self.eliminate_inequalities(pb)?
        };
        Ok(model.map(|mut m| {
            for v in vars {
                m.entry(v).or_default();
            }
            m
        }))
    }

    fn eliminate_equality(&mut self, mut pb: Problem) -> Result<Option<Model>, SolverError> {
        // pick the equality with the smallest coefficient overall
        let (idx, v) = pb
            .eqs
            .iter()
            .enumerate()
            .flat_map(|(i, e)| e.coeffs.iter().map(move |(v, c)| (c.abs(), i, *v)))
            .min()
            .map(|(_, i, v)| (i, v))
            .expect("normalized equalities have a variable");
        let eq = pb.eqs.swap_remove(idx);
        let a = eq.coeff(v);
        if a.abs().is_one() {
            // x_v = -(rest)/a = -a·rest
            let def = eq.without(v).scale(&-&a);
            pb.substitute(v, &def);
            let model = self.solve_problem(pb)?;
            return Ok(model.map(|mut m| {
                let val = def.eval(&m);
                m.insert(v, val);
                m
            }));
        }
        // |a| >= 2: introduce σ with m·σ = Σ (a_i mod̂ m)·x_i + (k mod̂ m),
        // m = |a| + 1, where a mod̂ m = -sign(a).
        let m = a.abs() + BigInt::one();
        let sign = a.signum();
        let sigma = pb.next_var;
        pb.next_var += 1;
        let mut def = Lin {
            coeffs: BTreeMap::new(),
            k: mod_hat(&eq.k, &m),
        };
        def.coeffs.insert(sigma, -&m);
        for (u, c) in &eq.coeffs {
            if *u != v {
                let r = mod_hat(c, &m);
                if !r.is_zero() {
                    def.coeffs.insert(*u, r);
                }
            }
        }
        let def = def.scale(&sign);
        pb.eqs.push(eq);
        pb.substitute(v, &def);
        let model = self.solve_problem(pb)?;
        Ok(model.map(|mut m| {
            let val = def.eval(&m);
            m.insert(v, val);
            m.remove(&sigma);
            m
        }))
    }

    fn eliminate_inequalities(&mut self, pb: Problem) -> Result<Option<Model>, SolverError> {
        let vars = pb.vars();
        // one-sided variables: every constraint on them can be satisfied
        for &v in &vars {
            let signs: BTreeSet<bool> = pb
                .geqs
                .iter()
                .filter_map(|l| l.coeffs.get(&v).map(Signed::is_positive))
                .collect();
            if signs.len() == 1 {
                let (with, without): (Vec<Lin>, Vec<Lin>) =
                    pb.geqs.iter().cloned().partition(|l| l.coeffs.contains_key(&v));
                let sub = Problem {
                    geqs: without,
                    ..pb.clone()
                };
                return Ok(self.solve_problem(sub)?.map(|mut m| {
                    let val = choose_value(v, &with, &m);
                    m.insert(v, val);
                    m
                }));
            }
        }

        let v = pick_variable(&pb, &vars);
        let (with, without): (Vec<Lin>, Vec<Lin>) =
            pb.geqs.iter().cloned().partition(|l| l.coeffs.contains_key(&v));
        let (lower, upper): (Vec<Lin>, Vec<Lin>) =
            with.iter().cloned().partition(|l| l.coeff(v).is_positive());
        let exact = lower.iter().all(|l| l.coeff(v).is_one())
            || upper.iter().all(|l| (-l.coeff(v)).is_one());

        let shadow = |dark: bool| {
            let mut geqs = without.clone();
            for lo in &lower {
                let a = lo.coeff(v);
                for up in &upper {
                    let b = -up.coeff(v);
                    // a·x >= -α, b·x <= β  ⇒  a·β + b·α >= 0
                    let mut comb = up.without(v).scale(&a).add(&lo.without(v).scale(&b));
                    if dark {
                        comb.k -= (&a - 1) * (&b - 1);
                    }
                    geqs.push(comb);
                }
            }
            Problem {
                geqs,
                ..pb.clone()
            }
        };
        let rebuild = |m: Option<Model>| {
            m.map(|mut m| {
                let val = choose_value(v, &with, &m);
                m.insert(v, val);
                m
            })
        };

        if exact {
            return Ok(rebuild(self.solve_problem(shadow(false))?));
        }
        if let Some(m) = self.solve_problem(shadow(true))? {
            return Ok(rebuild(Some(m)));
        }
        if self.solve_problem(shadow(false))?.is_none() {
            return Ok(None);
        }
        // splinters: some lower bound a·x >= -α is nearly tight,
        // a·x + α = i with 0 <= i <= (a·M - a - M)/M, M the largest upper
        // coefficient.
        let max_upper = upper
            .iter()
            .map(|l| -l.coeff(v))
            .max()
            .expect("two-sided variable");
        for lo in &lower {
            let a = lo.coeff(v);
            let limit = (&a * &max_upper - &a - &max_upper).div_floor(&max_upper);
            let mut i = BigInt::zero();
            while i <= limit {
                let mut sub = pb.clone();
                let mut eq = lo.clone();
                eq.k -= &i;
                sub.eqs.push(eq);
                if let Some(m) = self.solve_problem(sub)? {
                    return Ok(Some(m));
                }
                i += 1;
            }
        }
        Ok(None)
    }
}

/// Prefers variables with an exact projection, then the fewest produced
/// constraints, then the lowest index.
fn pick_variable(pb: &Problem, vars: &BTreeSet<usize>) -> usize {
    vars.iter()
        .map(|&v| {
            let lower: Vec<BigInt> = pb
                .geqs
                .iter()
                .map(|l| l.coeff(v))
                .filter(|c| c.is_positive())
                .collect();
            let upper: Vec<BigInt> = pb
                .geqs
                .iter()
                .map(|l| -l.coeff(v))
                .filter(|c| c.is_positive())
                .collect();
            let exact = lower.iter().all(One::is_one) || upper.iter().all(One::is_one);
            ((!exact) as u8, lower.len() * upper.len(), v)
        })
        .min()
        .map(|(_, _, v)| v)
        .expect("non-empty variable set")
}
