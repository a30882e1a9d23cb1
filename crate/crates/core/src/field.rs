//! Circuit evaluation over a word-sized prime field and randomized
//! equivalence testing.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{Circuit, GateDegree, GateId, GateKind};
use crate::error::{Error, Result};
use crate::poly::{expand_outputs, SparsePolynomial};

/// 2^61 - 1.
pub const DEFAULT_PRIME: u64 = (1u64 << 61) - 1;
pub const DEFAULT_TRIALS: usize = 20;
pub const DEFAULT_SEED: u64 = 0x00c0_ffee;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PrimeField {
    modulus: u64,
}

impl Default for PrimeField {
    fn default() -> Self {
        PrimeField {
            modulus: DEFAULT_PRIME,
        }
    }
}

impl PrimeField {
    /// Accepts a prime modulus below 2^63.
    pub fn new(modulus: u64) -> Result<Self> {
        if modulus >= 1 << 63 {
            return Err(Error::Config(format!(
                "modulus {modulus} must be below 2^63"
            )));
        }
        if !is_prime(modulus) {
            return Err(Error::Config(format!("modulus {modulus} is not prime")));
        }
        Ok(PrimeField { modulus })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.modulus {
            s - self.modulus
        } else {
            s
        }
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.modulus as u128) as u64
    }

    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.modulus - a
        }
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        self.add(a, self.neg(b))
    }

    pub fn reduce(&self, v: &BigInt) -> u64 {
        let p = BigInt::from(self.modulus);
        let mut r = v % &p;
        if r < BigInt::zero() {
            r += &p;
        }
        r.to_u64().expect("residue fits in u64")
    }

    pub fn random(&self, rng: &mut impl Rng) -> u64 {
        rng.gen_range(0..self.modulus)
    }

    /// Fails unless the modulus exceeds `degree`.
    pub fn check_degree(&self, degree: GateDegree) -> Result<()> {
        if let GateDegree::Finite(d) = degree {
            if self.modulus <= d as u64 {
                return Err(Error::Config(format!(
                    "modulus {} does not exceed the degree {d}",
                    self.modulus
                )));
            }
        }
        Ok(())
    }
}

fn pow_mod(b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u128 % m as u128;
    let mut base = b as u128 % m as u128;
    while e > 0 {
        if e & 1 == 1 {
            r = r * base % m as u128;
        }
        base = base * base % m as u128;
        e >>= 1;
    }
    r as u64
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = ((x as u128 * x as u128) % n as u128) as u64;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Values of every gate at `point` (indexed by variable).
pub fn evaluate_all(c: &Circuit, point: &[u64], field: &PrimeField) -> Result<Vec<u64>> {
    let mut vals: Vec<u64> = Vec::with_capacity(c.size());
    for gate in c.gates() {
        let v = match &gate.kind {
            GateKind::Input(x) => {
                let v = *point.get(*x as usize).ok_or(Error::MissingVariable(*x))?;
                v % field.modulus
            }
            GateKind::Const(k) => field.reduce(k),
            GateKind::Add => gate
                .children
                .iter()
                .fold(0, |acc, ch| field.add(acc, vals[ch.0])),
            GateKind::Mul | GateKind::Scal => gate
                .children
                .iter()
                .fold(1 % field.modulus, |acc, ch| field.mul(acc, vals[ch.0])),
        };
        vals.push(v);
    }
    Ok(vals)
}

pub fn evaluate(c: &Circuit, output: GateId, point: &[u64], field: &PrimeField) -> Result<u64> {
    c.gate(output)?;
    Ok(evaluate_all(c, point, field)?[output.0])
}

/// Evaluates a polynomial at a point of the field.
pub fn evaluate_poly(
    p: &SparsePolynomial<BigInt>,
    point: &[u64],
    field: &PrimeField,
) -> Result<u64> {
    let mut acc = 0;
    for (m, c) in p.terms() {
        let mut t = field.reduce(c);
        for &(v, e) in m.exponents() {
            let x = *point.get(v as usize).ok_or(Error::MissingVariable(v))?;
            for _ in 0..e {
                t = field.mul(t, x);
            }
        }
        acc = field.add(acc, t);
    }
    Ok(acc)
}

fn random_point(field: &PrimeField, vars: usize, seed: u64, trial: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    (0..vars).map(|_| field.random(&mut rng)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EquivalenceVerdict {
    pub equal: bool,
    pub trials: usize,
    /// A point where the two circuits differ, when one was found.
    pub failure_point: Option<Vec<u64>>,
}

/// Schwartz-Zippel comparison of two circuits output by output.
///
/// Trial `i` draws its point from a ChaCha8 stream `i` seeded with `seed`,
/// so verdicts do not depend on scheduling. The reported failure point is
/// the one of the lowest failing trial.
pub fn equivalent(
    c1: &Circuit,
    c2: &Circuit,
    trials: usize,
    field: &PrimeField,
    seed: u64,
) -> Result<EquivalenceVerdict> {
    if c1.outputs().len() != c2.outputs().len() {
        return Err(Error::Config(format!(
            "circuits have {} and {} outputs",
            c1.outputs().len(),
            c2.outputs().len()
        )));
    }
    field.check_degree(c1.degree().max(c2.degree()))?;
    let vars = c1.var_space().max(c2.var_space());
    let outcomes: Vec<Option<Vec<u64>>> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<Option<Vec<u64>>> {
            let point = random_point(field, vars, seed, t);
            let v1 = evaluate_all(c1, &point, field)?;
            let v2 = evaluate_all(c2, &point, field)?;
            let differs = c1
                .outputs()
                .iter()
                .zip(c2.outputs())
                .any(|(a, b)| v1[a.0] != v2[b.0]);
            Ok(differs.then_some(point))
        })
        .collect::<Result<_>>()?;
    let failure_point = outcomes.into_iter().flatten().next();
    Ok(EquivalenceVerdict {
        equal: failure_point.is_none(),
        trials,
        failure_point,
    })
}

/// Marks gates that evaluate to 0 at every one of `trials` random points.
pub fn zero_gates(c: &Circuit, trials: usize, field: &PrimeField, seed: u64) -> Result<Vec<bool>> {
    let vars = c.var_space();
    let evals: Vec<Vec<u64>> = (0..trials)
        .into_par_iter()
        .map(|t| evaluate_all(c, &random_point(field, vars, seed, t), field))
        .collect::<Result<_>>()?;
    Ok((0..c.size())
        .map(|g| evals.iter().all(|v| v[g] == 0))
        .collect())
}

/// Settings shared by every semantic check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CheckConfig {
    pub prime: u64,
    pub trials: usize,
    pub seed: u64,
    pub term_budget: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            prime: DEFAULT_PRIME,
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            term_budget: crate::poly::DEFAULT_TERM_BUDGET,
        }
    }
}

impl CheckConfig {
    pub fn field(&self) -> Result<PrimeField> {
        PrimeField::new(self.prime)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckMethod {
    Exact,
    Randomized,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EquivalenceReport {
    pub method: CheckMethod,
    pub equal: bool,
    pub trials: usize,
    pub seed: u64,
    pub prime: u64,
    pub failure_point: Option<Vec<u64>>,
}

/// Compares two circuits output by output: exactly when both expand within
/// the term budget, otherwise by random evaluation.
pub fn verify_equivalent(
    c1: &Circuit,
    c2: &Circuit,
    cfg: &CheckConfig,
) -> Result<EquivalenceReport> {
    let field = cfg.field()?;
    let exact = match (
        expand_outputs(c1, cfg.term_budget),
        expand_outputs(c2, cfg.term_budget),
    ) {
        (Ok(a), Ok(b)) => Some(a == b),
        (Err(Error::TermBudget { .. }), _) | (_, Err(Error::TermBudget { .. })) => None,
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let mut report = EquivalenceReport {
        method: CheckMethod::Randomized,
        equal: true,
        trials: cfg.trials,
        seed: cfg.seed,
        prime: cfg.prime,
        failure_point: None,
    };
    match exact {
        Some(true) => {
            report.method = CheckMethod::Exact;
            report.trials = 0;
        }
        Some(false) => {
            report.method = CheckMethod::Exact;
            report.equal = false;
            let v = equivalent(c1, c2, cfg.trials.max(1), &field, cfg.seed)?;
            report.failure_point = v.failure_point;
        }
        None => {
            let v = equivalent(c1, c2, cfg.trials, &field, cfg.seed)?;
            report.equal = v.equal;
            report.failure_point = v.failure_point;
        }
    }
    Ok(report)
}
