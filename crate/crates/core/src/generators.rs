//! Reference circuits: permanent, determinant, comb and seeded random DAGs.

use std::str::FromStr;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circuit::{Circuit, CircuitBuilder, GateDegree, GateId};
use crate::error::{Error, Result};
use crate::field::DEFAULT_SEED;

pub const MAX_MATRIX_N: u32 = 5;
const MAX_ATTEMPTS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Perm,
    Det,
    Comb,
    Random,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perm" => Ok(Family::Perm),
            "det" => Ok(Family::Det),
            "comb" => Ok(Family::Comb),
            "random" => Ok(Family::Random),
            _ => Err(Error::Parameter(format!("unknown family '{s}'"))),
        }
    }
}

/// Parameters of a generated circuit. For the random family `n` is the
/// number of variables and `gates` caps the size, inputs included.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GeneratorSpec {
    pub family: Family,
    pub n: u32,
    pub seed: Option<u64>,
    pub gates: usize,
    pub max_degree: u32,
    pub max_fanin: usize,
    pub homogeneous: bool,
}

impl GeneratorSpec {
    pub fn new(family: Family, n: u32) -> Self {
        GeneratorSpec {
            family,
            n,
            seed: None,
            gates: 12,
            max_degree: 6,
            max_fanin: 3,
            homogeneous: false,
        }
    }

    pub fn random(n: u32, gates: usize, max_degree: u32, seed: u64) -> Self {
        GeneratorSpec {
            seed: Some(seed),
            gates,
            max_degree,
            ..GeneratorSpec::new(Family::Random, n)
        }
    }

    pub fn homogeneous(self, on: bool) -> Self {
        GeneratorSpec {
            homogeneous: on,
            ..self
        }
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<Circuit> {
    match spec.family {
        Family::Perm => gen_perm(spec.n),
        Family::Det => gen_det(spec.n),
        Family::Comb => gen_comb(spec.n),
        Family::Random => gen_random(spec),
    }
}

fn matrix_check(n: u32) -> Result<()> {
    if n == 0 || n > MAX_MATRIX_N {
        return Err(Error::Parameter(format!(
            "matrix size {n} outside 1..={MAX_MATRIX_N}"
        )));
    }
    Ok(())
}

fn is_odd(perm: &[usize]) -> bool {
    let inversions = perm
        .iter()
        .tuple_combinations()
        .filter(|(a, b)| a > b)
        .count();
    inversions % 2 == 1
}

fn matrix_sum(n: u32, signed: bool) -> Result<Circuit> {
    matrix_check(n)?;
    let n = n as usize;
    let mut b = CircuitBuilder::new();
    let x: Vec<GateId> = (0..n * n).map(|v| b.input(v as u32)).collect();
    let minus = (signed && n >= 2).then(|| b.constant(-1));
    let mut terms = Vec::new();
    for perm in (0..n).permutations(n) {
        let mut factors: Vec<GateId> = Vec::with_capacity(n + 1);
        if let Some(m) = minus.filter(|_| is_odd(&perm)) {
            factors.push(m);
        }
        factors.extend(perm.iter().enumerate().map(|(i, &j)| x[i * n + j]));
        terms.push(b.mul(factors));
    }
    let out = b.add(terms);
    b.finish(vec![out])
}

/// `Σ_σ Π_i x_{i,σ(i)}` over variables `x_{i,j} = x_{i·n+j}`.
pub fn gen_perm(n: u32) -> Result<Circuit> {
    matrix_sum(n, false)
}

/// `Σ_σ sgn(σ) Π_i x_{i,σ(i)}`; odd permutations carry a `-1` factor.
pub fn gen_det(n: u32) -> Result<Circuit> {
    matrix_sum(n, true)
}

/// `x0 · (x1 · (… · x_{n-1}))`.
pub fn gen_comb(n: u32) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::Parameter(format!("comb needs n >= 2, got {n}")));
    }
    let mut b = CircuitBuilder::new();
    let x: Vec<GateId> = (0..n).map(|v| b.input(v)).collect();
    let mut acc = x[n as usize - 1];
    for v in (0..n as usize - 1).rev() {
        acc = b.mul(vec![x[v], acc]);
    }
    b.finish(vec![acc])
}

struct RandomBuilder<'a> {
    spec: &'a GeneratorSpec,
    rng: &'a mut ChaCha8Rng,
    b: CircuitBuilder,
    deg: Vec<GateDegree>,
    inputs: Vec<GateId>,
    used: Vec<bool>,
}

impl RandomBuilder<'_> {
    fn push_mul(&mut self, children: Vec<GateId>) -> GateId {
        let d = children
            .iter()
            .fold(GateDegree::ZERO, |acc, g| acc.sum(self.deg[g.0]));
        self.mark(&children);
        let id = self.b.mul(children);
        self.deg.push(d);
        id
    }

    fn push_add(&mut self, children: Vec<GateId>) -> GateId {
        let d = children
            .iter()
            .map(|g| self.deg[g.0])
            .max()
            .expect("non-empty");
        self.mark(&children);
        let id = self.b.add(children);
        self.deg.push(d);
        id
    }

    fn constant(&mut self) -> GateId {
        let mut k: i64 = self.rng.gen_range(1..=3);
        if self.rng.gen_bool(0.5) {
            k = -k;
        }
        let id = self.b.constant(k);
        self.deg.push(GateDegree::ZERO);
        id
    }

    fn remaining(&self) -> usize {
        self.spec.gates.saturating_sub(self.b.len())
    }

    fn fanin(&mut self) -> usize {
        self.rng.gen_range(2..=self.spec.max_fanin.max(2))
    }

    fn mark(&mut self, children: &[GateId]) {
        self.used.resize(self.b.len(), false);
        for g in children {
            self.used[g.0] = true;
        }
    }

    /// Prefers gates that no other gate reads yet, so that little is pruned.
    fn pick(&mut self) -> GateId {
        self.used.resize(self.b.len(), false);
        let fresh: Vec<usize> = (0..self.b.len()).filter(|&i| !self.used[i]).collect();
        if !fresh.is_empty() && self.rng.gen_bool(0.75) {
            return GateId(*fresh.choose(self.rng).expect("non-empty"));
        }
        GateId(self.rng.gen_range(0..self.b.len()))
    }

    fn degree(&self, g: GateId) -> u32 {
        self.deg[g.0].finite().unwrap_or(0)
    }

    /// The non-constant gate with the largest cone, latest on ties.
    fn widest_output(&self) -> Option<GateId> {
        let mut best: Option<(usize, GateId)> = None;
        for i in 0..self.b.len() {
            let g = self.b.gate(GateId(i));
            let mut seen = vec![false; i + 1];
            let mut stack = vec![i];
            let mut size = 0;
            while let Some(j) = stack.pop() {
                if std::mem::replace(&mut seen[j], true) {
                    continue;
                }
                size += 1;
                stack.extend(self.b.gate(GateId(j)).children.iter().map(|c| c.0));
            }
            if self.degree(GateId(i)) >= 1 && !g.is_leaf() && best.is_none_or(|(b, _)| size >= b) {
                best = Some((size, GateId(i)));
            }
        }
        best.map(|(_, g)| g)
    }

    fn try_mul(&mut self) -> Option<GateId> {
        let cap = self.spec.max_degree;
        let k = self.fanin();
        let mut children = Vec::new();
        let mut total = 0;
        for _ in 0..4 * k {
            if children.len() == k {
                break;
            }
            let g = self.pick();
            let d = self.degree(g);
            if total + d <= cap {
                total += d;
                children.push(g);
            }
        }
        (children.len() >= 2 && total >= 1).then(|| self.push_mul(children))
    }

    fn try_add(&mut self) -> Option<GateId> {
        let k = self.fanin();
        if !self.spec.homogeneous {
            let children: Vec<GateId> = (0..k).map(|_| self.pick()).collect();
            return Some(self.push_add(children));
        }
        let first = self.pick();
        let target = self.degree(first);
        if target == 0 {
            return None;
        }
        let same: Vec<GateId> = (0..self.b.len())
            .map(GateId)
            .filter(|g| self.degree(*g) == target && self.deg[g.0] != GateDegree::ZERO)
            .collect();
        let lower: Vec<GateId> = (0..self.b.len())
            .map(GateId)
            .filter(|g| {
                let d = self.degree(*g);
                d >= 1 && d < target && ((target - d) as usize) < self.spec.max_fanin
            })
            .collect();
        let mut children = vec![first];
        if !lower.is_empty() && self.remaining() >= 2 && self.rng.gen_bool(0.5) {
            // pad a lower-degree gate with variables up to the target degree
            let low = *lower.choose(self.rng).expect("non-empty");
            let mut factors = vec![low];
            for _ in self.degree(low)..target {
                factors.push(*self.inputs.choose(self.rng).expect("n >= 1"));
            }
            children.push(self.push_mul(factors));
        }
        while children.len() < k {
            children.push(*same.choose(self.rng).expect("contains first"));
        }
        Some(self.push_add(children))
    }

    fn try_scal(&mut self) -> Option<GateId> {
        if self.remaining() < 2 {
            return None;
        }
        let g = self.pick();
        if self.degree(g) == 0 {
            return None;
        }
        let k = self.constant();
        let d = self.deg[g.0];
        self.mark(&[k, g]);
        let id = self.b.scal(k, g);
        self.deg.push(d);
        Some(id)
    }

    fn step(&mut self) {
        let roll: f64 = self.rng.gen();
        let made = if roll < 0.45 {
            self.try_mul()
        } else if roll < 0.85 {
            self.try_add()
        } else if roll < 0.95 {
            self.try_scal()
        } else {
            Some(self.constant())
        };
        if made.is_none() && self.remaining() > 0 {
            // fall back to a variable product within the cap
            let x = *self.inputs.choose(self.rng).expect("n >= 1");
            let y = *self.inputs.choose(self.rng).expect("n >= 1");
            if self.spec.max_degree >= 2 {
                self.push_mul(vec![x, y]);
            } else {
                self.push_add(vec![x, y]);
            }
        }
    }
}

/// Seeded random DAG circuit: all `n` variables, then random sums, products
/// and scalings until `gates` gates exist. The non-constant gate with the
/// largest cone is the output and unreachable gates are pruned. In
/// homogeneous mode the children of every sum share one degree,
/// lower-degree operands being padded by variable products.
pub fn gen_random(spec: &GeneratorSpec) -> Result<Circuit> {
    if spec.n == 0 {
        return Err(Error::Parameter("random circuits need n >= 1".into()));
    }
    if spec.max_degree == 0 {
        return Err(Error::Parameter("degree cap must be positive".into()));
    }
    if spec.gates <= spec.n as usize {
        return Err(Error::Parameter(format!(
            "gate cap {} leaves no room beyond {} inputs",
            spec.gates, spec.n
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.unwrap_or(DEFAULT_SEED));
    for _ in 0..MAX_ATTEMPTS {
        let mut r = RandomBuilder {
            spec,
            rng: &mut rng,
            b: CircuitBuilder::new(),
            deg: Vec::new(),
            inputs: Vec::new(),
            used: Vec::new(),
        };
        for v in 0..spec.n {
            let id = r.b.input(v);
            r.deg.push(GateDegree::Finite(1));
            r.inputs.push(id);
        }
        while r.remaining() > 0 {
            r.step();
        }
        let Some(out) = r.widest_output() else {
            continue;
        };
        let c = r.b.finish(vec![out])?.prune();
        if spec.homogeneous && !c.is_homogeneous() {
            continue;
        }
        return Ok(c);
    }
    Err(Error::Generation {
        attempts: MAX_ATTEMPTS,
        reason: "no attempt produced a non-constant output within the caps".into(),
    })
}
