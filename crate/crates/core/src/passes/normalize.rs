use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::circuit::{Circuit, CircuitBuilder, Gate, GateDegree, GateId, GateKind};
use crate::error::Result;
use crate::field::{zero_gates, CheckConfig};

#[derive(Clone, Debug)]
enum Val {
    Const(BigInt),
    Gate(GateId),
}

/// Builder that tracks the degree of every gate it creates.
struct Normalizer {
    b: CircuitBuilder,
    deg: Vec<GateDegree>,
}

impl Normalizer {
    fn push(&mut self, gate: Gate, degree: GateDegree) -> GateId {
        let id = self.b.push(gate);
        if id.0 == self.deg.len() {
            self.deg.push(degree);
        }
        id
    }

    fn constant(&mut self, k: &BigInt) -> GateId {
        let d = if k.is_zero() {
            GateDegree::NegInfinity
        } else {
            GateDegree::ZERO
        };
        self.push(Gate::constant(k.clone()), d)
    }

    fn materialize(&mut self, v: &Val) -> GateId {
        match v {
            Val::Const(k) => self.constant(k),
            Val::Gate(g) => *g,
        }
    }
}

/// Normal form used by the balancing pass:
///
/// - gates found to compute 0 are replaced by the constant 0, which is then
///   dropped from sums and annihilates products;
/// - gates whose children are all constants are folded;
/// - a product with constant factors becomes `smul(Const k, g)`, or just
///   `g` when `k = 1`;
/// - children of each product are sorted by degree, largest rightmost;
/// - unary sums and products are bypassed.
///
/// Zero detection evaluates the circuit at random points (see
/// [`zero_gates`]); constants are folded exactly.
pub fn normalize(c: &Circuit) -> Result<Circuit> {
    normalize_with(c, &CheckConfig::default())
}

pub fn normalize_with(c: &Circuit, cfg: &CheckConfig) -> Result<Circuit> {
    let zero = zero_gates(c, cfg.trials, &cfg.field()?, cfg.seed)?;
    let mut n = Normalizer {
        b: CircuitBuilder::hash_consing(),
        deg: Vec::new(),
    };
    let live = c.reachable_from(c.outputs());
    let mut vals: Vec<Option<Val>> = vec![None; c.size()];
    for (i, gate) in c.gates().iter().enumerate() {
        if !live[i] {
            continue;
        }
        let children: Vec<Val> = gate
            .children
            .iter()
            .map(|ch| vals[ch.0].clone().expect("children precede parents"))
            .collect();
        let v = match &gate.kind {
            GateKind::Input(x) => Val::Gate(n.push(Gate::input(*x), GateDegree::Finite(1))),
            GateKind::Const(k) => Val::Const(k.clone()),
            _ if zero[i] => Val::Const(BigInt::zero()),
            GateKind::Add => {
                let mut k = BigInt::zero();
                let mut terms = Vec::new();
                for ch in children {
                    match ch {
                        Val::Const(v) => k += v,
                        Val::Gate(g) => terms.push(g),
                    }
                }
                if terms.is_empty() {
                    Val::Const(k)
                } else {
                    if !k.is_zero() {
                        terms.insert(0, n.constant(&k));
                    }
                    if terms.len() == 1 {
                        Val::Gate(terms[0])
                    } else {
                        let d = terms.iter().map(|g| n.deg[g.0]).max().expect("non-empty");
                        Val::Gate(n.push(Gate::add(terms), d))
                    }
                }
            }
            GateKind::Mul | GateKind::Scal => {
                let mut k = BigInt::one();
                let mut factors = Vec::new();
                for ch in children {
                    match ch {
                        Val::Const(v) => k *= v,
                        Val::Gate(g) => factors.push(g),
                    }
                }
                if k.is_zero() || factors.is_empty() {
                    Val::Const(k)
                } else {
                    factors.sort_by_key(|g| n.deg[g.0]);
                    let d = factors
                        .iter()
                        .fold(GateDegree::ZERO, |acc, g| acc.sum(n.deg[g.0]));
                    let p = if factors.len() == 1 {
                        factors[0]
                    } else {
                        n.push(Gate::mul(factors), d)
                    };
                    if k.is_one() {
                        Val::Gate(p)
                    } else {
                        let kc = n.constant(&k);
                        Val::Gate(n.push(Gate::scal(kc, p), d))
                    }
                }
            }
        };
        vals[i] = Some(v);
    }
    let outputs: Vec<GateId> = c
        .outputs()
        .iter()
        .map(|o| {
            let v = vals[o.0].clone().expect("outputs are live");
            n.materialize(&v)
        })
        .collect();
    Ok(n.b.finish_unchecked(outputs).prune())
}

/// True iff `c` is in the form produced by [`normalize`] for a homogeneous
/// circuit with binary products. Zero-freeness is not checked.
pub fn normal_form_violation(c: &Circuit) -> Option<String> {
    let deg = c.degrees();
    let is_output: Vec<bool> = {
        let mut v = vec![false; c.size()];
        for o in c.outputs() {
            v[o.0] = true;
        }
        v
    };
    for (i, gate) in c.gates().iter().enumerate() {
        let child_deg: Vec<GateDegree> = gate.children.iter().map(|ch| deg[ch.0]).collect();
        match &gate.kind {
            GateKind::Input(_) => {}
            GateKind::Const(k) => {
                if k.is_zero() && !is_output[i] {
                    return Some(format!("g{i} is a constant 0 used as an operand"));
                }
            }
            GateKind::Add => {
                if gate.children.len() < 2 {
                    return Some(format!("g{i} is a unary sum"));
                }
                if child_deg.iter().any(|d| *d <= GateDegree::ZERO) {
                    return Some(format!("g{i} sums a constant"));
                }
                if child_deg.windows(2).any(|w| w[0] != w[1]) {
                    return Some(format!("g{i} is not homogeneous"));
                }
            }
            GateKind::Mul => {
                if gate.children.len() != 2 {
                    return Some(format!("g{i} has fan-in {}", gate.children.len()));
                }
                if child_deg.iter().any(|d| *d <= GateDegree::ZERO) {
                    return Some(format!("g{i} multiplies by a constant"));
                }
                if child_deg[0] > child_deg[1] {
                    return Some(format!("g{i} has its larger child on the left"));
                }
            }
            GateKind::Scal => {
                let scalar_is_const = c.gates()[gate.children[0].0].const_value().is_some();
                if !scalar_is_const || child_deg[1] <= GateDegree::ZERO {
                    return Some(format!("g{i} is not of the form smul(const, g)"));
                }
            }
        }
    }
    None
}
