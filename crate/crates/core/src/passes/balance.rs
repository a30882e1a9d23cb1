//! Multiplicative balancing.
//!
//! For gates `α`, `β` of a normalized circuit, the gate `(α;β)` of the new
//! circuit computes the sum of the parse trees rooted in `α` whose rightmost
//! path reaches `β`, with the subtree under `β` replaced by 1 when `β` is
//! internal. The rightmost path follows every child of a sum and the
//! (maximal degree) right child of a product. The root polynomial is the
//! sum of `(root; l)` over the leaves `l`.
//!
//! Products are split at the unique gate `γ` of the rightmost path where the
//! degree crosses the midpoint, which keeps every factor at most half the
//! degree of the product. Sums of the form `Σ_l (g; l)` are shared as one
//! gate per `g`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::circuit::{Circuit, CircuitBuilder, Gate, GateDegree, GateId, GateKind};
use crate::error::{Error, Result};
use crate::passes::normalize::normal_form_violation;

const STAGE: &str = "balance";

#[derive(Clone, Debug, PartialEq, Eq)]
enum PairVal {
    Zero,
    Scalar(BigInt),
    Gate(GateId),
}

/// Rightmost-path reachability as one bitset per gate.
struct Reach {
    words: usize,
    bits: Vec<u64>,
}

impl Reach {
    fn new(c: &Circuit) -> Self {
        let n = c.size();
        let words = n.div_ceil(64);
        let mut bits = vec![0u64; n * words];
        for (i, gate) in c.gates().iter().enumerate() {
            bits[i * words + i / 64] |= 1 << (i % 64);
            let followed: &[GateId] = match gate.kind {
                GateKind::Add => &gate.children,
                GateKind::Mul | GateKind::Scal => &gate.children[gate.children.len() - 1..],
                _ => &[],
            };
            for ch in followed {
                let (lo, hi) = bits.split_at_mut(i * words);
                let src = &lo[ch.0 * words..(ch.0 + 1) * words];
                for (d, s) in hi[..words].iter_mut().zip(src) {
                    *d |= s;
                }
            }
        }
        Reach { words, bits }
    }

    fn get(&self, from: GateId, to: GateId) -> bool {
        self.bits[from.0 * self.words + to.0 / 64] >> (to.0 % 64) & 1 == 1
    }
}

struct Balancer<'a> {
    c: &'a Circuit,
    deg: Vec<u32>,
    reach: Reach,
    leaves: Vec<GateId>,
    muls: Vec<GateId>,
    pairs: HashMap<(GateId, GateId), PairVal>,
    fulls: HashMap<GateId, PairVal>,
    b: CircuitBuilder,
    out_deg: Vec<u32>,
}

impl<'a> Balancer<'a> {
    fn new(c: &'a Circuit) -> Self {
        let deg = c
            .degrees()
            .into_iter()
            .map(|d| d.finite().unwrap_or(0))
            .collect();
        let leaves = c.ids().filter(|g| c.gates()[g.0].is_leaf()).collect();
        let muls = c
            .ids()
            .filter(|g| c.gates()[g.0].kind == GateKind::Mul)
            .collect();
        Balancer {
            c,
            deg,
            reach: Reach::new(c),
            leaves,
            muls,
            pairs: HashMap::new(),
            fulls: HashMap::new(),
            b: CircuitBuilder::hash_consing(),
            out_deg: Vec::new(),
        }
    }

    fn push(&mut self, gate: Gate, degree: u32) -> GateId {
        let id = self.b.push(gate);
        if id.0 == self.out_deg.len() {
            self.out_deg.push(degree);
        }
        id
    }

    fn gate(&self, g: GateId) -> &'a Gate {
        &self.c.gates()[g.0]
    }

    fn leaf_value(&mut self, g: GateId) -> PairVal {
        match &self.gate(g).kind {
            GateKind::Input(v) => PairVal::Gate(self.push(Gate::input(*v), 1)),
            GateKind::Const(k) if k.is_zero() => PairVal::Zero,
            GateKind::Const(k) => PairVal::Scalar(k.clone()),
            _ => unreachable!("not a leaf"),
        }
    }

    fn value_degree(&self, v: &PairVal) -> u32 {
        match v {
            PairVal::Gate(g) => self.out_deg[g.0],
            _ => 0,
        }
    }

    fn sum(&mut self, vals: Vec<PairVal>) -> PairVal {
        let mut k = BigInt::zero();
        let mut terms = Vec::new();
        for v in vals {
            match v {
                PairVal::Zero => {}
                PairVal::Scalar(s) => k += s,
                PairVal::Gate(g) => terms.push(g),
            }
        }
        if terms.is_empty() {
            return if k.is_zero() {
                PairVal::Zero
            } else {
                PairVal::Scalar(k)
            };
        }
        if !k.is_zero() {
            terms.insert(0, self.push(Gate::constant(k), 0));
        }
        if terms.len() == 1 {
            return PairVal::Gate(terms[0]);
        }
        let d = terms.iter().map(|g| self.out_deg[g.0]).max().unwrap_or(0);
        PairVal::Gate(self.push(Gate::add(terms), d))
    }

    fn product(&mut self, factors: Vec<PairVal>) -> PairVal {
        let mut k = BigInt::one();
        let mut gates = Vec::new();
        for f in factors {
            match f {
                PairVal::Zero => return PairVal::Zero,
                PairVal::Scalar(s) => k *= s,
                PairVal::Gate(g) => gates.push(g),
            }
        }
        if k.is_zero() {
            return PairVal::Zero;
        }
        if gates.is_empty() {
            return PairVal::Scalar(k);
        }
        let d: u32 = gates.iter().map(|g| self.out_deg[g.0]).sum();
        let p = if gates.len() == 1 {
            gates[0]
        } else {
            gates.sort_by_key(|g| self.out_deg[g.0]);
            self.push(Gate::mul(gates), d)
        };
        if k.is_one() {
            PairVal::Gate(p)
        } else {
            let kc = self.push(Gate::constant(k), 0);
            PairVal::Gate(self.push(Gate::scal(kc, p), d))
        }
    }

    /// `[g]`, as the sum over leaves of `(g; l)`.
    fn full(&mut self, g: GateId) -> PairVal {
        if self.gate(g).is_leaf() {
            return self.leaf_value(g);
        }
        if let Some(v) = self.fulls.get(&g) {
            return v.clone();
        }
        let leaves: Vec<GateId> = self
            .leaves
            .iter()
            .copied()
            .filter(|l| self.reach.get(g, *l))
            .collect();
        let vals = leaves.into_iter().map(|l| self.pair(g, l)).collect();
        let v = self.sum(vals);
        self.fulls.insert(g, v.clone());
        v
    }

    fn pair(&mut self, alpha: GateId, beta: GateId) -> PairVal {
        if !self.reach.get(alpha, beta) {
            return PairVal::Zero;
        }
        if let Some(v) = self.pairs.get(&(alpha, beta)) {
            return v.clone();
        }
        let ga = self.gate(alpha);
        let v = if alpha == beta {
            if ga.is_leaf() {
                self.leaf_value(alpha)
            } else {
                PairVal::Scalar(BigInt::one())
            }
        } else {
            match &ga.kind {
                GateKind::Add => {
                    let vals = ga.children.iter().map(|ch| self.pair(*ch, beta)).collect();
                    self.sum(vals)
                }
                GateKind::Scal => {
                    let scalar = self.full(ga.children[0]);
                    let rest = self.pair(ga.children[1], beta);
                    self.product(vec![scalar, rest])
                }
                GateKind::Mul => self.split_mul(alpha, beta),
                GateKind::Input(_) | GateKind::Const(_) => PairVal::Zero,
            }
        };
        self.pairs.insert((alpha, beta), v.clone());
        v
    }

    fn split_mul(&mut self, alpha: GateId, beta: GateId) -> PairVal {
        let d_alpha = self.deg[alpha.0];
        let beta_is_leaf = self.gate(beta).is_leaf();
        let d_beta = self.deg[beta.0];
        let mut terms = Vec::new();
        for gamma in self.muls.clone() {
            if !self.reach.get(alpha, gamma) {
                continue;
            }
            let (gl, gr) = {
                let ch = &self.gate(gamma).children;
                (ch[0], ch[1])
            };
            if !self.reach.get(gr, beta) {
                continue;
            }
            let (dg, dgl, dgr) = (self.deg[gamma.0], self.deg[gl.0], self.deg[gr.0]);
            if beta_is_leaf {
                // deg γ > deg α / 2 >= deg γ_r
                if !(2 * dg > d_alpha && d_alpha >= 2 * dgr) {
                    continue;
                }
                let f = vec![self.pair(alpha, gamma), self.full(gl), self.pair(gr, beta)];
                terms.push(self.product(f));
            } else {
                // deg γ >= (deg α + deg β) / 2 > deg γ_r
                if !(2 * dg >= d_alpha + d_beta && d_alpha + d_beta > 2 * dgr) {
                    continue;
                }
                let above = self.pair(alpha, gamma);
                let below = self.pair(gr, beta);
                if above == PairVal::Zero || below == PairVal::Zero {
                    continue;
                }
                if dgl >= 2 {
                    for mu in self.muls.clone() {
                        if !self.reach.get(gl, mu) {
                            continue;
                        }
                        let (ml, mr) = {
                            let ch = &self.gate(mu).children;
                            (ch[0], ch[1])
                        };
                        // deg μ > deg γ_l / 2 >= deg μ_r
                        if !(2 * self.deg[mu.0] > dgl && dgl >= 2 * self.deg[mr.0]) {
                            continue;
                        }
                        let f = vec![
                            above.clone(),
                            below.clone(),
                            self.pair(gl, mu),
                            self.full(ml),
                            self.full(mr),
                        ];
                        terms.push(self.product(f));
                    }
                } else {
                    let f = vec![above, self.full(gl), below];
                    terms.push(self.product(f));
                }
            }
        }
        self.sum(terms)
    }
}

/// Size bound asserted for the balanced circuit: `s^6 + s^4 + 1`.
pub fn balance_bound(s: usize) -> u128 {
    let s = s as u128;
    s.pow(6) + s.pow(4) + 1
}

/// The tighter `s^6 + s^2 + 1`, reported but not enforced.
pub fn balance_bound_tight(s: usize) -> u128 {
    let s = s as u128;
    s.pow(6) + s.pow(2) + 1
}

/// Balances a normalized homogeneous single-output circuit with binary
/// products. The result is homogeneous and ×-balanced (see
/// [`x_balance_violation`]).
pub fn balance(c: &Circuit) -> Result<Circuit> {
    let root = c.single_output(STAGE)?;
    if let Some(v) = normal_form_violation(c) {
        return Err(Error::contract(
            STAGE,
            format!("input is not normalized: {v}"),
        ));
    }
    if c.gates()[root.0].is_leaf() {
        return Ok(c.prune());
    }
    let mut bal = Balancer::new(c);
    let out = match bal.full(root) {
        PairVal::Gate(g) => g,
        PairVal::Scalar(k) => bal.push(Gate::constant(k), 0),
        PairVal::Zero => bal.push(Gate::constant(0), 0),
    };
    debug_assert_eq!(bal.value_degree(&PairVal::Gate(out)), bal.deg[root.0]);
    let result = bal.b.finish_unchecked(vec![out]).prune();
    if result.size() as u128 > balance_bound(c.size()) {
        return Err(Error::contract(
            STAGE,
            format!(
                "output size {} exceeds s^6 + s^4 + 1 = {}",
                result.size(),
                balance_bound(c.size())
            ),
        ));
    }
    Ok(result)
}

/// First violated ×-balance condition: product fan-in at most 5, scalar
/// product fan-in at most 2, and every product operand of at most half the
/// product's degree.
pub fn x_balance_violation(c: &Circuit) -> Option<String> {
    let deg = c.degrees();
    for (i, gate) in c.gates().iter().enumerate() {
        match gate.kind {
            GateKind::Mul => {
                if gate.children.len() > 5 {
                    return Some(format!("g{i}: product fan-in {} > 5", gate.children.len()));
                }
                let d = deg[i];
                for ch in &gate.children {
                    let half_ok = match (deg[ch.0], d) {
                        (GateDegree::Finite(dc), GateDegree::Finite(dg)) => 2 * dc <= dg,
                        (GateDegree::NegInfinity, _) => true,
                        (_, GateDegree::NegInfinity) => true,
                    };
                    if !half_ok {
                        return Some(format!(
                            "g{i}: operand {} of degree {} exceeds half of {}",
                            ch, deg[ch.0], d
                        ));
                    }
                }
            }
            GateKind::Scal if gate.children.len() > 2 => {
                return Some(format!("g{i}: scalar fan-in {} > 2", gate.children.len()));
            }
            _ => {}
        }
    }
    None
}

pub fn is_x_balanced(c: &Circuit) -> bool {
    x_balance_violation(c).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::passes::normalize::normalize;
    use crate::poly::expand;

    fn comb(n: u32) -> Circuit {
        let mut b = CircuitBuilder::new();
        let x: Vec<_> = (0..n).map(|v| b.input(v)).collect();
        let mut acc = x[n as usize - 1];
        for v in (0..n as usize - 1).rev() {
            acc = b.mul(vec![x[v], acc]);
        }
        b.finish(vec![acc]).unwrap()
    }

    fn check(c: &Circuit) -> Circuit {
        let n = normalize(c).unwrap();
        let out = balance(&n).unwrap();
        assert!(out.validate().is_ok());
        assert!(out.is_homogeneous());
        assert_eq!(x_balance_violation(&out), None);
        assert_eq!(
            expand(&out, out.outputs()[0], 10_000).unwrap(),
            expand(c, c.outputs()[0], 10_000).unwrap()
        );
        assert!((out.size() as u128) <= balance_bound(n.size()));
        out
    }

    #[test]
    fn comb_becomes_balanced() {
        for n in 2..=8 {
            let c = comb(n);
            assert_eq!(is_x_balanced(&c), n <= 2, "n = {n}");
            check(&c);
        }
    }

    #[test]
    fn single_product() {
        let mut b = CircuitBuilder::new();
        let x = b.input(0);
        let y = b.input(1);
        let m = b.mul(vec![x, y]);
        let c = b.finish(vec![m]).unwrap();
        let out = check(&c);
        assert!(out.stats().max_fanin.mul <= 5);
    }

    #[test]
    fn scalars_and_sums() {
        // 3 * ((x + y) * ((x + y) * z)) + 2 * (x * (y * z))
        let mut b = CircuitBuilder::new();
        let x = b.input(0);
        let y = b.input(1);
        let z = b.input(2);
        let s = b.add(vec![x, y]);
        let sz = b.mul(vec![s, z]);
        let ssz = b.mul(vec![s, sz]);
        let three = b.constant(3);
        let t1 = b.scal(three, ssz);
        let yz = b.mul(vec![y, z]);
        let xyz = b.mul(vec![x, yz]);
        let two = b.constant(2);
        let t2 = b.scal(two, xyz);
        let top = b.add(vec![t1, t2]);
        let c = b.finish(vec![top]).unwrap();
        check(&c);
    }

    #[test]
    fn rejects_unnormalized_input() {
        let mut b = CircuitBuilder::new();
        let x = b.input(0);
        let k = b.constant(2);
        let m = b.mul(vec![k, x]);
        let c = b.finish(vec![m]).unwrap();
        assert!(matches!(balance(&c), Err(Error::Contract { .. })));
    }

    #[test]
    fn leaf_output_passes_through() {
        let mut b = CircuitBuilder::new();
        let x = b.input(4);
        let c = b.finish(vec![x]).unwrap();
        assert_eq!(balance(&c).unwrap(), c);
    }
}
