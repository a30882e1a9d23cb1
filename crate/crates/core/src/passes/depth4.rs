//! Flattening of a homogeneous ×-balanced circuit to a ΣΠΣΠ circuit.
//!
//! With threshold `d/a`, the gates of degree below it (`C1`) are expanded
//! into sums of monomials over the inputs, and the gates above it (`C2`)
//! into sums of monomials over the `C1` gates they read. Level 1 holds
//! the input monomials, level 2 one sum per boundary gate, level 3 the
//! products of boundary sums and level 4 a single sum.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::One;
use serde::Serialize;

use crate::bounds::{ceil_div, depth4_size_bound};
use crate::circuit::{
    enumerate_parse_trees_at, Circuit, CircuitBuilder, Gate, GateDegree, GateId, GateKind,
};
use crate::error::{Error, Result};
use crate::passes::balance::x_balance_violation;
use crate::poly::{expand_many, expand_over, Monomial, SparsePolynomial, DEFAULT_TERM_BUDGET};

const STAGE: &str = "depth4";

/// Fan-in bounds promised for a given split parameter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DepthFourShape {
    pub a: u32,
    pub degree: u32,
    /// Level-3 product fan-in bound, `15a`.
    pub top_mul_fanin_bound: u32,
    /// Level-1 product fan-in bound, `⌈d/a⌉`.
    pub bottom_mul_fanin_bound: u32,
    /// `d/a` as a fraction `(d, a)`; gates with `deg * a < d` are expanded
    /// over the inputs.
    pub threshold: (u32, u32),
}

impl DepthFourShape {
    pub fn new(d: u32, a: u32) -> Self {
        DepthFourShape {
            a,
            degree: d,
            top_mul_fanin_bound: 15 * a,
            bottom_mul_fanin_bound: ceil_div(d, a),
            threshold: (d, a),
        }
    }

    fn below_threshold(&self, deg: u32) -> bool {
        (deg as u64) * (self.a as u64) < self.degree as u64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Depth4Details {
    pub shape: DepthFourShape,
    /// Size of the input circuit, σ.
    pub sigma: usize,
    pub vars: usize,
    pub boundary_gates: usize,
    pub top_terms: usize,
    pub top_degree: GateDegree,
    /// `1 + C(σ+15a, 15a) + σ + σ·C(n+⌈d/a⌉, ⌈d/a⌉) + n`.
    #[serde(serialize_with = "crate::bounds::ser_decimal")]
    pub size_bound: BigUint,
}

/// Reduces `c` to depth 4 with split parameter `a`, `0 < a < d`.
pub fn depth4_reduce(c: &Circuit, a: u32) -> Result<Circuit> {
    Ok(depth4_reduce_with(c, a, DEFAULT_TERM_BUDGET)?.0)
}

pub fn depth4_reduce_with(
    c: &Circuit,
    a: u32,
    term_budget: usize,
) -> Result<(Circuit, Depth4Details)> {
    let d = check_input(c)?;
    if a == 0 || a >= d {
        return Err(Error::Parameter(format!(
            "the split parameter must satisfy 0 < a < d, got a = {a}, d = {d}"
        )));
    }
    build(c, DepthFourShape::new(d, a), term_budget)
}

/// The `d <= 1` case, where no valid split parameter exists: runs the
/// construction with `a = 1`, so every non-constant gate lies above the
/// threshold and the inputs are the boundary.
pub(crate) fn depth4_degenerate(
    c: &Circuit,
    term_budget: usize,
) -> Result<(Circuit, Depth4Details)> {
    let d = check_input(c)?;
    if d > 1 {
        return Err(Error::contract(
            STAGE,
            format!("degree {d} is not degenerate"),
        ));
    }
    build(c, DepthFourShape::new(d, 1), term_budget)
}

fn check_input(c: &Circuit) -> Result<u32> {
    let root = c.single_output(STAGE)?;
    if !c.is_homogeneous() {
        return Err(Error::contract(STAGE, "input is not homogeneous"));
    }
    if let Some(v) = x_balance_violation(c) {
        return Err(Error::contract(
            STAGE,
            format!("input is not ×-balanced: {v}"),
        ));
    }
    match c.degrees()[root.0] {
        GateDegree::Finite(d) => Ok(d),
        GateDegree::NegInfinity => Err(Error::contract(STAGE, "output has degree -inf")),
    }
}

fn is_const(c: &Circuit, g: GateId) -> bool {
    matches!(c.gates()[g.0].kind, GateKind::Const(_))
}

/// Gates read by the top part: non-constant gates below the threshold with
/// a parent above it, and inputs above the threshold.
fn boundary(c: &Circuit, shape: &DepthFourShape, deg: &[u32], live: &[bool]) -> Vec<GateId> {
    let mut mark = vec![false; c.size()];
    for (i, gate) in c.gates().iter().enumerate() {
        if !live[i] {
            continue;
        }
        if shape.below_threshold(deg[i]) {
            continue;
        }
        if let GateKind::Input(_) = gate.kind {
            mark[i] = true;
        }
        for ch in &gate.children {
            if !is_const(c, *ch) && shape.below_threshold(deg[ch.0]) {
                mark[ch.0] = true;
            }
        }
    }
    c.ids().filter(|g| mark[g.0]).collect()
}

fn build(c: &Circuit, shape: DepthFourShape, budget: usize) -> Result<(Circuit, Depth4Details)> {
    let root = c.outputs()[0];
    let deg: Vec<u32> = c
        .degrees()
        .into_iter()
        .map(|d| d.finite().unwrap_or(0))
        .collect();
    let live = c.reachable_from(&[root]);
    let bnd = boundary(c, &shape, &deg, &live);
    let y_of: BTreeMap<GateId, u32> = bnd
        .iter()
        .enumerate()
        .map(|(i, g)| (*g, i as u32))
        .collect();

    // The top part over fresh variables y_0.. (one per boundary gate).
    let mut aux = CircuitBuilder::new();
    let mut map: Vec<Option<GateId>> = vec![None; c.size()];
    for (i, gate) in c.gates().iter().enumerate() {
        if !live[i] {
            continue;
        }
        let id = GateId(i);
        map[i] = if let Some(y) = y_of.get(&id) {
            Some(aux.input(*y))
        } else if let GateKind::Const(k) = &gate.kind {
            Some(aux.constant(k.clone()))
        } else if shape.below_threshold(deg[i]) {
            None
        } else {
            Some(
                aux.push(Gate {
                    kind: gate.kind.clone(),
                    children: gate
                        .children
                        .iter()
                        .map(|ch| map[ch.0].expect("top gates only read top or boundary gates"))
                        .collect(),
                }),
            )
        };
    }
    let aux_root = map[root.0].expect("root is above the threshold");
    let aux = aux.finish_unchecked(vec![aux_root]);
    let top: SparsePolynomial<BigInt> = expand_over(&aux, aux_root, budget)?;
    if let GateDegree::Finite(td) = top.degree() {
        if td > shape.top_mul_fanin_bound {
            return Err(Error::contract(
                STAGE,
                format!(
                    "top part has degree {td} > 15a = {}",
                    shape.top_mul_fanin_bound
                ),
            ));
        }
    }
    let bottoms = expand_many(c, &bnd, budget)?;

    let mut b = CircuitBuilder::hash_consing();
    let vars = c.variables();
    for v in &vars {
        b.input(*v);
    }
    let mut level2 = Vec::with_capacity(bnd.len());
    for p in &bottoms {
        let level1: Vec<GateId> = if p.is_zero() {
            vec![zero_product(&mut b)]
        } else {
            p.terms()
                .rev()
                .map(|(m, k)| {
                    let children = monomial_children(&mut b, m, k, |b, v| b.input(v));
                    b.mul(children)
                })
                .collect()
        };
        level2.push(b.add(level1));
    }
    let level3: Vec<GateId> = if top.is_zero() {
        vec![zero_product(&mut b)]
    } else {
        top.terms()
            .rev()
            .map(|(m, k)| {
                let children = monomial_children(&mut b, m, k, |_, y| level2[y as usize]);
                b.mul(children)
            })
            .collect()
    };
    let out = b.add(level3);
    let circuit = b.finish_unchecked(vec![out]).prune();

    let size_bound = depth4_size_bound(c.size(), vars.len(), shape.degree, shape.a);
    let details = Depth4Details {
        sigma: c.size(),
        vars: vars.len(),
        boundary_gates: bnd.len(),
        top_terms: top.len(),
        top_degree: top.degree(),
        size_bound,
        shape,
    };
    Ok((circuit, details))
}

fn zero_product(b: &mut CircuitBuilder) -> GateId {
    let z = b.constant(0);
    b.mul(vec![z])
}

/// `[Const k] ++ leaf(v)^e ...`, the constant omitted when `k = 1`.
fn monomial_children(
    b: &mut CircuitBuilder,
    m: &Monomial,
    k: &BigInt,
    mut leaf: impl FnMut(&mut CircuitBuilder, u32) -> GateId,
) -> Vec<GateId> {
    let mut children = Vec::with_capacity(m.degree() as usize + 1);
    if !k.is_one() {
        children.push(b.constant(k.clone()));
    }
    for &(v, e) in m.exponents() {
        let g = leaf(b, v);
        children.extend(std::iter::repeat_n(g, e as usize));
    }
    if children.is_empty() {
        children.push(b.constant(BigInt::one()));
    }
    children
}

/// Product nodes of one truncated parse tree of the top part, by how many
/// of their children lead to further products.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SplitClassification {
    /// No child subtree contains a product.
    pub g0: usize,
    /// Exactly one child subtree contains a product.
    pub g1: usize,
    /// At least two child subtrees contain a product.
    pub g2: usize,
    /// Non-constant leaves of the truncated tree.
    pub variable_leaves: usize,
}

impl SplitClassification {
    pub fn satisfies(&self, a: u32) -> bool {
        let a = a as usize;
        let products = self.g0 + self.g1 + self.g2;
        self.g0 <= a
            && self.g1 <= a
            && self.g2 <= self.g0
            && self.variable_leaves <= 5 * products
            && 5 * products <= 15 * a
    }
}

/// Classifies the product nodes of every parse tree of the part of `c`
/// above the threshold `d/a`, trees being cut at gates below it.
pub fn split_classifications(c: &Circuit, a: u32, limit: u64) -> Result<Vec<SplitClassification>> {
    let d = check_input(c)?;
    if a == 0 || a >= d {
        return Err(Error::Parameter(format!(
            "the split parameter must satisfy 0 < a < d, got a = {a}, d = {d}"
        )));
    }
    let shape = DepthFourShape::new(d, a);
    let deg: Vec<u32> = c
        .degrees()
        .into_iter()
        .map(|d| d.finite().unwrap_or(0))
        .collect();
    let stop = |g: GateId| shape.below_threshold(deg[g.0]);
    let trees = enumerate_parse_trees_at(c, c.outputs()[0], limit, &stop)?;
    Ok(trees
        .map(|t| {
            let nodes = t.nodes();
            // Children always come after their parent in the arena.
            let mut has_mul = vec![false; nodes.len()];
            let mut class = SplitClassification::default();
            for i in (0..nodes.len()).rev() {
                let node = &nodes[i];
                let is_mul =
                    c.gates()[node.gate.0].kind == GateKind::Mul && !node.children.is_empty();
                let heavy = node.children.iter().filter(|ch| has_mul[**ch]).count();
                has_mul[i] = is_mul || heavy > 0;
                if is_mul {
                    match heavy {
                        0 => class.g0 += 1,
                        1 => class.g1 += 1,
                        _ => class.g2 += 1,
                    }
                }
                if node.children.is_empty() && !is_const(c, node.gate) {
                    class.variable_leaves += 1;
                }
            }
            class
        })
        .collect())
}

/// Sum of several single-output ΣΠΣΠ circuits as one, sharing structure and
/// merging their top sums.
pub fn merge_depth4(parts: &[Circuit]) -> Circuit {
    let mut b = CircuitBuilder::hash_consing();
    let mut level3 = Vec::new();
    for part in parts {
        let map = b.import(part);
        let top = part.outputs()[0];
        let gate = &part.gates()[top.0];
        if gate.kind == GateKind::Add {
            level3.extend(gate.children.iter().map(|ch| map[ch.0]));
        } else {
            level3.push(map[top.0]);
        }
    }
    if level3.is_empty() {
        level3.push(zero_product(&mut b));
    }
    let out = b.add(level3);
    b.finish_unchecked(vec![out]).prune()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::LevelProfile;
    use crate::passes::{balance, normalize};
    use crate::poly::expand;

    fn perm2() -> Circuit {
        let mut b = CircuitBuilder::new();
        let x: Vec<_> = (0..4).map(|v| b.input(v)).collect();
        let p = b.mul(vec![x[0], x[3]]);
        let q = b.mul(vec![x[1], x[2]]);
        let s = b.add(vec![p, q]);
        b.finish(vec![s]).unwrap()
    }

    fn comb(n: u32) -> Circuit {
        let mut b = CircuitBuilder::new();
        let x: Vec<_> = (0..n).map(|v| b.input(v)).collect();
        let mut acc = x[n as usize - 1];
        for v in (0..n as usize - 1).rev() {
            acc = b.mul(vec![x[v], acc]);
        }
        b.finish(vec![acc]).unwrap()
    }

    fn balanced(c: &Circuit) -> Circuit {
        balance(&normalize(c).unwrap()).unwrap()
    }

    #[test]
    fn perm2_with_a_1() {
        let c = balanced(&perm2());
        let (out, det) = depth4_reduce_with(&c, 1, 1000).unwrap();
        assert_eq!(out.depth(), 4);
        assert_eq!(
            expand(&out, out.outputs()[0], 100).unwrap(),
            expand(&perm2(), GateId(6), 100).unwrap()
        );
        let prof = LevelProfile::extract(&out).unwrap();
        assert!(prof.t3 <= 15);
        assert!(prof.t1 <= 2);
        assert!(BigUint::from(out.size()) <= det.size_bound);
        assert!(out.is_homogeneous());
    }

    #[test]
    fn comb_splits() {
        let c = balanced(&comb(8));
        for a in 1..8 {
            let (out, det) = depth4_reduce_with(&c, a, 1000).unwrap();
            assert_eq!(out.depth(), 4);
            let prof = LevelProfile::extract(&out).unwrap();
            assert!(prof.t3 <= 15 * a as usize);
            assert!(
                prof.t1 <= det.shape.bottom_mul_fanin_bound as usize,
                "a = {a}"
            );
            assert_eq!(
                expand(&out, out.outputs()[0], 100).unwrap(),
                expand(&comb(8), comb(8).outputs()[0], 100).unwrap()
            );
            for cls in split_classifications(&c, a, 10_000).unwrap() {
                assert!(cls.satisfies(a), "{cls:?} a = {a}");
            }
        }
    }

    #[test]
    fn parameter_errors() {
        let c = balanced(&perm2());
        assert!(matches!(depth4_reduce(&c, 0), Err(Error::Parameter(_))));
        assert!(matches!(depth4_reduce(&c, 2), Err(Error::Parameter(_))));
    }

    #[test]
    fn linear_form_degenerate_path() {
        let mut b = CircuitBuilder::new();
        let x = b.input(0);
        let y = b.input(1);
        let three = b.constant(3);
        let ty = b.scal(three, y);
        let s = b.add(vec![x, ty]);
        let c = b.finish(vec![s]).unwrap();
        let (out, _) = depth4_degenerate(&c, 100).unwrap();
        assert_eq!(out.depth(), 4);
        assert_eq!(
            expand(&out, out.outputs()[0], 100).unwrap(),
            expand(&c, s, 100).unwrap()
        );
        let prof = LevelProfile::extract(&out).unwrap();
        assert!(prof.t3 <= 15 && prof.t1 <= 1);
    }
}
