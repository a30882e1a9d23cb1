//! Parse trees: a `+` node keeps one child, a `×`/`⊙` node keeps a
//! disjoint copy of every child. The sum of the tree monomials is the
//! polynomial of the root.

use std::rc::Rc;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};

use super::{Circuit, GateId, GateKind};
use crate::error::{Error, Result};
use crate::poly::{Monomial, SparsePolynomial};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseNode {
    /// The circuit gate this node is a copy of.
    pub gate: GateId,
    /// Indices into [`ParseTree::nodes`].
    pub children: Vec<usize>,
}

/// A parse tree stored as a node arena; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseTree {
    nodes: Vec<ParseNode>,
}

impl ParseTree {
    pub fn root(&self) -> &ParseNode {
        &self.nodes[0]
    }

    pub fn nodes(&self) -> &[ParseNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &ParseNode> {
        self.nodes.iter().filter(|n| n.children.is_empty())
    }

    /// m(T): the product of the leaves, as a single-term polynomial. Leaves
    /// of a truncated tree that are not circuit leaves are rejected.
    pub fn monomial(&self, c: &Circuit) -> Result<SparsePolynomial<BigInt>> {
        let mut coeff = BigInt::one();
        let mut mono = Monomial::one();
        for leaf in self.leaves() {
            match &c.gate(leaf.gate)?.kind {
                GateKind::Input(v) => mono = mono.mul(&Monomial::var(*v)),
                GateKind::Const(k) => coeff *= k,
                _ => {
                    return Err(Error::Structure(format!(
                        "leaf {} of a truncated parse tree is not a circuit leaf",
                        leaf.gate
                    )))
                }
            }
        }
        Ok(SparsePolynomial::term(mono, coeff))
    }
}

/// Exact number of parse trees rooted at `root`, with gates accepted by
/// `stop` counted as leaves.
fn count_dp(c: &Circuit, root: GateId, stop: &dyn Fn(GateId) -> bool) -> Result<BigUint> {
    c.gate(root)?;
    let live = c.reachable_from(&[root]);
    let mut count: Vec<BigUint> = vec![BigUint::zero(); c.size()];
    for id in c.ids().take(root.0 + 1) {
        if !live[id.0] {
            continue;
        }
        let gate = &c.gates()[id.0];
        count[id.0] = if gate.is_leaf() || stop(id) {
            BigUint::one()
        } else {
            match gate.kind {
                GateKind::Add => gate.children.iter().map(|ch| &count[ch.0]).sum(),
                _ => gate
                    .children
                    .iter()
                    .fold(BigUint::one(), |acc, ch| acc * &count[ch.0]),
            }
        };
    }
    Ok(std::mem::take(&mut count[root.0]))
}

pub fn count_parse_trees_at(c: &Circuit, root: GateId) -> Result<BigUint> {
    count_dp(c, root, &|_| false)
}

/// Parse-tree count summed over the outputs.
pub fn count_parse_trees(c: &Circuit) -> BigUint {
    c.outputs()
        .iter()
        .map(|o| count_parse_trees_at(c, *o).expect("outputs exist in a valid circuit"))
        .sum()
}

#[derive(Debug)]
struct Shape {
    gate: GateId,
    children: Vec<Rc<Shape>>,
}

/// Lazily flattened parse trees. Trees are kept in a shared DAG form and
/// copied into disjoint [`ParseTree`]s one at a time.
pub struct ParseTrees {
    shapes: std::vec::IntoIter<Rc<Shape>>,
    count: usize,
}

impl ParseTrees {
    /// Total number of trees this iterator yields.
    pub fn count_total(&self) -> usize {
        self.count
    }
}

impl Iterator for ParseTrees {
    type Item = ParseTree;

    fn next(&mut self) -> Option<ParseTree> {
        let shape = self.shapes.next()?;
        let mut nodes = Vec::new();
        flatten(&shape, &mut nodes);
        Some(ParseTree { nodes })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.shapes.size_hint()
    }
}

fn flatten(shape: &Shape, nodes: &mut Vec<ParseNode>) -> usize {
    let idx = nodes.len();
    nodes.push(ParseNode {
        gate: shape.gate,
        children: Vec::with_capacity(shape.children.len()),
    });
    for ch in &shape.children {
        let ci = flatten(ch, nodes);
        nodes[idx].children.push(ci);
    }
    idx
}

/// Enumerates the parse trees rooted at `root`. Gates accepted by `stop`
/// become leaves (used to enumerate truncated trees of an upper sub-circuit).
/// Fails with the exact count when it exceeds `limit`.
pub fn enumerate_parse_trees_at(
    c: &Circuit,
    root: GateId,
    limit: u64,
    stop: &dyn Fn(GateId) -> bool,
) -> Result<ParseTrees> {
    let total = count_dp(c, root, stop)?;
    if total > BigUint::from(limit) {
        return Err(Error::EnumerationOverflow {
            limit,
            count: total,
        });
    }
    let live = c.reachable_from(&[root]);
    let mut shapes: Vec<Vec<Rc<Shape>>> = vec![Vec::new(); c.size()];
    for id in c.ids().take(root.0 + 1) {
        if !live[id.0] {
            continue;
        }
        let gate = &c.gates()[id.0];
        let here = if gate.is_leaf() || stop(id) {
            vec![Rc::new(Shape {
                gate: id,
                children: Vec::new(),
            })]
        } else if gate.kind == GateKind::Add {
            gate.children
                .iter()
                .flat_map(|ch| shapes[ch.0].iter())
                .map(|s| {
                    Rc::new(Shape {
                        gate: id,
                        children: vec![s.clone()],
                    })
                })
                .collect()
        } else {
            let mut partial: Vec<Vec<Rc<Shape>>> = vec![Vec::new()];
            for ch in &gate.children {
                let mut next = Vec::with_capacity(partial.len() * shapes[ch.0].len());
                for prefix in &partial {
                    for s in &shapes[ch.0] {
                        let mut p = prefix.clone();
                        p.push(s.clone());
                        next.push(p);
                    }
                }
                partial = next;
            }
            partial
                .into_iter()
                .map(|children| Rc::new(Shape { gate: id, children }))
                .collect()
        };
        shapes[id.0] = here;
    }
    let list = std::mem::take(&mut shapes[root.0]);
    Ok(ParseTrees {
        count: list.len(),
        shapes: list.into_iter(),
    })
}

/// All parse trees of every output, in output order.
pub fn enumerate_parse_trees(c: &Circuit, limit: u64) -> Result<Vec<ParseTree>> {
    let total = count_parse_trees(c);
    if total > BigUint::from(limit) {
        return Err(Error::EnumerationOverflow {
            limit,
            count: total,
        });
    }
    let mut out = Vec::with_capacity(total.to_usize().unwrap_or(0));
    for o in c.outputs() {
        out.extend(enumerate_parse_trees_at(c, *o, limit, &|_| false)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitBuilder;

    fn example() -> Circuit {
        let mut b = CircuitBuilder::new();
        let x = b.input(0);
        let y = b.input(1);
        let z = b.input(2);
        let s = b.add(vec![x, y]);
        let t = b.add(vec![z, s]);
        let m = b.mul(vec![s, t]);
        b.finish(vec![m]).unwrap()
    }

    #[test]
    fn example_has_six_trees() {
        let c = example();
        assert_eq!(count_parse_trees(&c), BigUint::from(6u32));
        let trees = enumerate_parse_trees(&c, 100).unwrap();
        assert_eq!(trees.len(), 6);
        for t in &trees {
            assert_eq!(t.root().gate, GateId(5));
            assert_eq!(t.leaves().count(), 2);
        }
    }

    #[test]
    fn single_input_has_one_tree() {
        let mut b = CircuitBuilder::new();
        let x = b.input(0);
        let c = b.finish(vec![x]).unwrap();
        assert_eq!(count_parse_trees(&c), BigUint::one());
        let trees = enumerate_parse_trees(&c, 1).unwrap();
        assert_eq!(trees[0].len(), 1);
    }

    #[test]
    fn comb_has_one_tree() {
        let mut b = CircuitBuilder::new();
        let x: Vec<_> = (0..4).map(|v| b.input(v)).collect();
        let m3 = b.mul(vec![x[2], x[3]]);
        let m2 = b.mul(vec![x[1], m3]);
        let m1 = b.mul(vec![x[0], m2]);
        let c = b.finish(vec![m1]).unwrap();
        assert_eq!(count_parse_trees(&c), BigUint::one());
    }

    #[test]
    fn limit_overflow_carries_exact_count() {
        let c = example();
        match enumerate_parse_trees(&c, 5) {
            Err(Error::EnumerationOverflow { limit: 5, count }) => {
                assert_eq!(count, BigUint::from(6u32))
            }
            other => panic!("unexpected {:?}", other.map(|v| v.len())),
        }
    }

    #[test]
    fn shared_children_get_disjoint_copies() {
        // (x + y)^2 via one Add used twice.
        let mut b = CircuitBuilder::new();
        let x = b.input(0);
        let y = b.input(1);
        let s = b.add(vec![x, y]);
        let sq = b.mul(vec![s, s]);
        let c = b.finish(vec![sq]).unwrap();
        let trees = enumerate_parse_trees(&c, 10).unwrap();
        assert_eq!(trees.len(), 4);
        assert!(trees.iter().all(|t| t.len() == 5));
    }

    #[test]
    fn truncation_stops_at_marked_gates() {
        let c = example();
        let s = GateId(3);
        let trees: Vec<_> = enumerate_parse_trees_at(&c, GateId(5), 10, &|g| g == s)
            .unwrap()
            .collect();
        // m = s * t, t = z + s: two truncated trees.
        assert_eq!(trees.len(), 2);
    }
}
