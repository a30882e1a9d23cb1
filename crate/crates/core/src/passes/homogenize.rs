use num_traits::Zero;

use crate::circuit::{Circuit, CircuitBuilder, Gate, GateDegree, GateId, GateKind};
use crate::error::{Error, Result};

const STAGE: &str = "homogenize";

/// Splits a single-output circuit of degree `d` into a circuit with `d + 1`
/// outputs, output `i` computing the homogeneous part of degree `i`.
///
/// Every gate `g` is replaced by up to `d + 1` gates `g_0..g_d`. Parts that
/// are structurally zero are never built; all zero outputs share one
/// `Const(0)` gate.
pub fn homogenize(c: &Circuit) -> Result<Circuit> {
    let root = c.single_output(STAGE)?;
    if let Some((i, g)) = c
        .gates()
        .iter()
        .enumerate()
        .find(|(_, g)| g.kind == GateKind::Mul && g.children.len() > 2)
    {
        return Err(Error::contract(
            STAGE,
            format!("gate g{i} has fan-in {}; binarize first", g.children.len()),
        ));
    }
    let d = match c.degree() {
        GateDegree::Finite(d) => d as usize,
        GateDegree::NegInfinity => {
            return Err(Error::contract(STAGE, "the circuit has degree -inf"))
        }
    };

    let live = c.reachable_from(&[root]);
    let mut b = CircuitBuilder::hash_consing();
    let mut parts: Vec<Vec<Option<GateId>>> = vec![Vec::new(); c.size()];
    for (i, gate) in c.gates().iter().enumerate() {
        if !live[i] {
            continue;
        }
        let mut here: Vec<Option<GateId>> = vec![None; d + 1];
        match &gate.kind {
            GateKind::Input(v) => {
                if d >= 1 {
                    here[1] = Some(b.input(*v));
                }
            }
            GateKind::Const(k) => {
                if !k.is_zero() {
                    here[0] = Some(b.constant(k.clone()));
                }
            }
            GateKind::Add => {
                for (deg, slot) in here.iter_mut().enumerate() {
                    let terms: Vec<GateId> = gate
                        .children
                        .iter()
                        .filter_map(|ch| parts[ch.0][deg])
                        .collect();
                    *slot = sum(&mut b, terms);
                }
            }
            GateKind::Mul | GateKind::Scal => {
                if gate.children.len() == 1 {
                    here = parts[gate.children[0].0].clone();
                } else {
                    let (l, r) = (&parts[gate.children[0].0], &parts[gate.children[1].0]);
                    for (deg, slot) in here.iter_mut().enumerate() {
                        let terms: Vec<GateId> = (0..=deg)
                            .filter_map(|j| Some((l[j]?, r[deg - j]?)))
                            .map(|(x, y)| {
                                b.push(Gate {
                                    kind: gate.kind.clone(),
                                    children: vec![x, y],
                                })
                            })
                            .collect();
                        *slot = sum(&mut b, terms);
                    }
                }
            }
        }
        parts[i] = here;
    }

    let mut zero = None;
    let outputs: Vec<GateId> = parts[root.0]
        .iter()
        .map(|p| match p {
            Some(g) => *g,
            None => *zero.get_or_insert_with(|| b.constant(0)),
        })
        .collect();
    Ok(b.finish_unchecked(outputs).prune())
}

fn sum(b: &mut CircuitBuilder, terms: Vec<GateId>) -> Option<GateId> {
    match terms.len() {
        0 => None,
        1 => Some(terms[0]),
        _ => Some(b.add(terms)),
    }
}
