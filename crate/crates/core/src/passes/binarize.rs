use crate::circuit::{Circuit, CircuitBuilder, Gate, GateId, GateKind};

/// Rewrites every `×` gate of fan-in above 2 as a left-associated chain of
/// binary products. Other gates are copied unchanged.
pub fn binarize_mul(c: &Circuit) -> Circuit {
    let mut b = CircuitBuilder::new();
    let mut map: Vec<GateId> = Vec::with_capacity(c.size());
    for gate in c.gates() {
        let children: Vec<GateId> = gate.children.iter().map(|ch| map[ch.0]).collect();
        let id = if gate.kind == GateKind::Mul && children.len() > 2 {
            let mut acc = b.mul(vec![children[0], children[1]]);
            for ch in &children[2..] {
                acc = b.mul(vec![acc, *ch]);
            }
            acc
        } else {
            b.push(Gate {
                kind: gate.kind.clone(),
                children,
            })
        };
        map.push(id);
    }
    b.finish_unchecked(c.outputs().iter().map(|o| map[o.0]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::print_circuit;

    #[test]
    fn chains_left() {
        let mut b = CircuitBuilder::new();
        let x: Vec<_> = (0..3).map(|v| b.input(v)).collect();
        let m = b.mul(x.clone());
        let c = b.finish(vec![m]).unwrap();
        let out = binarize_mul(&c);
        assert_eq!(out.gates()[3], Gate::mul(vec![x[0], x[1]]));
        assert_eq!(out.gates()[4], Gate::mul(vec![GateId(3), x[2]]));
        assert_eq!(out.outputs(), &[GateId(4)]);
        assert!(out.validate().is_ok());
    }

    #[test]
    fn binary_input_is_unchanged() {
        let mut b = CircuitBuilder::new();
        let x = b.input(0);
        let y = b.input(1);
        let m = b.mul(vec![x, y]);
        let s = b.add(vec![m, x, y]);
        let c = b.finish(vec![s]).unwrap();
        let once = binarize_mul(&c);
        assert_eq!(print_circuit(&once), print_circuit(&c));
        assert_eq!(binarize_mul(&once), once);
    }
}
