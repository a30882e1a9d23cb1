//! Arithmetic circuit IR.
//!
//! A [`Circuit`] is an immutable DAG of gates stored in topological order:
//! a gate's id is its position and every child id is smaller than the id of
//! the gate that refers to it. Circuits may have several outputs.

mod parse_tree;
mod text;
mod validate;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

pub use parse_tree::{
    count_parse_trees, count_parse_trees_at, enumerate_parse_trees, enumerate_parse_trees_at,
    ParseNode, ParseTree, ParseTrees,
};
pub use text::{parse_circuit, print_circuit};
pub use validate::{ValidationReport, Violation};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct GateId(pub usize);

impl GateId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for GateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    Input(u32),
    Const(BigInt),
    Add,
    Mul,
    /// Multiplication by a scalar: two children, one of them of degree 0.
    Scal,
}

impl GateKind {
    pub fn is_leaf(&self) -> bool {
        matches!(self, GateKind::Input(_) | GateKind::Const(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::Input(_) => "input",
            GateKind::Const(_) => "const",
            GateKind::Add => "add",
            GateKind::Mul => "mul",
            GateKind::Scal => "smul",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub children: Vec<GateId>,
}

impl Gate {
    pub fn input(var: u32) -> Self {
        Gate {
            kind: GateKind::Input(var),
            children: Vec::new(),
        }
    }

    pub fn constant(value: impl Into<BigInt>) -> Self {
        Gate {
            kind: GateKind::Const(value.into()),
            children: Vec::new(),
        }
    }

    pub fn add(children: Vec<GateId>) -> Self {
        Gate {
            kind: GateKind::Add,
            children,
        }
    }

    pub fn mul(children: Vec<GateId>) -> Self {
        Gate {
            kind: GateKind::Mul,
            children,
        }
    }

    pub fn scal(scalar: GateId, operand: GateId) -> Self {
        Gate {
            kind: GateKind::Scal,
            children: vec![scalar, operand],
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.kind.is_leaf()
    }

    pub fn const_value(&self) -> Option<&BigInt> {
        match &self.kind {
            GateKind::Const(v) => Some(v),
            _ => None,
        }
    }
}

/// Formal degree of a gate. `NegInfinity` is the degree of the constant 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GateDegree {
    NegInfinity,
    Finite(u32),
}

impl GateDegree {
    pub const ZERO: GateDegree = GateDegree::Finite(0);

    /// Degree of a product: `-inf` absorbs.
    pub fn sum(self, other: GateDegree) -> GateDegree {
        match (self, other) {
            (GateDegree::Finite(a), GateDegree::Finite(b)) => GateDegree::Finite(a + b),
            _ => GateDegree::NegInfinity,
        }
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            GateDegree::Finite(d) => Some(d),
            GateDegree::NegInfinity => None,
        }
    }

    pub fn is_neg_infinity(self) -> bool {
        self == GateDegree::NegInfinity
    }
}

impl fmt::Display for GateDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateDegree::NegInfinity => f.write_str("-inf"),
            GateDegree::Finite(d) => write!(f, "{d}"),
        }
    }
}

impl Serialize for GateDegree {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            GateDegree::NegInfinity => serializer.serialize_str("-inf"),
            GateDegree::Finite(d) => serializer.serialize_u32(*d),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    gates: Vec<Gate>,
    outputs: Vec<GateId>,
    names: Option<Vec<String>>,
}

impl Circuit {
    /// Builds a circuit and rejects it unless [`Circuit::validate`] is clean.
    pub fn from_gates(gates: Vec<Gate>, outputs: Vec<GateId>) -> Result<Self> {
        let circuit = Self::from_gates_unchecked(gates, outputs);
        let report = circuit.validate();
        if report.is_ok() {
            Ok(circuit)
        } else {
            Err(Error::Invalid(report))
        }
    }

    /// Builds a circuit without any checks. Only [`Circuit::validate`] is
    /// safe to call on the result until it has been validated.
    pub fn from_gates_unchecked(gates: Vec<Gate>, outputs: Vec<GateId>) -> Self {
        Circuit {
            gates,
            outputs,
            names: None,
        }
    }

    pub(crate) fn with_names(mut self, names: Vec<String>) -> Self {
        debug_assert_eq!(names.len(), self.gates.len());
        self.names = Some(names);
        self
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate(&self, id: GateId) -> Result<&Gate> {
        self.gates.get(id.0).ok_or(Error::UnknownGate(id))
    }

    pub fn outputs(&self) -> &[GateId] {
        &self.outputs
    }

    /// The unique output, or a contract error naming `stage`.
    pub fn single_output(&self, stage: &'static str) -> Result<GateId> {
        match self.outputs.as_slice() {
            [o] => Ok(*o),
            outs => Err(Error::contract(
                stage,
                format!(
                    "expected a single-output circuit, found {} outputs",
                    outs.len()
                ),
            )),
        }
    }

    pub fn ids(&self) -> impl DoubleEndedIterator<Item = GateId> + ExactSizeIterator {
        (0..self.gates.len()).map(GateId)
    }

    /// Number of gates.
    pub fn size(&self) -> usize {
        self.gates.len()
    }

    /// Number of distinct variables.
    pub fn num_vars(&self) -> usize {
        self.variables().len()
    }

    pub fn variables(&self) -> BTreeSet<u32> {
        self.gates
            .iter()
            .filter_map(|g| match g.kind {
                GateKind::Input(v) => Some(v),
                _ => None,
            })
            .collect()
    }

    /// One past the largest variable index, i.e. the length an assignment
    /// vector must have.
    pub fn var_space(&self) -> usize {
        self.variables().last().map_or(0, |v| *v as usize + 1)
    }

    pub fn degrees(&self) -> Vec<GateDegree> {
        let mut deg: Vec<GateDegree> = Vec::with_capacity(self.gates.len());
        for gate in &self.gates {
            let d = match &gate.kind {
                GateKind::Input(_) => GateDegree::Finite(1),
                GateKind::Const(v) if v.is_zero() => GateDegree::NegInfinity,
                GateKind::Const(_) => GateDegree::ZERO,
                GateKind::Add => gate
                    .children
                    .iter()
                    .map(|c| deg[c.0])
                    .max()
                    .unwrap_or(GateDegree::NegInfinity),
                GateKind::Mul | GateKind::Scal => gate
                    .children
                    .iter()
                    .fold(GateDegree::ZERO, |acc, c| acc.sum(deg[c.0])),
            };
            deg.push(d);
        }
        deg
    }

    pub fn degree_of(&self, id: GateId) -> Result<GateDegree> {
        self.gate(id)?;
        Ok(self.degrees()[id.0])
    }

    /// Degree of the circuit: the maximum over its outputs.
    pub fn degree(&self) -> GateDegree {
        let deg = self.degrees();
        self.outputs
            .iter()
            .map(|o| deg[o.0])
            .max()
            .unwrap_or(GateDegree::NegInfinity)
    }

    /// Length of the longest input-to-output path.
    pub fn depth(&self) -> usize {
        let depths = self.gate_depths();
        self.outputs.iter().map(|o| depths[o.0]).max().unwrap_or(0)
    }

    pub fn gate_depths(&self) -> Vec<usize> {
        let mut depth = vec![0usize; self.gates.len()];
        for (i, gate) in self.gates.iter().enumerate() {
            depth[i] = gate
                .children
                .iter()
                .map(|c| depth[c.0] + 1)
                .max()
                .unwrap_or(0);
        }
        depth
    }

    /// True iff the children of every `+` gate share one degree. Children of
    /// degree `-inf` are ignored.
    pub fn is_homogeneous(&self) -> bool {
        let deg = self.degrees();
        self.gates.iter().all(|g| {
            if g.kind != GateKind::Add {
                return true;
            }
            let mut finite = g
                .children
                .iter()
                .map(|c| deg[c.0])
                .filter(|d| !d.is_neg_infinity());
            match finite.next() {
                None => true,
                Some(first) => finite.all(|d| d == first),
            }
        })
    }

    /// Marks the gates reachable from `roots`.
    pub fn reachable_from(&self, roots: &[GateId]) -> Vec<bool> {
        let mut seen = vec![false; self.gates.len()];
        for r in roots {
            seen[r.0] = true;
        }
        for i in (0..self.gates.len()).rev() {
            if seen[i] {
                for c in &self.gates[i].children {
                    seen[c.0] = true;
                }
            }
        }
        seen
    }

    /// Drops gates no output depends on and renumbers the rest.
    pub fn prune(&self) -> Circuit {
        self.restrict_to(&self.outputs.clone())
    }

    /// The sub-circuit computing only `output`.
    pub fn extract_output(&self, output: GateId) -> Result<Circuit> {
        self.gate(output)?;
        Ok(self.restrict_to(&[output]))
    }

    /// Splits a multi-output circuit into one single-output circuit per output.
    pub fn split_outputs(&self) -> Vec<Circuit> {
        self.outputs
            .iter()
            .map(|o| self.restrict_to(&[*o]))
            .collect()
    }

    fn restrict_to(&self, outputs: &[GateId]) -> Circuit {
        let keep = self.reachable_from(outputs);
        let mut remap = vec![usize::MAX; self.gates.len()];
        let mut gates = Vec::new();
        let mut names = self.names.as_ref().map(|_| Vec::new());
        for (i, gate) in self.gates.iter().enumerate() {
            if !keep[i] {
                continue;
            }
            remap[i] = gates.len();
            gates.push(Gate {
                kind: gate.kind.clone(),
                children: gate.children.iter().map(|c| GateId(remap[c.0])).collect(),
            });
            if let (Some(out), Some(src)) = (names.as_mut(), self.names.as_ref()) {
                out.push(src[i].clone());
            }
        }
        Circuit {
            gates,
            outputs: outputs.iter().map(|o| GateId(remap[o.0])).collect(),
            names,
        }
    }

    /// Combines several circuits into one multi-output circuit, with shared
    /// structure merged. Outputs keep the order of `parts`.
    pub fn concat(parts: &[Circuit]) -> Circuit {
        let mut b = CircuitBuilder::hash_consing();
        let mut outputs = Vec::new();
        for part in parts {
            let map = b.import(part);
            outputs.extend(part.outputs.iter().map(|o| map[o.0]));
        }
        b.finish_unchecked(outputs).prune()
    }

    /// Single-output circuit computing the sum of all outputs.
    pub fn sum_of_outputs(&self) -> Circuit {
        if self.outputs.len() == 1 {
            return self.clone();
        }
        let mut b = CircuitBuilder::hash_consing();
        let map = b.import(self);
        let children: Vec<GateId> = self.outputs.iter().map(|o| map[o.0]).collect();
        let root = if children.is_empty() {
            b.constant(BigInt::zero())
        } else {
            b.add(children)
        };
        b.finish_unchecked(vec![root]).prune()
    }

    pub fn stats(&self) -> CircuitStats {
        let mut counts = KindCounts::default();
        let mut fanin = MaxFanIn::default();
        for g in &self.gates {
            let k = g.children.len();
            match g.kind {
                GateKind::Input(_) => counts.input += 1,
                GateKind::Const(_) => counts.constant += 1,
                GateKind::Add => {
                    counts.add += 1;
                    fanin.add = fanin.add.max(k);
                }
                GateKind::Mul => {
                    counts.mul += 1;
                    fanin.mul = fanin.mul.max(k);
                }
                GateKind::Scal => {
                    counts.scal += 1;
                    fanin.scal = fanin.scal.max(k);
                }
            }
        }
        CircuitStats {
            size: self.size(),
            degree: self.degree(),
            vars: self.num_vars(),
            depth: self.depth(),
            outputs: self.outputs.len(),
            gate_counts: counts,
            max_fanin: fanin,
            homogeneous: self.is_homogeneous(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct KindCounts {
    pub input: usize,
    #[serde(rename = "const")]
    pub constant: usize,
    pub add: usize,
    pub mul: usize,
    #[serde(rename = "smul")]
    pub scal: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MaxFanIn {
    pub add: usize,
    pub mul: usize,
    #[serde(rename = "smul")]
    pub scal: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CircuitStats {
    pub size: usize,
    pub degree: GateDegree,
    pub vars: usize,
    pub depth: usize,
    pub outputs: usize,
    pub gate_counts: KindCounts,
    pub max_fanin: MaxFanIn,
    pub homogeneous: bool,
}

/// Append-only circuit construction. With hash-consing enabled, structurally
/// identical gates are created once.
#[derive(Debug, Default)]
pub struct CircuitBuilder {
    gates: Vec<Gate>,
    interned: Option<HashMap<Gate, GateId>>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn hash_consing() -> Self {
        CircuitBuilder {
            gates: Vec::new(),
            interned: Some(HashMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn gate(&self, id: GateId) -> &Gate {
        &self.gates[id.0]
    }

    pub fn push(&mut self, gate: Gate) -> GateId {
        debug_assert!(gate.children.iter().all(|c| c.0 < self.gates.len()));
        if let Some(interned) = self.interned.as_mut() {
            if let Some(id) = interned.get(&gate) {
                return *id;
            }
            let id = GateId(self.gates.len());
            interned.insert(gate.clone(), id);
            self.gates.push(gate);
            id
        } else {
            self.gates.push(gate);
            GateId(self.gates.len() - 1)
        }
    }

    pub fn input(&mut self, var: u32) -> GateId {
        self.push(Gate::input(var))
    }

    pub fn constant(&mut self, value: impl Into<BigInt>) -> GateId {
        self.push(Gate::constant(value))
    }

    pub fn one(&mut self) -> GateId {
        self.constant(BigInt::one())
    }

    pub fn add(&mut self, children: Vec<GateId>) -> GateId {
        self.push(Gate::add(children))
    }

    pub fn mul(&mut self, children: Vec<GateId>) -> GateId {
        self.push(Gate::mul(children))
    }

    pub fn scal(&mut self, scalar: GateId, operand: GateId) -> GateId {
        self.push(Gate::scal(scalar, operand))
    }

    /// Copies every gate of `other`; returns the old-id to new-id map.
    pub fn import(&mut self, other: &Circuit) -> Vec<GateId> {
        let mut map: Vec<GateId> = Vec::with_capacity(other.size());
        for gate in other.gates() {
            let g = Gate {
                kind: gate.kind.clone(),
                children: gate.children.iter().map(|c| map[c.0]).collect(),
            };
            map.push(self.push(g));
        }
        map
    }

    pub fn finish(self, outputs: Vec<GateId>) -> Result<Circuit> {
        Circuit::from_gates(self.gates, outputs)
    }

    pub(crate) fn finish_unchecked(self, outputs: Vec<GateId>) -> Circuit {
        Circuit::from_gates_unchecked(self.gates, outputs)
    }
}
