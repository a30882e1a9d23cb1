//! Staged driver: runs named passes over a list of homogeneous parts and
//! reports every size bound and postcondition it can check.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    balance, balance_bound, balance_bound_tight, binarize_mul, depth4::depth4_degenerate,
    depth4_reduce_with, homogenize, merge_depth4, normal_form_violation, normalize_with,
    x_balance_violation, DepthFourShape,
};
use crate::bounds::{predict_theorem1_size, LevelProfile};
use crate::circuit::{Circuit, CircuitBuilder, CircuitStats, GateDegree, GateKind};
use crate::error::{Error, Result};
use crate::field::{verify_equivalent, CheckConfig, EquivalenceReport};
use crate::poly::expand;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Binarize,
    Homogenize,
    Normalize,
    Balance,
    Depth4,
    Reduce,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Binarize,
        Stage::Homogenize,
        Stage::Normalize,
        Stage::Balance,
        Stage::Depth4,
        Stage::Reduce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Binarize => "binarize",
            Stage::Homogenize => "homogenize",
            Stage::Normalize => "normalize",
            Stage::Balance => "balance",
            Stage::Depth4 => "depth4",
            Stage::Reduce => "reduce",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown pass '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PipelineConfig {
    pub check: CheckConfig,
    /// Split parameter override for the depth-4 stage.
    pub a: Option<u32>,
    /// Check every stage's output against its input.
    pub verify: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            check: CheckConfig::default(),
            a: None,
            verify: true,
        }
    }
}

impl PipelineConfig {
    /// Rejects an override that no part of a degree-`d` circuit can use.
    pub fn validate_a(&self, d: GateDegree) -> Result<()> {
        let Some(a) = self.a else { return Ok(()) };
        let d = d.finite().unwrap_or(0);
        let ok = if d <= 1 { a == 1 } else { a > 0 && a < d };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "split parameter a = {a} must satisfy 0 < a < d for d = {d} (a = 1 when d <= 1)"
            )))
        }
    }
}

/// `round(√(d·log2 n / log2 σ))` clamped to `[1, d-1]`; 1 when `d <= 1`.
pub fn choose_a(d: u32, n: usize, sigma: usize) -> u32 {
    if d <= 1 {
        return 1;
    }
    let log_n = (n.max(1) as f64).log2();
    let log_sigma = (sigma.max(2) as f64).log2();
    let a = (d as f64 * log_n / log_sigma).sqrt().round() as u32;
    a.clamp(1, d - 1)
}

/// `measured <= predicted`, with both sides as exact integers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub formula: String,
    pub predicted: String,
    pub measured: String,
    pub asserted: bool,
    pub satisfied: bool,
}

impl BoundCheck {
    fn new(
        name: impl Into<String>,
        formula: impl Into<String>,
        measured: impl Into<BigUint>,
        predicted: impl Into<BigUint>,
        asserted: bool,
    ) -> Self {
        let (measured, predicted) = (measured.into(), predicted.into());
        BoundCheck {
            name: name.into(),
            formula: formula.into(),
            satisfied: measured <= predicted,
            predicted: predicted.to_string(),
            measured: measured.to_string(),
            asserted,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PropertyCheck {
    pub name: String,
    pub satisfied: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl PropertyCheck {
    fn new(name: impl Into<String>, violation: Option<String>) -> Self {
        PropertyCheck {
            name: name.into(),
            satisfied: violation.is_none(),
            detail: violation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PartReport {
    pub degree: Option<u32>,
    pub input_size: usize,
    pub output_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<DepthFourShape>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PassReport {
    pub pass: Stage,
    pub input: CircuitStats,
    pub output: CircuitStats,
    pub predicted_bound: Option<String>,
    pub bound_formula: Option<String>,
    pub bound_satisfied: bool,
    pub bounds: Vec<BoundCheck>,
    pub properties: Vec<PropertyCheck>,
    pub parts: Vec<PartReport>,
    pub equivalence: Option<EquivalenceReport>,
    pub config: CheckConfig,
    pub a_override: Option<u32>,
    pub notes: Vec<String>,
}

impl PassReport {
    /// All asserted bounds and properties hold and the equivalence check, if
    /// run, found no difference.
    pub fn ok(&self) -> bool {
        self.bound_satisfied
            && self.properties.iter().all(|p| p.satisfied)
            && self.equivalence.as_ref().is_none_or(|e| e.equal)
    }
}

#[derive(Clone, Debug)]
struct Part {
    degree: Option<u32>,
    circuit: Circuit,
}

/// What a stage produced before the report is assembled.
#[derive(Default)]
struct Outcome {
    bounds: Vec<BoundCheck>,
    properties: Vec<PropertyCheck>,
    parts: Vec<PartReport>,
    notes: Vec<String>,
}

/// Circuit state between stages: a list of parts whose sum is the
/// polynomial, each tagged with its degree once homogenized.
#[derive(Clone, Debug)]
pub struct Pipeline {
    parts: Vec<Part>,
    joined: Option<Circuit>,
    original: CircuitStats,
    config: PipelineConfig,
}

fn zero_circuit() -> Circuit {
    let mut b = CircuitBuilder::new();
    let z = b.constant(0);
    b.finish_unchecked(vec![z])
}

fn is_zero_circuit(c: &Circuit) -> bool {
    c.outputs().len() == 1
        && matches!(&c.gates()[c.outputs()[0].0].kind, GateKind::Const(k) if k == &0.into())
}

fn degree_of(c: &Circuit) -> u32 {
    c.degree().finite().unwrap_or(0)
}

impl Pipeline {
    pub fn new(c: Circuit, config: PipelineConfig) -> Self {
        Pipeline {
            original: c.stats(),
            parts: vec![Part {
                degree: None,
                circuit: c,
            }],
            joined: None,
            config,
        }
    }

    /// The current state as one circuit: the single part, or all parts as
    /// separate outputs.
    pub fn circuit(&self) -> Circuit {
        if let Some(j) = &self.joined {
            return j.clone();
        }
        match self.parts.as_slice() {
            [] => zero_circuit(),
            [p] => p.circuit.clone(),
            ps => Circuit::concat(&ps.iter().map(|p| p.circuit.clone()).collect::<Vec<_>>()),
        }
    }

    /// Single-output circuit computing the sum of the parts.
    pub fn sum(&self) -> Circuit {
        self.circuit().sum_of_outputs()
    }

    pub fn run_all(&mut self, stages: &[Stage]) -> Result<Vec<PassReport>> {
        stages.iter().map(|s| self.run(*s)).collect()
    }

    pub fn run(&mut self, stage: Stage) -> Result<PassReport> {
        let input = self.circuit();
        let input_sum = input.sum_of_outputs();
        let outcome = match stage {
            Stage::Binarize => self.binarize(),
            Stage::Homogenize => self.homogenize(),
            Stage::Normalize => self.normalize(),
            Stage::Balance => self.balance(),
            Stage::Depth4 => self.depth4(),
            Stage::Reduce => self.reduce(&input_sum),
        }?;
        if stage != Stage::Homogenize {
            self.joined = None;
        }
        let output = self.circuit();
        let equivalence = if self.config.verify {
            Some(verify_equivalent(
                &input_sum,
                &output.sum_of_outputs(),
                &self.config.check,
            )?)
        } else {
            None
        };
        let headline = outcome.bounds.iter().find(|b| b.asserted);
        Ok(PassReport {
            pass: stage,
            input: input.stats(),
            output: output.stats(),
            predicted_bound: headline.map(|b| b.predicted.clone()),
            bound_formula: headline.map(|b| b.formula.clone()),
            bound_satisfied: outcome.bounds.iter().all(|b| !b.asserted || b.satisfied),
            bounds: outcome.bounds,
            properties: outcome.properties,
            parts: outcome.parts,
            equivalence,
            config: self.config.check,
            a_override: self.config.a,
            notes: outcome.notes,
        })
    }

    fn map_parts(
        &self,
        f: impl Fn(&Part) -> Result<(Option<Circuit>, Outcome)> + Sync + Send,
    ) -> Result<(Vec<Part>, Outcome)> {
        let results: Vec<(Option<Circuit>, Outcome)> =
            self.parts.par_iter().map(f).collect::<Result<_>>()?;
        let mut parts = Vec::new();
        let mut all = Outcome::default();
        for (part, (out, o)) in self.parts.iter().zip(results) {
            if let Some(circuit) = out {
                parts.push(Part {
                    degree: part.degree,
                    circuit,
                });
            }
            all.bounds.extend(o.bounds);
            all.properties.extend(o.properties);
            all.parts.extend(o.parts);
            all.notes.extend(o.notes);
        }
        Ok((parts, all))
    }

    fn binarize(&mut self) -> Result<Outcome> {
        for p in &mut self.parts {
            p.circuit = binarize_mul(&p.circuit);
        }
        let fanin = self
            .parts
            .iter()
            .map(|p| p.circuit.stats().max_fanin.mul)
            .max()
            .unwrap_or(0);
        Ok(Outcome {
            properties: vec![PropertyCheck::new(
                "mul fan-in <= 2",
                (fanin > 2).then(|| format!("fan-in {fanin}")),
            )],
            ..Outcome::default()
        })
    }

    fn homogenize(&mut self) -> Result<Outcome> {
        let [part] = self.parts.as_slice() else {
            return Err(Error::contract("homogenize", "expects a single circuit"));
        };
        let mut out = Outcome::default();
        let mut c = part.circuit.clone();
        c.single_output("homogenize")?;
        if c.degree().is_neg_infinity() {
            out.notes
                .push("circuit has degree -inf; no homogeneous parts".into());
            self.parts.clear();
            return Ok(out);
        }
        if c.stats().max_fanin.mul > 2 {
            out.notes
                .push("products of fan-in > 2 binarized first".into());
            c = binarize_mul(&c);
        }
        let s = c.size() as u64;
        let d = degree_of(&c) as u64;
        let h = homogenize(&c)?;
        out.bounds.push(BoundCheck::new(
            "homogenized size",
            "s(d+1)^2",
            h.size() as u64,
            s * (d + 1) * (d + 1),
            true,
        ));
        out.properties.push(PropertyCheck::new(
            "homogeneous",
            (!h.is_homogeneous()).then(|| "a sum mixes degrees".to_string()),
        ));
        let split = h.split_outputs();
        match expand(&c, c.outputs()[0], self.config.check.term_budget) {
            Ok(f) => {
                let bad: Vec<usize> = split
                    .iter()
                    .enumerate()
                    .filter(|(i, p)| {
                        expand(p, p.outputs()[0], self.config.check.term_budget)
                            .map_or(true, |q| q != f.homogeneous_part(*i as u32))
                    })
                    .map(|(i, _)| i)
                    .collect();
                out.properties.push(PropertyCheck::new(
                    "output i is the degree-i part",
                    (!bad.is_empty()).then(|| format!("parts {bad:?} differ")),
                ));
            }
            Err(Error::TermBudget { .. }) => out
                .notes
                .push("expansion exceeds the term budget; parts not checked exactly".into()),
            Err(e) => return Err(e),
        }
        self.parts = split
            .into_iter()
            .enumerate()
            .map(|(i, circuit)| {
                out.parts.push(PartReport {
                    degree: Some(i as u32),
                    input_size: c.size(),
                    output_size: Some(circuit.size()),
                    shape: None,
                });
                Part {
                    degree: Some(i as u32),
                    circuit,
                }
            })
            .collect();
        self.joined = Some(h);
        Ok(out)
    }

    fn normalize(&mut self) -> Result<Outcome> {
        let cfg = self.config.check;
        let (parts, mut out) = self.map_parts(|p| {
            let n = normalize_with(&p.circuit, &cfg)?;
            let mut o = Outcome::default();
            let binary = p.circuit.stats().max_fanin.mul <= 2;
            let label = part_label(p);
            o.bounds.push(BoundCheck::new(
                format!("normalized size{label}"),
                "s",
                n.size() as u64,
                p.circuit.size() as u64,
                binary,
            ));
            if p.circuit.is_homogeneous() && !is_zero_circuit(&n) {
                o.properties.push(PropertyCheck::new(
                    format!("normal form{label}"),
                    normal_form_violation(&n),
                ));
            }
            let dropped = is_zero_circuit(&n);
            o.parts.push(PartReport {
                degree: p.degree,
                input_size: p.circuit.size(),
                output_size: (!dropped).then(|| n.size()),
                shape: None,
            });
            Ok(((!dropped).then_some(n), o))
        })?;
        let dropped = self.parts.len() - parts.len();
        if dropped > 0 {
            out.notes.push(format!("{dropped} zero part(s) dropped"));
        }
        self.parts = parts;
        Ok(out)
    }

    fn balance(&mut self) -> Result<Outcome> {
        let (parts, out) = self.map_parts(|p| {
            let b = balance(&p.circuit)?;
            let s = p.circuit.size();
            let label = part_label(p);
            let mut o = Outcome::default();
            o.bounds.push(BoundCheck::new(
                format!("balanced size{label}"),
                "s^6+s^4+1",
                b.size() as u64,
                balance_bound(s),
                true,
            ));
            o.bounds.push(BoundCheck::new(
                format!("balanced size, tight{label}"),
                "s^6+s^2+1",
                b.size() as u64,
                balance_bound_tight(s),
                false,
            ));
            o.properties.push(PropertyCheck::new(
                format!("x-balanced{label}"),
                x_balance_violation(&b),
            ));
            o.properties.push(PropertyCheck::new(
                format!("homogeneous{label}"),
                (!b.is_homogeneous()).then(|| "a sum mixes degrees".to_string()),
            ));
            o.parts.push(PartReport {
                degree: p.degree,
                input_size: s,
                output_size: Some(b.size()),
                shape: None,
            });
            Ok((Some(b), o))
        })?;
        self.parts = parts;
        Ok(out)
    }

    fn depth4(&mut self) -> Result<Outcome> {
        self.config.validate_a(self.original.degree)?;
        let budget = self.config.check.term_budget;
        let n = self.original.vars;
        let a_override = self.config.a;
        let (parts, mut out) = self.map_parts(|p| {
            let d = degree_of(&p.circuit);
            let (r, details) = if d <= 1 {
                depth4_degenerate(&p.circuit, budget)?
            } else {
                let a = match a_override {
                    Some(a) => a.clamp(1, d - 1),
                    None => choose_a(d, n, p.circuit.size()),
                };
                depth4_reduce_with(&p.circuit, a, budget)?
            };
            let label = part_label(p);
            let shape = details.shape.clone();
            let mut o = Outcome::default();
            o.bounds.push(BoundCheck::new(
                format!("depth-4 size{label}"),
                "1+C(σ+15a,15a)+σ+σ·C(n+⌈d/a⌉,⌈d/a⌉)+n",
                r.size() as u64,
                details.size_bound.clone(),
                true,
            ));
            if !d.is_multiple_of(shape.a) {
                o.notes.push(format!(
                    "binomials{label} evaluated at ⌈{d}/{}⌉ = {}",
                    shape.a, shape.bottom_mul_fanin_bound
                ));
            }
            let prof = LevelProfile::extract(&r)?;
            o.properties.push(PropertyCheck::new(
                format!("level-3 fan-in <= 15a{label}"),
                (prof.t3 > shape.top_mul_fanin_bound as usize)
                    .then(|| format!("fan-in {}", prof.t3)),
            ));
            o.properties.push(PropertyCheck::new(
                format!("level-1 fan-in <= ⌈d/a⌉{label}"),
                (prof.t1 > shape.bottom_mul_fanin_bound as usize)
                    .then(|| format!("fan-in {}", prof.t1)),
            ));
            o.parts.push(PartReport {
                degree: p.degree,
                input_size: p.circuit.size(),
                output_size: Some(r.size()),
                shape: Some(shape),
            });
            Ok((Some(r), o))
        })?;
        let merged = merge_depth4(&parts.iter().map(|p| p.circuit.clone()).collect::<Vec<_>>());
        let pred = predict_theorem1_size(
            self.original.size as u64,
            self.original.degree.finite().unwrap_or(0) as u64,
            self.original.vars as u64,
        );
        out.bounds.push(BoundCheck::new(
            "reduced size",
            "(d+1)·(1+C(σ+15a,15a)+σ+σ·C(n+d/a,d/a)+n), σ = t^6+t^4+1, a = √(d·log n/log σ), t = s(d+1)^2",
            merged.size() as u64,
            pred.bound,
            true,
        ));
        let depth = merged.depth();
        out.properties.push(PropertyCheck::new(
            "depth 4",
            (depth > 4).then(|| format!("depth {depth}")),
        ));
        let prof = LevelProfile::extract(&merged).map(|_| ()).err();
        out.properties.push(PropertyCheck::new(
            "layered ΣΠΣΠ",
            prof.map(|e| e.to_string()),
        ));
        if self.original.homogeneous {
            out.properties.push(PropertyCheck::new(
                "homogeneity preserved",
                (!merged.is_homogeneous()).then(|| "output is not homogeneous".to_string()),
            ));
        }
        self.parts = vec![Part {
            degree: None,
            circuit: merged,
        }];
        Ok(out)
    }

    fn reduce(&mut self, input: &Circuit) -> Result<Outcome> {
        let config = PipelineConfig {
            verify: false,
            ..self.config
        };
        let (circuit, report) = reduce_to_depth4_with(input, &config)?;
        self.parts = vec![Part {
            degree: None,
            circuit,
        }];
        Ok(Outcome {
            bounds: report.bounds,
            properties: report.properties,
            parts: report.parts,
            notes: report.notes,
        })
    }
}

fn part_label(p: &Part) -> String {
    p.degree.map(|i| format!(" [part {i}]")).unwrap_or_default()
}

/// Binarize, homogenize, then per homogeneous part normalize, balance and
/// flatten to depth 4, and sum the parts under one top sum.
pub fn reduce_to_depth4(c: &Circuit) -> Result<(Circuit, PassReport)> {
    reduce_to_depth4_with(c, &PipelineConfig::default())
}

pub fn reduce_to_depth4_with(
    c: &Circuit,
    config: &PipelineConfig,
) -> Result<(Circuit, PassReport)> {
    c.single_output("reduce")?;
    config.validate_a(c.degree())?;
    let inner = PipelineConfig {
        verify: false,
        ..*config
    };
    let mut p = Pipeline::new(c.clone(), inner);
    let stages = [
        Stage::Binarize,
        Stage::Homogenize,
        Stage::Normalize,
        Stage::Balance,
        Stage::Depth4,
    ];
    let reports = p.run_all(&stages)?;
    let out = p.circuit();
    let equivalence = if config.verify {
        Some(verify_equivalent(c, &out, &config.check)?)
    } else {
        None
    };
    let mut bounds = Vec::new();
    let mut properties = Vec::new();
    let mut notes = Vec::new();
    let mut parts = Vec::new();
    for r in reports {
        let tag = r.pass.name();
        bounds.extend(r.bounds.into_iter().map(|mut b| {
            b.name = format!("{tag}: {}", b.name);
            b
        }));
        properties.extend(r.properties.into_iter().map(|mut pc| {
            pc.name = format!("{tag}: {}", pc.name);
            pc
        }));
        notes.extend(r.notes.into_iter().map(|n| format!("{tag}: {n}")));
        if r.pass == Stage::Depth4 {
            parts = r.parts;
        }
    }
    let headline = bounds.iter().rev().find(|b| b.asserted).cloned();
    let report = PassReport {
        pass: Stage::Reduce,
        input: c.stats(),
        output: out.stats(),
        predicted_bound: headline.as_ref().map(|b| b.predicted.clone()),
        bound_formula: headline.map(|b| b.formula),
        bound_satisfied: bounds.iter().all(|b| !b.asserted || b.satisfied),
        bounds,
        properties,
        parts,
        equivalence,
        config: config.check,
        a_override: config.a,
        notes,
    };
    Ok((out, report))
}
