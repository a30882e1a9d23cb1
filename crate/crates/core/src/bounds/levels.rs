use std::collections::BTreeSet;

use num_bigint::BigUint;
use serde::Serialize;

use super::{factorial, min_level1_size, BoundCertificate};
use crate::circuit::{Circuit, GateId, GateKind};
use crate::error::{Error, Result};
use crate::field::{verify_equivalent, CheckConfig, EquivalenceReport};
use crate::generators::{gen_det, gen_perm};
use crate::poly::{expand, Monomial, MonomialSet};

/// Sizes and fan-ins of a strictly layered ΣΠΣΠ circuit. Level 4 is the
/// output sum, level 1 the bottom products. Constants may only appear as
/// coefficient children of products; a variable fed directly into a level-2
/// sum is a bare wire and counts towards level 1.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LevelProfile {
    pub s0: usize,
    pub s1: usize,
    pub s2: usize,
    pub s3: usize,
    pub s4: usize,
    pub t1: usize,
    pub t2: usize,
    pub t3: usize,
    pub t4: usize,
    pub bottom_min_fanin: Option<usize>,
    pub bare_wires: usize,
    pub coefficients: usize,
    #[serde(skip)]
    level1: Vec<GateId>,
    #[serde(skip)]
    bare: Vec<u32>,
    #[serde(skip)]
    level2: Vec<GateId>,
    #[serde(skip)]
    level3: Vec<GateId>,
}

/// Monomial sets `ℳ_E1` and `ℳ_E4` of a ΣΠΣΠ circuit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialCalculus {
    pub level1: MonomialSet,
    pub level4: MonomialSet,
}

fn structure(msg: String) -> Error {
    Error::Structure(msg)
}

impl LevelProfile {
    pub fn extract(c: &Circuit) -> Result<LevelProfile> {
        let root = c.single_output("level profile")?;
        let mut level: Vec<Option<u8>> = vec![None; c.size()];
        let mut assign = |g: GateId, l: u8, into: &mut Vec<GateId>| -> Result<()> {
            match level[g.0] {
                Some(prev) if prev != l => {
                    Err(structure(format!("{g} sits on levels {prev} and {l}")))
                }
                Some(_) => Ok(()),
                None => {
                    level[g.0] = Some(l);
                    into.push(g);
                    Ok(())
                }
            }
        };
        let kind = |g: GateId| &c.gates()[g.0].kind;
        let children = |g: GateId| &c.gates()[g.0].children;

        let mut p = LevelProfile::default();
        if *kind(root) != GateKind::Add {
            return Err(structure(format!("output {root} is not a sum")));
        }
        p.s4 = 1;
        p.t4 = children(root).len();
        let mut l3 = Vec::new();
        for &ch in children(root) {
            match kind(ch) {
                GateKind::Mul => assign(ch, 3, &mut l3)?,
                k => {
                    return Err(structure(format!(
                        "{ch} ({}) feeds the output sum; expected a product",
                        k.name()
                    )))
                }
            }
        }
        let mut l2 = Vec::new();
        for &g in &l3 {
            let mut fanin = 0;
            for &ch in children(g) {
                match kind(ch) {
                    GateKind::Const(_) => p.coefficients += 1,
                    GateKind::Add => {
                        fanin += 1;
                        assign(ch, 2, &mut l2)?;
                    }
                    GateKind::Input(_) => {
                        return Err(structure(format!(
                            "wire crossing: variable {ch} feeds level-3 product {g}"
                        )))
                    }
                    k => {
                        return Err(structure(format!(
                            "{ch} ({}) feeds level-3 product {g}; expected a sum",
                            k.name()
                        )))
                    }
                }
            }
            p.t3 = p.t3.max(fanin);
        }
        let mut l1 = Vec::new();
        let mut bare = BTreeSet::new();
        for &g in &l2 {
            for &ch in children(g) {
                match kind(ch) {
                    GateKind::Mul => assign(ch, 1, &mut l1)?,
                    GateKind::Input(v) => {
                        bare.insert(*v);
                    }
                    k => {
                        return Err(structure(format!(
                            "{ch} ({}) feeds level-2 sum {g}; expected a product",
                            k.name()
                        )))
                    }
                }
            }
            p.t2 = p.t2.max(children(g).len());
        }
        let mut vars = bare.clone();
        for &g in &l1 {
            let mut fanin = 0;
            for &ch in children(g) {
                match kind(ch) {
                    GateKind::Const(_) => p.coefficients += 1,
                    GateKind::Input(v) => {
                        fanin += 1;
                        vars.insert(*v);
                    }
                    k => {
                        return Err(structure(format!(
                            "{ch} ({}) feeds level-1 product {g}; expected a variable",
                            k.name()
                        )))
                    }
                }
            }
            p.t1 = p.t1.max(fanin);
            p.bottom_min_fanin = Some(p.bottom_min_fanin.map_or(fanin, |m| m.min(fanin)));
        }
        if !bare.is_empty() {
            p.t1 = p.t1.max(1);
        }
        p.s0 = vars.len();
        p.s1 = l1.len() + bare.len();
        p.s2 = l2.len();
        p.s3 = l3.len();
        p.bare_wires = bare.len();
        p.level1 = l1;
        p.bare = bare.into_iter().collect();
        p.level2 = l2;
        p.level3 = l3;
        Ok(p)
    }

    /// Propagates monomial sets bottom-up: products of variables give one
    /// monomial, sums take unions, level-3 products take pairwise products.
    /// Fails when a level-3 set would exceed `budget` monomials.
    pub fn monomial_calculus(&self, c: &Circuit, budget: usize) -> Result<MonomialCalculus> {
        let mut sets: Vec<Option<MonomialSet>> = vec![None; c.size()];
        let mut level1 = MonomialSet::new();
        for &g in &self.level1 {
            let m = c.gates()[g.0]
                .children
                .iter()
                .filter_map(|ch| match c.gates()[ch.0].kind {
                    GateKind::Input(v) => Some(Monomial::var(v)),
                    _ => None,
                })
                .fold(Monomial::one(), |acc, x| acc.mul(&x));
            level1.insert(m.clone());
            sets[g.0] = Some(std::iter::once(m).collect());
        }
        for &v in &self.bare {
            level1.insert(Monomial::var(v));
        }
        for &g in &self.level2 {
            let mut s = MonomialSet::new();
            for ch in &c.gates()[g.0].children {
                match &c.gates()[ch.0].kind {
                    GateKind::Input(v) => {
                        s.insert(Monomial::var(*v));
                    }
                    _ => s = s.union(sets[ch.0].as_ref().expect("level 1 done")),
                }
            }
            sets[g.0] = Some(s);
        }
        let mut level4 = MonomialSet::new();
        for &g in &self.level3 {
            let mut acc: MonomialSet = std::iter::once(Monomial::one()).collect();
            for ch in &c.gates()[g.0].children {
                if let Some(s) = &sets[ch.0] {
                    if acc.len().saturating_mul(s.len()) > budget {
                        let bound = c.gates()[g.0]
                            .children
                            .iter()
                            .filter_map(|ch| sets[ch.0].as_ref())
                            .fold(BigUint::from(1u32), |b, s| b * s.len());
                        return Err(Error::ClosureOverflow { budget, bound });
                    }
                    acc = acc.product(s);
                }
            }
            level4 = level4.union(&acc);
        }
        Ok(MonomialCalculus { level1, level4 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetFamily {
    Perm,
    Det,
}

/// `Perm_n` or `Det_n` over the `n^2` variables `x_{i,j} = x_{i·n+j}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Target {
    pub family: TargetFamily,
    pub n: u32,
}

impl Target {
    pub fn circuit(&self) -> Result<Circuit> {
        match self.family {
            TargetFamily::Perm => gen_perm(self.n),
            TargetFamily::Det => gen_det(self.n),
        }
    }

    fn name(&self) -> String {
        match self.family {
            TargetFamily::Perm => format!("Perm_{}", self.n),
            TargetFamily::Det => format!("Det_{}", self.n),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LowerBoundReport {
    pub target: Target,
    pub profile: LevelProfile,
    pub equivalence: EquivalenceReport,
    pub certificates: Vec<BoundCertificate>,
    pub notes: Vec<String>,
    pub satisfied: bool,
}

/// Checks that `c` is a ΣΠΣΠ circuit computing the target and certifies the
/// level-1 lower bound for its level-3 fan-in, together with the monomial
/// calculus facts it rests on.
pub fn check_lower_bound(
    c: &Circuit,
    target: Target,
    cfg: &CheckConfig,
) -> Result<LowerBoundReport> {
    let profile = LevelProfile::extract(c)?;
    let reference = target.circuit()?;
    let equivalence = verify_equivalent(c, &reference, cfg)?;
    if !equivalence.equal {
        return Err(Error::contract(
            "bounds",
            format!("circuit does not compute {}", target.name()),
        ));
    }
    let v = profile.t3 as u32;
    if v == 0 {
        return Err(Error::contract(
            "bounds",
            "level-3 products have no sum children",
        ));
    }
    let n = target.n as u64;
    let s1 = BigUint::from(profile.s1);
    let n_fact = factorial(n);
    let mut certificates = vec![
        BoundCertificate::ge(
            format!("s1 >= ceil(({n}!)^(1/{v})) - 1"),
            s1.clone(),
            min_level1_size(n, v),
        ),
        BoundCertificate::ge(
            format!("(s1 + 1)^{v} >= {n}!"),
            (s1.clone() + 1u32).pow(v),
            n_fact.clone(),
        ),
    ];
    let mut notes = Vec::new();
    match profile.monomial_calculus(c, cfg.term_budget) {
        Ok(calc) => {
            let e1 = BigUint::from(calc.level1.len());
            let e4 = BigUint::from(calc.level4.len());
            certificates.push(BoundCertificate::le("|M_E1| <= s1", e1.clone(), s1));
            certificates.push(BoundCertificate::le(
                format!("|M_E4| <= (|M_E1| + 1)^{v}"),
                e4.clone(),
                (e1 + 1u32).pow(v),
            ));
            match expand(&reference, reference.outputs()[0], cfg.term_budget) {
                Ok(p) => {
                    let support = p.support();
                    let mut cert = BoundCertificate::ge(
                        format!("M_E4 contains the support of {}", target.name()),
                        e4,
                        BigUint::from(support.len()),
                    );
                    cert.satisfied &= support.is_subset(&calc.level4);
                    certificates.push(cert);
                }
                Err(Error::TermBudget { .. }) => notes
                    .push("target support exceeds the term budget; inclusion not checked".into()),
                Err(e) => return Err(e),
            }
        }
        Err(Error::ClosureOverflow { budget, bound }) => notes.push(format!(
            "monomial calculus skipped: a level-3 set may reach {bound} monomials (budget {budget})"
        )),
        Err(e) => return Err(e),
    }
    let satisfied = certificates.iter().all(|c| c.satisfied);
    Ok(LowerBoundReport {
        target,
        profile,
        equivalence,
        certificates,
        notes,
        satisfied,
    })
}

/// For a homogeneous ΣΠΣΠ circuit of degree `n` whose bottom products all
/// have fan-in at least `t`: every level-3 product has fan-in at most
/// `⌊n/t⌋`, hence `s1 >= (n!)^(1/⌊n/t⌋) - 1 >= (n!)^(t/n) - 1`.
pub fn homogeneous_bottom_fanin_bound(c: &Circuit, n: u32) -> Result<Vec<BoundCertificate>> {
    if !c.is_homogeneous() {
        return Err(Error::contract("bounds", "circuit is not homogeneous"));
    }
    let profile = LevelProfile::extract(c)?;
    let t = match profile.bottom_min_fanin {
        Some(t) if t > 0 => t,
        Some(_) => {
            return Err(Error::contract(
                "bounds",
                "a bottom product has no variables",
            ))
        }
        None => return Err(structure("circuit has no bottom products".into())),
    };
    let v = n / t as u32;
    let mut certs = vec![BoundCertificate::le(
        format!("t3 <= floor({n}/{t})"),
        BigUint::from(profile.t3),
        BigUint::from(v),
    )];
    if v >= 1 {
        certs.push(BoundCertificate::ge(
            format!("s1 >= ceil(({n}!)^(1/{v})) - 1"),
            BigUint::from(profile.s1),
            min_level1_size(n as u64, v),
        ));
    }
    Ok(certs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitBuilder;

    #[test]
    fn profile_of_perm3_expansion() {
        let c = gen_perm(3).unwrap();
        let mut b = CircuitBuilder::hash_consing();
        let x: Vec<_> = (0..9).map(|v| b.input(v)).collect();
        let mut terms = Vec::new();
        for p in [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ] {
            let sums: Vec<_> = (0..3)
                .map(|i| {
                    let m = b.mul(vec![x[3 * i + p[i]]]);
                    b.add(vec![m])
                })
                .collect();
            terms.push(b.mul(sums));
        }
        let top = b.add(terms);
        let d4 = b.finish(vec![top]).unwrap();
        let prof = LevelProfile::extract(&d4).unwrap();
        assert_eq!(
            (prof.s1, prof.t1, prof.t3, prof.s3, prof.t4),
            (9, 1, 3, 6, 6)
        );
        let report = check_lower_bound(
            &d4,
            Target {
                family: TargetFamily::Perm,
                n: 3,
            },
            &CheckConfig::default(),
        )
        .unwrap();
        assert!(report.satisfied, "{report:?}");
        assert!(check_lower_bound(
            &c,
            Target {
                family: TargetFamily::Perm,
                n: 3
            },
            &CheckConfig::default()
        )
        .is_err());
    }

    #[test]
    fn wire_crossing_is_rejected() {
        let mut b = CircuitBuilder::new();
        let x = b.input(0);
        let y = b.input(1);
        let s = b.add(vec![y]);
        let m = b.mul(vec![x, s]);
        let top = b.add(vec![m]);
        let c = b.finish(vec![top]).unwrap();
        assert!(matches!(
            LevelProfile::extract(&c),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn wrong_target_is_a_contract_error() {
        let mut b = CircuitBuilder::new();
        let x: Vec<_> = (0..4).map(|v| b.input(v)).collect();
        let m1 = b.mul(vec![x[0], x[3]]);
        let m2 = b.mul(vec![x[1], x[2]]);
        let s = b.add(vec![m1, m2]);
        let p = b.mul(vec![s]);
        let top = b.add(vec![p]);
        let c = b.finish(vec![top]).unwrap();
        let perm = Target {
            family: TargetFamily::Perm,
            n: 2,
        };
        let det = Target {
            family: TargetFamily::Det,
            n: 2,
        };
        assert!(
            check_lower_bound(&c, perm, &CheckConfig::default())
                .unwrap()
                .satisfied
        );
        assert!(matches!(
            check_lower_bound(&c, det, &CheckConfig::default()),
            Err(Error::Contract { .. })
        ));
        let certs = homogeneous_bottom_fanin_bound(&c, 2).unwrap();
        assert!(certs.iter().all(|c| c.satisfied));
    }
}
