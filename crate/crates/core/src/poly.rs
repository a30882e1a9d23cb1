//! Exact sparse multivariate polynomials, used as the reference semantics
//! of circuits.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;

use crate::circuit::{Circuit, GateDegree, GateId, GateKind};
use crate::error::{Error, Result};
use crate::ring::Ring;

pub const DEFAULT_TERM_BUDGET: usize = 1_000_000;

/// A monomial as sorted `(variable, exponent)` pairs with positive exponents.
///
/// Ordered graded-lexicographically with `x0 > x1 > ...`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(u32, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: u32) -> Self {
        Monomial(vec![(v, 1)])
    }

    /// Builds a monomial from arbitrary pairs; zero exponents are dropped
    /// and repeated variables merged.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut map: BTreeMap<u32, u32> = BTreeMap::new();
        for (v, e) in pairs {
            *map.entry(v).or_default() += e;
        }
        Monomial(map.into_iter().filter(|(_, e)| *e > 0).collect())
    }

    pub fn exponents(&self) -> &[(u32, u32)] {
        &self.0
    }

    pub fn exponent(&self, v: u32) -> u32 {
        self.0
            .binary_search_by_key(&v, |(var, _)| *var)
            .map_or(0, |i| self.0[i].1)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    pub fn evaluate<R: Ring>(&self, point: &[R]) -> Result<R> {
        let mut acc = R::one();
        for &(v, e) in &self.0 {
            let x = point.get(v as usize).ok_or(Error::MissingVariable(v))?;
            for _ in 0..e {
                acc = acc.mul(x);
            }
        }
        Ok(acc)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            for (a, b) in self.0.iter().zip(&other.0) {
                if a.0 != b.0 {
                    // The monomial holding the smaller variable is larger.
                    return b.0.cmp(&a.0);
                }
                if a.1 != b.1 {
                    return a.1.cmp(&b.1);
                }
            }
            self.0.len().cmp(&other.0.len())
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (i, (v, e)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" * ")?;
            }
            if *e == 1 {
                write!(f, "x{v}")?;
            } else {
                write!(f, "x{v}^{e}")?;
            }
        }
        Ok(())
    }
}

/// A set of monomials, kept in graded-lex order.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MonomialSet(BTreeSet<Monomial>);

impl MonomialSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, m: &Monomial) -> bool {
        self.0.contains(m)
    }

    pub fn insert(&mut self, m: Monomial) -> bool {
        self.0.insert(m)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Monomial> {
        self.0.iter()
    }

    pub fn union(&self, other: &MonomialSet) -> MonomialSet {
        MonomialSet(self.0.union(&other.0).cloned().collect())
    }

    pub fn is_subset(&self, other: &MonomialSet) -> bool {
        self.0.is_subset(&other.0)
    }

    /// All pairwise products `a * b`.
    pub fn product(&self, other: &MonomialSet) -> MonomialSet {
        let mut out = BTreeSet::new();
        for a in &self.0 {
            for b in &other.0 {
                out.insert(a.mul(b));
            }
        }
        MonomialSet(out)
    }
}

impl FromIterator<Monomial> for MonomialSet {
    fn from_iter<I: IntoIterator<Item = Monomial>>(iter: I) -> Self {
        MonomialSet(iter.into_iter().collect())
    }
}

impl fmt::Display for MonomialSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, m) in self.0.iter().rev().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{m}")?;
        }
        f.write_str("}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsePolynomial<R: Ring> {
    terms: BTreeMap<Monomial, R>,
}

impl<R: Ring> Default for SparsePolynomial<R> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<R: Ring> SparsePolynomial<R> {
    pub fn zero() -> Self {
        SparsePolynomial {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::constant(R::one())
    }

    pub fn constant(c: R) -> Self {
        Self::term(Monomial::one(), c)
    }

    pub fn var(v: u32) -> Self {
        Self::term(Monomial::var(v), R::one())
    }

    pub fn term(m: Monomial, c: R) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        SparsePolynomial { terms }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, R)>) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, &c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of nonzero terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> R {
        self.terms.get(m).cloned().unwrap_or_else(R::zero)
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &R)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> GateDegree {
        self.terms
            .keys()
            .next_back()
            .map_or(GateDegree::NegInfinity, |m| GateDegree::Finite(m.degree()))
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(Monomial::degree);
        match degs.next() {
            None => true,
            Some(d) => degs.all(|e| e == d),
        }
    }

    fn add_term(&mut self, m: Monomial, c: &R) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                let s = v.add(c);
                if s.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(m, c.clone());
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let (mut acc, small) = if self.len() >= other.len() {
            (self.clone(), other)
        } else {
            (other.clone(), self)
        };
        for (m, c) in &small.terms {
            acc.add_term(m.clone(), c);
        }
        acc
    }

    pub fn neg(&self) -> Self {
        SparsePolynomial {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &R) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, c)| (m.clone(), c.mul(k))))
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut acc: HashMap<Monomial, R> = HashMap::with_capacity(self.len() * other.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.mul(mb);
                let c = ca.mul(cb);
                match acc.get_mut(&m) {
                    Some(v) => *v = v.add(&c),
                    None => {
                        acc.insert(m, c);
                    }
                }
            }
        }
        SparsePolynomial {
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    /// Sum of the terms of total degree exactly `i`.
    pub fn homogeneous_part(&self, i: u32) -> Self {
        SparsePolynomial {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() == i)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn support(&self) -> MonomialSet {
        self.terms.keys().cloned().collect()
    }

    pub fn evaluate(&self, point: &[R]) -> Result<R> {
        let mut acc = R::zero();
        for (m, c) in &self.terms {
            acc = acc.add(&c.mul(&m.evaluate(point)?));
        }
        Ok(acc)
    }

    /// Maps coefficients into another ring.
    pub fn map<S: Ring>(&self, f: impl Fn(&R) -> S) -> SparsePolynomial<S> {
        SparsePolynomial::from_terms(self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }
}

impl<R: Ring> fmt::Display for SparsePolynomial<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if m.is_one() {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c} * {m}")?;
            }
        }
        Ok(())
    }
}

/// Expands every gate reachable from `roots`, in topological order, handing
/// each finished root polynomial to `emit`. Intermediate polynomials are
/// dropped after their last use.
fn expand_with<R: Ring>(
    c: &Circuit,
    roots: &[GateId],
    budget: usize,
    mut emit: impl FnMut(GateId, &SparsePolynomial<R>),
) -> Result<()> {
    for r in roots {
        c.gate(*r)?;
    }
    let live = c.reachable_from(roots);
    let mut last_use = vec![0usize; c.size()];
    for (i, gate) in c.gates().iter().enumerate() {
        if live[i] {
            for ch in &gate.children {
                last_use[ch.0] = i;
            }
        }
    }
    let mut is_root = vec![false; c.size()];
    for r in roots {
        is_root[r.0] = true;
    }
    let mut vals: Vec<Option<SparsePolynomial<R>>> = vec![None; c.size()];
    for (i, gate) in c.gates().iter().enumerate() {
        if !live[i] {
            continue;
        }
        let child = |k: usize| vals[gate.children[k].0].as_ref().expect("child expanded");
        let p = match &gate.kind {
            GateKind::Input(v) => SparsePolynomial::var(*v),
            GateKind::Const(k) => SparsePolynomial::constant(R::from_integer(k)),
            GateKind::Add => {
                let mut acc = child(0).clone();
                for k in 1..gate.children.len() {
                    acc = acc.add(child(k));
                }
                acc
            }
            GateKind::Mul | GateKind::Scal => {
                let mut acc = child(0).clone();
                for k in 1..gate.children.len() {
                    acc = acc.mul(child(k));
                    if acc.len() > budget {
                        break;
                    }
                }
                acc
            }
        };
        if p.len() > budget {
            return Err(Error::TermBudget {
                gate: GateId(i),
                terms: p.len(),
                budget,
            });
        }
        if is_root[i] {
            emit(GateId(i), &p);
        }
        for ch in &gate.children {
            if last_use[ch.0] == i && !is_root[ch.0] {
                vals[ch.0] = None;
            }
        }
        vals[i] = Some(p);
    }
    Ok(())
}

/// Exact integer polynomial computed at `output`.
pub fn expand(c: &Circuit, output: GateId, term_budget: usize) -> Result<SparsePolynomial<BigInt>> {
    expand_over(c, output, term_budget)
}

pub fn expand_over<R: Ring>(
    c: &Circuit,
    output: GateId,
    term_budget: usize,
) -> Result<SparsePolynomial<R>> {
    let mut out = None;
    expand_with(c, &[output], term_budget, |_, p| out = Some(p.clone()))?;
    Ok(out.expect("root is expanded"))
}

/// Expansions of all outputs, in output order.
pub fn expand_outputs(c: &Circuit, term_budget: usize) -> Result<Vec<SparsePolynomial<BigInt>>> {
    expand_many(c, c.outputs(), term_budget)
}

/// Expansions of the gates `roots`, in the given order, sharing the work
/// on common subcircuits.
pub fn expand_many(
    c: &Circuit,
    roots: &[GateId],
    term_budget: usize,
) -> Result<Vec<SparsePolynomial<BigInt>>> {
    let mut by_gate: HashMap<GateId, SparsePolynomial<BigInt>> = HashMap::new();
    expand_with(c, roots, term_budget, |g, p| {
        by_gate.insert(g, p.clone());
    })?;
    Ok(roots.iter().map(|o| by_gate[o].clone()).collect())
}

/// Expansion of every gate of `c`.
pub fn expand_all_gates(c: &Circuit, term_budget: usize) -> Result<Vec<SparsePolynomial<BigInt>>> {
    let ids: Vec<GateId> = c.ids().collect();
    let mut out = vec![SparsePolynomial::zero(); c.size()];
    expand_with(c, &ids, term_budget, |g, p| out[g.0] = p.clone())?;
    Ok(out)
}
