mod common;

use std::collections::BTreeSet;

use cf_core::bounds::{
    check_lower_bound, closure_prod, closure_sum, homogeneous_bottom_fanin_bound, LevelProfile,
    Target, TargetFamily, DEFAULT_CLOSURE_BUDGET,
};
use cf_core::circuit::{count_parse_trees, enumerate_parse_trees, print_circuit};
use cf_core::field::{
    equivalent, evaluate_all, evaluate_poly, CheckConfig, PrimeField, DEFAULT_PRIME,
};
use cf_core::generators::{gen_det, gen_perm, gen_random, GeneratorSpec};
use cf_core::passes::{
    balance, binarize_mul, choose_a, depth4_reduce_with, homogenize, normalize, reduce_to_depth4,
    split_classifications,
};
use cf_core::poly::{expand, expand_all_gates, expand_outputs, DEFAULT_TERM_BUDGET};
use cf_core::ring::{Fp61, Ring};
use cf_core::{Circuit, Error, GateDegree, GateKind, Monomial, MonomialSet, SparsePolynomial};
use common::{balance_violation, depth4_size_formula, normalized_parts, random_circuit};
use itertools::Itertools;
use num_bigint::{BigInt, BigUint};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn circuit_params(
    max_n: u32,
    max_extra: usize,
    max_degree: u32,
) -> impl Strategy<Value = (u64, u32, usize, u32)> {
    (any::<u64>(), 1..=max_n, 0..=max_extra, 1..=max_degree)
        .prop_map(|(seed, n, extra, d)| (seed, n, n as usize + 2 + extra, d))
}

fn small_circuit() -> impl Strategy<Value = Circuit> {
    circuit_params(4, 6, 6).prop_map(|(seed, n, gates, d)| random_circuit(seed, n, gates, d, false))
}

fn small_homogeneous() -> impl Strategy<Value = Circuit> {
    circuit_params(3, 6, 5).prop_map(|(seed, n, gates, d)| random_circuit(seed, n, gates, d, true))
}

fn oracle(c: &Circuit) -> SparsePolynomial<BigInt> {
    expand(c, c.outputs()[0], DEFAULT_TERM_BUDGET).unwrap()
}

fn pairwise_products(a: &MonomialSet, b: &MonomialSet) -> MonomialSet {
    let mut out = MonomialSet::new();
    for x in a.iter() {
        for y in b.iter() {
            out.insert(x.mul(y));
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn degree_memo_bounds_polynomial_degree(c in small_circuit()) {
        let polys = expand_all_gates(&c, DEFAULT_TERM_BUDGET).unwrap();
        let homogeneous = c.is_homogeneous();
        for (memo, p) in c.degrees().into_iter().zip(&polys) {
            prop_assert!(memo >= p.degree());
            if homogeneous && !p.is_zero() {
                prop_assert_eq!(memo, p.degree());
            }
        }
    }

    #[test]
    fn homogeneous_degree_memo_is_exact(c in small_homogeneous()) {
        prop_assert!(c.is_homogeneous());
        let polys = expand_all_gates(&c, DEFAULT_TERM_BUDGET).unwrap();
        for (memo, p) in c.degrees().into_iter().zip(&polys) {
            if !p.is_zero() {
                prop_assert_eq!(memo, p.degree());
            }
            prop_assert!(p.is_homogeneous());
        }
    }

    #[test]
    fn parse_tree_count_matches_enumeration(c in small_circuit()) {
        let count = count_parse_trees(&c);
        if count <= BigUint::from(20_000u32) {
            let trees = enumerate_parse_trees(&c, 20_000).unwrap();
            prop_assert_eq!(BigUint::from(trees.len()), count);
        }
    }

    #[test]
    fn parse_tree_monomials_sum_to_expansion(c in small_circuit()) {
        if count_parse_trees(&c) <= BigUint::from(20_000u32) {
            let mut sum = SparsePolynomial::zero();
            for t in enumerate_parse_trees(&c, 20_000).unwrap() {
                sum = sum.add(&t.monomial(&c).unwrap());
            }
            prop_assert_eq!(sum, oracle(&c));
        }
    }

    #[test]
    fn expand_is_a_homomorphism(c in small_circuit()) {
        let polys = expand_all_gates(&c, DEFAULT_TERM_BUDGET).unwrap();
        for (i, g) in c.gates().iter().enumerate() {
            let kids = g.children.iter().map(|ch| &polys[ch.0]);
            let expected = match &g.kind {
                GateKind::Input(v) => SparsePolynomial::var(*v),
                GateKind::Const(k) => SparsePolynomial::constant(k.clone()),
                GateKind::Add => kids.fold(SparsePolynomial::zero(), |acc, p| acc.add(p)),
                GateKind::Mul | GateKind::Scal => kids.fold(SparsePolynomial::one(), |acc, p| acc.mul(p)),
            };
            prop_assert_eq!(&polys[i], &expected);
        }
    }

    #[test]
    fn supports_are_contained(c in small_circuit()) {
        let polys = expand_all_gates(&c, DEFAULT_TERM_BUDGET).unwrap();
        for g in c.gates() {
            if g.children.len() != 2 {
                continue;
            }
            let (p, q) = (&polys[g.children[0].0], &polys[g.children[1].0]);
            prop_assert!(p.add(q).support().is_subset(&p.support().union(&q.support())));
            prop_assert!(p.mul(q).support().is_subset(&pairwise_products(&p.support(), &q.support())));
        }
    }

    #[test]
    fn evaluation_matches_expansion(c in small_circuit(), seed in any::<u64>()) {
        let field = PrimeField::new(DEFAULT_PRIME).unwrap();
        let polys = expand_all_gates(&c, DEFAULT_TERM_BUDGET).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            let point: Vec<u64> = (0..c.var_space()).map(|_| rng.gen_range(0..DEFAULT_PRIME)).collect();
            let values = evaluate_all(&c, &point, &field).unwrap();
            for (v, p) in values.iter().zip(&polys) {
                prop_assert_eq!(*v, evaluate_poly(p, &point, &field).unwrap());
            }
        }
    }

    #[test]
    fn failure_points_are_witnesses(a in small_circuit(), b in small_circuit(), seed in any::<u64>()) {
        let field = PrimeField::new(DEFAULT_PRIME).unwrap();
        let verdict = equivalent(&a, &b, 20, &field, seed).unwrap();
        let exact = oracle(&a) == oracle(&b);
        if exact {
            prop_assert!(verdict.equal);
        }
        if let Some(point) = verdict.failure_point {
            prop_assert!(!exact);
            let va = evaluate_all(&a, &point, &field).unwrap()[a.outputs()[0].0];
            let vb = evaluate_all(&b, &point, &field).unwrap()[b.outputs()[0].0];
            prop_assert_ne!(va, vb);
        }
    }

    #[test]
    fn ring_laws_over_integers(x in any::<i64>(), y in any::<i64>(), z in any::<i64>()) {
        let (x, y, z) = (BigInt::from(x), BigInt::from(y), BigInt::from(z));
        prop_assert_eq!(Ring::add(&Ring::add(&x, &y), &z), Ring::add(&x, &Ring::add(&y, &z)));
        prop_assert_eq!(Ring::mul(&Ring::mul(&x, &y), &z), Ring::mul(&x, &Ring::mul(&y, &z)));
        prop_assert_eq!(Ring::add(&x, &y), Ring::add(&y, &x));
        prop_assert_eq!(Ring::mul(&x, &y), Ring::mul(&y, &x));
        prop_assert_eq!(Ring::mul(&x, &Ring::add(&y, &z)), Ring::add(&Ring::mul(&x, &y), &Ring::mul(&x, &z)));
    }

    #[test]
    fn ring_laws_modulo_prime(x in any::<u64>(), y in any::<u64>(), z in any::<u64>()) {
        let (x, y, z) = (Fp61::new(x), Fp61::new(y), Fp61::new(z));
        prop_assert_eq!(x.add(&y).add(&z), x.add(&y.add(&z)));
        prop_assert_eq!(x.mul(&y).mul(&z), x.mul(&y.mul(&z)));
        prop_assert_eq!(x.add(&y), y.add(&x));
        prop_assert_eq!(x.mul(&y), y.mul(&x));
        prop_assert_eq!(x.mul(&y.add(&z)), x.mul(&y).add(&x.mul(&z)));
        prop_assert!(x.add(&x.neg()).is_zero());
        let m = (1u128 << 61) - 1;
        let expected = (x.value() as u128 * y.value() as u128 % m) as u64;
        prop_assert_eq!(x.mul(&y).value(), expected);
    }

    #[test]
    fn reduction_preserves_semantics(c in circuit_params(3, 4, 4).prop_map(|(s, n, g, d)| random_circuit(s, n, g, d, false))) {
        let (out, report) = reduce_to_depth4(&c).unwrap();
        prop_assert!(out.validate().is_ok());
        prop_assert!(report.ok(), "{:?}", report);
        prop_assert_eq!(expand_outputs(&out, DEFAULT_TERM_BUDGET).unwrap(), expand_outputs(&c, DEFAULT_TERM_BUDGET).unwrap());
    }

    #[test]
    fn homogenize_postconditions(c in small_circuit()) {
        let bin = binarize_mul(&c);
        prop_assert!(bin.validate().is_ok());
        prop_assert_eq!(oracle(&bin), oracle(&c));
        let h = homogenize(&bin).unwrap();
        prop_assert!(h.validate().is_ok());
        prop_assert!(h.is_homogeneous());
        let d = bin.degree().finite().unwrap() as usize;
        prop_assert!(h.size() <= bin.size() * (d + 1) * (d + 1));
        let f = oracle(&bin);
        let parts = expand_outputs(&h, DEFAULT_TERM_BUDGET).unwrap();
        prop_assert_eq!(parts.len(), d + 1);
        for (i, p) in parts.iter().enumerate() {
            let expected = SparsePolynomial::from_terms(
                f.terms().filter(|(m, _)| m.degree() as usize == i).map(|(m, k)| (m.clone(), k.clone())),
            );
            prop_assert_eq!(p, &expected);
        }
    }

    #[test]
    fn balance_postconditions(c in small_homogeneous()) {
        for (_, part) in normalized_parts(&c) {
            let b = balance(&part).unwrap();
            prop_assert!(b.validate().is_ok());
            prop_assert!(b.is_homogeneous());
            prop_assert_eq!(balance_violation(&b), None);
            let s = part.size() as u128;
            prop_assert!((b.size() as u128) <= s.pow(6) + s.pow(4) + 1);
            prop_assert_eq!(oracle(&b), oracle(&part));
        }
    }

    #[test]
    fn depth4_postconditions(c in circuit_params(3, 4, 5).prop_map(|(s, n, g, d)| random_circuit(s, n, g, d, true))) {
        for (d, part) in normalized_parts(&c) {
            if d < 2 {
                continue;
            }
            let b = balance(&part).unwrap();
            let a = choose_a(d, b.var_space(), b.size());
            let (c4, details) = depth4_reduce_with(&b, a, DEFAULT_TERM_BUDGET).unwrap();
            prop_assert!(c4.validate().is_ok());
            prop_assert!(c4.depth() <= 4);
            prop_assert!(c4.is_homogeneous());
            let profile = LevelProfile::extract(&c4).unwrap();
            prop_assert!(profile.t3 <= 15 * a as usize);
            prop_assert!(profile.t1 <= d.div_ceil(a) as usize);
            prop_assert_eq!(details.sigma, b.size());
            let bound = depth4_size_formula(b.size() as u64, details.vars as u64, d as u64, a as u64);
            prop_assert!(BigUint::from(c4.size()) <= bound);
            prop_assert_eq!(oracle(&c4), oracle(&part));
        }
    }

    #[test]
    fn split_classifications_are_bounded(c in small_homogeneous()) {
        for (d, part) in normalized_parts(&c) {
            if d < 2 {
                continue;
            }
            let b = balance(&part).unwrap();
            for a in 1..d {
                match split_classifications(&b, a, 5_000) {
                    Ok(list) => {
                        for cl in list {
                            prop_assert!(cl.g0 <= a as usize);
                            prop_assert!(cl.g1 <= a as usize);
                            prop_assert!(cl.g2 <= cl.g0);
                            let products = cl.g0 + cl.g1 + cl.g2;
                            prop_assert!(cl.variable_leaves <= 5 * products);
                            prop_assert!(5 * products <= 15 * a as usize);
                        }
                    }
                    Err(Error::EnumerationOverflow { .. }) => {}
                    Err(e) => return Err(TestCaseError::fail(e.to_string())),
                }
            }
        }
    }

    #[test]
    fn normalize_and_binarize_are_idempotent(c in small_circuit()) {
        let bin = binarize_mul(&c);
        prop_assert_eq!(print_circuit(&binarize_mul(&bin)), print_circuit(&bin));
        let h = homogenize(&bin).unwrap();
        for part in h.split_outputs() {
            let once = normalize(&part).unwrap();
            prop_assert!(once.validate().is_ok());
            prop_assert_eq!(print_circuit(&normalize(&once).unwrap()), print_circuit(&once));
        }
    }

    #[test]
    fn monomial_closures(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_polynomials(&mut rng);
        let supports: Vec<MonomialSet> = e.iter().map(|p| p.support()).collect();
        let me = closure_sum(&supports);
        let mut sums = MonomialSet::new();
        for m in 1..=3 {
            for combo in e.iter().combinations_with_replacement(m) {
                let s = combo.into_iter().fold(SparsePolynomial::zero(), |acc, p| acc.add(p));
                sums = sums.union(&s.support());
            }
        }
        prop_assert_eq!(&sums, &me);
        for k in 1..=4u32 {
            let closure = closure_prod(&me, k, DEFAULT_CLOSURE_BUDGET).unwrap();
            prop_assert!(BigUint::from(closure.len()) <= BigUint::from(me.len() + 1).pow(k));
            for m in 0..=k as usize {
                for combo in e.iter().combinations_with_replacement(m) {
                    let p = combo.into_iter().fold(SparsePolynomial::one(), |acc, q| acc.mul(q));
                    prop_assert!(p.support().is_subset(&closure));
                }
            }
        }
    }

    #[test]
    fn random_generation_validates_and_is_deterministic(seed in any::<u64>(), n in 1u32..=4, extra in 0usize..=14, d in 1u32..=6, h in any::<bool>()) {
        let spec = GeneratorSpec::random(n, n as usize + 2 + extra, d, seed).homogeneous(h);
        let c = gen_random(&spec).unwrap();
        prop_assert!(c.validate().is_ok());
        prop_assert!(c.size() <= spec.gates);
        prop_assert!(c.degree() <= GateDegree::Finite(d));
        if h {
            prop_assert!(c.is_homogeneous());
        }
        prop_assert_eq!(print_circuit(&gen_random(&spec).unwrap()), print_circuit(&c));
    }
}

fn random_polynomials(rng: &mut ChaCha8Rng) -> Vec<SparsePolynomial<BigInt>> {
    let count = rng.gen_range(1..=4);
    (0..count)
        .map(|_| {
            let terms = rng.gen_range(1..=4);
            SparsePolynomial::from_terms((0..terms).map(|_| {
                let m = Monomial::from_pairs((0..3u32).map(|v| (v, rng.gen_range(0..=2u32))));
                let mut k = rng.gen_range(-3i64..=3);
                if k == 0 {
                    k = 1;
                }
                (m, BigInt::from(k))
            }))
        })
        .collect()
}

#[test]
fn lower_bounds_hold_on_reduced_matrix_polynomials() {
    let cfg = CheckConfig::default();
    for n in 1..=4u32 {
        for family in [TargetFamily::Perm, TargetFamily::Det] {
            let target = Target { family, n };
            let (c4, report) = reduce_to_depth4(&target.circuit().unwrap()).unwrap();
            assert!(report.ok(), "{family:?} {n}");
            let lb = check_lower_bound(&c4, target, &cfg).unwrap();
            assert!(lb.satisfied, "{family:?} {n}: {:?}", lb.certificates);
            for cert in homogeneous_bottom_fanin_bound(&c4, n).unwrap() {
                assert!(cert.satisfied, "{family:?} {n}: {cert:?}");
            }
        }
    }
}

#[test]
fn perm_and_det_differ_only_in_signs() {
    for n in 1..=5u32 {
        let p = oracle(&gen_perm(n).unwrap());
        let d = oracle(&gen_det(n).unwrap());
        assert_eq!(p.support(), d.support());
        assert_eq!(p.len(), (1..=n as usize).product::<usize>());
        for (m, k) in d.terms() {
            assert_eq!(p.coeff(m), BigInt::from(1));
            assert!(k == &BigInt::from(1) || k == &BigInt::from(-1));
        }
        let exponents: BTreeSet<Vec<u32>> = p
            .terms()
            .map(|(m, _)| m.exponents().iter().map(|&(_, e)| e).collect())
            .collect();
        assert!(exponents.iter().all(|e| e.iter().all(|&x| x == 1)));
    }
}

#[test]
fn matrix_generators_are_homogeneous_and_valid() {
    for n in 1..=5u32 {
        for c in [gen_perm(n).unwrap(), gen_det(n).unwrap()] {
            assert!(c.validate().is_ok());
            assert!(c.is_homogeneous());
            assert_eq!(c.degree(), GateDegree::Finite(n));
        }
    }
}
