#![allow(dead_code)]

use cf_core::circuit::parse_circuit;
use cf_core::generators::{gen_random, GeneratorSpec};
use cf_core::passes::{binarize_mul, homogenize, normalize};
use cf_core::{Circuit, GateDegree, GateKind};
use num_bigint::BigUint;
use num_traits::One;

pub const EXAMPLE: &str = "\
input x 0
input y 1
input z 2
add s x y
add t z s
mul m s t
output m
";

pub fn example() -> Circuit {
    parse_circuit(EXAMPLE).unwrap()
}

/// Random circuit drawn from `seed` with `n` variables, at most `gates`
/// gates and degree at most `max_degree`.
pub fn random_circuit(
    seed: u64,
    n: u32,
    gates: usize,
    max_degree: u32,
    homogeneous: bool,
) -> Circuit {
    let spec = GeneratorSpec::random(n, gates, max_degree, seed).homogeneous(homogeneous);
    gen_random(&spec).unwrap_or_else(|e| panic!("seed {seed}: {e}"))
}

/// Parameters of the `i`-th circuit of a seeded suite.
pub fn suite_params(i: u64, max_n: u32, max_gates: usize) -> (u32, usize) {
    let n = 1 + (i % max_n as u64) as u32;
    let lo = n as usize + 2;
    let gates = lo + (i / max_n as u64) as usize % (max_gates - lo + 1);
    (n, gates)
}

/// Binarized, homogenized and normalized parts of `c`, one per degree, with
/// zero parts dropped.
pub fn normalized_parts(c: &Circuit) -> Vec<(u32, Circuit)> {
    let h = homogenize(&binarize_mul(c)).unwrap();
    h.split_outputs()
        .into_iter()
        .enumerate()
        .map(|(i, p)| (i as u32, normalize(&p).unwrap()))
        .filter(|(_, p)| !is_zero_constant(p))
        .collect()
}

pub fn is_zero_constant(c: &Circuit) -> bool {
    let root = c.outputs()[0];
    matches!(&c.gates()[root.0].kind, GateKind::Const(k) if k == &0.into())
}

/// Checks the four ×-balanced conditions gate by gate.
pub fn balance_violation(c: &Circuit) -> Option<String> {
    let deg = c.degrees();
    for (i, g) in c.gates().iter().enumerate() {
        match g.kind {
            GateKind::Mul => {
                if g.children.len() > 5 {
                    return Some(format!("g{i}: product fan-in {}", g.children.len()));
                }
                let GateDegree::Finite(d) = deg[i] else {
                    continue;
                };
                for ch in &g.children {
                    if let GateDegree::Finite(dc) = deg[ch.0] {
                        if 2 * dc > d {
                            return Some(format!("g{i}: child of degree {dc} under degree {d}"));
                        }
                    }
                }
            }
            GateKind::Scal if g.children.len() > 2 => {
                return Some(format!("g{i}: scalar fan-in {}", g.children.len()));
            }
            _ => {}
        }
    }
    None
}

/// `C(n, k)` by the multiplicative formula.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let mut r = BigUint::one();
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// `1 + C(σ+15a, 15a) + σ + σ·C(n+⌈d/a⌉, ⌈d/a⌉) + n`.
pub fn depth4_size_formula(sigma: u64, n: u64, d: u64, a: u64) -> BigUint {
    let top = 15 * a;
    let bottom = d.div_ceil(a);
    BigUint::one()
        + binomial(sigma + top, top)
        + sigma
        + BigUint::from(sigma) * binomial(n + bottom, bottom)
        + n
}
