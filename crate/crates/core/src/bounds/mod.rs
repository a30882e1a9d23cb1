//! Size predictions for the reduction and the monomial-counting lower-bound
//! calculus for ΣΠΣΠ circuits.

mod levels;
mod monomials;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use statrs::function::gamma::ln_gamma;

pub use levels::MonomialCalculus;
pub use levels::{
    check_lower_bound, homogeneous_bottom_fanin_bound, LevelProfile, LowerBoundReport, Target,
    TargetFamily,
};
pub use monomials::{closure_prod, closure_sum, DEFAULT_CLOSURE_BUDGET};

pub(crate) fn ser_decimal<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

pub fn ceil_div(a: u32, b: u32) -> u32 {
    a.div_ceil(b)
}

/// `C(n, k)`, zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// `l + l·log2(k/l)`, the exponent in `C(k+l, l) = 2^O(l + l·log(k/l))`.
pub fn stirling_bound(k: u64, l: u64) -> f64 {
    if l == 0 {
        return 0.0;
    }
    let (k, l) = (k as f64, l as f64);
    l + l * (k / l).log2()
}

/// `1 + C(σ+15a, 15a) + σ + σ·C(n+⌈d/a⌉, ⌈d/a⌉) + n`.
pub fn depth4_size_bound(sigma: usize, n: usize, d: u32, a: u32) -> BigUint {
    let top = 15 * a as u64;
    let bottom = ceil_div(d, a) as u64;
    let (sigma, n) = (sigma as u64, n as u64);
    BigUint::one()
        + binomial(sigma + top, top)
        + sigma
        + BigUint::from(sigma) * binomial(n + bottom, bottom)
        + n
}

/// Smallest `s >= 0` with `(s + 1)^v >= n!`, i.e. `⌈(n!)^(1/v) - 1⌉`.
pub fn min_level1_size(n: u64, v: u32) -> BigUint {
    assert!(v >= 1, "fan-in bound must be positive");
    let f = factorial(n);
    let mut r = f.nth_root(v);
    if r.pow(v) < f {
        r += 1u32;
    }
    r - 1u32
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<=")]
    Le,
}

/// An inequality between two exact integers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundCertificate {
    pub claim: String,
    pub relation: Relation,
    #[serde(serialize_with = "ser_decimal")]
    pub lhs: BigUint,
    #[serde(serialize_with = "ser_decimal")]
    pub rhs: BigUint,
    pub satisfied: bool,
}

impl BoundCertificate {
    pub fn ge(claim: impl Into<String>, lhs: BigUint, rhs: BigUint) -> Self {
        let satisfied = lhs >= rhs;
        BoundCertificate {
            claim: claim.into(),
            relation: Relation::Ge,
            lhs,
            rhs,
            satisfied,
        }
    }

    pub fn le(claim: impl Into<String>, lhs: BigUint, rhs: BigUint) -> Self {
        let satisfied = lhs <= rhs;
        BoundCertificate {
            claim: claim.into(),
            relation: Relation::Le,
            lhs,
            rhs,
            satisfied,
        }
    }
}

/// The least level-1 size of a ΣΠΣΠ circuit for `Perm_n` or `Det_n` whose
/// level-3 products have fan-in at most `v`. The certificate is witnessed by
/// the minimum itself.
pub fn lower_bound_level3(n: u64, v: u32) -> BoundCertificate {
    let m = min_level1_size(n, v);
    BoundCertificate::ge(format!("s1 >= (({n})!)^(1/{v}) - 1"), m.clone(), m)
}

/// `ln C(x + y, y)` for real `x, y >= 0`.
fn ln_binomial(x: f64, y: f64) -> f64 {
    // ln Γ(x + y + 1) - ln Γ(x + 1), accurate when x dwarfs y.
    let rising = if x < 1e6 {
        ln_gamma(x + y + 1.0) - ln_gamma(x + 1.0)
    } else {
        let z = x + 1.0;
        (z - 0.5) * (y / z).ln_1p() + y * (z + y).ln() - y + 1.0 / (12.0 * (z + y))
            - 1.0 / (12.0 * z)
    };
    rising - ln_gamma(y + 1.0)
}

/// `log2(Σ 2^x_i)`.
fn log2_sum(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp2()).sum::<f64>().log2()
}

/// Smallest integer at least `2^x`, up to the rounding of `x`.
fn ceil_exp2(x: f64) -> BigUint {
    if x < 52.0 {
        return BigUint::from(x.exp2().ceil() as u64);
    }
    let shift = x.floor() as u64 - 52;
    let mantissa = (x - shift as f64).exp2().ceil() as u64;
    BigUint::from(mantissa) << shift
}

/// Predicted size of the whole reduction for an input of size `s`, degree
/// `d` on `n` variables: `d + 1` times the depth-4 formula for a balanced
/// circuit of size `σ = t^6 + t^4 + 1`, `t = s(d+1)^2`, at the real split
/// parameter `a = √(d·log2 n / log2 σ)` clamped to `[1, max(1, d-1)]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizePrediction {
    pub s: u64,
    pub d: u64,
    pub n: u64,
    #[serde(serialize_with = "ser_decimal")]
    pub t: BigUint,
    #[serde(serialize_with = "ser_decimal")]
    pub sigma: BigUint,
    pub a: f64,
    pub log2_bound: f64,
    #[serde(serialize_with = "ser_decimal")]
    pub bound: BigUint,
}

pub fn predict_theorem1_size(s: u64, d: u64, n: u64) -> SizePrediction {
    let (s, d, n) = (s.max(1), d.max(1), n.max(1));
    let t = BigUint::from(s) * BigUint::from((d + 1) * (d + 1));
    let sigma = t.pow(6) + t.pow(4) + 1u32;
    let log2_sigma = big_log2(&sigma);
    let a_raw = (d as f64 * (n as f64).log2() / log2_sigma).sqrt();
    let a = a_raw.clamp(1.0, (d as f64 - 1.0).max(1.0));
    let ln2 = std::f64::consts::LN_2;
    let sig = sigma.to_f64().unwrap_or(f64::MAX);
    let top = 15.0 * a;
    let bottom = d as f64 / a;
    let terms = [
        0.0,
        ln_binomial(sig, top) / ln2,
        log2_sigma,
        log2_sigma + ln_binomial(n as f64, bottom) / ln2,
        (n as f64).log2(),
    ];
    let log2_bound = log2_sum(&terms) + ((d + 1) as f64).log2();
    SizePrediction {
        s,
        d,
        n,
        t,
        sigma,
        a,
        log2_bound,
        bound: ceil_exp2(log2_bound),
    }
}

impl SizePrediction {
    /// `measured <= bound`.
    pub fn certificate(&self, measured: usize) -> BoundCertificate {
        BoundCertificate::le(
            format!(
                "size <= predicted size for s = {}, d = {}, n = {}",
                self.s, self.d, self.n
            ),
            BigUint::from(measured),
            self.bound.clone(),
        )
    }
}

fn big_log2(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 64 {
        return v.to_f64().unwrap_or(0.0).log2();
    }
    let shift = bits - 64;
    (v >> shift).to_f64().unwrap_or(0.0).log2() + shift as f64
}
