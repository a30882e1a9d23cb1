//! Coefficient rings for circuit constants and polynomial coefficients.
//!
//! Circuits store their constants as integers; every other commutative
//! ring enters through [`Ring::from_integer`].

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

pub trait Ring: Clone + PartialEq + Eq + fmt::Debug + fmt::Display + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn from_integer(value: &BigInt) -> Self;

    fn is_one(&self) -> bool {
        *self == Self::one()
    }

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
}

impl Ring for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }

    fn one() -> Self {
        One::one()
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn add(&self, other: &Self) -> Self {
        self + other
    }

    fn mul(&self, other: &Self) -> Self {
        self * other
    }

    fn neg(&self) -> Self {
        -self
    }

    fn from_integer(value: &BigInt) -> Self {
        value.clone()
    }
}

/// Element of the prime field Z/PZ with a compile-time modulus below 2^63.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Fp<const P: u64>(u64);

/// The field modulo the Mersenne prime 2^61 - 1.
pub type Fp61 = Fp<{ (1u64 << 61) - 1 }>;

impl<const P: u64> Fp<P> {
    pub const MODULUS: u64 = P;

    pub fn new(value: u64) -> Self {
        Fp(value % P)
    }

    pub fn value(self) -> u64 {
        self.0
    }
}

impl<const P: u64> fmt::Debug for Fp<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.0, P)
    }
}

impl<const P: u64> fmt::Display for Fp<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<const P: u64> Ring for Fp<P> {
    fn zero() -> Self {
        Fp(0)
    }

    fn one() -> Self {
        Fp(1 % P)
    }

    fn is_zero(&self) -> bool {
        self.0 == 0
    }

    fn add(&self, other: &Self) -> Self {
        Fp(((self.0 as u128 + other.0 as u128) % P as u128) as u64)
    }

    fn mul(&self, other: &Self) -> Self {
        Fp(((self.0 as u128 * other.0 as u128) % P as u128) as u64)
    }

    fn neg(&self) -> Self {
        if self.0 == 0 {
            *self
        } else {
            Fp(P - self.0)
        }
    }

    fn from_integer(value: &BigInt) -> Self {
        let p = BigInt::from(P);
        let mut r = value % &p;
        if r.sign() == num_bigint::Sign::Minus {
            r += &p;
        }
        Fp(u64::try_from(r).expect("residue fits in u64"))
    }
}
