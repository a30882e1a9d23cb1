//! Arithmetic circuits and the constructive depth-reduction pipeline:
//! homogenization, multiplicative balancing and flattening to depth four,
//! with exact and randomized equivalence checks and a monomial-counting
//! lower-bound calculus.

pub mod bounds;
pub mod circuit;
pub mod error;
pub mod field;
pub mod generators;
pub mod passes;
pub mod poly;
pub mod ring;

pub use circuit::{Circuit, CircuitBuilder, Gate, GateDegree, GateId, GateKind};
pub use error::{Error, Result};
pub use poly::{Monomial, MonomialSet, SparsePolynomial};
