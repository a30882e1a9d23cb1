use num_bigint::BigUint;
use thiserror::Error;

use crate::circuit::{GateId, ValidationReport};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown gate id {0}")]
    UnknownGate(GateId),

    #[error("invalid circuit: {0}")]
    Invalid(ValidationReport),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{stage}: {message}")]
    Contract {
        stage: &'static str,
        message: String,
    },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("structural error: {0}")]
    Structure(String),

    #[error("term budget {budget} exceeded at gate {gate} ({terms} terms)")]
    TermBudget {
        gate: GateId,
        terms: usize,
        budget: usize,
    },

    #[error("parse-tree limit {limit} exceeded: the circuit has {count} parse trees")]
    EnumerationOverflow { limit: u64, count: BigUint },

    #[error("monomial closure exceeds budget {budget} (bound (|M_E|+1)^k = {bound})")]
    ClosureOverflow { budget: usize, bound: BigUint },

    #[error("variable x{0} has no value in the assignment")]
    MissingVariable(u32),

    #[error("random generation failed after {attempts} attempts: {reason}")]
    Generation { attempts: usize, reason: String },
}

impl Error {
    pub(crate) fn contract(stage: &'static str, message: impl Into<String>) -> Self {
        Error::Contract {
            stage,
            message: message.into(),
        }
    }
}
