use std::fmt;

use thiserror::Error;

/// Which branch of the critical curve a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    /// The normally attracting branch (x > 0).
    Attracting,
    /// The normally repelling branch (x < 0).
    Repelling,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Attracting => f.write_str("attracting"),
            Side::Repelling => f.write_str("repelling"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("division by zero while evaluating at x = {x}")]
    DivisionByZero { x: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("height {s} outside the {side} branch range (0, {max}]")]
    BranchRange { s: f64, side: Side, max: f64 },

    #[error("singular integrand: p({x}) = 0 away from the contact point")]
    SingularIntegrand { x: f64 },

    #[error("quadrature did not reach tolerance after {subdivisions} subdivisions (error estimate {estimate:e})")]
    Accuracy { subdivisions: usize, estimate: f64 },

    #[error("argument {value} outside the admissible interval [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("system rejected: {0}")]
    Rejected(String),

    #[error("measure is not normalizable: {0}")]
    NotNormalizable(String),

    #[error("step size underflow at t = {t} (x = {x}, y = {y})")]
    Stiffness { t: f64, x: f64, y: f64 },

    #[error("shooting bracket [{lo}, {hi}] does not separate the two orbit classes")]
    Bracket { lo: f64, hi: f64 },

    #[error("orbit did not converge within {iterations} iterations (last step {last_step:e})")]
    NoConvergence { iterations: usize, last_step: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
