use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("jets differ in {what}: {left} vs {right}")]
    Mismatch {
        what: &'static str,
        left: String,
        right: String,
    },

    #[error("pole at expansion point x0 = {x0}")]
    PoleAtExpansionPoint { x0: f64 },

    #[error("jet order exhausted: cannot differentiate an order-0 jet")]
    OrderExhausted,

    #[error("non-finite coefficients at iteration k = {k}")]
    Overflow { k: usize },

    #[error("wrong problem form: {0}")]
    WrongForm(&'static str),

    #[error("no root found: {reason}")]
    NoRoot { reason: String, sign_trace: String },

    #[error("delta vanishes at one point but not at x1 = {x1} (residual ratio {residual:e})")]
    NotExactlySolvable { x1: f64, residual: f64 },

    #[error("invalid bracket [{lo}, {hi}]: delta_k has the same sign at both ends")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("requested level n = {requested} but only {found} stabilized roots found; try a larger eps_max")]
    InsufficientBracket { requested: usize, found: usize },

    #[error("finite-difference eigenvalue not converged after {doublings} domain doublings (rho_max = {rho_max})")]
    TruncationFailure { doublings: usize, rho_max: f64 },
}
