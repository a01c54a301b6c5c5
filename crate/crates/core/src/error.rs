use thiserror::Error;

/// Errors raised across the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite Hamiltonian value at x={x}, p={p}")]
    Evaluation { x: f64, p: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("minimizer of p -> G({x}, p) sits on the search bound ±{bound}; enlarge p_search_bound")]
    Coercivity { x: f64, bound: f64 },

    #[error("empty sublevel at x={x}: level {level} is below min_p = {min_value}")]
    EmptySublevel { x: f64, level: f64, min_value: f64 },

    #[error("no level below {cap} brackets theta={theta}")]
    UnboundedSearch { theta: f64, cap: f64 },

    #[error(
        "ambiguous case: c_f(H)={c_f_h}, c(H)={c_h}, c_f(G)={c_f_g}, c(G)={c_g}, \
         P+={p_plus}, P-={p_minus}"
    )]
    Classification {
        c_f_h: f64,
        c_h: f64,
        c_f_g: f64,
        c_g: f64,
        p_plus: f64,
        p_minus: f64,
    },

    #[error("condition (U) cannot be verified for this Hamiltonian (mean momenta {p_minus}, {p_plus}, not Tonelli)")]
    ConditionUUnverifiable { p_minus: f64, p_plus: f64 },

    #[error("operation requires case {expected}, classified as {found}")]
    Case { expected: String, found: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("fixed-point iteration stopped after {iterations} sweeps with residual {residual:e}")]
    Convergence { iterations: usize, residual: f64 },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
