use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no spinodal instability: alpha = {alpha} <= 0")]
    NoInstability { alpha: f64 },
    #[error("solver did not converge: {0}")]
    NoConvergence(String),
    #[error("double root is not pinched: {0}")]
    NotPinched(String),
    #[error("spatial root on the imaginary axis at ell = {ell}: Re nu = {re_nu:e}")]
    NeutralRoot { ell: i64, re_nu: f64 },
    #[error("orbit through the initial point is not closed: {0}")]
    NotClosed(String),
    #[error("initial point is the center equilibrium")]
    Degenerate,
    #[error("no equilibrium found: {0}")]
    NoSolution(String),
    #[error("eigenvalue counts change under refinement: {0}")]
    Unresolved(String),
    #[error("continuation step failed: {0}")]
    StepFailure(String),
    #[error("integration failed: {0}")]
    IntegrationFailure(String),
    #[error("trajectory blew up at xi = {xi}")]
    Blowup { xi: f64 },
    #[error("non-finite values in spectrum at t = {t}")]
    NonFinite { t: f64 },
    #[error("no front found")]
    NoFront,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("too few oscillations in window ({crossings} sign changes)")]
    TooFewOscillations { crossings: usize },
    #[error("config error at {field}: {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
