use thiserror::Error;

/// Errors raised anywhere in the analysis pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: expected one of [{}]", expected.join(", "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
    },

    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },

    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),

    #[error("duplicate parameter `{0}`")]
    DuplicateParameter(String),

    #[error("domain violation in `{subtree}` at (x={x}, t={t}): {reason}")]
    Domain {
        subtree: String,
        x: f64,
        t: f64,
        reason: &'static str,
    },

    #[error("quadrature on [{lo}, {hi}] did not reach tolerance after {subdivisions} subdivisions (error estimate {error:e})")]
    QuadratureDivergence {
        lo: f64,
        hi: f64,
        subdivisions: usize,
        error: f64,
    },

    #[error("integrand is not finite at s={0}")]
    NonFiniteIntegrand(f64),

    #[error("ODE step size underflow at t={0}")]
    StepUnderflow(f64),

    #[error("ODE right-hand side is not finite at t={0}")]
    NonFiniteRhs(f64),

    #[error("rank-deficient least-squares system (condition estimate {0:e})")]
    RankDeficient(f64),

    #[error("diffusion coefficient is not positive at x={x}, t={t} (a={value})")]
    NonPositiveDiffusion { x: f64, t: f64, value: f64 },

    #[error("singular point inside the working window: {0}")]
    Singular(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
