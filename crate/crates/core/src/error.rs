use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vector field is not timelike future-directed: g(u,u) = {norm}")]
    NonTimelikeU { norm: f64 },
    #[error("degenerate null direction: g(u, zeta) = {value}")]
    DegenerateDirection { value: f64 },
    #[error("averaged tangent is not timelike (g = {norm}); cone section under-resolved")]
    NonTimelikeResult { norm: f64 },
    #[error("input vector is not timelike: g = {norm}")]
    NonTimelikeInput { norm: f64 },
    #[error("invalid affine interval: tau_q = {tau_q}, tau_p = {tau_p}")]
    InvalidInterval { tau_q: f64, tau_p: f64 },
    #[error("node {index:?} lies inside the stencil margin")]
    MarginViolation { index: [usize; 3] },
    #[error("time step {dt} violates the CFL bound {bound}")]
    CflViolation { dt: f64, bound: f64 },
    #[error("blow-up at t = {t}: f = {value} left [{min}, {max}]")]
    BlowUp { t: f64, value: f64, min: f64, max: f64 },
    #[error("omega grid too coarse: derivative error estimate {estimate:e} exceeds budget {budget:e}")]
    GridTooCoarse { estimate: f64, budget: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid physical parameters: {0}")]
    InvalidParams(String),
    #[error("invalid field data: {0}")]
    InvalidField(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
