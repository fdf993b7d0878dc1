use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside the admissible interval {interval}")]
    Range {
        name: &'static str,
        value: f64,
        interval: String,
    },
    #[error("tail truncation: half width L = {have} is too small, need L >= {required}")]
    TailTruncation { have: f64, required: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("degenerate quotient: dist^2 = {dist2:e} is below the manifold guard {guard:e}")]
    Degenerate { dist2: f64, guard: f64 },
    #[error("N = {0} requires a radial constant estimate to locate gamma0")]
    RequiresRadialConstant(usize),
    #[error("exponents must sum to 2* = {expected}, got {got}")]
    ExponentSum { expected: f64, got: f64 },
    #[error("field has nonzero sectors of degree >= 1; a radial field is required")]
    NonRadial,
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("overlap underflow at s = {s}: Q = {q:e}")]
    Underflow { s: f64, q: f64 },
    #[error("descent collapsed onto the extremal manifold after {0} restarts")]
    Collapsed(usize),
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
