use thiserror::Error;

/// Errors raised by parameter validation and by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("{name} = {value} is outside its domain: {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("size guard: {0}")]
    TooLarge(String),

    #[error("bracket failure for {what}: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    Bracket {
        what: &'static str,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("no subcritical root: a + (n-a)psi(tp) - t stays positive on (0, t_c*]")]
    NoSubcriticalRoot,

    #[error("not supercritical: a = {a} <= a_c* = {a_c_star}")]
    NotSupercritical { a: f64, a_c_star: f64 },

    #[error("no fold: c = {c} <= c_r = {c_r}")]
    NoFold { c: f64, c_r: f64 },

    #[error("unknown vertex {vertex} (n = {n})")]
    UnknownVertex { vertex: usize, n: usize },

    #[error("edge {0}-{1} is already present")]
    DuplicateEdge(usize, usize),

    #[error("invalid state: {0}")]
    State(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Error {
    Error::Domain {
        name,
        value,
        expected,
    }
}
