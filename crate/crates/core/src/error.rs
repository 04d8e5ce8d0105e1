use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported derivative order {requested} (maximum {max})")]
    UnsupportedOrder { requested: usize, max: usize },

    #[error("{0}")]
    Domain(String),

    #[error("{what} did not converge (abs error {abs_error:e}, magnitude {magnitude:e})")]
    NotConverged {
        what: String,
        abs_error: f64,
        magnitude: f64,
    },

    #[error("profile is discontinuous at z = {z}: left limit {left}, right limit {right}")]
    Discontinuity { z: f64, left: f64, right: f64 },

    #[error("no sign change of {what} on [{lo}, {hi}]")]
    NoSignChange { what: String, lo: f64, hi: f64 },

    #[error("internal consistency failure: {0}")]
    Inconsistency(String),

    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
