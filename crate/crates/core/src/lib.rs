//! Hopf-Cole evaluation of the viscous Burgers equation
//! `∂ₜf − ∂ₓ²f + f∂ₓf = 0` for slowly decaying initial data, together with
//! the long-time limit objects and an independent finite-difference solver.

pub mod error;
pub mod fd_oracle;
pub mod heat;
pub mod hopf_cole;
pub mod initial_data;
pub mod numeric;
pub mod par;
pub mod profiles;
pub mod quad_engine;
pub mod rescaled;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
