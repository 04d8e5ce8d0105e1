use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Numerical(#[from] burgers_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Process exit code: 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        use burgers_core::Error as E;
        match self {
            HarnessError::Numerical(E::InvalidParameter(_) | E::UnsupportedOrder { .. } | E::Domain(_)) => 2,
            HarnessError::Numerical(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

#[cfg(test)]
mod tests {
    use super::*;
    use burgers_core::Error as E;

    #[test]
    fn exit_code_classes() {
        assert_eq!(HarnessError::Config("x".into()).exit_code(), 2);
        assert_eq!(HarnessError::from(E::InvalidParameter("x".into())).exit_code(), 2);
        let nc = E::NotConverged {
            what: "x".into(),
            abs_error: 1.0,
            magnitude: 1.0,
        };
        assert_eq!(HarnessError::from(nc).exit_code(), 3);
        assert_eq!(HarnessError::from(E::Inconsistency("x".into())).exit_code(), 3);
    }
}
