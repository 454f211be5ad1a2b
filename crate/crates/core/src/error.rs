use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Location of an offending field inside a network definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    Network,
    Branch(usize),
    Stack { branch: usize, stack: usize },
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // 1-based, as printed in every user-facing listing
        match self {
            Site::Network => write!(f, "network"),
            Site::Branch(b) => write!(f, "branch {}", b + 1),
            Site::Stack { branch, stack } => write!(f, "branch {} stack {}", branch + 1, stack + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub site: Site,
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: `{}` {}", self.site, self.field, self.message)
    }
}

/// Collected invariant violations for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct Issues(pub Vec<Issue>);

impl fmt::Display for Issues {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, issue) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shortfall {
    /// Demand below the all-lower-bound power.
    Low,
    /// Demand above the all-upper-bound power.
    High,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{quantity} must be non-negative, got {value}")]
    Domain { quantity: &'static str, value: f64 },

    #[error("invalid network: {0}")]
    Validation(Issues),

    #[error("Required power cannot be obtained: {p_req} W is outside [{p_min}, {p_max}] W")]
    Infeasible {
        p_req: f64,
        p_min: f64,
        p_max: f64,
        side: Shortfall,
    },

    /// A state that a correctly located segment cannot produce.
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error("config line {line}, column {column}: {message}")]
    Config {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("all polynomial coefficients are zero")]
    ZeroPolynomial,

    #[error("{0}")]
    Argument(String),
}

impl Error {
    pub(crate) fn inconsistent(msg: impl Into<String>) -> Self {
        Error::Inconsistent(msg.into())
    }
}
