use std::path::PathBuf;

use thiserror::Error;

use crate::oracle::DiscreteMeasure;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("{op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// Field parameters that violate the field's admissibility conditions.
    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("{op}: no convergence (best estimate {estimate:e}, error bound {error_bound:e})")]
    NonConvergence {
        op: &'static str,
        estimate: f64,
        error_bound: f64,
    },

    /// Projected gradient hit its iteration cap; carries the last iterate.
    #[error("discrete_energy_minimize: no convergence after {} iterations (projected gradient norm {:e})", .0.iterations, .0.projected_gradient_norm)]
    EnergyNotConverged(Box<DiscreteMeasure>),

    /// Golden-section bracketing found three points with the middle one highest.
    #[error("minimize_ffunctional: objective is not unimodal near α = {at:?}")]
    NotUnimodal { at: [f64; 3] },

    #[error("{op}: singular linear system")]
    SingularSystem { op: &'static str },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}: {msg}", path.display())]
    Table { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            op,
            msg: msg.into(),
        }
    }

    /// True for failures of an iterative or adaptive numerical method, as
    /// opposed to invalid input.
    pub fn is_nonconvergence(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::EnergyNotConverged(_)
                | Error::NotUnimodal { .. }
                | Error::SingularSystem { .. }
        )
    }
}
