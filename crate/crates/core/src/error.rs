//! Crate-wide error type.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    Domain(String),
    /// Newton inversion of the conformal map failed to converge.
    DomainInversion(String),
    /// Invalid or degenerate mesh.
    Mesh(String),
    /// Evaluation at (or too close to) a boundary vortex.
    Singularity(String),
    /// Phase sampling too coarse to unwrap reliably.
    Undersampled(String),
    /// Renormalized-energy routines require multiplicities +-1.
    UnsupportedMultiplicity(String),
    /// A quadrature or extrapolation failed its convergence check.
    Accuracy(String),
    /// Boundary trace too short for phase-based vortex detection.
    NearVanishingTrace(String),
    /// Vortex detection left unpaired residual phase.
    DetectionFailure(String),
    /// The reduced bulk term is +infinity for |m| > 1.
    InfiniteEnergy(String),
    /// Wrong number of samples/arguments.
    Arity(String),
    /// Invalid configuration of vortices, regime parameters or options.
    Config(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::DomainInversion(m) => write!(f, "domain inversion error: {m}"),
            Error::Mesh(m) => write!(f, "mesh error: {m}"),
            Error::Singularity(m) => write!(f, "singularity error: {m}"),
            Error::Undersampled(m) => write!(f, "undersampling error: {m}"),
            Error::UnsupportedMultiplicity(m) => write!(f, "unsupported multiplicity: {m}"),
            Error::Accuracy(m) => write!(f, "accuracy error: {m}"),
            Error::NearVanishingTrace(m) => write!(f, "near-vanishing trace: {m}"),
            Error::DetectionFailure(m) => write!(f, "detection failure: {m}"),
            Error::InfiniteEnergy(m) => write!(f, "infinite energy: {m}"),
            Error::Arity(m) => write!(f, "arity error: {m}"),
            Error::Config(m) => write!(f, "config error: {m}"),
        }
    }
}

impl std::error::Error for Error {}
