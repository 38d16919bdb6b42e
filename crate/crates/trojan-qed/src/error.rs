use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its physical domain.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    /// Evaluation at the Coulomb singularity r = 0.
    #[error("Coulomb singularity: |r| = 0")]
    Singularity,

    /// κ = 1 (rotation exactly at the cavity frequency) admits only the
    /// trivial equilibrium; every resonant prefactor diverges.
    #[error("resonance κ = 1: no nontrivial equilibrium exists")]
    Resonance,

    /// Requested radius lies outside the selected branch.
    #[error("branch domain: {0}")]
    BranchDomain(String),

    /// Trajectory terminated before `t_end`.
    #[error("trajectory terminated at t = {t}: {reason}")]
    TrajectoryTerminated { t: f64, reason: String },

    /// Iterative solver failed to converge.
    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    /// The Gaussian state is not normalizable (Re A not positive definite).
    #[error("non-normalizable Gaussian: Re A is not positive definite")]
    NonNormalizable,

    /// Numerical linear algebra failure.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Malformed configuration input.
    #[error("config error: {0}")]
    Config(String),
}
