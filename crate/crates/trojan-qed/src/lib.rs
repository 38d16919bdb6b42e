//! Numerical model of a hydrogen Rydberg electron coupled to the two degenerate
//! TE₁₁ modes of a cylindrical microwave cavity.
//!
//! The crate covers the full chain from cavity geometry to observable
//! predictions:
//!
//! * [`cavity`] — mode constants and dimensionless couplings from geometry,
//! * [`dynamics`] — rotating-frame Hamiltonian, equilibria, branches, trajectories,
//! * [`stability`] — linearization, eigenfrequencies, stability maps,
//! * [`quantum`] — Gaussian fundamental state of the quadratic Hamiltonian,
//! * [`observables`] — second moments, uncertainty saturation, squeezing, Wigner slices.
//!
//! Everything downstream of [`cavity`] works in natural units (energy ħω,
//! length √(ħ/mω), momentum √(ħmω), time 1/ω).

pub mod bessel;
pub mod cavity;
pub mod dynamics;
pub mod error;
pub mod observables;
pub mod quantum;
pub mod stability;

pub use cavity::{CavityConfig, Constants, ModeConstants, UnitKind};
pub use dynamics::{Branch, Equilibrium, PhaseState, SystemParams, Trajectory};
pub use error::Error;
pub use observables::{CovarianceMatrix, MomentReport, WignerSlice};
pub use quantum::{AMatrix, QuadraticParams, SolveReport};
pub use stability::{LinearizedSystem, StabilityMap, StabilityVerdict};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
