//! Instanton calculus for one-dimensional quantum mechanics with
//! non-equivalent vacua.
//!
//! The pipeline runs from the potential to the predicted low-lying
//! spectrum, and each stage has a brute-force check next to it:
//!
//! - [`potentials`]: triple-, double- and single-well potentials in closed form.
//! - [`instanton`]: kink profiles (closed form and by quadrature), action,
//!   zero mode and tail constants.
//! - [`fluctuations`]: Gelfand–Yaglom determinant ratios, the near-zero
//!   eigenvalue and the collective-coordinate factor.
//! - [`dilute_gas`]: multi-instanton sums, the instanton density and the
//!   energy triplet.
//! - [`spectral_oracle`]: finite-difference diagonalization used as ground
//!   truth.
//! - [`cli`]: the `instanton` command-line front end.
//!
//! Units: mass 1, `ħ = 1`; the triple well is `V = (ω²/2) x² (x² - 1)²`.

pub mod cli;
pub mod dilute_gas;
pub mod fluctuations;
pub mod instanton;
pub mod numerics;
pub mod potentials;
pub mod spectral_oracle;

pub use dilute_gas::{DiluteGasError, DiluteGasSpectrum};
pub use fluctuations::{DeterminantReport, FluctuationError, StabilityOperator};
pub use instanton::{InstantonError, InstantonProfile, Transform, ZeroMode};
pub use numerics::ScaledReal;
pub use potentials::{Family, PotentialError, PotentialModel, WellInfo};
pub use spectral_oracle::{ComparisonTable, GridSpec, OracleError, OracleSpectrum, Parity};

/// Any error raised by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Instanton(#[from] InstantonError),
    #[error(transparent)]
    Fluctuation(#[from] FluctuationError),
    #[error(transparent)]
    DiluteGas(#[from] DiluteGasError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}
