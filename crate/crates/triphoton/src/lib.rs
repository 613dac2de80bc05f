//! Open-system dynamics of a driven quantum dot in a three-mode nonlinear
//! cavity, used to prepare a three-photon state in the lowest mode.
//!
//! The model couples a two-level dot to a cavity mode at energy `omega0`
//! (Jaynes-Cummings exchange `g`), which feeds two cascaded parametric
//! down-conversion processes: `omega0 -> omega1 + omega2` with strength
//! `zeta` and `omega2 -> 2 omega1` with strength `xi`, where
//! `omega1 = omega0 / 3` and `omega2 = 2 omega0 / 3`. The dot is pumped
//! incoherently at rate `pump` and the `omega0` mode decays at rate `kappa`;
//! the density matrix follows the Lindblad equation
//!
//! ```text
//! d rho/dt = i[rho, H] + (pump/2) (2 s+ rho s- - {s- s+, rho})
//!                      + (kappa/2)(2 a0 rho a0+ - {a0+ a0, rho})
//! ```
//!
//! integrated with fixed-step classical RK4. Analysis tools reduce the state
//! to the `omega1` mode and compute photon statistics and Wigner functions
//! via displaced parity.
//!
//! Energies are in meV with hbar = 1, so times are in 1/meV; reported time
//! axes use the dimensionless product `t * kappa`.
//!
//! Capabilities are demonstrated one-per-file in `examples/`; the `triphoton`
//! binary wraps the same entry points (`evolve`, `wigner`, `validate`,
//! `converge`) for file-driven runs.

pub mod analysis;
pub mod config;
pub mod dynamics;
pub mod evolve;
pub mod fock;
pub mod linalg;
pub mod oracle;
pub mod output;
pub mod run;
mod sector;

pub use config::{Frame, InitialState, SimConfig};
pub use dynamics::{build_hamiltonian, build_liouvillian, charge_operator, ApplyScratch, Liouvillian};
pub use evolve::{evolve, initial_state, DensityMatrix, RecordSpec, Trajectory};
pub use fock::{BasisState, DotLevel, FockSpace, Ladder, Mode, SparseOp};

/// Crate-wide error type; variants map onto the CLI exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),
    #[error("validation: {0}")]
    Validation(String),
    #[error("numerical: {0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for this error: 1 validation failure,
    /// 2 configuration or I/O problem, 3 numerical abort.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 1,
            Error::Config(_) | Error::Io(_) => 2,
            Error::Numerical(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
