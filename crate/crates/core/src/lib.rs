//! Steady states, spectra and sensitivity of driven, dissipatively coupled
//! two-mode systems with a Kerr anharmonicity on the driven mode.

pub mod config;
pub mod cubic;
pub mod dynamics;
pub mod error;
pub mod fluctuations;
pub mod linear;
pub mod nonlinear;
pub mod ode;
pub mod output;
pub mod params;
pub mod state;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use linear::{EigenPair, ModeMatrix, Phase, PhaseInfo};
pub use params::{DerivedDetunings, DriveConversion, SystemParams};
pub use state::SteadyState;
pub use sweep::{Grid, GridScale, SweepField};
pub use config::ExperimentConfig;
