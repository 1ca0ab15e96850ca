//! Joint optimization of signaling bandwidth and pilot overhead for
//! pilot-assisted transmission over wideband block-fading channels.
//!
//! The library answers one question for a link with received power density
//! `Pr/N0`: how much bandwidth is worth using once the cost of estimating the
//! channel is paid for, and how many pilots should each coherence block carry.
//!
//! ```
//! use bandpilot::{solve_continuous, CoherenceBlock, FadingModel, PowerDensity};
//!
//! let pd = PowerDensity::from_db_hz(80.0).unwrap();
//! let cb = CoherenceBlock::new(5e-3, 10e6).unwrap();
//! let op = solve_continuous(pd, &cb, &FadingModel::Rayleigh).unwrap();
//! assert!(op.w_hz > 1e9);
//! ```

pub mod allocate;
pub mod baselines;
pub mod beamform;
pub mod error;
pub mod fading;
pub mod linkbudget;
mod quadrature;
pub mod report;
pub mod scenario;
pub mod siso;
pub mod sweep;
pub mod units;

pub use error::{Error, Result};
pub use fading::FadingModel;
pub use siso::{
    alpha_given_rho, closed_form_first_order, closed_form_refined, condition_residuals,
    discretize, effective_snr, exhaustive_search, rate, round_to_lattice, solve_continuous,
    solve_snr, ClosedForm, CoherenceBlock, CoherenceLength, EstimationQuality, OperatingPoint,
    PowerDensity, Residuals, SnrSolution, Warning,
};
