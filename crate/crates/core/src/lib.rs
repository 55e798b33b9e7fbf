//! Security analysis of continuous-variable QKD with noisy (thermal) state
//! preparation under collective entangling-cloner attacks.
//!
//! * [`gaussian`]: covariance matrices, symplectic spectra, entropies, conditioning.
//! * [`security`]: the channel model and direct/reverse-reconciliation key rates.
//! * [`simulation`]: Monte-Carlo prepare-and-measure runs and channel estimators.
//! * [`scanner`]: thresholds, optimal preparation noise, grids and loss curves.
//! * [`formats`]: CSV and JSON emission and parsing.
//! * [`cli`]: the `cvqkd` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod formats;
pub mod gaussian;
pub mod scanner;
pub mod security;
pub mod simulation;

pub use error::{Error, Result};
pub use gaussian::{
    beamsplitter, condition_on_heterodyne, entropy_g, epr_state, eve_epr_state, partial_state,
    symplectic_spectrum, von_neumann_entropy, CovarianceMatrix, PauliZBlock, SymplecticForm,
    SymplecticSpectrum,
};
pub use scanner::{
    optimal_preparation_noise, rate_vs_loss_curve, scan_grid, threshold_transmission, ContourGrid,
    CurvePoint, OptimalNoise, ThresholdResult,
};
pub use security::{
    eve_spectrum_analytic, holevo, joint_state_after_channel, key_rate, mutual_information, Direction,
    KeyRateBreakdown, ProtocolParams,
};
pub use simulation::{
    empirical_mutual_information, end_to_end_rate, estimate_excess_noise, estimate_transmission,
    simulate_run, ChannelMode, EstimationResult, QuadratureRecord, RunConfig, SimulatedRate,
};
