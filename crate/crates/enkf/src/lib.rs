//! Ensemble Kalman filter for the snowcast model: perturbed forecasts,
//! stochastic analysis with perturbed observations, hard-bound clamping,
//! post-analysis inflation, and joint state-parameter estimation with
//! streamflow feedback.

pub mod analysis;
pub mod ensemble;
pub mod error;
pub mod layout;
pub mod noise;
pub mod observe;

pub use analysis::{enkf_update, inflate, kalman_gain, AnalysisReport, Localization, NoLocalization};
pub use ensemble::{clamp_member, param_init_sd, BoundsConfig, Ensemble, ForecastSummary, Member};
pub use error::{EnkfError, Result};
pub use layout::{Layout, Mode, Slot, GLOBAL_PARAMETER_FAMILIES, HRU_PARAMETER_FAMILIES};
pub use noise::{perturb_forcing, ErrorBasis, NoiseConfig};
pub use observe::{observe, ObsKind, Observation, ObservationBatch};
