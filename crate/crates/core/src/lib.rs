//! HRU-distributed daily precipitation-runoff model with an energy-balance
//! snowpack.
//!
//! Units follow the model's native system: inches of water, degrees
//! Fahrenheit for air temperature, Langleys for energy.

pub mod basin;
pub mod canopy;
pub mod error;
pub mod forcing;
pub mod model;
pub mod params;
pub mod snapshot;
pub mod snowpack;
pub mod soil;
pub mod state;

pub use basin::{Basin, HruGeometry, ModelConfig, RunoffForm, Season, SeasonCalendar};
pub use error::{CoreError, Result};
pub use forcing::DailyForcing;
pub use model::{daily_step, simulate, DailyBasinOutput, DayResult, FluxRecord};
pub use params::{validate_parameters, Cadence, Param, ParameterSet, Registry, Scope, Violation};
pub use snapshot::Snapshot;
pub use state::{clamp_state, HruState, StateBounds, StateField};
