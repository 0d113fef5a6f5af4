//! Basin geometry and the model configuration constants that are not
//! calibratable parameters.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::forcing::{DegreeDayCurve, SolarTable};
use crate::params::Registry;

/// Physical description of one HRU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HruGeometry {
    pub id: u32,
    /// Acres.
    pub area: f64,
    /// Feet above sea level.
    pub elevation: f64,
    /// Rise over run.
    pub slope: f64,
    /// Degrees north.
    pub latitude: f64,
    pub summer_cover: f64,
    pub winter_cover: f64,
    pub impervious_fraction: f64,
}

impl HruGeometry {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(CoreError::Config(format!("HRU {}: {what}", self.id)));
        if !(self.area > 0.0 && self.area.is_finite()) {
            return bad("area must be positive");
        }
        if !self.elevation.is_finite() {
            return bad("elevation must be finite");
        }
        if !(self.slope >= 0.0 && self.slope.is_finite()) {
            return bad("slope must be non-negative");
        }
        if !(-90.0..=90.0).contains(&self.latitude) {
            return bad("latitude outside [-90, 90]");
        }
        if !(0.0..=1.0).contains(&self.summer_cover) || !(0.0..=1.0).contains(&self.winter_cover) {
            return bad("cover density outside [0, 1]");
        }
        if !(0.0..=0.999).contains(&self.impervious_fraction) {
            return bad("impervious fraction outside [0, 0.999]");
        }
        Ok(())
    }
}

/// Calendar window treated as summer for cover density, interception
/// capacity and the radiation adjustment. Inclusive month/day bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeasonCalendar {
    pub summer_start: (u32, u32),
    pub summer_end: (u32, u32),
}

impl Default for SeasonCalendar {
    fn default() -> Self {
        SeasonCalendar {
            summer_start: (5, 1),
            summer_end: (9, 30),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Season {
    Summer,
    Winter,
}

impl SeasonCalendar {
    pub fn season(&self, date: chrono::NaiveDate) -> Season {
        use chrono::Datelike;
        let md = (date.month(), date.day());
        if md >= self.summer_start && md <= self.summer_end {
            Season::Summer
        } else {
            Season::Winter
        }
    }
}

/// Snow albedo decay with age: `min + (max - min) * exp(-decay * days)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlbedoCurve {
    pub max: f64,
    pub min: f64,
    pub decay: f64,
}

impl AlbedoCurve {
    pub fn albedo(&self, days_since_snow: f64) -> f64 {
        (self.min + (self.max - self.min) * (-self.decay * days_since_snow.max(0.0)).exp()).clamp(0.0, 1.0)
    }
}

/// Form of the exponent in the contributing-area equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunoffForm {
    /// `theta1 * (Ssz + 0.5 * Pn)`.
    Additive,
    /// `theta1 * Ssz * (0.5 * Pn)`, as sometimes printed.
    Product,
}

/// Fixed constants of the process equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub registry: Registry,
    pub season: SeasonCalendar,
    pub degree_day_curve: DegreeDayCurve,
    pub albedo_accumulation: AlbedoCurve,
    pub albedo_melt: AlbedoCurve,
    /// Liquid water the pack can hold, as a fraction of its ice.
    pub free_water_fraction: f64,
    /// Mass specific heat of ice, cal/g/degC.
    pub ice_specific_heat: f64,
    /// Air emissivity on days with precipitation.
    pub precip_emissivity: f64,
    /// Recharge zone capacity as a fraction of soil-zone capacity.
    pub recharge_fraction: f64,
    pub runoff_form: RunoffForm,
    /// Upper bound for storages without a parameter capacity, inches.
    pub storage_cap: f64,
    /// Clear-sky atmospheric transmissivity at sea level.
    pub clear_sky_transmissivity: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            registry: Registry::default(),
            season: SeasonCalendar::default(),
            degree_day_curve: DegreeDayCurve::default(),
            albedo_accumulation: AlbedoCurve {
                max: 0.9,
                min: 0.4,
                decay: 0.2,
            },
            albedo_melt: AlbedoCurve {
                max: 0.8,
                min: 0.35,
                decay: 0.3,
            },
            free_water_fraction: 0.05,
            ice_specific_heat: 0.5,
            precip_emissivity: 1.0,
            recharge_fraction: 0.4,
            runoff_form: RunoffForm::Additive,
            storage_cap: 1e4,
            clear_sky_transmissivity: 0.75,
        }
    }
}

/// A delineated basin: HRU geometry, the index temperature HRU and the
/// precomputed clear-sky radiation table.
#[derive(Debug, Clone)]
pub struct Basin {
    pub hrus: Vec<HruGeometry>,
    /// Position (not id) of the HRU holding the temperature station.
    pub index_hru: usize,
    pub solar: SolarTable,
}

impl Basin {
    pub fn new(hrus: Vec<HruGeometry>, index_hru: usize, config: &ModelConfig) -> Result<Self> {
        if hrus.is_empty() {
            return Err(CoreError::Config("basin has no HRUs".into()));
        }
        for h in &hrus {
            h.validate()?;
        }
        if index_hru >= hrus.len() {
            return Err(CoreError::Config(format!(
                "index HRU {index_hru} out of range for {} HRUs",
                hrus.len()
            )));
        }
        let solar = SolarTable::clear_sky(&hrus, config.clear_sky_transmissivity);
        Ok(Basin { hrus, index_hru, solar })
    }

    pub fn n_hru(&self) -> usize {
        self.hrus.len()
    }

    pub fn total_area(&self) -> f64 {
        self.hrus.iter().map(|h| h.area).sum()
    }

    pub fn hru_position(&self, id: u32) -> Option<usize> {
        self.hrus.iter().position(|h| h.id == id)
    }
}
