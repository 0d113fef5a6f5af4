//! Experiment configuration file.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use snowcast_core::{Basin, HruGeometry, ModelConfig, ParameterSet};
use snowcast_enkf::NoiseConfig;

use crate::error::{io_err, HarnessError, Result};
use crate::synthetic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    OpenLoop,
    SweOnly,
    Joint,
}

impl RunMode {
    pub fn name(self) -> &'static str {
        match self {
            RunMode::OpenLoop => "open-loop",
            RunMode::SweOnly => "swe-only",
            RunMode::Joint => "joint",
        }
    }
}

/// Settings of the built-in synthetic basin and weather.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_hru: usize,
    /// Seed of the weather generator; independent of the experiment seed.
    pub climate_seed: u64,
    /// Lowest HRU, which holds the temperature station, ft.
    pub station_elevation: f64,
    /// Height of the highest HRU above the station, ft.
    pub elevation_span: f64,
    /// Annual mean station temperature, degF.
    pub temp_mean: f64,
    /// Half the winter-summer difference, degF.
    pub temp_amplitude: f64,
    /// Sd of the daily AR(1) temperature anomaly, degF.
    pub temp_anomaly_sd: f64,
    /// Wet-day probability: mean and winter-summer half difference.
    pub wet_mean: f64,
    pub wet_amplitude: f64,
    /// Gamma shape and scale (inches) of station wet-day precipitation.
    pub precip_shape: f64,
    pub precip_scale: f64,
    /// Fractional precipitation increase per 1000 ft.
    pub orographic: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_hru: 10,
            climate_seed: 2021,
            station_elevation: 4500.0,
            elevation_span: 4000.0,
            temp_mean: 40.0,
            temp_amplitude: 20.0,
            temp_anomaly_sd: 4.0,
            wet_mean: 0.25,
            wet_amplitude: 0.2,
            precip_shape: 0.8,
            precip_scale: 0.6,
            orographic: 0.08,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: RunMode,
    pub n_ensemble: usize,
    /// Seed of every random stream in the experiment. Overrides `noise.seed`.
    pub seed: u64,
    /// Water year ending on 30 September of this year.
    pub water_year: i32,
    /// Truncates the run to this many days (whole water year if absent).
    pub days: Option<usize>,
    /// Basin TOML; the synthetic basin when absent.
    pub basin: Option<PathBuf>,
    /// Parameter TOML (the truth set in a twin); synthetic when absent.
    pub parameters: Option<PathBuf>,
    /// Forcing CSV; synthetic weather when absent.
    pub forcing: Option<PathBuf>,
    /// `date,hru_id,swe` CSV for `assimilate`.
    pub swe_observations: Option<PathBuf>,
    /// `date,flow` CSV (cfs) for `assimilate`.
    pub flow_observations: Option<PathBuf>,
    pub output: PathBuf,
    /// Twin open-loop bias as a fraction of each augmented parameter's range.
    pub parameter_bias: f64,
    /// Adds subsurface and groundwater storage to the filter state.
    pub include_reservoirs: bool,
    pub synthetic: SyntheticConfig,
    pub noise: NoiseConfig,
    pub model: ModelConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: RunMode::Joint,
            n_ensemble: 100,
            seed: 42,
            water_year: 2021,
            days: None,
            basin: None,
            parameters: None,
            forcing: None,
            swe_observations: None,
            flow_observations: None,
            output: PathBuf::from("out"),
            parameter_bias: 0.2,
            include_reservoirs: false,
            synthetic: SyntheticConfig::default(),
            noise: NoiseConfig::default(),
            model: ModelConfig::default(),
        }
    }
}

/// Basin file layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasinFile {
    /// Position of the HRU holding the temperature station.
    #[serde(default)]
    pub index_hru: usize,
    pub hru: Vec<HruGeometry>,
}

impl ExperimentConfig {
    /// Reads a TOML file. Relative paths inside are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| HarnessError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.basin,
            &mut cfg.parameters,
            &mut cfg.forcing,
            &mut cfg.swe_observations,
            &mut cfg.flow_observations,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        cfg.noise.seed = cfg.seed;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.noise.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ensemble < 2 {
            return Err(HarnessError::Invalid(format!(
                "n_ensemble must be at least 2, got {}",
                self.n_ensemble
            )));
        }
        if !(-1.0..=1.0).contains(&self.parameter_bias) {
            return Err(HarnessError::Invalid(format!(
                "parameter_bias {} outside [-1, 1]",
                self.parameter_bias
            )));
        }
        if self.days == Some(0) {
            return Err(HarnessError::Invalid("days must be positive".into()));
        }
        if self.start_date().is_none() {
            return Err(HarnessError::Invalid(format!("invalid water year {}", self.water_year)));
        }
        self.noise.validate()?;
        for p in [
            &self.basin,
            &self.parameters,
            &self.forcing,
            &self.swe_observations,
            &self.flow_observations,
        ]
        .into_iter()
        .flatten()
        {
            if !p.exists() {
                return Err(HarnessError::Invalid(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// 1 October of the previous calendar year.
    pub fn start_date(&self) -> Option<NaiveDate> {
        NaiveDate::from_ymd_opt(self.water_year - 1, 10, 1)
    }

    /// Number of days in the run.
    pub fn n_days(&self) -> usize {
        let start = self.start_date().expect("validated water year");
        let end = NaiveDate::from_ymd_opt(self.water_year, 9, 30).expect("valid date");
        let full = (end - start).num_days() as usize + 1;
        self.days.map_or(full, |d| d.min(full))
    }

    pub fn load_basin(&self) -> Result<Basin> {
        let (hrus, index) = match &self.basin {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(io_err(path))?;
                let file: BasinFile = toml::from_str(&text).map_err(|e| HarnessError::Config {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
                (file.hru, file.index_hru)
            }
            None => (synthetic::basin_hrus(&self.synthetic), 0),
        };
        Ok(Basin::new(hrus, index, &self.model)?)
    }

    pub fn load_parameters(&self, basin: &Basin) -> Result<ParameterSet> {
        match &self.parameters {
            Some(path) => Ok(ParameterSet::load(path, basin.n_hru(), self.model.registry)?),
            None => Ok(synthetic::truth_parameters(basin, self.model.registry)),
        }
    }
}
