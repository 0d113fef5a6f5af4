//! Noise settings, forcing perturbation and the random-number streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use snowcast_core::DailyForcing;

use crate::error::{EnkfError, Result};

/// Value the proportional observation-error rules are applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorBasis {
    /// The observed value itself.
    Observed,
    /// The forecast ensemble mean of the observed slot. Keeps low
    /// observations from being trusted more than high ones.
    Forecast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// Process noise sd as a fraction of the ensemble-mean state.
    pub process_fraction: f64,
    /// Precipitation sd as a fraction of precipitation.
    pub precip_fraction: f64,
    /// Sd of the common temperature shift, degC.
    pub temperature_sd_c: f64,
    pub swe_obs_fraction: f64,
    /// Inches.
    pub swe_obs_floor: f64,
    pub flow_obs_fraction: f64,
    /// cfs.
    pub flow_obs_floor: f64,
    /// Weight of the forecast anomalies after analysis.
    pub inflation: f64,
    /// Initial parameter sd as a fraction of the parameter range.
    pub param_init_fraction: f64,
    /// Re-inflation threshold as a fraction of the initial parameter sd.
    pub param_target_fraction: f64,
    pub obs_error_basis: ErrorBasis,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            process_fraction: 0.01,
            precip_fraction: 0.4,
            temperature_sd_c: 2.0,
            swe_obs_fraction: 0.1,
            swe_obs_floor: 0.01,
            flow_obs_fraction: 0.005,
            flow_obs_floor: 0.01,
            inflation: 0.9,
            param_init_fraction: 0.25,
            param_target_fraction: 0.25,
            obs_error_basis: ErrorBasis::Forecast,
            seed: 42,
        }
    }
}

impl NoiseConfig {
    /// No perturbation anywhere; members stay identical.
    pub fn zero(seed: u64) -> Self {
        NoiseConfig {
            process_fraction: 0.0,
            precip_fraction: 0.0,
            temperature_sd_c: 0.0,
            param_init_fraction: 0.0,
            param_target_fraction: 0.0,
            seed,
            ..NoiseConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fractions = [
            ("process_fraction", self.process_fraction),
            ("precip_fraction", self.precip_fraction),
            ("swe_obs_fraction", self.swe_obs_fraction),
            ("flow_obs_fraction", self.flow_obs_fraction),
            ("inflation", self.inflation),
            ("param_init_fraction", self.param_init_fraction),
            ("param_target_fraction", self.param_target_fraction),
        ];
        for (name, v) in fractions {
            if !(0.0..=1.0).contains(&v) {
                return Err(EnkfError::Config(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if !(self.temperature_sd_c >= 0.0) || !(self.swe_obs_floor > 0.0) || !(self.flow_obs_floor > 0.0) {
            return Err(EnkfError::Config(
                "temperature sd must be non-negative and observation floors positive".into(),
            ));
        }
        Ok(())
    }

    /// Temperature shift sd in degF.
    pub fn temperature_sd_f(&self) -> f64 {
        1.8 * self.temperature_sd_c
    }

    pub fn swe_sd(&self, swe: f64) -> f64 {
        (self.swe_obs_fraction * swe.abs()).max(self.swe_obs_floor)
    }

    pub fn flow_sd(&self, flow: f64) -> f64 {
        (self.flow_obs_fraction * flow.abs()).max(self.flow_obs_floor)
    }
}

/// Random stream of one ensemble member. Stream 0 is reserved for the
/// filter itself.
pub fn member_rng(seed: u64, member: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(member as u64 + 1);
    rng
}

pub fn filter_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// One member's forcing: precipitation drawn around each HRU's value and
/// floored at zero, and a common shift of both temperatures.
pub fn perturb_forcing<R: Rng + ?Sized>(forcing: &DailyForcing, noise: &NoiseConfig, rng: &mut R) -> DailyForcing {
    let precip = forcing
        .precip
        .iter()
        .map(|&p| {
            let z = normal(rng);
            (p + noise.precip_fraction * p * z).max(0.0)
        })
        .collect();
    let shift = noise.temperature_sd_f() * normal(rng);
    DailyForcing {
        date: forcing.date,
        tmax: forcing.tmax + shift,
        tmin: forcing.tmin + shift,
        precip,
    }
}

/// Mean computed relative to the first value, so identical inputs give
/// their common value exactly.
pub fn exact_mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut it = values.into_iter();
    let Some(first) = it.next() else {
        return 0.0;
    };
    let mut sum = 0.0;
    let mut n = 1usize;
    for v in it {
        sum += v - first;
        n += 1;
    }
    first + sum / n as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = exact_mean(values.iter().copied());
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}
