//! Built-in synthetic basin, weather generator and parameter sets for
//! twin experiments.

use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use snowcast_core::{Basin, DailyForcing, HruGeometry, HruState, ModelConfig, Param, ParameterSet, Registry};
use snowcast_enkf::{GLOBAL_PARAMETER_FAMILIES, HRU_PARAMETER_FAMILIES};

use crate::config::SyntheticConfig;

fn frac(i: usize, n: usize) -> f64 {
    if n > 1 {
        i as f64 / (n - 1) as f64
    } else {
        0.0
    }
}

/// HRUs climbing evenly from the station elevation.
pub fn basin_hrus(cfg: &SyntheticConfig) -> Vec<HruGeometry> {
    let n = cfg.n_hru;
    (0..n)
        .map(|i| {
            let f = frac(i, n);
            HruGeometry {
                id: i as u32 + 1,
                area: 2000.0 + 4000.0 * ((i * 7) % 5) as f64 / 4.0,
                elevation: cfg.station_elevation + cfg.elevation_span * f,
                slope: 0.1 + 0.2 * f,
                latitude: 40.0,
                summer_cover: 0.7 - 0.4 * f,
                winter_cover: 0.5 - 0.3 * f,
                impervious_fraction: 0.03 - 0.02 * f,
            }
        })
        .collect()
}

/// Nominal parameters with smooth variation along the elevation gradient.
pub fn truth_parameters(basin: &Basin, registry: Registry) -> ParameterSet {
    let n = basin.n_hru();
    let mut p = ParameterSet::nominal(n, registry);
    let ramp = |lo: f64, hi: f64| -> Vec<f64> { (0..n).map(|i| lo + (hi - lo) * frac(i, n)).collect() };
    p.set(Param::SoilmoistMax, ramp(7.0, 4.0));
    p.set(Param::SmidxCoef, ramp(0.012, 0.006));
    p.set(Param::CareaMax, ramp(0.6, 0.4));
    p.set(Param::GwflowCoef, ramp(0.03, 0.06));
    p.set(Param::Soil2gwMax, ramp(0.15, 0.3));
    p.set(Param::GwsinkCoef, ramp(0.002, 0.006));
    p.set(Param::Ssr2gwRate, ramp(0.08, 0.12));
    p.set(Param::SsrcoefSq, ramp(0.06, 0.12));
    p.set(Param::SsrcoefLin, ramp(0.01, 0.03));
    p.set(Param::SnareaThresh, ramp(5.0, 20.0));
    p.fill(Param::TmaxAllsnow, 26.0);
    p.fill(Param::TmaxAllrain, 32.0);
    p.fill(Param::DdayIntcp, -30.0);
    p.fill(Param::JhCoef, 0.008);
    p
}

/// Shifts every entry of the joint-mode parameter families by `fraction`
/// of its range and clips to the range.
pub fn biased_parameters(truth: &ParameterSet, fraction: f64) -> ParameterSet {
    let mut p = truth.clone();
    for param in HRU_PARAMETER_FAMILIES.iter().chain(GLOBAL_PARAMETER_FAMILIES.iter()) {
        let spec = p.spec(*param);
        if let Some(values) = p.values_mut(*param) {
            for v in values.iter_mut() {
                *v = spec.clamp(*v + fraction * spec.range());
            }
        }
    }
    p
}

/// Early-autumn conditions: no snow, soils at a third of capacity, some
/// groundwater.
pub fn initial_states(params: &ParameterSet, cfg: &ModelConfig) -> Vec<HruState> {
    (0..params.n_hru())
        .map(|h| {
            let cap = params.get(Param::SoilmoistMax, h, 10);
            HruState {
                ssz: cap / 3.0,
                ssre: cfg.recharge_fraction * cap / 3.0,
                sss: 0.2,
                sgw: 2.0,
                ..HruState::default()
            }
        })
        .collect()
}

/// Daily station temperatures and HRU precipitation from a seasonal
/// Markov-chain weather generator. Winters are wet and cold, summers dry.
pub fn weather(basin: &Basin, start: NaiveDate, n_days: usize, cfg: &SyntheticConfig) -> Vec<DailyForcing> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.climate_seed);
    let amount = Gamma::new(cfg.precip_shape, cfg.precip_scale).expect("valid gamma");
    let station_elevation = basin.hrus[basin.index_hru].elevation;
    let mut wet = false;
    let mut anomaly = 0.0;
    let mut out = Vec::with_capacity(n_days);
    for d in 0..n_days {
        let date = start + chrono::Days::new(d as u64);
        let phase = 2.0 * PI * (date.ordinal() as f64 - 15.0) / 365.25;
        let winter = phase.cos();
        let p_wet = cfg.wet_mean + cfg.wet_amplitude * winter;
        let p = if wet { (p_wet + 0.3).min(0.9) } else { p_wet };
        wet = rng.random::<f64>() < p;
        anomaly = 0.7 * anomaly + cfg.temp_anomaly_sd * standard_normal(&mut rng);
        let tavg = cfg.temp_mean - cfg.temp_amplitude * winter + anomaly - if wet { 3.0 } else { 0.0 };
        let range = if wet { 12.0 } else { 22.0 };
        let station = if wet { amount.sample(&mut rng) } else { 0.0 };
        let precip = basin
            .hrus
            .iter()
            .map(|h| {
                let z = standard_normal(&mut rng);
                if station > 0.0 {
                    let orographic = 1.0 + cfg.orographic * (h.elevation - station_elevation) / 1000.0;
                    round4(station * orographic * (0.1 * z).exp())
                } else {
                    0.0
                }
            })
            .collect();
        out.push(DailyForcing {
            date,
            tmax: round4(tavg + range / 2.0),
            tmin: round4(tavg - range / 2.0),
            precip,
        });
    }
    out
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

// Keeps CSV round-trips exact and the files readable.
fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}
