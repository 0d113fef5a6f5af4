//! The daily driver: advances every HRU through one day in a fixed process
//! order and aggregates the basin flow.

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::basin::{Basin, HruGeometry, ModelConfig, Season};
use crate::canopy::{canopy_evaporate, intercept};
use crate::error::{CoreError, Result};
use crate::forcing::{
    distribute_temperature, jensen_haise_et, partition_precipitation, shortwave_radiation, DailyForcing,
    RadiationCoefficients,
};
use crate::params::{Param, ParameterSet};
use crate::snowpack::{snowpack_day, SnowInputs, SnowParams};
use crate::soil::{
    basin_streamflow, contributing_area, groundwater_step, impervious_step, inches_per_day_to_cfs, pervious_runoff,
    soil_zone_step, subsurface_step, SoilParams, SubsurfaceParams,
};
use crate::state::HruState;

/// Per-HRU daily fluxes. Water fluxes are inches over the HRU; energy
/// terms are Langleys summed over the two half-day periods.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FluxRecord {
    pub tmax: f64,
    pub tmin: f64,
    pub swrad: f64,
    pub rain_fraction: f64,
    pub precip: f64,
    /// Net precipitation below the canopy.
    pub net_precip: f64,
    /// Throughfall per unit canopy area.
    pub throughfall: f64,
    /// Water leaving the snowpack.
    pub melt: f64,
    pub sublimation: f64,
    pub canopy_evap: f64,
    pub imperv_evap: f64,
    pub soil_et: f64,
    pub potential_et: f64,
    pub actual_et: f64,
    pub surface_runoff: f64,
    pub subsurface_flow: f64,
    pub subsurface_to_gw: f64,
    pub soil_to_gw: f64,
    pub groundwater_flow: f64,
    pub gw_sink: f64,
    pub energy_net: f64,
    pub longwave_in: f64,
    pub convection: f64,
    pub shortwave_net: f64,
    pub conduction: f64,
    pub black_body: f64,
    /// Precipitation minus storage change, outflows and ET.
    pub residual: f64,
}

impl FluxRecord {
    /// Flow leaving the HRU toward the basin outlet.
    pub fn total_flow(&self) -> f64 {
        self.surface_runoff + self.subsurface_flow + self.groundwater_flow
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyBasinOutput {
    pub date: NaiveDate,
    /// Area-weighted basin flow, inches/day.
    pub flow: f64,
    pub flow_cfs: f64,
    pub surface_runoff: f64,
    pub subsurface_flow: f64,
    pub groundwater_flow: f64,
    pub actual_et: f64,
    pub potential_et: f64,
    pub mean_swe: f64,
    /// Area-weighted water-balance residual, inches.
    pub residual: f64,
    /// Largest per-HRU residual magnitude.
    pub max_hru_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayResult {
    pub fluxes: Vec<FluxRecord>,
    pub basin: DailyBasinOutput,
}

/// Parameters in force for one HRU and month.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HruParams {
    pub tmax_lapse: f64,
    pub tmin_lapse: f64,
    pub tmax_adj: f64,
    pub tmin_adj: f64,
    pub radiation: RadiationCoefficients,
    pub all_snow: f64,
    pub all_rain: f64,
    pub adjmix: f64,
    pub summer_rain_intcp: f64,
    pub winter_rain_intcp: f64,
    pub snow_intcp: f64,
    pub jh_coef: f64,
    pub snow: SnowParams,
    pub imperv_max: f64,
    pub soil: SoilParams,
    pub smidx_coef: f64,
    pub smidx_exp: f64,
    pub carea_max: f64,
    pub subsurface: SubsurfaceParams,
    pub gwflow_coef: f64,
    pub gwsink_coef: f64,
}

impl HruParams {
    pub fn resolve(p: &ParameterSet, geometry: &HruGeometry, hru: usize, month: u32, cfg: &ModelConfig) -> Self {
        let g = |param| p.get(param, hru, month);
        let mut curve = [0.0; 11];
        for (i, c) in curve.iter_mut().enumerate() {
            *c = p.values(Param::SnareaCurve).expect("snarea_curve missing")[i];
        }
        let soil_max = g(Param::SoilmoistMax);
        HruParams {
            tmax_lapse: g(Param::TmaxLapse),
            tmin_lapse: g(Param::TminLapse),
            tmax_adj: g(Param::TmaxAdj),
            tmin_adj: g(Param::TminAdj),
            radiation: RadiationCoefficients {
                dday_slope: g(Param::DdaySlope),
                dday_intcp: g(Param::DdayIntcp),
                ppt_rad_adj: g(Param::PptRadAdj),
                radj_summer: g(Param::RadjSppt),
                radj_winter: g(Param::RadjWppt),
            },
            all_snow: g(Param::TmaxAllsnow),
            all_rain: g(Param::TmaxAllrain),
            adjmix: g(Param::AdjmixRain),
            summer_rain_intcp: g(Param::SrainIntcp),
            winter_rain_intcp: g(Param::WrainIntcp),
            snow_intcp: g(Param::SnowIntcp),
            jh_coef: g(Param::JhCoef),
            snow: SnowParams {
                rad_trncf: g(Param::RadTrncf),
                emis_noppt: g(Param::EmisNoppt),
                cecn_coef: g(Param::CecnCoef),
                potet_sublim: g(Param::PotetSublim),
                den_init: g(Param::DenInit),
                den_max: g(Param::DenMax),
                settle_const: g(Param::SettleConst),
                winter_cover: geometry.winter_cover,
                swe_threshold: g(Param::SnareaThresh),
                depletion_curve: curve,
            },
            imperv_max: g(Param::ImpervStorMax),
            soil: SoilParams {
                capacity: soil_max,
                recharge_capacity: cfg.recharge_fraction * soil_max,
                max_to_groundwater: g(Param::Soil2gwMax),
            },
            smidx_coef: g(Param::SmidxCoef),
            smidx_exp: g(Param::SmidxExp),
            carea_max: g(Param::CareaMax),
            subsurface: SubsurfaceParams {
                linear: g(Param::SsrcoefSq),
                quadratic: g(Param::SsrcoefLin),
                to_gw_rate: g(Param::Ssr2gwRate),
                to_gw_exp: g(Param::Ssr2gwExp),
                max_storage: g(Param::SsrmaxCoef),
            },
            gwflow_coef: g(Param::GwflowCoef),
            gwsink_coef: g(Param::GwsinkCoef),
        }
    }
}

fn cover(geometry: &HruGeometry, season: Season) -> f64 {
    match season {
        Season::Summer => geometry.summer_cover,
        Season::Winter => geometry.winter_cover,
    }
}

/// Water held by an HRU, inches over the HRU.
pub fn hru_water(s: &HruState, cover: f64, impervious_fraction: f64) -> f64 {
    cover * s.sint + s.swe + impervious_fraction * s.simp + (1.0 - impervious_fraction) * s.ssz + s.sss + s.sgw
}

/// Daily forcing reduced to the index station.
#[derive(Debug, Clone, Copy)]
struct Station {
    tmax: f64,
    tmin: f64,
    elevation: f64,
}

/// Advances one HRU by a day and returns its fluxes.
#[allow(clippy::too_many_arguments)]
fn hru_day(
    s: &mut HruState,
    g: &HruGeometry,
    p: &HruParams,
    station: Station,
    precip: f64,
    date: NaiveDate,
    potential_rad: f64,
    cfg: &ModelConfig,
) -> FluxRecord {
    let season = cfg.season.season(date);
    let yesterday = date.pred_opt().map_or(season, |d| cfg.season.season(d));
    let d_old = cover(g, yesterday);
    let d = cover(g, season);
    let fi = g.impervious_fraction;
    let before = hru_water(s, d_old, fi);

    // Keep canopy water volume across a change in cover density.
    let mut drip = 0.0;
    if d_old != d {
        if d > 0.0 {
            s.sint *= d_old / d;
        } else {
            drip = d_old * s.sint;
            s.sint = 0.0;
        }
    }

    let (tmax, tmin) = distribute_temperature(
        station.tmax,
        station.tmin,
        station.elevation,
        g.elevation,
        p.tmax_lapse,
        p.tmin_lapse,
        p.tmax_adj,
        p.tmin_adj,
    );
    let tavg = 0.5 * (tmax + tmin);
    let swrad = shortwave_radiation(
        tmax,
        precip,
        season,
        potential_rad,
        g.slope,
        &p.radiation,
        &cfg.degree_day_curve,
    );
    let rain_fraction = partition_precipitation(tmax, tmin, p.all_snow, p.all_rain, p.adjmix);

    let rain_cap = match season {
        Season::Summer => p.summer_rain_intcp,
        Season::Winter => p.winter_rain_intcp,
    };
    let c = intercept(precip, rain_fraction, d, rain_cap, p.snow_intcp, s.sint);
    let potential_et = jensen_haise_et(tavg, swrad, g.elevation, p.jh_coef);
    let (depleted, storage) = canopy_evaporate(c.storage, potential_et);
    s.sint = storage;
    let canopy_evap = d * depleted;
    let mut available = (potential_et - canopy_evap).max(0.0);

    let snow = snowpack_day(
        s,
        &SnowInputs {
            net_snow: c.net_snow,
            net_rain: c.net_rain + drip,
            tmax,
            tmin,
            tavg,
            swrad,
            precip,
            available_et: available,
        },
        &p.snow,
        cfg,
    );
    available = (available - snow.sublimation).max(0.0);

    let water = snow.rain_to_surface + snow.melt;
    let imp = impervious_step(water, available, s.fsca, s.simp, p.imperv_max, fi);
    if fi > 0.0 {
        s.simp = imp.storage;
    }
    let imperv_evap = fi * imp.evaporation;
    available = (available - imperv_evap).max(0.0);

    let ca = contributing_area(s.ssz, c.net, p.smidx_coef, p.smidx_exp, p.carea_max, cfg.runoff_form);
    let pervious_runoff = pervious_runoff(water, ca);
    let infiltration = water - pervious_runoff;
    let soil = soil_zone_step(infiltration, available * (1.0 - s.fsca), &p.soil, s.ssre, s.ssz);
    s.ssre = soil.recharge;
    s.ssz = soil.storage;
    let soil_et = (1.0 - fi) * soil.evapotranspiration;

    let ssr = subsurface_step(s.sss, (1.0 - fi) * soil.to_subsurface, &p.subsurface);
    s.sss = ssr.storage;
    let gw = groundwater_step(
        s.sgw,
        (1.0 - fi) * soil.to_groundwater + ssr.loss,
        p.gwflow_coef,
        p.gwsink_coef,
    );
    s.sgw = gw.storage;

    let surface_runoff = (1.0 - fi) * pervious_runoff + fi * imp.runoff;
    let actual_et = canopy_evap + snow.sublimation + imperv_evap + soil_et;
    let after = hru_water(s, d, fi);
    let residual = precip - (after - before) - surface_runoff - ssr.outflow - gw.outflow - gw.loss - actual_et;

    let day = &snow.day;
    let night = &snow.night;
    FluxRecord {
        tmax,
        tmin,
        swrad,
        rain_fraction,
        precip,
        net_precip: c.net,
        throughfall: c.throughfall,
        melt: snow.melt,
        sublimation: snow.sublimation,
        canopy_evap,
        imperv_evap,
        soil_et,
        potential_et,
        actual_et,
        surface_runoff,
        subsurface_flow: ssr.outflow,
        subsurface_to_gw: ssr.loss,
        soil_to_gw: (1.0 - fi) * soil.to_groundwater,
        groundwater_flow: gw.outflow,
        gw_sink: gw.loss,
        energy_net: day.net + night.net,
        longwave_in: day.longwave_in + night.longwave_in,
        convection: day.convection + night.convection,
        shortwave_net: day.shortwave + night.shortwave,
        conduction: day.conduction + night.conduction,
        black_body: day.black_body + night.black_body,
        residual,
    }
}

type FluxGetter = fn(&FluxRecord) -> f64;

const CHECKED_FLUXES: [(&str, FluxGetter); 8] = [
    ("swrad", |f| f.swrad),
    ("potential_et", |f| f.potential_et),
    ("melt", |f| f.melt),
    ("actual_et", |f| f.actual_et),
    ("surface_runoff", |f| f.surface_runoff),
    ("subsurface_flow", |f| f.subsurface_flow),
    ("groundwater_flow", |f| f.groundwater_flow),
    ("residual", |f| f.residual),
];

/// Advances all HRU states by one day.
///
/// States are updated in place. A non-finite state or flux aborts the step
/// with the HRU position and the offending field.
pub fn daily_step(
    basin: &Basin,
    states: &mut [HruState],
    forcing: &DailyForcing,
    params: &ParameterSet,
    cfg: &ModelConfig,
) -> Result<DayResult> {
    let n = basin.n_hru();
    if states.len() != n {
        return Err(CoreError::Config(format!("{} states for {n} HRUs", states.len())));
    }
    if params.n_hru() != n {
        return Err(CoreError::Config(format!(
            "parameters sized for {} HRUs, basin has {n}",
            params.n_hru()
        )));
    }
    forcing.validate(n)?;
    let date = forcing.date;
    let month = date.month();
    let doy = date.ordinal();
    let station = Station {
        tmax: forcing.tmax,
        tmin: forcing.tmin,
        elevation: basin.hrus[basin.index_hru].elevation,
    };

    if let Some((hru, field)) = states
        .iter()
        .enumerate()
        .find_map(|(h, s)| s.non_finite_field().map(|f| (h, f)))
    {
        return Err(CoreError::NonFinite {
            hru,
            field: field.name(),
            date,
        });
    }

    let mut fluxes = Vec::with_capacity(n);
    for (h, (s, g)) in states.iter_mut().zip(&basin.hrus).enumerate() {
        let p = HruParams::resolve(params, g, h, month, cfg);
        let f = hru_day(
            s,
            g,
            &p,
            station,
            forcing.precip[h],
            date,
            basin.solar.potential(doy, h),
            cfg,
        );
        if let Some(field) = s.non_finite_field() {
            return Err(CoreError::NonFinite {
                hru: h,
                field: field.name(),
                date,
            });
        }
        if let Some((field, _)) = CHECKED_FLUXES.iter().find(|(_, get)| !get(&f).is_finite()) {
            return Err(CoreError::NonFinite { hru: h, field, date });
        }
        fluxes.push(f);
    }

    let area = basin.total_area();
    let weighted = |get: fn(&FluxRecord) -> f64| -> f64 {
        basin
            .hrus
            .iter()
            .zip(&fluxes)
            .map(|(g, f)| g.area * get(f))
            .sum::<f64>()
            / area
    };
    let pairs: Vec<(f64, f64)> = basin
        .hrus
        .iter()
        .zip(&fluxes)
        .map(|(g, f)| (g.area, f.total_flow()))
        .collect();
    let flow = basin_streamflow(&pairs)?;
    let mean_swe = basin
        .hrus
        .iter()
        .zip(states.iter())
        .map(|(g, s)| g.area * s.swe)
        .sum::<f64>()
        / area;
    let basin_out = DailyBasinOutput {
        date,
        flow,
        flow_cfs: inches_per_day_to_cfs(flow, area),
        surface_runoff: weighted(|f| f.surface_runoff),
        subsurface_flow: weighted(|f| f.subsurface_flow),
        groundwater_flow: weighted(|f| f.groundwater_flow),
        actual_et: weighted(|f| f.actual_et),
        potential_et: weighted(|f| f.potential_et),
        mean_swe,
        residual: weighted(|f| f.residual),
        max_hru_residual: fluxes.iter().map(|f| f.residual.abs()).fold(0.0, f64::max),
    };
    Ok(DayResult {
        fluxes,
        basin: basin_out,
    })
}

/// Runs the model over a forcing sequence from the given initial states.
pub fn simulate(
    basin: &Basin,
    initial: &[HruState],
    forcing: &[DailyForcing],
    params: &ParameterSet,
    cfg: &ModelConfig,
) -> Result<Vec<DayResult>> {
    let mut states = initial.to_vec();
    forcing
        .iter()
        .map(|f| daily_step(basin, &mut states, f, params, cfg))
        .collect()
}
