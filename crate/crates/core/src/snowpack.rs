//! Two-layer snowpack: surface energy exchange computed for a day and a
//! night period, heat-deficit bookkeeping, melt and refreeze, sublimation,
//! depth and density, and snow-covered area.
//!
//! Energy terms are in Langleys per half-day period, water in inches over
//! the HRU, temperatures in degF unless a name says otherwise.

use crate::basin::ModelConfig;
use crate::state::{HruState, ICE_HEAT_PER_INCH};

/// Heat that melts one inch of ice over a square centimetre column.
pub const LATENT_HEAT_PER_INCH: f64 = 203.2;
/// Black-body coefficient for a half-day period, Langleys per K^4.
pub const BLACK_BODY_COEF: f64 = 5.85e-8;
const ZERO_C_IN_K: f64 = 273.16;
const HALF_DAY_SECONDS: f64 = 43_200.0;
/// Thermal conductivity of snow is `0.0077 * density^2`, cal/(cm s degC).
const CONDUCTIVITY_COEF: f64 = 0.0077;
/// Heat capacity of liquid water per inch of depth and degC.
const WATER_HEAT_PER_INCH: f64 = 2.54;

pub fn f_to_c(t: f64) -> f64 {
    (t - 32.0) / 1.8
}

pub fn c_to_f(t: f64) -> f64 {
    32.0 + 1.8 * t
}

/// Black-body emission at `temp_c` for one half-day period.
pub fn black_body(temp_c: f64) -> f64 {
    BLACK_BODY_COEF * (temp_c + ZERO_C_IN_K).max(0.0).powi(4)
}

/// Snow parameters for one HRU and month.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnowParams {
    pub rad_trncf: f64,
    pub emis_noppt: f64,
    pub cecn_coef: f64,
    pub potet_sublim: f64,
    pub den_init: f64,
    pub den_max: f64,
    pub settle_const: f64,
    /// Winter cover density, used as the canopy longwave fraction.
    pub winter_cover: f64,
    /// SWE at and above which the HRU is fully snow covered.
    pub swe_threshold: f64,
    pub depletion_curve: [f64; 11],
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyTerms {
    pub albedo: f64,
    /// Net shortwave.
    pub shortwave: f64,
    /// Incoming longwave from air and canopy.
    pub longwave_in: f64,
    /// Black-body emission at air temperature.
    pub black_body: f64,
    /// Emission from the pack surface.
    pub pack_emission: f64,
    /// Convection and condensation.
    pub convection: f64,
    /// Heat conducted into (+) or out of (-) the pack when the surface
    /// balance is negative; zero otherwise.
    pub conduction: f64,
    /// Net surface balance.
    pub net: f64,
}

impl EnergyTerms {
    /// Heat delivered to the pack: the surface balance when positive,
    /// otherwise the conductive loss limited by the surface deficit.
    pub fn heat_to_pack(&self) -> f64 {
        if self.net >= 0.0 {
            self.net
        } else if self.conduction < 0.0 {
            -(self.conduction.abs().min(-self.net))
        } else {
            0.0
        }
    }
}

/// Inputs of one energy period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodConditions {
    pub air_temp: f64,
    pub swrad: f64,
    /// Precipitation on the day; wet days use the precipitation emissivity.
    pub precip: f64,
    pub pack_temp: f64,
    pub density: f64,
    pub days_since_snow: f64,
    pub melt_phase: bool,
}

/// Surface energy balance of a snow-covered HRU for one period.
pub fn surface_energy(c: &PeriodConditions, p: &SnowParams, cfg: &ModelConfig) -> EnergyTerms {
    let curve = if c.melt_phase {
        &cfg.albedo_melt
    } else {
        &cfg.albedo_accumulation
    };
    let albedo = curve.albedo(c.days_since_snow);
    let shortwave = (1.0 - albedo) * p.rad_trncf * c.swrad;

    let t_air = f_to_c(c.air_temp);
    let t_pack = f_to_c(c.pack_temp).min(0.0);
    let emissivity = if c.precip > 0.0 {
        cfg.precip_emissivity
    } else {
        p.emis_noppt
    };
    let ip = black_body(t_air);
    let cw = p.winter_cover;
    let longwave_in = cw * ip + (1.0 - cw) * emissivity * ip;
    let pack_emission = black_body(t_pack);
    let convection = p.cecn_coef * t_air;
    let net = longwave_in - pack_emission + convection + shortwave;

    let conduction = if net < 0.0 {
        conduction_flux(t_air, t_pack, c.density.max(p.den_init), cfg.ice_specific_heat)
    } else {
        0.0
    };
    EnergyTerms {
        albedo,
        shortwave,
        longwave_in,
        black_body: ip,
        pack_emission,
        convection,
        conduction,
        net,
    }
}

/// Heat conducted between surface and pack over a half-day period.
pub fn conduction_flux(t_air_c: f64, t_pack_c: f64, density: f64, ice_specific_heat: f64) -> f64 {
    let sigma = ice_specific_heat;
    let damping = (CONDUCTIVITY_COEF * density * density * HALF_DAY_SECONDS / (sigma * density)).sqrt();
    2.0 * (0.5 * sigma * damping) * (t_air_c - t_pack_c)
}

/// Outcome of applying one period's heat to the pack.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeltResult {
    /// Melt the heat could produce once the deficit is satisfied.
    pub potential: f64,
    /// Ice converted to liquid.
    pub melt: f64,
    /// Liquid leaving the pack above its holding capacity.
    pub outflow: f64,
    /// Liquid refrozen against the heat deficit.
    pub refrozen: f64,
}

/// Applies a period's net heat to the pack.
///
/// Positive heat first satisfies the heat deficit; the remainder melts ice
/// over the snow-covered fraction, and liquid above `free_water_fraction`
/// of the ice drains. Negative heat raises the deficit, at most to
/// `max_deficit`, and refreezes liquid water against it.
pub fn apply_energy(heat: f64, s: &mut HruState, free_water_fraction: f64, max_deficit: f64) -> MeltResult {
    let mut out = MeltResult::default();
    if s.swe <= 0.0 || heat == 0.0 {
        return out;
    }
    if heat > 0.0 {
        let used = s.heat_deficit.min(heat);
        s.heat_deficit -= used;
        let remaining = heat - used;
        if remaining > 0.0 {
            out.potential = remaining / LATENT_HEAT_PER_INCH * s.fsca;
            out.melt = out.potential.min(s.sice);
            s.sice -= out.melt;
            s.sliq += out.melt;
            out.outflow = drain(s, free_water_fraction);
        }
    } else {
        let target = (s.heat_deficit - heat).min(max_deficit.max(s.heat_deficit));
        s.heat_deficit = target;
        out.refrozen = refreeze(s);
    }
    s.swe = s.sice + s.sliq;
    out
}

/// Refreezes liquid water against the heat deficit.
fn refreeze(s: &mut HruState) -> f64 {
    let r = s.sliq.min(s.heat_deficit / LATENT_HEAT_PER_INCH);
    if r > 0.0 {
        s.sliq -= r;
        s.sice += r;
        s.heat_deficit = (s.heat_deficit - r * LATENT_HEAT_PER_INCH).max(0.0);
    }
    r
}

/// Drains liquid above the holding capacity; an ice-free pack drains fully.
fn drain(s: &mut HruState, free_water_fraction: f64) -> f64 {
    let capacity = if s.sice > 0.0 {
        free_water_fraction * s.sice
    } else {
        0.0
    };
    let excess = (s.sliq - capacity).max(0.0);
    s.sliq -= excess;
    excess
}

/// Sublimation from the pack. Returns the depth sublimated, taken from ice
/// first, and lowers a non-isothermal heat deficit by the cold content of
/// the removed snow.
pub fn sublimate(potential_et: f64, coef: f64, s: &mut HruState) -> f64 {
    if s.swe <= 0.0 {
        return 0.0;
    }
    let b = (coef * potential_et.max(0.0) * s.fsca).min(s.swe);
    if b <= 0.0 {
        return 0.0;
    }
    if s.heat_deficit > 0.0 {
        let pack_c = f_to_c(s.pack_temp).min(0.0);
        s.heat_deficit = (s.heat_deficit - pack_c.abs() * b * ICE_HEAT_PER_INCH).max(0.0);
    }
    let from_ice = b.min(s.sice);
    s.sice -= from_ice;
    s.sliq = (s.sliq - (b - from_ice)).max(0.0);
    s.swe = if b >= s.swe { 0.0 } else { s.sice + s.sliq };
    b
}

/// One-day explicit step of the settling equation. `swe` excludes the new
/// snow. Returns `(depth, density)`; density is zero for an empty pack.
pub fn depth_density_step(new_snow: f64, swe: f64, depth: f64, den_init: f64, den_max: f64, settle: f64) -> (f64, f64) {
    let delta = new_snow / den_init + settle * ((swe + new_snow) / den_max - depth);
    let depth = (depth + delta).max(0.0);
    let density = if depth > 0.0 { (swe + new_snow) / depth } else { 0.0 };
    (depth, density)
}

/// Fractional snow-covered area from the depletion curve.
pub fn snow_covered_area(swe: f64, swe_max_track: f64, swe_threshold: f64, curve: &[f64; 11]) -> f64 {
    if swe <= 0.0 {
        return 0.0;
    }
    if swe >= swe_threshold {
        return 1.0;
    }
    if swe_max_track <= 0.0 {
        return curve[10];
    }
    let x = (swe / swe_max_track).clamp(0.0, 1.0) * 10.0;
    let i = (x.floor() as usize).min(9);
    let frac = x - i as f64;
    (curve[i] + (curve[i + 1] - curve[i]) * frac).clamp(0.0, 1.0)
}

/// Forcing of a snowpack day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnowInputs {
    pub net_snow: f64,
    pub net_rain: f64,
    pub tmax: f64,
    pub tmin: f64,
    pub tavg: f64,
    pub swrad: f64,
    pub precip: f64,
    /// Potential ET still available after canopy losses.
    pub available_et: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SnowFluxes {
    /// Water leaving the pack.
    pub melt: f64,
    pub sublimation: f64,
    /// Rain retained in or passed through the pack.
    pub rain_absorbed: f64,
    /// Rain reaching the ground directly (no pack).
    pub rain_to_surface: f64,
    pub potential_melt: f64,
    pub day: EnergyTerms,
    pub night: EnergyTerms,
}

/// Advances one HRU's snowpack by a day.
pub fn snowpack_day(s: &mut HruState, input: &SnowInputs, p: &SnowParams, cfg: &ModelConfig) -> SnowFluxes {
    let mut out = SnowFluxes::default();
    let swe_start = s.swe;
    let density_start = if s.depth > 0.0 && s.swe > 0.0 {
        s.swe / s.depth
    } else {
        0.0
    };

    if input.net_snow > 0.0 {
        let t_snow = f_to_c(input.tavg).min(0.0);
        s.sice += input.net_snow;
        s.swe = s.sice + s.sliq;
        s.heat_deficit += input.net_snow * (-t_snow) * ICE_HEAT_PER_INCH;
        s.days_since_snow = 0.0;
    } else if s.swe > 0.0 {
        s.days_since_snow += 1.0;
    }

    if s.swe <= 0.0 {
        out.rain_to_surface = input.net_rain;
        reset_pack(s);
        return out;
    }

    if input.net_rain > 0.0 {
        let rain_heat = input.net_rain * f_to_c(input.tavg).max(0.0) * WATER_HEAT_PER_INCH;
        s.heat_deficit = (s.heat_deficit - rain_heat).max(0.0);
        s.sliq += input.net_rain;
        out.rain_absorbed = input.net_rain;
        refreeze(s);
        out.melt += drain(s, cfg.free_water_fraction);
        s.swe = s.sice + s.sliq;
    }
    update_pack_temp(s);
    s.swe_max_track = s.swe_max_track.max(s.swe);
    s.fsca = snow_covered_area(s.swe, s.swe_max_track, p.swe_threshold, &p.depletion_curve);

    let periods = [
        (0.5 * (input.tavg + input.tmax), true),
        (0.5 * (input.tavg + input.tmin), false),
    ];
    for (air_temp, is_day) in periods {
        if s.swe <= 0.0 {
            break;
        }
        let cond = PeriodConditions {
            air_temp,
            swrad: 0.5 * input.swrad,
            precip: input.precip,
            pack_temp: s.pack_temp,
            density: if s.depth > 0.0 { s.swe / s.depth } else { p.den_init },
            days_since_snow: s.days_since_snow,
            melt_phase: s.heat_deficit <= 0.0,
        };
        let terms = surface_energy(&cond, p, cfg);
        let max_deficit = ICE_HEAT_PER_INCH * s.swe * (-f_to_c(air_temp)).max(0.0);
        let m = apply_energy(terms.heat_to_pack(), s, cfg.free_water_fraction, max_deficit);
        out.potential_melt += m.potential;
        out.melt += m.outflow;
        update_pack_temp(s);
        if is_day {
            out.day = terms;
        } else {
            out.night = terms;
        }
    }

    out.sublimation = sublimate(input.available_et, p.potet_sublim, s);

    // Residual liquid in an ice-free pack leaves as melt.
    if s.sice <= 0.0 {
        out.melt += s.sliq;
        s.sliq = 0.0;
        s.sice = 0.0;
    }
    s.swe = s.sice + s.sliq;

    if s.swe <= 0.0 {
        reset_pack(s);
        return out;
    }

    let old_part = (s.swe - input.net_snow).max(0.0);
    let base_depth = if density_start > 0.0 && swe_start > 0.0 {
        old_part / density_start
    } else {
        0.0
    };
    let (depth, _) = depth_density_step(
        input.net_snow,
        old_part,
        base_depth,
        p.den_init,
        p.den_max,
        p.settle_const,
    );
    s.depth = depth.max(s.swe);
    s.density = s.swe / s.depth;
    update_pack_temp(s);
    s.swe_max_track = s.swe_max_track.max(s.swe);
    s.fsca = snow_covered_area(s.swe, s.swe_max_track, p.swe_threshold, &p.depletion_curve);
    out
}

fn update_pack_temp(s: &mut HruState) {
    s.pack_temp = if s.swe > 0.0 && s.heat_deficit > 0.0 {
        c_to_f(-s.heat_deficit / (ICE_HEAT_PER_INCH * s.swe)).max(-80.0)
    } else {
        32.0
    };
}

fn reset_pack(s: &mut HruState) {
    s.swe = 0.0;
    s.sice = 0.0;
    s.sliq = 0.0;
    s.depth = 0.0;
    s.density = 0.0;
    s.heat_deficit = 0.0;
    s.pack_temp = 32.0;
    s.fsca = 0.0;
    s.swe_max_track = 0.0;
    s.days_since_snow = 0.0;
}
