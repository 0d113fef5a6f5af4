//! Per-HRU prognostic state and the hard-bound clamp applied after every
//! filter analysis.

use serde::{Deserialize, Serialize};

use crate::params::{Param, ParameterSet};

/// Volumetric heat capacity of ice per inch of water equivalent and degree
/// Celsius (2.54 g/cm2 per inch times 0.5 cal/g/degC).
pub const ICE_HEAT_PER_INCH: f64 = 1.27;

/// Prognostic state of one HRU. Storages are depths in inches over the
/// HRU, except canopy storage (over the canopy-covered area) and impervious
/// storage (over the impervious area).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HruState {
    /// Canopy interception storage.
    pub sint: f64,
    /// Liquid water held in the snowpack.
    pub sliq: f64,
    /// Snowpack average density, g/cm3.
    pub density: f64,
    pub swe: f64,
    pub sice: f64,
    /// Snowpack depth.
    pub depth: f64,
    /// Heat needed to bring the pack to 0 degC, Langleys.
    pub heat_deficit: f64,
    /// Snowpack temperature, degF.
    pub pack_temp: f64,
    pub fsca: f64,
    pub simp: f64,
    /// Recharge (upper) part of the soil zone; included in `ssz`.
    pub ssre: f64,
    pub ssz: f64,
    pub sss: f64,
    pub sgw: f64,
    /// Seasonal maximum SWE used by the depletion curve.
    pub swe_max_track: f64,
    /// Days since the last snowfall, drives snow albedo decay.
    pub days_since_snow: f64,
}

impl Default for HruState {
    fn default() -> Self {
        HruState {
            sint: 0.0,
            sliq: 0.0,
            density: 0.0,
            swe: 0.0,
            sice: 0.0,
            depth: 0.0,
            heat_deficit: 0.0,
            pack_temp: 32.0,
            fsca: 0.0,
            simp: 0.0,
            ssre: 0.0,
            ssz: 0.0,
            sss: 0.0,
            sgw: 0.0,
            swe_max_track: 0.0,
            days_since_snow: 0.0,
        }
    }
}

/// Addressable state fields, used by the filter layout and snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateField {
    Sint,
    Sliq,
    Density,
    Swe,
    Sice,
    Depth,
    HeatDeficit,
    PackTemp,
    Fsca,
    Simp,
    Ssre,
    Ssz,
    Sss,
    Sgw,
    SweMaxTrack,
    DaysSinceSnow,
}

impl StateField {
    /// The twelve HRU states carried in the filter state vector.
    pub const HRU: [StateField; 12] = [
        StateField::Sint,
        StateField::Sliq,
        StateField::Density,
        StateField::Swe,
        StateField::Sice,
        StateField::Depth,
        StateField::HeatDeficit,
        StateField::PackTemp,
        StateField::Fsca,
        StateField::Simp,
        StateField::Ssre,
        StateField::Ssz,
    ];

    /// Subsurface and groundwater storages of the co-located reservoirs.
    pub const RESERVOIR: [StateField; 2] = [StateField::Sss, StateField::Sgw];

    pub const ALL: [StateField; 16] = [
        StateField::Sint,
        StateField::Sliq,
        StateField::Density,
        StateField::Swe,
        StateField::Sice,
        StateField::Depth,
        StateField::HeatDeficit,
        StateField::PackTemp,
        StateField::Fsca,
        StateField::Simp,
        StateField::Ssre,
        StateField::Ssz,
        StateField::Sss,
        StateField::Sgw,
        StateField::SweMaxTrack,
        StateField::DaysSinceSnow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StateField::Sint => "sint",
            StateField::Sliq => "sliq",
            StateField::Density => "density",
            StateField::Swe => "swe",
            StateField::Sice => "sice",
            StateField::Depth => "depth",
            StateField::HeatDeficit => "heat_deficit",
            StateField::PackTemp => "pack_temp",
            StateField::Fsca => "fsca",
            StateField::Simp => "simp",
            StateField::Ssre => "ssre",
            StateField::Ssz => "ssz",
            StateField::Sss => "sss",
            StateField::Sgw => "sgw",
            StateField::SweMaxTrack => "swe_max_track",
            StateField::DaysSinceSnow => "days_since_snow",
        }
    }

    pub fn from_name(name: &str) -> Option<StateField> {
        StateField::ALL.iter().copied().find(|f| f.name() == name)
    }
}

impl HruState {
    pub fn get(&self, field: StateField) -> f64 {
        match field {
            StateField::Sint => self.sint,
            StateField::Sliq => self.sliq,
            StateField::Density => self.density,
            StateField::Swe => self.swe,
            StateField::Sice => self.sice,
            StateField::Depth => self.depth,
            StateField::HeatDeficit => self.heat_deficit,
            StateField::PackTemp => self.pack_temp,
            StateField::Fsca => self.fsca,
            StateField::Simp => self.simp,
            StateField::Ssre => self.ssre,
            StateField::Ssz => self.ssz,
            StateField::Sss => self.sss,
            StateField::Sgw => self.sgw,
            StateField::SweMaxTrack => self.swe_max_track,
            StateField::DaysSinceSnow => self.days_since_snow,
        }
    }

    pub fn set(&mut self, field: StateField, value: f64) {
        let slot = match field {
            StateField::Sint => &mut self.sint,
            StateField::Sliq => &mut self.sliq,
            StateField::Density => &mut self.density,
            StateField::Swe => &mut self.swe,
            StateField::Sice => &mut self.sice,
            StateField::Depth => &mut self.depth,
            StateField::HeatDeficit => &mut self.heat_deficit,
            StateField::PackTemp => &mut self.pack_temp,
            StateField::Fsca => &mut self.fsca,
            StateField::Simp => &mut self.simp,
            StateField::Ssre => &mut self.ssre,
            StateField::Ssz => &mut self.ssz,
            StateField::Sss => &mut self.sss,
            StateField::Sgw => &mut self.sgw,
            StateField::SweMaxTrack => &mut self.swe_max_track,
            StateField::DaysSinceSnow => &mut self.days_since_snow,
        };
        *slot = value;
    }

    /// Finds the first non-finite field, if any.
    pub fn non_finite_field(&self) -> Option<StateField> {
        StateField::ALL.iter().copied().find(|f| !self.get(*f).is_finite())
    }
}

/// Hard bounds for one HRU's state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateBounds {
    pub soil_max: f64,
    pub recharge_max: f64,
    pub imperv_max: f64,
    /// Upper bound for every other storage, inches.
    pub storage_cap: f64,
    pub min_density: f64,
    pub max_density: f64,
    pub min_pack_temp: f64,
}

impl StateBounds {
    pub fn new(soil_max: f64, recharge_fraction: f64, imperv_max: f64, storage_cap: f64) -> Self {
        StateBounds {
            soil_max,
            recharge_max: recharge_fraction * soil_max,
            imperv_max,
            storage_cap,
            min_density: 0.01,
            max_density: 1.0,
            min_pack_temp: -80.0,
        }
    }

    /// Bounds for every HRU, taking capacities from the parameter set.
    pub fn from_parameters(params: &ParameterSet, recharge_fraction: f64, storage_cap: f64) -> Vec<StateBounds> {
        (0..params.n_hru())
            .map(|h| {
                StateBounds::new(
                    params.get(Param::SoilmoistMax, h, 1),
                    recharge_fraction,
                    params.get(Param::ImpervStorMax, h, 1),
                    storage_cap,
                )
            })
            .collect()
    }
}

/// Forces a state inside its bounds.
///
/// Values outside a range are set to the violated bound. The snowpack is
/// then made self-consistent: ice and liquid are rescaled to sum to SWE,
/// density is kept equal to SWE/depth within its range, and an empty pack
/// is cleared. Fields that already satisfy every constraint are returned
/// unchanged, so the function is idempotent.
pub fn clamp_state(s: &HruState, b: &StateBounds) -> HruState {
    let cap = b.storage_cap;
    let mut out = *s;
    out.sint = out.sint.clamp(0.0, cap);
    out.swe = out.swe.clamp(0.0, cap);
    out.sice = out.sice.clamp(0.0, cap);
    out.sliq = out.sliq.clamp(0.0, cap);
    out.depth = out.depth.clamp(0.0, cap);
    out.heat_deficit = out.heat_deficit.clamp(0.0, cap);
    out.pack_temp = out.pack_temp.clamp(b.min_pack_temp, 32.0);
    out.fsca = out.fsca.clamp(0.0, 1.0);
    out.simp = out.simp.clamp(0.0, b.imperv_max);
    out.ssz = out.ssz.clamp(0.0, b.soil_max);
    out.ssre = out.ssre.clamp(0.0, b.recharge_max.min(out.ssz));
    out.sss = out.sss.clamp(0.0, cap);
    out.sgw = out.sgw.clamp(0.0, cap);
    out.swe_max_track = out.swe_max_track.clamp(0.0, cap);
    out.days_since_snow = out.days_since_snow.max(0.0);

    if out.swe == 0.0 {
        out.sice = 0.0;
        out.sliq = 0.0;
        out.depth = 0.0;
        out.density = 0.0;
        out.heat_deficit = 0.0;
        out.pack_temp = 32.0;
        out.fsca = 0.0;
        return out;
    }

    let parts = out.sice + out.sliq;
    if parts <= 0.0 {
        out.sice = out.swe;
        out.sliq = 0.0;
    } else if (parts - out.swe).abs() > 1e-12 * out.swe.max(1.0) {
        out.sice = out.swe * (out.sice / parts);
        out.sliq = out.swe - out.sice;
    }

    if out.depth > 0.0 {
        let rho = out.swe / out.depth;
        if rho > b.max_density {
            out.depth = out.swe / b.max_density;
            out.density = out.swe / out.depth;
        } else if rho < b.min_density {
            out.depth = out.swe / b.min_density;
            out.density = out.swe / out.depth;
        } else {
            out.density = rho;
        }
    } else {
        let rho = if out.density > 0.0 {
            out.density.clamp(b.min_density, b.max_density)
        } else {
            b.max_density
        };
        out.depth = out.swe / rho;
        out.density = out.swe / out.depth;
    }
    if out.swe_max_track < out.swe {
        out.swe_max_track = out.swe;
    }
    out
}
