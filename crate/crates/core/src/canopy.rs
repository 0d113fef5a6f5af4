//! Canopy interception of rain and snow.
//!
//! Canopy storage is a depth over the canopy-covered part of the HRU; all
//! other quantities here are depths over the whole HRU. With cover density
//! `d`, a day conserves `P = Pn + d * (dSint + evap)`.

/// Result of intercepting one day's precipitation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CanopyResult {
    /// Net precipitation reaching the ground.
    pub net: f64,
    /// Throughfall below the canopy, per unit canopy area.
    pub throughfall: f64,
    pub net_rain: f64,
    pub net_snow: f64,
    /// Canopy storage after interception.
    pub storage: f64,
}

/// Interception against one capacity. Returns `(throughfall, intercepted)`
/// per unit canopy area.
fn intercept_phase(precip: f64, capacity: f64, storage: f64) -> (f64, f64) {
    let available = (capacity - storage).max(0.0);
    if precip > available {
        (precip - available, available)
    } else {
        (0.0, precip)
    }
}

/// Intercepts rain and snow separately against their capacities, rain
/// first. `cover` is the seasonal cover density.
pub fn intercept(
    precip: f64,
    rain_fraction: f64,
    cover: f64,
    rain_capacity: f64,
    snow_capacity: f64,
    storage: f64,
) -> CanopyResult {
    let rain = precip * rain_fraction;
    let snow = precip - rain;
    if cover <= 0.0 {
        return CanopyResult {
            net: precip,
            throughfall: 0.0,
            net_rain: rain,
            net_snow: snow,
            storage,
        };
    }
    let (rain_through, rain_held) = intercept_phase(rain, rain_capacity, storage);
    let storage = storage + rain_held;
    let (snow_through, snow_held) = intercept_phase(snow, snow_capacity, storage);
    let storage = storage + snow_held;

    let net_rain = rain_through * cover + (1.0 - cover) * rain;
    let net_snow = snow_through * cover + (1.0 - cover) * snow;
    CanopyResult {
        net: net_rain + net_snow,
        throughfall: rain_through + snow_through,
        net_rain,
        net_snow,
        storage,
    }
}

/// Evaporation or sublimation of intercepted water at the free-water rate.
/// Returns `(depleted, new_storage)` per unit canopy area.
pub fn canopy_evaporate(storage: f64, potential: f64) -> (f64, f64) {
    let depleted = storage.min(potential.max(0.0)).max(0.0);
    (depleted, storage - depleted)
}
