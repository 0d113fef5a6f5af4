//! Impervious store, soil zone, surface runoff, subsurface and groundwater
//! reservoirs, and the basin flow aggregate.
//!
//! Impervious storage is a depth over the impervious area and soil-zone
//! storage a depth over the pervious area. The subsurface and groundwater
//! reservoirs are co-located with their HRU, so their storages and flows
//! are depths over the whole HRU.

use crate::basin::RunoffForm;
use crate::error::{CoreError, Result};

/// One acre-inch per day in cubic feet per second.
pub const ACRE_INCH_PER_DAY_CFS: f64 = 43_560.0 / 12.0 / 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImperviousResult {
    pub runoff: f64,
    pub evaporation: f64,
    pub storage: f64,
}

/// Impervious-area water balance: `storage + water = storage' + runoff +
/// evaporation`, all per unit impervious area. Evaporation is limited to
/// the snow-free part of the available ET and to the water stored.
pub fn impervious_step(
    water: f64,
    available_et: f64,
    fsca: f64,
    storage: f64,
    capacity: f64,
    impervious_fraction: f64,
) -> ImperviousResult {
    if impervious_fraction <= 0.0 {
        return ImperviousResult::default();
    }
    let filled = storage + water;
    let runoff = (filled - capacity).max(0.0);
    let held = filled - runoff;
    let evaporation = held.min(available_et.max(0.0) * (1.0 - fsca)).max(0.0);
    ImperviousResult {
        runoff,
        evaporation,
        storage: held - evaporation,
    }
}

/// Contributing-area fraction of the pervious area.
pub fn contributing_area(
    soil_moisture: f64,
    net_precip: f64,
    coef: f64,
    exponent: f64,
    max_area: f64,
    form: RunoffForm,
) -> f64 {
    let index = match form {
        RunoffForm::Additive => soil_moisture + 0.5 * net_precip,
        RunoffForm::Product => soil_moisture * (0.5 * net_precip),
    };
    (coef * 10f64.powf(exponent * index)).min(max_area).max(0.0)
}

/// Surface runoff from the pervious area, per unit pervious area. `water`
/// is rain reaching the ground plus snowmelt.
pub fn pervious_runoff(water: f64, contributing: f64) -> f64 {
    contributing * water.max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoilParams {
    pub capacity: f64,
    pub recharge_capacity: f64,
    pub max_to_groundwater: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SoilResult {
    pub to_groundwater: f64,
    pub to_subsurface: f64,
    pub evapotranspiration: f64,
    pub recharge: f64,
    pub storage: f64,
}

/// Soil-zone accounting per unit pervious area. Infiltration fills the
/// recharge zone and the soil zone; the overflow goes to groundwater up to
/// its daily maximum and the rest to the subsurface reservoir. ET then
/// draws on the recharge zone first and the lower zone second.
pub fn soil_zone_step(infiltration: f64, available_et: f64, p: &SoilParams, recharge: f64, storage: f64) -> SoilResult {
    let infiltration = infiltration.max(0.0);
    let mut ssz = storage + infiltration;
    let mut ssre = (recharge + infiltration).min(p.recharge_capacity);
    let excess = (ssz - p.capacity).max(0.0);
    ssz -= excess;
    ssre = ssre.min(ssz);
    let to_groundwater = excess.min(p.max_to_groundwater.max(0.0));
    let to_subsurface = excess - to_groundwater;

    let demand = available_et.max(0.0);
    let from_recharge = ssre.min(demand);
    ssre -= from_recharge;
    let from_lower = (ssz - from_recharge - ssre).max(0.0).min(demand - from_recharge);
    let et = from_recharge + from_lower;
    ssz = (ssz - et).max(0.0);
    SoilResult {
        to_groundwater,
        to_subsurface,
        evapotranspiration: et,
        recharge: ssre.min(ssz),
        storage: ssz,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsurfaceParams {
    pub linear: f64,
    pub quadratic: f64,
    pub to_gw_rate: f64,
    pub to_gw_exp: f64,
    pub max_storage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReservoirResult {
    pub outflow: f64,
    /// Subsurface: flow to groundwater. Groundwater: flow to the sink.
    pub loss: f64,
    pub storage: f64,
}

/// Subsurface reservoir, evaluated explicitly on the storage after inflow.
pub fn subsurface_step(storage: f64, inflow: f64, p: &SubsurfaceParams) -> ReservoirResult {
    let s = storage + inflow.max(0.0);
    if s <= 0.0 {
        return ReservoirResult::default();
    }
    let outflow = (p.linear * s + p.quadratic * s * s).clamp(0.0, s);
    let left = s - outflow;
    let loss = if p.max_storage > 0.0 {
        (p.to_gw_rate * (s / p.max_storage).powf(p.to_gw_exp)).clamp(0.0, left)
    } else {
        0.0
    };
    ReservoirResult {
        outflow,
        loss,
        storage: left - loss,
    }
}

/// Linear groundwater reservoir with a sink; both drains act on the
/// storage after inflow and are scaled down together if they would
/// overdraw it.
pub fn groundwater_step(storage: f64, inflow: f64, flow_coef: f64, sink_coef: f64) -> ReservoirResult {
    let s = storage + inflow.max(0.0);
    let mut outflow = flow_coef * s;
    let mut loss = sink_coef * s;
    let total = outflow + loss;
    if total > s && total > 0.0 {
        outflow *= s / total;
        loss = s - outflow;
    }
    ReservoirResult {
        outflow,
        loss,
        storage: (s - outflow - loss).max(0.0),
    }
}

/// Area-weighted basin flow in inches per day from per-HRU
/// `(area, surface + subsurface + groundwater)` pairs.
pub fn basin_streamflow(flows: &[(f64, f64)]) -> Result<f64> {
    let area: f64 = flows.iter().map(|(a, _)| a).sum();
    if !(area > 0.0) {
        return Err(CoreError::Config("basin has zero total area".into()));
    }
    Ok(flows.iter().map(|(a, f)| a * f).sum::<f64>() / area)
}

/// Converts a basin-average depth rate to cubic feet per second.
pub fn inches_per_day_to_cfs(depth: f64, area_acres: f64) -> f64 {
    depth * area_acres * ACRE_INCH_PER_DAY_CFS
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn impervious_examples() {
        assert_eq!(
            impervious_step(0.3, 0.2, 0.0, 0.0, 0.1, 0.0),
            ImperviousResult::default()
        );
        let full = impervious_step(0.2, 0.0, 0.0, 0.1, 0.1, 0.2);
        assert_relative_eq!(full.runoff, 0.2, max_relative = 1e-12);
        let r = impervious_step(0.05, 0.0, 0.0, 0.02, 0.1, 0.3);
        assert_relative_eq!(r.storage, 0.07, max_relative = 1e-12);
        assert_eq!(r.runoff, 0.0);
    }

    #[test]
    fn snow_cover_blocks_impervious_evaporation() {
        let r = impervious_step(0.0, 0.2, 1.0, 0.05, 0.1, 0.3);
        assert_eq!(r.evaporation, 0.0);
        let r = impervious_step(0.0, 0.2, 0.5, 0.05, 0.1, 0.3);
        assert_relative_eq!(r.evaporation, 0.05);
    }

    #[test]
    fn contributing_area_examples() {
        let ca = contributing_area(3.0, 2.0, 0.01, 0.3, 1.0, RunoffForm::Additive);
        assert_relative_eq!(ca, 0.01 * 10f64.powf(1.2), max_relative = 1e-12);
        assert_relative_eq!(ca, 0.1585, max_relative = 1e-3);
        assert_eq!(contributing_area(30.0, 2.0, 0.05, 0.5, 0.3, RunoffForm::Additive), 0.3);
        assert_eq!(pervious_runoff(0.0, ca), 0.0);
        // the product form ignores soil moisture on dry days
        assert_eq!(contributing_area(9.0, 0.0, 0.01, 0.3, 1.0, RunoffForm::Product), 0.01);
    }

    fn soil() -> SoilParams {
        SoilParams {
            capacity: 5.0,
            recharge_capacity: 2.0,
            max_to_groundwater: 0.25,
        }
    }

    #[test]
    fn soil_overflow_split() {
        let r = soil_zone_step(0.4, 0.0, &soil(), 2.0, 5.0);
        assert_relative_eq!(r.to_groundwater, 0.25, max_relative = 1e-12);
        assert_relative_eq!(r.to_subsurface, 0.15, max_relative = 1e-12);
        assert_eq!(r.storage, 5.0);
    }

    #[test]
    fn soil_identity_on_quiet_day() {
        let r = soil_zone_step(0.0, 0.0, &soil(), 1.0, 3.0);
        assert_eq!((r.recharge, r.storage), (1.0, 3.0));
        assert_eq!(r.evapotranspiration, 0.0);
    }

    #[test]
    fn soil_et_capped_at_storage() {
        let r = soil_zone_step(0.0, 10.0, &soil(), 1.0, 3.0);
        assert_eq!(r.evapotranspiration, 3.0);
        assert_eq!(r.storage, 0.0);
        assert_eq!(r.recharge, 0.0);
    }

    #[test]
    fn soil_et_draws_recharge_zone_first() {
        let r = soil_zone_step(0.0, 0.5, &soil(), 1.0, 3.0);
        assert_relative_eq!(r.recharge, 0.5);
        assert_relative_eq!(r.storage, 2.5);
    }

    fn ssr(linear: f64, quadratic: f64, rate: f64, exp: f64, smax: f64) -> SubsurfaceParams {
        SubsurfaceParams {
            linear,
            quadratic,
            to_gw_rate: rate,
            to_gw_exp: exp,
            max_storage: smax,
        }
    }

    #[test]
    fn subsurface_examples() {
        assert_eq!(
            subsurface_step(0.0, 0.0, &ssr(0.1, 0.01, 0.1, 1.0, 5.0)),
            ReservoirResult::default()
        );
        let r = subsurface_step(2.0, 0.0, &ssr(0.1, 0.01, 0.0, 1.0, 5.0));
        assert_relative_eq!(r.outflow, 0.24, max_relative = 1e-12);
        let r = subsurface_step(5.0, 0.0, &ssr(0.0, 0.0, 0.1, 2.0, 5.0));
        assert_relative_eq!(r.loss, 0.1, max_relative = 1e-12);
    }

    #[test]
    fn groundwater_examples() {
        assert_eq!(groundwater_step(3.0, 0.0, 0.0, 0.0).storage, 3.0);
        assert_relative_eq!(groundwater_step(4.0, 0.0, 0.05, 0.0).outflow, 0.2, max_relative = 1e-12);
        let r = groundwater_step(1.0, 0.0, 0.6, 0.6);
        assert_relative_eq!(r.outflow + r.loss, 1.0, max_relative = 1e-12);
        assert_relative_eq!(r.outflow, 0.5, max_relative = 1e-12);
        assert_eq!(r.storage, 0.0);
    }

    #[test]
    fn basin_streamflow_examples() {
        assert_eq!(basin_streamflow(&[(10.0, 0.0), (5.0, 0.0)]).unwrap(), 0.0);
        assert_eq!(basin_streamflow(&[(100.0, 1.0), (100.0, 3.0)]).unwrap(), 2.0);
        assert_eq!(basin_streamflow(&[(42.0, 0.7)]).unwrap(), 0.7);
        assert!(basin_streamflow(&[]).is_err());
    }

    #[test]
    fn cfs_conversion() {
        assert_relative_eq!(inches_per_day_to_cfs(1.0, 1.0), 0.042014, max_relative = 1e-4);
    }

    proptest! {
        #[test]
        fn impervious_balance(w in 0.0..2.0f64, et in 0.0..0.5f64, fsca in 0.0..1.0f64,
                              s in 0.0..0.1f64, cap in 0.0..0.1f64, fi in 0.001..0.999f64) {
            let s = s.min(cap);
            let r = impervious_step(w, et, fsca, s, cap, fi);
            prop_assert!((s + w - r.storage - r.runoff - r.evaporation).abs() < 1e-12);
            prop_assert!(r.storage <= cap + 1e-12 && r.storage >= 0.0);
            prop_assert!(r.evaporation <= et + 1e-15);
        }

        #[test]
        fn soil_balance(inf in 0.0..3.0f64, et in 0.0..0.5f64, cap in 0.5..10.0f64,
                        fz in 0.0..1.0f64, f1 in 0.0..1.0f64, f2 in 0.0..1.0f64) {
            let p = SoilParams { capacity: cap, recharge_capacity: 0.4 * cap, max_to_groundwater: fz };
            let ssz = f1 * cap;
            let ssre = (f2 * p.recharge_capacity).min(ssz);
            let r = soil_zone_step(inf, et, &p, ssre, ssz);
            let lhs = ssz + inf;
            let rhs = r.storage + r.to_groundwater + r.to_subsurface + r.evapotranspiration;
            prop_assert!((lhs - rhs).abs() < 1e-12);
            prop_assert!(r.recharge <= r.storage + 1e-15);
            prop_assert!(r.storage <= cap + 1e-12);
            prop_assert!(r.evapotranspiration <= et + 1e-15);
            prop_assert!(r.to_groundwater <= fz + 1e-15);
        }

        #[test]
        fn subsurface_balance(s in 0.0..30.0f64, q in 0.0..3.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64,
                              rate in 0.05..0.8f64, exp in 0.0..3.0f64, smax in 1.0..20.0f64) {
            let r = subsurface_step(s, q, &ssr(a, b, rate, exp, smax));
            prop_assert!((s + q - r.outflow - r.loss - r.storage).abs() < 1e-9);
            prop_assert!(r.outflow >= 0.0 && r.loss >= 0.0 && r.storage >= 0.0);
        }

        #[test]
        fn groundwater_balance(s in 0.0..30.0f64, q in 0.0..3.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64) {
            let r = groundwater_step(s, q, a, b);
            prop_assert!((s + q - r.outflow - r.loss - r.storage).abs() < 1e-9);
            prop_assert!(r.outflow >= 0.0 && r.loss >= 0.0 && r.storage >= 0.0);
        }

        #[test]
        fn streamflow_permutation_invariant(v in proptest::collection::vec((1.0..100.0f64, 0.0..2.0f64), 1..8)) {
            let mut rev = v.clone();
            rev.reverse();
            let a = basin_streamflow(&v).unwrap();
            let b = basin_streamflow(&rev).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}
