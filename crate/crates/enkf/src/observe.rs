//! Observation batches and their error model.

use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{EnkfError, Result};
use crate::layout::{Layout, Slot};
use crate::noise::{ErrorBasis, NoiseConfig};
use snowcast_core::StateField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ObsKind {
    Swe {
        hru: usize,
    },
    PrevFlow,
    /// Any other slot, used by tests and custom schedules.
    Slot,
}

/// One scalar observation of a single layout slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub kind: ObsKind,
    /// Row of the layout this observation selects.
    pub slot: usize,
    pub value: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservationBatch {
    pub obs: Vec<Observation>,
}

impl ObservationBatch {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    /// Observation of an arbitrary slot with a given error sd.
    pub fn push_slot(&mut self, layout: &Layout, slot: usize, value: f64, sd: f64) -> Result<()> {
        self.push(layout, ObsKind::Slot, slot, value, sd)
    }

    /// SWE observation with sd taken from the observed value.
    pub fn push_swe(&mut self, layout: &Layout, hru: usize, swe: f64, noise: &NoiseConfig) -> Result<()> {
        self.push_swe_sd(layout, hru, swe, noise.swe_sd(swe))
    }

    pub fn push_swe_sd(&mut self, layout: &Layout, hru: usize, swe: f64, sd: f64) -> Result<()> {
        let slot = layout
            .swe_slot(hru)
            .ok_or_else(|| EnkfError::Observation(format!("layout has no SWE slot for HRU {hru}")))?;
        self.push(layout, ObsKind::Swe { hru }, slot, swe, sd)
    }

    /// Previous-day flow observation with sd taken from the observed value.
    pub fn push_prev_flow(&mut self, layout: &Layout, flow: f64, noise: &NoiseConfig) -> Result<()> {
        self.push_prev_flow_sd(layout, flow, noise.flow_sd(flow))
    }

    pub fn push_prev_flow_sd(&mut self, layout: &Layout, flow: f64, sd: f64) -> Result<()> {
        let slot = layout
            .prev_runoff_slot()
            .ok_or_else(|| EnkfError::Observation("streamflow needs the joint layout".into()))?;
        self.push(layout, ObsKind::PrevFlow, slot, flow, sd)
    }

    fn push(&mut self, layout: &Layout, kind: ObsKind, slot: usize, value: f64, sd: f64) -> Result<()> {
        if slot >= layout.dim() {
            return Err(EnkfError::Observation(format!(
                "slot {slot} outside layout of {}",
                layout.dim()
            )));
        }
        if !value.is_finite() || !(sd > 0.0) || !sd.is_finite() {
            return Err(EnkfError::Observation(format!(
                "slot {slot}: invalid value {value} or sd {sd}"
            )));
        }
        self.obs.push(Observation { kind, slot, value, sd });
        Ok(())
    }
}

/// Builds the day's batch: SWE for every HRU with a value, plus the
/// previous day's measured basin flow when given. HRUs without a value
/// contribute no row.
pub fn observe(
    layout: &Layout,
    swe: &[Option<f64>],
    prev_flow: Option<f64>,
    noise: &NoiseConfig,
) -> Result<ObservationBatch> {
    let mut batch = ObservationBatch::new();
    for (hru, value) in swe.iter().enumerate() {
        if let Some(v) = value {
            batch.push_swe(layout, hru, *v, noise)?;
        }
    }
    if let Some(f) = prev_flow {
        batch.push_prev_flow(layout, f, noise)?;
    }
    Ok(batch)
}

impl Ensemble {
    /// Like [`observe`], with each error sd taken from the value selected
    /// by the configured [`ErrorBasis`].
    pub fn observe(&self, swe: &[Option<f64>], prev_flow: Option<f64>, month: u32) -> Result<ObservationBatch> {
        let noise = &self.noise;
        let basis = |slot: &Slot, value: f64| match noise.obs_error_basis {
            ErrorBasis::Observed => value,
            ErrorBasis::Forecast => self.slot_mean(slot, month),
        };
        let mut batch = ObservationBatch::new();
        for (hru, value) in swe.iter().enumerate() {
            if let Some(v) = value {
                let slot = Slot::State {
                    hru,
                    field: StateField::Swe,
                };
                batch.push_swe_sd(&self.layout, hru, *v, noise.swe_sd(basis(&slot, *v)))?;
            }
        }
        if let Some(f) = prev_flow {
            batch.push_prev_flow_sd(&self.layout, f, noise.flow_sd(basis(&Slot::PrevRunoff, f)))?;
        }
        Ok(batch)
    }
}
