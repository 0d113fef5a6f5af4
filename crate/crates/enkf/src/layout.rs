//! Filter state-vector layout: which entry holds which HRU state, parameter
//! or runoff value.

use serde::{Deserialize, Serialize};
use snowcast_core::{Cadence, HruState, Param, ParameterSet, StateField};

use crate::error::{EnkfError, Result};

/// Per-HRU parameters augmented in joint mode.
pub const HRU_PARAMETER_FAMILIES: [Param; 9] = [
    Param::SmidxCoef,
    Param::CareaMax,
    Param::SoilmoistMax,
    Param::GwflowCoef,
    Param::Soil2gwMax,
    Param::GwsinkCoef,
    Param::Ssr2gwRate,
    Param::SsrcoefSq,
    Param::SsrcoefLin,
];

/// Basin-wide parameters augmented in joint mode.
pub const GLOBAL_PARAMETER_FAMILIES: [Param; 4] =
    [Param::TmaxAllsnow, Param::TmaxAllrain, Param::DdayIntcp, Param::JhCoef];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Snowpack and soil states only.
    StateOnly,
    /// States, parameters and the two runoff slots.
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Slot {
    State {
        hru: usize,
        field: StateField,
    },
    HruParam {
        hru: usize,
        param: Param,
    },
    /// A basin-wide parameter. Monthly parameters expose the value of the
    /// current month; an update shifts all twelve months by the same amount.
    GlobalParam {
        param: Param,
    },
    /// Basin flow of the previous day, cfs.
    PrevRunoff,
    /// Basin flow of the current day, cfs.
    CurrentRunoff,
}

impl Slot {
    pub fn is_state(&self) -> bool {
        matches!(self, Slot::State { .. })
    }

    pub fn param(&self) -> Option<Param> {
        match self {
            Slot::HruParam { param, .. } | Slot::GlobalParam { param } => Some(*param),
            _ => None,
        }
    }
}

/// Values a slot reads from and writes to.
#[derive(Debug, Clone, PartialEq)]
pub struct MemberView<'a> {
    pub states: &'a [HruState],
    pub params: &'a ParameterSet,
    pub prev_runoff: f64,
    pub current_runoff: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub n_hru: usize,
    pub mode: Mode,
    pub slots: Vec<Slot>,
}

impl Layout {
    /// The twelve filter states of every HRU, optionally followed by the
    /// subsurface and groundwater storages.
    pub fn state_only(n_hru: usize, include_reservoirs: bool) -> Self {
        Layout {
            n_hru,
            mode: Mode::StateOnly,
            slots: Self::state_slots(n_hru, include_reservoirs),
        }
    }

    /// States, then per-HRU parameters, global parameters, and the previous
    /// and current runoff.
    pub fn joint(n_hru: usize, include_reservoirs: bool) -> Self {
        let mut slots = Self::state_slots(n_hru, include_reservoirs);
        for hru in 0..n_hru {
            for param in HRU_PARAMETER_FAMILIES {
                slots.push(Slot::HruParam { hru, param });
            }
        }
        for param in GLOBAL_PARAMETER_FAMILIES {
            slots.push(Slot::GlobalParam { param });
        }
        slots.push(Slot::PrevRunoff);
        slots.push(Slot::CurrentRunoff);
        Layout {
            n_hru,
            mode: Mode::Joint,
            slots,
        }
    }

    pub fn new(mode: Mode, n_hru: usize, include_reservoirs: bool) -> Self {
        match mode {
            Mode::StateOnly => Self::state_only(n_hru, include_reservoirs),
            Mode::Joint => Self::joint(n_hru, include_reservoirs),
        }
    }

    fn state_slots(n_hru: usize, include_reservoirs: bool) -> Vec<Slot> {
        let mut slots = Vec::new();
        for hru in 0..n_hru {
            for field in StateField::HRU {
                slots.push(Slot::State { hru, field });
            }
            if include_reservoirs {
                for field in StateField::RESERVOIR {
                    slots.push(Slot::State { hru, field });
                }
            }
        }
        slots
    }

    pub fn dim(&self) -> usize {
        self.slots.len()
    }

    pub fn position(&self, slot: Slot) -> Option<usize> {
        self.slots.iter().position(|s| *s == slot)
    }

    pub fn swe_slot(&self, hru: usize) -> Option<usize> {
        self.position(Slot::State {
            hru,
            field: StateField::Swe,
        })
    }

    pub fn prev_runoff_slot(&self) -> Option<usize> {
        self.position(Slot::PrevRunoff)
    }

    pub fn current_runoff_slot(&self) -> Option<usize> {
        self.position(Slot::CurrentRunoff)
    }

    /// Checks that every parameter slot can be read from `params`.
    pub fn check_parameters(&self, params: &ParameterSet) -> Result<()> {
        for slot in &self.slots {
            if let Some(param) = slot.param() {
                if params.values(param).is_none() {
                    return Err(EnkfError::MissingParameter(param));
                }
            }
        }
        Ok(())
    }

    pub fn read(&self, slot: &Slot, m: &MemberView<'_>, month: u32) -> f64 {
        match *slot {
            Slot::State { hru, field } => m.states[hru].get(field),
            Slot::HruParam { hru, param } => m.params.get(param, hru, month),
            Slot::GlobalParam { param } => m.params.get(param, 0, month),
            Slot::PrevRunoff => m.prev_runoff,
            Slot::CurrentRunoff => m.current_runoff,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let layout: Layout = serde_json::from_str(text)?;
        let mut seen = std::collections::HashSet::new();
        for slot in &layout.slots {
            if !seen.insert(*slot) {
                return Err(EnkfError::Config(format!("slot {slot:?} listed twice")));
            }
        }
        Ok(layout)
    }
}

/// Writes a parameter slot. Monthly values move together by the change in
/// the current month's value; the result is clamped to the legal range.
pub fn write_param(params: &mut ParameterSet, slot: &Slot, value: f64, month: u32) {
    let (param, hru) = match *slot {
        Slot::HruParam { hru, param } => (param, hru),
        Slot::GlobalParam { param } => (param, 0),
        _ => return,
    };
    let spec = params.spec(param);
    let current = params.get(param, hru, month);
    let delta = value - current;
    let values = params.values_mut(param).expect("parameter checked against layout");
    match spec.cadence {
        Cadence::Monthly => {
            let start = spec.index(hru, 1);
            for v in &mut values[start..start + 12] {
                *v = spec.clamp(*v + delta);
            }
        }
        _ => {
            let i = spec.index(hru, month);
            values[i] = spec.clamp(value);
        }
    }
}
