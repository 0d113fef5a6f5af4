//! Ensemble members, initialization and the perturbed forecast.

use chrono::Datelike;
use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use snowcast_core::{
    clamp_state, daily_step, Basin, DailyBasinOutput, DailyForcing, HruState, ModelConfig, ParameterSet, StateBounds,
};

use crate::error::{EnkfError, Result};
use crate::layout::{write_param, Layout, MemberView, Slot};
use crate::noise::{exact_mean, filter_rng, member_rng, normal, perturb_forcing, sample_sd, NoiseConfig};

/// One ensemble realization with its private parameter copy.
#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub states: Vec<HruState>,
    pub params: ParameterSet,
    /// Basin flow of the previous day, cfs.
    pub prev_runoff: f64,
    /// Basin flow of the current day, cfs.
    pub current_runoff: f64,
}

impl Member {
    pub fn view(&self) -> MemberView<'_> {
        MemberView {
            states: &self.states,
            params: &self.params,
            prev_runoff: self.prev_runoff,
            current_runoff: self.current_runoff,
        }
    }

    fn write(&mut self, slot: &Slot, value: f64, month: u32) {
        match *slot {
            Slot::State { hru, field } => self.states[hru].set(field, value),
            Slot::HruParam { .. } | Slot::GlobalParam { .. } => write_param(&mut self.params, slot, value, month),
            Slot::PrevRunoff => self.prev_runoff = value,
            Slot::CurrentRunoff => self.current_runoff = value,
        }
    }
}

/// State bounds inputs that do not come from the parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsConfig {
    pub recharge_fraction: f64,
    pub storage_cap: f64,
}

impl From<&ModelConfig> for BoundsConfig {
    fn from(cfg: &ModelConfig) -> Self {
        BoundsConfig {
            recharge_fraction: cfg.recharge_fraction,
            storage_cap: cfg.storage_cap,
        }
    }
}

/// Forces a member inside every hard bound: parameters into their ranges,
/// runoff non-negative, and each HRU state inside bounds derived from the
/// member's own capacities.
pub fn clamp_member(m: &mut Member, bounds: BoundsConfig) {
    m.params.clamp_to_ranges();
    m.prev_runoff = m.prev_runoff.max(0.0);
    m.current_runoff = m.current_runoff.max(0.0);
    let b = StateBounds::from_parameters(&m.params, bounds.recharge_fraction, bounds.storage_cap);
    for (s, b) in m.states.iter_mut().zip(&b) {
        *s = clamp_state(s, b);
    }
}

/// Initial sd of a parameter slot.
pub fn param_init_sd(spec: &snowcast_core::params::ParameterSpec, noise: &NoiseConfig) -> f64 {
    noise.param_init_fraction * spec.range()
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub layout: Layout,
    pub members: Vec<Member>,
    pub noise: NoiseConfig,
    pub bounds: BoundsConfig,
    rngs: Vec<ChaCha8Rng>,
    pub(crate) filter_rng: ChaCha8Rng,
}

/// Per-day forecast diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastSummary {
    /// Simulated basin flow of each member, cfs, before process noise.
    pub flows: Vec<f64>,
    /// Largest per-HRU mass-balance residual over all members.
    pub max_residual: f64,
    /// Basin output of each member.
    pub outputs: Vec<DailyBasinOutput>,
}

impl Ensemble {
    /// Draws `n` members around the given states and parameters.
    ///
    /// State slots get normal perturbations with sd `process_fraction *
    /// |state|`; in joint mode each parameter slot gets sd
    /// `param_init_fraction * range`. Every member is then clamped.
    pub fn init(
        layout: Layout,
        states: &[HruState],
        params: &ParameterSet,
        noise: NoiseConfig,
        n: usize,
        cfg: &ModelConfig,
    ) -> Result<Self> {
        if n < 2 {
            return Err(EnkfError::TooFewMembers(n));
        }
        noise.validate()?;
        if states.len() != layout.n_hru || params.n_hru() != layout.n_hru {
            return Err(EnkfError::Config(format!(
                "layout has {} HRUs, states {} and parameters {}",
                layout.n_hru,
                states.len(),
                params.n_hru()
            )));
        }
        layout.check_parameters(params)?;
        let bounds = BoundsConfig::from(cfg);
        let month = 1;
        let mut rngs: Vec<ChaCha8Rng> = (0..n).map(|i| member_rng(noise.seed, i)).collect();
        let base = Member {
            states: states.to_vec(),
            params: params.clone(),
            prev_runoff: 0.0,
            current_runoff: 0.0,
        };
        let members = rngs
            .iter_mut()
            .map(|rng| {
                let mut m = base.clone();
                for slot in &layout.slots {
                    let x = layout.read(slot, &base.view(), month);
                    let sd = match slot {
                        Slot::State { .. } => noise.process_fraction * x.abs(),
                        Slot::HruParam { .. } | Slot::GlobalParam { .. } => {
                            param_init_sd(&params.spec(slot.param().expect("parameter slot")), &noise)
                        }
                        Slot::PrevRunoff | Slot::CurrentRunoff => 0.0,
                    };
                    let z = normal(rng);
                    if sd > 0.0 {
                        m.write(slot, x + sd * z, month);
                    }
                }
                clamp_member(&mut m, bounds);
                m
            })
            .collect();
        Ok(Ensemble {
            layout,
            members,
            noise,
            bounds,
            rngs,
            filter_rng: filter_rng(noise.seed),
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Advances every member by one day with its own perturbed forcing and
    /// parameters, refreshes the runoff slots, then adds process noise to
    /// the state slots and clamps.
    pub fn forecast(&mut self, basin: &Basin, forcing: &DailyForcing, cfg: &ModelConfig) -> Result<ForecastSummary> {
        let noise = self.noise;
        let results: Vec<Result<DailyBasinOutput>> = self
            .members
            .par_iter_mut()
            .zip(self.rngs.par_iter_mut())
            .enumerate()
            .map(|(i, (m, rng))| {
                let f = perturb_forcing(forcing, &noise, rng);
                let day = daily_step(basin, &mut m.states, &f, &m.params, cfg)
                    .map_err(|source| EnkfError::Member { member: i, source })?;
                m.prev_runoff = m.current_runoff;
                m.current_runoff = day.basin.flow_cfs;
                Ok(day.basin)
            })
            .collect();
        let outputs = results.into_iter().collect::<Result<Vec<_>>>()?;
        let flows = outputs.iter().map(|o| o.flow_cfs).collect();
        let max_residual = outputs.iter().map(|o| o.max_hru_residual).fold(0.0, f64::max);
        self.add_process_noise(forcing.date.month());
        Ok(ForecastSummary {
            flows,
            max_residual,
            outputs,
        })
    }

    /// Adds `N(0, (process_fraction * mean)^2)` to every state slot, then
    /// clamps. Slots with a zero ensemble mean get no noise.
    pub fn add_process_noise(&mut self, month: u32) {
        let alpha = self.noise.process_fraction;
        let state_slots: Vec<(Slot, f64)> = self
            .layout
            .slots
            .iter()
            .filter(|s| s.is_state())
            .map(|s| (*s, self.slot_mean(s, month)))
            .collect();
        let bounds = self.bounds;
        self.members
            .par_iter_mut()
            .zip(self.rngs.par_iter_mut())
            .for_each(|(m, rng)| {
                for (slot, mean) in &state_slots {
                    let z = normal(rng);
                    let sd = alpha * mean.abs();
                    if sd > 0.0 {
                        let x = match *slot {
                            Slot::State { hru, field } => m.states[hru].get(field),
                            _ => unreachable!(),
                        };
                        m.write(slot, x + sd * z, month);
                    }
                }
                clamp_member(m, bounds);
            });
    }

    pub fn slot_values(&self, slot: &Slot, month: u32) -> Vec<f64> {
        self.members
            .iter()
            .map(|m| self.layout.read(slot, &m.view(), month))
            .collect()
    }

    pub fn slot_mean(&self, slot: &Slot, month: u32) -> f64 {
        exact_mean(self.slot_values(slot, month))
    }

    pub fn slot_sd(&self, slot: &Slot, month: u32) -> f64 {
        sample_sd(&self.slot_values(slot, month))
    }

    /// Member matrix, one column per member.
    pub fn gather(&self, month: u32) -> DMatrix<f64> {
        let dim = self.layout.dim();
        DMatrix::from_fn(dim, self.len(), |r, c| {
            self.layout.read(&self.layout.slots[r], &self.members[c].view(), month)
        })
    }

    /// Writes a member matrix back and clamps every member.
    pub fn scatter(&mut self, x: &DMatrix<f64>, month: u32) {
        assert_eq!(x.nrows(), self.layout.dim());
        assert_eq!(x.ncols(), self.len());
        for (c, m) in self.members.iter_mut().enumerate() {
            for (r, slot) in self.layout.slots.iter().enumerate() {
                m.write(slot, x[(r, c)], month);
            }
            clamp_member(m, self.bounds);
        }
    }

    /// Ensemble mean of each HRU's states (for reporting).
    pub fn mean_states(&self) -> Vec<HruState> {
        let n_hru = self.layout.n_hru;
        (0..n_hru)
            .map(|h| {
                let mut s = HruState::default();
                for field in snowcast_core::StateField::ALL {
                    s.set(field, exact_mean(self.members.iter().map(|m| m.states[h].get(field))));
                }
                s
            })
            .collect()
    }
}
