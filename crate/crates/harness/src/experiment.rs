//! Deterministic runs, filter runs and the synthetic twin.

use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use snowcast_core::{daily_step, Basin, DailyBasinOutput, DailyForcing, HruState, ModelConfig, ParameterSet};
use snowcast_enkf::noise::{exact_mean, normal, sample_sd};
use snowcast_enkf::{
    perturb_forcing, Ensemble, Layout, Mode, NoLocalization, NoiseConfig, Slot, GLOBAL_PARAMETER_FAMILIES,
    HRU_PARAMETER_FAMILIES,
};

use crate::config::{ExperimentConfig, RunMode};
use crate::error::{io_err, HarnessError, Result};
use crate::io;
use crate::metrics::{MetricsReport, ModeSeries};
use crate::synthetic;

const TRUTH_STREAM: u64 = u64::MAX;
const OBSERVATION_STREAM: u64 = u64::MAX - 1;

/// One row of a results file. Deterministic runs report zero spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub date: NaiveDate,
    /// Basin flow, cfs. Ensemble runs: the analysis mean in joint mode,
    /// the forecast mean otherwise.
    pub flow: f64,
    pub flow_sd: f64,
    /// Forecast ensemble mean flow, cfs.
    pub flow_forecast: f64,
    /// Area-weighted basin-mean SWE, inches (analysis mean).
    pub swe: f64,
    pub swe_sd: f64,
    /// Area-weighted mean of the per-HRU SWE spread before and after
    /// inflation.
    pub swe_spread_pre_inflation: f64,
    pub swe_spread_post_inflation: f64,
    /// Forecast means of the flow components and ET, inches/day.
    pub surface_runoff: f64,
    pub subsurface_flow: f64,
    pub groundwater_flow: f64,
    pub actual_et: f64,
    /// Largest per-HRU mass-balance residual of the day, inches.
    pub residual: f64,
}

pub fn basin_mean_swe(basin: &Basin, states: &[HruState]) -> f64 {
    let area = basin.total_area();
    basin.hrus.iter().zip(states).map(|(g, s)| g.area * s.swe).sum::<f64>() / area
}

fn run_err<E: std::error::Error + Send + Sync + 'static>(mode: RunMode, date: NaiveDate, e: E) -> HarnessError {
    HarnessError::Run {
        mode: mode.name().to_string(),
        date,
        source: Box::new(e),
    }
}

/// Output of a deterministic run.
#[derive(Debug, Clone)]
pub struct DeterministicRun {
    pub rows: Vec<SeriesRow>,
    /// SWE of each HRU at the end of each day.
    pub hru_swe: Vec<Vec<f64>>,
}

pub fn run_deterministic(
    mode: RunMode,
    basin: &Basin,
    initial: &[HruState],
    forcing: &[DailyForcing],
    params: &ParameterSet,
    cfg: &ModelConfig,
) -> Result<DeterministicRun> {
    let mut states = initial.to_vec();
    let mut rows = Vec::with_capacity(forcing.len());
    let mut hru_swe = Vec::with_capacity(forcing.len());
    for f in forcing {
        let day = daily_step(basin, &mut states, f, params, cfg).map_err(|e| run_err(mode, f.date, e))?;
        let b = day.basin;
        let swe = basin_mean_swe(basin, &states);
        rows.push(SeriesRow {
            date: f.date,
            flow: b.flow_cfs,
            flow_sd: 0.0,
            flow_forecast: b.flow_cfs,
            swe,
            swe_sd: 0.0,
            swe_spread_pre_inflation: 0.0,
            swe_spread_post_inflation: 0.0,
            surface_runoff: b.surface_runoff,
            subsurface_flow: b.subsurface_flow,
            groundwater_flow: b.groundwater_flow,
            actual_et: b.actual_et,
            residual: b.max_hru_residual,
        });
        hru_swe.push(states.iter().map(|s| s.swe).collect());
    }
    Ok(DeterministicRun { rows, hru_swe })
}

/// Ensemble mean of the augmented parameters on one day: the basin-wide
/// families directly, per-HRU families as area-weighted means.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterRow {
    pub date: NaiveDate,
    pub values: Vec<(String, f64)>,
}

#[derive(Debug, Clone)]
pub struct FilterRun {
    pub rows: Vec<SeriesRow>,
    /// Joint mode only.
    pub parameters: Vec<ParameterRow>,
    pub final_ensemble: Ensemble,
}

/// Observations fed to a filter run, indexed by day.
#[derive(Debug, Clone, Copy)]
pub struct ObservationSet<'a> {
    pub swe: &'a [Vec<Option<f64>>],
    /// Measured basin flow of each day, cfs; assimilated the next day.
    pub flow: &'a [Option<f64>],
}

#[allow(clippy::too_many_arguments)]
pub fn run_filter(
    mode: RunMode,
    basin: &Basin,
    initial: &[HruState],
    forcing: &[DailyForcing],
    prior: &ParameterSet,
    obs: ObservationSet<'_>,
    cfg: &ExperimentConfig,
) -> Result<FilterRun> {
    let layout_mode = match mode {
        RunMode::SweOnly => Mode::StateOnly,
        RunMode::Joint => Mode::Joint,
        RunMode::OpenLoop => return Err(HarnessError::Invalid("open loop is not a filter mode".into())),
    };
    let n_hru = basin.n_hru();
    let layout = Layout::new(layout_mode, n_hru, cfg.include_reservoirs);
    let mut noise = cfg.noise;
    noise.seed = cfg.seed;
    let mut ens = Ensemble::init(layout, initial, prior, noise, cfg.n_ensemble, &cfg.model)?;
    let area = basin.total_area();
    let weights: Vec<f64> = basin.hrus.iter().map(|h| h.area / area).collect();
    let swe_slots: Vec<usize> = (0..n_hru)
        .map(|h| ens.layout.swe_slot(h).expect("SWE in layout"))
        .collect();
    let mut rows = Vec::with_capacity(forcing.len());
    let mut parameters = Vec::new();
    for (t, f) in forcing.iter().enumerate() {
        let month = f.date.month();
        let fc = ens
            .forecast(basin, f, &cfg.model)
            .map_err(|e| run_err(mode, f.date, e))?;
        let prev_flow = match mode {
            RunMode::Joint if t > 0 => obs.flow.get(t - 1).copied().flatten(),
            _ => None,
        };
        let no_swe = vec![None; n_hru];
        let swe_obs = obs.swe.get(t).unwrap_or(&no_swe);
        let batch = ens
            .observe(swe_obs, prev_flow, month)
            .map_err(|e| run_err(mode, f.date, e))?;
        let (pre, post) = if batch.is_empty() {
            let sd: f64 = swe_slots
                .iter()
                .zip(&weights)
                .map(|(s, w)| w * ens.slot_sd(&ens.layout.slots[*s], month))
                .sum();
            (sd, sd)
        } else {
            let r = ens
                .analysis(&batch, month, &NoLocalization)
                .map_err(|e| run_err(mode, f.date, e))?;
            let spread = |sd: &[f64]| swe_slots.iter().zip(&weights).map(|(s, w)| w * sd[*s]).sum::<f64>();
            (spread(&r.pre_inflation_sd), spread(&r.post_inflation_sd))
        };
        if mode == RunMode::Joint {
            ens.reinflate_parameters(month);
        }
        let member_swe: Vec<f64> = ens.members.iter().map(|m| basin_mean_swe(basin, &m.states)).collect();
        let flow_forecast = exact_mean(fc.flows.iter().copied());
        let (flow, flow_sd) = match mode {
            RunMode::Joint => (
                ens.slot_mean(&Slot::CurrentRunoff, month),
                ens.slot_sd(&Slot::CurrentRunoff, month),
            ),
            _ => (flow_forecast, sample_sd(&fc.flows)),
        };
        let mean_of = |g: fn(&DailyBasinOutput) -> f64| exact_mean(fc.outputs.iter().map(g));
        rows.push(SeriesRow {
            date: f.date,
            flow,
            flow_sd,
            flow_forecast,
            swe: exact_mean(member_swe.iter().copied()),
            swe_sd: sample_sd(&member_swe),
            swe_spread_pre_inflation: pre,
            swe_spread_post_inflation: post,
            surface_runoff: mean_of(|o| o.surface_runoff),
            subsurface_flow: mean_of(|o| o.subsurface_flow),
            groundwater_flow: mean_of(|o| o.groundwater_flow),
            actual_et: mean_of(|o| o.actual_et),
            residual: fc.max_residual,
        });
        if mode == RunMode::Joint {
            parameters.push(parameter_row(&ens, &weights, f.date));
        }
    }
    Ok(FilterRun {
        rows,
        parameters,
        final_ensemble: ens,
    })
}

fn parameter_row(ens: &Ensemble, weights: &[f64], date: NaiveDate) -> ParameterRow {
    let month = date.month();
    let mut values = Vec::new();
    for p in GLOBAL_PARAMETER_FAMILIES {
        values.push((
            p.key().to_string(),
            ens.slot_mean(&Slot::GlobalParam { param: p }, month),
        ));
    }
    for p in HRU_PARAMETER_FAMILIES {
        let v = weights
            .iter()
            .enumerate()
            .map(|(hru, w)| w * ens.slot_mean(&Slot::HruParam { hru, param: p }, month))
            .sum();
        values.push((p.key().to_string(), v));
    }
    ParameterRow { date, values }
}

/// Everything a twin experiment produces.
#[derive(Debug, Clone)]
pub struct TwinOutput {
    pub basin: Basin,
    pub nominal_forcing: Vec<DailyForcing>,
    pub truth_forcing: Vec<DailyForcing>,
    pub truth: Vec<SeriesRow>,
    pub open_loop: Vec<SeriesRow>,
    pub swe_only: Vec<SeriesRow>,
    pub joint: Vec<SeriesRow>,
    pub joint_parameters: Vec<ParameterRow>,
    pub swe_observations: Vec<Vec<Option<f64>>>,
    pub flow_observations: Vec<Option<f64>>,
    pub ar1: Vec<f64>,
    pub report: MetricsReport,
    /// Largest per-HRU residual over every simulated day of every run.
    pub max_residual: f64,
}

impl TwinOutput {
    pub fn dates(&self) -> Vec<NaiveDate> {
        self.truth.iter().map(|r| r.date).collect()
    }
}

/// Nominal forcing for a configuration: the CSV when given, the weather
/// generator otherwise.
pub fn nominal_forcing(cfg: &ExperimentConfig, basin: &Basin) -> Result<Vec<DailyForcing>> {
    let start = cfg.start_date().expect("validated water year");
    match &cfg.forcing {
        Some(path) => {
            let all = io::load_forcing_csv(path, basin)?;
            let first = all
                .iter()
                .position(|f| f.date == start)
                .ok_or_else(|| HarnessError::Invalid(format!("{} has no row for {start}", path.display())))?;
            let n = cfg.n_days();
            if all.len() < first + n {
                return Err(HarnessError::Invalid(format!(
                    "{} ends before the {n}-day run starting {start}",
                    path.display()
                )));
            }
            Ok(all[first..first + n].to_vec())
        }
        None => Ok(synthetic::weather(basin, start, cfg.n_days(), &cfg.synthetic)),
    }
}

/// Twin truth forcing: one draw of the forcing error model.
pub fn truth_forcing(nominal: &[DailyForcing], noise: &NoiseConfig, seed: u64) -> Vec<DailyForcing> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(TRUTH_STREAM);
    nominal.iter().map(|f| perturb_forcing(f, noise, &mut rng)).collect()
}

/// Noisy observations of the truth: SWE of every HRU every day and the
/// basin flow, each with the configured error sd, floored at zero.
pub fn synthetic_observations(
    hru_swe: &[Vec<f64>],
    flow: &[f64],
    noise: &NoiseConfig,
    seed: u64,
) -> (Vec<Vec<Option<f64>>>, Vec<Option<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(OBSERVATION_STREAM);
    let mut swe = Vec::with_capacity(hru_swe.len());
    let mut flows = Vec::with_capacity(flow.len());
    for (day, q) in hru_swe.iter().zip(flow) {
        swe.push(
            day.iter()
                .map(|s| Some((s + noise.swe_sd(*s) * normal(&mut rng)).max(0.0)))
                .collect(),
        );
        flows.push(Some((q + noise.flow_sd(*q) * normal(&mut rng)).max(0.0)));
    }
    (swe, flows)
}

pub fn run_twin(cfg: &ExperimentConfig) -> Result<TwinOutput> {
    cfg.validate()?;
    let basin = cfg.load_basin()?;
    let truth_params = cfg.load_parameters(&basin)?;
    let biased = synthetic::biased_parameters(&truth_params, cfg.parameter_bias);
    let nominal = nominal_forcing(cfg, &basin)?;
    let truth_forcing = truth_forcing(&nominal, &cfg.noise, cfg.seed);

    let truth = run_deterministic(
        RunMode::OpenLoop,
        &basin,
        &synthetic::initial_states(&truth_params, &cfg.model),
        &truth_forcing,
        &truth_params,
        &cfg.model,
    )
    .map_err(|e| relabel(e, "truth"))?;
    let initial = synthetic::initial_states(&biased, &cfg.model);
    let open = run_deterministic(RunMode::OpenLoop, &basin, &initial, &nominal, &biased, &cfg.model)?;
    let truth_flow: Vec<f64> = truth.rows.iter().map(|r| r.flow).collect();
    let (swe_obs, flow_obs) = synthetic_observations(&truth.hru_swe, &truth_flow, &cfg.noise, cfg.seed);
    let obs = ObservationSet {
        swe: &swe_obs,
        flow: &flow_obs,
    };
    let swe_only = run_filter(RunMode::SweOnly, &basin, &initial, &nominal, &biased, obs, cfg)?;
    let joint = run_filter(RunMode::Joint, &basin, &initial, &nominal, &biased, obs, cfg)?;

    let truth_swe: Vec<f64> = truth.rows.iter().map(|r| r.swe).collect();
    let flows = |rows: &[SeriesRow]| rows.iter().map(|r| r.flow).collect::<Vec<_>>();
    let swes = |rows: &[SeriesRow]| rows.iter().map(|r| r.swe).collect::<Vec<_>>();
    let (of, os) = (flows(&open.rows), swes(&open.rows));
    let (sf, ss) = (flows(&swe_only.rows), swes(&swe_only.rows));
    let (jf, js) = (flows(&joint.rows), swes(&joint.rows));
    let report = MetricsReport::compute(
        &truth_flow,
        &truth_swe,
        &[
            ModeSeries {
                mode: RunMode::OpenLoop.name(),
                flow: &of,
                swe: Some(&os),
            },
            ModeSeries {
                mode: RunMode::SweOnly.name(),
                flow: &sf,
                swe: Some(&ss),
            },
            ModeSeries {
                mode: RunMode::Joint.name(),
                flow: &jf,
                swe: Some(&js),
            },
        ],
    )?;
    let ar1 = crate::metrics::ar1_baseline(&truth_flow, of[0])?;
    let max_residual = [&truth.rows, &open.rows, &swe_only.rows, &joint.rows]
        .iter()
        .flat_map(|rows| rows.iter().map(|r| r.residual))
        .fold(0.0, f64::max);
    Ok(TwinOutput {
        basin,
        nominal_forcing: nominal,
        truth_forcing,
        truth: truth.rows,
        open_loop: open.rows,
        swe_only: swe_only.rows,
        joint: joint.rows,
        joint_parameters: joint.parameters,
        swe_observations: swe_obs,
        flow_observations: flow_obs,
        ar1,
        report,
        max_residual,
    })
}

fn relabel(e: HarnessError, mode: &str) -> HarnessError {
    match e {
        HarnessError::Run { date, source, .. } => HarnessError::Run {
            mode: mode.to_string(),
            date,
            source,
        },
        other => other,
    }
}

pub fn write_series(path: &Path, rows: &[SeriesRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_series(path: &Path) -> Result<Vec<SeriesRow>> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::Reader::from_reader(file);
    let mut out = Vec::new();
    for r in rdr.deserialize() {
        out.push(r?);
    }
    Ok(out)
}

pub fn write_parameters(path: &Path, rows: &[ParameterRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if let Some(first) = rows.first() {
        let mut header = vec!["date".to_string()];
        header.extend(first.values.iter().map(|(k, _)| k.clone()));
        w.write_record(&header)?;
    }
    for r in rows {
        let mut rec = vec![r.date.to_string()];
        rec.extend(r.values.iter().map(|(_, v)| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn write_report(dir: &Path, report: &MetricsReport) -> Result<()> {
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    let path = dir.join("metrics.json");
    std::fs::write(&path, json + "\n").map_err(io_err(&path))?;
    let path = dir.join("metrics.txt");
    std::fs::write(&path, report.to_table()).map_err(io_err(&path))?;
    Ok(())
}

/// Writes every twin series, the observations, both forcings and the
/// report into `dir`.
pub fn write_twin(dir: &Path, out: &TwinOutput) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_series(&dir.join("truth.csv"), &out.truth)?;
    write_series(&dir.join("open_loop.csv"), &out.open_loop)?;
    write_series(&dir.join("swe_only.csv"), &out.swe_only)?;
    write_series(&dir.join("joint.csv"), &out.joint)?;
    write_parameters(&dir.join("joint_parameters.csv"), &out.joint_parameters)?;
    let dates = out.dates();
    io::write_swe_observations(&dir.join("observed_swe.csv"), &out.basin, &dates, &out.swe_observations)?;
    io::write_flow_observations(&dir.join("observed_flow.csv"), &dates, &out.flow_observations)?;
    io::write_forcing_csv(&dir.join("forcing_nominal.csv"), &out.basin, &out.nominal_forcing)?;
    io::write_forcing_csv(&dir.join("forcing_truth.csv"), &out.basin, &out.truth_forcing)?;
    let ar1: Vec<Option<f64>> = out.ar1.iter().copied().map(Some).collect();
    io::write_flow_observations(&dir.join("ar1.csv"), &dates, &ar1)?;
    write_report(dir, &out.report)
}

/// Recomputes the report from the series files of a twin output directory.
pub fn metrics_from_dir(dir: &Path) -> Result<MetricsReport> {
    let truth = read_series(&dir.join("truth.csv"))?;
    let measured_flow: Vec<f64> = truth.iter().map(|r| r.flow).collect();
    let measured_swe: Vec<f64> = truth.iter().map(|r| r.swe).collect();
    let mut series = Vec::new();
    for (mode, file) in [
        (RunMode::OpenLoop, "open_loop.csv"),
        (RunMode::SweOnly, "swe_only.csv"),
        (RunMode::Joint, "joint.csv"),
    ] {
        let path = dir.join(file);
        if path.exists() || mode == RunMode::OpenLoop {
            let rows = read_series(&path)?;
            if rows.len() != truth.len() {
                return Err(HarnessError::Invalid(format!(
                    "{} has {} rows, truth.csv has {}",
                    path.display(),
                    rows.len(),
                    truth.len()
                )));
            }
            series.push((mode, rows));
        }
    }
    let columns: Vec<(RunMode, Vec<f64>, Vec<f64>)> = series
        .iter()
        .map(|(m, rows)| {
            (
                *m,
                rows.iter().map(|r| r.flow).collect(),
                rows.iter().map(|r| r.swe).collect(),
            )
        })
        .collect();
    let modes: Vec<ModeSeries<'_>> = columns
        .iter()
        .map(|(m, f, s)| ModeSeries {
            mode: m.name(),
            flow: f,
            swe: Some(s),
        })
        .collect();
    MetricsReport::compute(&measured_flow, &measured_swe, &modes)
}

/// Open-loop simulation with the configured parameters and forcing.
pub fn run_open_loop(cfg: &ExperimentConfig) -> Result<Vec<SeriesRow>> {
    cfg.validate()?;
    let basin = cfg.load_basin()?;
    let params = cfg.load_parameters(&basin)?;
    let forcing = nominal_forcing(cfg, &basin)?;
    let initial = synthetic::initial_states(&params, &cfg.model);
    Ok(run_deterministic(RunMode::OpenLoop, &basin, &initial, &forcing, &params, &cfg.model)?.rows)
}

/// Filter run over the observation files named in the configuration,
/// starting from the configured parameters.
pub fn assimilate(cfg: &ExperimentConfig, mode: RunMode) -> Result<FilterRun> {
    cfg.validate()?;
    let basin = cfg.load_basin()?;
    let params = cfg.load_parameters(&basin)?;
    let forcing = nominal_forcing(cfg, &basin)?;
    let dates: Vec<NaiveDate> = forcing.iter().map(|f| f.date).collect();
    let swe = match &cfg.swe_observations {
        Some(p) => io::load_swe_observations(p, &basin, &dates)?,
        None => vec![vec![None; basin.n_hru()]; dates.len()],
    };
    let flow = match &cfg.flow_observations {
        Some(p) => io::load_flow_observations(p, &dates)?,
        None => vec![None; dates.len()],
    };
    if cfg.swe_observations.is_none() && cfg.flow_observations.is_none() {
        return Err(HarnessError::Invalid(
            "assimilate needs swe_observations or flow_observations in the config".into(),
        ));
    }
    let initial = synthetic::initial_states(&params, &cfg.model);
    run_filter(
        mode,
        &basin,
        &initial,
        &forcing,
        &params,
        ObservationSet { swe: &swe, flow: &flow },
        cfg,
    )
}
