//! Error metrics, the persistence baseline and the comparison report.

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

fn check(measured: &[f64], simulated: &[f64]) -> Result<()> {
    if measured.len() != simulated.len() {
        return Err(HarnessError::LengthMismatch(measured.len(), simulated.len()));
    }
    if measured.is_empty() {
        return Err(HarnessError::Invalid("empty series".into()));
    }
    Ok(())
}

/// The headline error: `(1/T) * sum(sqrt((meas - sim)^2))`, i.e. the mean
/// absolute error.
pub fn rmse(measured: &[f64], simulated: &[f64]) -> Result<f64> {
    check(measured, simulated)?;
    let sum: f64 = measured
        .iter()
        .zip(simulated)
        .map(|(m, s)| ((m - s) * (m - s)).sqrt())
        .sum();
    Ok(sum / measured.len() as f64)
}

/// Root of the mean squared error.
pub fn rmse_conventional(measured: &[f64], simulated: &[f64]) -> Result<f64> {
    check(measured, simulated)?;
    let sum: f64 = measured.iter().zip(simulated).map(|(m, s)| (m - s) * (m - s)).sum();
    Ok((sum / measured.len() as f64).sqrt())
}

/// Persistence forecast: each day takes the previous day's measurement.
/// Day one has no predecessor and takes `first`.
pub fn ar1_baseline(measured: &[f64], first: f64) -> Result<Vec<f64>> {
    if measured.len() < 2 {
        return Err(HarnessError::Invalid(format!(
            "persistence baseline needs at least 2 days, got {}",
            measured.len()
        )));
    }
    let mut out = Vec::with_capacity(measured.len());
    out.push(first);
    out.extend_from_slice(&measured[..measured.len() - 1]);
    Ok(out)
}

/// `100 * (new - base) / base`; `None` when the base is zero.
pub fn percent_change(new: f64, base: f64) -> Option<f64> {
    (base != 0.0).then(|| 100.0 * (new - base) / base)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeMetrics {
    pub mode: String,
    /// Mean absolute streamflow error, cfs.
    pub flow_rmse: f64,
    pub flow_rmse_conventional: f64,
    /// Mean absolute basin-mean SWE error, inches. Absent for the
    /// persistence baseline.
    pub swe_rmse: Option<f64>,
    pub swe_rmse_conventional: Option<f64>,
    pub flow_change_vs_open_loop_pct: Option<f64>,
    pub flow_change_vs_ar1_pct: Option<f64>,
    pub swe_change_vs_open_loop_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub modes: Vec<ModeMetrics>,
}

/// Simulated series of one mode.
#[derive(Debug, Clone, Copy)]
pub struct ModeSeries<'a> {
    pub mode: &'a str,
    pub flow: &'a [f64],
    pub swe: Option<&'a [f64]>,
}

impl MetricsReport {
    /// Scores every mode against the measured series. The first mode is
    /// the open-loop reference; a persistence row is appended.
    pub fn compute(measured_flow: &[f64], measured_swe: &[f64], modes: &[ModeSeries<'_>]) -> Result<MetricsReport> {
        let open = modes
            .first()
            .ok_or_else(|| HarnessError::Invalid("no modes to score".into()))?;
        let ar1 = ar1_baseline(measured_flow, open.flow[0])?;
        let ar1_rmse = rmse(measured_flow, &ar1)?;
        let open_flow = rmse(measured_flow, open.flow)?;
        let open_swe = open.swe.map(|s| rmse(measured_swe, s)).transpose()?;
        let mut rows = Vec::with_capacity(modes.len() + 1);
        for m in modes {
            let flow_rmse = rmse(measured_flow, m.flow)?;
            let swe_rmse = m.swe.map(|s| rmse(measured_swe, s)).transpose()?;
            rows.push(ModeMetrics {
                mode: m.mode.to_string(),
                flow_rmse,
                flow_rmse_conventional: rmse_conventional(measured_flow, m.flow)?,
                swe_rmse,
                swe_rmse_conventional: m.swe.map(|s| rmse_conventional(measured_swe, s)).transpose()?,
                flow_change_vs_open_loop_pct: percent_change(flow_rmse, open_flow),
                flow_change_vs_ar1_pct: percent_change(flow_rmse, ar1_rmse),
                swe_change_vs_open_loop_pct: match (swe_rmse, open_swe) {
                    (Some(s), Some(o)) => percent_change(s, o),
                    _ => None,
                },
            });
        }
        rows.push(ModeMetrics {
            mode: "ar1".into(),
            flow_rmse: ar1_rmse,
            flow_rmse_conventional: rmse_conventional(measured_flow, &ar1)?,
            swe_rmse: None,
            swe_rmse_conventional: None,
            flow_change_vs_open_loop_pct: percent_change(ar1_rmse, open_flow),
            flow_change_vs_ar1_pct: Some(0.0),
            swe_change_vs_open_loop_pct: None,
        });
        Ok(MetricsReport { modes: rows })
    }

    pub fn mode(&self, name: &str) -> Option<&ModeMetrics> {
        self.modes.iter().find(|m| m.mode == name)
    }

    /// Plain-text table.
    pub fn to_table(&self) -> String {
        let opt = |v: Option<f64>, digits: usize| v.map_or("-".to_string(), |v| format!("{v:.digits$}"));
        let mut s = format!(
            "{:<10} {:>12} {:>12} {:>10} {:>10} {:>10} {:>10} {:>10}\n",
            "mode", "flow_mae", "flow_rmse", "swe_mae", "swe_rmse", "dF_ol_%", "dF_ar1_%", "dSWE_ol_%"
        );
        for m in &self.modes {
            s.push_str(&format!(
                "{:<10} {:>12.4} {:>12.4} {:>10} {:>10} {:>10} {:>10} {:>10}\n",
                m.mode,
                m.flow_rmse,
                m.flow_rmse_conventional,
                opt(m.swe_rmse, 4),
                opt(m.swe_rmse_conventional, 4),
                opt(m.flow_change_vs_open_loop_pct, 1),
                opt(m.flow_change_vs_ar1_pct, 1),
                opt(m.swe_change_vs_open_loop_pct, 1),
            ));
        }
        s
    }
}
