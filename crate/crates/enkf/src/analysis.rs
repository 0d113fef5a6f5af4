//! Analysis step: perturbed-observation EnKF update, clamping, post-analysis
//! inflation and parameter re-inflation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::ensemble::Ensemble;
use crate::error::{EnkfError, Result};
use crate::layout::{Layout, Slot};
use crate::noise::{exact_mean, normal, sample_sd};
use crate::observe::ObservationBatch;

/// Hook for tapering sample covariances before the gain is formed.
pub trait Localization: Sync {
    /// `cross` is the state-observation covariance (dim x obs) and
    /// `innovation` the observation-space covariance (obs x obs), both
    /// before observation error is added.
    fn apply(&self, layout: &Layout, obs: &ObservationBatch, cross: &mut DMatrix<f64>, innovation: &mut DMatrix<f64>);
}

/// No tapering.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoLocalization;

impl Localization for NoLocalization {
    fn apply(&self, _: &Layout, _: &ObservationBatch, _: &mut DMatrix<f64>, _: &mut DMatrix<f64>) {}
}

/// Row means, each computed relative to the row's first entry.
pub fn row_means(x: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(x.nrows(), x.row_iter().map(|r| exact_mean(r.iter().copied())))
}

pub fn anomalies(x: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let mean = row_means(x);
    let mut a = x.clone();
    for mut col in a.column_iter_mut() {
        col -= &mean;
    }
    (mean, a)
}

pub fn row_sds(x: &DMatrix<f64>) -> Vec<f64> {
    x.row_iter()
        .map(|r| sample_sd(&r.iter().copied().collect::<Vec<_>>()))
        .collect()
}

/// Gain `K = C_xy (C_yy + R)^-1`. A failed Cholesky factorization is
/// retried with a growing diagonal jitter; the jitter used is returned.
pub fn kalman_gain(cross: &DMatrix<f64>, innovation: &DMatrix<f64>, obs_var: &DVector<f64>) -> (DMatrix<f64>, f64) {
    let (chol, jitter) = factor(innovation, obs_var);
    // K^T = S^-1 C_xy^T since S is symmetric
    let kt = chol.solve(&cross.transpose());
    (kt.transpose(), jitter)
}

fn factor(innovation: &DMatrix<f64>, obs_var: &DVector<f64>) -> (nalgebra::Cholesky<f64, nalgebra::Dyn>, f64) {
    let mut s = innovation.clone();
    for i in 0..s.nrows() {
        s[(i, i)] += obs_var[i];
    }
    if let Some(c) = s.clone().cholesky() {
        return (c, 0.0);
    }
    let scale = s.diagonal().iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    let mut jitter = 1e-12 * scale;
    loop {
        let mut t = s.clone();
        for i in 0..t.nrows() {
            t[(i, i)] += jitter;
        }
        if let Some(c) = t.cholesky() {
            return (c, jitter);
        }
        jitter *= 10.0;
    }
}

/// Stochastic EnKF update of a member matrix with perturbed observations.
///
/// `perturbations` holds one column of observation noise per member.
/// Returns the analysis matrix and the regularization jitter.
pub fn enkf_update(
    x: &DMatrix<f64>,
    layout: &Layout,
    obs: &ObservationBatch,
    perturbations: &DMatrix<f64>,
    localization: &dyn Localization,
) -> (DMatrix<f64>, f64) {
    let n = x.ncols();
    let o = obs.len();
    let (_, a) = anomalies(x);
    let rows: Vec<usize> = obs.obs.iter().map(|ob| ob.slot).collect();
    let hx = x.select_rows(rows.iter());
    let ha = a.select_rows(rows.iter());
    let denom = (n - 1) as f64;
    let mut cross = &a * ha.transpose() / denom;
    let mut innovation = &ha * ha.transpose() / denom;
    localization.apply(layout, obs, &mut cross, &mut innovation);
    let var = DVector::from_iterator(o, obs.obs.iter().map(|ob| ob.sd * ob.sd));
    let (chol, jitter) = factor(&innovation, &var);
    let y = DVector::from_iterator(o, obs.obs.iter().map(|ob| ob.value));
    let mut d = DMatrix::zeros(o, n);
    for c in 0..n {
        for r in 0..o {
            d[(r, c)] = y[r] + perturbations[(r, c)] - hx[(r, c)];
        }
    }
    let z = chol.solve(&d);
    (x + cross * z, jitter)
}

/// Relaxes analysis anomalies toward the forecast anomalies:
/// `x'_infl = (1 - alpha) x'_a + alpha x'_f` about the analysis mean.
pub fn inflate(forecast: &DMatrix<f64>, analysis: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
    let mf = row_means(forecast);
    let ma = row_means(analysis);
    let mut out = analysis.clone();
    for c in 0..out.ncols() {
        for r in 0..out.nrows() {
            let fa = forecast[(r, c)] - mf[r];
            let aa = analysis[(r, c)] - ma[r];
            // analysis + alpha * (forecast anomaly - analysis anomaly)
            out[(r, c)] = analysis[(r, c)] + alpha * (fa - aa);
        }
    }
    out
}

/// Diagnostics of one analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub n_obs: usize,
    /// Diagonal jitter added to the innovation covariance, 0 if none.
    pub jitter: f64,
    pub forecast_mean: Vec<f64>,
    pub analysis_mean: Vec<f64>,
    /// Per-slot spread after the update and clamp, before inflation.
    pub pre_inflation_sd: Vec<f64>,
    /// Per-slot spread of the final analysis ensemble.
    pub post_inflation_sd: Vec<f64>,
}

impl Ensemble {
    /// Update, clamp, inflate, clamp.
    pub fn analysis(
        &mut self,
        obs: &ObservationBatch,
        month: u32,
        localization: &dyn Localization,
    ) -> Result<AnalysisReport> {
        if obs.is_empty() {
            return Err(EnkfError::NoObservations);
        }
        if let Some(o) = obs.obs.iter().find(|o| o.slot >= self.layout.dim()) {
            return Err(EnkfError::Observation(format!("slot {} outside layout", o.slot)));
        }
        let n = self.len();
        let xf = self.gather(month);
        let mut chi = DMatrix::zeros(obs.len(), n);
        for c in 0..n {
            for (r, ob) in obs.obs.iter().enumerate() {
                chi[(r, c)] = ob.sd * normal(&mut self.filter_rng);
            }
        }
        let (xa, jitter) = enkf_update(&xf, &self.layout, obs, &chi, localization);
        self.scatter(&xa, month);
        let xa = self.gather(month);
        let pre_inflation_sd = row_sds(&xa);
        let xi = inflate(&xf, &xa, self.noise.inflation);
        self.scatter(&xi, month);
        let xfinal = self.gather(month);
        Ok(AnalysisReport {
            n_obs: obs.len(),
            jitter,
            forecast_mean: row_means(&xf).iter().copied().collect(),
            analysis_mean: row_means(&xfinal).iter().copied().collect(),
            pre_inflation_sd,
            post_inflation_sd: row_sds(&xfinal),
        })
    }

    /// Restores spread on under-dispersed parameter slots.
    ///
    /// A slot whose sample sd is below `param_target_fraction *
    /// param_init_fraction * range` has its anomalies rescaled to exactly
    /// that sd about the current mean; a fully collapsed slot gets fresh
    /// standardized anomalies. Values are then clamped to the range.
    /// Returns the layout rows that were re-inflated.
    pub fn reinflate_parameters(&mut self, month: u32) -> Vec<usize> {
        let mut touched = Vec::new();
        let n = self.len();
        let slots: Vec<(usize, Slot)> = self
            .layout
            .slots
            .iter()
            .enumerate()
            .filter(|(_, s)| s.param().is_some())
            .map(|(i, s)| (i, *s))
            .collect();
        let mut x = self.gather(month);
        for (row, slot) in slots {
            let spec = self.members[0].params.spec(slot.param().expect("parameter slot"));
            let target = self.noise.param_target_fraction * self.noise.param_init_fraction * spec.range();
            if target <= 0.0 {
                continue;
            }
            let values: Vec<f64> = x.row(row).iter().copied().collect();
            let sd = sample_sd(&values);
            if sd >= target {
                continue;
            }
            let mean = exact_mean(values.iter().copied());
            // spread at rounding level carries no usable shape
            let anomalies: Vec<f64> = if sd > COLLAPSED * target {
                standardize(values.iter().map(|v| v - mean).collect())
            } else {
                standardized_draws(&mut self.filter_rng, n)
            };
            for (c, z) in anomalies.iter().enumerate() {
                x[(row, c)] = spec.clamp(mean + target * z);
            }
            touched.push(row);
        }
        if !touched.is_empty() {
            self.scatter(&x, month);
        }
        touched
    }
}

/// Slot spread below this fraction of the target counts as collapsed.
const COLLAPSED: f64 = 1e-6;

/// Shifts and scales values to sample mean 0 and sd 1.
fn standardize(raw: Vec<f64>) -> Vec<f64> {
    let n = raw.len();
    let m = exact_mean(raw.iter().copied());
    let centered: Vec<f64> = raw.iter().map(|v| v - m).collect();
    let sd = sample_sd(&centered);
    if sd > 0.0 {
        centered.iter().map(|v| v / sd).collect()
    } else {
        // identical values; use a symmetric pair pattern
        (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect()
    }
}

/// `n` normal draws with sample mean 0 and sd 1.
fn standardized_draws<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    standardize((0..n).map(|_| normal(rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn scalar_gain_is_one_half() {
        let (k, jitter) = kalman_gain(
            &DMatrix::from_element(1, 1, 1.0),
            &DMatrix::from_element(1, 1, 1.0),
            &DVector::from_element(1, 1.0),
        );
        assert_eq!(jitter, 0.0);
        assert_relative_eq!(k[(0, 0)], 0.5, max_relative = 1e-12);
    }

    #[test]
    fn inflated_anomaly_example() {
        // member anomalies: forecast +-2, analysis +-1
        let f = DMatrix::from_row_slice(1, 2, &[12.0, 8.0]);
        let a = DMatrix::from_row_slice(1, 2, &[6.0, 4.0]);
        let i = inflate(&f, &a, 0.9);
        assert_relative_eq!(i[(0, 0)] - 5.0, 1.9, max_relative = 1e-12);
        assert_relative_eq!(i[(0, 1)] - 5.0, -1.9, max_relative = 1e-12);
    }

    #[test]
    fn collapsed_ensemble_is_not_updated() {
        let layout = Layout::state_only(1, false);
        let x = DMatrix::from_element(layout.dim(), 4, 3.0);
        let mut obs = ObservationBatch::new();
        obs.push_slot(&layout, 3, 10.0, 1.0).unwrap();
        let chi = DMatrix::from_row_slice(1, 4, &[0.3, -0.2, 1.0, 0.0]);
        let (xa, _) = enkf_update(&x, &layout, &obs, &chi, &NoLocalization);
        assert_eq!(xa, x);
    }

    #[test]
    fn uncorrelated_slot_unchanged() {
        let layout = Layout::state_only(1, false);
        let mut x = DMatrix::from_element(layout.dim(), 4, 1.0);
        // observed slot 3 varies; slot 0 varies orthogonally
        let obs_row = [1.0, -1.0, 1.0, -1.0];
        let other = [1.0, 1.0, -1.0, -1.0];
        for c in 0..4 {
            x[(3, c)] += obs_row[c];
            x[(0, c)] += other[c];
        }
        let mut obs = ObservationBatch::new();
        obs.push_slot(&layout, 3, 5.0, 1.0).unwrap();
        let chi = DMatrix::from_row_slice(1, 4, &[0.1, 0.5, -0.3, 0.2]);
        let (xa, _) = enkf_update(&x, &layout, &obs, &chi, &NoLocalization);
        for c in 0..4 {
            assert_relative_eq!(xa[(0, c)], x[(0, c)], epsilon = 1e-14);
            assert_eq!(xa[(1, c)], x[(1, c)]);
        }
        assert!(xa[(3, 0)] > x[(3, 0)]);
    }

    #[test]
    fn singular_innovation_is_regularized() {
        let cross = DMatrix::from_element(1, 2, 1.0);
        let innovation = DMatrix::from_element(2, 2, 1.0);
        let (k, jitter) = kalman_gain(&cross, &innovation, &DVector::from_element(2, 0.0));
        assert!(jitter > 0.0);
        assert!(k.iter().all(|v| v.is_finite()));
    }

    proptest! {
        #[test]
        fn inflation_preserves_mean(f in proptest::collection::vec(-10.0..10.0f64, 6),
                                    a in proptest::collection::vec(-10.0..10.0f64, 6),
                                    alpha in 0.0..1.0f64) {
            let fm = DMatrix::from_row_slice(2, 3, &f);
            let am = DMatrix::from_row_slice(2, 3, &a);
            let i = inflate(&fm, &am, alpha);
            let (mi, ai) = anomalies(&i);
            let (ma, aa) = anomalies(&am);
            let (_, af) = anomalies(&fm);
            for r in 0..2 {
                prop_assert!((mi[r] - ma[r]).abs() < 1e-12);
                for c in 0..3 {
                    let expected = (1.0 - alpha) * aa[(r, c)] + alpha * af[(r, c)];
                    prop_assert!((ai[(r, c)] - expected).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn standardized_draws_have_unit_sd(seed in 0u64..1000, n in 2usize..50) {
            let mut rng = crate::noise::member_rng(seed, 0);
            let z = standardized_draws(&mut rng, n);
            prop_assert!(exact_mean(z.iter().copied()).abs() < 1e-12);
            prop_assert!((sample_sd(&z) - 1.0).abs() < 1e-12);
        }
    }
}
