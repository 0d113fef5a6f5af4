//! Distribution of station climate to HRUs and the derived forcings:
//! shortwave radiation, precipitation phase and potential ET.

use std::f64::consts::PI;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::basin::{HruGeometry, Season};
use crate::error::{CoreError, Result};

/// One day of model input: precipitation per HRU and the index-station
/// temperatures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyForcing {
    pub date: NaiveDate,
    /// degF at the index HRU.
    pub tmax: f64,
    pub tmin: f64,
    /// Inches, one value per HRU.
    pub precip: Vec<f64>,
}

impl DailyForcing {
    pub fn validate(&self, n_hru: usize) -> Result<()> {
        if self.precip.len() != n_hru {
            return Err(CoreError::Config(format!(
                "{}: {} precipitation values for {n_hru} HRUs",
                self.date,
                self.precip.len()
            )));
        }
        if let Some(i) = self.precip.iter().position(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(CoreError::Config(format!(
                "{}: invalid precipitation {} at HRU position {i}",
                self.date, self.precip[i]
            )));
        }
        if !(self.tmax.is_finite() && self.tmin.is_finite()) || self.tmax < self.tmin {
            return Err(CoreError::Config(format!(
                "{}: tmax {} below tmin {}",
                self.date, self.tmax, self.tmin
            )));
        }
        Ok(())
    }
}

/// Lapses the station temperatures to an HRU.
///
/// `lapse_*` are degF per 1000 ft of elevation above the station;
/// `adj_*` are the per-HRU physiographic adjustments. The distributed
/// minimum never exceeds the distributed maximum.
#[allow(clippy::too_many_arguments)]
pub fn distribute_temperature(
    station_tmax: f64,
    station_tmin: f64,
    station_elevation: f64,
    hru_elevation: f64,
    lapse_max: f64,
    lapse_min: f64,
    adj_max: f64,
    adj_min: f64,
) -> (f64, f64) {
    let dz = (hru_elevation - station_elevation) / 1000.0;
    let tmax = station_tmax - lapse_max * dz - adj_max;
    let tmin = station_tmin - lapse_min * dz - adj_min;
    (tmax, tmin.min(tmax))
}

/// Monotone lookup from degree-day coefficient to the ratio of actual to
/// potential shortwave radiation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeDayCurve {
    /// `(degree_day, ratio)` pairs, strictly increasing in degree-day.
    pub points: Vec<(f64, f64)>,
}

impl Default for DegreeDayCurve {
    fn default() -> Self {
        const RATIO: [f64; 26] = [
            0.2, 0.391, 0.518, 0.595, 0.658, 0.696, 0.735, 0.76, 0.779, 0.798, 0.813, 0.824, 0.836, 0.849, 0.855,
            0.862, 0.864, 0.867, 0.869, 0.872, 0.875, 0.880, 0.885, 0.89, 0.895, 0.9,
        ];
        DegreeDayCurve {
            points: RATIO.iter().enumerate().map(|(i, &r)| ((i + 1) as f64, r)).collect(),
        }
    }
}

impl DegreeDayCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(CoreError::Config("degree-day curve needs at least two points".into()));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(CoreError::Config(format!(
                    "degree-day curve not strictly increasing at {}",
                    w[1].0
                )));
            }
        }
        if points.iter().any(|p| !(0.0..=1.0).contains(&p.1)) {
            return Err(CoreError::Config("degree-day curve ratio outside [0, 1]".into()));
        }
        Ok(DegreeDayCurve { points })
    }

    /// Parses `degree_day,ratio` lines; `#` starts a comment.
    pub fn from_delimited(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split(',').map(str::trim);
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|v| v.parse().ok()).ok_or_else(|| CoreError::Parse {
                    line: n + 1,
                    message: format!("expected `degree_day,ratio`, found `{line}`"),
                })
            };
            points.push((parse(it.next())?, parse(it.next())?));
        }
        Self::new(points)
    }

    pub fn ratio(&self, dd: f64) -> f64 {
        let pts = &self.points;
        let r = if dd <= pts[0].0 {
            pts[0].1
        } else if dd >= pts[pts.len() - 1].0 {
            pts[pts.len() - 1].1
        } else {
            let i = pts.partition_point(|p| p.0 <= dd);
            let (x0, y0) = pts[i - 1];
            let (x1, y1) = pts[i];
            y0 + (y1 - y0) * (dd - x0) / (x1 - x0)
        };
        r.clamp(0.0, 1.0)
    }
}

/// Clear-sky potential shortwave radiation, Langleys, per day of year
/// (1-366) and HRU, for a horizontal surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SolarTable {
    rows: Vec<Vec<f64>>,
}

const LANGLEYS_PER_MJ_M2: f64 = 1e6 / 41_840.0;
const SOLAR_CONSTANT_MJ_M2_MIN: f64 = 0.0820;

/// Daily extraterrestrial radiation on a horizontal surface, MJ/m2.
fn extraterrestrial(latitude_deg: f64, doy: u32) -> f64 {
    let phi = latitude_deg.to_radians();
    let angle = 2.0 * PI * doy as f64 / 365.0;
    let declination = 0.409 * (angle - 1.39).sin();
    let dr = 1.0 + 0.033 * angle.cos();
    let ws = (-phi.tan() * declination.tan()).clamp(-1.0, 1.0).acos();
    let ra = (24.0 * 60.0 / PI)
        * SOLAR_CONSTANT_MJ_M2_MIN
        * dr
        * (ws * phi.sin() * declination.sin() + phi.cos() * declination.cos() * ws.sin());
    ra.max(0.0)
}

impl SolarTable {
    /// Computes the table from latitude, day of year and elevation.
    pub fn clear_sky(hrus: &[HruGeometry], transmissivity: f64) -> Self {
        let rows = (1..=366)
            .map(|doy| {
                hrus.iter()
                    .map(|h| {
                        let elevation_m = h.elevation * 0.3048;
                        let tau = (transmissivity + 2e-5 * elevation_m).clamp(0.0, 1.0);
                        tau * extraterrestrial(h.latitude, doy) * LANGLEYS_PER_MJ_M2
                    })
                    .collect()
            })
            .collect();
        SolarTable { rows }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != 366 {
            return Err(CoreError::Config(format!(
                "solar table has {} rows, expected 366",
                rows.len()
            )));
        }
        if rows.iter().flatten().any(|v| !(*v >= 0.0)) {
            return Err(CoreError::Config("solar table has negative entries".into()));
        }
        Ok(SolarTable { rows })
    }

    pub fn potential(&self, doy: u32, hru: usize) -> f64 {
        self.rows[(doy.clamp(1, 366) - 1) as usize][hru]
    }
}

/// Coefficients of the degree-day radiation estimate for one month.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiationCoefficients {
    pub dday_slope: f64,
    pub dday_intcp: f64,
    pub ppt_rad_adj: f64,
    pub radj_summer: f64,
    pub radj_winter: f64,
}

/// Daily shortwave radiation on an HRU, Langleys.
pub fn shortwave_radiation(
    tmax: f64,
    precip: f64,
    season: Season,
    potential: f64,
    slope: f64,
    coeffs: &RadiationCoefficients,
    curve: &DegreeDayCurve,
) -> f64 {
    let dd = coeffs.dday_slope * tmax + coeffs.dday_intcp;
    let ratio = curve.ratio(dd);
    let gamma = if precip > coeffs.ppt_rad_adj {
        match season {
            Season::Summer => coeffs.radj_summer,
            Season::Winter => coeffs.radj_winter,
        }
    } else {
        1.0
    };
    (ratio * gamma / slope.atan().cos()) * potential
}

/// Fraction of precipitation falling as rain.
pub fn partition_precipitation(tmax: f64, tmin: f64, all_snow: f64, all_rain: f64, adjmix: f64) -> f64 {
    if tmax <= all_snow {
        return 0.0;
    }
    if tmin >= all_snow && tmax >= all_rain {
        return 1.0;
    }
    let spread = tmax - tmin;
    if spread <= 0.0 {
        // tmax > all_snow here
        return 1.0;
    }
    let fr = (tmax - all_snow) / spread * adjmix;
    if fr > 1.0 {
        1.0
    } else {
        fr.max(0.0)
    }
}

/// Jensen-Haise potential evapotranspiration, inches.
pub fn jensen_haise_et(temp: f64, swrad: f64, elevation: f64, jh_coef: f64) -> f64 {
    let jh_hru = 22.0 - elevation / 1000.0;
    let et = jh_coef * (temp - jh_hru) * swrad / (2.54 * (597.3 - 0.5653 * temp));
    et.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn temperature_is_identity_at_station() {
        assert_eq!(
            distribute_temperature(50.0, 30.0, 4000.0, 4000.0, 3.0, 2.0, 0.0, 0.0),
            (50.0, 30.0)
        );
    }

    #[test]
    fn temperature_lapse_over_1000ft() {
        let (tmax, _) = distribute_temperature(50.0, 30.0, 4000.0, 5000.0, 3.0, 2.0, 0.0, 0.0);
        assert_relative_eq!(tmax, 47.0, max_relative = 1e-12);
    }

    #[test]
    fn temperature_adjustment() {
        let (tmax, _) = distribute_temperature(50.0, 30.0, 4000.0, 4000.0, 3.0, 2.0, 2.0, 0.0);
        assert_relative_eq!(tmax, 48.0, max_relative = 1e-12);
    }

    #[test]
    fn distributed_tmin_never_exceeds_tmax() {
        let (tmax, tmin) = distribute_temperature(40.0, 38.0, 0.0, 2000.0, 5.0, -5.0, 0.0, 0.0);
        assert_eq!(tmin, tmax);
    }

    fn coeffs() -> RadiationCoefficients {
        RadiationCoefficients {
            dday_slope: 0.4,
            dday_intcp: -10.0,
            ppt_rad_adj: 0.02,
            radj_summer: 0.44,
            radj_winter: 0.8,
        }
    }

    #[test]
    fn shortwave_identity_case() {
        let curve = DegreeDayCurve::new(vec![(0.0, 1.0), (30.0, 1.0)]).unwrap();
        let rsw = shortwave_radiation(60.0, 0.0, Season::Winter, 400.0, 0.0, &coeffs(), &curve);
        assert_eq!(rsw, 400.0);
    }

    #[test]
    fn dry_day_uses_unit_gamma() {
        let curve = DegreeDayCurve::new(vec![(0.0, 0.5), (30.0, 0.5)]).unwrap();
        for season in [Season::Summer, Season::Winter] {
            let rsw = shortwave_radiation(60.0, 0.0, season, 400.0, 0.0, &coeffs(), &curve);
            assert_relative_eq!(rsw, 200.0);
        }
    }

    #[test]
    fn wet_winter_day() {
        let curve = DegreeDayCurve::new(vec![(0.0, 0.5), (30.0, 0.5)]).unwrap();
        let rsw = shortwave_radiation(60.0, 0.5, Season::Winter, 400.0, 0.0, &coeffs(), &curve);
        assert_relative_eq!(rsw, 160.0, max_relative = 1e-12);
    }

    #[test]
    fn degree_day_curve_clamps_and_interpolates() {
        let c = DegreeDayCurve::default();
        assert_eq!(c.ratio(-40.0), 0.2);
        assert_eq!(c.ratio(100.0), 0.9);
        assert_relative_eq!(c.ratio(1.5), 0.5 * (0.2 + 0.391));
        assert!(DegreeDayCurve::new(vec![(1.0, 0.2), (1.0, 0.3)]).is_err());
    }

    #[test]
    fn degree_day_curve_from_text() {
        let c = DegreeDayCurve::from_delimited("# dd,r\n1,0.2\n5, 0.6\n").unwrap();
        assert_eq!(c.points, vec![(1.0, 0.2), (5.0, 0.6)]);
        assert!(matches!(
            DegreeDayCurve::from_delimited("1,0.2\nfoo\n"),
            Err(CoreError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn rain_fraction_examples() {
        assert_eq!(partition_precipitation(32.0, 20.0, 32.0, 40.0, 1.0), 0.0);
        assert_relative_eq!(
            partition_precipitation(40.0, 30.0, 32.0, 45.0, 1.0),
            0.8,
            max_relative = 1e-9
        );
        assert_eq!(partition_precipitation(60.0, 35.0, 32.0, 55.0, 1.0), 1.0);
        assert_eq!(partition_precipitation(40.0, 40.0, 32.0, 45.0, 1.0), 1.0);
    }

    #[test]
    fn jensen_haise_examples() {
        assert_eq!(jensen_haise_et(17.0, 400.0, 5000.0, 0.014), 0.0);
        let expected = 0.014 * 35.0 * 400.0 / (2.54 * (597.3 - 0.5653 * 52.0));
        assert_relative_eq!(
            jensen_haise_et(52.0, 400.0, 5000.0, 0.014),
            expected,
            max_relative = 1e-12
        );
        assert_relative_eq!(expected, 0.1359, max_relative = 1e-3);
        assert_eq!(jensen_haise_et(52.0, 0.0, 5000.0, 0.014), 0.0);
    }

    #[test]
    fn solar_table_is_seasonal() {
        let h = HruGeometry {
            id: 1,
            area: 1.0,
            elevation: 5000.0,
            slope: 0.0,
            latitude: 40.0,
            summer_cover: 0.5,
            winter_cover: 0.3,
            impervious_fraction: 0.0,
        };
        let t = SolarTable::clear_sky(&[h], 0.75);
        let winter = t.potential(355, 0);
        let summer = t.potential(172, 0);
        assert!(winter > 150.0 && winter < 350.0, "{winter}");
        assert!(summer > 650.0 && summer < 900.0, "{summer}");
    }

    proptest! {
        #[test]
        fn rain_fraction_in_unit_interval(tmax in -20.0..80.0f64, spread in 0.0..30.0f64,
                                          ts in -10.0..40.0f64, tr in -8.0..60.0f64, z in 0.6..1.4f64) {
            let fr = partition_precipitation(tmax, tmax - spread, ts, tr, z);
            prop_assert!((0.0..=1.0).contains(&fr));
        }

        #[test]
        fn rain_fraction_monotone_in_tmax(tmin in 0.0..31.0f64, a in 32.0..60.0f64, b in 32.0..60.0f64) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            // all-rain threshold above both keeps the mixed regime
            let f_lo = partition_precipitation(lo, tmin, 32.0, 70.0, 1.0);
            let f_hi = partition_precipitation(hi, tmin, 32.0, 70.0, 1.0);
            prop_assert!(f_hi >= f_lo - 1e-12);
        }

        #[test]
        fn shortwave_bounded(tmax in -20.0..100.0f64, p in 0.0..3.0f64, slope in 0.0..2.0f64,
                             pot in 0.0..900.0f64, summer in any::<bool>()) {
            let season = if summer { Season::Summer } else { Season::Winter };
            let rsw = shortwave_radiation(tmax, p, season, pot, slope, &coeffs(), &DegreeDayCurve::default());
            prop_assert!(rsw >= 0.0);
            prop_assert!(rsw <= pot / slope.atan().cos() + 1e-9);
        }

        #[test]
        fn potential_et_nonnegative(t in -40.0..110.0f64, rsw in 0.0..900.0f64, e in 0.0..14000.0f64,
                                    jc in 0.005..0.06f64) {
            prop_assert!(jensen_haise_et(t, rsw, e, jc) >= 0.0);
            prop_assert_eq!(jensen_haise_et(t, 0.0, e, jc), 0.0);
        }
    }
}
