//! Parameter registry and parameter sets.
//!
//! Every calibratable coefficient of the model is described by a
//! [`ParameterSpec`]: its file key, whether it is basin-wide or per-HRU,
//! whether it varies by calendar month, and its legal range. A
//! [`ParameterSet`] holds the values; [`validate_parameters`] checks a set
//! against the registry.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Whether a parameter has one value for the basin or one per HRU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    Global,
    PerHru,
}

/// How a parameter's value varies through the year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cadence {
    Constant,
    /// Twelve values, indexed by the calendar month of the simulation date.
    Monthly,
    /// A fixed-length table that is neither monthly nor per-HRU.
    Table(usize),
}

macro_rules! parameters {
    ($( $variant:ident => $key:literal, $symbol:literal, $scope:ident, $cadence:expr, [$min:expr, $max:expr], $units:literal; )*) => {
        /// Identifier of a registered model parameter.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum Param {
            $( $variant, )*
        }

        impl Param {
            pub const ALL: &'static [Param] = &[ $( Param::$variant, )* ];

            /// Key used in parameter files and snapshots.
            pub fn key(self) -> &'static str {
                match self { $( Param::$variant => $key, )* }
            }

            /// Conventional symbol used in model documentation.
            pub fn symbol(self) -> &'static str {
                match self { $( Param::$variant => $symbol, )* }
            }

            pub fn from_key(key: &str) -> Option<Param> {
                match key { $( $key => Some(Param::$variant), )* _ => None }
            }

            fn default_spec(self) -> ParameterSpec {
                match self {
                    $( Param::$variant => ParameterSpec {
                        param: self,
                        scope: Scope::$scope,
                        cadence: $cadence,
                        min: $min,
                        max: $max,
                        units: $units,
                    }, )*
                }
            }
        }
    };
}

parameters! {
    PptRadAdj => "ppt_rad_adj", "Pmin", Global, Cadence::Monthly, [0.0, 0.5], "inches";
    DdaySlope => "dday_slope", "phi", Global, Cadence::Monthly, [0.2, 0.9], "degree-day/degF";
    DdayIntcp => "dday_intcp", "beta", Global, Cadence::Monthly, [-60.0, 10.0], "degree-day";
    RadjSppt => "radj_sppt", "gamma_s", Global, Cadence::Constant, [0.0, 1.0], "-";
    RadjWppt => "radj_wppt", "gamma_w", Global, Cadence::Constant, [0.0, 1.0], "-";
    TminLapse => "tmin_lapse", "lambda2", Global, Cadence::Monthly, [-10.0, 10.0], "degF/1000ft";
    TmaxLapse => "tmax_lapse", "lambda1", Global, Cadence::Monthly, [-10.0, 10.0], "degF/1000ft";
    TminAdj => "tmin_adj", "beta2", PerHru, Cadence::Constant, [-10.0, 10.0], "degF";
    TmaxAdj => "tmax_adj", "beta1", PerHru, Cadence::Constant, [-10.0, 10.0], "degF";
    TmaxAllsnow => "tmax_allsnow", "Tms", Global, Cadence::Monthly, [-10.0, 40.0], "degF";
    TmaxAllrain => "tmax_allrain", "Tmr", Global, Cadence::Constant, [-8.0, 60.0], "degF";
    AdjmixRain => "adjmix_rain", "zeta", Global, Cadence::Monthly, [0.6, 1.4], "-";
    SrainIntcp => "srain_intcp", "Crs", PerHru, Cadence::Constant, [0.0, 1.0], "inches";
    WrainIntcp => "wrain_intcp", "Crw", PerHru, Cadence::Constant, [0.0, 1.0], "inches";
    SnowIntcp => "snow_intcp", "Cs", PerHru, Cadence::Constant, [0.0, 1.0], "inches";
    JhCoef => "jh_coef", "jc", Global, Cadence::Monthly, [0.005, 0.06], "1/degF";
    RadTrncf => "rad_trncf", "psi", PerHru, Cadence::Constant, [0.0, 1.0], "-";
    EmisNoppt => "emis_noppt", "epsilon", Global, Cadence::Constant, [0.757, 1.0], "-";
    CecnCoef => "cecn_coef", "omega", Global, Cadence::Monthly, [2.0, 10.0], "cal/degC";
    PotetSublim => "potet_sublim", "xi", Global, Cadence::Constant, [0.0, 1.0], "-";
    DenInit => "den_init", "rho_init", Global, Cadence::Constant, [0.01, 0.5], "g/cm3";
    DenMax => "den_max", "rho_max", Global, Cadence::Constant, [0.1, 0.8], "g/cm3";
    SettleConst => "settle_const", "tau", Global, Cadence::Constant, [0.01, 0.5], "-";
    ImpervStorMax => "imperv_stor_max", "Simax", PerHru, Cadence::Constant, [0.0, 0.1], "inches";
    SoilmoistMax => "soilmoist_max", "Sszmax", PerHru, Cadence::Constant, [0.001, 60.0], "inches";
    SmidxCoef => "smidx_coef", "alpha1", PerHru, Cadence::Constant, [0.001, 0.06], "-";
    SmidxExp => "smidx_exp", "theta1", PerHru, Cadence::Constant, [0.1, 0.5], "1/inch";
    SsrcoefSq => "ssrcoef_sq", "alpha3", PerHru, Cadence::Constant, [0.0, 1.0], "-";
    SsrcoefLin => "ssrcoef_lin", "beta3", PerHru, Cadence::Constant, [0.0, 1.0], "1/day";
    Ssr2gwRate => "ssr2gw_rate", "alpha2", PerHru, Cadence::Constant, [0.05, 0.8], "1/day";
    Ssr2gwExp => "ssr2gw_exp", "theta2", PerHru, Cadence::Constant, [0.0, 3.0], "-";
    SsrmaxCoef => "ssrmax_coef", "smax", PerHru, Cadence::Constant, [1.0, 20.0], "inches";
    GwflowCoef => "gwflow_coef", "alpha4", PerHru, Cadence::Constant, [0.001, 0.5], "1/day";
    GwsinkCoef => "gwsink_coef", "alpha5", PerHru, Cadence::Constant, [0.0, 1.0], "1/day";
    Soil2gwMax => "soil2gw_max", "Fzgwmax", PerHru, Cadence::Constant, [0.0, 5.0], "inches";
    SnareaCurve => "snarea_curve", "Acurve", Global, Cadence::Table(11), [0.0, 1.0], "-";
    SnareaThresh => "snarea_thresh", "SWEmax", PerHru, Cadence::Constant, [0.0, 200.0], "inches";
    CareaMax => "carea_max", "Asr", PerHru, Cadence::Constant, [0.0, 1.0], "-";
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Description of one registered parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterSpec {
    pub param: Param,
    pub scope: Scope,
    pub cadence: Cadence,
    pub min: f64,
    pub max: f64,
    pub units: &'static str,
}

impl ParameterSpec {
    /// Number of values a set must carry for this parameter.
    pub fn expected_len(&self, n_hru: usize) -> usize {
        let per_unit = match self.cadence {
            Cadence::Constant => 1,
            Cadence::Monthly => 12,
            Cadence::Table(n) => n,
        };
        match self.scope {
            Scope::Global => per_unit,
            Scope::PerHru => per_unit * n_hru,
        }
    }

    pub fn range(&self) -> f64 {
        self.max - self.min
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }

    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.min, self.max)
    }

    /// Index into the value array for an HRU and a calendar month (1-12).
    /// Table-cadence parameters have no single index and return 0.
    pub fn index(&self, hru: usize, month: u32) -> usize {
        let m = (month.clamp(1, 12) - 1) as usize;
        match (self.scope, self.cadence) {
            (Scope::Global, Cadence::Constant) => 0,
            (Scope::Global, Cadence::Monthly) => m,
            (Scope::PerHru, Cadence::Constant) => hru,
            (Scope::PerHru, Cadence::Monthly) => hru * 12 + m,
            (_, Cadence::Table(_)) => 0,
        }
    }
}

/// The set of parameter specifications in force for a model configuration.
///
/// The all-rain threshold is listed with a constant cadence in the
/// parameter table but monthly in the augmented-parameter table; the
/// registry accepts either and a configuration picks one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registry {
    pub tmax_allrain_cadence: Cadence,
}

impl Default for Registry {
    fn default() -> Self {
        Registry {
            tmax_allrain_cadence: Cadence::Constant,
        }
    }
}

impl Registry {
    pub fn spec(&self, param: Param) -> ParameterSpec {
        let mut spec = param.default_spec();
        if param == Param::TmaxAllrain {
            spec.cadence = self.tmax_allrain_cadence;
        }
        spec
    }

    pub fn specs(&self) -> impl Iterator<Item = ParameterSpec> + '_ {
        Param::ALL.iter().map(|&p| self.spec(p))
    }
}

/// Values for every registered parameter of a basin.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    n_hru: usize,
    registry: Registry,
    values: BTreeMap<Param, Vec<f64>>,
}

impl ParameterSet {
    /// An empty set; fill it with [`ParameterSet::set`].
    pub fn new(n_hru: usize, registry: Registry) -> Self {
        ParameterSet {
            n_hru,
            registry,
            values: BTreeMap::new(),
        }
    }

    pub fn n_hru(&self) -> usize {
        self.n_hru
    }

    pub fn registry(&self) -> Registry {
        self.registry
    }

    pub fn spec(&self, param: Param) -> ParameterSpec {
        self.registry.spec(param)
    }

    pub fn set(&mut self, param: Param, values: Vec<f64>) {
        self.values.insert(param, values);
    }

    /// Sets every entry of a parameter to the same value, sized by its spec.
    pub fn fill(&mut self, param: Param, value: f64) {
        let len = self.spec(param).expected_len(self.n_hru);
        self.values.insert(param, vec![value; len]);
    }

    pub fn values(&self, param: Param) -> Option<&[f64]> {
        self.values.get(&param).map(Vec::as_slice)
    }

    pub fn values_mut(&mut self, param: Param) -> Option<&mut Vec<f64>> {
        self.values.get_mut(&param)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value in force for `hru` during calendar `month` (1-12).
    ///
    /// Panics if the parameter is missing; run [`validate_parameters`]
    /// before simulating.
    pub fn get(&self, param: Param, hru: usize, month: u32) -> f64 {
        let spec = self.spec(param);
        let values = self
            .values
            .get(&param)
            .unwrap_or_else(|| panic!("parameter {param} missing from set"));
        values[spec.index(hru, month)]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Param, &[f64])> {
        self.values.iter().map(|(p, v)| (*p, v.as_slice()))
    }

    /// Clamps every value into its registered range.
    pub fn clamp_to_ranges(&mut self) {
        let registry = self.registry;
        for (param, values) in self.values.iter_mut() {
            let spec = registry.spec(*param);
            for v in values.iter_mut() {
                *v = spec.clamp(*v);
            }
        }
    }

    /// Parses the key-value parameter file format (TOML, one key per
    /// parameter, arrays for monthly, per-HRU and table parameters).
    pub fn from_toml_str(text: &str, n_hru: usize, registry: Registry) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CoreError::Parse {
            line: line_of(text, e.span().map(|s| s.start)),
            message: e.message().to_string(),
        })?;
        let mut set = ParameterSet::new(n_hru, registry);
        for (key, value) in table {
            let param = Param::from_key(&key).ok_or_else(|| CoreError::UnknownField(key.clone()))?;
            let values = match value {
                toml::Value::Float(f) => vec![f],
                toml::Value::Integer(i) => vec![i as f64],
                toml::Value::Array(items) => items
                    .into_iter()
                    .map(|item| match item {
                        toml::Value::Float(f) => Ok(f),
                        toml::Value::Integer(i) => Ok(i as f64),
                        other => Err(CoreError::Config(format!(
                            "parameter {key}: expected a number, found {}",
                            other.type_str()
                        ))),
                    })
                    .collect::<Result<Vec<_>>>()?,
                other => {
                    return Err(CoreError::Config(format!(
                        "parameter {key}: expected a number or array, found {}",
                        other.type_str()
                    )))
                }
            };
            let spec = registry.spec(param);
            // A scalar broadcasts to every entry.
            let values = if values.len() == 1 {
                vec![values[0]; spec.expected_len(n_hru)]
            } else {
                values
            };
            set.set(param, values);
        }
        Ok(set)
    }

    pub fn load(path: &Path, n_hru: usize, registry: Registry) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
        Self::from_toml_str(&text, n_hru, registry)
    }

    pub fn to_toml_string(&self) -> String {
        let mut out = String::new();
        for (param, values) in &self.values {
            let spec = self.spec(*param);
            out.push_str(&format!(
                "# {} [{}, {}] {}\n",
                param.symbol(),
                spec.min,
                spec.max,
                spec.units
            ));
            if values.len() == 1 && spec.expected_len(self.n_hru) == 1 {
                out.push_str(&format!("{} = {:?}\n", param.key(), values[0]));
            } else {
                let items: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
                out.push_str(&format!("{} = [{}]\n", param.key(), items.join(", ")));
            }
        }
        out
    }
}

fn line_of(text: &str, offset: Option<usize>) -> usize {
    offset
        .map(|o| text[..o.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(0)
}

/// One problem found by [`validate_parameters`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Missing {
        param: Param,
    },
    WrongLength {
        param: Param,
        expected: usize,
        found: usize,
    },
    OutOfRange {
        param: Param,
        index: usize,
        value: f64,
        min: f64,
        max: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Missing { param } => write!(f, "{param}: missing"),
            Violation::WrongLength { param, expected, found } => {
                write!(f, "{param}: expected {expected} values, found {found}")
            }
            Violation::OutOfRange {
                param,
                index,
                value,
                min,
                max,
            } => write!(f, "{param}[{index}] = {value} outside [{min}, {max}]"),
        }
    }
}

/// Checks a parameter set for completeness and range compliance.
/// An empty result means the set is usable.
pub fn validate_parameters(set: &ParameterSet) -> Vec<Violation> {
    let mut out = Vec::new();
    for spec in set.registry.specs() {
        let Some(values) = set.values(spec.param) else {
            out.push(Violation::Missing { param: spec.param });
            continue;
        };
        let expected = spec.expected_len(set.n_hru);
        if values.len() != expected {
            out.push(Violation::WrongLength {
                param: spec.param,
                expected,
                found: values.len(),
            });
        }
        for (index, &value) in values.iter().enumerate() {
            // NaN fails `contains`.
            if !spec.contains(value) {
                out.push(Violation::OutOfRange {
                    param: spec.param,
                    index,
                    value,
                    min: spec.min,
                    max: spec.max,
                });
            }
        }
    }
    out
}

/// Default snow-covered-area depletion curve, fsca at SWE fractions 0.0..=1.0.
pub const DEFAULT_DEPLETION_CURVE: [f64; 11] = [0.0, 0.24, 0.4, 0.53, 0.65, 0.74, 0.82, 0.88, 0.93, 0.97, 1.0];

impl ParameterSet {
    /// A complete set of mid-mountain values, uniform across HRUs and
    /// months. Useful as a starting point for synthetic basins and tests.
    pub fn nominal(n_hru: usize, registry: Registry) -> Self {
        let mut set = ParameterSet::new(n_hru, registry);
        let values = [
            (Param::PptRadAdj, 0.02),
            (Param::DdaySlope, 0.45),
            (Param::DdayIntcp, -10.0),
            (Param::RadjSppt, 0.44),
            (Param::RadjWppt, 0.5),
            (Param::TminLapse, 3.0),
            (Param::TmaxLapse, 3.8),
            (Param::TminAdj, 0.0),
            (Param::TmaxAdj, 0.0),
            (Param::TmaxAllsnow, 32.0),
            (Param::TmaxAllrain, 38.0),
            (Param::AdjmixRain, 1.0),
            (Param::SrainIntcp, 0.1),
            (Param::WrainIntcp, 0.05),
            (Param::SnowIntcp, 0.1),
            (Param::JhCoef, 0.014),
            (Param::RadTrncf, 0.5),
            (Param::EmisNoppt, 0.757),
            (Param::CecnCoef, 5.0),
            (Param::PotetSublim, 0.5),
            (Param::DenInit, 0.1),
            (Param::DenMax, 0.6),
            (Param::SettleConst, 0.1),
            (Param::ImpervStorMax, 0.05),
            (Param::SoilmoistMax, 6.0),
            (Param::SmidxCoef, 0.01),
            (Param::SmidxExp, 0.3),
            (Param::SsrcoefSq, 0.1),
            (Param::SsrcoefLin, 0.02),
            (Param::Ssr2gwRate, 0.1),
            (Param::Ssr2gwExp, 1.0),
            (Param::SsrmaxCoef, 5.0),
            (Param::GwflowCoef, 0.05),
            (Param::GwsinkCoef, 0.01),
            (Param::Soil2gwMax, 0.2),
            (Param::SnareaThresh, 10.0),
            (Param::CareaMax, 0.6),
        ];
        for (param, value) in values {
            set.fill(param, value);
        }
        set.set(Param::SnareaCurve, DEFAULT_DEPLETION_CURVE.to_vec());
        set
    }
}
