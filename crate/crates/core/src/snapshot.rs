//! Snapshot files: HRU states and parameters as versioned `key=value` text.
//!
//! ```text
//! snowcast-snapshot 1
//! n_hru=2
//! tmax_allrain_cadence=constant
//! state.0.swe=3.25
//! ...
//! param.smidx_coef=0.01,0.012
//! end
//! ```
//!
//! Numbers are written in shortest round-trip form, so loading a saved
//! snapshot reproduces every value bit for bit. The closing `end` line
//! catches truncated files.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{CoreError, Result};
use crate::params::{Cadence, Param, ParameterSet, Registry};
use crate::state::{HruState, StateField};

const MAGIC: &str = "snowcast-snapshot";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub states: Vec<HruState>,
    pub params: ParameterSet,
}

fn cadence_name(c: Cadence) -> String {
    match c {
        Cadence::Constant => "constant".into(),
        Cadence::Monthly => "monthly".into(),
        Cadence::Table(n) => format!("table{n}"),
    }
}

fn parse_cadence(s: &str) -> Option<Cadence> {
    match s {
        "constant" => Some(Cadence::Constant),
        "monthly" => Some(Cadence::Monthly),
        _ => s.strip_prefix("table")?.parse().ok().map(Cadence::Table),
    }
}

impl Snapshot {
    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC} {VERSION}\n");
        out.push_str(&format!("n_hru={}\n", self.states.len()));
        out.push_str(&format!(
            "tmax_allrain_cadence={}\n",
            cadence_name(self.params.registry().tmax_allrain_cadence)
        ));
        for (h, s) in self.states.iter().enumerate() {
            for field in StateField::ALL {
                out.push_str(&format!("state.{h}.{}={}\n", field.name(), s.get(field)));
            }
        }
        for (param, values) in self.params.iter() {
            let items: Vec<String> = values.iter().map(f64::to_string).collect();
            out.push_str(&format!("param.{}={}\n", param.key(), items.join(",")));
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| CoreError::Parse { line, message };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

        let (_, header) = lines.next().ok_or_else(|| err(1, "empty snapshot".into()))?;
        let version = header
            .strip_prefix(MAGIC)
            .map(str::trim)
            .ok_or_else(|| err(1, format!("expected `{MAGIC} <version>` header")))?;
        if version != VERSION.to_string() {
            return Err(err(1, format!("unsupported snapshot version {version}")));
        }

        let mut n_hru: Option<usize> = None;
        let mut registry = Registry::default();
        let mut states: Vec<HruState> = Vec::new();
        let mut seen_state = HashSet::new();
        let mut params: Option<ParameterSet> = None;
        let mut finished = false;

        for (no, line) in lines.by_ref() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == "end" {
                finished = true;
                break;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(no, format!("expected key=value, found `{line}`")))?;
            let number = |v: &str| -> Result<f64> {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| err(no, format!("{key}: invalid number `{v}`")))
            };
            if key == "n_hru" {
                let n: usize = value.parse().map_err(|_| err(no, format!("invalid n_hru `{value}`")))?;
                n_hru = Some(n);
                states = vec![HruState::default(); n];
            } else if key == "tmax_allrain_cadence" {
                registry.tmax_allrain_cadence =
                    parse_cadence(value).ok_or_else(|| err(no, format!("unknown cadence `{value}`")))?;
            } else if let Some(rest) = key.strip_prefix("state.") {
                let n = n_hru.ok_or_else(|| err(no, "state before n_hru".into()))?;
                let (idx, name) = rest
                    .split_once('.')
                    .ok_or_else(|| err(no, format!("malformed state key `{key}`")))?;
                let h: usize = idx.parse().map_err(|_| err(no, format!("invalid HRU index `{idx}`")))?;
                if h >= n {
                    return Err(err(no, format!("HRU index {h} out of range for {n} HRUs")));
                }
                let field = StateField::from_name(name).ok_or_else(|| CoreError::UnknownField(key.to_string()))?;
                states[h].set(field, number(value)?);
                seen_state.insert((h, field));
            } else if let Some(name) = key.strip_prefix("param.") {
                let n = n_hru.ok_or_else(|| err(no, "parameter before n_hru".into()))?;
                let param = Param::from_key(name).ok_or_else(|| CoreError::UnknownField(key.to_string()))?;
                let values = value.split(',').map(number).collect::<Result<Vec<f64>>>()?;
                params
                    .get_or_insert_with(|| ParameterSet::new(n, registry))
                    .set(param, values);
            } else {
                return Err(CoreError::UnknownField(key.to_string()));
            }
        }

        let last = text.lines().count();
        if !finished {
            return Err(err(last, "snapshot truncated: missing `end`".into()));
        }
        let n = n_hru.ok_or_else(|| err(last, "missing n_hru".into()))?;
        for h in 0..n {
            for field in StateField::ALL {
                if !seen_state.contains(&(h, field)) {
                    return Err(err(last, format!("missing state.{h}.{}", field.name())));
                }
            }
        }
        let mut params = params.unwrap_or_else(|| ParameterSet::new(n, registry));
        if params.registry() != registry {
            // cadence line came after the parameters
            let mut rebuilt = ParameterSet::new(n, registry);
            for (p, v) in params.iter() {
                rebuilt.set(p, v.to_vec());
            }
            params = rebuilt;
        }
        Ok(Snapshot { states, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| CoreError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(n: usize) -> Snapshot {
        let states = (0..n)
            .map(|h| HruState {
                swe: 1.0 / 3.0 + h as f64,
                sice: 1.0 / 3.0 + h as f64 - 0.01,
                sliq: 0.01,
                depth: 1.7e-3,
                heat_deficit: 12.345678901234567,
                pack_temp: 27.1,
                ssz: std::f64::consts::PI,
                sgw: 1e-300,
                ..HruState::default()
            })
            .collect();
        Snapshot {
            states,
            params: ParameterSet::nominal(n, Registry::default()),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let snap = sample(3);
        let back = Snapshot::from_text(&snap.to_text()).unwrap();
        assert_eq!(back, snap);
    }

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.txt");
        let snap = sample(2);
        snap.save(&path).unwrap();
        assert_eq!(Snapshot::load(&path).unwrap(), snap);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let text = sample(3).to_text();
        let cut: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
        match Snapshot::from_text(&cut) {
            Err(CoreError::Parse { message, .. }) => assert!(message.contains("truncated")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_field_is_named() {
        let text = sample(1).to_text().replace("state.0.sgw=", "state.0.bogus=");
        match Snapshot::from_text(&text) {
            Err(CoreError::UnknownField(f)) => assert_eq!(f, "state.0.bogus"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_number_reports_line() {
        let text = sample(1).to_text().replace("state.0.swe=", "state.0.swe=x");
        match Snapshot::from_text(&text) {
            Err(CoreError::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn monthly_cadence_survives() {
        let registry = Registry {
            tmax_allrain_cadence: Cadence::Monthly,
        };
        let mut snap = sample(1);
        snap.params = ParameterSet::nominal(1, registry);
        let back = Snapshot::from_text(&snap.to_text()).unwrap();
        assert_eq!(back.params.registry(), registry);
        assert_eq!(back.params.values(Param::TmaxAllrain).unwrap().len(), 12);
    }

    proptest! {
        #[test]
        fn arbitrary_values_round_trip(v in proptest::collection::vec(any::<f64>(), 16)) {
            let mut snap = sample(1);
            for (field, x) in StateField::ALL.iter().zip(&v) {
                snap.states[0].set(*field, if x.is_nan() { 0.0 } else { *x });
            }
            let back = Snapshot::from_text(&snap.to_text()).unwrap();
            prop_assert_eq!(back, snap);
        }
    }
}
