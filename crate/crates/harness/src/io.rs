//! Forcing and observation CSV files.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use snowcast_core::{Basin, DailyForcing};

use crate::error::{io_err, HarnessError, Result};

const DATE_FORMAT: &str = "%Y-%m-%d";

fn row_err(path: &Path, row: u64, message: impl Into<String>) -> HarnessError {
    HarnessError::Row {
        path: path.to_path_buf(),
        row,
        message: message.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file))
}

fn check_fields(path: &Path, row: u64, record: &csv::StringRecord, n: usize) -> Result<()> {
    if record.len() != n {
        return Err(row_err(path, row, format!("{} fields, expected {n}", record.len())));
    }
    Ok(())
}

fn parse_date(path: &Path, row: u64, text: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(text, DATE_FORMAT).map_err(|e| row_err(path, row, format!("bad date {text:?}: {e}")))
}

fn parse_num(path: &Path, row: u64, column: &str, text: &str) -> Result<f64> {
    let v: f64 = text
        .parse()
        .map_err(|_| row_err(path, row, format!("{column}: not a number: {text:?}")))?;
    if !v.is_finite() {
        return Err(row_err(path, row, format!("{column}: non-finite value")));
    }
    Ok(v)
}

/// Reads `date,tmax,tmin,<hru id>...`. Row numbers in errors count the
/// header as row 1.
pub fn load_forcing_csv(path: &Path, basin: &Basin) -> Result<Vec<DailyForcing>> {
    let mut rdr = reader(path)?;
    let header = rdr.headers()?.clone();
    let expected: Vec<String> = ["date", "tmax", "tmin"]
        .into_iter()
        .map(String::from)
        .chain(basin.hrus.iter().map(|h| h.id.to_string()))
        .collect();
    let found: Vec<&str> = header.iter().collect();
    if found != expected {
        return Err(row_err(
            path,
            1,
            format!("header {:?}, expected {:?}", found.join(","), expected.join(",")),
        ));
    }
    let mut out: Vec<DailyForcing> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line());
        check_fields(path, row, &record, expected.len())?;
        let date = parse_date(path, row, &record[0])?;
        if let Some(prev) = out.last() {
            let next = prev.date.succ_opt().expect("date in range");
            if date != next {
                let what = if date > next {
                    format!("missing day {next}")
                } else {
                    format!("date {date} out of order after {}", prev.date)
                };
                return Err(row_err(path, row, what));
            }
        }
        let tmax = parse_num(path, row, "tmax", &record[1])?;
        let tmin = parse_num(path, row, "tmin", &record[2])?;
        if tmax < tmin {
            return Err(row_err(path, row, format!("tmax {tmax} below tmin {tmin}")));
        }
        let mut precip = Vec::with_capacity(basin.n_hru());
        for (i, text) in record.iter().enumerate().skip(3) {
            let p = parse_num(path, row, &expected[i], text)?;
            if p < 0.0 {
                return Err(row_err(
                    path,
                    row,
                    format!("negative precipitation {p} for HRU {}", expected[i]),
                ));
            }
            precip.push(p);
        }
        out.push(DailyForcing {
            date,
            tmax,
            tmin,
            precip,
        });
    }
    if out.is_empty() {
        return Err(row_err(path, 2, "no data rows"));
    }
    Ok(out)
}

pub fn write_forcing_csv(path: &Path, basin: &Basin, forcing: &[DailyForcing]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["date".to_string(), "tmax".into(), "tmin".into()];
    header.extend(basin.hrus.iter().map(|h| h.id.to_string()));
    w.write_record(&header)?;
    for f in forcing {
        let mut row = vec![
            f.date.format(DATE_FORMAT).to_string(),
            f.tmax.to_string(),
            f.tmin.to_string(),
        ];
        row.extend(f.precip.iter().map(|p| p.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Per-day SWE observations, one slot per HRU position; days without a
/// row stay `None`.
pub fn load_swe_observations(path: &Path, basin: &Basin, dates: &[NaiveDate]) -> Result<Vec<Vec<Option<f64>>>> {
    let index: BTreeMap<NaiveDate, usize> = dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();
    let mut out = vec![vec![None; basin.n_hru()]; dates.len()];
    let mut rdr = reader(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if header != ["date", "hru_id", "swe"] {
        return Err(row_err(
            path,
            1,
            format!("header {:?}, expected \"date,hru_id,swe\"", header.join(",")),
        ));
    }
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line());
        check_fields(path, row, &record, 3)?;
        let date = parse_date(path, row, &record[0])?;
        let id: u32 = record[1]
            .parse()
            .map_err(|_| row_err(path, row, format!("bad HRU id {:?}", &record[1])))?;
        let hru = basin
            .hru_position(id)
            .ok_or_else(|| row_err(path, row, format!("unknown HRU id {id}")))?;
        let swe = parse_num(path, row, "swe", &record[2])?;
        if swe < 0.0 {
            return Err(row_err(path, row, format!("negative SWE {swe}")));
        }
        if let Some(&day) = index.get(&date) {
            out[day][hru] = Some(swe);
        }
    }
    Ok(out)
}

/// Per-day basin flow observations, cfs.
pub fn load_flow_observations(path: &Path, dates: &[NaiveDate]) -> Result<Vec<Option<f64>>> {
    let index: BTreeMap<NaiveDate, usize> = dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();
    let mut out = vec![None; dates.len()];
    let mut rdr = reader(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if header != ["date", "flow"] {
        return Err(row_err(
            path,
            1,
            format!("header {:?}, expected \"date,flow\"", header.join(",")),
        ));
    }
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line());
        check_fields(path, row, &record, 2)?;
        let date = parse_date(path, row, &record[0])?;
        let flow = parse_num(path, row, "flow", &record[1])?;
        if flow < 0.0 {
            return Err(row_err(path, row, format!("negative flow {flow}")));
        }
        if let Some(&day) = index.get(&date) {
            out[day] = Some(flow);
        }
    }
    Ok(out)
}

pub fn write_swe_observations(path: &Path, basin: &Basin, dates: &[NaiveDate], obs: &[Vec<Option<f64>>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["date", "hru_id", "swe"])?;
    for (date, day) in dates.iter().zip(obs) {
        for (h, v) in basin.hrus.iter().zip(day) {
            if let Some(v) = v {
                w.write_record([date.format(DATE_FORMAT).to_string(), h.id.to_string(), v.to_string()])?;
            }
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn write_flow_observations(path: &Path, dates: &[NaiveDate], obs: &[Option<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["date", "flow"])?;
    for (date, v) in dates.iter().zip(obs) {
        if let Some(v) = v {
            w.write_record([date.format(DATE_FORMAT).to_string(), v.to_string()])?;
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}
