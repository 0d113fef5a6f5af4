use std::path::PathBuf;

use snowcast::io::load_forcing_csv;
use snowcast::HarnessError;
use snowcast_core::{Basin, HruGeometry, ModelConfig};

fn basin() -> Basin {
    let hrus = [11, 12, 13]
        .into_iter()
        .enumerate()
        .map(|(i, id)| HruGeometry {
            id,
            area: 1000.0,
            elevation: 5000.0 + 1000.0 * i as f64,
            slope: 0.1,
            latitude: 40.0,
            summer_cover: 0.5,
            winter_cover: 0.3,
            impervious_fraction: 0.0,
        })
        .collect();
    Basin::new(hrus, 0, &ModelConfig::default()).unwrap()
}

fn write(dir: &tempfile::TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("forcing.csv");
    std::fs::write(&path, text).unwrap();
    path
}

const GOOD: &str = "date,tmax,tmin,11,12,13
2021-01-01,40.5,20.0,0.1,0.2,0.3
2021-01-02,35.0,18.5,0,0,0
2021-01-03,33.0,30.0,1.25,1.5,1.75
";

#[test]
fn well_formed_file_loads() {
    let dir = tempfile::tempdir().unwrap();
    let f = load_forcing_csv(&write(&dir, GOOD), &basin()).unwrap();
    assert_eq!(f.len(), 3);
    assert_eq!(f[0].date.to_string(), "2021-01-01");
    assert_eq!((f[0].tmax, f[0].tmin), (40.5, 20.0));
    assert_eq!(f[2].precip, vec![1.25, 1.5, 1.75]);
}

#[test]
fn round_trip_through_writer() {
    let dir = tempfile::tempdir().unwrap();
    let b = basin();
    let f = load_forcing_csv(&write(&dir, GOOD), &b).unwrap();
    let out = dir.path().join("copy.csv");
    snowcast::io::write_forcing_csv(&out, &b, &f).unwrap();
    assert_eq!(load_forcing_csv(&out, &b).unwrap(), f);
}

#[test]
fn negative_precipitation_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let text = GOOD.replace("0,0,0", "0,-0.1,0");
    let err = load_forcing_csv(&write(&dir, &text), &basin()).unwrap_err();
    assert!(matches!(err, HarnessError::Row { row: 3, .. }), "{err}");
    let msg = err.to_string();
    assert!(msg.contains("row 3") && msg.contains("negative precipitation"), "{msg}");
}

#[test]
fn date_gap_names_the_missing_day() {
    let dir = tempfile::tempdir().unwrap();
    let text = GOOD
        .replace("2021-01-02", "2021-01-03")
        .replace("2021-01-03,33", "2021-01-04,33");
    let msg = load_forcing_csv(&write(&dir, &text), &basin()).unwrap_err().to_string();
    assert!(msg.contains("missing day 2021-01-02"), "{msg}");
}

#[test]
fn out_of_order_dates_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = GOOD.replace("2021-01-03", "2020-12-31");
    let msg = load_forcing_csv(&write(&dir, &text), &basin()).unwrap_err().to_string();
    assert!(msg.contains("out of order"), "{msg}");
}

#[test]
fn bad_header_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for header in [
        "date,tmax,tmin,11,12",
        "date,tmin,tmax,11,12,13",
        "day,tmax,tmin,11,12,14",
    ] {
        let text = GOOD.replacen("date,tmax,tmin,11,12,13", header, 1);
        let err = load_forcing_csv(&write(&dir, &text), &basin()).unwrap_err();
        assert!(matches!(err, HarnessError::Row { row: 1, .. }), "{header}: {err}");
    }
}

#[test]
fn bad_values_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for (from, to, needle) in [
        ("40.5,20.0", "10.0,20.0", "below tmin"),
        ("0.1,0.2,0.3", "0.1,abc,0.3", "not a number"),
        ("0.1,0.2,0.3", "0.1,0.2", "fields"),
        ("2021-01-01", "2021-13-01", "bad date"),
    ] {
        let msg = load_forcing_csv(&write(&dir, &GOOD.replace(from, to)), &basin())
            .unwrap_err()
            .to_string();
        assert!(msg.contains("row 2") && msg.contains(needle), "{msg}");
    }
}

#[test]
fn empty_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    assert!(load_forcing_csv(&write(&dir, "date,tmax,tmin,11,12,13\n"), &basin()).is_err());
    let err = load_forcing_csv(&dir.path().join("nope.csv"), &basin()).unwrap_err();
    assert!(matches!(err, HarnessError::Io { .. }));
}

fn dates() -> Vec<chrono::NaiveDate> {
    let start = chrono::NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();
    (0..3).map(|i| start + chrono::Days::new(i)).collect()
}

#[test]
fn swe_observations_fill_by_date_and_id() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("swe.csv");
    std::fs::write(
        &path,
        "date,hru_id,swe\n2021-01-02,13,4.5\n2021-01-01,11,0\n2020-06-01,12,9\n",
    )
    .unwrap();
    let obs = snowcast::io::load_swe_observations(&path, &basin(), &dates()).unwrap();
    assert_eq!(obs[0], vec![Some(0.0), None, None]);
    assert_eq!(obs[1], vec![None, None, Some(4.5)]);
    assert_eq!(obs[2], vec![None; 3]);

    for (body, needle) in [
        ("2021-01-01,99,1\n", "unknown HRU id 99"),
        ("2021-01-01,11,-1\n", "negative SWE"),
        ("2021-01-01,11\n", "fields"),
    ] {
        std::fs::write(&path, format!("date,hru_id,swe\n{body}")).unwrap();
        let msg = snowcast::io::load_swe_observations(&path, &basin(), &dates())
            .unwrap_err()
            .to_string();
        assert!(msg.contains("row 2") && msg.contains(needle), "{msg}");
    }
}

#[test]
fn flow_observations_fill_by_date() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flow.csv");
    std::fs::write(&path, "date,flow\n2021-01-03,12.5\n").unwrap();
    let obs = snowcast::io::load_flow_observations(&path, &dates()).unwrap();
    assert_eq!(obs, vec![None, None, Some(12.5)]);
    std::fs::write(&path, "date,flow\n2021-01-03,-2\n").unwrap();
    assert!(snowcast::io::load_flow_observations(&path, &dates()).is_err());
    std::fs::write(&path, "date,cfs\n").unwrap();
    assert!(snowcast::io::load_flow_observations(&path, &dates()).is_err());
}
