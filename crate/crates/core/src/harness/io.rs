//! Persisted results: rates CSV, fit JSON, sweep CSV and estimator JSON.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Result;

use super::surface::{RateSurface, SurfacePoint};
use super::sweep::{SweepFailure, SweepRecord};

pub const RATES_HEADER: [&str; 5] = ["l1", "l2", "eF", "stderr", "m"];
pub const SWEEP_HEADER: [&str; 7] = ["method", "epsilon", "error_sq", "cost", "walltime_s", "seed", "replicate"];

fn write_rows<T: Serialize, W: Write>(rows: &[T], header: &[&str], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_rates_csv<W: Write>(surface: &RateSurface, out: W) -> Result<()> {
    write_rows(&surface.points, &RATES_HEADER, out)
}

pub fn read_rates_csv(path: &Path) -> Result<RateSurface> {
    let points: Vec<SurfacePoint> = read_rows(path)?;
    Ok(RateSurface { points, problem: serde_json::Value::Null })
}

/// Sweep records; with `zero_walltime` the timing column is written as 0 so
/// the file depends only on the configuration and seed.
pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], zero_walltime: bool, out: W) -> Result<()> {
    if zero_walltime {
        let rows: Vec<SweepRecord> = records
            .iter()
            .map(|r| SweepRecord { walltime_s: 0.0, ..r.clone() })
            .collect();
        write_rows(&rows, &SWEEP_HEADER, out)
    } else {
        write_rows(records, &SWEEP_HEADER, out)
    }
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    read_rows(path)
}

/// `method,epsilon,replicate,walltime_s`.
pub fn write_timings_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let rows: Vec<_> = records
        .iter()
        .map(|r| (r.method, r.epsilon, r.replicate, r.walltime_s))
        .collect();
    write_rows(&rows, &["method", "epsilon", "replicate", "walltime_s"], out)
}

pub fn write_failures_csv<W: Write>(failures: &[SweepFailure], out: W) -> Result<()> {
    write_rows(failures, &["method", "epsilon", "seed", "replicate", "message"], out)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Creates `path` and writes to it through `f`.
pub fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::Method;

    #[test]
    fn rates_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rates.csv");
        let surface = RateSurface {
            points: vec![
                SurfacePoint { l1: 0, l2: 1, ef: 0.1 + 0.2, stderr: 1e-300, m: 1000 },
                SurfacePoint { l1: 3, l2: 0, ef: std::f64::consts::PI, stderr: 0.0, m: 7 },
            ],
            problem: serde_json::Value::Null,
        };
        write_file(&path, |w| write_rates_csv(&surface, w)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("l1,l2,eF,stderr,m\n"));
        assert_eq!(read_rates_csv(&path).unwrap(), surface);
    }

    #[test]
    fn sweep_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let records = vec![
            SweepRecord { method: Method::Mimc2, epsilon: 0.125, error_sq: 1.0 / 3.0, cost: 1234.5, walltime_s: 0.25, seed: u64::MAX, replicate: 2 },
            SweepRecord { method: Method::Mlmc, epsilon: 0.5, error_sq: 0.0, cost: 1.0, walltime_s: 1e-6, seed: 0, replicate: 0 },
        ];
        write_file(&path, |w| write_sweep_csv(&records, false, w)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("method,epsilon,error_sq,cost,walltime_s,seed,replicate\nMIMC2,"));
        assert_eq!(read_sweep_csv(&path).unwrap(), records);
        write_file(&path, |w| write_sweep_csv(&records, true, w)).unwrap();
        assert!(read_sweep_csv(&path).unwrap().iter().all(|r| r.walltime_s == 0.0));
    }

    #[test]
    fn header_only_files_parse() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        write_file(&path, |w| write_sweep_csv(&[], false, w)).unwrap();
        assert!(read_sweep_csv(&path).unwrap().is_empty());
    }
}
