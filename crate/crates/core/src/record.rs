//! Trajectory rows, CSV/NDJSON sinks and run manifests.
//!
//! CSV column order is fixed by [`SampleRow`]'s field order:
//! `time, mass, hamiltonian, quadratic_energy, h1, h2, h_eps, v_norm,
//! windowed_norm, driver_norm, monitor_tripped, boundary_amplitude, valid`.
//! Quantities that do not apply to a run are left empty.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SampleRow {
    pub time: f64,
    pub mass: f64,
    pub hamiltonian: Option<f64>,
    pub quadratic_energy: Option<f64>,
    pub h1: Option<f64>,
    pub h2: Option<f64>,
    pub h_eps: Option<f64>,
    pub v_norm: Option<f64>,
    pub windowed_norm: f64,
    pub driver_norm: Option<f64>,
    pub monitor_tripped: Option<bool>,
    pub boundary_amplitude: f64,
    pub valid: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryRecord {
    pub run_id: String,
    pub config_hash: String,
    pub epsilon: Option<f64>,
    pub path: u64,
    pub rows: Vec<SampleRow>,
    pub increment_checksum: Option<String>,
    pub monitor_trip_time: Option<f64>,
    /// True when the run stopped early (interrupt or halting trip).
    pub truncated: bool,
}

impl TrajectoryRecord {
    pub fn new(run_id: String, config_hash: String, epsilon: Option<f64>, path: u64) -> Self {
        Self {
            run_id,
            config_hash,
            epsilon,
            path,
            rows: Vec::new(),
            increment_checksum: None,
            monitor_trip_time: None,
            truncated: false,
        }
    }

    /// Appends a row, keeping times strictly increasing.
    pub fn push(&mut self, row: SampleRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if !(row.time > last.time) {
                return Err(Error::InvalidParameter(format!(
                    "row time {} does not follow {}",
                    row.time, last.time
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }
}

/// CSV writer flushed after every row so partial runs survive interrupts.
pub struct CsvSink {
    writer: csv::Writer<File>,
    path: PathBuf,
}

impl CsvSink {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self {
            writer: csv::Writer::from_path(path)?,
            path: path.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&mut self, row: &SampleRow) -> Result<()> {
        self.writer.serialize(row)?;
        self.writer.flush()?;
        Ok(())
    }
}

pub struct NdjsonSink {
    writer: BufWriter<File>,
    path: PathBuf,
}

impl NdjsonSink {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self {
            writer: BufWriter::new(File::create(path)?),
            path: path.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write<T: Serialize>(&mut self, value: &T) -> Result<()> {
        serde_json::to_writer(&mut self.writer, value)?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub seed: u64,
    pub code_version: &'static str,
    pub wall_time_seconds: f64,
    pub outputs: Vec<PathBuf>,
    pub interrupted: bool,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path)?;
        serde_json::to_writer_pretty(BufWriter::new(file), self)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_leaves_missing_cells_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let mut sink = CsvSink::create(&path).unwrap();
        sink.write(&SampleRow {
            time: 0.5,
            mass: 2.0,
            windowed_norm: 1.0,
            valid: true,
            ..Default::default()
        })
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "time,mass,hamiltonian,quadratic_energy,h1,h2,h_eps,v_norm,windowed_norm,driver_norm,monitor_tripped,boundary_amplitude,valid"
        );
        assert_eq!(lines.next().unwrap(), "0.5,2.0,,,,,,,1.0,,,0.0,true");
    }

    #[test]
    fn rows_must_increase() {
        let mut r = TrajectoryRecord::new("r".into(), "h".into(), None, 0);
        r.push(SampleRow { time: 0.0, ..Default::default() }).unwrap();
        assert!(r.push(SampleRow { time: 0.0, ..Default::default() }).is_err());
    }
}
