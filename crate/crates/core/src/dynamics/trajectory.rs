use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::cumulant::CumulantState;
use super::integrator::StepStats;
use super::meanfield::MeanFieldState;
use super::Method;
use crate::error::{Error, Result};

/// Full state at one instant, for snapshot files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StateSnapshot {
    MeanField(MeanFieldState),
    Cumulant(CumulantState),
}

impl StateSnapshot {
    pub fn time(&self) -> f64 {
        match self {
            Self::MeanField(s) => s.time,
            Self::Cumulant(s) => s.time,
        }
    }

    pub fn alpha(&self) -> &[C64] {
        match self {
            Self::MeanField(s) => &s.alpha,
            Self::Cumulant(s) => &s.alpha,
        }
    }
}

/// One sampled instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: f64,
    /// Site occupations `<n_j>` in position order.
    pub occupations: Vec<f64>,
    pub total: f64,
    /// Coherent amplitudes `<a_j>`; empty when loaded from CSV.
    pub alpha: Vec<C64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegrationDiagnostics {
    pub steps: StepStats,
    /// Samples in which a negative cumulant occupation was clamped to zero.
    pub clamped_samples: u64,
    /// Fraction of the final photon number within three sites of either edge.
    pub edge_fraction: f64,
    pub boundary_contaminated: bool,
}

/// Time-ordered samples of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub method: Method,
    pub sites: usize,
    pub samples: Vec<Sample>,
    pub snapshots: Vec<StateSnapshot>,
    pub final_state: Option<StateSnapshot>,
    pub diagnostics: IntegrationDiagnostics,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    pub fn totals(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.total).collect()
    }

    /// Samples with `time >= start`.
    pub fn window(&self, start: f64) -> &[Sample] {
        let first = self.samples.partition_point(|s| s.time < start);
        &self.samples[first..]
    }

    /// Spacing of a uniform grid, or `None` if the window is not uniform.
    pub fn uniform_spacing(samples: &[Sample]) -> Option<f64> {
        if samples.len() < 2 {
            return None;
        }
        let span = samples[samples.len() - 1].time - samples[0].time;
        let dt = span / (samples.len() - 1) as f64;
        let ok = samples.windows(2).all(|w| ((w[1].time - w[0].time) - dt).abs() <= 1e-6 * dt);
        ok.then_some(dt)
    }

    /// CSV with header `time,N,n_-h,...,n_h`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let h = (self.sites as i64 - 1) / 2;
        let mut line = String::from("time,N");
        for j in -h..=h {
            write!(line, ",n_{j}").unwrap();
        }
        writeln!(out, "{line}")?;
        for s in &self.samples {
            line.clear();
            write!(line, "{},{}", s.time, s.total).unwrap();
            for n in &s.occupations {
                write!(line, ",{n}").unwrap();
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Read a trajectory CSV produced by [`write_csv`](Self::write_csv).
    /// Amplitudes are not part of the CSV and stay empty.
    pub fn read_csv<R: BufRead>(input: R, method: Method) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Data("empty trajectory file".into()))??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.len() < 3 || cols[0] != "time" || cols[1] != "N" {
            return Err(Error::Data(format!("unexpected trajectory header: {header}")));
        }
        let sites = cols.len() - 2;
        let mut samples = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Data(format!("line {}: {e}", lineno + 2)))?;
            if vals.len() != sites + 2 {
                return Err(Error::Data(format!("line {}: expected {} columns, got {}", lineno + 2, sites + 2, vals.len())));
            }
            samples.push(Sample { time: vals[0], total: vals[1], occupations: vals[2..].to_vec(), alpha: Vec::new() });
        }
        if samples.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(Error::Data("sample times must be strictly increasing".into()));
        }
        Ok(Self { method, sites, samples, snapshots: Vec::new(), final_state: None, diagnostics: IntegrationDiagnostics::default() })
    }

    /// Snapshot records as a JSON array.
    pub fn write_snapshots<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer(out, &self.snapshots)?;
        Ok(())
    }

    pub fn read_snapshots<R: std::io::Read>(input: R) -> Result<Vec<StateSnapshot>> {
        Ok(serde_json::from_reader(input)?)
    }
}
