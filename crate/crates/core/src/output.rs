//! CSV and manifest writers. Floats carry 17 significant digits so every
//! value round-trips exactly.

use std::io::{self, Write};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::harness::{DensitySeries, ResultTable};
use crate::oracle::OraclePath;
use crate::scheme::TrajectoryRecord;

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `t,K_hat,mean_h,mean_X,var_X`
pub fn write_path_csv<W: Write>(record: &TrajectoryRecord, mut out: W) -> io::Result<()> {
    writeln!(out, "t,K_hat,mean_h,mean_X,var_X")?;
    for k in 0..record.times.len() {
        writeln!(
            out,
            "{},{},{},{},{}",
            num(record.times[k]),
            num(record.k_hat[k]),
            num(record.mean_h[k]),
            num(record.mean_x[k]),
            num(record.var_x[k])
        )?;
    }
    Ok(())
}

/// `step,t,particle,X` in long format.
pub fn write_snapshots_csv<W: Write>(record: &TrajectoryRecord, mut out: W) -> io::Result<()> {
    writeln!(out, "step,t,particle,X")?;
    for s in &record.snapshots {
        for (i, x) in s.x.iter().enumerate() {
            writeln!(out, "{},{},{},{}", s.step, num(s.time), i, num(*x))?;
        }
    }
    Ok(())
}

/// `t,K_exact,meanY`
pub fn write_oracle_csv<W: Write>(path: &OraclePath, mean_y: &[f64], mut out: W) -> io::Result<()> {
    writeln!(out, "t,K_exact,meanY")?;
    for ((t, k), m) in path.times.iter().zip(&path.k).zip(mean_y) {
        writeln!(out, "{},{},{}", num(*t), num(*k), num(*m))?;
    }
    Ok(())
}

/// `t,X_exact_<i>,...` for the coupled particles.
pub fn write_oracle_paths_csv<W: Write>(path: &OraclePath, mut out: W) -> io::Result<()> {
    write!(out, "t")?;
    for i in &path.particles {
        write!(out, ",X_exact_{i}")?;
    }
    writeln!(out)?;
    for k in 0..path.times.len() {
        write!(out, "{}", num(path.times[k]))?;
        for x in &path.x {
            write!(out, ",{}", num(x[k]))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// `n,N,L,E_hat,runtime_sec`
pub fn write_convergence_csv<W: Write>(table: &ResultTable, mut out: W) -> io::Result<()> {
    writeln!(out, "n,N,L,E_hat,runtime_sec")?;
    for r in &table.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.steps,
            r.particles,
            r.replications,
            num(r.e_hat),
            num(r.runtime_sec)
        )?;
    }
    Ok(())
}

/// `t,k_hat,k_exact`; `NaN` where no reference exists.
pub fn write_density_csv<W: Write>(series: &DensitySeries, mut out: W) -> io::Result<()> {
    writeln!(out, "t,k_hat,k_exact")?;
    for k in 0..series.times.len() {
        writeln!(
            out,
            "{},{},{}",
            num(series.times[k]),
            num(series.k_hat[k]),
            num(series.k_exact[k])
        )?;
    }
    Ok(())
}

/// Everything needed to reproduce a run. `config` carries the resolved seed,
/// so the manifest itself can be passed back as `--config`.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: ExperimentConfig,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub outputs: Vec<String>,
    pub started_unix_sec: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &ExperimentConfig, seed: Option<u64>, outputs: &[&str]) -> Self {
        let mut config = config.clone();
        if seed.is_some() {
            config.seed = seed;
        }
        RunManifest {
            tool: "meanreflect",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config,
            seed,
            threads: crate::parallel::threads_from_env(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            started_unix_sec: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            notes: Vec::new(),
        }
    }
}
