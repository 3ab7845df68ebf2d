//! `meanreflect` command line.
//!
//! Exit codes: 0 on success, 1 when the configuration is invalid, 2 on
//! runtime errors and usage errors.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::config::{parse_config, ConfigError, ExperimentConfig};
use crate::harness::{convergence_sweep, density_series, skorokhod_report, HarnessError};
use crate::model::{validate, ModelCase};
use crate::oracle::{self, OracleError};
use crate::output::{self, RunManifest};
use crate::parallel::{build_pool, threads_from_env};
use crate::scheme::{simulate, RecordOptions, SchemeError};
use crate::stochastics::NoiseRecord;

#[derive(Parser, Debug)]
#[command(name = "meanreflect", version, about = "Mean-reflected jump SDEs by interacting particles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the particle scheme once and write path.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write every Gaussian, jump count and mark sum to noise.csv.
        #[arg(long)]
        dump_noise: bool,
    },
    /// Write the closed-form reflection and, optionally, coupled exact paths.
    Oracle {
        #[arg(long, value_enum)]
        case: CaseArg,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of coupled exact paths (particles 0..k) to write.
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Estimate the L2 error over the steps × particles grid of the config.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the density of the reflection along one run.
    Density {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Check a configuration without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CaseArg {
    #[value(name = "i")]
    I,
    #[value(name = "ii")]
    Ii,
    #[value(name = "iii")]
    Iii,
}

impl CaseArg {
    fn id(self) -> &'static str {
        match self {
            CaseArg::I => "i",
            CaseArg::Ii => "ii",
            CaseArg::Iii => "iii",
        }
    }
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<SchemeError> for Failure {
    fn from(e: SchemeError) -> Self {
        match e {
            SchemeError::InvalidModel(_) => Failure::Invalid(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Scheme(s) => s.into(),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// Parses `argv` (program name first), runs the subcommand inside a pool
/// sized by `MEANREFLECT_THREADS`, and returns the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let pool = build_pool(threads_from_env());
    match pool.install(|| run(cli.command)) {
        Ok(()) => 0,
        Err(f) => {
            match &f {
                Failure::Invalid(m) | Failure::Runtime(m) => eprintln!("meanreflect: {m}"),
            }
            f.code()
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate {
            config,
            seed,
            out,
            dump_noise,
        } => run_simulate(&config, seed, &out, dump_noise),
        Command::Oracle {
            case,
            config,
            out,
            seed,
            paths,
        } => run_oracle(case, &config, &out, seed, paths),
        Command::Convergence { config, seed, out } => run_convergence(&config, seed, &out),
        Command::Density { config, seed, out } => run_density(&config, seed, &out),
        Command::Validate { config } => run_validate(&config),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    let mut f = create(dir, "manifest.json")?;
    serde_json::to_writer_pretty(&mut f, manifest).map_err(|e| Failure::Runtime(e.to_string()))?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<(), Failure> {
    let mut f = create(dir, name)?;
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| Failure::Runtime(e.to_string()))?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

fn single_run_notes(cfg: &ExperimentConfig) -> Vec<String> {
    let mut notes = Vec::new();
    if cfg.steps.values().len() > 1 || cfg.particles.values().len() > 1 {
        notes.push(format!(
            "single run uses the first entries: n = {}, N = {}",
            cfg.steps.values()[0],
            cfg.particles.values()[0]
        ));
    }
    notes
}

fn run_simulate(config: &Path, seed: Option<u64>, out: &Path, dump_noise: bool) -> Result<(), Failure> {
    let cfg = parse_config(config)?;
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let mut outputs = vec!["path.csv", "summary.json"];
    if cfg.snapshot_stride.is_some() {
        outputs.push("snapshots.csv");
    }
    if dump_noise {
        outputs.push("noise.csv");
    }
    let mut manifest = RunManifest::new("simulate", &cfg, Some(seed), &outputs);
    manifest.notes = single_run_notes(&cfg);
    write_manifest(out, &manifest)?;

    let (model, constraint) = cfg.build()?;
    let grid = cfg.grid();
    let options = RecordOptions {
        snapshot_stride: cfg.snapshot_stride,
        ..RecordOptions::default()
    };
    let record = simulate(&model, &constraint, grid, cfg.particles.values()[0], seed, &options)?;

    let mut f = create(out, "path.csv")?;
    output::write_path_csv(&record, &mut f)?;
    f.flush()?;
    if cfg.snapshot_stride.is_some() {
        let mut f = create(out, "snapshots.csv")?;
        output::write_snapshots_csv(&record, &mut f)?;
        f.flush()?;
    }
    if dump_noise {
        let mut f = create(out, "noise.csv")?;
        record.noise.write_csv(&mut f)?;
        f.flush()?;
    }
    let report = skorokhod_report(&record);
    let k_end = *record.k_hat.last().expect("at least one entry");
    let reference = oracle::reference_k(&model.case, &grid).ok().map(|p| p.k[grid.steps]);
    write_json(
        out,
        "summary.json",
        &json!({
            "K_hat_T": k_end,
            "K_reference_T": reference,
            "skorokhod": report,
        }),
    )?;
    match reference {
        Some(r) => println!("K_hat(T) = {k_end:.6}  reference K(T) = {r:.6}"),
        None => println!("K_hat(T) = {k_end:.6}"),
    }
    Ok(())
}

fn run_oracle(case: CaseArg, config: &Path, out: &Path, seed: Option<u64>, paths: Option<usize>) -> Result<(), Failure> {
    let cfg = parse_config(config)?;
    if cfg.model.case_id() != case.id() {
        return Err(Failure::Invalid(format!(
            "--case {} does not match the configured model case {}",
            case.id(),
            cfg.model.case_id()
        )));
    }
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let mut outputs = vec!["oracle.csv", "oracle.json"];
    let coupled = paths.filter(|&m| m > 0);
    if coupled.is_some() && case != CaseArg::Iii {
        outputs.push("oracle_paths.csv");
    }
    write_manifest(out, &RunManifest::new("oracle", &cfg, Some(seed), &outputs))?;

    let (model, _) = cfg.build()?;
    let grid = cfg.grid();
    let path = oracle::reference_k(&model.case, &grid)?;
    let mean_y: Vec<f64> = path
        .times
        .iter()
        .map(|&t| oracle::model_mean_y(&model.case, t).unwrap_or(f64::NAN))
        .collect();
    let mut f = create(out, "oracle.csv")?;
    output::write_oracle_csv(&path, &mean_y, &mut f)?;
    f.flush()?;
    let mut warnings = path.warnings.clone();

    if let Some(m) = coupled {
        if matches!(model.case, ModelCase::CaseIII(_)) {
            warnings.push("no exact paths exist for case iii; --paths ignored".into());
        } else {
            let noise = NoiseRecord::new(seed, m, grid.steps, model.intensity * grid.dt(), model.jump_law.clone());
            let particles: Vec<usize> = (0..m).collect();
            let exact = oracle::exact_paths(&model.case, &noise, &grid, &particles)?;
            let mut f = create(out, "oracle_paths.csv")?;
            output::write_oracle_paths_csv(&exact, &mut f)?;
            f.flush()?;
        }
    }
    for w in &warnings {
        eprintln!("meanreflect: warning: {w}");
    }
    write_json(
        out,
        "oracle.json",
        &json!({
            "case": case.id(),
            "approximate": path.approximate,
            "warnings": warnings,
            "K_T": path.k[grid.steps],
        }),
    )?;
    println!("K(T) = {:.6}{}", path.k[grid.steps], if path.approximate { " (approximate)" } else { "" });
    Ok(())
}

fn run_convergence(config: &Path, seed: Option<u64>, out: &Path) -> Result<(), Failure> {
    let cfg = parse_config(config)?;
    let seed = seed
        .or(cfg.seed)
        .ok_or_else(|| Failure::Invalid("convergence runs need a seed (--seed or \"seed\" in the config)".into()))?;
    write_manifest(
        out,
        &RunManifest::new("convergence", &cfg, Some(seed), &["convergence.csv", "regression.json"]),
    )?;
    let (model, constraint) = cfg.build()?;
    let table = convergence_sweep(&model, &constraint, &cfg.sweep(seed))?;
    let mut f = create(out, "convergence.csv")?;
    output::write_convergence_csv(&table, &mut f)?;
    f.flush()?;

    let (abscissa, fit) = match (table.fit_in_particles, table.fit_in_steps) {
        (Some(fit), _) => ("N", Some(fit)),
        (None, Some(fit)) => ("n", Some(fit)),
        (None, None) => ("none", None),
    };
    write_json(
        out,
        "regression.json",
        &json!({
            "slope": fit.map(|f| f.slope),
            "intercept": fit.map(|f| f.intercept),
            "r2": fit.map(|f| f.r_squared),
            "abscissa": abscissa,
            "in_particles": table.fit_in_particles,
            "in_steps": table.fit_in_steps,
        }),
    )?;
    for r in &table.rows {
        println!("n = {:5}  N = {:7}  E_hat = {:.6e}", r.steps, r.particles, r.e_hat);
    }
    match fit {
        Some(f) => println!("slope vs log {abscissa}: {:.4} (r2 = {:.4})", f.slope, f.r_squared),
        None => println!("regression undefined for a single cell"),
    }
    Ok(())
}

fn run_density(config: &Path, seed: Option<u64>, out: &Path) -> Result<(), Failure> {
    let cfg = parse_config(config)?;
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let mut manifest = RunManifest::new("density", &cfg, Some(seed), &["density.csv"]);
    manifest.notes = single_run_notes(&cfg);
    write_manifest(out, &manifest)?;
    let (model, constraint) = cfg.build()?;
    let grid = cfg.grid();
    let series = density_series(
        &model,
        &constraint,
        grid,
        cfg.particles.values()[0],
        seed,
        cfg.epsilon_active,
    )?;
    let mut f = create(out, "density.csv")?;
    output::write_density_csv(&series, &mut f)?;
    f.flush()?;
    println!(
        "sum k_hat dt = {:.6}  K_hat(T) = {:.6}",
        series.integral(&grid),
        series.k_path[grid.steps]
    );
    Ok(())
}

fn run_validate(config: &Path) -> Result<(), Failure> {
    let cfg = parse_config(config)?;
    let (model, constraint) = cfg.build()?;
    for w in validate(&model, &constraint).warnings {
        println!("warning: {w}");
    }
    println!("{}: valid (case {})", config.display(), cfg.model.case_id());
    Ok(())
}
