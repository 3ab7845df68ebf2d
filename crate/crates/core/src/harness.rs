//! Error estimation, convergence sweeps and discrete diagnostics.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{validate, Constraint, ModelCase, ModelSpec};
use crate::oracle::{self, Generator, OracleError};
use crate::parallel::det_mean;
use crate::reflection::TOL_X;
use crate::scheme::{GridSpec, ParticleSystem, SchemeError, TrajectoryRecord};
use crate::stochastics::derive_seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("at least one replication is required")]
    NoReplications,
    #[error("steps and particles lists must be nonempty")]
    EmptySweep,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("regression needs at least two distinct abscissae")]
    DegenerateAbscissae,
    #[error("log-log fit needs positive coordinates, got ({0}, {1})")]
    NonPositive(f64, f64),
}

/// Grid sizes, particle counts and replications of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub horizon: f64,
    pub steps: Vec<usize>,
    pub particles: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
}

/// `Ê` and the per-replication squared sup-errors it averages.
#[derive(Clone, Debug, PartialEq)]
pub struct L2Estimate {
    pub e_hat: f64,
    pub samples: Vec<f64>,
}

impl L2Estimate {
    /// Variance of the mean of `batches` consecutive batch means.
    pub fn batch_mean_variance(&self, batches: usize) -> f64 {
        let size = self.samples.len() / batches;
        let means: Vec<f64> = self.samples.chunks_exact(size).take(batches).map(det_mean).collect();
        let m = det_mean(&means);
        means.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (means.len() as f64 - 1.0)
    }
}

/// `Ê = (1/L) Σ_l max_k |X̄ˡ_{T_k} − X̃^{0,l}_{T_k}|²` where replication `l`
/// runs the whole particle system with seed `derive_seed(seed, l)` and the
/// exact path `X̄ˡ` is driven by the noise of particle 0.
pub fn l2_error(
    model: &ModelSpec,
    constraint: &Constraint,
    grid: GridSpec,
    particles: usize,
    replications: usize,
    seed: u64,
) -> Result<L2Estimate, HarnessError> {
    if replications == 0 {
        return Err(HarnessError::NoReplications);
    }
    if matches!(model.case, ModelCase::CaseIII(_) | ModelCase::Custom) {
        return Err(OracleError::NoReference.into());
    }
    let report = validate(model, constraint);
    if !report.is_valid() {
        return Err(SchemeError::InvalidModel(report.violations).into());
    }
    let samples = (0..replications as u64)
        .into_par_iter()
        .map(|l| replication_error(model, constraint, grid, particles, derive_seed(seed, l)))
        .collect::<Result<Vec<f64>, HarnessError>>()?;
    Ok(L2Estimate {
        e_hat: det_mean(&samples),
        samples,
    })
}

fn replication_error(
    model: &ModelSpec,
    constraint: &Constraint,
    grid: GridSpec,
    particles: usize,
    seed: u64,
) -> Result<f64, HarnessError> {
    let mut system = ParticleSystem::init_prevalidated(model, constraint, grid, particles, seed)?;
    let mut path = Vec::with_capacity(grid.steps + 1);
    path.push(system.x()[0]);
    while system.current_step() < grid.steps {
        system.step()?;
        path.push(system.x()[0]);
    }
    let exact = oracle::exact_paths(&model.case, system.noise(), &grid, &[0])?;
    Ok(path
        .iter()
        .zip(&exact.x[0])
        .map(|(a, b)| (a - b) * (a - b))
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares of `ln y` on `ln x`.
pub fn loglog_fit(points: &[(f64, f64)]) -> Result<Fit, FitError> {
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(FitError::NonPositive(x, y));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if logs.len() < 2 || sxx <= 1e-12 * (1.0 + mx * mx) {
        return Err(FitError::DegenerateAbscissae);
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(Fit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub steps: usize,
    pub particles: usize,
    pub replications: usize,
    pub e_hat: f64,
    pub runtime_sec: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    /// Ordered by `(n, N)`.
    pub rows: Vec<ResultRow>,
    /// `Ê` against `N` at the largest `n`; absent with a single `N`.
    pub fit_in_particles: Option<Fit>,
    /// `Ê` against `n` at the largest `N`; absent with a single `n`.
    pub fit_in_steps: Option<Fit>,
}

/// `Ê` for every `(n, N)` cell. Every cell uses the same replication seeds.
pub fn convergence_sweep(model: &ModelSpec, constraint: &Constraint, spec: &SweepSpec) -> Result<ResultTable, HarnessError> {
    if spec.steps.is_empty() || spec.particles.is_empty() {
        return Err(HarnessError::EmptySweep);
    }
    let mut rows = Vec::new();
    for &n in &spec.steps {
        let grid = GridSpec::new(spec.horizon, n)?;
        for &particles in &spec.particles {
            let start = Instant::now();
            let estimate = l2_error(model, constraint, grid, particles, spec.replications, spec.seed)?;
            rows.push(ResultRow {
                steps: n,
                particles,
                replications: spec.replications,
                e_hat: estimate.e_hat,
                runtime_sec: start.elapsed().as_secs_f64(),
            });
        }
    }
    let n_max = *spec.steps.iter().max().expect("nonempty");
    let particles_max = *spec.particles.iter().max().expect("nonempty");
    let by_particles: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.steps == n_max)
        .map(|r| (r.particles as f64, r.e_hat))
        .collect();
    let by_steps: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.particles == particles_max)
        .map(|r| (r.steps as f64, r.e_hat))
        .collect();
    Ok(ResultTable {
        rows,
        fit_in_particles: loglog_fit(&by_particles).ok(),
        fit_in_steps: loglog_fit(&by_steps).ok(),
    })
}

/// Discrete check of `E h(X) ≥ 0` and `∫ E h(X) dK = 0`.
///
/// Violations and residuals are scaled by `1 + |mean X|`, residuals further
/// by the upper slope `M` of the constraint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SkorokhodReport {
    /// `max_k (−mean h)⁺ / (1 + |mean X|)`
    pub max_violation: f64,
    /// `max |mean h| / (M (1 + |mean X|))` over steps with `ΔK̂` above the threshold.
    pub max_active_residual: f64,
    /// Share of the `n` steps with `ΔK̂` above the threshold.
    pub active_fraction: f64,
}

impl SkorokhodReport {
    pub fn within(&self, tol: f64) -> bool {
        self.max_violation <= tol && self.max_active_residual <= tol
    }
}

/// Series indexed `0..=n`; entry 0 is the initial state.
pub fn skorokhod_from_series(
    mean_h: &[f64],
    mean_x: &[f64],
    delta_k: &[f64],
    upper_slope: f64,
    active_threshold: f64,
) -> SkorokhodReport {
    let mut max_violation = 0.0f64;
    let mut max_active_residual = 0.0f64;
    let mut active = 0usize;
    for (k, ((&h, &m), &d)) in mean_h.iter().zip(mean_x).zip(delta_k).enumerate() {
        let scale = 1.0 + m.abs();
        max_violation = max_violation.max((-h).max(0.0) / scale);
        if d > active_threshold {
            if k > 0 {
                active += 1;
            }
            max_active_residual = max_active_residual.max(h.abs() / (upper_slope * scale));
        }
    }
    let steps = mean_h.len().saturating_sub(1).max(1);
    SkorokhodReport {
        max_violation,
        max_active_residual,
        active_fraction: active as f64 / steps as f64,
    }
}

/// Report with the activity threshold `2 tol_x`.
pub fn skorokhod_report(record: &TrajectoryRecord) -> SkorokhodReport {
    skorokhod_report_with(record, 2.0 * TOL_X)
}

pub fn skorokhod_report_with(record: &TrajectoryRecord, active_threshold: f64) -> SkorokhodReport {
    skorokhod_from_series(
        &record.mean_h,
        &record.mean_x,
        &record.delta_k,
        record.upper_slope,
        active_threshold,
    )
}

/// Particle density of `dK` on each grid interval, evaluated at the state
/// at its left end, next to the reference density where one exists.
#[derive(Clone, Debug, PartialEq)]
pub struct DensitySeries {
    /// Left ends `T_0 .. T_{n−1}`.
    pub times: Vec<f64>,
    pub k_hat: Vec<f64>,
    /// NaN when no reference exists.
    pub k_exact: Vec<f64>,
    /// The simulated trajectory summary, indexed `0..=n`.
    pub k_path: Vec<f64>,
    pub mean_h: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub delta_k: Vec<f64>,
    pub upper_slope: f64,
}

impl DensitySeries {
    /// `Σ k̂ Δt` over the grid.
    pub fn integral(&self, grid: &GridSpec) -> f64 {
        self.k_hat.iter().sum::<f64>() * grid.dt()
    }

    pub fn skorokhod(&self, active_threshold: f64) -> SkorokhodReport {
        skorokhod_from_series(
            &self.mean_h,
            &self.mean_x,
            &self.delta_k,
            self.upper_slope,
            active_threshold,
        )
    }
}

pub fn density_series(
    model: &ModelSpec,
    constraint: &Constraint,
    grid: GridSpec,
    particles: usize,
    seed: u64,
    epsilon_active: Option<f64>,
) -> Result<DensitySeries, HarnessError> {
    let generator = Generator::new(model, constraint)?;
    let mut system = ParticleSystem::init(model, constraint, grid, particles, seed)?;
    let exact: Vec<f64> = match &model.case {
        ModelCase::CaseIII(_) => {
            let k = oracle::reference_k(&model.case, &grid)?.k;
            k.windows(2).map(|w| (w[1] - w[0]) / grid.dt()).collect()
        }
        case => (0..grid.steps)
            .map(|k| oracle::exact_density(case, grid.time(k)).unwrap_or(f64::NAN))
            .collect(),
    };
    let n = grid.steps;
    let mut series = DensitySeries {
        times: (0..n).map(|k| grid.time(k)).collect(),
        k_hat: Vec::with_capacity(n),
        k_exact: exact,
        k_path: Vec::with_capacity(n + 1),
        mean_h: Vec::with_capacity(n + 1),
        mean_x: Vec::with_capacity(n + 1),
        delta_k: Vec::with_capacity(n + 1),
        upper_slope: constraint.upper_slope(),
    };
    let mut delta = system.k_hat();
    loop {
        series.k_path.push(system.k_hat());
        series.mean_h.push(system.mean_h());
        series.mean_x.push(system.moments().0);
        series.delta_k.push(delta);
        if system.current_step() == n {
            break;
        }
        series.k_hat.push(oracle::density_with(&generator, system.x(), epsilon_active)?);
        delta = system.step()?;
    }
    Ok(series)
}
