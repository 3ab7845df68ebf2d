//! Interacting-particle Euler scheme.
//!
//! Each step advances the unreflected accumulations `U` of all particles with
//! left-point coefficients, computes `G₀` of their empirical measure, pushes
//! the running supremum, and moves the reflected states `X` by the same
//! increment plus the reflection increment. After every step
//! `X[i] = U[i] + K̂` where `K̂` is the running supremum.

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{validate, Constraint, InitialLaw, ModelError, ModelSpec};
use crate::parallel::{det_mean_var, det_sum_by, CHUNK};
use crate::reflection::{self, EmpiricalMeasure, ReflectionError, ReflectionTracker};
use crate::stochastics::{Channel, NoiseRecord, StreamKey};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("model failed validation: {}", .0.join("; "))]
    InvalidModel(Vec<String>),
    #[error(transparent)]
    Reflection(#[from] ReflectionError),
    #[error("particle {particle} became non-finite at step {step}")]
    NonFiniteState { particle: usize, step: usize },
    #[error("all {0} steps have already been taken")]
    HorizonReached(usize),
    #[error("grid needs a positive finite horizon and at least one step (got T = {horizon}, n = {steps})")]
    InvalidGrid { horizon: f64, steps: usize },
    #[error("at least one particle is required")]
    NoParticles,
    #[error("particle {0} does not exist")]
    UnknownParticle(usize),
}

/// Uniform grid `T_k = k T / n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub horizon: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn new(horizon: f64, steps: usize) -> Result<Self, SchemeError> {
        if !(horizon > 0.0 && horizon.is_finite()) || steps == 0 {
            return Err(SchemeError::InvalidGrid { horizon, steps });
        }
        Ok(GridSpec { horizon, steps })
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.horizon * k as f64 / self.steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }

    /// Grid index closest to `t`, clamped to the grid.
    pub fn nearest_step(&self, t: f64) -> usize {
        ((t / self.dt()).round().max(0.0) as usize).min(self.steps)
    }
}

/// The particle cloud `(U, X)` with its reflection tracker and step clock.
pub struct ParticleSystem {
    model: ModelSpec,
    constraint: Constraint,
    grid: GridSpec,
    noise: NoiseRecord,
    u: Vec<f64>,
    x: Vec<f64>,
    increments: Vec<f64>,
    tracker: ReflectionTracker,
    k: usize,
}

impl ParticleSystem {
    /// Validates the model, draws the initial cloud and applies the initial
    /// reflection `G₀(μ₀)`, which is positive when the drawn atoms violate
    /// the constraint on average.
    pub fn init(
        model: &ModelSpec,
        constraint: &Constraint,
        grid: GridSpec,
        particles: usize,
        seed: u64,
    ) -> Result<Self, SchemeError> {
        let report = validate(model, constraint);
        if !report.is_valid() {
            return Err(SchemeError::InvalidModel(report.violations));
        }
        Self::init_prevalidated(model, constraint, grid, particles, seed)
    }

    pub(crate) fn init_prevalidated(
        model: &ModelSpec,
        constraint: &Constraint,
        grid: GridSpec,
        particles: usize,
        seed: u64,
    ) -> Result<Self, SchemeError> {
        if particles == 0 {
            return Err(SchemeError::NoParticles);
        }
        let u: Vec<f64> = match &model.initial_law {
            InitialLaw::Dirac(x0) => vec![*x0; particles],
            InitialLaw::Custom(sampler) => (0..particles)
                .into_par_iter()
                .map(|i| sampler.sample(&mut StreamKey::new(seed, i, 0, Channel::Initial).rng()))
                .collect(),
        };
        let measure = EmpiricalMeasure::new(&u)?;
        let g0_initial = reflection::g0(&measure, constraint)?;
        let x = u.iter().map(|v| v + g0_initial).collect();
        let noise = NoiseRecord::new(
            seed,
            particles,
            grid.steps,
            model.intensity * grid.dt(),
            model.jump_law.clone(),
        );
        Ok(ParticleSystem {
            model: model.clone(),
            constraint: constraint.clone(),
            grid,
            noise,
            increments: vec![0.0; particles],
            u,
            x,
            tracker: ReflectionTracker::seeded(g0_initial),
            k: 0,
        })
    }

    /// Advances one grid step and returns the reflection increment `ΔK̂`.
    pub fn step(&mut self) -> Result<f64, SchemeError> {
        if self.k >= self.grid.steps {
            return Err(SchemeError::HorizonReached(self.grid.steps));
        }
        self.k += 1;
        let step = self.k;
        let dt = self.grid.dt();
        let sqrt_dt = dt.sqrt();
        let model = &self.model;
        let noise = &self.noise;
        let x = &self.x;

        self.increments
            .par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| {
                let base = c * CHUNK;
                for (j, slot) in chunk.iter_mut().enumerate() {
                    let i = base + j;
                    let xi = x[i];
                    let mut inc = dt * ((model.drift)(xi) - model.compensator(xi))
                        + sqrt_dt * (model.diffusion)(xi) * noise.gaussian(i, step);
                    let count = noise.count(i, step);
                    if count > 0 {
                        inc += noise.sum_marks(i, step, count, |z| (model.jump_amplitude)(xi, z));
                    }
                    *slot = inc;
                }
            });

        let increments = &self.increments;
        self.u
            .par_chunks_mut(CHUNK)
            .zip(increments.par_chunks(CHUNK))
            .for_each(|(u, inc)| {
                for (a, b) in u.iter_mut().zip(inc) {
                    *a += b;
                }
            });
        if let Some(i) = self.u.iter().position(|v| !v.is_finite()) {
            return Err(SchemeError::NonFiniteState { particle: i, step });
        }

        let g0 = reflection::g0(&EmpiricalMeasure::trusted(&self.u), &self.constraint)?;
        let delta = self.tracker.advance(g0);

        self.x
            .par_chunks_mut(CHUNK)
            .zip(increments.par_chunks(CHUNK))
            .for_each(|(x, inc)| {
                for (a, b) in x.iter_mut().zip(inc) {
                    *a += b + delta;
                }
            });
        Ok(delta)
    }

    pub fn run_to_end(&mut self) -> Result<(), SchemeError> {
        while self.k < self.grid.steps {
            self.step()?;
        }
        Ok(())
    }

    /// Steps taken so far.
    pub fn current_step(&self) -> usize {
        self.k
    }

    pub fn time(&self) -> f64 {
        self.grid.time(self.k)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn particles(&self) -> usize {
        self.x.len()
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn constraint(&self) -> &Constraint {
        &self.constraint
    }

    /// Reflected states `X̃`.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Unreflected accumulations `Ũ`.
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// Current `K̂`.
    pub fn k_hat(&self) -> f64 {
        self.tracker.running_sup()
    }

    pub fn tracker(&self) -> &ReflectionTracker {
        &self.tracker
    }

    pub fn noise(&self) -> &NoiseRecord {
        &self.noise
    }

    /// `(1/N) Σ h(X̃ⁱ)`.
    pub fn mean_h(&self) -> f64 {
        let c = &self.constraint;
        det_sum_by(&self.x, |v| c.h(v)) / self.x.len() as f64
    }

    /// Mean and variance of `X̃`.
    pub fn moments(&self) -> (f64, f64) {
        det_mean_var(&self.x)
    }
}

/// What [`simulate`] keeps besides the per-step summaries.
#[derive(Clone, Debug, Default)]
pub struct RecordOptions {
    /// Store the whole `X̃` cloud every `stride` steps (step 0 included).
    pub snapshot_stride: Option<usize>,
    /// Store the cloud at the grid points nearest to these times.
    pub snapshot_times: Vec<f64>,
    /// Particles whose full `X̃` path is kept.
    pub track: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub x: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackedPath {
    pub particle: usize,
    /// `X̃` at steps `0..=n`.
    pub x: Vec<f64>,
}

/// Output of a full run. Vectors are indexed by step `0..=n`; `delta_k[0]`
/// is the initial reflection.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub grid: GridSpec,
    pub particles: usize,
    pub times: Vec<f64>,
    pub k_hat: Vec<f64>,
    pub delta_k: Vec<f64>,
    pub mean_h: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub var_x: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub tracked: Vec<TrackedPath>,
    pub noise: NoiseRecord,
    /// Upper slope bound `M` of the constraint.
    pub upper_slope: f64,
}

pub fn simulate(
    model: &ModelSpec,
    constraint: &Constraint,
    grid: GridSpec,
    particles: usize,
    seed: u64,
    options: &RecordOptions,
) -> Result<TrajectoryRecord, SchemeError> {
    let system = ParticleSystem::init(model, constraint, grid, particles, seed)?;
    simulate_from(system, options)
}

pub(crate) fn simulate_from(mut system: ParticleSystem, options: &RecordOptions) -> Result<TrajectoryRecord, SchemeError> {
    let grid = system.grid();
    let n = grid.steps;
    let mut snapshot_steps: Vec<usize> = options.snapshot_times.iter().map(|&t| grid.nearest_step(t)).collect();
    if let Some(stride) = options.snapshot_stride.filter(|&s| s > 0) {
        snapshot_steps.extend((0..=n).step_by(stride));
    }
    snapshot_steps.sort_unstable();
    snapshot_steps.dedup();

    if let Some(&bad) = options.track.iter().find(|&&i| i >= system.particles()) {
        return Err(SchemeError::UnknownParticle(bad));
    }

    let mut record = TrajectoryRecord {
        grid,
        particles: system.particles(),
        times: grid.times(),
        k_hat: Vec::with_capacity(n + 1),
        delta_k: Vec::with_capacity(n + 1),
        mean_h: Vec::with_capacity(n + 1),
        mean_x: Vec::with_capacity(n + 1),
        var_x: Vec::with_capacity(n + 1),
        snapshots: Vec::new(),
        tracked: options
            .track
            .iter()
            .map(|&particle| TrackedPath {
                particle,
                x: Vec::with_capacity(n + 1),
            })
            .collect(),
        noise: system.noise().clone(),
        upper_slope: system.constraint().upper_slope(),
    };

    let observe = |system: &ParticleSystem, delta: f64, record: &mut TrajectoryRecord| {
        let k = system.current_step();
        let (mean, var) = system.moments();
        record.k_hat.push(system.k_hat());
        record.delta_k.push(delta);
        record.mean_h.push(system.mean_h());
        record.mean_x.push(mean);
        record.var_x.push(var);
        for path in record.tracked.iter_mut() {
            path.x.push(system.x()[path.particle]);
        }
        if snapshot_steps.binary_search(&k).is_ok() {
            record.snapshots.push(Snapshot {
                step: k,
                time: system.time(),
                x: system.x().to_vec(),
            });
        }
    };

    observe(&system, system.k_hat(), &mut record);
    while system.current_step() < n {
        let delta = system.step()?;
        observe(&system, delta, &mut record);
    }
    Ok(record)
}
