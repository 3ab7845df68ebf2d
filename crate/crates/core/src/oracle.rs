//! Reference solutions for the three affine test models and the density of
//! the reflection process.
//!
//! The drifted Brownian and geometric references are exact at the grid points
//! and are rebuilt from the same [`NoiseRecord`] the scheme consumed, so the
//! two can be compared path by path. The Ornstein–Uhlenbeck reference is only
//! semi-analytic: it replaces the characteristic function of the discounted
//! jump sum by that of `η N_t`, which is accurate for small mean reversion `a`.

use std::f64::consts::E;

use thiserror::Error;

use crate::model::{
    CaseIIIParams, CaseIIParams, CaseIParams, Constraint, ConstraintKind, ModelCase, ModelSpec,
};
use crate::parallel::{det_mean_var, det_sum_by};
use crate::reflection::{MAX_BISECTION_ITER, TOL_X};
use crate::roots;
use crate::scheme::GridSpec;
use crate::stochastics::{Channel, JumpLaw, NoiseRecord, StreamKey};

/// Largest mean reversion for which the Ornstein–Uhlenbeck reference is
/// considered reliable; larger values only raise a warning.
pub const SMALL_A_GUARD: f64 = 0.05;
/// Marks used for the jump term of the generator when the mark law is not a point mass.
pub const GENERATOR_MC_MARKS: usize = 10_000;
const GENERATOR_MC_SEED: u64 = 0x5eed_c0de_0000_0003;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("noise record does not match the grid or model: {0}")]
    NoiseMismatch(String),
    #[error("mean constraint has no sign change at t = {t}")]
    RootBracketFailure { t: f64 },
    #[error("the constraint lacks h' or h''")]
    DerivativesMissing,
    #[error("no closed-form reference for this model")]
    NoReference,
}

/// Exact or semi-analytic solution on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct OraclePath {
    pub times: Vec<f64>,
    pub k: Vec<f64>,
    /// Particles whose exact paths are in `x`.
    pub particles: Vec<usize>,
    /// `x[j][k]` is the exact state of `particles[j]` at step `k`.
    pub x: Vec<Vec<f64>>,
    /// Set when the reference itself is an approximation.
    pub approximate: bool,
    pub warnings: Vec<String>,
}

/// `E[Y_t] = e^{−at}(x0 − β (e^{at} − 1)/a)` for the unreflected affine
/// process; continuous at `a = 0` where it equals `x0 − β t`.
pub fn mean_y(t: f64, x0: f64, beta: f64, a: f64) -> f64 {
    let growth = if a == 0.0 { t } else { (a * t).exp_m1() / a };
    (-a * t).exp() * (x0 - beta * growth)
}

/// `(p + β t − x0)⁺`
pub fn case_i_k(t: f64, params: &CaseIParams) -> f64 {
    (params.p + params.beta * t - params.x0).max(0.0)
}

/// `a p (t − t*)` after `t* = (ln x0 − ln p)/a`, zero before.
pub fn case_ii_k(t: f64, params: &CaseIIParams) -> f64 {
    let t_star = params.t_star();
    if t >= t_star {
        params.a * params.p * (t - t_star)
    } else {
        0.0
    }
}

fn check_noise(noise: &NoiseRecord, grid: &GridSpec, lambda: f64, particles: &[usize]) -> Result<(), OracleError> {
    if noise.steps != grid.steps {
        return Err(OracleError::NoiseMismatch(format!(
            "record has {} steps, grid has {}",
            noise.steps, grid.steps
        )));
    }
    let rate = lambda * grid.dt();
    if (noise.rate_dt - rate).abs() > 1e-12 * rate.abs().max(1.0) {
        return Err(OracleError::NoiseMismatch(format!(
            "record jump rate per step {} differs from λΔt = {rate}",
            noise.rate_dt
        )));
    }
    if let Some(&p) = particles.iter().find(|&&p| p >= noise.particles) {
        return Err(OracleError::NoiseMismatch(format!(
            "particle {p} outside record of {} particles",
            noise.particles
        )));
    }
    Ok(())
}

/// Exact solution of the drifted Brownian model at the grid points,
///
/// `X̄_t = x0 − (β + λη√e) t + σ B_t + Σ_{jumps ≤ t} η ξ + K_t`,
///
/// driven by the recorded Gaussian increments and jump marks of `particles`.
pub fn exact_case_i(
    noise: &NoiseRecord,
    params: &CaseIParams,
    grid: &GridSpec,
    particles: &[usize],
) -> Result<OraclePath, OracleError> {
    check_noise(noise, grid, params.lambda, particles)?;
    let times = grid.times();
    let k: Vec<f64> = times.iter().map(|&t| case_i_k(t, params)).collect();
    let sqrt_dt = grid.dt().sqrt();
    let drift = params.beta + params.lambda * params.eta * E.sqrt();
    let x = particles
        .iter()
        .map(|&i| {
            let mut brownian = 0.0;
            let mut jumps = 0.0;
            let mut path = Vec::with_capacity(grid.steps + 1);
            path.push(params.x0 + k[0]);
            for step in 1..=grid.steps {
                brownian += sqrt_dt * noise.gaussian(i, step);
                let count = noise.count(i, step);
                jumps += noise.sum_marks(i, step, count, |z| params.eta * z);
                let t = times[step];
                path.push(params.x0 - drift * t + params.sigma * brownian + jumps + k[step]);
            }
            path
        })
        .collect();
    Ok(OraclePath {
        times,
        k,
        particles: particles.to_vec(),
        x,
        approximate: false,
        warnings: Vec::new(),
    })
}

/// Exact solution of the geometric model: `X̄ = Y + Y ∫ Y⁻¹ dK` with
///
/// `Y_t = x0 exp(−(a + γ²/2 + λθ) t + γ B_t) (1 + θ)^{N_t}`,
///
/// the integral taken as a left-point sum on the grid.
pub fn exact_case_ii(
    noise: &NoiseRecord,
    params: &CaseIIParams,
    grid: &GridSpec,
    particles: &[usize],
) -> Result<OraclePath, OracleError> {
    check_noise(noise, grid, params.lambda, particles)?;
    let times = grid.times();
    let k: Vec<f64> = times.iter().map(|&t| case_ii_k(t, params)).collect();
    let sqrt_dt = grid.dt().sqrt();
    let rate = params.a + 0.5 * params.gamma * params.gamma + params.lambda * params.theta;
    let log_jump = params.theta.ln_1p();
    let x = particles
        .iter()
        .map(|&i| {
            let mut brownian = 0.0;
            let mut jumps = 0u64;
            let mut y_prev = params.x0;
            let mut integral = 0.0;
            let mut path = Vec::with_capacity(grid.steps + 1);
            path.push(params.x0);
            for step in 1..=grid.steps {
                brownian += sqrt_dt * noise.gaussian(i, step);
                jumps += noise.count(i, step);
                let t = times[step];
                let y = params.x0 * (-rate * t + params.gamma * brownian + jumps as f64 * log_jump).exp();
                integral += (k[step] - k[step - 1]) / y_prev;
                path.push(y + y * integral);
                y_prev = y;
            }
            path
        })
        .collect();
    Ok(OraclePath {
        times,
        k,
        particles: particles.to_vec(),
        x,
        approximate: false,
        warnings: Vec::new(),
    })
}

/// Semi-analytic mean constraint of the Ornstein–Uhlenbeck model at time `t`
/// as a function of the discounted push `x`:
///
/// `F_t(x) = E[Y_t] + e^{−at} x + α g(t) (m(t) cos(f_t + e^{−at} x) + n(t) sin(f_t + e^{−at} x)) − p`
///
/// with `g(t) = exp(−e^{−at} σ² sinh(at)/(2a))` the cosine moment of the
/// Gaussian part, `n(t) + i m(t) = exp(λt(e^{iη} − 1))` the approximate
/// characteristic function of the jump part, and
/// `f_t = e^{−at}(x0 − (β + λη)(e^{at} − 1)/a)`.
#[derive(Clone, Copy, Debug)]
pub struct OuMeanConstraint {
    pub params: CaseIIIParams,
}

impl OuMeanConstraint {
    pub fn g(&self, t: f64) -> f64 {
        let CaseIIIParams { a, sigma, .. } = self.params;
        let ratio = if a == 0.0 { t } else { (a * t).sinh() / a };
        (-(-a * t).exp() * sigma * sigma * ratio / 2.0).exp()
    }

    /// `(n(t), m(t))`
    pub fn jump_moments(&self, t: f64) -> (f64, f64) {
        let CaseIIIParams { lambda, eta, .. } = self.params;
        let modulus = (lambda * t * (eta.cos() - 1.0)).exp();
        let phase = lambda * t * eta.sin();
        (modulus * phase.cos(), modulus * phase.sin())
    }

    pub fn deterministic_part(&self, t: f64) -> f64 {
        let CaseIIIParams {
            beta,
            a,
            eta,
            lambda,
            x0,
            ..
        } = self.params;
        mean_y(t, x0, beta + lambda * eta, a)
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let CaseIIIParams {
            beta, a, x0, p, alpha, ..
        } = self.params;
        let discount = (-a * t).exp();
        let (n, m) = self.jump_moments(t);
        let arg = self.deterministic_part(t) + discount * x;
        mean_y(t, x0, beta, a) + discount * x + alpha * self.g(t) * (m * arg.cos() + n * arg.sin()) - p
    }

    /// Root of `F_t`.
    pub fn root(&self, t: f64) -> Result<f64, OracleError> {
        let alpha = self.params.alpha.abs();
        let discount = (-self.params.a * t).exp();
        let f = |x: f64| self.eval(t, x);
        let at_zero = f(0.0);
        if !at_zero.is_finite() {
            return Err(OracleError::RootBracketFailure { t });
        }
        if at_zero == 0.0 {
            return Ok(0.0);
        }
        let lower = discount * (1.0 - alpha);
        let upper = discount * (1.0 + alpha);
        let (a, b) = (-at_zero / lower, -at_zero / upper);
        let pad = 1e-9 * (1.0 + a.abs().max(b.abs()));
        let (lo, hi) = (a.min(b) - pad, a.max(b) + pad);
        roots::bisect_increasing(f, lo, hi, TOL_X, MAX_BISECTION_ITER)
            .or_else(|_| {
                let (lo, hi) = roots::grow_bracket(f).ok_or(roots::RootError::NonFinite)?;
                roots::bisect_increasing(f, lo, hi, TOL_X, MAX_BISECTION_ITER)
            })
            .map_err(|_| OracleError::RootBracketFailure { t })
    }
}

/// Semi-analytic reflection of the Ornstein–Uhlenbeck model:
/// `K̄_t = sup_{s ≤ t} (F_s⁻¹(0))⁺` and `K_t = Σ_{grid s ≤ t} e^{−as} ΔK̄_s`.
pub fn exact_case_iii_k(params: &CaseIIIParams, grid: &GridSpec) -> Result<OraclePath, OracleError> {
    let oracle = OuMeanConstraint { params: *params };
    let times = grid.times();
    let mut warnings = Vec::new();
    if params.a > SMALL_A_GUARD {
        warnings.push(format!(
            "mean reversion a = {} exceeds {SMALL_A_GUARD}; the jump-moment approximation degrades",
            params.a
        ));
    }
    let mut k = Vec::with_capacity(times.len());
    let mut k_bar = 0.0f64;
    let mut total = 0.0;
    for &t in &times {
        let root = oracle.root(t)?.max(0.0);
        if root > k_bar {
            total += (-params.a * t).exp() * (root - k_bar);
            k_bar = root;
        }
        k.push(total);
    }
    Ok(OraclePath {
        times,
        k,
        particles: Vec::new(),
        x: Vec::new(),
        approximate: true,
        warnings,
    })
}

/// `E[Y_t]` of the unreflected process for any built-in model.
pub fn model_mean_y(case: &ModelCase, t: f64) -> Option<f64> {
    match case {
        ModelCase::CaseI(p) => Some(mean_y(t, p.x0, p.beta, 0.0)),
        ModelCase::CaseII(p) => Some(mean_y(t, p.x0, 0.0, p.a)),
        ModelCase::CaseIII(p) => Some(mean_y(t, p.x0, p.beta, p.a)),
        ModelCase::Custom => None,
    }
}

/// Reference `K` on the grid for any built-in model.
pub fn reference_k(case: &ModelCase, grid: &GridSpec) -> Result<OraclePath, OracleError> {
    match case {
        ModelCase::CaseI(p) => {
            let times = grid.times();
            let k = times.iter().map(|&t| case_i_k(t, p)).collect();
            Ok(plain_k(times, k))
        }
        ModelCase::CaseII(p) => {
            let times = grid.times();
            let k = times.iter().map(|&t| case_ii_k(t, p)).collect();
            Ok(plain_k(times, k))
        }
        ModelCase::CaseIII(p) => exact_case_iii_k(p, grid),
        ModelCase::Custom => Err(OracleError::NoReference),
    }
}

fn plain_k(times: Vec<f64>, k: Vec<f64>) -> OraclePath {
    OraclePath {
        times,
        k,
        particles: Vec::new(),
        x: Vec::new(),
        approximate: false,
        warnings: Vec::new(),
    }
}

/// Coupled exact paths for the models that have them.
pub fn exact_paths(
    case: &ModelCase,
    noise: &NoiseRecord,
    grid: &GridSpec,
    particles: &[usize],
) -> Result<OraclePath, OracleError> {
    match case {
        ModelCase::CaseI(p) => exact_case_i(noise, p, grid, particles),
        ModelCase::CaseII(p) => exact_case_ii(noise, p, grid, particles),
        _ => Err(OracleError::NoReference),
    }
}

/// Evaluates the generator `L` applied to `h` at single points.
pub struct Generator<'a> {
    model: &'a ModelSpec,
    constraint: &'a Constraint,
    marks: Option<Vec<f64>>,
}

impl<'a> Generator<'a> {
    pub fn new(model: &'a ModelSpec, constraint: &'a Constraint) -> Result<Self, OracleError> {
        if !constraint.has_derivatives() {
            return Err(OracleError::DerivativesMissing);
        }
        let linear = matches!(constraint.kind(), ConstraintKind::Linear { .. });
        let marks = match &model.jump_law {
            JumpLaw::Dirac(v) => Some(vec![*v]),
            // the jump bracket vanishes for affine h
            _ if linear => None,
            law => Some(
                (0..GENERATOR_MC_MARKS)
                    .map(|i| law.sample(&mut StreamKey::new(GENERATOR_MC_SEED, i, 0, Channel::JumpSize(0)).rng()))
                    .collect(),
            ),
        };
        Ok(Generator {
            model,
            constraint,
            marks,
        })
    }

    /// `b h' + ½ σ² h'' + λ E_ξ[h(x + F) − h(x) − F h'(x)]`
    pub fn lh(&self, x: f64) -> f64 {
        let c = self.constraint;
        let hp = c.h_prime(x).unwrap_or(0.0);
        let hpp = c.h_second(x).unwrap_or(0.0);
        let sigma = (self.model.diffusion)(x);
        let mut value = (self.model.drift)(x) * hp + 0.5 * sigma * sigma * hpp;
        if let Some(marks) = &self.marks {
            let hx = c.h(x);
            let total: f64 = marks
                .iter()
                .map(|&z| {
                    let f = (self.model.jump_amplitude)(x, z);
                    c.h(x + f) - hx - f * hp
                })
                .sum();
            value += self.model.intensity * total / marks.len() as f64;
        }
        value
    }
}

/// Default activity threshold: three standard errors of the mean of `h(X̃)`.
pub fn default_epsilon_active(x: &[f64], constraint: &Constraint) -> f64 {
    let values: Vec<f64> = x.iter().map(|&v| constraint.h(v)).collect();
    let (_, var) = det_mean_var(&values);
    3.0 * var.sqrt() / (x.len() as f64).sqrt()
}

/// Particle estimate of the density of `dK`:
/// `(mean Lh(X̃))⁻ / mean h'(X̃)` when `|mean h(X̃)| ≤ ε`, else 0.
pub fn density_k(
    x: &[f64],
    model: &ModelSpec,
    constraint: &Constraint,
    epsilon_active: Option<f64>,
) -> Result<f64, OracleError> {
    let generator = Generator::new(model, constraint)?;
    density_with(&generator, x, epsilon_active)
}

pub(crate) fn density_with(generator: &Generator<'_>, x: &[f64], epsilon_active: Option<f64>) -> Result<f64, OracleError> {
    let c = generator.constraint;
    let n = x.len() as f64;
    let mean_h = det_sum_by(x, |v| c.h(v)) / n;
    let eps = epsilon_active.unwrap_or_else(|| default_epsilon_active(x, c));
    if mean_h.abs() > eps {
        return Ok(0.0);
    }
    let mean_lh = det_sum_by(x, |v| generator.lh(v)) / n;
    let mean_hp = det_sum_by(x, |v| c.h_prime(v).unwrap_or(0.0)) / n;
    Ok((-mean_lh).max(0.0) / mean_hp)
}

/// Closed-form density of `dK` at `t` for the linear-constraint models.
pub fn exact_density(case: &ModelCase, t: f64) -> Option<f64> {
    match case {
        ModelCase::CaseI(p) => Some(if t >= (p.x0 - p.p) / p.beta { p.beta } else { 0.0 }),
        ModelCase::CaseII(p) => Some(if t >= p.t_star() { p.a * p.p } else { 0.0 }),
        _ => None,
    }
}
