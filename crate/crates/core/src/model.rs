//! Coefficients, jump structure, constraint and initial law of a
//! mean-reflected SDE
//!
//! ```text
//! X_t = X_0 + ∫ b(X_s-) ds + ∫ σ(X_s-) dB_s + ∫∫ F(X_s-, z) Ñ(ds, dz) + K_t,
//! E[h(X_t)] ≥ 0,   ∫ E[h(X_s)] dK_s = 0,
//! ```
//!
//! together with the three built-in affine test models that admit closed-form
//! reflection processes.
//!
//! Note on the drifted Brownian model: the compensator of `∫ η z Ñ(ds, dz)` is
//! `λ η √e`, so the compensated drift is `-(β + λ η √e)`. Some references print
//! `-(β + λ √e)`, which agrees only for `η = 1`.

use std::f64::consts::E;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parallel;
use crate::roots;
use crate::stochastics::{Channel, JumpLaw, Sampler, StreamKey};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type JumpFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Marks used by the Monte Carlo compensator fallback.
pub const COMPENSATOR_MC_MARKS: usize = 100_000;
const COMPENSATOR_MC_SEED: u64 = 0x5eed_c0de_0000_0001;
/// Samples used to estimate `E[h(X_0)]` for sampled initial laws.
pub const INITIAL_CHECK_SAMPLES: usize = 100_000;
const INITIAL_CHECK_SEED: u64 = 0x5eed_c0de_0000_0002;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be finite")]
    NonFinite { name: &'static str },
    #[error("initial condition violates the constraint: h(x0) = {h_x0} < 0 (x0 = {x0})")]
    InitialBelowConstraint { x0: f64, h_x0: f64 },
    #[error("|alpha| must be < 1 for an increasing bi-Lipschitz constraint, got {0}")]
    AlphaOutOfRange(f64),
    #[error("slope bounds must satisfy 0 < m <= M, got m = {m}, M = {big_m}")]
    BadSlopeBounds { m: f64, big_m: f64 },
}

fn positive(name: &'static str, value: f64) -> Result<f64, ModelError> {
    if !value.is_finite() {
        return Err(ModelError::NonFinite { name });
    }
    if value <= 0.0 {
        return Err(ModelError::NonPositive { name, value });
    }
    Ok(value)
}

fn finite(name: &'static str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ModelError::NonFinite { name })
    }
}

/// Bi-Lipschitz slope bounds `m·|x−y| ≤ |h(x)−h(y)| ≤ M·|x−y|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeBounds {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone)]
pub struct CustomConstraint {
    pub h: ScalarFn,
    pub h_prime: Option<ScalarFn>,
    pub h_second: Option<ScalarFn>,
    pub bounds: Option<SlopeBounds>,
}

#[derive(Clone)]
pub enum ConstraintKind {
    /// `h(x) = x − p`
    Linear { p: f64 },
    /// `h(x) = x + α sin(x) − p`
    SinePerturbed { alpha: f64, p: f64 },
    Custom(CustomConstraint),
}

impl fmt::Debug for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintKind::Linear { p } => write!(f, "Linear {{ p: {p} }}"),
            ConstraintKind::SinePerturbed { alpha, p } => write!(f, "SinePerturbed {{ alpha: {alpha}, p: {p} }}"),
            ConstraintKind::Custom(c) => write!(f, "Custom {{ bounds: {:?} }}", c.bounds),
        }
    }
}

/// The increasing constraint function `h`.
#[derive(Clone, Debug)]
pub struct Constraint {
    kind: ConstraintKind,
}

impl Constraint {
    pub fn linear(p: f64) -> Result<Self, ModelError> {
        finite("p", p)?;
        Ok(Constraint {
            kind: ConstraintKind::Linear { p },
        })
    }

    /// `x + α sin x − p`; collapses to [`Constraint::linear`] when `α = 0`.
    pub fn sine_perturbed(alpha: f64, p: f64) -> Result<Self, ModelError> {
        finite("alpha", alpha)?;
        finite("p", p)?;
        if alpha.abs() >= 1.0 {
            return Err(ModelError::AlphaOutOfRange(alpha));
        }
        if alpha == 0.0 {
            return Self::linear(p);
        }
        Ok(Constraint {
            kind: ConstraintKind::SinePerturbed { alpha, p },
        })
    }

    /// Builds a constraint without checking the parameters. Used to report on
    /// invalid configurations.
    pub fn from_kind_unchecked(kind: ConstraintKind) -> Self {
        Constraint { kind }
    }

    pub fn custom(custom: CustomConstraint) -> Result<Self, ModelError> {
        if let Some(b) = custom.bounds {
            if !(b.lower > 0.0 && b.lower <= b.upper && b.upper.is_finite()) {
                return Err(ModelError::BadSlopeBounds {
                    m: b.lower,
                    big_m: b.upper,
                });
            }
        }
        Ok(Constraint {
            kind: ConstraintKind::Custom(custom),
        })
    }

    pub fn kind(&self) -> &ConstraintKind {
        &self.kind
    }

    #[inline]
    pub fn h(&self, x: f64) -> f64 {
        match &self.kind {
            ConstraintKind::Linear { p } => x - p,
            ConstraintKind::SinePerturbed { alpha, p } => x + alpha * x.sin() - p,
            ConstraintKind::Custom(c) => (c.h)(x),
        }
    }

    #[inline]
    pub fn h_prime(&self, x: f64) -> Option<f64> {
        match &self.kind {
            ConstraintKind::Linear { .. } => Some(1.0),
            ConstraintKind::SinePerturbed { alpha, .. } => Some(1.0 + alpha * x.cos()),
            ConstraintKind::Custom(c) => c.h_prime.as_ref().map(|f| f(x)),
        }
    }

    #[inline]
    pub fn h_second(&self, x: f64) -> Option<f64> {
        match &self.kind {
            ConstraintKind::Linear { .. } => Some(0.0),
            ConstraintKind::SinePerturbed { alpha, .. } => Some(-alpha * x.sin()),
            ConstraintKind::Custom(c) => c.h_second.as_ref().map(|f| f(x)),
        }
    }

    pub fn has_derivatives(&self) -> bool {
        match &self.kind {
            ConstraintKind::Custom(c) => c.h_prime.is_some() && c.h_second.is_some(),
            _ => true,
        }
    }

    pub fn bounds(&self) -> Option<SlopeBounds> {
        match &self.kind {
            ConstraintKind::Linear { .. } => Some(SlopeBounds { lower: 1.0, upper: 1.0 }),
            ConstraintKind::SinePerturbed { alpha, .. } => Some(SlopeBounds {
                lower: 1.0 - alpha.abs(),
                upper: 1.0 + alpha.abs(),
            }),
            ConstraintKind::Custom(c) => c.bounds,
        }
    }

    /// Upper slope bound `M`, or 1 when uncertified.
    pub fn upper_slope(&self) -> f64 {
        self.bounds().map_or(1.0, |b| b.upper)
    }
}

#[derive(Clone, Debug)]
pub enum InitialLaw {
    Dirac(f64),
    Custom(Sampler),
}

#[derive(Clone)]
pub enum Compensator {
    Analytic(ScalarFn),
    /// `λ · mean_j F(x, z_j)` over cached marks.
    MonteCarlo { marks: Arc<Vec<f64>> },
}

/// Parameters of the drifted Brownian motion with compensated compound
/// Poisson jumps and lognormal(0, 1) marks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseIParams {
    pub beta: f64,
    pub sigma: f64,
    pub eta: f64,
    pub lambda: f64,
    pub x0: f64,
    pub p: f64,
}

/// Parameters of the geometric (Black–Scholes) model with proportional jumps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseIIParams {
    pub a: f64,
    pub gamma: f64,
    pub theta: f64,
    pub lambda: f64,
    pub x0: f64,
    pub p: f64,
}

impl CaseIIParams {
    /// First time the reflection is active: `(ln x0 − ln p)/a`.
    pub fn t_star(&self) -> f64 {
        (self.x0.ln() - self.p.ln()) / self.a
    }
}

/// Parameters of the Ornstein–Uhlenbeck model under `h(x) = x + α sin x − p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseIIIParams {
    pub beta: f64,
    pub a: f64,
    pub sigma: f64,
    pub eta: f64,
    pub lambda: f64,
    pub x0: f64,
    pub p: f64,
    pub alpha: f64,
}

/// Unique root of `x + α sin x = p` for `|α| < 1`.
pub fn sine_constraint_root(alpha: f64, p: f64) -> f64 {
    let spread = alpha.abs() + 1.0;
    roots::bisect_increasing(|x| x + alpha * x.sin() - p, p - spread, p + spread, 1e-15, 200)
        .expect("x + α sin x − p is increasing for |α| < 1")
}

/// Which family a [`ModelSpec`] belongs to; closed-form references key off this.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelCase {
    CaseI(CaseIParams),
    CaseII(CaseIIParams),
    CaseIII(CaseIIIParams),
    Custom,
}

/// SDE coefficients, jump structure and initial law. Immutable once built.
#[derive(Clone)]
pub struct ModelSpec {
    pub drift: ScalarFn,
    pub diffusion: ScalarFn,
    pub jump_amplitude: JumpFn,
    pub intensity: f64,
    pub jump_law: JumpLaw,
    pub compensator: Compensator,
    pub initial_law: InitialLaw,
    pub case: ModelCase,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("intensity", &self.intensity)
            .field("jump_law", &self.jump_law)
            .field("initial_law", &self.initial_law)
            .field("case", &self.case)
            .finish_non_exhaustive()
    }
}

impl ModelSpec {
    /// `∫ F(x, z) λ(dz)`.
    #[inline]
    pub fn compensator(&self, x: f64) -> f64 {
        match &self.compensator {
            Compensator::Analytic(f) => f(x),
            Compensator::MonteCarlo { marks } => {
                let total: f64 = marks.iter().map(|&z| (self.jump_amplitude)(x, z)).sum();
                self.intensity * total / marks.len() as f64
            }
        }
    }

    /// General model. The compensator is exact for Dirac marks and falls back
    /// to a cached Monte Carlo average otherwise. The fallback evaluates `F`
    /// once per cached mark on every call, so large populations should supply
    /// the compensator through [`ModelSpec::with_compensator`].
    pub fn custom(
        drift: ScalarFn,
        diffusion: ScalarFn,
        jump_amplitude: JumpFn,
        intensity: f64,
        jump_law: JumpLaw,
        initial_law: InitialLaw,
    ) -> Result<Self, ModelError> {
        positive("intensity", intensity)?;
        if let JumpLaw::LogNormal { location, scale } = jump_law {
            finite("location", location)?;
            positive("scale", scale)?;
        }
        let compensator = match jump_law {
            JumpLaw::Dirac(v) => {
                let f = jump_amplitude.clone();
                Compensator::Analytic(Arc::new(move |x| intensity * f(x, v)))
            }
            _ => Compensator::MonteCarlo {
                marks: Arc::new(compensator_marks(&jump_law)),
            },
        };
        Ok(ModelSpec {
            drift,
            diffusion,
            jump_amplitude,
            intensity,
            jump_law,
            compensator,
            initial_law,
            case: ModelCase::Custom,
        })
    }

    pub fn with_compensator(mut self, f: ScalarFn) -> Self {
        self.compensator = Compensator::Analytic(f);
        self
    }

    /// Affine model `b = −(β + a x)`, `σ = s + γ x`, `F = z (η + θ x)`.
    pub fn affine(params: &AffineParams) -> Result<Self, ModelError> {
        let AffineParams {
            beta,
            a,
            sigma,
            gamma,
            eta,
            theta,
            lambda,
            ..
        } = *params;
        for (name, v) in [
            ("beta", beta),
            ("a", a),
            ("sigma", sigma),
            ("gamma", gamma),
            ("eta", eta),
            ("theta", theta),
        ] {
            finite(name, v)?;
        }
        let law = params.marks.law()?;
        let initial = params.initial.law()?;
        let mark_mean = law.mean().expect("affine models use marks with known mean");
        let spec = ModelSpec::custom(
            Arc::new(move |x| -(beta + a * x)),
            Arc::new(move |x| sigma + gamma * x),
            Arc::new(move |x, z| z * (eta + theta * x)),
            lambda,
            law,
            initial,
        )?;
        Ok(spec.with_compensator(Arc::new(move |x| lambda * mark_mean * (eta + theta * x))))
    }

    /// Starting point of a Dirac initial law.
    pub fn x0(&self) -> Option<f64> {
        match self.initial_law {
            InitialLaw::Dirac(x0) => Some(x0),
            InitialLaw::Custom(_) => None,
        }
    }
}

fn compensator_marks(law: &JumpLaw) -> Vec<f64> {
    (0..COMPENSATOR_MC_MARKS)
        .map(|i| law.sample(&mut StreamKey::new(COMPENSATOR_MC_SEED, i, 0, Channel::JumpSize(0)).rng()))
        .collect()
}

/// Jump mark law as declared in configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum MarkConfig {
    Dirac { value: f64 },
    Lognormal { location: f64, scale: f64 },
}

impl MarkConfig {
    pub fn law(&self) -> Result<JumpLaw, ModelError> {
        match *self {
            MarkConfig::Dirac { value } => Ok(JumpLaw::Dirac(finite("value", value)?)),
            MarkConfig::Lognormal { location, scale } => Ok(JumpLaw::LogNormal {
                location: finite("location", location)?,
                scale: positive("scale", scale)?,
            }),
        }
    }
}

/// Initial law as declared in configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum InitialConfig {
    Dirac { value: f64 },
    Normal { mean: f64, std: f64 },
    Uniform { low: f64, high: f64 },
}

impl InitialConfig {
    pub fn law(&self) -> Result<InitialLaw, ModelError> {
        use rand::Rng;
        use rand_distr::{Distribution, StandardNormal};
        match *self {
            InitialConfig::Dirac { value } => Ok(InitialLaw::Dirac(finite("value", value)?)),
            InitialConfig::Normal { mean, std } => {
                finite("mean", mean)?;
                positive("std", std)?;
                Ok(InitialLaw::Custom(Sampler::new(move |rng| {
                    let z: f64 = StandardNormal.sample(rng);
                    mean + std * z
                })))
            }
            InitialConfig::Uniform { low, high } => {
                finite("low", low)?;
                finite("high", high)?;
                if high <= low {
                    return Err(ModelError::NonPositive {
                        name: "high - low",
                        value: high - low,
                    });
                }
                Ok(InitialLaw::Custom(Sampler::new(move |rng| low + (high - low) * rng.random::<f64>())))
            }
        }
    }
}

/// Parameters of the general affine family used for custom configurations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineParams {
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub theta: f64,
    pub lambda: f64,
    pub marks: MarkConfig,
    pub initial: InitialConfig,
}

/// Drifted Brownian motion plus `η ξ` jumps, `ξ ~ lognormal(0, 1)`, under `h(x) = x − p`.
pub fn make_case_i(
    beta: f64,
    sigma: f64,
    eta: f64,
    lambda: f64,
    x0: f64,
    p: f64,
) -> Result<(ModelSpec, Constraint), ModelError> {
    positive("beta", beta)?;
    positive("sigma", sigma)?;
    positive("eta", eta)?;
    positive("lambda", lambda)?;
    finite("x0", x0)?;
    let constraint = Constraint::linear(p)?;
    if x0 < p {
        return Err(ModelError::InitialBelowConstraint { x0, h_x0: x0 - p });
    }
    let comp = lambda * eta * E.sqrt();
    let spec = ModelSpec {
        drift: Arc::new(move |_| -beta),
        diffusion: Arc::new(move |_| sigma),
        jump_amplitude: Arc::new(move |_, z| eta * z),
        intensity: lambda,
        jump_law: JumpLaw::LogNormal {
            location: 0.0,
            scale: 1.0,
        },
        compensator: Compensator::Analytic(Arc::new(move |_| comp)),
        initial_law: InitialLaw::Dirac(x0),
        case: ModelCase::CaseI(CaseIParams {
            beta,
            sigma,
            eta,
            lambda,
            x0,
            p,
        }),
    };
    Ok((spec, constraint))
}

/// Geometric model `b = −a x`, `σ = γ x`, `F = θ x` at the unit mark, under `h(x) = x − p`.
pub fn make_case_ii(
    a: f64,
    gamma: f64,
    theta: f64,
    lambda: f64,
    x0: f64,
    p: f64,
) -> Result<(ModelSpec, Constraint), ModelError> {
    positive("a", a)?;
    positive("gamma", gamma)?;
    positive("theta", theta)?;
    positive("lambda", lambda)?;
    positive("p", p)?;
    finite("x0", x0)?;
    if x0 < p {
        return Err(ModelError::InitialBelowConstraint { x0, h_x0: x0 - p });
    }
    let spec = ModelSpec {
        drift: Arc::new(move |x| -a * x),
        diffusion: Arc::new(move |x| gamma * x),
        jump_amplitude: Arc::new(move |x, _| theta * x),
        intensity: lambda,
        jump_law: JumpLaw::Dirac(1.0),
        compensator: Compensator::Analytic(Arc::new(move |x| lambda * theta * x)),
        initial_law: InitialLaw::Dirac(x0),
        case: ModelCase::CaseII(CaseIIParams {
            a,
            gamma,
            theta,
            lambda,
            x0,
            p,
        }),
    };
    Ok((spec, Constraint::linear(p)?))
}

/// Ornstein–Uhlenbeck model `b = −(β + a x)`, constant `σ`, jumps of size `η`,
/// under `h(x) = x + α sin x − p`.
///
/// Requires `h(x0) ≥ 0`, which is weaker than `x0 > |α| + p`.
#[allow(clippy::too_many_arguments)]
pub fn make_case_iii(
    beta: f64,
    a: f64,
    sigma: f64,
    eta: f64,
    lambda: f64,
    x0: f64,
    p: f64,
    alpha: f64,
) -> Result<(ModelSpec, Constraint), ModelError> {
    positive("beta", beta)?;
    positive("a", a)?;
    positive("sigma", sigma)?;
    positive("eta", eta)?;
    positive("lambda", lambda)?;
    finite("x0", x0)?;
    let constraint = Constraint::sine_perturbed(alpha, p)?;
    let h_x0 = constraint.h(x0);
    if h_x0 < 0.0 {
        return Err(ModelError::InitialBelowConstraint { x0, h_x0 });
    }
    let spec = ModelSpec {
        drift: Arc::new(move |x| -(beta + a * x)),
        diffusion: Arc::new(move |_| sigma),
        jump_amplitude: Arc::new(move |_, _| eta),
        intensity: lambda,
        jump_law: JumpLaw::Dirac(1.0),
        compensator: Compensator::Analytic(Arc::new(move |_| lambda * eta)),
        initial_law: InitialLaw::Dirac(x0),
        case: ModelCase::CaseIII(CaseIIIParams {
            beta,
            a,
            sigma,
            eta,
            lambda,
            x0,
            p,
            alpha,
        }),
    };
    Ok((spec, constraint))
}

impl CaseIParams {
    pub fn build(&self) -> Result<(ModelSpec, Constraint), ModelError> {
        make_case_i(self.beta, self.sigma, self.eta, self.lambda, self.x0, self.p)
    }
}

impl CaseIIParams {
    pub fn build(&self) -> Result<(ModelSpec, Constraint), ModelError> {
        make_case_ii(self.a, self.gamma, self.theta, self.lambda, self.x0, self.p)
    }
}

impl CaseIIIParams {
    pub fn build(&self) -> Result<(ModelSpec, Constraint), ModelError> {
        make_case_iii(
            self.beta, self.a, self.sigma, self.eta, self.lambda, self.x0, self.p, self.alpha,
        )
    }
}

/// Grid and threshold for the advisory Lipschitz spot-check.
#[derive(Clone, Debug)]
pub struct ValidationOptions {
    pub grid: Vec<f64>,
    pub lipschitz_bound: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            grid: (0..=200).map(|i| -10.0 + 0.1 * i as f64).collect(),
            lipschitz_bound: 1e3,
        }
    }
}

/// Outcome of [`validate`]: hard violations and advisory warnings.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate(spec: &ModelSpec, constraint: &Constraint) -> ValidationReport {
    validate_with(spec, constraint, &ValidationOptions::default())
}

pub fn validate_with(spec: &ModelSpec, constraint: &Constraint, opts: &ValidationOptions) -> ValidationReport {
    let mut report = ValidationReport::default();

    if !(spec.intensity > 0.0 && spec.intensity.is_finite()) {
        report
            .violations
            .push(format!("intensity must be positive and finite, got {}", spec.intensity));
    }
    if let JumpLaw::LogNormal { scale, .. } = spec.jump_law {
        if scale.is_nan() || scale <= 0.0 {
            report.violations.push(format!("lognormal scale must be positive, got {scale}"));
        }
    }

    match constraint.kind() {
        ConstraintKind::SinePerturbed { alpha, .. } if alpha.abs() >= 1.0 => {
            report
                .violations
                .push(format!("|alpha| must be < 1 for an increasing bi-Lipschitz h, got {alpha}"));
        }
        _ => {}
    }
    if let Some(b) = constraint.bounds() {
        if !(b.lower > 0.0 && b.lower <= b.upper) {
            report
                .violations
                .push(format!("slope bounds must satisfy 0 < m <= M, got ({}, {})", b.lower, b.upper));
        }
    }
    check_constraint_shape(constraint, opts, &mut report);

    match &spec.initial_law {
        InitialLaw::Dirac(x0) => {
            let v = constraint.h(*x0);
            if v < 0.0 {
                report
                    .violations
                    .push(format!("E[h(X0)] = h({x0}) = {v} < 0"));
            }
        }
        InitialLaw::Custom(sampler) => {
            let values: Vec<f64> = (0..INITIAL_CHECK_SAMPLES)
                .map(|i| {
                    let x = sampler.sample(&mut StreamKey::new(INITIAL_CHECK_SEED, i, 0, Channel::Initial).rng());
                    constraint.h(x)
                })
                .collect();
            let (mean, var) = parallel::det_mean_var(&values);
            let se = (var / values.len() as f64).sqrt();
            if mean < -3.0 * se {
                report.violations.push(format!(
                    "estimated E[h(X0)] = {mean:.6} is below zero by more than 3 standard errors ({se:.2e})"
                ));
            }
        }
    }

    lipschitz_spot_check(spec, opts, &mut report);
    report
}

fn check_constraint_shape(constraint: &Constraint, opts: &ValidationOptions, report: &mut ValidationReport) {
    let grid = &opts.grid;
    let bounds = constraint.bounds();
    for w in grid.windows(2) {
        let (x, y) = (w[0], w[1]);
        let dh = constraint.h(y) - constraint.h(x);
        if dh < 0.0 {
            report
                .violations
                .push(format!("h decreases between {x} and {y}"));
            return;
        }
        if let Some(b) = bounds {
            let dx = y - x;
            let slack = 1e-9 * (1.0 + dx);
            if dh < b.lower * dx - slack || dh > b.upper * dx + slack {
                report.violations.push(format!(
                    "h slope {} on [{x}, {y}] outside [m, M] = [{}, {}]",
                    dh / dx,
                    b.lower,
                    b.upper
                ));
                return;
            }
        }
    }
}

fn lipschitz_spot_check(spec: &ModelSpec, opts: &ValidationOptions, report: &mut ValidationReport) {
    let mark = match &spec.jump_law {
        JumpLaw::Dirac(v) => *v,
        JumpLaw::LogNormal { location, .. } => location.exp(),
        JumpLaw::Custom(_) => 1.0,
    };
    type Probe<'a> = (&'static str, Box<dyn Fn(f64) -> f64 + 'a>);
    let checks: [Probe<'_>; 3] = [
        ("drift", Box::new(|x| (spec.drift)(x))),
        ("diffusion", Box::new(|x| (spec.diffusion)(x))),
        ("jump_amplitude", Box::new(move |x| (spec.jump_amplitude)(x, mark))),
    ];
    for (name, f) in checks.iter() {
        let mut worst = 0.0f64;
        for w in opts.grid.windows(2) {
            let slope = (f(w[1]) - f(w[0])) / (w[1] - w[0]);
            if !slope.is_finite() {
                worst = f64::INFINITY;
                break;
            }
            worst = worst.max(slope.abs());
        }
        if worst > opts.lipschitz_bound {
            report.warnings.push(format!(
                "{name}: finite-difference slope {worst:.3e} exceeds {:.3e} on the check grid",
                opts.lipschitz_bound
            ));
        }
    }
}
