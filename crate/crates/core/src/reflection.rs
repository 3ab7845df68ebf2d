//! Mean constraint on empirical measures and the running-supremum reflection.
//!
//! For an empirical measure `ν = (1/N) Σ δ_{u_i}` and an increasing constraint
//! `h`, the mean constraint is `H(x, ν) = (1/N) Σ h(x + u_i)`. Since `h` is
//! bi-Lipschitz with slopes in `[m, M]`, so is `H(·, ν)`, and it has a unique
//! root `Ḡ₀(ν)`. `G₀(ν) = max(0, Ḡ₀(ν))` is the smallest shift that restores
//! `H ≥ 0`, and the reflection at step `k` is `sup_{l ≤ k} G₀(ν_l)`.

use thiserror::Error;

use crate::model::{Constraint, ConstraintKind};
use crate::parallel::{det_mean, det_sum_by};
use crate::roots::{self, RootError};

/// Absolute tolerance on roots of the mean constraint.
pub const TOL_X: f64 = 1e-12;
pub const MAX_BISECTION_ITER: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReflectionError {
    #[error("empirical measure needs at least one atom")]
    EmptyMeasure,
    #[error("atom {0} is not finite")]
    NonFiniteAtom(usize),
    #[error("mean constraint at 0 is not finite")]
    NonFiniteBracket,
    #[error("root search failed, slope bounds may be inconsistent with h: {0}")]
    NoConvergence(RootError),
    #[error("no sign change of the mean constraint on [-2^64, 2^64]")]
    BracketNotFound,
    #[error("measures have {0} and {1} atoms")]
    SizeMismatch(usize, usize),
}

/// `N` equally weighted atoms.
#[derive(Clone, Copy, Debug)]
pub struct EmpiricalMeasure<'a> {
    atoms: &'a [f64],
}

impl<'a> EmpiricalMeasure<'a> {
    pub fn new(atoms: &'a [f64]) -> Result<Self, ReflectionError> {
        if atoms.is_empty() {
            return Err(ReflectionError::EmptyMeasure);
        }
        if let Some(i) = atoms.iter().position(|a| !a.is_finite()) {
            return Err(ReflectionError::NonFiniteAtom(i));
        }
        Ok(EmpiricalMeasure { atoms })
    }

    /// Skips the finiteness scan; callers guarantee finite atoms.
    pub(crate) fn trusted(atoms: &'a [f64]) -> Self {
        debug_assert!(!atoms.is_empty());
        EmpiricalMeasure { atoms }
    }

    pub fn atoms(&self) -> &'a [f64] {
        self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> f64 {
        det_mean(self.atoms)
    }
}

/// `H(x, ν) = (1/N) Σ h(x + atom)`, evaluated atom by atom.
pub fn h_mean(x: f64, measure: &EmpiricalMeasure<'_>, constraint: &Constraint) -> f64 {
    det_sum_by(measure.atoms, |u| constraint.h(x + u)) / measure.len() as f64
}

/// Reduces `H(·, ν)` to a few moments of the atoms when `h` allows it.
enum MeanConstraint<'a> {
    Linear { mean: f64, p: f64 },
    // sin(x + u) = sin x cos u + cos x sin u
    Sine { mean: f64, mean_sin: f64, mean_cos: f64, alpha: f64, p: f64 },
    Direct { measure: EmpiricalMeasure<'a>, constraint: &'a Constraint },
}

impl<'a> MeanConstraint<'a> {
    fn new(measure: &EmpiricalMeasure<'a>, constraint: &'a Constraint) -> Self {
        let n = measure.len() as f64;
        match *constraint.kind() {
            ConstraintKind::Linear { p } => MeanConstraint::Linear { mean: measure.mean(), p },
            ConstraintKind::SinePerturbed { alpha, p } => MeanConstraint::Sine {
                mean: measure.mean(),
                mean_sin: det_sum_by(measure.atoms, f64::sin) / n,
                mean_cos: det_sum_by(measure.atoms, f64::cos) / n,
                alpha,
                p,
            },
            ConstraintKind::Custom(_) => MeanConstraint::Direct {
                measure: *measure,
                constraint,
            },
        }
    }

    fn eval(&self, x: f64) -> f64 {
        match *self {
            MeanConstraint::Linear { mean, p } => x + mean - p,
            MeanConstraint::Sine {
                mean,
                mean_sin,
                mean_cos,
                alpha,
                p,
            } => {
                let (s, c) = x.sin_cos();
                x + mean + alpha * (s * mean_cos + c * mean_sin) - p
            }
            MeanConstraint::Direct { measure, constraint } => h_mean(x, &measure, constraint),
        }
    }
}

fn bisect_root<F>(mut f: F, constraint: &Constraint) -> Result<f64, ReflectionError>
where
    F: FnMut(f64) -> f64,
{
    let at_zero = f(0.0);
    if !at_zero.is_finite() {
        return Err(ReflectionError::NonFiniteBracket);
    }
    if at_zero == 0.0 {
        return Ok(0.0);
    }
    let (lo, hi) = match constraint.bounds() {
        Some(b) => {
            let a = -at_zero / b.lower;
            let c = -at_zero / b.upper;
            let (lo, hi) = (a.min(c), a.max(c));
            // slack for rounding in H at the bracket ends
            let pad = |v: f64| TOL_X + 8.0 * f64::EPSILON * v.abs();
            (lo - pad(lo), hi + pad(hi))
        }
        None => roots::grow_bracket(&mut f).ok_or(ReflectionError::BracketNotFound)?,
    };
    roots::bisect_increasing(f, lo, hi, TOL_X, MAX_BISECTION_ITER).map_err(ReflectionError::NoConvergence)
}

/// `Ḡ₀(ν)`: the root of `H(·, ν)`.
///
/// Linear constraints use the closed form `p − mean`; the sine constraint
/// bisects on a moment reduction of `H`; anything else bisects on `H` itself,
/// on the bracket implied by the slope bounds (or a doubling search when the
/// constraint has none).
pub fn bar_g0(measure: &EmpiricalMeasure<'_>, constraint: &Constraint) -> Result<f64, ReflectionError> {
    let reduced = MeanConstraint::new(measure, constraint);
    match reduced {
        MeanConstraint::Linear { mean, p } => {
            if !mean.is_finite() {
                return Err(ReflectionError::NonFiniteBracket);
            }
            Ok(p - mean)
        }
        _ => bisect_root(|x| reduced.eval(x), constraint),
    }
}

/// `Ḡ₀(ν)` by bisection on the atom-by-atom `H`, with no shortcuts.
pub fn bar_g0_bisection(measure: &EmpiricalMeasure<'_>, constraint: &Constraint) -> Result<f64, ReflectionError> {
    bisect_root(|x| h_mean(x, measure, constraint), constraint)
}

/// `G₀(ν) = max(0, Ḡ₀(ν))`.
pub fn g0(measure: &EmpiricalMeasure<'_>, constraint: &Constraint) -> Result<f64, ReflectionError> {
    Ok(bar_g0(measure, constraint)?.max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackerEntry {
    pub step: usize,
    pub g0: f64,
    pub delta: f64,
}

/// Running supremum of `G₀` over the steps seen so far.
#[derive(Clone, Debug, Default)]
pub struct ReflectionTracker {
    running_sup: f64,
    history: Vec<TrackerEntry>,
}

impl ReflectionTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Tracker whose first entry (step 0) is `g0_initial`.
    pub fn seeded(g0_initial: f64) -> Self {
        let mut t = Self::new();
        t.advance(g0_initial);
        t
    }

    pub fn running_sup(&self) -> f64 {
        self.running_sup
    }

    pub fn history(&self) -> &[TrackerEntry] {
        &self.history
    }

    /// Records `g0_value` and returns the increment of the running supremum.
    pub fn advance(&mut self, g0_value: f64) -> f64 {
        debug_assert!(g0_value >= 0.0);
        let delta = if g0_value > self.running_sup {
            g0_value - self.running_sup
        } else {
            0.0
        };
        if delta > 0.0 {
            self.running_sup = g0_value;
        }
        self.history.push(TrackerEntry {
            step: self.history.len(),
            g0: g0_value,
            delta,
        });
        delta
    }
}

/// Exact W₁ between two equal-size empirical measures: mean gap of sorted atoms.
pub fn wasserstein1(a: &EmpiricalMeasure<'_>, b: &EmpiricalMeasure<'_>) -> Result<f64, ReflectionError> {
    if a.len() != b.len() {
        return Err(ReflectionError::SizeMismatch(a.len(), b.len()));
    }
    let mut sa = a.atoms.to_vec();
    let mut sb = b.atoms.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let gaps: Vec<f64> = sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).collect();
    Ok(det_mean(&gaps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CustomConstraint, SlopeBounds};
    use std::f64::consts::{FRAC_PI_2, PI};
    use std::sync::Arc;

    fn m(atoms: &[f64]) -> EmpiricalMeasure<'_> {
        EmpiricalMeasure::new(atoms).unwrap()
    }

    #[test]
    fn h_mean_examples() {
        let lin = Constraint::linear(2.0).unwrap();
        assert_eq!(h_mean(0.0, &m(&[0.0, 2.0]), &lin), -1.0);
        let atoms = [0.3, -1.2, 4.0];
        let mean = (0.3 - 1.2 + 4.0) / 3.0;
        assert!((h_mean(0.7, &m(&atoms), &lin) - (0.7 + mean - 2.0)).abs() < 1e-15);
        let sine = Constraint::sine_perturbed(0.5, 0.0).unwrap();
        assert!((h_mean(PI, &m(&[0.0]), &sine) - PI).abs() < 1e-15);
    }

    #[test]
    fn g0_examples() {
        let lin = Constraint::linear(2.0).unwrap();
        assert_eq!(bar_g0(&m(&[0.0, 2.0]), &lin).unwrap(), 1.0);
        assert_eq!(g0(&m(&[0.0, 2.0]), &lin).unwrap(), 1.0);
        assert_eq!(bar_g0(&m(&[5.0]), &lin).unwrap(), -3.0);
        assert_eq!(g0(&m(&[5.0]), &lin).unwrap(), 0.0);
        assert_eq!(g0(&m(&[2.0, 2.5]), &lin).unwrap(), 0.0);
    }

    #[test]
    fn empty_and_nonfinite_measures() {
        assert_eq!(EmpiricalMeasure::new(&[]).unwrap_err(), ReflectionError::EmptyMeasure);
        assert_eq!(
            EmpiricalMeasure::new(&[1.0, f64::NAN]).unwrap_err(),
            ReflectionError::NonFiniteAtom(1)
        );
    }

    // Dense-grid scan oracle: locate the sign change of H on a fine grid, then
    // refine by repeated 10x grid zooms; no bisection involved.
    fn scan_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..6 {
            let n = 10_000;
            let step = (hi - lo) / n as f64;
            let mut prev = lo;
            for i in 1..=n {
                let x = lo + step * i as f64;
                if f(x) >= 0.0 {
                    lo = prev;
                    hi = x;
                    break;
                }
                prev = x;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn sine_root_matches_grid_scan() {
        let alpha = 0.9;
        let p = FRAC_PI_2;
        let c = Constraint::sine_perturbed(alpha, p).unwrap();
        let x0 = scan_root(|x| x + alpha * x.sin() - p, -5.0, 5.0);
        let atoms = [x0];
        let r = bar_g0(&m(&atoms), &c).unwrap();
        assert!(r.abs() < 1e-9, "shift {r}");

        let atoms = [0.1, -0.4, 1.3, 2.2];
        let scan = scan_root(|x| h_mean(x, &m(&atoms), &c), -10.0, 10.0);
        let fast = bar_g0(&m(&atoms), &c).unwrap();
        let slow = bar_g0_bisection(&m(&atoms), &c).unwrap();
        assert!((fast - scan).abs() < 1e-9, "{fast} vs {scan}");
        assert!((slow - scan).abs() < 1e-9, "{slow} vs {scan}");
        assert!(h_mean(fast, &m(&atoms), &c).abs() <= c.upper_slope() * TOL_X);
    }

    #[test]
    fn custom_constraint_without_bounds_grows_bracket() {
        let c = Constraint::custom(CustomConstraint {
            h: Arc::new(|x| x.cbrt() + x - 50.0),
            h_prime: None,
            h_second: None,
            bounds: None,
        })
        .unwrap();
        let atoms = [0.0];
        let r = bar_g0(&m(&atoms), &c).unwrap();
        assert!((r.cbrt() + r - 50.0).abs() < 1e-9);
    }

    #[test]
    fn inconsistent_bounds_are_reported() {
        // h has slope 3 but claims M = 1.5
        let c = Constraint::custom(CustomConstraint {
            h: Arc::new(|x| 3.0 * x - 3.0),
            h_prime: None,
            h_second: None,
            bounds: Some(SlopeBounds { lower: 1.2, upper: 1.5 }),
        })
        .unwrap();
        let err = bar_g0(&m(&[0.0]), &c).unwrap_err();
        assert!(matches!(err, ReflectionError::NoConvergence(_)));
    }

    #[test]
    fn tracker_examples() {
        let mut t = ReflectionTracker::new();
        assert_eq!(t.advance(0.3), 0.3);

        let mut t = ReflectionTracker::seeded(0.5);
        assert_eq!(t.advance(0.2), 0.0);
        assert_eq!(t.advance(0.5), 0.0);

        let mut t = ReflectionTracker::new();
        let deltas: Vec<f64> = [0.1, 0.4, 0.2, 0.9].iter().map(|&g| t.advance(g)).collect();
        let expect = [0.1, 0.3, 0.0, 0.5];
        for (d, e) in deltas.iter().zip(expect) {
            assert!((d - e).abs() < 1e-15);
        }
        assert_eq!(t.running_sup(), 0.9);
        assert_eq!(t.history().len(), 4);
        assert_eq!(t.history()[3].step, 3);
    }

    #[test]
    fn wasserstein_examples() {
        assert_eq!(wasserstein1(&m(&[1.0, 2.0]), &m(&[2.0, 1.0])).unwrap(), 0.0);
        assert_eq!(wasserstein1(&m(&[0.0, 1.0]), &m(&[1.0, 2.0])).unwrap(), 1.0);
        assert_eq!(wasserstein1(&m(&[0.0]), &m(&[3.0])).unwrap(), 3.0);
        assert_eq!(
            wasserstein1(&m(&[0.0]), &m(&[3.0, 1.0])).unwrap_err(),
            ReflectionError::SizeMismatch(1, 2)
        );
    }
}
