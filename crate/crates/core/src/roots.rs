//! Bracketed bisection for increasing scalar functions.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("bracket [{lo}, {hi}] does not enclose a sign change (f(lo)={f_lo}, f(hi)={f_hi})")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("bisection did not reach tolerance within {0} iterations")]
    NoConvergence(usize),
    #[error("non-finite value in bracket")]
    NonFinite,
}

/// Root of an increasing `f` on `[lo, hi]`, to absolute width `tol`.
///
/// Stops early when the midpoint can no longer be represented strictly
/// between the endpoints.
pub fn bisect_increasing<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> Result<f64, RootError>
where
    F: FnMut(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(RootError::NonFinite);
    }
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let f_lo = f(lo);
    let f_hi = f(hi);
    if !(f_lo.is_finite() && f_hi.is_finite()) {
        return Err(RootError::NonFinite);
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(RootError::NoSignChange { lo, hi, f_lo, f_hi });
    }
    for _ in 0..max_iter {
        if hi - lo <= tol {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let v = f(mid);
        if v == 0.0 {
            return Ok(mid);
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi - lo <= tol {
        Ok(0.5 * (lo + hi))
    } else {
        Err(RootError::NoConvergence(max_iter))
    }
}

/// Grows `[-1, 1]` by doubling until `f` changes sign; gives up past 2^64.
pub fn grow_bracket<F>(mut f: F) -> Option<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let mut width = 1.0f64;
    let cap = 2f64.powi(64);
    while width <= cap {
        if f(-width) <= 0.0 && f(width) >= 0.0 {
            return Some((-width, width));
        }
        width *= 2.0;
    }
    None
}
