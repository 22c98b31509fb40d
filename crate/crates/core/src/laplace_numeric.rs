//! Floating-point quadrature of the two integral representations of
//! `E[exp(-s X_(n))]`, used as an independent numerical cross-check of the
//! exact rational value.

use thiserror::Error;

/// Smallest tolerance accepted by the quadrature routines.
pub const MIN_TOLERANCE: f64 = 1e-13;

const PANELS: usize = 64;
const MAX_DEPTH: u32 = 48;
const MAX_EVALUATIONS: u64 = 20_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("refinement budget exhausted before reaching tolerance {tol:e}")]
    ToleranceNotMet { tol: f64 },
    #[error("n must be at least 1 for the density form")]
    NRequired,
    #[error("s must be positive and finite, got {0}")]
    InvalidS(f64),
    #[error("tolerance must be at least {MIN_TOLERANCE:e}, got {0:e}")]
    InvalidTolerance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub estimated_error: f64,
    pub evaluations: u64,
}

struct Integrator<F> {
    f: F,
    evaluations: u64,
    error: f64,
}

impl<F: Fn(f64) -> f64> Integrator<F> {
    fn eval(&mut self, x: f64) -> Result<f64, ()> {
        self.evaluations += 1;
        if self.evaluations > MAX_EVALUATIONS {
            return Err(());
        }
        Ok((self.f)(x))
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64, ()> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            self.error += delta.abs() / 15.0;
            return Ok(left + right + delta / 15.0);
        }
        if depth >= MAX_DEPTH {
            return Err(());
        }
        Ok(self.refine(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?
            + self.refine(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?)
    }
}

/// Adaptive Simpson quadrature over `[a, b]`, started from a fixed number of
/// equal panels so narrow features are not skipped by the first estimate.
/// The tolerance is shared between panels in proportion to their width.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<QuadratureResult, QuadratureError> {
    let mut integrator = Integrator {
        f,
        evaluations: 0,
        error: 0.0,
    };
    let not_met = |_| QuadratureError::ToleranceNotMet { tol };
    let width = (b - a) / PANELS as f64;
    let panel_tol = tol / PANELS as f64;
    let mut total = 0.0;
    let mut fa = integrator.eval(a).map_err(not_met)?;
    for i in 0..PANELS {
        let lo = a + width * i as f64;
        let hi = if i + 1 == PANELS { b } else { lo + width };
        let mid = 0.5 * (lo + hi);
        let fm = integrator.eval(mid).map_err(not_met)?;
        let fb = integrator.eval(hi).map_err(not_met)?;
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        total += integrator
            .refine(lo, hi, fa, fm, fb, whole, panel_tol, 0)
            .map_err(not_met)?;
        fa = fb;
    }
    if !total.is_finite() {
        return Err(QuadratureError::ToleranceNotMet { tol });
    }
    Ok(QuadratureResult {
        value: total,
        estimated_error: integrator.error,
        evaluations: integrator.evaluations,
    })
}

fn check_inputs(s: f64, tol: f64) -> Result<(), QuadratureError> {
    if !(s.is_finite() && s > 0.0) {
        return Err(QuadratureError::InvalidS(s));
    }
    if !(tol.is_finite() && tol >= MIN_TOLERANCE) {
        return Err(QuadratureError::InvalidTolerance(tol));
    }
    Ok(())
}

/// Upper limit for the `t` integral: the neglected tail is at most
/// `exp(-s T) = tol / 2`.
pub fn truncation_point(s: f64, tol: f64) -> f64 {
    (2.0 / tol).ln() / s
}

/// `s * int_0^inf (1 - e^-t)^n e^(-s t) dt`, the distribution-function form.
pub fn laplace_via_cdf_quadrature(s: f64, n: u64, tol: f64) -> Result<QuadratureResult, QuadratureError> {
    check_inputs(s, tol)?;
    let upper = truncation_point(s, tol);
    let exponent = n as i32;
    let integrand = move |t: f64| s * (-(-t).exp_m1()).powi(exponent) * (-s * t).exp();
    let mut result = adaptive_simpson(integrand, 0.0, upper, 0.5 * tol)?;
    result.estimated_error += (-s * upper).exp();
    if result.estimated_error > tol {
        return Err(QuadratureError::ToleranceNotMet { tol });
    }
    Ok(result)
}

/// `n * int_0^1 (1 - w)^s w^(n-1) dw`, the density form after `w = 1 - e^-t`.
pub fn laplace_via_density_quadrature(s: f64, n: u64, tol: f64) -> Result<QuadratureResult, QuadratureError> {
    check_inputs(s, tol)?;
    if n == 0 {
        return Err(QuadratureError::NRequired);
    }
    let scale = n as f64;
    let exponent = (n - 1) as i32;
    let integrand = move |w: f64| scale * (1.0 - w).powf(s) * w.powi(exponent);
    // continuous on the closed interval for every n >= 1 and s > 0
    debug_assert!(integrand(0.0).is_finite() && integrand(1.0).is_finite());
    let result = adaptive_simpson(integrand, 0.0, 1.0, tol)?;
    if result.estimated_error > tol {
        return Err(QuadratureError::ToleranceNotMet { tol });
    }
    Ok(result)
}
