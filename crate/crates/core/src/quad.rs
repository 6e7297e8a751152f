//! Adaptive Simpson quadrature for the smooth phase integrands.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

/// ∫ₐᵇ f, bisecting until the Richardson estimate meets `abs_tol`.
pub(crate) fn adaptive_simpson<F>(f: &F, a: f64, b: f64, abs_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(b > a) {
        return Err(Error::InvalidArgument(format!(
            "quadrature interval must be increasing, got [{a}, {b}]"
        )));
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(a, b, fa, fm, fb);
    recurse(f, a, b, fa, fm, fb, whole, abs_tol, MAX_DEPTH)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature { a, b });
    }
    let half_tol = 0.5 * tol;
    Ok(recurse(f, a, m, fa, flm, fm, left, half_tol, depth - 1)?
        + recurse(f, m, b, fm, frm, fb, right, half_tol, depth - 1)?)
}
