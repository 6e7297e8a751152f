//! Embedded Dormand–Prince 5(4) integrator with PI step-size control.
//!
//! Works on any state exposing its components as a flat complex slice, so the
//! same stepper drives state vectors and density matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Flat view of an integrable state.
pub trait OdeState: Clone {
    fn components(&self) -> &[Complex64];
    fn components_mut(&mut self) -> &mut [Complex64];
}

impl OdeState for DVector<Complex64> {
    fn components(&self) -> &[Complex64] {
        self.as_slice()
    }
    fn components_mut(&mut self) -> &mut [Complex64] {
        self.as_mut_slice()
    }
}

impl OdeState for DMatrix<Complex64> {
    fn components(&self) -> &[Complex64] {
        self.as_slice()
    }
    fn components_mut(&mut self) -> &mut [Complex64] {
        self.as_mut_slice()
    }
}

#[derive(Copy, Clone, Debug)]
pub struct StepperOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for StepperOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 20_000_000,
        }
    }
}

// Dormand–Prince coefficients (the dopri5 tableau; the 5th-order weights
// double as the last stage row, giving the FSAL property).
const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// b − b*: weights of the embedded error estimate
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn combine<S: OdeState>(out: &mut S, base: &S, h: f64, terms: &[(f64, &S)]) {
    let o = out.components_mut();
    o.copy_from_slice(base.components());
    for &(w, k) in terms {
        let wk = Complex64::from(h * w);
        for (oi, ki) in o.iter_mut().zip(k.components()) {
            *oi += wk * ki;
        }
    }
}

fn error_norm<S: OdeState>(ks: &[&S; 7], y0: &S, y1: &S, h: f64, opts: &StepperOptions) -> f64 {
    let n = y0.components().len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut e = Complex64::new(0.0, 0.0);
        for (w, k) in E.iter().zip(ks.iter()) {
            e += Complex64::from(*w) * k.components()[i];
        }
        let e = h * e.norm();
        let scale = opts.atol
            + opts.rtol * y0.components()[i].norm().max(y1.components()[i].norm());
        acc += (e / scale).powi(2);
    }
    (acc / n as f64).sqrt()
}

/// Integrate dy/dt = f(t, y) from `span.0` to `span.1`.
///
/// `rhs(t, y, dydt)` writes the derivative in place; `on_step` sees every
/// accepted step including the initial point. Fails with the last good t if
/// the step size collapses or the step budget runs out.
pub fn integrate<S, F, O>(
    mut rhs: F,
    y0: S,
    span: (f64, f64),
    opts: &StepperOptions,
    mut on_step: O,
) -> Result<S>
where
    S: OdeState,
    F: FnMut(f64, &S, &mut S),
    O: FnMut(f64, &S),
{
    let (t0, t1) = span;
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(format!(
            "integration span must be increasing, got [{t0}, {t1}]"
        )));
    }
    let total = t1 - t0;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = y.clone();
    rhs(t, &y, &mut k1);
    on_step(t, &y);

    // initial step from the local derivative scale
    let mut h = {
        let d0 = rms_scaled(&y, &y, opts);
        let d1 = rms_scaled(&k1, &y, opts);
        let guess = if d1 > 1e-10 { 0.01 * d0 / d1 } else { 1e-6 * total };
        guess.min(0.1 * total).max(1e-10 * total)
    };

    let mut k2 = y.clone();
    let mut k3 = y.clone();
    let mut k4 = y.clone();
    let mut k5 = y.clone();
    let mut k6 = y.clone();
    let mut k7 = y.clone();
    let mut stage = y.clone();
    let mut y_next = y.clone();

    const SAFETY: f64 = 0.9;
    const MIN_FACTOR: f64 = 0.2;
    const MAX_FACTOR: f64 = 10.0;
    // PI controller exponents (Hairer's dopri5 defaults)
    const BETA: f64 = 0.04;
    const ALPHA: f64 = 0.2 - 0.75 * BETA;
    let mut err_old: f64 = 1e-4;
    let mut rejected = false;

    for _ in 0..opts.max_steps {
        if t + h > t1 {
            h = t1 - t;
        }
        if h <= f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::Integration {
                tau: t,
                reason: "step size collapsed below machine precision".into(),
            });
        }

        combine(&mut stage, &y, h, &[(A2[0], &k1)]);
        rhs(t + C[0] * h, &stage, &mut k2);
        combine(&mut stage, &y, h, &[(A3[0], &k1), (A3[1], &k2)]);
        rhs(t + C[1] * h, &stage, &mut k3);
        combine(&mut stage, &y, h, &[(A4[0], &k1), (A4[1], &k2), (A4[2], &k3)]);
        rhs(t + C[2] * h, &stage, &mut k4);
        combine(
            &mut stage,
            &y,
            h,
            &[(A5[0], &k1), (A5[1], &k2), (A5[2], &k3), (A5[3], &k4)],
        );
        rhs(t + C[3] * h, &stage, &mut k5);
        combine(
            &mut stage,
            &y,
            h,
            &[
                (A6[0], &k1),
                (A6[1], &k2),
                (A6[2], &k3),
                (A6[3], &k4),
                (A6[4], &k5),
            ],
        );
        rhs(t + C[4] * h, &stage, &mut k6);
        combine(
            &mut y_next,
            &y,
            h,
            &[
                (B[0], &k1),
                (B[2], &k3),
                (B[3], &k4),
                (B[4], &k5),
                (B[5], &k6),
            ],
        );
        rhs(t + h, &y_next, &mut k7);

        let err = error_norm(&[&k1, &k2, &k3, &k4, &k5, &k6, &k7], &y, &y_next, h, opts);

        if err <= 1.0 {
            t += h;
            std::mem::swap(&mut y, &mut y_next);
            std::mem::swap(&mut k1, &mut k7); // FSAL
            on_step(t, &y);
            if t >= t1 {
                return Ok(y);
            }
            let err = err.max(1e-16);
            let mut factor = SAFETY * err.powf(-ALPHA) * err_old.powf(BETA);
            factor = factor.clamp(MIN_FACTOR, if rejected { 1.0 } else { MAX_FACTOR });
            err_old = err;
            rejected = false;
            h *= factor;
        } else {
            let factor = (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            h *= factor;
            rejected = true;
        }
    }

    Err(Error::Integration {
        tau: t,
        reason: format!("step budget of {} exhausted", opts.max_steps),
    })
}

fn rms_scaled<S: OdeState>(v: &S, reference: &S, opts: &StepperOptions) -> f64 {
    let n = v.components().len();
    let mut acc = 0.0;
    for (vi, ri) in v.components().iter().zip(reference.components()) {
        let scale = opts.atol + opts.rtol * ri.norm();
        acc += (vi.norm() / scale).powi(2);
    }
    (acc / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_rhs_is_linear() {
        let y0 = DVector::from_element(1, Complex64::new(0.0, 0.0));
        let y = integrate(
            |_t, _y: &DVector<Complex64>, dy: &mut DVector<Complex64>| {
                dy[0] = Complex64::new(1.0, 0.0);
            },
            y0,
            (0.0, 2.0),
            &StepperOptions::default(),
            |_, _| {},
        )
        .unwrap();
        assert_relative_eq!(y[0].re, 2.0, max_relative = 1e-10);
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let y0 = DVector::from_element(1, Complex64::new(1.0, 0.0));
        let y = integrate(
            |_t, y: &DVector<Complex64>, dy: &mut DVector<Complex64>| {
                dy[0] = -y[0];
            },
            y0,
            (0.0, 3.0),
            &StepperOptions::default(),
            |_, _| {},
        )
        .unwrap();
        assert_relative_eq!(y[0].re, (-3.0f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn phase_rotation_preserves_norm() {
        // dy/dt = -i ω y with stiff-ish ω exercises the controller
        let omega = 60.0;
        let y0 = DVector::from_element(1, Complex64::new(1.0, 0.0));
        let mut steps = 0usize;
        let y = integrate(
            |_t, y: &DVector<Complex64>, dy: &mut DVector<Complex64>| {
                dy[0] = Complex64::new(0.0, -omega) * y[0];
            },
            y0,
            (0.0, 10.0),
            &StepperOptions::default(),
            |_, _| steps += 1,
        )
        .unwrap();
        assert_relative_eq!(y[0].norm(), 1.0, max_relative = 1e-9);
        let expected = Complex64::new(0.0, -omega * 10.0).exp();
        assert!((y[0] - expected).norm() < 1e-6);
        assert!(steps > 10);
    }

    #[test]
    fn tighter_tolerance_reduces_error() {
        let run = |rtol: f64| {
            let opts = StepperOptions {
                rtol,
                ..Default::default()
            };
            let y0 = DVector::from_element(1, Complex64::new(1.0, 0.0));
            let y = integrate(
                |t, y: &DVector<Complex64>, dy: &mut DVector<Complex64>| {
                    dy[0] = Complex64::new(0.0, -t) * y[0];
                },
                y0,
                (0.0, 6.0),
                &opts,
                |_, _| {},
            )
            .unwrap();
            let exact = Complex64::new(0.0, -18.0).exp();
            (y[0] - exact).norm()
        };
        assert!(run(1e-10) < run(1e-6));
    }

    #[test]
    fn backwards_span_rejected() {
        let y0 = DVector::from_element(1, Complex64::new(1.0, 0.0));
        let r = integrate(
            |_t, _y: &DVector<Complex64>, dy: &mut DVector<Complex64>| {
                dy[0] = Complex64::new(0.0, 0.0);
            },
            y0,
            (1.0, 0.0),
            &StepperOptions::default(),
            |_, _| {},
        );
        assert!(r.is_err());
    }
}
