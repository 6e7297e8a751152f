//! Time-dependent pulses, Stark chirps, spatial coupling amplitudes, and
//! assembly of the interaction Hamiltonian
//!
//!   H(τ) = Σⱼ Δⱼ(τ)/2 σ_zʲ + Σⱼ ηⱼ(τ) (a†σ₋ʲ + a σ₊ʲ)
//!
//! All rates (g, Δ₀, γ, Γ) are dimensionless, expressed in units of 1/σ with
//! σ the interaction time; τ is the matching dimensionless time. Because
//! physical time is t = 2στ, the evolution generator carries a Jacobian
//! factor of 2 — that factor is applied once when a configuration enters the
//! dynamics module ([`crate::dynamics`]), never here and never inside the
//! stepper.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{check_space, HilbertSpace, Operator, OperatorSet};

/// Atom label.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Atom {
    One,
    Two,
}

/// Gaussian pulse amplitudes and half-delay.
///
/// η₁(τ) = g₁ exp(−(τ+δ)²), η₂(τ) = g₂ exp(−(τ−δ)²). `g2` may be negative
/// (standing-wave cosine); no absolute value is ever taken.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    pub g1: f64,
    pub g2: f64,
    pub delta: f64,
}

impl PulseParams {
    pub fn symmetric(g0: f64, delta: f64) -> Self {
        Self {
            g1: g0,
            g2: g0,
            delta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g1 > 0.0) {
            return Err(Error::Validation {
                field: "pulses.g1".into(),
                message: format!("must be positive, got {}", self.g1),
            });
        }
        if !(self.delta >= 0.0) {
            return Err(Error::Validation {
                field: "pulses.delta".into(),
                message: format!("must be nonnegative, got {}", self.delta),
            });
        }
        Ok(())
    }
}

/// Stark-chirp parameters: Δ₁(τ) = Δ₀ exp(−(τ+τ₀)²/σ_s²), Δ₂(τ) = −Δ₁(−τ).
///
/// The user supplies a single nonnegative amplitude; the sign flip for the
/// second atom is internal.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChirpParams {
    pub delta0: f64,
    pub tau0: f64,
    pub sigma_s: f64,
}

impl ChirpParams {
    pub fn off() -> Self {
        Self {
            delta0: 0.0,
            tau0: 2.0,
            sigma_s: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_s > 0.0) {
            return Err(Error::Validation {
                field: "chirps.sigma_s".into(),
                message: format!("must be positive, got {}", self.sigma_s),
            });
        }
        if !(self.tau0 >= 0.0) {
            return Err(Error::Validation {
                field: "chirps.tau0".into(),
                message: format!("must be nonnegative, got {}", self.tau0),
            });
        }
        Ok(())
    }
}

/// Positions of the two trajectories inside a standing-wave Gaussian mode.
///
/// Lengths share one arbitrary unit; `waist` is the mode half-waist w₀ of the
/// transverse profile exp(−y²/(2w₀)²).
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialConfig {
    pub g0: f64,
    pub z1: f64,
    pub z2: f64,
    pub y1: f64,
    pub y2: f64,
    pub wavelength: f64,
    pub waist: f64,
}

impl SpatialConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength > 0.0) {
            return Err(Error::Validation {
                field: "spatial.wavelength".into(),
                message: format!("must be positive, got {}", self.wavelength),
            });
        }
        if !(self.waist > 0.0) {
            return Err(Error::Validation {
                field: "spatial.waist".into(),
                message: format!("must be positive, got {}", self.waist),
            });
        }
        Ok(())
    }
}

/// Integrator tolerances; the mixed-state path is allowed a looser default
/// because the density representation squares the dimension.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub pure: f64,
    pub mixed: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            pure: 1e-9,
            mixed: 1e-8,
        }
    }
}

/// Everything needed to integrate one passage of the atom pair.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub pulses: PulseParams,
    pub chirps: ChirpParams,
    /// Fock cutoff N; dim = 4(N+1).
    pub cutoff: usize,
    /// Cavity decay rate γ in units of 1/σ.
    pub gamma_c: f64,
    /// Per-atom spontaneous-emission rate Γ in units of 1/σ.
    pub gamma_s: f64,
    /// Integration interval in τ.
    pub window: (f64, f64),
    pub tol: Tolerances,
}

impl ModelConfig {
    /// Default cutoff; the protocol occupies excitation sectors 0–2 and decay
    /// only lowers excitation.
    pub const DEFAULT_CUTOFF: usize = 3;

    pub fn new(pulses: PulseParams, chirps: ChirpParams) -> Self {
        Self {
            pulses,
            chirps,
            cutoff: Self::DEFAULT_CUTOFF,
            gamma_c: 0.0,
            gamma_s: 0.0,
            window: default_window(pulses.delta),
            tol: Tolerances::default(),
        }
    }

    pub fn space(&self) -> HilbertSpace {
        HilbertSpace::new(self.cutoff)
    }

    pub fn is_closed(&self) -> bool {
        self.gamma_c == 0.0 && self.gamma_s == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        self.pulses.validate()?;
        self.chirps.validate()?;
        if self.gamma_c < 0.0 || self.gamma_s < 0.0 {
            return Err(Error::Validation {
                field: "decay".into(),
                message: "rates must be nonnegative".into(),
            });
        }
        if !(self.window.0 < self.window.1) {
            return Err(Error::Validation {
                field: "window".into(),
                message: format!("start {} must precede end {}", self.window.0, self.window.1),
            });
        }
        if !(self.tol.pure > 0.0 && self.tol.mixed > 0.0) {
            return Err(Error::Validation {
                field: "tol".into(),
                message: "tolerances must be positive".into(),
            });
        }
        Ok(())
    }
}

/// All pulses fall below e⁻²⁰ of peak outside ±(δ+6); truncation there is
/// negligible against integrator tolerance.
pub fn default_window(delta: f64) -> (f64, f64) {
    (-(delta + 6.0), delta + 6.0)
}

/// Coupling ηⱼ(τ) of atom j to the mode.
pub fn coupling(tau: f64, atom: Atom, p: &PulseParams) -> f64 {
    match atom {
        Atom::One => p.g1 * (-(tau + p.delta).powi(2)).exp(),
        Atom::Two => p.g2 * (-(tau - p.delta).powi(2)).exp(),
    }
}

/// Stark detuning Δⱼ(τ) of atom j.
pub fn detuning(tau: f64, atom: Atom, c: &ChirpParams) -> f64 {
    match atom {
        Atom::One => c.delta0 * (-((tau + c.tau0) / c.sigma_s).powi(2)).exp(),
        Atom::Two => -c.delta0 * (-((tau - c.tau0) / c.sigma_s).powi(2)).exp(),
    }
}

/// Peak couplings gⱼ = g₀ cos(k zⱼ) exp(−yⱼ²/(2w₀)²) with k = 2π/λ.
pub fn spatial_amplitudes(s: &SpatialConfig) -> (f64, f64) {
    let k = 2.0 * PI / s.wavelength;
    let amp = |z: f64, y: f64| s.g0 * (k * z).cos() * (-(y / (2.0 * s.waist)).powi(2)).exp();
    (amp(s.z1, s.y1), amp(s.z2, s.y2))
}

/// Assemble H(τ) on the operator set's space.
pub fn hamiltonian(tau: f64, config: &ModelConfig, ops: &OperatorSet) -> Result<Operator> {
    check_space(config.space(), ops.space)?;
    let d1 = detuning(tau, Atom::One, &config.chirps);
    let d2 = detuning(tau, Atom::Two, &config.chirps);
    let e1 = coupling(tau, Atom::One, &config.pulses);
    let e2 = coupling(tau, Atom::Two, &config.pulses);
    let mut m = &ops.sigma_z[0].matrix * num_complex::Complex64::from(0.5 * d1);
    m += &ops.sigma_z[1].matrix * num_complex::Complex64::from(0.5 * d2);
    m += &ops.exchange[0].matrix * num_complex::Complex64::from(e1);
    m += &ops.exchange[1].matrix * num_complex::Complex64::from(e2);
    Ok(Operator {
        space: ops.space,
        matrix: m,
    })
}

/// Time of the pure energy crossing, τ_c = ln(g₁/g₂)/(4δ).
pub fn crossing_time(g1: f64, g2: f64, delta: f64) -> Result<f64> {
    if !(g1 > 0.0 && g2 > 0.0) {
        return Err(Error::Domain(format!(
            "crossing time needs positive couplings, got ({g1}, {g2})"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::Domain(format!(
            "crossing time needs positive delay, got {delta}"
        )));
    }
    Ok((g1 / g2).ln() / (4.0 * delta))
}

/// Dimensionless pulse geometry derived from laboratory quantities.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Dimensionless {
    /// Interaction time σ = w₀/v, in the unit of `delta_t`.
    pub sigma: f64,
    pub delta: f64,
    pub tau0: f64,
    pub sigma_s: f64,
}

/// Convert laboratory quantities to the dimensionless parameters:
/// σ = w₀/v, δ = Δt/(2σ), τ₀ = (vΔt + x₀)/(2w₀), σ_s = L/w₀.
///
/// `w0` is the mode half-waist, `v` the common atomic speed, `delta_t` the
/// half-delay between the atoms, `x0` the Stark-pulse offset from the cavity
/// center, and `half_width` the Stark-pulse half-width L.
pub fn dimensionless_from_physical(
    w0: f64,
    v: f64,
    delta_t: f64,
    x0: f64,
    half_width: f64,
) -> Result<Dimensionless> {
    for (name, value) in [
        ("w0", w0),
        ("v", v),
        ("delta_t", delta_t),
        ("x0", x0),
        ("half_width", half_width),
    ] {
        if !(value > 0.0) {
            return Err(Error::Domain(format!(
                "physical parameter {name} must be positive, got {value}"
            )));
        }
    }
    let sigma = w0 / v;
    Ok(Dimensionless {
        sigma,
        delta: delta_t / (2.0 * sigma),
        tau0: (v * delta_t + x0) / (2.0 * w0),
        sigma_s: half_width / w0,
    })
}
