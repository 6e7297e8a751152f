//! Instantaneous spectra, adiabatic phases, the ideal sector map, and the
//! chirp-amplitude solver.
//!
//! The entangling protocol lives in the single-excitation sector. In the
//! sector labeling used by the ideal map (states |n; e,e⟩, |n+1; g,e⟩,
//! |n+1; e,g⟩, |n+2; g,g⟩) that is the label n = −1, so the exchange weight
//! √(n+2) reduces to 1. Phases below are plain numbers (radians); the t = 2στ
//! Jacobian is included in the quadratures once.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dynamics::TIME_JACOBIAN;
use crate::error::{Error, Result};
use crate::hilbert::{
    build_operators, hermitian_eigenpairs, AtomLevel, BasisState, HilbertSpace, StateVector,
};
use crate::model::{coupling, detuning, hamiltonian, Atom, ModelConfig};
use crate::quad::adaptive_simpson;

/// Eigenvalue degeneracy below which overlap matching is declared ambiguous
/// and a crossing is flagged.
const DEGENERACY_TOL: f64 = 1e-8;
/// Eigenvector continuity threshold for branch tracking.
const OVERLAP_THRESHOLD: f64 = 0.9;
/// Absolute quadrature tolerance for phases, in radians.
const PHASE_TOL: f64 = 1e-8;

/// One sampled point of a tracked branch.
#[derive(Clone, Debug)]
pub struct EigenSample {
    pub tau: f64,
    pub energy: f64,
    pub eigenvector: DVector<Complex64>,
}

/// A branch of the instantaneous spectrum, tracked across τ by eigenvector
/// overlap. `curve_id` orders branches by energy at the first grid point.
#[derive(Clone, Debug)]
pub struct EigenCurve {
    pub sector: usize,
    pub curve_id: usize,
    pub samples: Vec<EigenSample>,
}

/// Location where two tracked branches meet (a pure crossing: the branches
/// pass through each other diabatically).
#[derive(Clone, Copy, Debug)]
pub struct CrossingFlag {
    pub tau: f64,
    pub curves: (usize, usize),
}

/// Tracked spectrum of one excitation sector.
#[derive(Clone, Debug)]
pub struct SpectrumScan {
    pub sector: usize,
    pub curves: Vec<EigenCurve>,
    pub crossings: Vec<CrossingFlag>,
}

fn sector_indices(space: HilbertSpace, sector: usize) -> Vec<usize> {
    space
        .sector_states(sector)
        .into_iter()
        .map(|b| space.index(b).expect("sector states enumerate in range"))
        .collect()
}

fn sector_matrix(
    config: &ModelConfig,
    ops: &crate::hilbert::OperatorSet,
    indices: &[usize],
    tau: f64,
) -> Result<DMatrix<Complex64>> {
    let h = hamiltonian(tau, config, ops)?;
    Ok(DMatrix::from_fn(indices.len(), indices.len(), |r, c| {
        h.matrix[(indices[r], indices[c])]
    }))
}

/// Diagonalize H(τ) restricted to one excitation sector on a τ grid and track
/// the branches by maximal eigenvector overlap.
///
/// Exact crossings are flagged and tracked diabatically: branch energies are
/// continued by linear extrapolation and identities re-established by overlap
/// on the far side. Ambiguity away from a degeneracy is an error carrying the
/// offending τ.
pub fn instantaneous_spectrum(
    config: &ModelConfig,
    grid: &[f64],
    sector: usize,
) -> Result<SpectrumScan> {
    config.validate()?;
    if grid.len() < 2 {
        return Err(Error::InvalidArgument(
            "spectrum scan needs at least two grid points".into(),
        ));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "spectrum grid must be strictly increasing".into(),
        ));
    }
    let space = config.space();
    let indices = sector_indices(space, sector);
    if indices.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "excitation sector {sector} is empty at cutoff {}",
            space.cutoff()
        )));
    }
    let ops = build_operators(space);
    let k = indices.len();

    let mut curves: Vec<EigenCurve> = (0..k)
        .map(|curve_id| EigenCurve {
            sector,
            curve_id,
            samples: Vec::with_capacity(grid.len()),
        })
        .collect();
    let mut crossings: Vec<CrossingFlag> = Vec::new();

    // previous eigenvector per curve, in curve order
    let mut prev_vecs: Vec<DVector<Complex64>> = Vec::new();

    for (step, &tau) in grid.iter().enumerate() {
        let sub = sector_matrix(config, &ops, &indices, tau)?;
        let (vals, vecs) = hermitian_eigenpairs(&sub);

        let assignment: Vec<usize> = if step == 0 {
            (0..k).collect()
        } else {
            // greedy max-overlap matching of curves onto fresh eigenvectors
            let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(k * k);
            for (c, pv) in prev_vecs.iter().enumerate() {
                for (e, nv) in vecs.iter().enumerate() {
                    pairs.push((pv.dotc(nv).norm(), c, e));
                }
            }
            pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
            let mut curve_to_eig = vec![usize::MAX; k];
            let mut eig_taken = vec![false; k];
            let mut matched_overlap = vec![0.0f64; k];
            for (ov, c, e) in pairs {
                if curve_to_eig[c] == usize::MAX && !eig_taken[e] {
                    curve_to_eig[c] = e;
                    eig_taken[e] = true;
                    matched_overlap[c] = ov;
                }
            }
            // an ambiguous match is tolerated only inside a near-degeneracy
            for c in 0..k {
                if matched_overlap[c] < OVERLAP_THRESHOLD {
                    let e = curve_to_eig[c];
                    let near_degenerate = vals
                        .iter()
                        .enumerate()
                        .any(|(o, &v)| o != e && (v - vals[e]).abs() < DEGENERACY_TOL.max(1e-6 * v.abs()));
                    if !near_degenerate {
                        return Err(Error::BranchTracking {
                            tau,
                            reason: format!(
                                "overlap {} below {} for curve {} outside any degeneracy; refine the grid",
                                matched_overlap[c], OVERLAP_THRESHOLD, c
                            ),
                        });
                    }
                }
            }
            curve_to_eig
        };

        for (c, curve) in curves.iter_mut().enumerate() {
            let e = assignment[c];
            curve.samples.push(EigenSample {
                tau,
                energy: vals[e],
                eigenvector: vecs[e].clone(),
            });
        }
        prev_vecs = curves
            .iter()
            .map(|c| c.samples.last().expect("just pushed").eigenvector.clone())
            .collect();

        // flag exact degeneracies seen on the grid
        for i in 0..k {
            for j in (i + 1)..k {
                let ei = curves[i].samples[step].energy;
                let ej = curves[j].samples[step].energy;
                if (ei - ej).abs() < DEGENERACY_TOL {
                    crossings.push(CrossingFlag {
                        tau,
                        curves: (i, j),
                    });
                }
            }
        }
    }

    // crossings between samples: energy differences changing sign
    for i in 0..k {
        for j in (i + 1)..k {
            for step in 1..grid.len() {
                let d_prev =
                    curves[i].samples[step - 1].energy - curves[j].samples[step - 1].energy;
                let d_here = curves[i].samples[step].energy - curves[j].samples[step].energy;
                if d_prev * d_here < 0.0 {
                    let t0 = grid[step - 1];
                    let t1 = grid[step];
                    let tau = t0 + (t1 - t0) * d_prev / (d_prev - d_here);
                    crossings.push(CrossingFlag {
                        tau,
                        curves: (i, j),
                    });
                }
            }
        }
    }
    crossings.sort_by(|a, b| a.tau.partial_cmp(&b.tau).unwrap_or(std::cmp::Ordering::Equal));

    Ok(SpectrumScan {
        sector,
        curves,
        crossings,
    })
}

/// Resonant dynamical phase φ_n together with its chirp-induced shift.
#[derive(Clone, Copy, Debug)]
pub struct PhasePair {
    pub phi_n: f64,
    pub shift: f64,
    pub phi_tilde: f64,
}

impl PhasePair {
    pub fn compute(config: &ModelConfig, n: i32) -> Result<Self> {
        let phi_n = resonant_phase(config, n)?;
        let shift = chirp_phase_shift(config, n)?;
        Ok(Self {
            phi_n,
            shift,
            phi_tilde: phi_n + shift,
        })
    }
}

fn sector_for_label(config: &ModelConfig, n: i32) -> Result<usize> {
    if n < -1 {
        return Err(Error::InvalidArgument(format!(
            "sector label n must be ≥ −1, got {n}"
        )));
    }
    let sector = (n + 2) as usize;
    let space = config.space();
    if space.sector_states(sector).is_empty() {
        return Err(Error::InvalidArgument(format!(
            "sector label n = {n} has no states at cutoff {}",
            space.cutoff()
        )));
    }
    Ok(sector)
}

/// Resonant dynamical phase: the time integral (with the 2σ Jacobian) of the
/// top adiabatic branch of the sector's instantaneous spectrum.
///
/// The top branch is the one adiabatically connected to the ±|n+1; e₁, g₂⟩
/// superpositions whose interference produces the sector map; the choice is
/// validated against the numerically extracted propagator (see tests).
pub fn resonant_phase(config: &ModelConfig, n: i32) -> Result<f64> {
    config.validate()?;
    let sector = sector_for_label(config, n)?;
    let mut resonant = *config;
    resonant.chirps.delta0 = 0.0;
    let space = resonant.space();
    let ops = build_operators(space);
    let indices = sector_indices(space, sector);
    let top_energy = |tau: f64| -> f64 {
        let sub = sector_matrix(&resonant, &ops, &indices, tau)
            .expect("validated config builds everywhere");
        let (vals, _) = hermitian_eigenpairs(&sub);
        *vals.last().expect("sector non-empty")
    };
    let (a, b) = resonant.window;
    let integral = adaptive_simpson(&top_energy, a, b, PHASE_TOL / TIME_JACOBIAN)?;
    Ok(TIME_JACOBIAN * integral)
}

/// Chirp-induced phase shift, the detuning correction accumulated while each
/// atom crosses its Stark pulse alone:
///
///   2σ ∫ (√(Δ₁² + 4(n+2)η₁²) − 2η₁√(n+2)) dτ
///
/// The integrand is pointwise nonnegative and vanishes identically at Δ₀ = 0.
pub fn chirp_phase_shift(config: &ModelConfig, n: i32) -> Result<f64> {
    config.validate()?;
    sector_for_label(config, n)?;
    if config.chirps.delta0 == 0.0 {
        return Ok(0.0);
    }
    let weight = (n + 2) as f64;
    let pulses = config.pulses;
    let chirps = config.chirps;
    let integrand = move |tau: f64| -> f64 {
        let d1 = detuning(tau, Atom::One, &chirps);
        let e1 = coupling(tau, Atom::One, &pulses);
        (d1 * d1 + 4.0 * weight * e1 * e1).sqrt() - 2.0 * e1 * weight.sqrt()
    };
    let (a, b) = config.window;
    let integral = adaptive_simpson(&integrand, a, b, PHASE_TOL / TIME_JACOBIAN)?;
    Ok((TIME_JACOBIAN * integral).max(0.0))
}

/// Apply the ideal adiabatic sector map with phase φ̃ to a state:
///
///   |n; e,e⟩   → |n; e,e⟩
///   |n+1; g,e⟩ → −|n+1; e,g⟩
///   |n+1; e,g⟩ → cos φ̃ |n+1; g,e⟩ − i sin φ̃ |n+2; g,g⟩
///   |n+2; g,g⟩ → −i sin φ̃ |n+1; g,e⟩ + cos φ̃ |n+2; g,g⟩
///
/// with |0; g,g⟩ fixed. Errors if the state has support on |N; e,g⟩ (the map
/// needs |n+2⟩ headroom above every occupied e,g rung).
pub fn ideal_map(state: &StateVector, phi_tilde: f64) -> Result<StateVector> {
    let space = state.space;
    let cutoff = space.cutoff();
    let cos = Complex64::from(phi_tilde.cos());
    let msin = Complex64::new(0.0, -phi_tilde.sin());
    let g = AtomLevel::Ground;
    let e = AtomLevel::Excited;

    let top_eg = space.index(BasisState::new(cutoff, e, g))?;
    if state.amplitudes[top_eg].norm() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "state has support {:.3e} on |{}; e,g⟩; the map needs photon headroom above the cutoff",
            state.amplitudes[top_eg].norm(),
            cutoff
        )));
    }

    let mut out = DVector::zeros(space.dim());
    for b in space.states() {
        let amp = state.amplitudes[space.index(b)?];
        if amp == Complex64::from(0.0) {
            continue;
        }
        match (b.atom1, b.atom2) {
            (AtomLevel::Excited, AtomLevel::Excited) => {
                out[space.index(b)?] += amp;
            }
            (AtomLevel::Ground, AtomLevel::Excited) => {
                out[space.index(BasisState::new(b.n, e, g))?] -= amp;
            }
            (AtomLevel::Excited, AtomLevel::Ground) => {
                out[space.index(BasisState::new(b.n, g, e))?] += cos * amp;
                out[space.index(BasisState::new(b.n + 1, g, g))?] += msin * amp;
            }
            (AtomLevel::Ground, AtomLevel::Ground) => {
                if b.n == 0 {
                    out[space.index(b)?] += amp;
                } else {
                    out[space.index(BasisState::new(b.n - 1, g, e))?] += msin * amp;
                    out[space.index(b)?] += cos * amp;
                }
            }
        }
    }
    StateVector::new(space, out)
}

/// Predicted overlap with the maximally entangled target, |3 + cos φ̃| / 4.
pub fn predicted_fidelity(phi_tilde: f64) -> f64 {
    (3.0 + phi_tilde.cos()).abs() / 4.0
}

/// Smallest nonnegative chirp amplitude closing the phase to 2mπ.
///
/// Uses the monotone growth of the shift with Δ₀ for a bracketing root find;
/// the residual |φ_n + shift(Δ₀) − 2mπ| is driven below 1e−6 rad.
pub fn solve_chirp_amplitude(config: &ModelConfig, m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("phase-closure index m must be ≥ 1".into()));
    }
    let n = -1; // entangling protocol sector
    let phi_n = resonant_phase(config, n)?;
    let target = 2.0 * PI * m as f64;
    if target + 1e-9 < phi_n {
        return Err(Error::Domain(format!(
            "target 2mπ = {target:.6} rad is below the resonant phase {phi_n:.6} rad"
        )));
    }
    let shift_at = |delta0: f64| -> Result<f64> {
        let mut probe = *config;
        probe.chirps.delta0 = delta0;
        chirp_phase_shift(&probe, n)
    };
    let needed = target - phi_n;
    if needed <= 1e-6 {
        return Ok(0.0);
    }

    // expand the bracket until the shift exceeds the deficit
    let mut hi = config.pulses.g1.max(1.0);
    let cap = 64.0 * config.pulses.g1.max(1.0);
    let mut shift_hi = shift_at(hi)?;
    while shift_hi < needed {
        hi *= 2.0;
        if hi > cap {
            return Err(Error::NoRoot {
                delta0_max: cap,
                phase_min: phi_n,
                phase_max: phi_n + shift_hi,
            });
        }
        shift_hi = shift_at(hi)?;
    }

    let mut lo = 0.0;
    let mut mid = 0.5 * hi;
    for _ in 0..200 {
        let res = shift_at(mid)? - needed;
        if res.abs() < 1e-6 {
            return Ok(mid);
        }
        if res > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        mid = 0.5 * (lo + hi);
    }
    Err(Error::Domain(
        "chirp-amplitude bisection failed to reach the 1e-6 rad residual".into(),
    ))
}
