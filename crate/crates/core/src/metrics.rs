//! State-quality and entanglement measures: fidelity, multipartite pure-state
//! concurrence, the two-qubit mixed-state concurrence, photon statistics, and
//! the vacuum-factorization residual that licenses the two-qubit reduction.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{
    build_operators, check_space, hermitian_eigenpairs, hermitian_eigenvalues, partial_trace,
    partial_trace_pure, purity, AtomLevel, BasisState, DensityMatrix, StateVector, Subsystem,
};

/// Reduced state of the atom pair, ordered atom1 ⊗ atom2.
#[derive(Clone, Debug)]
pub struct TwoQubitDensity {
    matrix: DMatrix<Complex64>,
}

impl TwoQubitDensity {
    /// Wrap a 4×4 matrix, enforcing Hermiticity, unit trace, and positivity
    /// at the 1e−8 level.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != 4 || matrix.ncols() != 4 {
            return Err(Error::InvalidArgument(format!(
                "two-qubit density must be 4x4, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let mut herm = 0.0f64;
        for i in 0..4 {
            for j in i..4 {
                herm = herm.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if herm > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "two-qubit density hermiticity defect {herm}"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "two-qubit density trace {tr} is not 1"
            )));
        }
        let min = hermitian_eigenvalues(&matrix)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min < -1e-8 {
            return Err(Error::InvalidArgument(format!(
                "two-qubit density has negative eigenvalue {min}"
            )));
        }
        Ok(Self { matrix })
    }

    /// Atom-pair marginal of a pure system state.
    pub fn from_pure(psi: &StateVector) -> Result<Self> {
        Self::new(partial_trace_pure(
            psi,
            &[Subsystem::Atom1, Subsystem::Atom2],
        )?)
    }

    /// Atom-pair marginal of a mixed system state.
    pub fn from_density(rho: &DensityMatrix) -> Result<Self> {
        Self::new(partial_trace(
            rho,
            &[Subsystem::Atom1, Subsystem::Atom2],
        )?)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }
}

/// Pure-state fidelity |⟨target|ψ⟩|.
pub fn fidelity(state: &StateVector, target: &StateVector) -> Result<f64> {
    check_space(state.space, target.space)?;
    Ok(target.inner(state)?.norm())
}

/// Mixed-state fidelity √(⟨target|ρ|target⟩), matching the pure-state overlap
/// convention when ρ is a projector.
pub fn fidelity_mixed(rho: &DensityMatrix, target: &StateVector) -> Result<f64> {
    check_space(rho.space, target.space)?;
    let v = &rho.matrix * &target.amplitudes;
    Ok(target.amplitudes.dotc(&v).re.max(0.0).sqrt())
}

/// Multipartite pure-state concurrence over the three single-subsystem
/// marginals, √(3 − tr ρ₁² − tr ρ₂² − tr ρ_c²).
pub fn concurrence_c3(psi: &StateVector) -> Result<f64> {
    let p1 = purity(&partial_trace_pure(psi, &[Subsystem::Atom1])?);
    let p2 = purity(&partial_trace_pure(psi, &[Subsystem::Atom2])?);
    let pc = purity(&partial_trace_pure(psi, &[Subsystem::Cavity])?);
    Ok((3.0 - p1 - p2 - pc).max(0.0).sqrt())
}

fn sigma_yy() -> DMatrix<Complex64> {
    // σ_y ⊗ σ_y is real: antidiagonal (−1, 1, 1, −1)
    let mut m = DMatrix::zeros(4, 4);
    m[(0, 3)] = Complex64::from(-1.0);
    m[(1, 2)] = Complex64::from(1.0);
    m[(2, 1)] = Complex64::from(1.0);
    m[(3, 0)] = Complex64::from(-1.0);
    m
}

fn psd_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (vals, vecs) = hermitian_eigenpairs(m);
    let d = m.nrows();
    let mut out = DMatrix::zeros(d, d);
    for (v, vec) in vals.iter().zip(vecs.iter()) {
        let root = Complex64::from(v.max(0.0).sqrt());
        out += vec * vec.adjoint() * root;
    }
    out
}

/// Two-qubit mixed-state concurrence max{0, √λ₁ − √λ₂ − √λ₃ − √λ₄}, the λᵢ
/// being the descending eigenvalues of ρ (σ_y⊗σ_y) ρ* (σ_y⊗σ_y).
///
/// Computed on the Hermitian form √ρ ρ̃ √ρ, which shares the spectrum;
/// negative eigenvalues of numerical-noise size are clamped before the square
/// roots. Complex conjugation is taken in the standard product basis.
pub fn wootters_concurrence(rho: &TwoQubitDensity) -> f64 {
    let yy = sigma_yy();
    let conj = rho.matrix.map(|z| z.conj());
    let rho_tilde = &yy * conj * &yy;
    let root = psd_sqrt(&rho.matrix);
    let m = &root * rho_tilde * &root;
    let mut vals = hermitian_eigenvalues(&m);
    vals.reverse(); // descending
    let s: Vec<f64> = vals.iter().map(|&v| v.max(0.0).sqrt()).collect();
    (s[0] - s[1] - s[2] - s[3]).max(0.0)
}

/// Mean photon number tr(a†a ρ).
pub fn mean_photon(rho: &DensityMatrix) -> f64 {
    let ops = build_operators(rho.space);
    ops.photon_number.expectation_mixed(rho).re.max(0.0)
}

/// Mean photon number ⟨ψ|a†a|ψ⟩ of a pure state.
pub fn mean_photon_pure(psi: &StateVector) -> f64 {
    let space = psi.space;
    space
        .states()
        .map(|b| {
            b.n as f64
                * psi.amplitudes[space.index(b).expect("enumerated")].norm_sqr()
        })
        .sum::<f64>()
        .max(0.0)
}

/// Frobenius distance ‖ρ − |0⟩⟨0| ⊗ ρ_atoms‖ certifying that the cavity has
/// emptied and factorized from the atom pair.
pub fn factorization_residual(rho: &DensityMatrix) -> Result<f64> {
    let atoms = partial_trace(rho, &[Subsystem::Atom1, Subsystem::Atom2])?;
    let space = rho.space;
    let mut fact = DMatrix::zeros(space.dim(), space.dim());
    let levels = [AtomLevel::Ground, AtomLevel::Excited];
    for (i1, &s1) in levels.iter().enumerate() {
        for (i2, &s2) in levels.iter().enumerate() {
            for (j1, &t1) in levels.iter().enumerate() {
                for (j2, &t2) in levels.iter().enumerate() {
                    let row = space.index(BasisState::new(0, s1, s2))?;
                    let col = space.index(BasisState::new(0, t1, t2))?;
                    fact[(row, col)] = atoms[(2 * i1 + i2, 2 * j1 + j2)];
                }
            }
        }
    }
    Ok((&rho.matrix - &fact).norm())
}
