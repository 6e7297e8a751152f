//! Truncated Fock ⊗ qubit ⊗ qubit Hilbert space.
//!
//! Basis ordering is lexicographic in `(n, s1, s2)` with the atoms varying
//! fastest: `index = 4n + 2[s1 = e] + [s2 = e]`. Serialized states are
//! portable across implementations that honor this ordering.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Level of a two-level atom.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AtomLevel {
    Ground,
    Excited,
}

impl AtomLevel {
    fn bit(self) -> usize {
        match self {
            AtomLevel::Ground => 0,
            AtomLevel::Excited => 1,
        }
    }

    fn from_bit(b: usize) -> Self {
        if b == 0 {
            AtomLevel::Ground
        } else {
            AtomLevel::Excited
        }
    }

    /// 1 for the excited level, 0 for the ground level.
    pub fn excitation(self) -> usize {
        self.bit()
    }
}

/// Product basis state |n; s1, s2⟩.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisState {
    pub n: usize,
    pub atom1: AtomLevel,
    pub atom2: AtomLevel,
}

impl BasisState {
    pub fn new(n: usize, atom1: AtomLevel, atom2: AtomLevel) -> Self {
        Self { n, atom1, atom2 }
    }

    /// Total excitation number n + [s1 = e] + [s2 = e].
    pub fn excitation(&self) -> usize {
        self.n + self.atom1.excitation() + self.atom2.excitation()
    }
}

/// Truncated space holding photon numbers `0..=cutoff`; `dim = 4(cutoff + 1)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct HilbertSpace {
    cutoff: usize,
}

impl HilbertSpace {
    pub fn new(cutoff: usize) -> Self {
        Self { cutoff }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        4 * (self.cutoff + 1)
    }

    /// Index of a basis state under the documented ordering.
    pub fn index(&self, b: BasisState) -> Result<usize> {
        if b.n > self.cutoff {
            return Err(Error::PhotonOutOfRange {
                n: b.n,
                cutoff: self.cutoff,
            });
        }
        Ok(4 * b.n + 2 * b.atom1.bit() + b.atom2.bit())
    }

    /// Inverse of [`Self::index`].
    pub fn unindex(&self, index: usize) -> Result<BasisState> {
        if index >= self.dim() {
            return Err(Error::IndexOutOfRange {
                index,
                dim: self.dim(),
            });
        }
        Ok(BasisState {
            n: index / 4,
            atom1: AtomLevel::from_bit((index / 2) % 2),
            atom2: AtomLevel::from_bit(index % 2),
        })
    }

    /// All basis states in index order.
    pub fn states(&self) -> impl Iterator<Item = BasisState> + '_ {
        (0..self.dim()).map(move |i| self.unindex(i).expect("index in range"))
    }

    /// Basis states of the given excitation sector, in index order.
    pub fn sector_states(&self, n_exc: usize) -> Vec<BasisState> {
        self.states().filter(|b| b.excitation() == n_exc).collect()
    }

    /// Unit vector on the given basis state.
    pub fn basis_vector(&self, b: BasisState) -> Result<StateVector> {
        let i = self.index(b)?;
        let mut amps = DVector::zeros(self.dim());
        amps[i] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            space: *self,
            amplitudes: amps,
        })
    }
}

/// Dense operator on a truncated space.
#[derive(Clone, Debug)]
pub struct Operator {
    pub space: HilbertSpace,
    pub matrix: DMatrix<Complex64>,
}

impl Operator {
    pub fn zeros(space: HilbertSpace) -> Self {
        let d = space.dim();
        Self {
            space,
            matrix: DMatrix::zeros(d, d),
        }
    }

    pub fn from_matrix(space: HilbertSpace, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::InvalidArgument(format!(
                "operator shape {}x{} does not match dim {}",
                matrix.nrows(),
                matrix.ncols(),
                space.dim()
            )));
        }
        Ok(Self { space, matrix })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space,
            matrix: self.matrix.adjoint(),
        }
    }

    /// Max-magnitude deviation from Hermiticity, relative to the largest entry.
    pub fn hermiticity_defect(&self) -> f64 {
        let scale = self
            .matrix
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max)
            .max(1.0);
        let mut worst = 0.0f64;
        for i in 0..self.matrix.nrows() {
            for j in i..self.matrix.ncols() {
                let d = (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst / scale
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermiticity_defect() <= rel_tol
    }

    /// ⟨ψ|A|ψ⟩ for a pure state.
    pub fn expectation(&self, psi: &StateVector) -> Complex64 {
        let v = &self.matrix * &psi.amplitudes;
        psi.amplitudes.dotc(&v)
    }

    /// tr(Aρ) for a mixed state.
    pub fn expectation_mixed(&self, rho: &DensityMatrix) -> Complex64 {
        (&self.matrix * &rho.matrix).trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }
}

/// Elementary operators on a [`HilbertSpace`].
///
/// `a` acts as a|n⟩ = √n |n−1⟩ on the truncated Fock ladder; the Pauli
/// operators act on the indicated tensor factor. `exchange[j]` is the
/// excitation-exchange term a†σ₋ + aσ₊ for atom j, and `n_exc` is the
/// conserved quantity a†a + Σⱼ σ₊ʲσ₋ʲ.
#[derive(Clone, Debug)]
pub struct OperatorSet {
    pub space: HilbertSpace,
    pub a: Operator,
    pub a_dag: Operator,
    pub photon_number: Operator,
    pub sigma_minus: [Operator; 2],
    pub sigma_plus: [Operator; 2],
    pub sigma_z: [Operator; 2],
    pub exchange: [Operator; 2],
    pub n_exc: Operator,
}

/// Build the full operator set for a space.
pub fn build_operators(space: HilbertSpace) -> OperatorSet {
    let d = space.dim();
    let idx = |b: BasisState| space.index(b).expect("states enumerate in range");

    let mut a = DMatrix::zeros(d, d);
    for b in space.states() {
        if b.n > 0 {
            let lowered = BasisState::new(b.n - 1, b.atom1, b.atom2);
            a[(idx(lowered), idx(b))] = Complex64::new((b.n as f64).sqrt(), 0.0);
        }
    }
    let a_dag = a.adjoint();
    let photon_number = &a_dag * &a;

    let mut sm = [DMatrix::zeros(d, d), DMatrix::zeros(d, d)];
    for b in space.states() {
        if b.atom1 == AtomLevel::Excited {
            let dropped = BasisState::new(b.n, AtomLevel::Ground, b.atom2);
            sm[0][(idx(dropped), idx(b))] = Complex64::new(1.0, 0.0);
        }
        if b.atom2 == AtomLevel::Excited {
            let dropped = BasisState::new(b.n, b.atom1, AtomLevel::Ground);
            sm[1][(idx(dropped), idx(b))] = Complex64::new(1.0, 0.0);
        }
    }
    let sp = [sm[0].adjoint(), sm[1].adjoint()];
    let sz = [
        &sp[0] * &sm[0] - &sm[0] * &sp[0],
        &sp[1] * &sm[1] - &sm[1] * &sp[1],
    ];
    let exchange = [
        &a_dag * &sm[0] + &a * &sp[0],
        &a_dag * &sm[1] + &a * &sp[1],
    ];
    let n_exc = &photon_number + &sp[0] * &sm[0] + &sp[1] * &sm[1];

    let wrap = |m: DMatrix<Complex64>| Operator { space, matrix: m };
    OperatorSet {
        space,
        a: wrap(a),
        a_dag: wrap(a_dag),
        photon_number: wrap(photon_number),
        sigma_minus: [wrap(sm[0].clone()), wrap(sm[1].clone())],
        sigma_plus: [wrap(sp[0].clone()), wrap(sp[1].clone())],
        sigma_z: [wrap(sz[0].clone()), wrap(sz[1].clone())],
        exchange: [wrap(exchange[0].clone()), wrap(exchange[1].clone())],
        n_exc: wrap(n_exc),
    }
}

/// Pure state on a truncated space.
#[derive(Clone, Debug)]
pub struct StateVector {
    pub space: HilbertSpace,
    pub amplitudes: DVector<Complex64>,
}

impl StateVector {
    pub fn new(space: HilbertSpace, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::InvalidArgument(format!(
                "state length {} does not match dim {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        Ok(Self { space, amplitudes })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::InvalidArgument("cannot normalize zero state".into()));
        }
        self.amplitudes /= Complex64::new(n, 0.0);
        Ok(self)
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        check_space(self.space, other.space)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            space: self.space,
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// Mixed state on a truncated space.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    pub space: HilbertSpace,
    pub matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(space: HilbertSpace, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::InvalidArgument(format!(
                "density shape {}x{} does not match dim {}",
                matrix.nrows(),
                matrix.ncols(),
                space.dim()
            )));
        }
        Ok(Self { space, matrix })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        psi.to_density()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.matrix.nrows() {
            for j in i..self.matrix.ncols() {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part; numerical positivity means
    /// this stays above −1e−8.
    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.matrix)
            .iter()
            .fold(f64::INFINITY, |m, &e| m.min(e))
    }

    /// Check the Hermiticity (1e−10), unit-trace (1e−8), and positivity
    /// (eigenvalues ≥ −1e−8) invariants.
    pub fn validate(&self) -> Result<()> {
        if self.hermiticity_defect() > 1e-10 {
            return Err(Error::Validation {
                field: "density".into(),
                message: format!("hermiticity defect {}", self.hermiticity_defect()),
            });
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
            return Err(Error::Validation {
                field: "density".into(),
                message: format!("trace {} differs from 1", tr),
            });
        }
        let min = self.min_eigenvalue();
        if min < -1e-8 {
            return Err(Error::Validation {
                field: "density".into(),
                message: format!("negative eigenvalue {min}"),
            });
        }
        Ok(())
    }
}

pub(crate) fn check_space(left: HilbertSpace, right: HilbertSpace) -> Result<()> {
    if left != right {
        return Err(Error::SpaceMismatch {
            left: left.cutoff(),
            right: right.cutoff(),
        });
    }
    Ok(())
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let eig = m.clone().symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    vals
}

/// Eigenvalues and eigenvectors of a Hermitian matrix, ascending by value.
pub fn hermitian_eigenpairs(m: &DMatrix<Complex64>) -> (Vec<f64>, Vec<DVector<Complex64>>) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .expect("finite eigenvalues")
    });
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    (vals, vecs)
}

/// Subsystems of the cavity ⊗ atom1 ⊗ atom2 product.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subsystem {
    Cavity,
    Atom1,
    Atom2,
}

impl Subsystem {
    fn dim(self, space: HilbertSpace) -> usize {
        match self {
            Subsystem::Cavity => space.cutoff() + 1,
            _ => 2,
        }
    }

    fn stride(self) -> usize {
        match self {
            Subsystem::Cavity => 4,
            Subsystem::Atom1 => 2,
            Subsystem::Atom2 => 1,
        }
    }
}

fn keep_and_trace(space: HilbertSpace, keep: &[Subsystem]) -> Result<(Vec<Subsystem>, Vec<Subsystem>)> {
    let mut kept: Vec<Subsystem> = keep.to_vec();
    kept.sort();
    kept.dedup();
    if kept.is_empty() {
        return Err(Error::InvalidArgument(
            "partial trace requires a nonempty subset to keep".into(),
        ));
    }
    if kept.len() == 3 {
        return Err(Error::InvalidArgument(
            "partial trace over nothing: keep set must be a proper subset".into(),
        ));
    }
    let traced: Vec<Subsystem> = [Subsystem::Cavity, Subsystem::Atom1, Subsystem::Atom2]
        .into_iter()
        .filter(|s| !kept.contains(s))
        .collect();
    let _ = space;
    Ok((kept, traced))
}

fn enumerate_indices(space: HilbertSpace, subs: &[Subsystem]) -> Vec<usize> {
    // Flattened offsets contributed by every configuration of `subs`,
    // in row-major order over the subsystem list.
    let mut offsets = vec![0usize];
    for s in subs {
        let d = s.dim(space);
        let stride = s.stride();
        let mut next = Vec::with_capacity(offsets.len() * d);
        for &o in &offsets {
            for k in 0..d {
                next.push(o + k * stride);
            }
        }
        offsets = next;
    }
    offsets
}

/// Reduced density matrix over `keep`, ordered (cavity, atom1, atom2)
/// restricted to the kept subsystems.
pub fn partial_trace(rho: &DensityMatrix, keep: &[Subsystem]) -> Result<DMatrix<Complex64>> {
    let (kept, traced) = keep_and_trace(rho.space, keep)?;
    let kept_offsets = enumerate_indices(rho.space, &kept);
    let traced_offsets = enumerate_indices(rho.space, &traced);
    let dk = kept_offsets.len();
    let mut out = DMatrix::zeros(dk, dk);
    for (i, &oi) in kept_offsets.iter().enumerate() {
        for (j, &oj) in kept_offsets.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for &ot in &traced_offsets {
                acc += rho.matrix[(oi + ot, oj + ot)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// [`partial_trace`] of a pure state without forming the full density matrix.
pub fn partial_trace_pure(psi: &StateVector, keep: &[Subsystem]) -> Result<DMatrix<Complex64>> {
    let (kept, traced) = keep_and_trace(psi.space, keep)?;
    let kept_offsets = enumerate_indices(psi.space, &kept);
    let traced_offsets = enumerate_indices(psi.space, &traced);
    let dk = kept_offsets.len();
    let mut out = DMatrix::zeros(dk, dk);
    for (i, &oi) in kept_offsets.iter().enumerate() {
        for (j, &oj) in kept_offsets.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for &ot in &traced_offsets {
                acc += psi.amplitudes[oi + ot] * psi.amplitudes[oj + ot].conj();
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// tr(ρ²) of a Hermitian matrix; 1 exactly when ρ is pure.
pub fn purity(rho: &DMatrix<Complex64>) -> f64 {
    rho.iter().map(|z| z.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn g() -> AtomLevel {
        AtomLevel::Ground
    }
    fn e() -> AtomLevel {
        AtomLevel::Excited
    }

    #[test]
    fn first_basis_elements() {
        let space = HilbertSpace::new(3);
        assert_eq!(space.index(BasisState::new(0, g(), g())).unwrap(), 0);
        assert_eq!(space.index(BasisState::new(0, g(), e())).unwrap(), 1);
        assert_eq!(space.index(BasisState::new(0, e(), g())).unwrap(), 2);
        assert_eq!(space.index(BasisState::new(0, e(), e())).unwrap(), 3);
        assert_eq!(space.index(BasisState::new(1, g(), g())).unwrap(), 4);
    }

    #[test]
    fn unindex_inverts_index_exhaustively() {
        let space = HilbertSpace::new(5);
        for b in space.states() {
            let i = space.index(b).unwrap();
            assert_eq!(space.unindex(i).unwrap(), b);
        }
        assert_eq!(space.states().count(), space.dim());
    }

    #[test]
    fn photon_above_cutoff_is_rejected() {
        let space = HilbertSpace::new(3);
        assert!(matches!(
            space.index(BasisState::new(4, g(), g())),
            Err(Error::PhotonOutOfRange { n: 4, cutoff: 3 })
        ));
    }

    #[test]
    fn number_operator_diagonal() {
        let space = HilbertSpace::new(3);
        let ops = build_operators(space);
        for b in space.states() {
            let i = space.index(b).unwrap();
            let d = ops.photon_number.matrix[(i, i)];
            assert_abs_diff_eq!(d.re, b.n as f64, epsilon = 1e-14);
            assert_abs_diff_eq!(d.im, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn sigma_z_factors_commute() {
        let ops = build_operators(HilbertSpace::new(2));
        let comm = &ops.sigma_z[0].matrix * &ops.sigma_z[1].matrix
            - &ops.sigma_z[1].matrix * &ops.sigma_z[0].matrix;
        assert_eq!(comm.iter().map(|z| z.norm()).fold(0.0, f64::max), 0.0);
    }

    #[test]
    fn ladder_commutator_is_identity_below_cutoff() {
        let space = HilbertSpace::new(4);
        let ops = build_operators(space);
        let comm = &ops.a.matrix * &ops.a_dag.matrix - &ops.a_dag.matrix * &ops.a.matrix;
        for b in space.states() {
            let i = space.index(b).unwrap();
            let expected = if b.n < space.cutoff() {
                1.0
            } else {
                // truncation: a†|N⟩ = 0, so [a, a†] = −N on the top rung
                -(space.cutoff() as f64)
            };
            assert_abs_diff_eq!(comm[(i, i)].re, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn n_exc_matches_definition() {
        let ops = build_operators(HilbertSpace::new(3));
        let rebuilt = &ops.photon_number.matrix
            + &ops.sigma_plus[0].matrix * &ops.sigma_minus[0].matrix
            + &ops.sigma_plus[1].matrix * &ops.sigma_minus[1].matrix;
        assert!((&rebuilt - &ops.n_exc.matrix).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_product_state() {
        let space = HilbertSpace::new(2);
        let psi = space
            .basis_vector(BasisState::new(0, e(), g()))
            .unwrap();
        let r = partial_trace_pure(&psi, &[Subsystem::Atom1]).unwrap();
        assert_abs_diff_eq!(r[(1, 1)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r[(0, 0)].re, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn partial_trace_bell_marginal_is_maximally_mixed() {
        let space = HilbertSpace::new(1);
        let mut amps = DVector::zeros(space.dim());
        let w = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[space.index(BasisState::new(0, g(), e())).unwrap()] = w;
        amps[space.index(BasisState::new(0, e(), g())).unwrap()] = w;
        let psi = StateVector::new(space, amps).unwrap();
        let r = partial_trace_pure(&psi, &[Subsystem::Atom1]).unwrap();
        assert_abs_diff_eq!(r[(0, 0)].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(r[(1, 1)].re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(r[(0, 1)].norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn marginals_of_photon_atom_pair_state() {
        // (|0,g,g⟩ + |1,e,e⟩)/√2: every single-subsystem marginal has purity 1/2
        let space = HilbertSpace::new(1);
        let mut amps = DVector::zeros(space.dim());
        let w = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[space.index(BasisState::new(0, g(), g())).unwrap()] = w;
        amps[space.index(BasisState::new(1, e(), e())).unwrap()] = w;
        let psi = StateVector::new(space, amps).unwrap();
        for sub in [Subsystem::Cavity, Subsystem::Atom1, Subsystem::Atom2] {
            let r = partial_trace_pure(&psi, &[sub]).unwrap();
            assert_abs_diff_eq!(purity(&r), 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn partial_trace_rejects_empty_and_full_keep() {
        let space = HilbertSpace::new(1);
        let psi = space.basis_vector(BasisState::new(0, g(), g())).unwrap();
        assert!(partial_trace_pure(&psi, &[]).is_err());
        assert!(partial_trace_pure(
            &psi,
            &[Subsystem::Cavity, Subsystem::Atom1, Subsystem::Atom2]
        )
        .is_err());
    }

    #[test]
    fn purity_examples() {
        let mut rho = DMatrix::zeros(2, 2);
        rho[(0, 0)] = Complex64::new(0.75, 0.0);
        rho[(1, 1)] = Complex64::new(0.25, 0.0);
        assert_abs_diff_eq!(purity(&rho), 0.625, epsilon = 1e-15);

        let half = DMatrix::from_diagonal_element(2, 2, Complex64::new(0.5, 0.0));
        assert_abs_diff_eq!(purity(&half), 0.5, epsilon = 1e-15);

        let space = HilbertSpace::new(1);
        let psi = space.basis_vector(BasisState::new(1, g(), e())).unwrap();
        assert_abs_diff_eq!(purity(&psi.to_density().matrix), 1.0, epsilon = 1e-14);
    }

    proptest! {
        #[test]
        fn index_bijective_for_small_cutoffs(cutoff in 0usize..=8) {
            let space = HilbertSpace::new(cutoff);
            for i in 0..space.dim() {
                let b = space.unindex(i).unwrap();
                prop_assert_eq!(space.index(b).unwrap(), i);
            }
        }

        #[test]
        fn trace_composition_agrees(seed in 0u64..200) {
            // tracing straight to atom1 equals tracing out the cavity first,
            // then atom2
            let space = HilbertSpace::new(2);
            let dim = space.dim();
            let mut amps = DVector::zeros(dim);
            let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            for i in 0..dim {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let re = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let im = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                amps[i] = Complex64::new(re, im);
            }
            let psi = StateVector::new(space, amps).unwrap().normalized().unwrap();
            let direct = partial_trace_pure(&psi, &[Subsystem::Atom1]).unwrap();

            let atoms = partial_trace_pure(&psi, &[Subsystem::Atom1, Subsystem::Atom2]).unwrap();
            // atoms matrix is ordered atom1 ⊗ atom2; trace out atom2 by hand
            let mut two_step = DMatrix::zeros(2, 2);
            for i in 0..2 {
                for j in 0..2 {
                    two_step[(i, j)] = atoms[(2 * i, 2 * j)] + atoms[(2 * i + 1, 2 * j + 1)];
                }
            }
            prop_assert!((&direct - &two_step).norm() < 1e-12);
        }
    }
}
