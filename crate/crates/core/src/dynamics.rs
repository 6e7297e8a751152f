//! Time evolution: Schrödinger equation for closed runs, Lindblad master
//! equation for runs with cavity decay or spontaneous emission, and numerical
//! propagator extraction per excitation sector.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{
    build_operators, BasisState, DensityMatrix, HilbertSpace, OperatorSet, StateVector,
};
use crate::model::{coupling, detuning, Atom, ModelConfig};
use crate::ode::{integrate, StepperOptions};

/// dt/dτ in units of σ: physical time is t = 2στ, so a rate r (in 1/σ) enters
/// the dimensionless-τ generator as 2r.
pub const TIME_JACOBIAN: f64 = 2.0;

/// Copy of a configuration with every rate pre-multiplied by the τ-Jacobian.
/// This happens once per run; the stepper never sees the factor again.
fn time_scaled(config: &ModelConfig) -> ModelConfig {
    let mut scaled = *config;
    scaled.pulses.g1 *= TIME_JACOBIAN;
    scaled.pulses.g2 *= TIME_JACOBIAN;
    scaled.chirps.delta0 *= TIME_JACOBIAN;
    scaled.gamma_c *= TIME_JACOBIAN;
    scaled.gamma_s *= TIME_JACOBIAN;
    scaled
}

/// States sampled at every accepted integrator step.
#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
}

impl<S> Trajectory<S> {
    pub fn final_state(&self) -> &S {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &S)> {
        self.times.iter().copied().zip(self.states.iter())
    }
}

/// One zero-temperature decay channel: rate, jump operator J, its adjoint,
/// and J†J for the anticommutator part.
struct JumpChannel {
    rate: f64,
    j: DMatrix<Complex64>,
    j_dag: DMatrix<Complex64>,
    jdj: DMatrix<Complex64>,
}

/// Precomputed pieces of the evolution generator.
struct Generator {
    config: ModelConfig, // time-scaled
    sz: [DMatrix<Complex64>; 2],
    exchange: [DMatrix<Complex64>; 2],
    jumps: Vec<JumpChannel>,
}

fn add_scaled(out: &mut DMatrix<Complex64>, m: &DMatrix<Complex64>, c: f64) {
    for (o, v) in out.as_mut_slice().iter_mut().zip(m.as_slice()) {
        *o += Complex64::from(c) * v;
    }
}

impl Generator {
    fn new(config: &ModelConfig, ops: &OperatorSet) -> Self {
        let scaled = time_scaled(config);
        let mut jumps = Vec::new();
        if scaled.gamma_c > 0.0 {
            jumps.push(JumpChannel {
                rate: scaled.gamma_c,
                j: ops.a.matrix.clone(),
                j_dag: ops.a_dag.matrix.clone(),
                jdj: ops.photon_number.matrix.clone(),
            });
        }
        if scaled.gamma_s > 0.0 {
            for j in 0..2 {
                jumps.push(JumpChannel {
                    rate: scaled.gamma_s,
                    j: ops.sigma_minus[j].matrix.clone(),
                    j_dag: ops.sigma_plus[j].matrix.clone(),
                    jdj: &ops.sigma_plus[j].matrix * &ops.sigma_minus[j].matrix,
                });
            }
        }
        Self {
            config: scaled,
            sz: [ops.sigma_z[0].matrix.clone(), ops.sigma_z[1].matrix.clone()],
            exchange: [ops.exchange[0].matrix.clone(), ops.exchange[1].matrix.clone()],
            jumps,
        }
    }

    fn coefficients(&self, tau: f64) -> [f64; 4] {
        [
            0.5 * detuning(tau, Atom::One, &self.config.chirps),
            0.5 * detuning(tau, Atom::Two, &self.config.chirps),
            coupling(tau, Atom::One, &self.config.pulses),
            coupling(tau, Atom::Two, &self.config.pulses),
        ]
    }

    /// out = −i H(τ) ψ
    fn schrodinger_rhs(&self, tau: f64, psi: &DVector<Complex64>, out: &mut DVector<Complex64>) {
        let c = self.coefficients(tau);
        out.fill(Complex64::new(0.0, 0.0));
        let minus_i = Complex64::new(0.0, -1.0);
        let one = Complex64::new(1.0, 0.0);
        out.gemv(minus_i * c[0], &self.sz[0], psi, one);
        out.gemv(minus_i * c[1], &self.sz[1], psi, one);
        out.gemv(minus_i * c[2], &self.exchange[0], psi, one);
        out.gemv(minus_i * c[3], &self.exchange[1], psi, one);
    }

    fn h_matrix(&self, tau: f64, out: &mut DMatrix<Complex64>) {
        let c = self.coefficients(tau);
        out.fill(Complex64::new(0.0, 0.0));
        add_scaled(out, &self.sz[0], c[0]);
        add_scaled(out, &self.sz[1], c[1]);
        add_scaled(out, &self.exchange[0], c[2]);
        add_scaled(out, &self.exchange[1], c[3]);
    }

    /// out = −i[H, ρ] + Σ r (JρJ† − ½{J†J, ρ})
    fn lindblad_rhs(
        &self,
        tau: f64,
        rho: &DMatrix<Complex64>,
        out: &mut DMatrix<Complex64>,
        h: &mut DMatrix<Complex64>,
        scratch: &mut DMatrix<Complex64>,
    ) {
        let minus_i = Complex64::new(0.0, -1.0);
        let plus_i = Complex64::new(0.0, 1.0);
        let one = Complex64::from(1.0);
        let zero = Complex64::from(0.0);
        self.h_matrix(tau, h);
        out.gemm(minus_i, h, rho, zero);
        out.gemm(plus_i, rho, h, one);
        for ch in &self.jumps {
            let r = Complex64::from(ch.rate);
            let half_r = Complex64::from(0.5 * ch.rate);
            scratch.gemm(one, &ch.j, rho, zero);
            out.gemm(r, scratch, &ch.j_dag, one);
            out.gemm(-half_r, &ch.jdj, rho, one);
            out.gemm(-half_r, rho, &ch.jdj, one);
        }
    }
}

fn check_closed(config: &ModelConfig) -> Result<()> {
    if !config.is_closed() {
        return Err(Error::InvalidArgument(
            "pure-state evolution requires gamma_c = gamma_s = 0; use evolve_density".into(),
        ));
    }
    Ok(())
}

/// Integrate the Schrödinger equation across the configured window.
///
/// The initial state must be normalized; the final norm is certified to stay
/// within 1e−9 of unity, otherwise the run reports an integration failure.
pub fn evolve_state(psi0: &StateVector, config: &ModelConfig) -> Result<Trajectory<StateVector>> {
    config.validate()?;
    check_closed(config)?;
    let space = config.space();
    crate::hilbert::check_space(psi0.space, space)?;
    if (psi0.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "initial state norm {} is not 1",
            psi0.norm()
        )));
    }
    let ops = build_operators(space);
    let gen = Generator::new(config, &ops);
    let opts = StepperOptions {
        rtol: config.tol.pure,
        ..Default::default()
    };
    let mut times = Vec::new();
    let mut states = Vec::new();
    let y_final = integrate(
        |tau, psi: &DVector<Complex64>, out: &mut DVector<Complex64>| {
            gen.schrodinger_rhs(tau, psi, out)
        },
        psi0.amplitudes.clone(),
        config.window,
        &opts,
        |tau, psi| {
            times.push(tau);
            states.push(StateVector {
                space,
                amplitudes: psi.clone(),
            });
        },
    )?;
    let norm = y_final.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Integration {
            tau: config.window.1,
            reason: format!("norm drifted to {norm}; tighten the tolerance"),
        });
    }
    Ok(Trajectory { times, states })
}

/// Integrate the Lindblad master equation across the configured window.
pub fn evolve_density(
    rho0: &DensityMatrix,
    config: &ModelConfig,
) -> Result<Trajectory<DensityMatrix>> {
    config.validate()?;
    let space = config.space();
    crate::hilbert::check_space(rho0.space, space)?;
    let tr = rho0.trace();
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "initial density trace {tr} is not 1"
        )));
    }
    let ops = build_operators(space);
    let gen = Generator::new(config, &ops);
    let opts = StepperOptions {
        rtol: config.tol.mixed,
        ..Default::default()
    };
    let dim = space.dim();
    let mut h = DMatrix::zeros(dim, dim);
    let mut scratch = DMatrix::zeros(dim, dim);
    let mut times = Vec::new();
    let mut states = Vec::new();
    let rho_final = integrate(
        |tau, rho: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>| {
            gen.lindblad_rhs(tau, rho, out, &mut h, &mut scratch)
        },
        rho0.matrix.clone(),
        config.window,
        &opts,
        |tau, rho| {
            times.push(tau);
            states.push(DensityMatrix {
                space,
                matrix: rho.clone(),
            });
        },
    )?;
    let tr = rho_final.trace();
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
        return Err(Error::Integration {
            tau: config.window.1,
            reason: format!("trace drifted to {tr}; tighten the tolerance"),
        });
    }
    Ok(Trajectory { times, states })
}

/// Unitary restricted to one excitation sector, column k being the image of
/// the k-th sector basis state.
#[derive(Clone, Debug)]
pub struct SectorPropagator {
    pub sector: usize,
    pub states: Vec<BasisState>,
    pub matrix: DMatrix<Complex64>,
}

impl SectorPropagator {
    /// ‖U†U − I‖ (Frobenius).
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.matrix.ncols();
        (self.matrix.adjoint() * &self.matrix - DMatrix::<Complex64>::identity(d, d)).norm()
    }
}

/// Evolve every basis vector of an excitation sector and assemble the sector
/// unitary. Requires a closed configuration.
pub fn extract_propagator(config: &ModelConfig, sector: usize) -> Result<SectorPropagator> {
    config.validate()?;
    check_closed(config)?;
    let space = config.space();
    let states = space.sector_states(sector);
    if states.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "excitation sector {sector} is empty at cutoff {}",
            space.cutoff()
        )));
    }
    let k = states.len();
    let mut matrix = DMatrix::zeros(k, k);
    for (col, &b) in states.iter().enumerate() {
        let psi0 = space.basis_vector(b)?;
        let traj = evolve_state(&psi0, config)?;
        let final_state = traj.final_state();
        for (row, &b_out) in states.iter().enumerate() {
            matrix[(row, col)] = final_state.amplitudes[space.index(b_out)?];
        }
    }
    let prop = SectorPropagator {
        sector,
        states,
        matrix,
    };
    let defect = prop.unitarity_defect();
    if defect > 1e-6 {
        return Err(Error::Validation {
            field: "propagator".into(),
            message: format!("sector {sector} unitarity defect {defect} exceeds 1e-6 (amplitude left the sector)"),
        });
    }
    Ok(prop)
}

/// ⟨N_exc⟩ of a pure state.
pub fn excitation_expectation(psi: &StateVector, ops: &OperatorSet) -> f64 {
    ops.n_exc.expectation(psi).re
}

/// Population outside the excitation sector of `reference`.
pub fn sector_leakage(psi: &StateVector, reference: BasisState) -> f64 {
    let space = psi.space;
    let target = reference.excitation();
    space
        .states()
        .filter(|b| b.excitation() != target)
        .map(|b| psi.amplitudes[space.index(b).expect("enumerated")].norm_sqr())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{AtomLevel, Subsystem};
    use crate::model::{ChirpParams, PulseParams};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn g() -> AtomLevel {
        AtomLevel::Ground
    }
    fn e() -> AtomLevel {
        AtomLevel::Excited
    }

    fn quiet_config() -> ModelConfig {
        // pulses entirely outside the window: H ≈ 0 over the whole run
        let mut config = ModelConfig::new(
            PulseParams::symmetric(5.0, 0.5),
            ChirpParams::off(),
        );
        config.window = (20.0, 24.0);
        config
    }

    #[test]
    fn free_evolution_is_identity() {
        let config = quiet_config();
        let space = config.space();
        let mut amps = DVector::zeros(space.dim());
        amps[1] = Complex64::new(0.6, 0.0);
        amps[6] = Complex64::new(0.0, 0.8);
        let psi0 = StateVector::new(space, amps).unwrap();
        let traj = evolve_state(&psi0, &config).unwrap();
        let diff = (&traj.final_state().amplitudes - &psi0.amplitudes).norm();
        assert!(diff < 1e-9, "free evolution moved the state by {diff}");
    }

    #[test]
    fn single_atom_transfer_matches_pulse_area() {
        // g2 = 0, resonant: the {|0,e,g⟩, |1,g,g⟩} pair sees a self-commuting
        // Hamiltonian, so amplitudes follow the Gaussian pulse area exactly:
        // cos(2√π g₁σ) and -i sin(2√π g₁σ).
        let config = ModelConfig::new(
            PulseParams {
                g1: 1.0,
                g2: 0.0,
                delta: 0.5,
            },
            ChirpParams::off(),
        );
        let space = config.space();
        let psi0 = space.basis_vector(BasisState::new(0, e(), g())).unwrap();
        let traj = evolve_state(&psi0, &config).unwrap();
        let out = traj.final_state();
        let angle = 2.0 * std::f64::consts::PI.sqrt();
        let stay = out.amplitudes[space.index(BasisState::new(0, e(), g())).unwrap()];
        let moved = out.amplitudes[space.index(BasisState::new(1, g(), g())).unwrap()];
        assert_abs_diff_eq!(stay.re, angle.cos(), epsilon = 1e-7);
        assert_abs_diff_eq!(stay.im, 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(moved.im, -angle.sin(), epsilon = 1e-7);
        assert_abs_diff_eq!(moved.re, 0.0, epsilon = 1e-7);
    }

    #[test]
    fn norm_is_conserved_at_every_accepted_step() {
        let config = ModelConfig::new(
            PulseParams::symmetric(30.0, 1.25),
            ChirpParams {
                delta0: 13.2,
                tau0: 2.0,
                sigma_s: 0.2,
            },
        );
        let space = config.space();
        let psi0 = space.basis_vector(BasisState::new(0, e(), g())).unwrap();
        let traj = evolve_state(&psi0, &config).unwrap();
        for (_, s) in traj.iter() {
            assert!((s.norm() - 1.0).abs() < 1e-9);
        }
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn closed_sectors_do_not_leak() {
        let config = ModelConfig::new(
            PulseParams::symmetric(30.0, 1.25),
            ChirpParams {
                delta0: 13.2,
                tau0: 2.0,
                sigma_s: 0.2,
            },
        );
        let space = config.space();
        let start = BasisState::new(0, e(), g());
        let psi0 = space.basis_vector(start).unwrap();
        let traj = evolve_state(&psi0, &config).unwrap();
        assert!(sector_leakage(traj.final_state(), start) < 1e-10);
    }

    #[test]
    fn density_matches_pure_when_closed() {
        let mut config = ModelConfig::new(
            PulseParams::symmetric(8.0, 1.0),
            ChirpParams {
                delta0: 3.0,
                tau0: 2.0,
                sigma_s: 0.2,
            },
        );
        config.tol.mixed = 1e-9;
        let space = config.space();
        let psi0 = space.basis_vector(BasisState::new(0, e(), e())).unwrap();
        let pure = evolve_state(&psi0, &config).unwrap();
        let mixed = evolve_density(&psi0.to_density(), &config).unwrap();
        let from_pure = pure.final_state().to_density();
        let diff = (&mixed.final_state().matrix - &from_pure.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        assert!(diff < 1e-7, "closed-system paths disagree by {diff}");
    }

    #[test]
    fn cavity_decay_matches_exponential() {
        // H ≈ 0, start with one photon: ⟨n(τ)⟩ = exp(−γ·2(τ−τ₀)) in τ units
        let mut config = quiet_config();
        config.gamma_c = 0.1;
        let space = config.space();
        let psi = space.basis_vector(BasisState::new(1, g(), g())).unwrap();
        let traj = evolve_density(&psi.to_density(), &config).unwrap();
        let ops = build_operators(space);
        for (tau, rho) in traj.iter() {
            let n = ops.photon_number.expectation_mixed(rho).re;
            let expected = (-config.gamma_c * TIME_JACOBIAN * (tau - config.window.0)).exp();
            assert_abs_diff_eq!(n, expected, epsilon = 1e-6);
        }
    }

    #[test]
    fn lindblad_preserves_trace_and_positivity() {
        let mut config = ModelConfig::new(
            PulseParams::symmetric(10.0, 1.0),
            ChirpParams::off(),
        );
        config.gamma_c = 0.02;
        config.gamma_s = 0.05;
        let space = config.space();
        let mut amps = DVector::zeros(space.dim());
        for b in [
            BasisState::new(0, g(), g()),
            BasisState::new(0, g(), e()),
            BasisState::new(0, e(), g()),
            BasisState::new(0, e(), e()),
        ] {
            amps[space.index(b).unwrap()] = Complex64::new(0.5, 0.0);
        }
        let rho0 = StateVector::new(space, amps).unwrap().to_density();
        let traj = evolve_density(&rho0, &config).unwrap();
        for (_, rho) in traj.iter() {
            assert!((rho.trace().re - 1.0).abs() < 1e-8);
        }
        traj.final_state().validate().unwrap();
    }

    #[test]
    fn excitation_never_increases_under_decay() {
        let mut config = ModelConfig::new(
            PulseParams::symmetric(10.0, 1.0),
            ChirpParams::off(),
        );
        config.gamma_s = 0.05;
        let space = config.space();
        let psi = space.basis_vector(BasisState::new(1, e(), g())).unwrap();
        let traj = evolve_density(&psi.to_density(), &config).unwrap();
        let ops = build_operators(space);
        let mut last = f64::INFINITY;
        for (_, rho) in traj.iter() {
            let n = ops.n_exc.expectation_mixed(rho).re;
            assert!(n <= last + 1e-8, "⟨N_exc⟩ rose from {last} to {n}");
            last = n;
        }
    }

    #[test]
    fn vacuum_sector_propagator_is_trivial() {
        let config = ModelConfig::new(PulseParams::symmetric(10.0, 1.0), ChirpParams::off());
        let prop = extract_propagator(&config, 0).unwrap();
        assert_eq!(prop.matrix.nrows(), 1);
        assert!((prop.matrix[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn propagator_columns_are_orthonormal() {
        // a handful of dissimilar configurations
        let cases = [
            (12.0, 12.0, 1.0, 0.0),
            (18.0, 11.0, 1.25, 5.0),
            (25.0, 25.0, 1.5, 9.0),
            (30.0, 20.0, 1.25, 0.0),
            (9.0, 16.0, 0.8, 2.0),
        ];
        for (g1, g2, delta, d0) in cases {
            let config = ModelConfig::new(
                PulseParams { g1, g2, delta },
                ChirpParams {
                    delta0: d0,
                    tau0: 2.0,
                    sigma_s: 0.2,
                },
            );
            let prop = extract_propagator(&config, 1).unwrap();
            assert!(
                prop.unitarity_defect() < 1e-6,
                "defect {} at ({g1}, {g2}, {delta}, {d0})",
                prop.unitarity_defect()
            );
        }
    }

    #[test]
    fn pure_path_rejects_decay() {
        let mut config = quiet_config();
        config.gamma_c = 0.1;
        let space = config.space();
        let psi = space.basis_vector(BasisState::new(0, g(), g())).unwrap();
        assert!(evolve_state(&psi, &config).is_err());
    }

    #[test]
    fn self_convergence_under_tolerance_halving() {
        let mut config = ModelConfig::new(
            PulseParams::symmetric(30.0, 1.25),
            ChirpParams {
                delta0: 13.2,
                tau0: 2.0,
                sigma_s: 0.2,
            },
        );
        let space = config.space();
        let mut amps = DVector::zeros(space.dim());
        for b in space.states().filter(|b| b.n == 0) {
            amps[space.index(b).unwrap()] = Complex64::new(0.5, 0.0);
        }
        let psi0 = StateVector::new(space, amps).unwrap();
        let a = evolve_state(&psi0, &config).unwrap();
        config.tol.pure /= 2.0;
        let b = evolve_state(&psi0, &config).unwrap();
        let drift = a
            .final_state()
            .inner(b.final_state())
            .unwrap()
            .norm();
        assert!((1.0 - drift).abs() < config.tol.pure * 1e3);
    }

    #[test]
    fn reduced_final_state_of_free_photon_decay() {
        // consistency between the master equation and partial tracing
        let mut config = quiet_config();
        config.gamma_c = 0.2;
        let space = config.space();
        let psi = space.basis_vector(BasisState::new(1, g(), g())).unwrap();
        let traj = evolve_density(&psi.to_density(), &config).unwrap();
        let atoms = crate::hilbert::partial_trace(
            traj.final_state(),
            &[Subsystem::Atom1, Subsystem::Atom2],
        )
        .unwrap();
        // atoms stay in |g,g⟩ through photon loss
        assert_relative_eq!(atoms[(0, 0)].re, 1.0, max_relative = 1e-8);
    }
}
