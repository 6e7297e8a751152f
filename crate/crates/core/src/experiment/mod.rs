//! Scenario presets, parameter sweeps, peak finding, and persistence — the
//! user-facing layer driven by the `simulate` binary.

mod config;
mod export;
mod peaks;
mod run;

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{AtomLevel, BasisState, HilbertSpace, StateVector};
use crate::model::ModelConfig;

pub use config::{load_config, parse_config, preset};
pub use export::{export, read_result, write_spectrum_csv, ExportFormat};
pub use peaks::{find_peaks, Peak};
pub use run::run_scenario;

/// Per-atom spontaneous-emission rate Γσ of the reference mapping: a 30 ms
/// atomic lifetime, with σ fixed by a 2π·50 kHz peak coupling at g₀σ = 30.
pub const REF_GAMMA_SPONTANEOUS: f64 = 0.01 / PI;

/// Cavity decay rate γσ of the reference mapping: quality factor 4.2e10 at an
/// assumed 51 GHz mode frequency (the documented assumption; see README),
/// same σ as [`REF_GAMMA_SPONTANEOUS`].
pub const REF_GAMMA_CAVITY: f64 = 51.0 / 70_000.0;

/// Measured quantity, evaluated on the final state of a run.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    /// Overlap with the maximally entangled protocol target.
    Fidelity,
    /// Multipartite pure-state concurrence (closed runs only).
    C3,
    /// Two-qubit concurrence of the atom-pair marginal.
    Wootters,
    MeanPhoton,
    FactorizationResidual,
}

/// Which decay channels a column's run switches on.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunKind {
    /// γ = Γ = 0 regardless of the base configuration.
    Closed,
    /// Base-configuration rates.
    Decay,
    /// Cavity decay at the swept rate, Γ = 0 (decay-rate axis only).
    CavityDecayOnly,
    /// Spontaneous emission at the swept rate, γ = 0 (decay-rate axis only).
    SpontaneousOnly,
}

/// One output column: an observable evaluated on one kind of run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub observable: Observable,
    pub kind: RunKind,
}

impl Column {
    pub fn closed(name: &str, observable: Observable) -> Self {
        Self {
            name: name.into(),
            observable,
            kind: RunKind::Closed,
        }
    }
}

/// The parameter a sweep varies.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Chirp amplitude as a fraction of g₁.
    ChirpOverG0,
    /// Trajectory separation in wavelengths; sets g₂ = g₁ cos(2πx).
    SeparationOverLambda,
    /// Decay rate (1/σ) routed into the channel each column selects.
    DecayRate,
    /// Symmetric peak coupling g₁ = g₂ (1/σ).
    CouplingG0,
}

impl SweepAxis {
    pub fn key(&self) -> &'static str {
        match self {
            SweepAxis::ChirpOverG0 => "delta0_over_g0",
            SweepAxis::SeparationOverLambda => "separation_over_lambda",
            SweepAxis::DecayRate => "rate_sigma",
            SweepAxis::CouplingG0 => "g0_sigma",
        }
    }

    pub fn parse(token: &str) -> Option<Self> {
        match token {
            "delta0_over_g0" => Some(SweepAxis::ChirpOverG0),
            "separation_over_lambda" => Some(SweepAxis::SeparationOverLambda),
            "rate_sigma" => Some(SweepAxis::DecayRate),
            "g0_sigma" => Some(SweepAxis::CouplingG0),
            _ => None,
        }
    }
}

/// Initial state of a run.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialState {
    /// Vacuum cavity with each atom in (|g⟩ + |e⟩)/√2.
    PlusPlus,
    /// A single product basis state.
    Basis {
        n: usize,
        atom1: AtomLevel,
        atom2: AtomLevel,
    },
}

impl InitialState {
    pub fn build(&self, space: HilbertSpace) -> Result<StateVector> {
        match *self {
            InitialState::PlusPlus => Ok(protocol_input(space)),
            InitialState::Basis { n, atom1, atom2 } => {
                space.basis_vector(BasisState::new(n, atom1, atom2))
            }
        }
    }
}

/// A named sweep: base configuration, axis with its grid, output columns,
/// and the initial state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub base: ModelConfig,
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub columns: Vec<Column>,
    pub initial: InitialState,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.grid.is_empty() {
            return Err(Error::Validation {
                field: "sweep.grid".into(),
                message: "grid must be nonempty".into(),
            });
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation {
                field: "sweep.grid".into(),
                message: "grid must be strictly increasing".into(),
            });
        }
        if self.columns.is_empty() {
            return Err(Error::Validation {
                field: "observables".into(),
                message: "at least one observable column is required".into(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.clone()) {
                return Err(Error::Validation {
                    field: "observables".into(),
                    message: format!("duplicate column name `{}`", c.name),
                });
            }
            let rate_kind =
                matches!(c.kind, RunKind::CavityDecayOnly | RunKind::SpontaneousOnly);
            if rate_kind != matches!(self.axis, SweepAxis::DecayRate) {
                return Err(Error::Validation {
                    field: "observables".into(),
                    message: format!(
                        "column `{}` pairs kind {:?} with axis {}",
                        c.name,
                        c.kind,
                        self.axis.key()
                    ),
                });
            }
            if c.observable == Observable::C3 && c.kind != RunKind::Closed {
                return Err(Error::Validation {
                    field: "observables".into(),
                    message: format!(
                        "column `{}`: the multipartite concurrence is defined for pure (closed) runs",
                        c.name
                    ),
                });
            }
        }
        match self.axis {
            SweepAxis::DecayRate => {
                if self.grid[0] < 0.0 {
                    return Err(Error::Validation {
                        field: "sweep.grid".into(),
                        message: "decay rates must be nonnegative".into(),
                    });
                }
            }
            SweepAxis::ChirpOverG0 => {
                if self.grid[0] < 0.0 {
                    return Err(Error::Validation {
                        field: "sweep.grid".into(),
                        message: "chirp amplitudes must be nonnegative".into(),
                    });
                }
            }
            SweepAxis::CouplingG0 => {
                if self.grid[0] <= 0.0 {
                    return Err(Error::Validation {
                        field: "sweep.grid".into(),
                        message: "couplings must be positive".into(),
                    });
                }
            }
            SweepAxis::SeparationOverLambda => {}
        }
        Ok(())
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }
}

/// Snapshot sufficient to re-run a sweep bit-identically on the same build.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub scenario: Scenario,
}

/// One grid point: the axis value, one value per column, and an error marker
/// when the point's integration failed (values are NaN in that case).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub axis: f64,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Tabular sweep output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis_key: String,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub metadata: Option<Metadata>,
}

impl SweepResult {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::InvalidArgument(format!("no column named `{name}`")))
    }
}

/// Vacuum cavity, each atom in (|g⟩ + |e⟩)/√2.
pub fn protocol_input(space: HilbertSpace) -> StateVector {
    let mut amps = DVector::zeros(space.dim());
    let g = AtomLevel::Ground;
    let e = AtomLevel::Excited;
    for b in [
        BasisState::new(0, g, g),
        BasisState::new(0, g, e),
        BasisState::new(0, e, g),
        BasisState::new(0, e, e),
    ] {
        amps[space.index(b).expect("n = 0 is always in range")] = Complex64::from(0.5);
    }
    StateVector::new(space, amps).expect("built on the same space")
}

/// The maximally entangled target the passage aims for:
/// ½ |g₂⟩(|g₁⟩ − |e₁⟩) + ½ |e₂⟩(|g₁⟩ + |e₁⟩), vacuum cavity.
pub fn protocol_target(space: HilbertSpace) -> StateVector {
    let mut amps = DVector::zeros(space.dim());
    let g = AtomLevel::Ground;
    let e = AtomLevel::Excited;
    let half = Complex64::from(0.5);
    amps[space.index(BasisState::new(0, g, g)).expect("in range")] = half;
    amps[space.index(BasisState::new(0, e, g)).expect("in range")] = -half;
    amps[space.index(BasisState::new(0, g, e)).expect("in range")] = half;
    amps[space.index(BasisState::new(0, e, e)).expect("in range")] = half;
    StateVector::new(space, amps).expect("built on the same space")
}
