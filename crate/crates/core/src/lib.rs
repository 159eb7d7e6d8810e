//! Pure-dephasing rates and open-system dynamics for light-matter systems in the
//! ultrastrong and deep-strong coupling regimes.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`]: truncated Fock-space operators and dense Hermitian linear algebra.
//! * [`rabi`]: the quantum Rabi model in the Coulomb and dipole gauges, dressed
//!   state labelling and transition dephasing rates.
//! * [`hopfield`]: the two-mode Hopfield model, its Bogoliubov (polariton)
//!   decomposition and polariton dephasing rates.
//! * [`lindblad`]: dressed-basis master equations, their propagation, decay-rate
//!   extraction and a stochastic-trajectory cross-check.
//! * [`oracle`]: analytic vs master-equation vs trajectory rates for one coherence.
//! * [`sweep`]: the row type shared by parameter sweeps.
//!
//! Energies are measured in units of the cavity frequency; rates in units of the
//! bare dephasing rate of the fluctuating subsystem.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fock;
pub mod hopfield;
pub mod lindblad;
pub mod noise;
pub mod oracle;
pub mod rabi;
pub mod sweep;

pub use error::{Error, Result};
pub use faer::c64;
pub use fock::{Operator, SpaceDescriptor, Spectrum};

use std::fmt;

use serde::{Deserialize, Serialize};

/// Which of the two unitarily equivalent light-matter formulations an operator lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    Coulomb,
    Dipole,
}

impl Gauge {
    pub fn other(self) -> Gauge {
        match self {
            Gauge::Coulomb => Gauge::Dipole,
            Gauge::Dipole => Gauge::Coulomb,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Gauge::Coulomb => "coulomb",
            Gauge::Dipole => "dipole",
        }
    }
}

impl fmt::Display for Gauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the fluctuating subsystem's operator is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeMode {
    /// The operator is transformed together with the Hamiltonian.
    Correct,
    /// Bare subsystem operators used with the Coulomb-gauge Hamiltonian.
    NaiveCoulomb,
    /// Bare subsystem operators used with the dipole-gauge Hamiltonian.
    NaiveDipole,
}

impl GaugeMode {
    /// Gauge in which rates are evaluated by default.
    pub fn natural_gauge(self) -> Gauge {
        match self {
            GaugeMode::Correct | GaugeMode::NaiveDipole => Gauge::Dipole,
            GaugeMode::NaiveCoulomb => Gauge::Coulomb,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GaugeMode::Correct => "correct",
            GaugeMode::NaiveCoulomb => "naive_coulomb",
            GaugeMode::NaiveDipole => "naive_dipole",
        }
    }
}

impl fmt::Display for GaugeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
