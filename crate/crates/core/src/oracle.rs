//! Three-way check of a pure-dephasing rate: the closed-form expression, the
//! secular master equation in the dressed basis, and an average over noisy
//! closed-system trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::hermitian_eig_sectored;
use crate::hopfield::{
    build_hopfield_hamiltonian, excitation_parity_sectors, polariton_dephasing_rates,
    polariton_levels, FockModes, HopfieldParams,
};
use crate::lindblad::{
    build_dressed_dissipator, check_contracts, extract_decay_rate, propagate,
    stochastic_oracle_in_basis, ContractReport, DensityMatrix, FitOptions, StochasticOptions,
    DEFAULT_LEVELS,
};
use crate::noise::{NoiseKind, SpectralDensity};
use crate::rabi::{
    channel_operator, label_states, transition_dephasing_rate_in, DephasingChannel, Target,
    Transition,
};
use crate::{c64, GaugeMode, Operator, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    /// Zero-frequency noise density `S(0)`.
    pub s0: f64,
    pub n_traj: usize,
    pub t_final: f64,
    pub dt: f64,
    pub noise: NoiseKind,
    pub n_levels: usize,
    pub record_every: usize,
    /// Trajectory averages are fitted from this time on, after the noise
    /// correlation time has passed.
    pub fit_from: f64,
    pub fit_tolerance: f64,
    pub seed: u64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings {
            s0: 6e-3,
            n_traj: 2000,
            t_final: 2000.0,
            dt: 0.25,
            noise: NoiseKind::OrnsteinUhlenbeck { tau: 50.0 },
            n_levels: DEFAULT_LEVELS,
            record_every: 40,
            fit_from: 250.0,
            fit_tolerance: 0.05,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRates {
    pub analytic: f64,
    pub master: f64,
    pub stochastic: f64,
    /// Jackknife standard error of `stochastic`.
    pub stochastic_error: f64,
    /// Contracts of the master-equation trajectory.
    pub contracts: ContractReport,
}

impl OracleRates {
    /// Largest pairwise difference of the three rates, each relative to the
    /// smaller rate of its pair.
    pub fn worst_relative_deviation(&self) -> f64 {
        let r = [self.analytic, self.master, self.stochastic];
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in i + 1..3 {
                worst = worst.max((r[i] - r[j]).abs() / r[i].abs().min(r[j].abs()));
            }
        }
        worst
    }
}

fn triangle(
    spectrum: &Spectrum,
    op: &Operator,
    pair: (usize, usize),
    analytic: f64,
    s: &OracleSettings,
) -> Result<OracleRates> {
    let n = s.n_levels;
    if pair.0 >= n || pair.1 >= n {
        return Err(Error::TooManyLevels {
            requested: pair.0.max(pair.1) + 1,
            available: n,
        });
    }
    let mut psi = vec![c64::new(0.0, 0.0); n];
    psi[pair.0] = c64::new(1.0, 0.0);
    psi[pair.1] = c64::new(1.0, 0.0);

    let dis =
        build_dressed_dissipator(spectrum, op, &SpectralDensity::LowFrequency { s0: s.s0 }, n)?;
    let master = propagate(&DensityMatrix::pure(&psi)?, &dis, s.t_final, s.dt)?;
    let contracts = check_contracts(&master)?;
    let master_rate = extract_decay_rate(&master, pair)?.rate;

    let options = StochasticOptions {
        noise: s.noise,
        n_levels: n,
        record_every: s.record_every,
    };
    let ensemble = stochastic_oracle_in_basis(
        spectrum, op, s.s0, s.n_traj, s.t_final, s.dt, s.seed, &psi, &options,
    )?;
    let fit = FitOptions {
        t_min: s.fit_from,
        tolerance: s.fit_tolerance,
        ..Default::default()
    };
    let (stochastic, stochastic_error) = ensemble.decay_rate(pair, &fit)?;
    Ok(OracleRates {
        analytic,
        master: master_rate,
        stochastic: stochastic.rate,
        stochastic_error,
        contracts,
    })
}

/// Rate of the coherence between the two states of `transition` under noise on
/// `target`, computed three ways. The dynamics run in the gauge where the
/// target couples through its bare operator.
pub fn rabi_triangle(
    p: &crate::rabi::RabiParams,
    target: Target,
    transition: Transition,
    settings: &OracleSettings,
) -> Result<OracleRates> {
    let ch = DephasingChannel::new(target, 2.0 * settings.s0, GaugeMode::Correct)?;
    let gauge = match target {
        Target::Qubit => crate::Gauge::Dipole,
        Target::Cavity => crate::Gauge::Coulomb,
    };
    let analytic = transition_dephasing_rate_in(p, &ch, transition, gauge)?;
    let levels = transition.0.rank().max(transition.1.rank()) + 1;
    let labeled = label_states(p, levels, gauge)?;
    let op = channel_operator(&ch, p, gauge)?;
    let pair = (labeled.index(transition.0)?, labeled.index(transition.1)?);
    triangle(&labeled.spectrum, &op, pair, analytic, settings)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HopfieldTarget {
    Cavity,
    Exciton,
}

/// Rate of the coherence between polariton `branch` (0 lower, 1 upper) and the
/// ground state, computed three ways on the truncated Fock space of `p`.
pub fn hopfield_triangle(
    p: &HopfieldParams,
    target: HopfieldTarget,
    branch: usize,
    settings: &OracleSettings,
) -> Result<OracleRates> {
    if branch > 1 {
        return Err(Error::InvalidParameter {
            name: "branch",
            value: branch as f64,
            reason: "must be 0 (lower) or 1 (upper)",
        });
    }
    let n = p.cutoff();
    let modes = FockModes::new(n)?;
    let (gauge, bare, gammas) = match target {
        HopfieldTarget::Exciton => (crate::Gauge::Dipole, &modes.b, (0.0, settings.s0)),
        HopfieldTarget::Cavity => (crate::Gauge::Coulomb, &modes.a, (settings.s0, 0.0)),
    };
    let op = (&bare.adjoint() * bare).symmetrized();
    let analytic =
        polariton_dephasing_rates(p, gammas.0, gammas.1, GaugeMode::Correct)?.rates[branch];
    let spectrum = hermitian_eig_sectored(
        &build_hopfield_hamiltonian(p, gauge)?,
        &excitation_parity_sectors(n),
    )?;
    let levels = polariton_levels(&spectrum, &modes)?;
    triangle(
        &spectrum,
        &op,
        (levels[1 + branch], levels[0]),
        analytic,
        settings,
    )
}
