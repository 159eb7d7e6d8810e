//! Property checks at a config's parameters.

use std::collections::BTreeMap;

use dephasing::fock::{hermitian_eig_sectored, CONVERGENCE_TOLERANCE};
use dephasing::hopfield::{
    fock_polaritons, gauge_map_coefficients, polariton_dephasing_rates,
    polariton_dephasing_rates_in, symplectic_diagonalize, HopfieldParams,
};
use dephasing::lindblad::oscillator_dephasing_check;
use dephasing::oracle::{hopfield_triangle, rabi_triangle, OracleRates};
use dephasing::rabi::{
    build_hamiltonian, dipole_energy_offset, label_states, parity_sectors,
    transition_dephasing_rate, transition_dephasing_rate_in, DephasingChannel, RabiParams,
    StateLabel, Target, Transition,
};
use dephasing::{Error, Gauge, GaugeMode};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Plan, PlanKind, SCHEMA_VERSION};

pub const SPECTRUM_TOLERANCE: f64 = 1e-8;
pub const RABI_RATE_TOLERANCE: f64 = 1e-9;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;
pub const HOPFIELD_GAUGE_TOLERANCE: f64 = 1e-9;
pub const EXACT_TOLERANCE: f64 = 1e-12;
pub const FOCK_ORACLE_TOLERANCE: f64 = 1e-5;
/// Largest coupling at which the truncated-Fock oracle is run.
pub const FOCK_ORACLE_MAX_LAMBDA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Property,
    Convergence,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub passed: bool,
    /// Worst value seen; `null` if nothing could be evaluated.
    pub measured: Option<f64>,
    pub tolerance: f64,
    pub points: usize,
    pub worst_at: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub config_name: String,
    pub config_sha256: String,
    pub code_version: &'static str,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn has_failed(&self, kind: CheckKind) -> bool {
        self.checks.iter().any(|c| c.kind == kind && !c.passed)
    }
}

/// Outcome of one check at one point.
enum Obs {
    Value(f64),
    /// Pass/fail check with nothing to measure.
    Passed,
    Failed(Error),
}

struct Acc {
    kind: CheckKind,
    tolerance: f64,
    worst: Option<f64>,
    worst_at: Option<String>,
    points: usize,
    error: Option<String>,
}

#[derive(Default)]
struct Checks {
    order: Vec<String>,
    accs: BTreeMap<String, Acc>,
}

impl Checks {
    fn declare(&mut self, name: &str, kind: CheckKind, tolerance: f64) {
        if !self.accs.contains_key(name) {
            self.order.push(name.to_string());
            self.accs.insert(
                name.to_string(),
                Acc {
                    kind,
                    tolerance,
                    worst: None,
                    worst_at: None,
                    points: 0,
                    error: None,
                },
            );
        }
    }

    fn observe(&mut self, name: &str, at: &str, obs: Obs) {
        let acc = self.accs.get_mut(name).expect("declared check");
        acc.points += 1;
        match obs {
            Obs::Value(v) => {
                if acc.worst.is_none_or(|w| v > w || v.is_nan()) {
                    acc.worst = Some(v);
                    acc.worst_at = Some(at.to_string());
                }
            }
            Obs::Passed => {}
            Obs::Failed(e) => {
                if let Error::NotConverged { drift, .. } = e {
                    if acc.worst.is_none_or(|w| drift > w) {
                        acc.worst = Some(drift);
                        acc.worst_at = Some(at.to_string());
                    }
                }
                if acc.error.is_none() {
                    acc.error = Some(format!("{at}: {e}"));
                    acc.worst_at = Some(at.to_string());
                }
            }
        }
    }

    fn finish(mut self) -> Vec<Check> {
        self.order
            .iter()
            .map(|name| {
                let a = self.accs.remove(name).expect("declared check");
                Check {
                    name: name.clone(),
                    kind: a.kind,
                    passed: a.error.is_none()
                        && a.points > 0
                        && a.worst.is_none_or(|w| w <= a.tolerance),
                    measured: a.worst.filter(|w| w.is_finite()),
                    tolerance: a.tolerance,
                    points: a.points,
                    worst_at: a.worst_at,
                    error: a.error,
                }
            })
            .collect()
    }
}

/// Bare `(qubit excited, photons)` content of a label at zero coupling.
fn bare_state(label: StateLabel, detuning: f64) -> (bool, usize) {
    match label {
        StateLabel::Ground => (false, 0),
        // The doublet {|g,n>, |e,n-1>} is split by delta = E(e,n-1) - E(g,n).
        StateLabel::Minus(n) if detuning > 0.0 => (false, n),
        StateLabel::Minus(n) => (true, n - 1),
        StateLabel::Plus(n) if detuning > 0.0 => (true, n - 1),
        StateLabel::Plus(n) => (false, n),
    }
}

fn decoupled_rabi_rate(target: Target, t: Transition, detuning: f64) -> f64 {
    let value = |l| {
        let (excited, photons) = bare_state(l, detuning);
        match target {
            Target::Qubit => {
                if excited {
                    1.0
                } else {
                    -1.0
                }
            }
            Target::Cavity => photons as f64,
        }
    };
    0.5 * (value(t.0) - value(t.1)).powi(2)
}

fn rabi_point(
    p: &RabiParams,
    target: Target,
    transitions: &[Transition],
    modes: &[GaugeMode],
) -> Vec<(&'static str, Obs)> {
    let mut obs = Vec::new();
    let needed = transitions
        .iter()
        .flat_map(|t| [t.0.rank(), t.1.rank()])
        .max()
        .unwrap_or(0)
        + 1;
    let levels = needed.max(6);

    let spectrum =
        |gauge| hermitian_eig_sectored(&build_hamiltonian(p, gauge)?, &parity_sectors(p));
    obs.push((
        "gauge_spectrum",
        match (spectrum(Gauge::Dipole), spectrum(Gauge::Coulomb)) {
            (Ok(d), Ok(c)) => {
                let offset = dipole_energy_offset(p);
                let worst = (0..levels)
                    .map(|k| {
                        let (ed, ec) = (d.values()[k] + offset, c.values()[k]);
                        (ed - ec).abs() / ec.abs().max(1.0)
                    })
                    .fold(0.0, f64::max);
                Obs::Value(worst)
            }
            (Err(e), _) | (_, Err(e)) => Obs::Failed(e),
        },
    ));

    for gauge in [Gauge::Dipole, Gauge::Coulomb] {
        match label_states(p, needed, gauge) {
            Ok(l) => {
                obs.push(("cutoff_convergence", Obs::Value(l.convergence_drift)));
                obs.push(("state_labelling", Obs::Passed));
            }
            Err(e) if e.is_convergence() => obs.push(("cutoff_convergence", Obs::Failed(e))),
            Err(e) => obs.push(("state_labelling", Obs::Failed(e))),
        }
    }

    let ch = DephasingChannel::new(target, 1.0, GaugeMode::Correct).expect("unit gamma0");
    for &t in transitions {
        let d = transition_dephasing_rate_in(p, &ch, t, Gauge::Dipole);
        let c = transition_dephasing_rate_in(p, &ch, t, Gauge::Coulomb);
        obs.push((
            "correct_rate_gauge_independence",
            match (d, c) {
                (Ok(d), Ok(c)) => Obs::Value((d - c).abs()),
                (Err(e), _) | (_, Err(e)) => Obs::Failed(e),
            },
        ));
    }

    if p.eta == 0.0 && p.detuning() != 0.0 {
        for &mode in modes {
            let ch = DephasingChannel::new(target, 1.0, mode).expect("unit gamma0");
            for &t in transitions {
                let expected = decoupled_rabi_rate(target, t, p.detuning());
                obs.push((
                    "decoupled_limit",
                    match transition_dephasing_rate(p, &ch, t) {
                        Ok(r) => Obs::Value((r - expected).abs()),
                        Err(e) => Obs::Failed(e),
                    },
                ));
            }
        }
    }
    obs
}

fn hopfield_point(
    p: &HopfieldParams,
    gamma0_c: f64,
    gamma0_x: f64,
    modes: &[GaugeMode],
    fock: bool,
) -> Vec<(&'static str, Obs)> {
    let mut obs = Vec::new();
    let (c, d) = match (
        symplectic_diagonalize(p, Gauge::Coulomb),
        symplectic_diagonalize(p, Gauge::Dipole),
    ) {
        (Ok(c), Ok(d)) => (c, d),
        (Err(e), _) | (_, Err(e)) => {
            obs.push(("bogoliubov_normalization", Obs::Failed(e)));
            return obs;
        }
    };
    let norm = c
        .coefficients
        .iter()
        .chain(&d.coefficients)
        .map(|k| (k.normalization() - 1.0).abs())
        .fold(0.0, f64::max);
    obs.push(("bogoliubov_normalization", Obs::Value(norm)));
    let freq = (0..2)
        .map(|mu| (c.frequencies[mu] - d.frequencies[mu]).abs())
        .fold(0.0, f64::max);
    obs.push(("gauge_frequency_invariance", Obs::Value(freq)));
    let (to_d, to_c) = (gauge_map_coefficients(&c), gauge_map_coefficients(&d));
    let map = (0..2)
        .map(|mu| {
            to_d.coefficients[mu]
                .max_abs_diff(&d.coefficients[mu])
                .max(to_c.coefficients[mu].max_abs_diff(&c.coefficients[mu]))
        })
        .fold(0.0, f64::max);
    obs.push(("gauge_map_consistency", Obs::Value(map)));

    let (gc, gx) = if gamma0_c == 0.0 && gamma0_x == 0.0 {
        (1.0, 1.0)
    } else {
        (gamma0_c, gamma0_x)
    };
    let rates = |gauge| polariton_dephasing_rates_in(p, gc, gx, GaugeMode::Correct, gauge);
    obs.push((
        "correct_rate_gauge_independence",
        match (rates(Gauge::Coulomb), rates(Gauge::Dipole)) {
            (Ok(a), Ok(b)) => Obs::Value(
                (0..2)
                    .map(|mu| (a.rates[mu] - b.rates[mu]).abs())
                    .fold(0.0, f64::max),
            ),
            (Err(e), _) | (_, Err(e)) => Obs::Failed(e),
        },
    ));

    if p.lambda == 0.0 {
        // Ties go to the matter-like branch.
        let matter_lower = p.omega_x <= p.omega_c;
        let expected = if matter_lower { [gx, gc] } else { [gc, gx] };
        for &mode in modes.iter().chain([GaugeMode::Correct].iter()) {
            obs.push((
                "decoupled_limit",
                match polariton_dephasing_rates(p, gc, gx, mode) {
                    Ok(r) => Obs::Value(
                        (0..2)
                            .map(|mu| (r.rates[mu] - expected[mu]).abs())
                            .fold(0.0, f64::max),
                    ),
                    Err(e) => Obs::Failed(e),
                },
            ));
        }
    }

    if fock && p.lambda <= FOCK_ORACLE_MAX_LAMBDA {
        match fock_polaritons(p, Gauge::Coulomb) {
            Ok(f) => {
                obs.push(("fock_convergence", Obs::Value(f.convergence_drift)));
                let diff = (0..2)
                    .map(|mu| {
                        f.coefficients[mu]
                            .max_abs_diff(&c.coefficients[mu])
                            .max((f.gaps[mu] - c.frequencies[mu]).abs())
                    })
                    .fold(0.0, f64::max);
                obs.push(("fock_oracle", Obs::Value(diff)));
            }
            Err(e) if e.is_convergence() => obs.push(("fock_convergence", Obs::Failed(e))),
            Err(e) => obs.push(("fock_oracle", Obs::Failed(e))),
        }
    }
    obs
}

fn oracle_obs(result: dephasing::Result<OracleRates>) -> Vec<(&'static str, Obs)> {
    match result {
        Ok(r) => {
            let c = r.contracts;
            vec![
                ("oracle_convergence", Obs::Passed),
                ("oracle_agreement", Obs::Value(r.worst_relative_deviation())),
                (
                    "master_equation_contracts",
                    Obs::Value(
                        c.max_trace_error
                            .max(c.max_hermiticity_error)
                            .max(-c.min_eigenvalue)
                            .max(if c.holds() { 0.0 } else { f64::INFINITY }),
                    ),
                ),
            ]
        }
        Err(e) if e.is_convergence() => vec![("oracle_convergence", Obs::Failed(e))],
        Err(e) => vec![("oracle_agreement", Obs::Failed(e))],
    }
}

pub fn verify(plan: &Plan) -> Report {
    let mut checks = Checks::default();
    match &plan.kind {
        PlanKind::Rabi {
            target,
            transitions,
            modes,
            grid,
            oracle,
            ..
        } => {
            checks.declare("gauge_spectrum", CheckKind::Property, SPECTRUM_TOLERANCE);
            checks.declare(
                "cutoff_convergence",
                CheckKind::Convergence,
                CONVERGENCE_TOLERANCE,
            );
            checks.declare("state_labelling", CheckKind::Property, 0.0);
            checks.declare(
                "correct_rate_gauge_independence",
                CheckKind::Property,
                RABI_RATE_TOLERANCE,
            );
            if grid.iter().any(|p| p.eta == 0.0 && p.detuning() != 0.0) {
                checks.declare("decoupled_limit", CheckKind::Property, EXACT_TOLERANCE);
            }
            let per_point: Vec<_> = grid
                .par_iter()
                .map(|p| rabi_point(p, *target, transitions, modes))
                .collect();
            for (i, (p, obs)) in grid.iter().zip(per_point).enumerate() {
                let at = format!(
                    "eta={}, delta={}, cutoff={}",
                    p.eta,
                    plan.nominal_detuning(i),
                    p.cutoff()
                );
                for (name, o) in obs {
                    checks.observe(name, &at, o);
                }
            }
            if let Some((t, transition, settings, tolerance)) = oracle {
                declare_oracle(&mut checks, *tolerance);
                for (i, p) in grid.iter().enumerate() {
                    let at = format!("eta={}, delta={}", p.eta, plan.nominal_detuning(i));
                    for (name, o) in oracle_obs(rabi_triangle(p, *t, *transition, settings)) {
                        checks.observe(name, &at, o);
                    }
                }
            }
        }
        PlanKind::Hopfield {
            gamma0_c,
            gamma0_x,
            modes,
            grid,
            oracle,
        } => {
            checks.declare(
                "bogoliubov_normalization",
                CheckKind::Property,
                NORMALIZATION_TOLERANCE,
            );
            checks.declare(
                "gauge_frequency_invariance",
                CheckKind::Property,
                HOPFIELD_GAUGE_TOLERANCE,
            );
            checks.declare(
                "gauge_map_consistency",
                CheckKind::Property,
                HOPFIELD_GAUGE_TOLERANCE,
            );
            checks.declare(
                "correct_rate_gauge_independence",
                CheckKind::Property,
                HOPFIELD_GAUGE_TOLERANCE,
            );
            if grid.iter().any(|p| p.lambda == 0.0) {
                checks.declare("decoupled_limit", CheckKind::Property, EXACT_TOLERANCE);
            }
            let fock = plan.config.cutoff.is_some();
            if fock && grid.iter().any(|p| p.lambda <= FOCK_ORACLE_MAX_LAMBDA) {
                checks.declare(
                    "fock_convergence",
                    CheckKind::Convergence,
                    CONVERGENCE_TOLERANCE,
                );
                checks.declare("fock_oracle", CheckKind::Property, FOCK_ORACLE_TOLERANCE);
            }
            let per_point: Vec<_> = grid
                .par_iter()
                .map(|p| hopfield_point(p, *gamma0_c, *gamma0_x, modes, fock))
                .collect();
            for (i, (p, obs)) in grid.iter().zip(per_point).enumerate() {
                let at = format!("lambda={}, delta={}", p.lambda, plan.nominal_detuning(i));
                for (name, o) in obs {
                    checks.observe(name, &at, o);
                }
            }
            if let Some((t, branch, settings, tolerance)) = oracle {
                declare_oracle(&mut checks, *tolerance);
                for (i, p) in grid.iter().enumerate() {
                    let at = format!(
                        "lambda={}, delta={}, cutoff={}",
                        p.lambda,
                        plan.nominal_detuning(i),
                        p.cutoff()
                    );
                    for (name, o) in oracle_obs(hopfield_triangle(p, *t, *branch, settings)) {
                        checks.observe(name, &at, o);
                    }
                }
            }
        }
        PlanKind::Oscillator { omega0, gamma0 } => {
            let tolerance = 1e-6 * gamma0.max(1e-12) + 1e-10;
            checks.declare("oscillator_dephasing", CheckKind::Property, tolerance);
            checks.declare("oscillator_population_drift", CheckKind::Property, 1e-8);
            let at = format!("omega0={omega0}, gamma0={gamma0}");
            match oscillator_dephasing_check(*omega0, *gamma0) {
                Ok(report) => {
                    for c in &report.checks {
                        let at = format!("{at}, n={}, m={}", c.n, c.m);
                        checks.observe(
                            "oscillator_dephasing",
                            &at,
                            Obs::Value((c.measured - c.expected).abs()),
                        );
                        checks.observe(
                            "oscillator_population_drift",
                            &at,
                            Obs::Value(c.population_drift),
                        );
                    }
                }
                Err(e) => checks.observe("oscillator_dephasing", &at, Obs::Failed(e)),
            }
        }
    }
    let checks = checks.finish();
    Report {
        schema_version: SCHEMA_VERSION,
        config_name: plan.config.name.clone(),
        config_sha256: plan.config_hash.clone(),
        code_version: env!("CARGO_PKG_VERSION"),
        seed: plan.seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

fn declare_oracle(checks: &mut Checks, tolerance: f64) {
    checks.declare("oracle_agreement", CheckKind::Property, tolerance);
    checks.declare("master_equation_contracts", CheckKind::Property, 1e-8);
    checks.declare(
        "oracle_convergence",
        CheckKind::Convergence,
        CONVERGENCE_TOLERANCE,
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_labels_follow_the_detuning_sign() {
        let minus = (StateLabel::Minus(1), StateLabel::Ground);
        let plus = (StateLabel::Plus(1), StateLabel::Ground);
        // delta < 0: 1- = |e,0>, so only it carries the qubit flip.
        assert_eq!(decoupled_rabi_rate(Target::Qubit, minus, -0.1), 2.0);
        assert_eq!(decoupled_rabi_rate(Target::Qubit, plus, -0.1), 0.0);
        assert_eq!(decoupled_rabi_rate(Target::Qubit, minus, 0.1), 0.0);
        assert_eq!(decoupled_rabi_rate(Target::Cavity, plus, -0.1), 0.5);
    }
}
