//! Executes a validated plan into output rows.

use std::cmp::Ordering;

use dephasing::hopfield::{dispersion_sweep, HopfieldParams, RateConfig};
use dephasing::lindblad::oscillator_dephasing_check;
use dephasing::oracle::{hopfield_triangle, rabi_triangle, HopfieldTarget, OracleRates};
use dephasing::rabi::{rate_sweep, transition_name, DephasingChannel, Target};
use dephasing::sweep::{SweepResult, SweepRow};
use dephasing::{Error, Gauge};
use serde::Serialize;

use crate::config::{ConfigError, Plan, PlanKind};

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub row: SweepRow,
    pub converged: bool,
}

/// A grid point that produced no value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub index: usize,
    pub coordinates: String,
    pub mode: String,
    pub error: String,
    pub convergence: bool,
}

#[derive(Debug, Default)]
pub struct RunOutput {
    pub rows: Vec<Row>,
    pub failures: Vec<Failure>,
}

impl RunOutput {
    fn absorb(&mut self, result: SweepResult, mode: &str, placeholder: impl Fn(usize) -> SweepRow) {
        self.rows.extend(result.rows.into_iter().map(|row| Row {
            row,
            converged: true,
        }));
        for f in result.failures {
            self.rows.push(Row {
                row: placeholder(f.index),
                converged: false,
            });
            self.failures.push(Failure {
                index: f.index,
                coordinates: f.coordinates,
                mode: mode.to_string(),
                convergence: f.error.is_convergence(),
                error: f.error.to_string(),
            });
        }
    }

    /// Replaces detunings recomputed as `omega - omega_c` by the configured values
    /// they came from, so the CSV shows what the config asked for.
    fn snap_detunings(&mut self, nominal: &[f64]) {
        for r in &mut self.rows {
            if let Some(d) = nominal.iter().min_by(|a, b| {
                (*a - r.row.detuning)
                    .abs()
                    .total_cmp(&(*b - r.row.detuning).abs())
            }) {
                r.row.detuning = *d;
            }
        }
    }

    fn sort(&mut self) {
        self.rows.sort_by(|a, b| row_order(&a.row, &b.row));
        self.failures
            .sort_by(|a, b| a.index.cmp(&b.index).then_with(|| a.mode.cmp(&b.mode)));
    }

    pub fn has_convergence_failure(&self) -> bool {
        self.failures.iter().any(|f| f.convergence)
    }
}

pub fn row_order(a: &SweepRow, b: &SweepRow) -> Ordering {
    a.detuning
        .total_cmp(&b.detuning)
        .then(a.coupling.total_cmp(&b.coupling))
        .then_with(|| a.label.cmp(&b.label))
        .then_with(|| a.quantity.cmp(&b.quantity))
        .then_with(|| a.mode.cmp(&b.mode))
        .then_with(|| a.gauge.cmp(&b.gauge))
}

fn failed_row(
    coupling: f64,
    detuning: f64,
    quantity: &str,
    mode: &str,
    gauge: &str,
    cutoff: Option<usize>,
) -> SweepRow {
    SweepRow {
        coupling,
        detuning,
        label: "*".into(),
        quantity: quantity.into(),
        value: f64::NAN,
        mode: mode.into(),
        gauge: gauge.into(),
        cutoff,
    }
}

fn oracle_rows(
    coupling: f64,
    detuning: f64,
    label: &str,
    gauge: Gauge,
    cutoff: usize,
    r: &OracleRates,
) -> Vec<SweepRow> {
    let row = |quantity: &str, mode: &str, value: f64| SweepRow {
        coupling,
        detuning,
        label: label.into(),
        quantity: quantity.into(),
        value,
        mode: mode.into(),
        gauge: gauge.to_string(),
        cutoff: Some(cutoff),
    };
    vec![
        row("decay_rate", "analytic", r.analytic),
        row("decay_rate", "master", r.master),
        row("decay_rate", "stochastic", r.stochastic),
        row("decay_rate_stderr", "stochastic", r.stochastic_error),
    ]
}

fn sweep_error(e: Error) -> ConfigError {
    ConfigError(e.to_string())
}

pub fn rabi_oracle_gauge(target: Target) -> Gauge {
    match target {
        Target::Qubit => Gauge::Dipole,
        Target::Cavity => Gauge::Coulomb,
    }
}

pub fn hopfield_oracle_gauge(target: HopfieldTarget) -> Gauge {
    match target {
        HopfieldTarget::Exciton => Gauge::Dipole,
        HopfieldTarget::Cavity => Gauge::Coulomb,
    }
}

/// Every requested quantity at every grid point. Per-point failures are
/// recorded rather than aborting; only plan-level problems return an error.
pub fn execute(plan: &Plan) -> Result<RunOutput, ConfigError> {
    let mut out = RunOutput::default();
    match &plan.kind {
        PlanKind::Rabi {
            target,
            gamma0,
            transitions,
            modes,
            grid,
            oracle,
        } => {
            for &mode in modes {
                let ch = DephasingChannel::new(*target, *gamma0, mode).map_err(sweep_error)?;
                let result = rate_sweep(grid, &ch, transitions).map_err(sweep_error)?;
                let gauge = mode.natural_gauge().to_string();
                out.absorb(result, mode.as_str(), |i| {
                    let p = &grid[i];
                    failed_row(
                        p.eta,
                        p.detuning(),
                        "rate_over_gamma0",
                        mode.as_str(),
                        &gauge,
                        Some(p.cutoff()),
                    )
                });
            }
            if let Some((target, transition, settings, _)) = oracle {
                let label = transition_name(*transition);
                let gauge = rabi_oracle_gauge(*target);
                for (i, p) in grid.iter().enumerate() {
                    log::info!("oracle at eta={} delta={}", p.eta, p.detuning());
                    match rabi_triangle(p, *target, *transition, settings) {
                        Ok(r) => out.rows.extend(
                            oracle_rows(p.eta, p.detuning(), &label, gauge, p.cutoff(), &r)
                                .into_iter()
                                .map(|row| Row {
                                    row,
                                    converged: true,
                                }),
                        ),
                        Err(e) => record_oracle_failure(
                            &mut out,
                            i,
                            p.eta,
                            p.detuning(),
                            gauge,
                            p.cutoff(),
                            e,
                        ),
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
            let config = RateConfig {
                gamma0_c: *gamma0_c,
                gamma0_x: *gamma0_x,
                modes: modes.clone(),
            };
            let result = dispersion_sweep(grid, &config).map_err(sweep_error)?;
            out.absorb(result, "all", |i| {
                let p: &HopfieldParams = &grid[i];
                failed_row(
                    p.lambda,
                    p.detuning(),
                    "omega_over_omegac",
                    "invariant",
                    "invariant",
                    None,
                )
            });
            if let Some((target, branch, settings, _)) = oracle {
                let label = (branch + 1).to_string();
                let gauge = hopfield_oracle_gauge(*target);
                for (i, p) in grid.iter().enumerate() {
                    log::info!("oracle at lambda={} delta={}", p.lambda, p.detuning());
                    match hopfield_triangle(p, *target, *branch, settings) {
                        Ok(r) => out.rows.extend(
                            oracle_rows(p.lambda, p.detuning(), &label, gauge, p.cutoff(), &r)
                                .into_iter()
                                .map(|row| Row {
                                    row,
                                    converged: true,
                                }),
                        ),
                        Err(e) => record_oracle_failure(
                            &mut out,
                            i,
                            p.lambda,
                            p.detuning(),
                            gauge,
                            p.cutoff(),
                            e,
                        ),
                    }
                }
            }
        }
        PlanKind::Oscillator { omega0, gamma0 } => {
            match oscillator_dephasing_check(*omega0, *gamma0) {
                Ok(report) => {
                    for c in report.checks {
                        let row = |mode: &str, value: f64| Row {
                            row: SweepRow {
                                coupling: 0.0,
                                detuning: 0.0,
                                label: format!("({},{})", c.n, c.m),
                                quantity: "decay_rate".into(),
                                value,
                                mode: mode.into(),
                                gauge: "invariant".into(),
                                cutoff: Some(5),
                            },
                            converged: true,
                        };
                        out.rows.push(row("analytic", c.expected));
                        out.rows.push(row("master", c.measured));
                    }
                }
                Err(e) => {
                    out.rows.push(Row {
                        row: failed_row(0.0, 0.0, "decay_rate", "master", "invariant", Some(5)),
                        converged: false,
                    });
                    out.failures.push(Failure {
                        index: 0,
                        coordinates: format!("omega0={omega0}, gamma0={gamma0}"),
                        mode: "master".into(),
                        convergence: e.is_convergence(),
                        error: e.to_string(),
                    });
                }
            }
        }
    }
    if !matches!(plan.kind, PlanKind::Oscillator { .. }) {
        out.snap_detunings(&plan.config.detunings);
    }
    out.sort();
    Ok(out)
}

fn record_oracle_failure(
    out: &mut RunOutput,
    index: usize,
    coupling: f64,
    detuning: f64,
    gauge: Gauge,
    cutoff: usize,
    e: Error,
) {
    out.rows.push(Row {
        row: failed_row(
            coupling,
            detuning,
            "decay_rate",
            "oracle",
            gauge.as_str(),
            Some(cutoff),
        ),
        converged: false,
    });
    out.failures.push(Failure {
        index,
        coordinates: format!("coupling={coupling}, delta={detuning}"),
        mode: "oracle".into(),
        convergence: e.is_convergence(),
        error: e.to_string(),
    });
}
