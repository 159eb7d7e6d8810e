//! Dressed-basis master equations.
//!
//! A noise `f(t) O` acting on a system with dressed states `|j>` is split into
//! frequency components. The zero-frequency part gives the pure-dephasing jump
//! `sum_j Phi^j |j><j|` with `Phi^j = sqrt(S_f(0)) O_jj`; a transition `k -> j`
//! gives the jump `|j><k|` at rate `Gamma^{jk} = S_f(omega_kj) |O_jk|^2`. With
//! the dissipator `D[L] rho = L rho L^dag - {L^dag L, rho} / 2`, a coherence
//! `rho_jk` then decays as `exp(-gamma t / 2)` with `gamma = S_f(0) |O_jj - O_kk|^2`
//! when no transitions act.

mod stochastic;

pub use stochastic::{
    stochastic_oracle, stochastic_oracle_in_basis, StochasticEnsemble, StochasticOptions,
    MAX_NORM_DRIFT,
};

use faer::{Mat, MatRef, Side};

use crate::c64;
use crate::error::{Error, Result};
use crate::fock::{hermitian_eig, Operator, Spectrum};
use crate::noise::{SpectralDensity, FREQUENCY_TOLERANCE};

/// Number of dressed levels kept by default.
pub const DEFAULT_LEVELS: usize = 12;

/// Trace drift that aborts a propagation.
pub const MAX_TRACE_DRIFT: f64 = 1e-6;

/// Largest RMS residual of `log |rho_jk|` accepted as exponential decay.
pub const FIT_TOLERANCE: f64 = 1e-3;

/// Smallest initial coherence that can be fitted.
pub const MIN_COHERENCE: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: Mat<c64>,
}

impl DensityMatrix {
    /// Validates Hermiticity and trace to 1e-10 and eigenvalues `>= -1e-9`.
    pub fn new(matrix: Mat<c64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let rho = DensityMatrix { matrix };
        let herm = rho.hermiticity_error();
        if herm > 1e-10 {
            return Err(Error::NotHermitian { deviation: herm });
        }
        let trace = rho.trace();
        if (trace - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter {
                name: "trace",
                value: trace,
                reason: "density matrix must have unit trace",
            });
        }
        let min = rho.min_eigenvalue()?;
        if min < -1e-9 {
            return Err(Error::InvalidParameter {
                name: "eigenvalue",
                value: min,
                reason: "density matrix must be positive semidefinite",
            });
        }
        Ok(rho)
    }

    /// `|psi><psi|` for a normalised state.
    pub fn pure(psi: &[c64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidParameter {
                name: "state",
                value: norm,
                reason: "state must have non-zero norm",
            });
        }
        let n = psi.len();
        DensityMatrix::new(Mat::from_fn(n, n, |i, j| {
            psi[i] * psi[j].conj() / (norm * norm)
        }))
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.matrix.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        trace(self.matrix.as_ref())
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(self.matrix.as_ref())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        min_eigenvalue(self.matrix.as_ref())
    }
}

fn trace(m: MatRef<'_, c64>) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

fn hermiticity_error(m: MatRef<'_, c64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in j..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn min_eigenvalue(m: MatRef<'_, c64>) -> Result<f64> {
    let sym = symmetrize(m);
    let evd = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(evd.S().column_vector()[0].re)
}

fn symmetrize(m: MatRef<'_, c64>) -> Mat<c64> {
    let n = m.nrows();
    Mat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// `Gamma^{jk}` for one ordered pair of distinct dressed states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffDiagonalRate {
    pub j: usize,
    pub k: usize,
    /// `omega_kj = E_k - E_j`, the energy released by the jump `|j><k|`.
    pub frequency: f64,
    pub rate: f64,
}

/// One jump operator in the dressed basis, already scaled by `sqrt(S_f)`.
#[derive(Debug, Clone)]
pub struct Jump {
    pub frequency: f64,
    /// `(j, k)` pairs `|j><k|` merged into this jump.
    pub pairs: Vec<(usize, usize)>,
    pub operator: Mat<c64>,
}

/// Dissipator of a dephasing channel on the lowest `n_levels` dressed states.
#[derive(Debug, Clone)]
pub struct DressedDissipator {
    /// Dressed energies; the Hamiltonian is `diag(energies)` in this basis.
    pub energies: Vec<f64>,
    /// `Phi^j`, the diagonal pure-dephasing jump.
    pub phi: Vec<f64>,
    pub offdiag: Vec<OffDiagonalRate>,
    pub jumps: Vec<Jump>,
}

impl DressedDissipator {
    pub fn n_levels(&self) -> usize {
        self.energies.len()
    }

    /// Dissipator with no jumps, for free evolution.
    pub fn free(energies: Vec<f64>) -> Self {
        DressedDissipator {
            phi: vec![0.0; energies.len()],
            energies,
            offdiag: Vec::new(),
            jumps: Vec::new(),
        }
    }

    /// Coherence decay rate `(Phi^j - Phi^k)^2` from the pure-dephasing term alone.
    pub fn pure_dephasing_rate(&self, j: usize, k: usize) -> f64 {
        (self.phi[j] - self.phi[k]).powi(2)
    }
}

/// Builds the dissipator of the noise `f(t) O` with spectral density `density`
/// in the basis of the lowest `n_levels` eigenstates of `spectrum`.
///
/// Components whose frequencies agree within [`FREQUENCY_TOLERANCE`] cannot be
/// treated as independent noises; they are merged into one collective jump and
/// a warning is logged. The zero-frequency component always includes the
/// diagonal term.
pub fn build_dressed_dissipator(
    spectrum: &Spectrum,
    channel_op: &Operator,
    density: &SpectralDensity,
    n_levels: usize,
) -> Result<DressedDissipator> {
    if n_levels > spectrum.len() || n_levels == 0 {
        return Err(Error::TooManyLevels {
            requested: n_levels,
            available: spectrum.len(),
        });
    }
    if channel_op.dim() != spectrum.len() {
        return Err(Error::DimensionMismatch {
            expected: spectrum.len(),
            found: channel_op.dim(),
        });
    }
    let basis = spectrum.lowest_vectors(n_levels)?;
    let o = channel_op.project(basis.as_ref());
    let energies = spectrum.values()[..n_levels].to_vec();

    let s0 = density.zero_frequency();
    let phi: Vec<f64> = (0..n_levels).map(|j| s0.sqrt() * o[(j, j)].re).collect();

    let mut offdiag = Vec::new();
    let mut components: Vec<(f64, usize, usize)> = Vec::new();
    for j in 0..n_levels {
        for k in 0..n_levels {
            let frequency = if j == k {
                0.0
            } else {
                energies[k] - energies[j]
            };
            if j != k {
                offdiag.push(OffDiagonalRate {
                    j,
                    k,
                    frequency,
                    rate: density.at(frequency) * o[(j, k)].norm_sqr(),
                });
            }
            components.push((frequency, j, k));
        }
    }
    components.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut jumps = Vec::new();
    let mut start = 0;
    while start < components.len() {
        let mut end = start + 1;
        while end < components.len()
            && components[end].0 - components[start].0 < FREQUENCY_TOLERANCE
        {
            end += 1;
        }
        let cluster = &components[start..end];
        start = end;

        let frequency = cluster.iter().map(|c| c.0).sum::<f64>() / cluster.len() as f64;
        let frequency = if frequency.abs() < FREQUENCY_TOLERANCE {
            0.0
        } else {
            frequency
        };
        let s = density.at(frequency);
        let pairs: Vec<(usize, usize)> = cluster
            .iter()
            .filter(|c| o[(c.1, c.2)].norm() > 0.0)
            .map(|c| (c.1, c.2))
            .collect();
        if s == 0.0 || pairs.is_empty() {
            continue;
        }
        let transitions = pairs.iter().filter(|(j, k)| j != k).count();
        if transitions > 1 || (transitions == 1 && frequency == 0.0) {
            log::warn!(
                "{} dressed transitions share frequency {frequency:.3e}; merged into one collective jump",
                transitions
            );
        }
        let amplitude = s.sqrt();
        let mut operator = Mat::zeros(n_levels, n_levels);
        for &(j, k) in &pairs {
            operator[(j, k)] = o[(j, k)] * amplitude;
        }
        jumps.push(Jump {
            frequency,
            pairs,
            operator,
        });
    }

    Ok(DressedDissipator {
        energies,
        phi,
        offdiag,
        jumps,
    })
}

/// Density matrices sampled at `times`, in the dressed basis.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Mat<c64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn coherence(&self, j: usize, k: usize) -> Vec<c64> {
        self.states.iter().map(|m| m[(j, k)]).collect()
    }

    /// Expectation value `tr(rho A)` at every sample.
    pub fn expectation(&self, a: MatRef<'_, c64>) -> Vec<c64> {
        self.states
            .iter()
            .map(|rho| {
                let n = rho.nrows();
                let mut acc = c64::new(0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        acc += rho[(i, j)] * a[(j, i)];
                    }
                }
                acc
            })
            .collect()
    }
}

struct Generator {
    jumps: Vec<(Mat<c64>, Mat<c64>, Mat<c64>)>,
    hamiltonian: Option<Mat<c64>>,
}

impl Generator {
    fn new(jumps: &[Mat<c64>], hamiltonian: Option<Mat<c64>>) -> Self {
        let jumps = jumps
            .iter()
            .map(|l| {
                let ld = l.adjoint().to_owned();
                let ldl = &ld * l;
                (l.clone(), ld, ldl)
            })
            .collect();
        Generator { jumps, hamiltonian }
    }

    fn apply(&self, rho: &Mat<c64>) -> Mat<c64> {
        let n = rho.nrows();
        let mut out = Mat::<c64>::zeros(n, n);
        if let Some(h) = &self.hamiltonian {
            let hr = h * rho;
            let rh = rho * h;
            out = Mat::from_fn(n, n, |i, j| c64::new(0.0, -1.0) * (hr[(i, j)] - rh[(i, j)]));
        }
        for (l, ld, ldl) in &self.jumps {
            let sandwich = l * rho * ld;
            let left = ldl * rho;
            let right = rho * ldl;
            out = Mat::from_fn(n, n, |i, j| {
                out[(i, j)] + sandwich[(i, j)] - (left[(i, j)] + right[(i, j)]) * 0.5
            });
        }
        out
    }

    fn rk4_step(&self, rho: &Mat<c64>, dt: f64) -> Mat<c64> {
        let n = rho.nrows();
        let axpy = |a: &Mat<c64>, s: f64, b: &Mat<c64>| {
            Mat::from_fn(n, n, |i, j| a[(i, j)] + b[(i, j)] * s)
        };
        let k1 = self.apply(rho);
        let k2 = self.apply(&axpy(rho, dt / 2.0, &k1));
        let k3 = self.apply(&axpy(rho, dt / 2.0, &k2));
        let k4 = self.apply(&axpy(rho, dt, &k3));
        let next = Mat::from_fn(n, n, |i, j| {
            rho[(i, j)]
                + (k1[(i, j)] + k2[(i, j)] * 2.0 + k3[(i, j)] * 2.0 + k4[(i, j)]) * (dt / 6.0)
        });
        symmetrize(next.as_ref())
    }
}

fn step_count(t_final: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0) || !(t_final >= 0.0) || !dt.is_finite() || !t_final.is_finite() {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
            reason: "time step must be positive and the final time non-negative",
        });
    }
    let n = (t_final / dt).round().max(1.0) as usize;
    Ok((n, t_final / n as f64))
}

fn run(
    generator: &Generator,
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
    to_lab: impl Fn(&Mat<c64>, f64) -> Mat<c64>,
) -> Result<Trajectory> {
    let (steps, dt) = step_count(t_final, dt)?;
    let mut rho = rho0.matrix.clone();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(to_lab(&rho, 0.0));
    for step in 1..=steps {
        rho = generator.rk4_step(&rho, dt);
        let t = step as f64 * dt;
        let drift = (trace(rho.as_ref()) - 1.0).abs();
        if drift.is_nan() || drift > MAX_TRACE_DRIFT {
            return Err(Error::TraceDrift { drift, time: t });
        }
        times.push(t);
        states.push(to_lab(&rho, t));
    }
    Ok(Trajectory { times, states })
}

/// Integrates `d rho / dt = -i [H, rho] + sum D[L] rho` with `H = diag(energies)`
/// by fixed-step fourth-order Runge-Kutta.
///
/// Integration runs in the interaction picture of `H`. Every jump collects
/// components of a single frequency, so it only acquires a phase there and the
/// generator is time independent; the step is limited by the dissipative rates
/// alone. Samples are returned in the Schroedinger picture.
pub fn propagate(
    rho0: &DensityMatrix,
    dis: &DressedDissipator,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory> {
    let n = dis.n_levels();
    if rho0.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rho0.dim(),
        });
    }
    let jumps: Vec<Mat<c64>> = dis.jumps.iter().map(|j| j.operator.clone()).collect();
    let generator = Generator::new(&jumps, None);
    let e0 = dis.energies[0];
    let energies: Vec<f64> = dis.energies.iter().map(|e| e - e0).collect();
    run(&generator, rho0, t_final, dt, |rho, t| {
        Mat::from_fn(n, n, |i, j| {
            rho[(i, j)] * c64::new(0.0, -(energies[i] - energies[j]) * t).exp()
        })
    })
}

/// Schroedinger-picture propagation with an arbitrary Hamiltonian and jump
/// operators, for checks outside the dressed basis. The step must resolve the
/// Hamiltonian's frequencies, roughly `dt <= 0.01 / max |omega_jk|`.
pub fn propagate_with_hamiltonian(
    rho0: &DensityMatrix,
    hamiltonian: &Operator,
    jumps: &[Mat<c64>],
    t_final: f64,
    dt: f64,
) -> Result<Trajectory> {
    if rho0.dim() != hamiltonian.dim() {
        return Err(Error::DimensionMismatch {
            expected: hamiltonian.dim(),
            found: rho0.dim(),
        });
    }
    let generator = Generator::new(jumps, Some(hamiltonian.matrix().to_owned()));
    run(&generator, rho0, t_final, dt, |rho, _| rho.clone())
}

/// Worst-case violations of the density-matrix contracts over a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractReport {
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
    pub max_population_drift: f64,
}

impl ContractReport {
    /// Trace to 1e-8, Hermiticity to 1e-10 and eigenvalues above -1e-8.
    pub fn holds(&self) -> bool {
        self.max_trace_error < 1e-8
            && self.max_hermiticity_error < 1e-10
            && self.min_eigenvalue > -1e-8
    }
}

pub fn check_contracts(trajectory: &Trajectory) -> Result<ContractReport> {
    let mut report = ContractReport {
        max_trace_error: 0.0,
        max_hermiticity_error: 0.0,
        min_eigenvalue: f64::INFINITY,
        max_population_drift: 0.0,
    };
    let first = &trajectory.states[0];
    for rho in &trajectory.states {
        report.max_trace_error = report
            .max_trace_error
            .max((trace(rho.as_ref()) - 1.0).abs());
        report.max_hermiticity_error = report
            .max_hermiticity_error
            .max(hermiticity_error(rho.as_ref()));
        report.min_eigenvalue = report.min_eigenvalue.min(min_eigenvalue(rho.as_ref())?);
        for i in 0..rho.nrows() {
            report.max_population_drift = report
                .max_population_drift
                .max((rho[(i, i)].re - first[(i, i)].re).abs());
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Samples before this time are ignored.
    pub t_min: f64,
    pub t_max: f64,
    /// Largest RMS residual of `log |rho_jk|` accepted.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            t_min: 0.0,
            t_max: f64::INFINITY,
            tolerance: FIT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Full-width rate `gamma` with `|rho_jk| ~ exp(-gamma t / 2)`.
    pub rate: f64,
    /// RMS residual of the straight-line fit to `log |rho_jk|`.
    pub residual: f64,
    /// Standard error of `rate` from the fit.
    pub rate_error: f64,
    pub points: usize,
}

/// Least-squares fit of `log |rho_jk(t)|` to a line; returns `-2 * slope`.
pub fn extract_decay_rate(trajectory: &Trajectory, pair: (usize, usize)) -> Result<DecayFit> {
    extract_decay_rate_with(trajectory, pair, &FitOptions::default())
}

pub fn extract_decay_rate_with(
    trajectory: &Trajectory,
    pair: (usize, usize),
    options: &FitOptions,
) -> Result<DecayFit> {
    let (j, k) = pair;
    let initial = trajectory.states.first().map_or(0.0, |m| m[(j, k)].norm());
    if !(initial > MIN_COHERENCE) {
        return Err(Error::WeakCoherence { magnitude: initial });
    }
    let samples: Vec<(f64, f64)> = trajectory
        .times
        .iter()
        .zip(&trajectory.states)
        .filter(|(t, _)| **t >= options.t_min && **t <= options.t_max)
        .map(|(&t, m)| (t, m[(j, k)].norm().ln()))
        .collect();
    let n = samples.len();
    if n < 3 {
        return Err(Error::InvalidParameter {
            name: "fit window",
            value: n as f64,
            reason: "at least three samples are needed",
        });
    }
    let nf = n as f64;
    let mean_t = samples.iter().map(|s| s.0).sum::<f64>() / nf;
    let mean_y = samples.iter().map(|s| s.1).sum::<f64>() / nf;
    let sxx: f64 = samples.iter().map(|s| (s.0 - mean_t).powi(2)).sum();
    let sxy: f64 = samples
        .iter()
        .map(|s| (s.0 - mean_t) * (s.1 - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_t;
    let sse: f64 = samples
        .iter()
        .map(|s| (s.1 - intercept - slope * s.0).powi(2))
        .sum();
    let residual = (sse / nf).sqrt();
    if !residual.is_finite() || residual > options.tolerance {
        return Err(Error::FitQuality {
            residual,
            tolerance: options.tolerance,
        });
    }
    let slope_error = (sse / (nf - 2.0) / sxx).sqrt();
    Ok(DecayFit {
        rate: -2.0 * slope,
        residual,
        rate_error: 2.0 * slope_error,
        points: n,
    })
}

/// One coherence of the dephased oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorCheck {
    pub n: usize,
    pub m: usize,
    pub measured: f64,
    pub expected: f64,
    pub population_drift: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorReport {
    pub checks: Vec<OscillatorCheck>,
}

impl OscillatorReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Harmonic oscillator `omega0 a^dag a` with frequency noise of bare rate
/// `gamma0 = 2 S_f(0)`: populations of number states stay fixed and `rho_nm`
/// decays at the full-width rate `(gamma0 / 2) (n - m)^2`. Checks all `n, m <= 4`.
pub fn oscillator_dephasing_check(omega0: f64, gamma0: f64) -> Result<OscillatorReport> {
    const TOP: usize = 4;
    if !(omega0 > 0.0) || !(gamma0 >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "omega0",
            value: omega0,
            reason: "frequency must be positive and gamma0 non-negative",
        });
    }
    let cutoff = TOP + 1;
    let h = omega0 * &crate::fock::number(cutoff)?;
    let spectrum = hermitian_eig(&h)?;
    let density = SpectralDensity::from_gamma0(gamma0)?;
    let dis = build_dressed_dissipator(&spectrum, &crate::fock::number(cutoff)?, &density, cutoff)?;

    let amplitude = c64::new(1.0 / (cutoff as f64).sqrt(), 0.0);
    let rho0 = DensityMatrix::pure(&vec![amplitude; cutoff])?;
    let fastest = (gamma0 / 2.0) * (TOP * TOP) as f64;
    let (t_final, dt) = if fastest > 0.0 {
        (4.0 / fastest, 0.02 / fastest)
    } else {
        (10.0 / omega0, 0.01 / omega0)
    };
    let trajectory = propagate(&rho0, &dis, t_final, dt)?;
    let contracts = check_contracts(&trajectory)?;

    let mut checks = Vec::new();
    for n in 0..=TOP {
        for m in 0..=TOP {
            let expected = (gamma0 / 2.0) * ((n as f64) - (m as f64)).powi(2);
            let measured = extract_decay_rate(&trajectory, (n, m))?.rate;
            let tolerance = 1e-6 * gamma0.max(1e-12) + 1e-10;
            checks.push(OscillatorCheck {
                n,
                m,
                measured,
                expected,
                population_drift: contracts.max_population_drift,
                pass: (measured - expected).abs() <= tolerance
                    && contracts.max_population_drift < 1e-8,
            });
        }
    }
    Ok(OscillatorReport { checks })
}
