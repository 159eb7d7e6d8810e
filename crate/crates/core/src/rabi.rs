//! Quantum Rabi model in the Coulomb and dipole gauges.
//!
//! The Hilbert space is qubit ⊗ cavity with the qubit basis ordered `(|e>, |g>)`.
//! The dipole-gauge Hamiltonian omits the constant `eta^2 omega_c`, so its energies
//! sit exactly [`dipole_energy_offset`] below the Coulomb-gauge ones.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    self, annihilation, converged_drift, default_cutoff, hermitian_eig_sectored, number, pauli,
    tensor, Axis, Operator, SpaceDescriptor, Spectrum, CONVERGENCE_CUTOFF_STEP,
};
use crate::noise::SpectralDensity;
use crate::sweep::{PointFailure, SweepResult, SweepRow};
use crate::{c64, Gauge, GaugeMode};

/// Largest coupling increment used while tracking dressed states.
pub const TRACKING_STEP: f64 = 0.01;

/// Tracking gives up once the step has been halved below this.
pub const MIN_TRACKING_STEP: f64 = 1e-9;

/// Minimum overlap between a tracked state and its continuation.
pub const MIN_TRACKING_OVERLAP: f64 = 0.9;

/// Two candidate continuations closer than this in overlap are ambiguous.
pub const OVERLAP_AMBIGUITY: f64 = 1e-6;

const DEGENERACY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiParams {
    pub omega_c: f64,
    pub omega_q: f64,
    pub eta: f64,
    /// Fock cutoff; `None` selects [`default_cutoff`] for `eta`.
    pub cutoff: Option<usize>,
}

impl RabiParams {
    pub fn new(omega_c: f64, omega_q: f64, eta: f64) -> Result<Self> {
        let p = RabiParams {
            omega_c,
            omega_q,
            eta,
            cutoff: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// `omega_c = 1`, `omega_q = 1 + detuning`.
    pub fn resonant_with_detuning(detuning: f64, eta: f64) -> Result<Self> {
        RabiParams::new(1.0, 1.0 + detuning, eta)
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Result<Self> {
        self.cutoff = Some(cutoff);
        self.validate()?;
        Ok(self)
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        positive("omega_c", self.omega_c)?;
        positive("omega_q", self.omega_q)?;
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "eta",
                value: self.eta,
                reason: "must be finite and non-negative",
            });
        }
        if let Some(cutoff) = self.cutoff {
            if cutoff < 2 {
                return Err(Error::InvalidCutoff { cutoff });
            }
        }
        Ok(())
    }

    /// `delta = omega_q - omega_c`.
    pub fn detuning(&self) -> f64 {
        self.omega_q - self.omega_c
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff.unwrap_or_else(|| default_cutoff(self.eta))
    }

    pub fn space(&self) -> Result<SpaceDescriptor> {
        Ok(SpaceDescriptor::two_level().tensor(&SpaceDescriptor::boson(self.cutoff())?))
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and positive",
        });
    }
    Ok(())
}

/// Constant dropped from the dipole-gauge Hamiltonian: `E_C = E_D + eta^2 omega_c`.
pub fn dipole_energy_offset(p: &RabiParams) -> f64 {
    p.eta * p.eta * p.omega_c
}

struct Parts {
    n: Operator,
    sz: Operator,
    /// `A = eta (a + a^dag)` on the cavity factor alone.
    a_field: Operator,
    qubit_identity: Operator,
    field_identity: Operator,
    cutoff: usize,
}

fn parts(p: &RabiParams) -> Result<Parts> {
    p.validate()?;
    let cutoff = p.cutoff();
    let a = annihilation(cutoff)?;
    let field_identity = Operator::identity(a.space());
    let qubit_identity = Operator::identity(&SpaceDescriptor::two_level());
    Ok(Parts {
        n: tensor(&qubit_identity, &number(cutoff)?),
        sz: tensor(&pauli(Axis::Z), &field_identity),
        a_field: p.eta * &(&a + &a.adjoint()),
        qubit_identity,
        field_identity,
        cutoff,
    })
}

/// `H_D = omega_c a^dag a + (omega_q / 2) sigma_z - i eta omega_c (a - a^dag) sigma_x`.
pub fn build_dipole_hamiltonian(p: &RabiParams) -> Result<Operator> {
    let parts = parts(p)?;
    let a = annihilation(parts.cutoff)?;
    let quadrature = &a - &a.adjoint();
    let coupling = tensor(&pauli(Axis::X), &quadrature);
    let h = &(&(p.omega_c * &parts.n) + &((p.omega_q / 2.0) * &parts.sz))
        + &(c64::new(0.0, -p.eta * p.omega_c) * &coupling);
    Ok(h.symmetrized())
}

/// `H_C = omega_c a^dag a + (omega_q / 2) [sigma_z cos 2A + sigma_y sin 2A]`.
pub fn build_coulomb_hamiltonian(p: &RabiParams) -> Result<Operator> {
    let parts = parts(p)?;
    let spectrum = fock::hermitian_eig(&parts.a_field)?;
    let cos2 = spectrum.map(|x| c64::new((2.0 * x).cos(), 0.0));
    let sin2 = spectrum.map(|x| c64::new((2.0 * x).sin(), 0.0));
    let qubit = &tensor(&pauli(Axis::Z), &cos2) + &tensor(&pauli(Axis::Y), &sin2);
    let h = &(p.omega_c * &parts.n) + &((p.omega_q / 2.0) * &qubit);
    Ok(h.symmetrized())
}

pub fn build_hamiltonian(p: &RabiParams, gauge: Gauge) -> Result<Operator> {
    match gauge {
        Gauge::Coulomb => build_coulomb_hamiltonian(p),
        Gauge::Dipole => build_dipole_hamiltonian(p),
    }
}

/// `T = exp(-i A sigma_x) = cos A - i sigma_x sin A`, mapping Coulomb-gauge
/// operators to dipole-gauge ones by `O_D = T O_C T^dag`.
pub fn gauge_unitary(p: &RabiParams) -> Result<Operator> {
    let parts = parts(p)?;
    let spectrum = fock::hermitian_eig(&parts.a_field)?;
    let cos = spectrum.map(|x| c64::new(x.cos(), 0.0));
    let sin = spectrum.map(|x| c64::new(x.sin(), 0.0));
    Ok(&tensor(&parts.qubit_identity, &cos)
        - &(c64::new(0.0, 1.0) * &tensor(&pauli(Axis::X), &sin)))
}

/// Parity `sigma_z (-1)^n` of each basis state, as a sector label.
pub fn parity_sectors(p: &RabiParams) -> Vec<u32> {
    let cutoff = p.cutoff();
    (0..2 * cutoff)
        .map(|i| {
            let excited = i < cutoff;
            let odd_photons = (i % cutoff) % 2 == 1;
            u32::from(excited == odd_photons)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Qubit,
    Cavity,
}

#[derive(Debug, Clone)]
pub struct DephasingChannel {
    pub target: Target,
    /// Bare dephasing rate `gamma0`, in units of `omega_c`.
    pub gamma0: f64,
    pub spectral_density: SpectralDensity,
    pub gauge_mode: GaugeMode,
}

impl DephasingChannel {
    /// Channel with the default low-frequency density `S_f(0) = gamma0 / 2`.
    pub fn new(target: Target, gamma0: f64, gauge_mode: GaugeMode) -> Result<Self> {
        Ok(DephasingChannel {
            target,
            gamma0,
            spectral_density: SpectralDensity::from_gamma0(gamma0)?,
            gauge_mode,
        })
    }

    pub fn with_spectral_density(mut self, density: SpectralDensity) -> Self {
        self.spectral_density = density;
        self
    }
}

/// Operator through which the channel's noise couples, expressed in `gauge`.
///
/// In correct mode the qubit couples through `sigma_z` in the dipole gauge and
/// `T^dag sigma_z T` in the Coulomb gauge; the cavity through `a^dag a` in the
/// Coulomb gauge and `a_D^dag a_D` with `a_D = a + i eta sigma_x` in the dipole
/// gauge. Naive modes use the bare operator in their own gauge only.
pub fn channel_operator(ch: &DephasingChannel, p: &RabiParams, gauge: Gauge) -> Result<Operator> {
    let parts = parts(p)?;
    let bare = match ch.target {
        Target::Qubit => parts.sz.clone(),
        Target::Cavity => parts.n.clone(),
    };
    match ch.gauge_mode {
        GaugeMode::Correct => match (ch.target, gauge) {
            (Target::Qubit, Gauge::Dipole) | (Target::Cavity, Gauge::Coulomb) => Ok(bare),
            (Target::Qubit, Gauge::Coulomb) => {
                Ok(bare.conjugated_by_adjoint(&gauge_unitary(p)?).symmetrized())
            }
            (Target::Cavity, Gauge::Dipole) => {
                let a = tensor(&parts.qubit_identity, &annihilation(parts.cutoff)?);
                let shift = c64::new(0.0, p.eta) * &tensor(&pauli(Axis::X), &parts.field_identity);
                let a_d = &a + &shift;
                Ok((&a_d.adjoint() * &a_d).symmetrized())
            }
        },
        mode if mode.natural_gauge() == gauge => Ok(bare),
        mode => Err(Error::InconsistentGauge {
            mode: mode.to_string(),
            gauge: gauge.to_string(),
        }),
    }
}

/// Name of a dressed Rabi state: `0` for the ground state, `n-`/`n+` for the
/// two states continuing the `n`-excitation doublet `{|g,n>, |e,n-1>}`, the
/// minus state being the lower one at vanishing coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateLabel {
    Ground,
    Minus(usize),
    Plus(usize),
}

impl StateLabel {
    /// Position of the label when states are listed as `0, 1-, 1+, 2-, 2+, ...`.
    pub fn rank(self) -> usize {
        match self {
            StateLabel::Ground => 0,
            StateLabel::Minus(n) => 2 * n - 1,
            StateLabel::Plus(n) => 2 * n,
        }
    }

    pub fn from_rank(rank: usize) -> StateLabel {
        match rank {
            0 => StateLabel::Ground,
            r if r % 2 == 1 => StateLabel::Minus(r.div_ceil(2)),
            r => StateLabel::Plus(r / 2),
        }
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateLabel::Ground => f.write_str("0"),
            StateLabel::Minus(n) => write!(f, "{n}-"),
            StateLabel::Plus(n) => write!(f, "{n}+"),
        }
    }
}

impl FromStr for StateLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0" {
            return Ok(StateLabel::Ground);
        }
        let bad = || Error::UnresolvedLabel(s.to_string());
        let (digits, sign) = s.split_at(s.len().checked_sub(1).ok_or_else(bad)?);
        let n: usize = digits.parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        match sign {
            "-" => Ok(StateLabel::Minus(n)),
            "+" => Ok(StateLabel::Plus(n)),
            _ => Err(bad()),
        }
    }
}

/// Ordered pair `(j, k)` of states whose coherence `rho_jk` is considered.
pub type Transition = (StateLabel, StateLabel);

pub fn transition_name(t: Transition) -> String {
    format!("({},{})", t.0, t.1)
}

/// Eigenstates of a Rabi Hamiltonian with labels obtained by adiabatic
/// continuation from the uncoupled product states.
#[derive(Debug, Clone)]
pub struct LabeledSpectrum {
    pub params: RabiParams,
    pub gauge: Gauge,
    pub spectrum: Spectrum,
    labels: BTreeMap<StateLabel, usize>,
    /// Smallest same-label overlap between consecutive tracking steps.
    pub min_overlap: f64,
    /// Relative eigenvalue drift against the cutoff + 8 check.
    pub convergence_drift: f64,
}

impl LabeledSpectrum {
    pub fn energies(&self) -> &[f64] {
        self.spectrum.values()
    }

    pub fn labels(&self) -> impl Iterator<Item = (StateLabel, usize)> + '_ {
        self.labels.iter().map(|(&l, &i)| (l, i))
    }

    pub fn index(&self, label: StateLabel) -> Result<usize> {
        self.labels
            .get(&label)
            .copied()
            .ok_or_else(|| Error::UnresolvedLabel(label.to_string()))
    }

    pub fn energy(&self, label: StateLabel) -> Result<f64> {
        Ok(self.spectrum.values()[self.index(label)?])
    }

    pub fn state(&self, label: StateLabel) -> Result<&[c64]> {
        Ok(self.spectrum.vector(self.index(label)?))
    }
}

fn product_state(p: &RabiParams, excited: bool, photons: usize) -> Vec<c64> {
    let cutoff = p.cutoff();
    let mut v = vec![c64::new(0.0, 0.0); 2 * cutoff];
    let qubit = if excited { 0 } else { 1 };
    v[qubit * cutoff + photons] = c64::new(1.0, 0.0);
    v
}

/// First-order coupling `dH/d eta` at `eta = 0`, used to split degenerate seeds.
fn coupling_derivative(p: &RabiParams, gauge: Gauge) -> Result<Operator> {
    let a = annihilation(p.cutoff())?;
    Ok(match gauge {
        Gauge::Dipole => c64::new(0.0, -p.omega_c) * &tensor(&pauli(Axis::X), &(&a - &a.adjoint())),
        Gauge::Coulomb => p.omega_q * &tensor(&pauli(Axis::Y), &(&a + &a.adjoint())),
    })
}

/// Uncoupled states for the first `n_levels` labels. States degenerate with each
/// other are replaced by the combinations that diagonalise the coupling.
fn seed_states(p: &RabiParams, gauge: Gauge, n_levels: usize) -> Result<Vec<Vec<c64>>> {
    let cutoff = p.cutoff();
    let top = StateLabel::from_rank(n_levels - 1);
    let doublets = match top {
        StateLabel::Ground => 0,
        StateLabel::Minus(n) | StateLabel::Plus(n) => n,
    };
    if doublets >= cutoff {
        return Err(Error::TooManyLevels {
            requested: n_levels,
            available: 2 * cutoff - 1,
        });
    }
    // Every complete doublet up to `top`, so degenerate partners are seen together.
    let mut states = vec![(-p.omega_q / 2.0, product_state(p, false, 0))];
    for n in 1..=doublets {
        let lower = n as f64 * p.omega_c - p.omega_q / 2.0;
        let upper = (n - 1) as f64 * p.omega_c + p.omega_q / 2.0;
        let g = (lower, product_state(p, false, n));
        let e = (upper, product_state(p, true, n - 1));
        if lower <= upper {
            states.extend([g, e]);
        } else {
            states.extend([e, g]);
        }
    }

    let v = coupling_derivative(p, gauge)?;
    let mut start = 0;
    while start < states.len() {
        let mut end = start + 1;
        while end < states.len()
            && (states[end].0 - states[start].0).abs() < DEGENERACY_TOLERANCE * p.omega_c.max(1.0)
        {
            end += 1;
        }
        if end - start > 1 {
            let m = end - start;
            let basis = Mat::from_fn(states[0].1.len(), m, |i, j| states[start + j].1[i]);
            let block = v.project(basis.as_ref());
            let block = Operator::from_fn(
                SpaceDescriptor::new(vec![fock::Factor::Boson { cutoff: m }])?,
                |i, j| block[(i, j)],
            );
            let eig = fock::hermitian_eig(&block.symmetrized())?;
            let mixed: Vec<Vec<c64>> = (0..m)
                .map(|k| {
                    let coeffs = eig.vector(k);
                    (0..basis.nrows())
                        .map(|i| (0..m).map(|j| basis[(i, j)] * coeffs[j]).sum())
                        .collect()
                })
                .collect();
            for (slot, vector) in states[start..end].iter_mut().zip(mixed) {
                slot.1 = vector;
            }
        }
        start = end;
    }
    Ok(states.into_iter().take(n_levels).map(|s| s.1).collect())
}

fn overlap(u: &[c64], v: &[c64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| a.conj() * b)
        .sum::<c64>()
        .norm()
}

/// Matches each tracked vector to an eigenvector of `spectrum`. Returns `None`
/// when a match is weak, ambiguous or not one-to-one.
fn match_states(tracked: &[Vec<c64>], spectrum: &Spectrum) -> Option<(Vec<usize>, f64)> {
    let mut chosen = Vec::with_capacity(tracked.len());
    let mut worst = 1.0f64;
    for v in tracked {
        let mut best = (0usize, -1.0f64);
        let mut second = -1.0f64;
        for k in 0..spectrum.len() {
            let o = overlap(spectrum.vector(k), v);
            if o > best.1 {
                second = best.1;
                best = (k, o);
            } else if o > second {
                second = o;
            }
        }
        if best.1 < MIN_TRACKING_OVERLAP || best.1 - second < OVERLAP_AMBIGUITY {
            return None;
        }
        if chosen.contains(&best.0) {
            return None;
        }
        worst = worst.min(best.1);
        chosen.push(best.0);
    }
    Some((chosen, worst))
}

fn sectored_spectrum(p: &RabiParams, gauge: Gauge) -> Result<Spectrum> {
    hermitian_eig_sectored(&build_hamiltonian(p, gauge)?, &parity_sectors(p))
}

/// Diagonalises the model in `gauge` and labels the `n_levels` lowest-ranked
/// states (`0, 1-, 1+, 2-, ...`) by continuation from `eta = 0`.
///
/// The coupling is increased in steps of at most [`TRACKING_STEP`]; a step is
/// halved whenever a state's best overlap drops below [`MIN_TRACKING_OVERLAP`] or
/// is not unique. The final spectrum is checked for truncation convergence.
pub fn label_states(p: &RabiParams, n_levels: usize, gauge: Gauge) -> Result<LabeledSpectrum> {
    p.validate()?;
    let dim = 2 * p.cutoff();
    if n_levels == 0 || n_levels > dim {
        return Err(Error::TooManyLevels {
            requested: n_levels,
            available: dim,
        });
    }
    let cutoff = p.cutoff();
    let pinned = |eta: f64| RabiParams {
        eta,
        cutoff: Some(cutoff),
        ..*p
    };

    let mut tracked = seed_states(p, gauge, n_levels)?;
    let mut eta = 0.0;
    let mut step = TRACKING_STEP;
    let mut min_overlap = 1.0f64;
    let mut spectrum = sectored_spectrum(&pinned(0.0), gauge)?;
    let mut indices = match match_states(&tracked, &spectrum) {
        Some((indices, worst)) => {
            min_overlap = worst;
            indices
        }
        None if p.eta > 0.0 => Vec::new(),
        None => {
            return Err(Error::DegenerateTracking {
                coupling: 0.0,
                step: 0.0,
            })
        }
    };

    while eta < p.eta {
        let next = (eta + step).min(p.eta);
        let candidate = sectored_spectrum(&pinned(next), gauge)?;
        match match_states(&tracked, &candidate) {
            Some((found, worst)) => {
                tracked = found
                    .iter()
                    .map(|&k| candidate.vector(k).to_vec())
                    .collect();
                min_overlap = min_overlap.min(worst);
                indices = found;
                spectrum = candidate;
                eta = next;
                step = (2.0 * step).min(TRACKING_STEP);
            }
            None => {
                step /= 2.0;
                if step < MIN_TRACKING_STEP {
                    return Err(Error::DegenerateTracking {
                        coupling: eta,
                        step,
                    });
                }
            }
        }
    }

    let check_levels = indices.iter().max().map_or(0, |&i| i + 1).max(n_levels);
    let fine = sectored_spectrum(
        &RabiParams {
            cutoff: Some(cutoff + CONVERGENCE_CUTOFF_STEP),
            ..*p
        },
        gauge,
    )?;
    let convergence_drift = converged_drift(
        cutoff,
        &spectrum.values()[..check_levels],
        &fine.values()[..check_levels],
    )?;

    let labels = indices
        .into_iter()
        .enumerate()
        .map(|(rank, index)| (StateLabel::from_rank(rank), index))
        .collect();
    Ok(LabeledSpectrum {
        params: *p,
        gauge,
        spectrum,
        labels,
        min_overlap,
        convergence_drift,
    })
}

fn levels_for(transitions: &[Transition]) -> usize {
    transitions
        .iter()
        .flat_map(|t| [t.0.rank(), t.1.rank()])
        .max()
        .unwrap_or(0)
        + 1
}

/// `|<j|O|j> - <k|O|k>|^2 / 2`, the rate in units of `gamma0`.
pub fn normalised_rate(
    labeled: &LabeledSpectrum,
    operator: &Operator,
    transition: Transition,
) -> Result<f64> {
    let oj = operator.expectation(labeled.state(transition.0)?).re;
    let ok = operator.expectation(labeled.state(transition.1)?).re;
    Ok(0.5 * (oj - ok).powi(2))
}

/// Pure-dephasing rate `(gamma0 / 2) |O_jj - O_kk|^2` of the coherence between
/// the two labelled states, evaluated in the channel's natural gauge.
pub fn transition_dephasing_rate(
    p: &RabiParams,
    ch: &DephasingChannel,
    transition: Transition,
) -> Result<f64> {
    transition_dephasing_rate_in(p, ch, transition, ch.gauge_mode.natural_gauge())
}

/// As [`transition_dephasing_rate`], with the gauge chosen explicitly.
pub fn transition_dephasing_rate_in(
    p: &RabiParams,
    ch: &DephasingChannel,
    transition: Transition,
    gauge: Gauge,
) -> Result<f64> {
    let operator = channel_operator(ch, p, gauge)?;
    let labeled = label_states(p, levels_for(&[transition]), gauge)?;
    Ok(ch.gamma0 * normalised_rate(&labeled, &operator, transition)?)
}

fn point_rows(
    p: &RabiParams,
    ch: &DephasingChannel,
    transitions: &[Transition],
) -> Result<Vec<SweepRow>> {
    let gauge = ch.gauge_mode.natural_gauge();
    let operator = channel_operator(ch, p, gauge)?;
    let labeled = label_states(p, levels_for(transitions), gauge)?;
    transitions
        .iter()
        .map(|&t| {
            Ok(SweepRow {
                coupling: p.eta,
                detuning: p.detuning(),
                label: transition_name(t),
                quantity: "rate_over_gamma0".into(),
                value: normalised_rate(&labeled, &operator, t)?,
                mode: ch.gauge_mode.to_string(),
                gauge: gauge.to_string(),
                cutoff: Some(p.cutoff()),
            })
        })
        .collect()
}

/// Rates over `gamma0` for every grid point and transition. Points run in
/// parallel; failed points are collected with their coordinates instead of
/// aborting the sweep.
pub fn rate_sweep(
    grid: &[RabiParams],
    ch: &DephasingChannel,
    transitions: &[Transition],
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "grid",
            value: 0.0,
            reason: "sweep grid is empty",
        });
    }
    let outcomes: Vec<Result<Vec<SweepRow>>> = grid
        .par_iter()
        .map(|p| point_rows(p, ch, transitions))
        .collect();
    let mut result = SweepResult::default();
    for (index, (p, outcome)) in grid.iter().zip(outcomes).enumerate() {
        match outcome {
            Ok(rows) => result.rows.extend(rows),
            Err(error) => result.failures.push(PointFailure::new(
                index,
                format!("eta={}, delta={}", p.eta, p.detuning()),
                error,
            )),
        }
    }
    result.sort();
    Ok(result)
}
