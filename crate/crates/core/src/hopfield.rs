//! Two-mode Hopfield model: Bogoliubov normal modes, gauge mapping of the
//! Hopfield coefficients and polariton dephasing rates.
//!
//! Mode operators are ordered `y = (a, b)` with `a` the cavity and `b` the matter
//! field. A decomposition stores coefficients such that
//! `y = sum_mu (U_y^mu P_mu - V_y^mu P_mu^dag)`.
//!
//! The truncated-Fock representation at the end of the module is an
//! independent check on the symplectic route and is not used by the rates.

use faer::{Mat, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    annihilation, converged_drift, default_cutoff, hermitian_eig_sectored, number, position,
    tensor, Operator, CONVERGENCE_CUTOFF_STEP,
};
use crate::sweep::{PointFailure, SweepResult, SweepRow};
use crate::{c64, Gauge, GaugeMode};

/// Relative frequency separation below which the two branches are treated as degenerate.
const DEGENERACY_TOLERANCE: f64 = 1e-12;

/// Smallest Fock cutoff per mode used by the truncated representation.
pub const MIN_ORACLE_CUTOFF: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfieldParams {
    pub omega_c: f64,
    pub omega_x: f64,
    pub lambda: f64,
    /// Per-mode Fock cutoff of the truncated representation; `None` selects
    /// `max(40, default_cutoff(lambda))`.
    pub cutoff: Option<usize>,
}

impl HopfieldParams {
    pub fn new(omega_c: f64, omega_x: f64, lambda: f64) -> Result<Self> {
        let p = HopfieldParams {
            omega_c,
            omega_x,
            lambda,
            cutoff: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// `omega_c = 1`, `omega_x = 1 + detuning`.
    pub fn resonant_with_detuning(detuning: f64, lambda: f64) -> Result<Self> {
        HopfieldParams::new(1.0, 1.0 + detuning, lambda)
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Result<Self> {
        self.cutoff = Some(cutoff);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("omega_c", self.omega_c), ("omega_x", self.omega_x)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and positive",
                });
            }
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: self.lambda,
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

    /// `delta = omega_x - omega_c`.
    pub fn detuning(&self) -> f64 {
        self.omega_x - self.omega_c
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
            .unwrap_or_else(|| default_cutoff(self.lambda).max(MIN_ORACLE_CUTOFF))
    }
}

/// `H = sum_kl A_kl y_k^dag y_l + (1/2) sum_kl (B_kl y_k^dag y_l^dag + h.c.)`,
/// constants dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticForm {
    pub a: [[c64; 2]; 2],
    pub b: [[c64; 2]; 2],
}

impl QuadraticForm {
    /// The Hamiltonian of either gauge in quadratic form.
    pub fn hopfield(p: &HopfieldParams, gauge: Gauge) -> Self {
        let zero = c64::new(0.0, 0.0);
        let re = |x: f64| c64::new(x, 0.0);
        let im = |x: f64| c64::new(0.0, x);
        let (wc, wx, l) = (p.omega_c, p.omega_x, p.lambda);
        match gauge {
            Gauge::Dipole => {
                let g = l * wc;
                let s = 2.0 * wc * l * l;
                QuadraticForm {
                    a: [[re(wc), im(g)], [im(-g), re(wx + s)]],
                    b: [[zero, im(g)], [im(g), re(s)]],
                }
            }
            Gauge::Coulomb => {
                let g = wx * l;
                let d2 = 2.0 * wx * l * l;
                QuadraticForm {
                    a: [[re(wc + d2), im(g)], [im(-g), re(wx)]],
                    b: [[re(d2), im(-g)], [im(-g), zero]],
                }
            }
        }
    }

    /// `h = [[A, B], [B*, A*]]`, so that `H = (1/2) alpha^dag h alpha` with
    /// `alpha = (a, b, a^dag, b^dag)`.
    pub fn bogoliubov_matrix(&self) -> Mat<c64> {
        Mat::from_fn(4, 4, |i, j| match (i < 2, j < 2) {
            (true, true) => self.a[i][j],
            (true, false) => self.b[i][j - 2],
            (false, true) => self.b[i - 2][j].conj(),
            (false, false) => self.a[i - 2][j - 2].conj(),
        })
    }
}

/// Expansion coefficients of the bare mode operators over one polariton.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfieldCoefficients {
    pub u_a: c64,
    pub v_a: c64,
    pub u_b: c64,
    pub v_b: c64,
}

impl HopfieldCoefficients {
    /// `|U_a|^2 + |U_b|^2 - |V_a|^2 - |V_b|^2`, equal to 1 for a bosonic polariton.
    pub fn normalization(&self) -> f64 {
        self.u_a.norm_sqr() + self.u_b.norm_sqr() - self.v_a.norm_sqr() - self.v_b.norm_sqr()
    }

    /// `|U_a|^2 + |V_a|^2`.
    pub fn photon_weight(&self) -> f64 {
        self.u_a.norm_sqr() + self.v_a.norm_sqr()
    }

    /// `|U_b|^2 + |V_b|^2`.
    pub fn matter_weight(&self) -> f64 {
        self.u_b.norm_sqr() + self.v_b.norm_sqr()
    }

    pub fn as_array(&self) -> [c64; 4] {
        [self.u_a, self.v_a, self.u_b, self.v_b]
    }

    /// Redefines `P -> e^{i phi} P` so that the largest-magnitude coefficient
    /// (first in the order `U_a, V_a, U_b, V_b` among ties) is real positive.
    /// `U` coefficients pick up `e^{-i phi}` and `V` coefficients `e^{+i phi}`.
    pub fn phase_fixed(self) -> Self {
        let all = self.as_array();
        let max = all.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return self;
        }
        let pivot = all
            .iter()
            .position(|z| z.norm() >= max * (1.0 - 1e-10))
            .expect("non-empty");
        let arg = all[pivot].arg();
        let phi = if pivot % 2 == 0 { arg } else { -arg };
        self.rephased(phi)
    }

    /// Coefficients after `P -> e^{i phi} P`.
    pub fn rephased(self, phi: f64) -> Self {
        let u = c64::new(0.0, -phi).exp();
        let v = c64::new(0.0, phi).exp();
        HopfieldCoefficients {
            u_a: self.u_a * u,
            v_a: self.v_a * v,
            u_b: self.u_b * u,
            v_b: self.v_b * v,
        }
    }

    /// Largest coefficient-wise modulus of the difference.
    pub fn max_abs_diff(&self, other: &HopfieldCoefficients) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }
}

/// Normal modes of the Hopfield model in one gauge. Branch `mu = 1` (index 0)
/// is the lower polariton.
#[derive(Debug, Clone, PartialEq)]
pub struct PolaritonDecomposition {
    pub params: HopfieldParams,
    pub gauge: Gauge,
    pub frequencies: [f64; 2],
    pub coefficients: [HopfieldCoefficients; 2],
}

/// Normal-mode frequencies and coefficients of a stable quadratic form.
///
/// `coupling` only labels a possible [`Error::Unstable`].
pub fn diagonalize_quadratic(
    form: &QuadraticForm,
    coupling: f64,
) -> Result<([f64; 2], [HopfieldCoefficients; 2])> {
    let h = form.bogoliubov_matrix();
    let metric = [1.0, 1.0, -1.0, -1.0];
    let k = match h.llt(Side::Lower) {
        Ok(llt) => llt.L().to_owned(),
        Err(_) => {
            return Err(Error::Unstable {
                lambda: coupling,
                omega_sq: lowest_squared_frequency(&h),
            })
        }
    };
    // W = K^dag eta K has eigenvalues -W2, -W1, W1, W2.
    let eta_k = Mat::from_fn(4, 4, |i, j| k[(i, j)] * metric[i]);
    let w = k.adjoint() * &eta_k;
    let w = Mat::from_fn(4, 4, |i, j| (w[(i, j)] + w[(j, i)].conj()) * 0.5);
    let evd = w
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let y = evd.U();

    let mut frequencies = [0.0; 2];
    let mut modes = [[c64::new(0.0, 0.0); 4]; 2];
    for (mu, col) in [2usize, 3].into_iter().enumerate() {
        let omega = s[col].re;
        if !(omega > 0.0) {
            return Err(Error::Unstable {
                lambda: coupling,
                omega_sq: omega * omega.abs(),
            });
        }
        frequencies[mu] = omega;
        let scale = 1.0 / omega.sqrt();
        for i in 0..4 {
            let mut acc = c64::new(0.0, 0.0);
            for j in 0..4 {
                acc += k[(i, j)] * y[(j, col)];
            }
            modes[mu][i] = acc * scale;
        }
    }

    if (frequencies[1] - frequencies[0]).abs() < DEGENERACY_TOLERANCE * frequencies[1].max(1.0) {
        modes = split_by_matter_weight(modes);
    }

    // x = K y / sqrt(Omega) holds the conjugated coefficients of P in alpha.
    let coefficients = modes.map(|x| {
        HopfieldCoefficients {
            u_a: x[0],
            u_b: x[1],
            v_a: x[2].conj(),
            v_b: x[3].conj(),
        }
        .phase_fixed()
    });
    Ok((frequencies, coefficients))
}

/// Rotates two degenerate modes so that the first carries the most matter weight.
fn split_by_matter_weight(modes: [[c64; 4]; 2]) -> [[c64; 4]; 2] {
    let g = Mat::from_fn(2, 2, |i, j| {
        modes[i][1].conj() * modes[j][1] + modes[i][3].conj() * modes[j][3]
    });
    let Ok(evd) = g.self_adjoint_eigen(Side::Lower) else {
        return modes;
    };
    let v = evd.U();
    // Descending weight: column 1 first.
    let mix = |col: usize| -> [c64; 4] {
        std::array::from_fn(|i| modes[0][i] * v[(0, col)] + modes[1][i] * v[(1, col)])
    };
    [mix(1), mix(0)]
}

/// Smallest root of the characteristic polynomial in `Omega^2` of `eta h`,
/// from `tr (eta h)^2 = 2 (W1^2 + W2^2)` and `tr (eta h)^4 = 2 (W1^4 + W2^4)`.
/// Complex roots report their real part.
fn lowest_squared_frequency(h: &Mat<c64>) -> f64 {
    let metric = [1.0, 1.0, -1.0, -1.0];
    let m = Mat::from_fn(4, 4, |i, j| h[(i, j)] * metric[i]);
    let m2 = &m * &m;
    let m4 = &m2 * &m2;
    let trace = |x: &Mat<c64>| (0..4).map(|i| x[(i, i)].re).sum::<f64>();
    let sum = trace(&m2) / 2.0;
    let product = (sum * sum - trace(&m4) / 2.0) / 2.0;
    let disc = sum * sum - 4.0 * product;
    if disc >= 0.0 {
        (sum - disc.sqrt()) / 2.0
    } else {
        sum / 2.0
    }
}

/// Bogoliubov decomposition of the Hopfield Hamiltonian in `gauge`.
pub fn symplectic_diagonalize(p: &HopfieldParams, gauge: Gauge) -> Result<PolaritonDecomposition> {
    p.validate()?;
    let (frequencies, coefficients) =
        diagonalize_quadratic(&QuadraticForm::hopfield(p, gauge), p.lambda)?;
    Ok(PolaritonDecomposition {
        params: *p,
        gauge,
        frequencies,
        coefficients,
    })
}

/// Re-expresses a decomposition in the other gauge.
///
/// With `T = exp[-i lambda (a + a^dag)(b + b^dag)]`, the polaritons of the two
/// gauges satisfy `P = T^dag P' T`, so the coefficients of `T^dag y T` over the
/// current polaritons are the other gauge's coefficients of `y`. Starting from
/// the Coulomb gauge this uses `T^dag b T = b - i lambda (a + a^dag)` and
/// `T^dag a T = a - i lambda (b + b^dag)`; the dipole-to-Coulomb direction flips
/// the sign of `lambda`. The result is phase-fixed like a direct decomposition.
pub fn gauge_map_coefficients(dec: &PolaritonDecomposition) -> PolaritonDecomposition {
    let sign = match dec.gauge {
        Gauge::Coulomb => -1.0,
        Gauge::Dipole => 1.0,
    };
    let shift = c64::new(0.0, sign * dec.params.lambda);
    let coefficients = dec.coefficients.map(|c| {
        HopfieldCoefficients {
            u_a: c.u_a + shift * (c.u_b - c.v_b.conj()),
            v_a: c.v_a - shift * (c.u_b.conj() - c.v_b),
            u_b: c.u_b + shift * (c.u_a - c.v_a.conj()),
            v_b: c.v_b - shift * (c.u_a.conj() - c.v_a),
        }
        .phase_fixed()
    });
    PolaritonDecomposition {
        params: dec.params,
        gauge: dec.gauge.other(),
        frequencies: dec.frequencies,
        coefficients,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolaritonRates {
    /// `gamma^mu` for the lower and upper polariton.
    pub rates: [f64; 2],
    pub gamma0_c: f64,
    pub gamma0_x: f64,
    pub mode: GaugeMode,
    pub gauge: Gauge,
}

/// Coherence decay rates `gamma^mu` of the two polaritons.
///
/// A noise `f_y(t) O_y` with `O_y` the physical number operator of mode `y`
/// dephases polariton `mu` at `gamma0_y w_y^2`, where `gamma0_y` is the rate of
/// the bare mode (the zero-frequency noise density) and `w_y = |U_y|^2 + |V_y|^2`
/// is the weight of the physical operator on that polariton. In correct mode the
/// photon weight comes from the Coulomb-gauge coefficients and the matter weight
/// from the dipole-gauge ones; naive modes take both from their own gauge.
pub fn polariton_dephasing_rates(
    p: &HopfieldParams,
    gamma0_c: f64,
    gamma0_x: f64,
    mode: GaugeMode,
) -> Result<PolaritonRates> {
    polariton_dephasing_rates_in(p, gamma0_c, gamma0_x, mode, mode.natural_gauge())
}

/// As [`polariton_dephasing_rates`], starting from the decomposition in `gauge`.
pub fn polariton_dephasing_rates_in(
    p: &HopfieldParams,
    gamma0_c: f64,
    gamma0_x: f64,
    mode: GaugeMode,
    gauge: Gauge,
) -> Result<PolaritonRates> {
    for (name, value) in [("gamma0_c", gamma0_c), ("gamma0_x", gamma0_x)] {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::InvalidParameter {
                name,
                value,
                reason: "must be finite and non-negative",
            });
        }
    }
    if mode != GaugeMode::Correct && mode.natural_gauge() != gauge {
        return Err(Error::InconsistentGauge {
            mode: mode.to_string(),
            gauge: gauge.to_string(),
        });
    }
    let own = symplectic_diagonalize(p, gauge)?;
    let (photon, matter) = match (mode, gauge) {
        (GaugeMode::Correct, Gauge::Coulomb) => (own.clone(), gauge_map_coefficients(&own)),
        (GaugeMode::Correct, Gauge::Dipole) => (gauge_map_coefficients(&own), own.clone()),
        _ => (own.clone(), own.clone()),
    };
    let rates = std::array::from_fn(|mu| {
        gamma0_c * photon.coefficients[mu].photon_weight().powi(2)
            + gamma0_x * matter.coefficients[mu].matter_weight().powi(2)
    });
    Ok(PolaritonRates {
        rates,
        gamma0_c,
        gamma0_x,
        mode,
        gauge,
    })
}

/// Bare dephasing rates and the modes to evaluate in a dispersion sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RateConfig {
    pub gamma0_c: f64,
    pub gamma0_x: f64,
    pub modes: Vec<GaugeMode>,
}

fn dispersion_rows(p: &HopfieldParams, config: &RateConfig) -> Result<Vec<SweepRow>> {
    let dec = symplectic_diagonalize(p, Gauge::Coulomb)?;
    let row = |mu: usize, quantity: &str, value: f64, mode: &str, gauge: &str| SweepRow {
        coupling: p.lambda,
        detuning: p.detuning(),
        label: (mu + 1).to_string(),
        quantity: quantity.into(),
        value,
        mode: mode.into(),
        gauge: gauge.into(),
        cutoff: None,
    };
    let mut rows = Vec::new();
    for mu in 0..2 {
        rows.push(row(
            mu,
            "omega_over_omegac",
            dec.frequencies[mu] / p.omega_c,
            "invariant",
            "invariant",
        ));
    }
    for &mode in &config.modes {
        let rates = polariton_dephasing_rates(p, config.gamma0_c, config.gamma0_x, mode)?;
        for mu in 0..2 {
            rows.push(row(
                mu,
                "rate",
                rates.rates[mu],
                mode.as_str(),
                rates.gauge.as_str(),
            ));
        }
    }
    Ok(rows)
}

/// Polariton frequencies and rates over a grid of parameters. Points run in
/// parallel; failures are collected with their coordinates.
pub fn dispersion_sweep(grid: &[HopfieldParams], config: &RateConfig) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "grid",
            value: 0.0,
            reason: "sweep grid is empty",
        });
    }
    let outcomes: Vec<Result<Vec<SweepRow>>> = grid
        .par_iter()
        .map(|p| dispersion_rows(p, config))
        .collect();
    let mut result = SweepResult::default();
    for (index, (p, outcome)) in grid.iter().zip(outcomes).enumerate() {
        match outcome {
            Ok(rows) => result.rows.extend(rows),
            Err(error) => result.failures.push(PointFailure::new(
                index,
                format!("lambda={}, delta={}", p.lambda, p.detuning()),
                error,
            )),
        }
    }
    result.sort();
    Ok(result)
}

/// Bare operators on the truncated space matter ⊗ field, `cutoff` levels each.
#[derive(Debug, Clone)]
pub struct FockModes {
    pub a: Operator,
    pub b: Operator,
    pub cutoff: usize,
}

impl FockModes {
    pub fn new(cutoff: usize) -> Result<Self> {
        let a = annihilation(cutoff)?;
        let id = Operator::identity(a.space());
        Ok(FockModes {
            b: tensor(&a, &id),
            a: tensor(&id, &a),
            cutoff,
        })
    }
}

/// Truncated two-mode Hamiltonian on matter ⊗ field, per-mode cutoff `p.cutoff()`.
pub fn build_hopfield_hamiltonian(p: &HopfieldParams, gauge: Gauge) -> Result<Operator> {
    p.validate()?;
    let n = p.cutoff();
    let id = Operator::identity(&crate::SpaceDescriptor::boson(n)?);
    let h0 = &(p.omega_c * &tensor(&id, &number(n)?)) + &(p.omega_x * &tensor(&number(n)?, &id));
    let x = position(n)?;
    let a = annihilation(n)?;
    let h = match gauge {
        Gauge::Dipole => {
            // i lambda omega_c (a^dag - a)(b + b^dag) + omega_c lambda^2 (b + b^dag)^2
            let p_field = &a.adjoint() - &a;
            let coupling = tensor(&x, &p_field);
            let xb = tensor(&x, &id);
            let dia = &xb * &xb;
            &(&h0 + &(c64::new(0.0, p.lambda * p.omega_c) * &coupling))
                + &((p.omega_c * p.lambda * p.lambda) * &dia)
        }
        Gauge::Coulomb => {
            // -i omega_x lambda (b^dag - b)(a + a^dag) + D (a + a^dag)^2
            let p_matter = &a.adjoint() - &a;
            let coupling = tensor(&p_matter, &x);
            let xa = tensor(&id, &x);
            let dia = &xa * &xa;
            &(&h0 + &(c64::new(0.0, -p.omega_x * p.lambda) * &coupling))
                + &((p.omega_x * p.lambda * p.lambda) * &dia)
        }
    };
    Ok(h.symmetrized())
}

/// Parity of the total excitation number of each basis state.
pub fn excitation_parity_sectors(cutoff: usize) -> Vec<u32> {
    (0..cutoff * cutoff)
        .map(|i| ((i / cutoff + i % cutoff) % 2) as u32)
        .collect()
}

/// Truncated `T = exp[-i lambda (a + a^dag)(b + b^dag)]` on matter ⊗ field.
pub fn hopfield_gauge_unitary(p: &HopfieldParams) -> Result<Operator> {
    p.validate()?;
    let n = p.cutoff();
    let x = position(n)?;
    let eig = crate::fock::hermitian_eig(&x)?;
    let values = eig.values();
    let v = eig.vectors();
    let vv = v.kron(v);
    let phases: Vec<c64> = (0..n * n)
        .map(|k| c64::new(0.0, -p.lambda * values[k / n] * values[k % n]).exp())
        .collect();
    let scaled = Mat::from_fn(n * n, n * n, |i, j| vv[(i, j)] * phases[j]);
    let space = crate::SpaceDescriptor::boson(n)?.tensor(&crate::SpaceDescriptor::boson(n)?);
    Operator::from_matrix(space, &scaled * vv.adjoint())
}

/// `P_mu = U_a^* a + U_b^* b + V_a a^dag + V_b b^dag`, the inverse of the expansion
/// `y = sum (U_y P - V_y P^dag)`.
pub fn polariton_operator(c: &HopfieldCoefficients, modes: &FockModes) -> Operator {
    let terms = [
        c.u_a.conj() * &modes.a,
        c.u_b.conj() * &modes.b,
        c.v_a * &modes.a.adjoint(),
        c.v_b * &modes.b.adjoint(),
    ];
    terms[1..].iter().fold(terms[0].clone(), |acc, t| &acc + t)
}

/// Largest `|| (P_mu - e^{i theta} T^dag P'_mu T) |psi_k> ||` over the lowest
/// `states` eigenstates of the truncated Coulomb-gauge Hamiltonian, where `P` and
/// `P'` are the polariton operators built from the Coulomb- and dipole-gauge
/// coefficients. The global phase `theta` left free by the coefficient phase
/// convention is fitted by least squares.
pub fn polariton_gauge_residual(p: &HopfieldParams, states: usize) -> Result<f64> {
    let n = p.cutoff();
    let modes = FockModes::new(n)?;
    let spectrum = hermitian_eig_sectored(
        &build_hopfield_hamiltonian(p, Gauge::Coulomb)?,
        &excitation_parity_sectors(n),
    )?;
    if states > spectrum.len() {
        return Err(Error::TooManyLevels {
            requested: states,
            available: spectrum.len(),
        });
    }
    let t = hopfield_gauge_unitary(p)?;
    let coulomb = symplectic_diagonalize(p, Gauge::Coulomb)?;
    let dipole = symplectic_diagonalize(p, Gauge::Dipole)?;
    let mut worst = 0.0f64;
    for mu in 0..2 {
        let pc = polariton_operator(&coulomb.coefficients[mu], &modes);
        let mapped = polariton_operator(&dipole.coefficients[mu], &modes).conjugated_by_adjoint(&t);
        let pairs: Vec<(Vec<c64>, Vec<c64>)> = (0..states)
            .map(|k| {
                let psi = spectrum.vector(k);
                (pc.apply(psi), mapped.apply(psi))
            })
            .collect();
        let overlap: c64 = pairs
            .iter()
            .flat_map(|(x, y)| x.iter().zip(y).map(|(a, b)| b.conj() * a))
            .sum();
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            c64::new(1.0, 0.0)
        };
        for (x, y) in &pairs {
            let r: f64 = x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - phase * b).norm_sqr())
                .sum();
            worst = worst.max(r.sqrt());
        }
    }
    Ok(worst)
}

/// Normal modes read off the truncated Hamiltonian: gaps `E(1_mu) - E(G)` and
/// coefficients `U_y = <G|y|1_mu>`, `V_y = -<1_mu|y|G>`, phase-fixed.
#[derive(Debug, Clone)]
pub struct FockPolaritons {
    pub gaps: [f64; 2],
    pub coefficients: [HopfieldCoefficients; 2],
    pub ground_energy: f64,
    pub convergence_drift: f64,
}

/// Indices of the ground state and the two one-polariton states in a truncated
/// Hopfield spectrum.
///
/// The ground state is the lowest even-parity level. One-polariton states are
/// the odd levels reached from it by a single bare operator; multi-polariton
/// odd levels such as `|3_1>` have vanishing weight `sum_y |<k|y|G>|^2 +
/// |<k|y^dag|G>|^2` and are skipped even when they lie below `|1_2>`.
pub fn polariton_levels(spectrum: &crate::Spectrum, modes: &FockModes) -> Result<[usize; 3]> {
    let sectors = excitation_parity_sectors(modes.cutoff);
    let parity = |k: usize| {
        let v = spectrum.vector(k);
        let top = (0..v.len())
            .max_by(|&i, &j| v[i].norm().total_cmp(&v[j].norm()))
            .expect("non-empty");
        sectors[top]
    };
    let missing = || Error::TooManyLevels {
        requested: 3,
        available: spectrum.len(),
    };
    let g = (0..spectrum.len())
        .find(|&k| parity(k) == 0)
        .ok_or_else(missing)?;
    let ground = spectrum.vector(g);
    let excited: Vec<Vec<c64>> = [&modes.a, &modes.b]
        .iter()
        .flat_map(|y| [y.apply(ground), y.adjoint().apply(ground)])
        .collect();
    let weight = |k: usize| -> f64 {
        let v = spectrum.vector(k);
        excited
            .iter()
            .map(|e| {
                v.iter()
                    .zip(e)
                    .map(|(a, b)| a.conj() * b)
                    .sum::<c64>()
                    .norm_sqr()
            })
            .sum()
    };
    let mut single: Vec<(usize, f64)> = (0..spectrum.len())
        .filter(|&k| parity(k) == 1)
        .map(|k| (k, weight(k)))
        .collect();
    single.sort_by(|a, b| b.1.total_cmp(&a.1));
    if single.len() < 2 {
        return Err(missing());
    }
    let (p1, p2) = (single[0].0.min(single[1].0), single[0].0.max(single[1].0));
    Ok([g, p1, p2])
}

pub fn fock_polaritons(p: &HopfieldParams, gauge: Gauge) -> Result<FockPolaritons> {
    let n = p.cutoff();
    let sectors = excitation_parity_sectors(n);
    let modes = FockModes::new(n)?;
    let spectrum = hermitian_eig_sectored(&build_hopfield_hamiltonian(p, gauge)?, &sectors)?;
    let [g, p1, p2] = polariton_levels(&spectrum, &modes)?;

    let fine_params = HopfieldParams {
        cutoff: Some(n + CONVERGENCE_CUTOFF_STEP),
        ..*p
    };
    let fine_modes = FockModes::new(n + CONVERGENCE_CUTOFF_STEP)?;
    let fine = hermitian_eig_sectored(
        &build_hopfield_hamiltonian(&fine_params, gauge)?,
        &excitation_parity_sectors(n + CONVERGENCE_CUTOFF_STEP),
    )?;
    let fine_levels = polariton_levels(&fine, &fine_modes)?;
    let pick = |s: &crate::Spectrum, idx: [usize; 3]| idx.map(|k| s.values()[k]);
    let convergence_drift =
        converged_drift(n, &pick(&spectrum, [g, p1, p2]), &pick(&fine, fine_levels))?;

    let ground = spectrum.vector(g);
    let coefficient = |k: usize| {
        let state = spectrum.vector(k);
        HopfieldCoefficients {
            u_a: modes.a.matrix_element(ground, state),
            v_a: -modes.a.matrix_element(state, ground),
            u_b: modes.b.matrix_element(ground, state),
            v_b: -modes.b.matrix_element(state, ground),
        }
        .phase_fixed()
    };
    let e = spectrum.values();
    Ok(FockPolaritons {
        gaps: [e[p1] - e[g], e[p2] - e[g]],
        coefficients: [coefficient(p1), coefficient(p2)],
        ground_energy: e[g],
        convergence_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quadratic_forms_are_hermitian() {
        for gauge in [Gauge::Coulomb, Gauge::Dipole] {
            let p = HopfieldParams::new(1.0, 0.8, 0.7).unwrap();
            let h = QuadraticForm::hopfield(&p, gauge).bogoliubov_matrix();
            for i in 0..4 {
                for j in 0..4 {
                    assert!((h[(i, j)] - h[(j, i)].conj()).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn unstable_form_reports_negative_frequency() {
        let re = |x: f64| c64::new(x, 0.0);
        let zero = re(0.0);
        let form = QuadraticForm {
            a: [[re(1.0), zero], [zero, re(1.0)]],
            b: [[re(2.0), zero], [zero, zero]],
        };
        match diagonalize_quadratic(&form, 0.5) {
            Err(Error::Unstable { lambda, omega_sq }) => {
                assert_eq!(lambda, 0.5);
                assert_abs_diff_eq!(omega_sq, -3.0, epsilon = 1e-12);
            }
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn phase_fixing_keeps_moduli_and_normalization() {
        let c = HopfieldCoefficients {
            u_a: c64::new(0.3, 0.4),
            v_a: c64::new(0.0, 0.1),
            u_b: c64::new(-0.9, 0.2),
            v_b: c64::new(0.05, -0.02),
        };
        let f = c.phase_fixed();
        assert_abs_diff_eq!(f.u_b.im, 0.0, epsilon = 1e-15);
        assert!(f.u_b.re > 0.0);
        assert_abs_diff_eq!(f.normalization(), c.normalization(), epsilon = 1e-14);
        assert_abs_diff_eq!(f.matter_weight(), c.matter_weight(), epsilon = 1e-14);
    }

    #[test]
    fn degenerate_resonance_puts_matter_first() {
        let p = HopfieldParams::new(1.0, 1.0, 0.0).unwrap();
        let dec = symplectic_diagonalize(&p, Gauge::Coulomb).unwrap();
        assert_abs_diff_eq!(dec.coefficients[0].u_b.re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dec.coefficients[1].u_a.re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn naive_mode_in_wrong_gauge_is_rejected() {
        let p = HopfieldParams::new(1.0, 1.0, 0.2).unwrap();
        let r = polariton_dephasing_rates_in(&p, 0.0, 1.0, GaugeMode::NaiveCoulomb, Gauge::Dipole);
        assert!(matches!(r, Err(Error::InconsistentGauge { .. })));
    }

    #[test]
    fn parity_sectors_follow_total_excitations() {
        assert_eq!(excitation_parity_sectors(2), vec![0, 1, 1, 0]);
    }
}
