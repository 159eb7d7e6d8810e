//! Monte Carlo unravelling of the dephasing noise.
//!
//! Each trajectory evolves a pure state under `H + f(t) O` with a sampled noise
//! `f`, using the symmetric splitting
//! `exp(-i H dt / 2) exp(-i dW O) exp(-i H dt / 2)` where `dW` is the
//! trapezoidal integral of `f` over the step. The ensemble average of
//! `|psi><psi|` then approaches the master-equation solution.

use faer::Mat;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{extract_decay_rate_with, DecayFit, FitOptions, Trajectory};
use crate::error::{Error, Result};
use crate::fock::{hermitian_eig, Operator, Spectrum};
use crate::noise::{NoiseKind, NoiseRealization};
use crate::{c64, SpaceDescriptor};

/// Largest norm drift tolerated in a single trajectory.
pub const MAX_NORM_DRIFT: f64 = 1e-6;

/// Trajectories are summed in this many fixed groups so that the result does not
/// depend on how many threads run them.
const BLOCKS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochasticOptions {
    pub noise: NoiseKind,
    /// Dressed levels kept in the simulation.
    pub n_levels: usize,
    /// Average is recorded every this many steps.
    pub record_every: usize,
}

impl Default for StochasticOptions {
    fn default() -> Self {
        StochasticOptions {
            noise: NoiseKind::OrnsteinUhlenbeck { tau: 50.0 },
            n_levels: super::DEFAULT_LEVELS,
            record_every: 1,
        }
    }
}

/// Seed of trajectory `index`, derived from the master seed.
fn trajectory_seed(seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng.next_u64()
}

/// Ensemble average of a stochastic run, with the partial averages of the fixed
/// trajectory blocks kept for error estimates.
#[derive(Debug, Clone)]
pub struct StochasticEnsemble {
    pub average: Trajectory,
    pub blocks: Vec<Trajectory>,
}

impl StochasticEnsemble {
    /// Decay rate of the averaged coherence and its jackknife standard error
    /// over the trajectory blocks.
    pub fn decay_rate(
        &self,
        pair: (usize, usize),
        options: &FitOptions,
    ) -> Result<(DecayFit, f64)> {
        let fit = extract_decay_rate_with(&self.average, pair, options)?;
        let m = self.blocks.len();
        if m < 2 {
            return Ok((fit, f64::NAN));
        }
        let loose = FitOptions {
            tolerance: f64::INFINITY,
            ..*options
        };
        let mut estimates = Vec::with_capacity(m);
        for leave in 0..m {
            let n = self.average.states[0].nrows();
            let states = (0..self.average.len())
                .map(|t| {
                    let mut acc = Mat::<c64>::zeros(n, n);
                    for (b, block) in self.blocks.iter().enumerate() {
                        if b != leave {
                            acc = &acc + &block.states[t];
                        }
                    }
                    Mat::from_fn(n, n, |i, j| acc[(i, j)] / (m - 1) as f64)
                })
                .collect();
            let partial = Trajectory {
                times: self.average.times.clone(),
                states,
            };
            estimates.push(extract_decay_rate_with(&partial, pair, &loose)?.rate);
        }
        let mean = estimates.iter().sum::<f64>() / m as f64;
        let var =
            estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() * (m - 1) as f64 / m as f64;
        Ok((fit, var.sqrt()))
    }
}

/// Diagonalises `h` and runs [`stochastic_oracle_in_basis`] on its lowest levels.
#[allow(clippy::too_many_arguments)]
pub fn stochastic_oracle(
    h: &Operator,
    channel_op: &Operator,
    s0: f64,
    n_traj: usize,
    t_final: f64,
    dt: f64,
    seed: u64,
    psi0: &[c64],
    options: &StochasticOptions,
) -> Result<StochasticEnsemble> {
    let spectrum = hermitian_eig(h)?;
    stochastic_oracle_in_basis(
        &spectrum, channel_op, s0, n_traj, t_final, dt, seed, psi0, options,
    )
}

/// Ensemble-averaged density matrix of `n_traj` noisy trajectories, in the basis
/// of the lowest `options.n_levels` eigenstates of `spectrum`.
///
/// `psi0` gives the initial amplitudes on those eigenstates. The noise has
/// zero-frequency density `s0`, so a coherence `rho_jk` decays at the full-width
/// rate `s0 |O_jj - O_kk|^2`. Identical arguments give bit-identical results
/// for any number of worker threads. Blocks are equally weighted in the
/// jackknife, so `n_traj` should be a multiple of 32.
#[allow(clippy::too_many_arguments)]
pub fn stochastic_oracle_in_basis(
    spectrum: &Spectrum,
    channel_op: &Operator,
    s0: f64,
    n_traj: usize,
    t_final: f64,
    dt: f64,
    seed: u64,
    psi0: &[c64],
    options: &StochasticOptions,
) -> Result<StochasticEnsemble> {
    let n = options.n_levels;
    if n < 2 || n > spectrum.len() {
        return Err(Error::TooManyLevels {
            requested: n,
            available: spectrum.len(),
        });
    }
    if psi0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: psi0.len(),
        });
    }
    if n_traj < 100 {
        return Err(Error::InvalidParameter {
            name: "n_traj",
            value: n_traj as f64,
            reason: "at least 100 trajectories are required",
        });
    }
    if options.record_every == 0 {
        return Err(Error::InvalidParameter {
            name: "record_every",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    let (steps, dt) = super::step_count(t_final, dt)?;
    let norm: f64 = psi0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let psi0: Vec<c64> = psi0.iter().map(|z| z / norm).collect();

    let basis = spectrum.lowest_vectors(n)?;
    let projected = channel_op.project(basis.as_ref());
    let o = Operator::from_fn(SpaceDescriptor::boson(n)?, |i, j| projected[(i, j)]);
    let o_eig = hermitian_eig(&o.symmetrized())?;
    let o_values: Vec<f64> = o_eig.values().to_vec();
    let w = o_eig.vectors().to_owned();
    let e0 = spectrum.values()[0];
    let half_phase: Vec<c64> = spectrum.values()[..n]
        .iter()
        .map(|e| c64::new(0.0, -(e - e0) * dt / 2.0).exp())
        .collect();

    let records: Vec<usize> = (0..=steps)
        .filter(|s| s % options.record_every == 0)
        .collect();
    let blocks = BLOCKS.min(n_traj);
    let block_sums: Vec<Result<Vec<Mat<c64>>>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * n_traj / blocks;
            let hi = (b + 1) * n_traj / blocks;
            let mut acc = vec![Mat::<c64>::zeros(n, n); records.len()];
            for index in lo..hi {
                let noise = NoiseRealization::generate(
                    options.noise,
                    s0,
                    dt,
                    steps + 1,
                    trajectory_seed(seed, index),
                )?;
                let mut psi = psi0.clone();
                let mut scratch = vec![c64::new(0.0, 0.0); n];
                let mut slot = 0;
                for step in 0..=steps {
                    if step > 0 {
                        advance(
                            &mut psi,
                            &mut scratch,
                            &half_phase,
                            &w,
                            &o_values,
                            noise.increment(step - 1),
                        );
                    }
                    if slot < records.len() && records[slot] == step {
                        accumulate(&mut acc[slot], &psi);
                        slot += 1;
                    }
                }
                let drift = (psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs();
                if drift > MAX_NORM_DRIFT {
                    return Err(Error::NormDrift {
                        drift,
                        trajectory: index,
                    });
                }
            }
            Ok(acc)
        })
        .collect();

    let times: Vec<f64> = records.iter().map(|&s| s as f64 * dt).collect();
    let mut total = vec![Mat::<c64>::zeros(n, n); records.len()];
    let mut blocks_out = Vec::with_capacity(blocks);
    for (b, block) in block_sums.into_iter().enumerate() {
        let block = block?;
        let size = ((b + 1) * n_traj / blocks - b * n_traj / blocks) as f64;
        for (t, m) in total.iter_mut().zip(&block) {
            *t = &*t + m;
        }
        blocks_out.push(Trajectory {
            times: times.clone(),
            states: block.into_iter().map(|m| scaled(m, 1.0 / size)).collect(),
        });
    }
    let scale = 1.0 / n_traj as f64;
    Ok(StochasticEnsemble {
        average: Trajectory {
            times,
            states: total.into_iter().map(|m| scaled(m, scale)).collect(),
        },
        blocks: blocks_out,
    })
}

fn scaled(m: Mat<c64>, factor: f64) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * factor)
}

fn advance(
    psi: &mut [c64],
    scratch: &mut [c64],
    half_phase: &[c64],
    w: &Mat<c64>,
    o_values: &[f64],
    increment: f64,
) {
    let n = psi.len();
    for (z, p) in psi.iter_mut().zip(half_phase) {
        *z *= p;
    }
    // scratch = W^dag psi, scaled by exp(-i dW o), then psi = W scratch.
    for (k, s) in scratch.iter_mut().enumerate() {
        let mut acc = c64::new(0.0, 0.0);
        for i in 0..n {
            acc += w[(i, k)].conj() * psi[i];
        }
        *s = acc * c64::new(0.0, -increment * o_values[k]).exp();
    }
    for (i, z) in psi.iter_mut().enumerate() {
        let mut acc = c64::new(0.0, 0.0);
        for (k, s) in scratch.iter().enumerate() {
            acc += w[(i, k)] * s;
        }
        *z = acc * half_phase[i];
    }
}

fn accumulate(acc: &mut Mat<c64>, psi: &[c64]) {
    let n = psi.len();
    for j in 0..n {
        let cj = psi[j].conj();
        for i in 0..n {
            acc[(i, j)] += psi[i] * cj;
        }
    }
}
