//! Spectral densities of the frequency-modulation noise and sampled realisations.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Frequencies closer than this are treated as equal, both when evaluating a
/// low-frequency density and when merging degenerate transitions.
pub const FREQUENCY_TOLERANCE: f64 = 1e-6;

/// Power spectrum `S_f(omega) >= 0` of a stochastic noise `f(t)`.
///
/// The bare dephasing rate of a two-level system is `gamma0 = 2 S_f(0)`.
#[derive(Clone)]
pub enum SpectralDensity {
    /// `S_f(0) = s0` and zero at every finite frequency.
    LowFrequency {
        s0: f64,
    },
    /// Flat spectrum at every frequency.
    White {
        level: f64,
    },
    /// Piecewise-linear in `|omega|` through the given nodes, zero beyond the last one.
    Tabulated {
        omega: Vec<f64>,
        value: Vec<f64>,
    },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl SpectralDensity {
    /// Default density for a bare rate `gamma0`: `S_f(0) = gamma0 / 2`.
    pub fn from_gamma0(gamma0: f64) -> Result<Self> {
        if !(gamma0 >= 0.0) || !gamma0.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gamma0",
                value: gamma0,
                reason: "must be finite and non-negative",
            });
        }
        Ok(SpectralDensity::LowFrequency { s0: gamma0 / 2.0 })
    }

    pub fn tabulated(omega: Vec<f64>, value: Vec<f64>) -> Result<Self> {
        if omega.is_empty() || omega.len() != value.len() {
            return Err(Error::DimensionMismatch {
                expected: omega.len(),
                found: value.len(),
            });
        }
        if omega.windows(2).any(|w| !(w[1] > w[0])) || omega[0] < 0.0 {
            return Err(Error::InvalidParameter {
                name: "omega",
                value: omega[0],
                reason: "nodes must be non-negative and strictly increasing",
            });
        }
        if let Some(&bad) = value.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::InvalidParameter {
                name: "spectral_density",
                value: bad,
                reason: "values must be non-negative",
            });
        }
        Ok(SpectralDensity::Tabulated { omega, value })
    }

    pub fn at(&self, omega: f64) -> f64 {
        let w = omega.abs();
        let s = match self {
            SpectralDensity::LowFrequency { s0 } => {
                if w < FREQUENCY_TOLERANCE {
                    *s0
                } else {
                    0.0
                }
            }
            SpectralDensity::White { level } => *level,
            SpectralDensity::Tabulated { omega, value } => interpolate(omega, value, w),
            SpectralDensity::Custom(f) => f(omega),
        };
        s.max(0.0)
    }

    pub fn zero_frequency(&self) -> f64 {
        self.at(0.0)
    }

    /// `gamma0 = 2 S_f(0)`.
    pub fn gamma0(&self) -> f64 {
        2.0 * self.zero_frequency()
    }
}

fn interpolate(nodes: &[f64], values: &[f64], w: f64) -> f64 {
    let last = nodes.len() - 1;
    if w < nodes[0] {
        return values[0];
    }
    if w > nodes[last] {
        return 0.0;
    }
    let i = nodes.partition_point(|&x| x <= w);
    if i > last {
        return values[last];
    }
    let (x0, x1) = (nodes[i - 1], nodes[i]);
    let t = (w - x0) / (x1 - x0);
    values[i - 1] * (1.0 - t) + values[i] * t
}

impl fmt::Debug for SpectralDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralDensity::LowFrequency { s0 } => {
                f.debug_struct("LowFrequency").field("s0", s0).finish()
            }
            SpectralDensity::White { level } => {
                f.debug_struct("White").field("level", level).finish()
            }
            SpectralDensity::Tabulated { omega, .. } => f
                .debug_struct("Tabulated")
                .field("nodes", &omega.len())
                .finish(),
            SpectralDensity::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Statistics of a sampled noise process with zero-frequency density `S0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    /// Independent Gaussian samples of variance `S0 / dt`, so that the integrated
    /// noise over one step has variance `S0 dt`.
    White,
    /// Ornstein-Uhlenbeck process with `<f(t) f(0)> = (S0 / 2 tau) exp(-|t| / tau)`.
    /// Its spectrum is flat at `S0` for `omega << 1 / tau` and falls off above,
    /// which keeps the noise from driving transitions between dressed levels.
    OrnsteinUhlenbeck { tau: f64 },
}

/// One sampled noise trajectory `f(t_n)`, `t_n = n dt`.
#[derive(Debug, Clone)]
pub struct NoiseRealization {
    pub seed: u64,
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl NoiseRealization {
    /// Samples `n_samples` values of the process. Identical arguments give
    /// identical samples.
    pub fn generate(
        kind: NoiseKind,
        s0: f64,
        dt: f64,
        n_samples: usize,
        seed: u64,
    ) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: dt,
                reason: "must be positive",
            });
        }
        if !(s0 >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "s0",
                value: s0,
                reason: "must be non-negative",
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
        let samples = match kind {
            NoiseKind::White => {
                let sd = (s0 / dt).sqrt();
                (0..n_samples).map(|_| sd * normal()).collect()
            }
            NoiseKind::OrnsteinUhlenbeck { tau } => {
                if !(tau > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "tau",
                        value: tau,
                        reason: "correlation time must be positive",
                    });
                }
                let sd = (s0 / (2.0 * tau)).sqrt();
                let decay = (-dt / tau).exp();
                let kick = sd * (1.0 - decay * decay).sqrt();
                let mut f = sd * normal();
                let mut out = Vec::with_capacity(n_samples);
                for _ in 0..n_samples {
                    out.push(f);
                    f = decay * f + kick * normal();
                }
                out
            }
        };
        Ok(NoiseRealization { seed, dt, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Trapezoidal increment `int f dt` over step `n -> n + 1`.
    pub fn increment(&self, n: usize) -> f64 {
        0.5 * (self.samples[n] + self.samples[n + 1]) * self.dt
    }
}
