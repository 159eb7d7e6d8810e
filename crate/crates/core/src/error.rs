use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid Fock cutoff {cutoff}: at least 2 levels are required")]
    InvalidCutoff { cutoff: usize },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("operator is not Hermitian (max |A - A^dag| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "truncation not converged at cutoff {cutoff}: relative eigenvalue drift {drift:e} \
         against cutoff {cutoff}+{}",
        crate::fock::CONVERGENCE_CUTOFF_STEP
    )]
    NotConverged { cutoff: usize, drift: f64 },

    #[error(
        "degenerate state tracking at coupling {coupling}: step {step:e} cannot resolve overlaps"
    )]
    DegenerateTracking { coupling: f64, step: f64 },

    #[error("unresolved state label `{0}`")]
    UnresolvedLabel(String),

    #[error("gauge mode `{mode}` cannot be evaluated in the {gauge} gauge")]
    InconsistentGauge { mode: String, gauge: String },

    #[error("unstable quadratic Hamiltonian at lambda = {lambda}: Omega^2 = {omega_sq:e}")]
    Unstable { lambda: f64, omega_sq: f64 },

    #[error("requested {requested} levels but only {available} are available")]
    TooManyLevels { requested: usize, available: usize },

    #[error("trace drifted by {drift:e} at t = {time}; reduce the step size")]
    TraceDrift { drift: f64, time: f64 },

    #[error("state norm drifted by {drift:e} in trajectory {trajectory}")]
    NormDrift { drift: f64, trajectory: usize },

    #[error("decay is not exponential: fit residual {residual:e} exceeds {tolerance:e}")]
    FitQuality { residual: f64, tolerance: f64 },

    #[error("initial coherence |rho_jk(0)| = {magnitude:e} is too small to fit")]
    WeakCoherence { magnitude: f64 },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("sweep point {index} ({coordinates}) failed: {source}")]
    SweepPoint {
        index: usize,
        coordinates: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for errors caused by an insufficient Fock truncation.
    pub fn is_convergence(&self) -> bool {
        match self {
            Error::NotConverged { .. } => true,
            Error::SweepPoint { source, .. } => source.is_convergence(),
            _ => false,
        }
    }
}
