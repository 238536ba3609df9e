use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the numeric routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The generator has more than one stationary state.
    #[error(
        "steady state is not unique: two smallest singular values {smallest:e} and {second:e}"
    )]
    DegenerateSteadyState { smallest: f64, second: f64 },

    #[error("steady-state residual {residual:e} exceeds bound {bound:e}")]
    SteadyStateResidual { residual: f64, bound: f64 },

    #[error("no van der Waals C6 coefficient configured")]
    MissingC6,

    #[error("Lorentzian fit diverged: rms residual {rms:e} vs peak {peak:e}")]
    FitDiverged { rms: f64, peak: f64 },

    #[error("need at least {required} samples, got {found}")]
    InsufficientSamples { found: usize, required: usize },

    #[error("imaginary-time solver did not converge in {max_iters} steps (last energy change {last_delta:e})")]
    NotConverged { max_iters: usize, last_delta: f64 },

    #[error("imaginary-time step is unstable (norm became {norm:e})")]
    UnstableStep { norm: f64 },

    #[error("energy increased by {increase:e} at step {step}")]
    EnergyIncreased { step: usize, increase: f64 },

    #[error("surface has no attractive well; repulsive ground states are not supported")]
    BoxedSpectrumUnsupported,

    #[error("point ({x1:e}, {x2:e}) is not a local extremum of |U|")]
    NotAnExtremum { x1: f64, x2: f64 },

    #[error("fit window holds only {points} grid points per direction")]
    FitWindowTooSmall { points: usize },

    /// Loss is not monotone in Ω₁ over the bracket; `(omega1, loss)` samples attached.
    #[error("calibration bracket failed; loss is not monotone over {} samples", samples.len())]
    BracketFailure { samples: Vec<(f64, f64)> },

    #[error("no tabulated black-body rate at {0} K")]
    UnknownTemperature(f64),

    #[error("manifold parse error at line {line}: {reason}")]
    ParseError { line: usize, reason: String },

    #[error("duplicate pair-state label `{0}`")]
    DuplicateLabel(String),

    #[error("coupling between `{a}` and `{b}` is not symmetric")]
    AsymmetricCoupling { a: String, b: String },

    #[error("norm drift {drift:e} exceeds the tolerated 1e-6")]
    StepTooLarge { drift: f64 },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }

    /// True for failures of a numerical method (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateSteadyState { .. }
                | Error::SteadyStateResidual { .. }
                | Error::FitDiverged { .. }
                | Error::NotConverged { .. }
                | Error::UnstableStep { .. }
                | Error::EnergyIncreased { .. }
                | Error::BracketFailure { .. }
                | Error::StepTooLarge { .. }
                | Error::NotAnExtremum { .. }
                | Error::FitWindowTooSmall { .. }
                | Error::BoxedSpectrumUnsupported
        )
    }
}
