use thiserror::Error;

/// Errors raised by validation and by the pricing engines.
///
/// Every variant has a stable short name (see [`PricingError::name`]) that
/// front ends print verbatim so scripts can match on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PricingError {
    #[error("NonPositiveSigma: volatility must be positive, got {0}")]
    NonPositiveSigma(f64),

    #[error("NonPositiveNu: variance rate of the gamma clock must be positive, got {0}")]
    NonPositiveNu(f64),

    #[error(
        "VGInadmissible: martingale correction needs 1 - theta*nu - sigma^2*nu/2 > 0, got {0}"
    )]
    VgInadmissible(f64),

    #[error("NonPositiveSpot: spot must be positive, got {0}")]
    NonPositiveSpot(f64),

    #[error("NonFiniteInput: {0} must be finite")]
    NonFiniteInput(&'static str),

    #[error("BadSchedule: {0}")]
    BadSchedule(String),

    #[error("BadGrid: {0}")]
    BadGrid(String),

    #[error("BadFftConfig: {0}")]
    BadFftConfig(String),

    #[error("BadSimConfig: {0}")]
    BadSimConfig(String),

    #[error("DomainError: {0}")]
    Domain(String),

    #[error("BranchCut: characteristic base has non-positive real part at u = {re} + {im}i")]
    BranchCut { re: f64, im: f64 },

    #[error("OutOfCoverage: log-moneyness {k} outside FFT grid [{lo}, {hi}]")]
    OutOfCoverage { k: f64, lo: f64, hi: f64 },

    #[error("GridTooCoarse: second differences need at least 5 points, got {0}")]
    GridTooCoarse(usize),

    #[error("StrikeOutOfGrid: normalized strike {w} outside (0, {w_max}]")]
    StrikeOutOfGrid { w: f64, w_max: f64 },

    #[error("BadFixings: {0}")]
    BadFixings(String),

    #[error("NonFiniteResult: {0}")]
    NonFinite(String),
}

impl PricingError {
    /// Stable identifier of the variant, e.g. `NonPositiveSigma`.
    pub fn name(&self) -> &'static str {
        match self {
            Self::NonPositiveSigma(_) => "NonPositiveSigma",
            Self::NonPositiveNu(_) => "NonPositiveNu",
            Self::VgInadmissible(_) => "VGInadmissible",
            Self::NonPositiveSpot(_) => "NonPositiveSpot",
            Self::NonFiniteInput(_) => "NonFiniteInput",
            Self::BadSchedule(_) => "BadSchedule",
            Self::BadGrid(_) => "BadGrid",
            Self::BadFftConfig(_) => "BadFftConfig",
            Self::BadSimConfig(_) => "BadSimConfig",
            Self::Domain(_) => "DomainError",
            Self::BranchCut { .. } => "BranchCut",
            Self::OutOfCoverage { .. } => "OutOfCoverage",
            Self::GridTooCoarse(_) => "GridTooCoarse",
            Self::StrikeOutOfGrid { .. } => "StrikeOutOfGrid",
            Self::BadFixings(_) => "BadFixings",
            Self::NonFinite(_) => "NonFiniteResult",
        }
    }

    /// True for errors caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Self::BranchCut { .. } | Self::OutOfCoverage { .. } | Self::NonFinite(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, PricingError>;
