use thiserror::Error;

/// Errors produced by the pricing library.
#[derive(Debug, Error)]
pub enum PricingError {
    /// An input violated a domain invariant (non-positive spot, unsorted
    /// dividend dates, non-finite argument, ...).
    #[error("invalid input: {0}")]
    Domain(String),

    /// The requested operation is outside the implemented capability
    /// (e.g. a derivative order beyond the supported caps).
    #[error("unsupported: {0}")]
    Capability(String),

    /// A formula became numerically degenerate (vanishing denominator,
    /// negative adjusted variance, ...).
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    /// The dividend adjustment pushed the spot or strike out of the
    /// positive domain; the schedule is too large for the proxy.
    #[error("adjustment overflow: {0}")]
    AdjustmentOverflow(String),

    /// Moment matching could not fit the shifted-lognormal family.
    #[error("moment fit failed: {0}")]
    MomentFit(String),

    /// I/O or parse failure while loading a dividend schedule.
    #[error("schedule load failed: {0}")]
    ScheduleLoad(String),
}

pub type Result<T> = std::result::Result<T, PricingError>;
