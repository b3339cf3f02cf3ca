//! Error type shared by the decomposition and sampling routines.

use core::fmt;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A series must contain at least one observation.
    EmptySeries,
    /// A value that must be finite was NaN or infinite.
    NonFinite { what: &'static str },
    /// An operation needed more observations than the series holds.
    SeriesTooShort { needed: usize, got: usize },
    /// A scalar parameter violated its stated domain.
    InvalidParameter { what: &'static str },
    /// KZFT windows must be odd and at least 3.
    InvalidWindow { window: usize },
    /// Center frequencies must lie in (0, 0.5].
    FrequencyOutOfRange { frequency: f64 },
    /// The same center frequency was requested twice.
    DuplicateFrequency { frequency: f64 },
    /// No window within the support bound attenuates the conflicting
    /// frequency enough; the two frequencies cannot be separated.
    UnseparableFrequencies { center: f64, conflict: f64 },
    /// Block bootstrap period exceeds the series length.
    PeriodTooLong { period: usize, len: usize },
    /// Not enough bootstrap resamples for the requested statistic.
    TooFewResamples { needed: usize, got: usize },
    /// Ensembles passed to a combining operation disagree in resample count.
    MismatchedResampleCounts { left: usize, right: usize },
    /// Ensembles passed to a combining operation start at different times.
    MisalignedEnsembles,
    /// A block plan does not describe the series it is applied to.
    PlanMismatch { trimmed_len: usize, series_len: usize },
    /// MCMC configuration violates one of its invariants.
    InvalidMcmcConfig { what: &'static str },
    /// Too few post-burn-in samples to summarize a chain.
    ChainTooShort { needed: usize, got: usize },
    /// Residual diagnostics were handed a series the fit was not produced from.
    InputMismatch,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptySeries => write!(f, "series must contain at least one observation"),
            Error::NonFinite { what } => write!(f, "{what} must be finite"),
            Error::SeriesTooShort { needed, got } => {
                write!(f, "series too short: need at least {needed} observations, got {got}")
            }
            Error::InvalidParameter { what } => write!(f, "{what}"),
            Error::InvalidWindow { window } => {
                write!(f, "KZFT window must be odd and at least 3, got {window}")
            }
            Error::FrequencyOutOfRange { frequency } => {
                write!(f, "frequency {frequency} outside (0, 0.5]")
            }
            Error::DuplicateFrequency { frequency } => {
                write!(f, "duplicate frequency {frequency}")
            }
            Error::UnseparableFrequencies { center, conflict } => {
                write!(f, "frequencies {center} and {conflict} cannot be separated within the support bound")
            }
            Error::PeriodTooLong { period, len } => {
                write!(f, "block period {period} exceeds series length {len}")
            }
            Error::TooFewResamples { needed, got } => {
                write!(f, "need at least {needed} resamples, got {got}")
            }
            Error::MismatchedResampleCounts { left, right } => {
                write!(f, "ensembles hold different resample counts: {left} vs {right}")
            }
            Error::MisalignedEnsembles => write!(f, "ensembles start at different time origins"),
            Error::PlanMismatch { trimmed_len, series_len } => {
                write!(f, "block plan (trimmed length {trimmed_len}) does not match series length {series_len}")
            }
            Error::InvalidMcmcConfig { what } => write!(f, "invalid MCMC configuration: {what}"),
            Error::ChainTooShort { needed, got } => {
                write!(f, "need at least {needed} post-burn-in samples, got {got}")
            }
            Error::InputMismatch => {
                write!(f, "input series does not match the one the fit was produced from")
            }
        }
    }
}

impl core::error::Error for Error {}
