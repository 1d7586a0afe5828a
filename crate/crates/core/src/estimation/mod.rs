//! The analysis chain: histogramming, Gaussian-mixture calibration,
//! atom-number inference, event classification, lifetime and loading
//! estimation, two-sample variance, noise-model fitting and integer
//! self-calibration.
//!
//! Every operation is pure given its inputs. Pair statistics never cross
//! trace boundaries.

mod events;
mod histogram;
mod mixture;
mod noise;
mod selfcal;

pub use events::{
    classify_transitions, estimate_lifetime, estimate_loading_rate, EventKind, EventRecord,
    LifetimeEstimate, LoadingEstimate,
};
pub use histogram::{build_histogram, estimate_peak_spacing, estimate_peak_spacing_windowed, SignalHistogram};
pub use mixture::{counts_to_atoms, fit_mixture, AtomEstimate, FitDiagnostics, MixtureCalibration, PeakFit};
pub use noise::{
    fit_noise_model, two_sample_variance, two_sample_variance_with, NoiseModelFit, OmittedGroup,
    PairSelection, VarianceBin, VarianceTable,
};
pub use selfcal::self_calibrate_integer;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no secondary autocorrelation maximum: the histogram has no periodic peak structure")]
    NoPeriodicity,
    #[error("too few histogram bins in the fit domain: {found} bins for {needed} required")]
    InsufficientBins { found: usize, needed: usize },
    #[error(
        "mixture fit did not converge after {} iterations (rss {:.6e})",
        .diagnostics.iterations,
        .diagnostics.rss
    )]
    FitDidNotConverge { diagnostics: FitDiagnostics },
    #[error(
        "fluorescence noise parameter unidentifiable (fitted alpha^2 <= 0); one-sided upper bound alpha < {upper_bound:.3e} s^1/2"
    )]
    AlphaUnidentifiable { upper_bound: f64 },
    #[error("calibration scale ambiguous: {reason}")]
    AmbiguousScale { reason: String },
}
