//! Signal histogram construction and peak-spacing estimation.

use super::EstimationError;
use crate::model::TimeTrace;
use crate::physics;
use serde::{Deserialize, Serialize};

/// Histogram of per-image photoelectron counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalHistogram {
    /// Bin edges, length = number of bins + 1, strictly increasing.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub n_samples: u64,
}

impl SignalHistogram {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_edges[1] - self.bin_edges[0]
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        0.5 * (self.bin_edges[i] + self.bin_edges[i + 1])
    }

    /// Number of resolved peaks: local maxima with at least `floor` counts
    /// that are separated from the previously counted peak by at least
    /// `min_separation_bins` (so one broad peak never counts twice).
    pub fn resolved_peaks(&self, min_separation_bins: usize, floor: u64) -> usize {
        let c = &self.counts;
        let mut count = 0;
        let mut last: Option<usize> = None;
        for i in 1..c.len().saturating_sub(1) {
            let is_max = c[i] >= floor && c[i] > c[i - 1] && c[i] >= c[i + 1];
            if is_max && last.map(|l| i - l >= min_separation_bins).unwrap_or(true) {
                count += 1;
                last = Some(i);
            }
        }
        count
    }
}

/// Builds a uniform histogram of all sample signals across `traces`.
///
/// The bin width is the coarse single-atom spacing expectation from the
/// detection parameters, η·R_sc·τ_det, divided by `bins_per_atom`; bins
/// span the observed data.
pub fn build_histogram(
    traces: &[TimeTrace],
    bins_per_atom: usize,
) -> Result<SignalHistogram, EstimationError> {
    if bins_per_atom < 4 {
        return Err(EstimationError::InvalidArgument(format!(
            "bins_per_atom must be >= 4, got {bins_per_atom}"
        )));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut n_samples: u64 = 0;
    for t in traces {
        for s in &t.samples {
            lo = lo.min(s.photoelectrons);
            hi = hi.max(s.photoelectrons);
            n_samples += 1;
        }
    }
    if n_samples == 0 {
        return Err(EstimationError::EmptyInput("no samples to histogram"));
    }
    let coarse = physics::photoelectrons_per_atom(&traces[0].params);
    let width = coarse / bins_per_atom as f64;
    if !(width > 0.0) {
        return Err(EstimationError::InvalidArgument(
            "detection parameters give a zero single-atom signal; cannot choose a bin width".into(),
        ));
    }
    let n_bins = (((hi - lo) / width).ceil() as usize).max(1);
    let bin_edges: Vec<f64> = (0..=n_bins).map(|i| lo + i as f64 * width).collect();
    let mut counts = vec![0u64; n_bins];
    for t in traces {
        for s in &t.samples {
            let idx = (((s.photoelectrons - lo) / width) as usize).min(n_bins - 1);
            counts[idx] += 1;
        }
    }
    Ok(SignalHistogram {
        bin_edges,
        counts,
        n_samples,
    })
}

/// Peak-spacing estimate via the histogram autocorrelation, searched over
/// the default lag window [2, n_bins − 1].
pub fn estimate_peak_spacing(h: &SignalHistogram) -> Result<f64, EstimationError> {
    if h.n_bins() < 4 {
        // too narrow to hold two separated peaks at the minimum lag
        return Err(EstimationError::NoPeriodicity);
    }
    estimate_peak_spacing_windowed(h, 2, h.n_bins() - 1)
}

/// Fraction of the zero-lag autocorrelation power a candidate peak must
/// carry. A genuine comb concentrates most of its power on the spacing
/// lag; envelope tails produce weak spurious maxima well below this.
const MIN_PERIODIC_CONTRAST: f64 = 0.2;

/// Peak-spacing estimate with an explicit lag window (in bins).
///
/// The lag maximizing the mean-subtracted autocorrelation within the window
/// must be a positive local maximum carrying at least
/// [`MIN_PERIODIC_CONTRAST`] of the zero-lag power; its position is refined
/// by parabolic interpolation and converted to photoelectrons with the bin
/// width.
pub fn estimate_peak_spacing_windowed(
    h: &SignalHistogram,
    min_lag: usize,
    max_lag: usize,
) -> Result<f64, EstimationError> {
    let n = h.n_bins();
    if min_lag < 1 || max_lag <= min_lag || max_lag >= n {
        return Err(EstimationError::InvalidArgument(format!(
            "lag window [{min_lag}, {max_lag}] invalid for {n} bins"
        )));
    }
    let mean = h.counts.iter().sum::<u64>() as f64 / n as f64;
    let d: Vec<f64> = h.counts.iter().map(|&c| c as f64 - mean).collect();
    let autocorr = |lag: usize| -> f64 {
        (0..n - lag).map(|i| d[i] * d[i + lag]).sum()
    };
    let upper = (max_lag + 1).min(n - 1);
    let r: Vec<f64> = (0..=upper).map(autocorr).collect();
    let floor = MIN_PERIODIC_CONTRAST * r[0];

    let mut best: Option<usize> = None;
    for lag in min_lag..=max_lag {
        if r[lag] <= 0.0 || r[lag] < floor {
            continue;
        }
        let left = r[lag - 1];
        let right = if lag + 1 < r.len() { r[lag + 1] } else { f64::NEG_INFINITY };
        let is_local_max = left <= r[lag] && right <= r[lag] && (left < r[lag] || right < r[lag]);
        if !is_local_max {
            continue;
        }
        if best.map(|b| r[lag] > r[b]).unwrap_or(true) {
            best = Some(lag);
        }
    }
    let lag = best.ok_or(EstimationError::NoPeriodicity)?;

    // parabolic refinement through the three points around the maximum
    let (a, b, c) = (
        r[lag - 1],
        r[lag],
        if lag + 1 < r.len() { r[lag + 1] } else { r[lag] },
    );
    let denom = a - 2.0 * b + c;
    let delta = if denom < 0.0 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Ok((lag as f64 + delta) * h.bin_width())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DetectionParams, ImageSample, Provenance};

    fn trace_from_signals(signals: &[f64]) -> TimeTrace {
        let d = DetectionParams::rb87();
        TimeTrace {
            samples: signals
                .iter()
                .enumerate()
                .map(|(i, &p)| ImageSample {
                    index: i,
                    start_time: i as f64 * d.cycle_time(),
                    exposure: d.tau_det,
                    photoelectrons: p,
                    truth: None,
                })
                .collect(),
            params: d,
            provenance: Provenance::Ingested { file: "test".into() },
        }
    }

    #[test]
    fn single_sample_occupies_one_bin() {
        let h = build_histogram(&[trace_from_signals(&[123.0])], 8).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 1);
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
    }

    #[test]
    fn all_zero_signals_peak_at_zero() {
        let h = build_histogram(&[trace_from_signals(&[0.0; 40])], 8).unwrap();
        let occupied: Vec<usize> = (0..h.n_bins()).filter(|&i| h.counts[i] > 0).collect();
        assert_eq!(occupied.len(), 1);
        let i = occupied[0];
        assert!(h.bin_edges[i] <= 0.0 && 0.0 < h.bin_edges[i + 1]);
    }

    #[test]
    fn rejects_empty_and_coarse_binning() {
        assert!(build_histogram(&[], 8).is_err());
        assert!(build_histogram(&[trace_from_signals(&[1.0])], 3).is_err());
    }

    #[test]
    fn delta_comb_spacing_is_recovered() {
        // comb of delta peaks spaced by exactly 54_000 counts, on a grid of
        // 8 bins per peak spacing
        let spacing = 54_000.0;
        let bin_w = spacing / 8.0;
        let n_bins = 12 * 8 + 1;
        let mut counts = vec![0u64; n_bins];
        for level in 0..12 {
            counts[level * 8] = 50;
        }
        let h = SignalHistogram {
            bin_edges: (0..=n_bins).map(|i| i as f64 * bin_w).collect(),
            n_samples: counts.iter().sum(),
            counts,
        };
        let est = estimate_peak_spacing(&h).unwrap();
        assert!(
            (est - spacing).abs() <= h.bin_width(),
            "estimate {est} vs {spacing} (bin width {})",
            h.bin_width()
        );
    }

    #[test]
    fn two_peaks_give_their_separation() {
        let sep = 30_000.0;
        let mut signals = vec![0.0; 80];
        signals.extend(std::iter::repeat(sep).take(80));
        let h = build_histogram(&[trace_from_signals(&signals)], 8).unwrap();
        let est = estimate_peak_spacing(&h).unwrap();
        // the two occupied bins are sep/bin_width apart, quantized
        assert!(
            (est - sep).abs() <= h.bin_width(),
            "estimate {est} vs {sep} (bin width {})",
            h.bin_width()
        );
    }

    #[test]
    fn flat_histogram_has_no_period() {
        let h = SignalHistogram {
            bin_edges: (0..=64).map(|i| i as f64).collect(),
            counts: vec![7; 64],
            n_samples: 7 * 64,
        };
        assert!(matches!(
            estimate_peak_spacing(&h),
            Err(EstimationError::NoPeriodicity)
        ));
    }

    #[test]
    fn single_peak_has_no_period() {
        // one broad Gaussian-ish bump: autocorrelation decays monotonically
        let counts: Vec<u64> = (0..64)
            .map(|i| {
                let x = (i as f64 - 32.0) / 8.0;
                (1000.0 * (-0.5 * x * x).exp()) as u64
            })
            .collect();
        let h = SignalHistogram {
            bin_edges: (0..=64).map(|i| i as f64).collect(),
            n_samples: counts.iter().sum(),
            counts,
        };
        assert!(matches!(
            estimate_peak_spacing(&h),
            Err(EstimationError::NoPeriodicity)
        ));
    }
}
