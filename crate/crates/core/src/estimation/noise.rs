//! Two-sample variance table and the one-parameter noise-model fit.

use super::{counts_to_atoms, EstimationError, MixtureCalibration};
use crate::model::{DetectionParams, TimeTrace, TrapParams};
use crate::physics;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Two-sample variance of one atom-number group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceBin {
    pub n_atoms: u32,
    /// σ²_N = ½⟨(N_{j+1} − N_j)²⟩ over pairs whose first member rounds to
    /// `n_atoms`, in atoms².
    pub variance: f64,
    /// χ²-based standard error, variance · sqrt(2/(n_pairs − 1)).
    pub std_error: f64,
    pub n_pairs: u64,
}

/// A group skipped for having fewer than two pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmittedGroup {
    pub n_atoms: u32,
    pub n_pairs: u64,
}

/// Per-atom-number two-sample variance table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceTable {
    /// Bins sorted by atom number.
    pub bins: Vec<VarianceBin>,
    pub omitted: Vec<OmittedGroup>,
}

/// Which consecutive pairs enter the two-sample variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSelection {
    /// Every consecutive pair within a run.
    All,
    /// Only pairs whose two members round to the same integer. Integer
    /// level changes are loss/loading events — signal, not noise — and one
    /// such pair contributes ~0.5 atoms² against a noise floor a thousand
    /// times smaller, so the unfiltered statistic stops tracking the
    /// detection noise as soon as real losses occur.
    SameLevel,
}

/// Computes the two-sample variance of the real-valued atom signal,
/// grouped by the rounded atom number of the first pair member. Pairs are
/// consecutive samples within one trace; traces are never concatenated.
pub fn two_sample_variance(
    traces: &[TimeTrace],
    cal: &MixtureCalibration,
) -> Result<VarianceTable, EstimationError> {
    two_sample_variance_with(traces, cal, PairSelection::All)
}

/// [`two_sample_variance`] with an explicit pair-selection rule. The
/// analysis pipeline uses [`PairSelection::SameLevel`] so that the noise
/// fit sees shot-to-shot noise at constant occupancy only.
pub fn two_sample_variance_with(
    traces: &[TimeTrace],
    cal: &MixtureCalibration,
    selection: PairSelection,
) -> Result<VarianceTable, EstimationError> {
    let mut groups: BTreeMap<u32, (f64, u64)> = BTreeMap::new();
    for trace in traces {
        let values: Vec<(f64, u32)> = trace
            .samples
            .iter()
            .map(|s| {
                let est = counts_to_atoms(s.photoelectrons, cal, s.exposure);
                (est.real_atoms, est.integer_atoms)
            })
            .collect();
        for w in values.windows(2) {
            if selection == PairSelection::SameLevel && w[0].1 != w[1].1 {
                continue;
            }
            let d = w[1].0 - w[0].0;
            let entry = groups.entry(w[0].1).or_insert((0.0, 0));
            entry.0 += d * d;
            entry.1 += 1;
        }
    }
    if groups.is_empty() {
        return Err(EstimationError::EmptyInput(
            "no consecutive sample pairs in the provided traces",
        ));
    }
    let mut bins = Vec::new();
    let mut omitted = Vec::new();
    for (n_atoms, (sum_sq, n_pairs)) in groups {
        if n_pairs < 2 {
            omitted.push(OmittedGroup { n_atoms, n_pairs });
            continue;
        }
        let variance = 0.5 * sum_sq / n_pairs as f64;
        bins.push(VarianceBin {
            n_atoms,
            variance,
            std_error: variance * (2.0 / (n_pairs as f64 - 1.0)).sqrt(),
            n_pairs,
        });
    }
    Ok(VarianceTable { bins, omitted })
}

/// Result of fitting the noise model with α as the only free parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModelFit {
    /// Fitted fluorescence noise parameter (s^1/2).
    pub alpha: f64,
    pub alpha_std_error: f64,
    /// Maximum resolvable atom number extrapolated with the fitted α.
    pub n_max: f64,
    /// Error propagated from α onto the threshold crossing.
    pub n_max_std_error: f64,
    /// The variance bins that entered the fit.
    pub bins: Vec<VarianceBin>,
}

/// Weighted least squares of the variance table against
/// σ²(N) = σ²_bkg + a·N + (α²/τ_det)·N², with σ²_bkg, the linear
/// coefficient a and τ_life all held fixed; α² is the only free parameter
/// and the fit is linear in it. Weights are inverse squared standard
/// errors. Bins above `n_cut` are excluded.
pub fn fit_noise_model(
    table: &VarianceTable,
    d: &DetectionParams,
    t: &TrapParams,
    n_cut: u32,
) -> Result<NoiseModelFit, EstimationError> {
    let bins: Vec<VarianceBin> = table
        .bins
        .iter()
        .filter(|b| b.n_atoms <= n_cut)
        .copied()
        .collect();
    if bins.len() < 3 {
        return Err(EstimationError::InsufficientBins {
            found: bins.len(),
            needed: 3,
        });
    }
    for b in &bins {
        if !(b.std_error > 0.0) {
            return Err(EstimationError::InvalidArgument(format!(
                "bin N={} has non-positive standard error",
                b.n_atoms
            )));
        }
    }

    let a_lin = physics::linear_coefficient(d, t);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for b in &bins {
        let n = b.n_atoms as f64;
        let x = n * n / d.tau_det;
        let fixed = t.bkg_var_atoms + a_lin * n;
        let w = 1.0 / (b.std_error * b.std_error);
        sxx += w * x * x;
        sxy += w * x * (b.variance - fixed);
    }
    if !(sxx > 0.0) {
        return Err(EstimationError::InvalidArgument(
            "all bins sit at N = 0; the quadratic term is unconstrained".into(),
        ));
    }
    let theta = sxy / sxx; // alpha^2
    let theta_se = (1.0 / sxx).sqrt();
    // alpha^2 must clear its own standard error, otherwise the data are
    // shot-noise dominated and only an upper bound can be quoted
    if theta < theta_se {
        return Err(EstimationError::AlphaUnidentifiable {
            upper_bound: (theta.max(0.0) + 1.6449 * theta_se).sqrt(),
        });
    }
    let alpha = theta.sqrt();
    let alpha_std_error = theta_se / (2.0 * alpha);

    let fitted_trap = TrapParams { alpha, ..*t };
    let n_max = physics::max_resolvable_atoms(d, &fitted_trap).map_err(|e| {
        EstimationError::InvalidArgument(format!("threshold extrapolation failed: {e}"))
    })?;
    // implicit differentiation of bkg + a N + (alpha^2/tau) N^2 = 1
    let b_quad = alpha * alpha / d.tau_det;
    let dn_dalpha = 2.0 * alpha * n_max * n_max / (d.tau_det * (a_lin + 2.0 * b_quad * n_max));
    Ok(NoiseModelFit {
        alpha,
        alpha_std_error,
        n_max,
        n_max_std_error: dn_dalpha * alpha_std_error,
        bins,
    })
}
