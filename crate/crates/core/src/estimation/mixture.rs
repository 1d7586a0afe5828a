//! Gaussian-sum calibration fit and atom-number inference.

use super::{EstimationError, SignalHistogram};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// One fitted Gaussian peak, in photoelectron units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakFit {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

/// Fit quality record attached to every calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Residual sum of squares over the fitted bins.
    pub rss: f64,
    pub rms_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Raised when adjacent centers fall closer than the larger of their
    /// widths, or when a peak collapses (non-positive amplitude, runaway
    /// width): the requested peak count exceeds what the data supports.
    pub degenerate: bool,
    pub notes: Vec<String>,
}

impl Default for FitDiagnostics {
    fn default() -> Self {
        Self {
            rss: 0.0,
            rms_residual: 0.0,
            iterations: 0,
            converged: true,
            degenerate: false,
            notes: Vec::new(),
        }
    }
}

/// Result of the histogram calibration: fitted peaks plus the linear
/// index-to-center regression that yields the counts-per-atom scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureCalibration {
    /// Fitted peaks sorted by center; index i corresponds to i atoms.
    pub peaks: Vec<PeakFit>,
    /// Slope of center vs. peak index (photoelectrons/atom/image).
    pub slope: f64,
    /// Standard error of the slope (photoelectrons/atom/image).
    pub slope_std_error: f64,
    /// Intercept of the regression (photoelectrons): residual offset of the
    /// zero-atom peak after background subtraction.
    pub intercept: f64,
    /// slope / exposure (photoelectrons/atom/s).
    pub counts_per_atom_per_second: f64,
    pub diagnostics: FitDiagnostics,
}

impl MixtureCalibration {
    /// Calibration from a known scale, for simulated ground truth or an
    /// externally supplied calibration file.
    pub fn from_scale(counts_per_atom_per_second: f64, intercept: f64, exposure: f64) -> Self {
        Self {
            peaks: Vec::new(),
            slope: counts_per_atom_per_second * exposure,
            slope_std_error: 0.0,
            intercept,
            counts_per_atom_per_second,
            diagnostics: FitDiagnostics::default(),
        }
    }
}

/// Atom-number reading of one image signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomEstimate {
    /// (signal − intercept) / (scale · exposure), sign preserved.
    pub real_atoms: f64,
    /// Nearest nonnegative integer, ties rounding up.
    pub integer_atoms: u32,
    /// Set when a negative real value was clamped to zero.
    pub clamped: bool,
}

/// Converts a photoelectron signal to atom numbers with a calibration.
pub fn counts_to_atoms(signal: f64, cal: &MixtureCalibration, exposure: f64) -> AtomEstimate {
    let scale = cal.counts_per_atom_per_second * exposure;
    let real_atoms = (signal - cal.intercept) / scale;
    if real_atoms < 0.0 {
        AtomEstimate {
            real_atoms,
            integer_atoms: 0,
            clamped: true,
        }
    } else {
        AtomEstimate {
            real_atoms,
            // half-up: x.5 rounds to x+1, deterministically
            integer_atoms: (real_atoms + 0.5).floor() as u32,
            clamped: false,
        }
    }
}

/// Least-squares fit of a sum of `k_peaks` Gaussians to the histogram,
/// initialized on the integer comb `i · init_spacing`, followed by a linear
/// regression of center on peak index (free intercept).
///
/// Only bins below `(k_peaks − 0.5) · init_spacing` enter the fit so that
/// peaks beyond the requested comb cannot distort it. `exposure` converts
/// the regression slope into counts per atom per second.
pub fn fit_mixture(
    h: &SignalHistogram,
    k_peaks: usize,
    init_spacing: f64,
    exposure: f64,
) -> Result<MixtureCalibration, EstimationError> {
    if k_peaks < 2 {
        return Err(EstimationError::InvalidArgument(format!(
            "k_peaks must be >= 2, got {k_peaks}"
        )));
    }
    if !(init_spacing > 0.0) {
        return Err(EstimationError::InvalidArgument(
            "init_spacing must be positive".into(),
        ));
    }
    if !(exposure > 0.0) {
        return Err(EstimationError::InvalidArgument(
            "exposure must be positive".into(),
        ));
    }

    // fit domain, in units of the initial spacing
    let cutoff = (k_peaks as f64 - 0.5) * init_spacing;
    let mut u = Vec::new();
    let mut y = Vec::new();
    for i in 0..h.n_bins() {
        let x = h.bin_center(i);
        if x < cutoff {
            u.push(x / init_spacing);
            y.push(h.counts[i] as f64);
        }
    }
    let m = u.len();
    let n_par = 3 * k_peaks;
    if m < n_par {
        return Err(EstimationError::InsufficientBins {
            found: m,
            needed: n_par,
        });
    }

    // initial guesses: comb positions, 1/8 spacing widths, data amplitudes
    let y_max = y.iter().cloned().fold(0.0f64, f64::max);
    let amp_floor = y_max * 1e-6 + 1e-9;
    let mut p = vec![0.0; n_par];
    for i in 0..k_peaks {
        let c0 = i as f64;
        let nearest = u
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - c0)
                    .abs()
                    .partial_cmp(&(b.1 - c0).abs())
                    .unwrap()
            })
            .map(|(j, _)| j)
            .unwrap();
        p[3 * i] = y[nearest].max(amp_floor);
        p[3 * i + 1] = c0;
        p[3 * i + 2] = 0.125;
    }

    let (p, diag) = levenberg_marquardt(&u, &y, k_peaks, p)?;

    // un-normalize and sort by center
    let mut peaks: Vec<PeakFit> = (0..k_peaks)
        .map(|i| PeakFit {
            amplitude: p[3 * i],
            center: p[3 * i + 1] * init_spacing,
            width: p[3 * i + 2].abs() * init_spacing,
        })
        .collect();
    peaks.sort_by(|a, b| a.center.partial_cmp(&b.center).unwrap());

    let mut diagnostics = diag;
    for w in peaks.windows(2) {
        let gap = w[1].center - w[0].center;
        if gap < w[0].width.max(w[1].width) {
            diagnostics.degenerate = true;
            diagnostics.notes.push(format!(
                "peaks at {:.1} and {:.1} overlap (gap {:.1} < width {:.1})",
                w[0].center,
                w[1].center,
                gap,
                w[0].width.max(w[1].width)
            ));
        }
    }
    for (i, pk) in peaks.iter().enumerate() {
        if pk.amplitude <= amp_floor * 2.0 {
            diagnostics.degenerate = true;
            diagnostics
                .notes
                .push(format!("peak {i} collapsed to zero amplitude"));
        }
        if pk.width >= init_spacing {
            diagnostics.degenerate = true;
            diagnostics
                .notes
                .push(format!("peak {i} wider than the comb spacing"));
        }
    }

    // regression of center on index with free intercept
    let k = peaks.len() as f64;
    let idx_mean = (k - 1.0) / 2.0;
    let c_mean = peaks.iter().map(|p| p.center).sum::<f64>() / k;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (i, pk) in peaks.iter().enumerate() {
        let dx = i as f64 - idx_mean;
        sxx += dx * dx;
        sxy += dx * (pk.center - c_mean);
    }
    let slope = sxy / sxx;
    let intercept = c_mean - slope * idx_mean;
    let slope_std_error = if peaks.len() > 2 {
        let rss: f64 = peaks
            .iter()
            .enumerate()
            .map(|(i, pk)| (pk.center - intercept - slope * i as f64).powi(2))
            .sum();
        (rss / (k - 2.0) / sxx).sqrt()
    } else {
        0.0
    };

    Ok(MixtureCalibration {
        peaks,
        slope,
        slope_std_error,
        intercept,
        counts_per_atom_per_second: slope / exposure,
        diagnostics,
    })
}

/// Sum-of-Gaussians model and Jacobian at normalized positions `u`.
fn eval_model(u: &[f64], p: &[f64], k: usize, f: &mut [f64], jac: Option<&mut DMatrix<f64>>) {
    f.iter_mut().for_each(|v| *v = 0.0);
    if let Some(j) = jac {
        j.fill(0.0);
        for i in 0..k {
            let (a, c, w) = (p[3 * i], p[3 * i + 1], p[3 * i + 2]);
            let w2 = w * w;
            for (row, &x) in u.iter().enumerate() {
                let dx = x - c;
                let e = (-dx * dx / (2.0 * w2)).exp();
                f[row] += a * e;
                j[(row, 3 * i)] = e;
                j[(row, 3 * i + 1)] = a * e * dx / w2;
                j[(row, 3 * i + 2)] = a * e * dx * dx / (w2 * w);
            }
        }
    } else {
        for i in 0..k {
            let (a, c, w) = (p[3 * i], p[3 * i + 1], p[3 * i + 2]);
            let w2 = w * w;
            for (row, &x) in u.iter().enumerate() {
                let dx = x - c;
                f[row] += a * (-dx * dx / (2.0 * w2)).exp();
            }
        }
    }
}

fn rss_of(y: &[f64], f: &[f64]) -> f64 {
    y.iter().zip(f).map(|(yi, fi)| (yi - fi) * (yi - fi)).sum()
}

/// Damped Gauss-Newton iteration on the normalized histogram.
fn levenberg_marquardt(
    u: &[f64],
    y: &[f64],
    k: usize,
    mut p: Vec<f64>,
) -> Result<(Vec<f64>, FitDiagnostics), EstimationError> {
    const MAX_ITER: usize = 300;
    const WIDTH_FLOOR: f64 = 1e-4;
    let m = u.len();
    let n_par = 3 * k;
    let mut f = vec![0.0; m];
    let mut jac = DMatrix::zeros(m, n_par);
    let mut lambda = 1e-3;
    let mut rss;
    eval_model(u, &p, k, &mut f, None);
    rss = rss_of(y, &f);
    let mut iterations = 0;
    let mut converged = false;
    let mut stall = 0u32;

    'outer: for _ in 0..MAX_ITER {
        iterations += 1;
        eval_model(u, &p, k, &mut f, Some(&mut jac));
        let r = DVector::from_iterator(m, y.iter().zip(&f).map(|(yi, fi)| yi - fi));
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * r;

        let mut stepped = false;
        for _ in 0..16 {
            let mut damped = jtj.clone();
            for i in 0..n_par {
                let d = jtj[(i, i)];
                damped[(i, i)] = d + lambda * d.max(1e-12);
            }
            let Some(delta) = damped.lu().solve(&g) else {
                lambda *= 8.0;
                continue;
            };
            let mut trial = p.clone();
            for i in 0..n_par {
                trial[i] += delta[i];
            }
            for i in 0..k {
                let w = trial[3 * i + 2].abs();
                trial[3 * i + 2] = w.max(WIDTH_FLOOR);
            }
            if trial.iter().any(|v| !v.is_finite()) {
                lambda *= 8.0;
                continue;
            }
            let mut f_trial = vec![0.0; m];
            eval_model(u, &trial, k, &mut f_trial, None);
            let rss_trial = rss_of(y, &f_trial);
            if rss_trial <= rss {
                let improvement = rss - rss_trial;
                p = trial;
                rss = rss_trial;
                lambda = (lambda / 3.0).max(1e-12);
                stepped = true;
                if improvement <= 1e-12 * (rss + 1e-300) {
                    converged = true;
                    break 'outer;
                }
                // flat degenerate directions can cycle forever on
                // microscopic gains; several near-zero steps in a row is
                // convergence
                if improvement <= 1e-8 * (rss + 1e-300) {
                    stall += 1;
                    if stall >= 5 {
                        converged = true;
                        break 'outer;
                    }
                } else {
                    stall = 0;
                }
                break;
            }
            lambda *= 8.0;
            if lambda > 1e14 {
                break 'outer;
            }
        }
        if !stepped {
            // no downhill direction left at any damping: stationary point
            converged = true;
            break;
        }
    }

    let diagnostics = FitDiagnostics {
        rss,
        rms_residual: (rss / m as f64).sqrt(),
        iterations,
        converged,
        degenerate: false,
        notes: Vec::new(),
    };
    if !converged || p.iter().any(|v| !v.is_finite()) {
        return Err(EstimationError::FitDidNotConverge { diagnostics });
    }
    Ok((p, diagnostics))
}
