//! Integer self-calibration of the counts-per-atom scale.
//!
//! A staircase of engineered-loss measurements spans many integer atom
//! numbers within one run. Every signal must sit on the integer lattice of
//! the (possibly drifted) current scale, so scanning a scale window for the
//! best lattice fit recalibrates the scale without any external reference.

use super::EstimationError;

const GRID_POINTS: usize = 2048;
const GOLDEN_ITERS: usize = 90;

/// Sum of squared distances of `signals/scale` to the nearest integers.
fn lattice_misfit(signals: &[f64], scale: f64) -> f64 {
    signals
        .iter()
        .map(|&s| {
            let x = s / scale;
            let d = x - x.round();
            d * d
        })
        .sum()
}

fn golden_section(signals: &[f64], mut lo: f64, mut hi: f64) -> (f64, f64) {
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = lattice_misfit(signals, x1);
    let mut f2 = lattice_misfit(signals, x2);
    for _ in 0..GOLDEN_ITERS {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = lattice_misfit(signals, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = lattice_misfit(signals, x2);
        }
    }
    let s = 0.5 * (lo + hi);
    (s, lattice_misfit(signals, s))
}

/// Refines the counts-per-atom scale by scanning `nominal_scale · (1 ±
/// search_window)` for the scale whose integer lattice best explains the
/// signals: a 2048-point grid scan followed by golden-section refinement
/// around each local minimum.
///
/// Fails when two refined minima lie within one standard error of the
/// misfit of each other (the objective is χ²-like, SE ≈ F·√(2/n)), or when
/// the signals occupy fewer than three distinct integer levels at the
/// optimum — in either case the data cannot pin the scale down.
pub fn self_calibrate_integer(
    signals: &[f64],
    nominal_scale: f64,
    search_window: f64,
) -> Result<f64, EstimationError> {
    if signals.len() < 3 {
        return Err(EstimationError::InvalidArgument(format!(
            "need at least 3 signals, got {}",
            signals.len()
        )));
    }
    if !(nominal_scale > 0.0) {
        return Err(EstimationError::InvalidArgument(
            "nominal_scale must be positive".into(),
        ));
    }
    if !(search_window > 0.0 && search_window < 1.0) {
        return Err(EstimationError::InvalidArgument(
            "search_window must lie in (0, 1)".into(),
        ));
    }

    let lo = nominal_scale * (1.0 - search_window);
    let hi = nominal_scale * (1.0 + search_window);
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|j| lattice_misfit(signals, lo + j as f64 * step))
        .collect();

    // local minima of the grid scan, boundaries included
    let mut candidates = Vec::new();
    for j in 0..GRID_POINTS {
        let left = if j > 0 { grid[j - 1] } else { f64::INFINITY };
        let right = if j + 1 < GRID_POINTS {
            grid[j + 1]
        } else {
            f64::INFINITY
        };
        if grid[j] <= left && grid[j] <= right {
            candidates.push(j);
        }
    }

    // refine each candidate in its bracketing interval
    let mut refined: Vec<(f64, f64)> = candidates
        .iter()
        .map(|&j| {
            let a = lo + (j.saturating_sub(1)) as f64 * step;
            let b = lo + ((j + 1).min(GRID_POINTS - 1)) as f64 * step;
            golden_section(signals, a, b)
        })
        .collect();
    refined.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    // drop duplicates that converged to the same point
    refined.dedup_by(|a, b| (a.0 - b.0).abs() < step * 0.5);

    let (best_scale, best_f) = refined[0];
    let n = signals.len() as f64;
    let tolerance = best_f * (2.0 / n).sqrt() + 1e-9 * (1.0 + best_f);
    if let Some(&(other, other_f)) = refined.get(1) {
        if other_f <= best_f + tolerance {
            return Err(EstimationError::AmbiguousScale {
                reason: format!(
                    "two minima within one standard error: scale {best_scale:.6e} (misfit {best_f:.3e}) \
                     and {other:.6e} (misfit {other_f:.3e})"
                ),
            });
        }
    }

    let mut levels: Vec<i64> = signals
        .iter()
        .map(|&s| (s / best_scale).round() as i64)
        .collect();
    levels.sort_unstable();
    levels.dedup();
    if levels.len() < 3 {
        return Err(EstimationError::AmbiguousScale {
            reason: format!(
                "signals occupy only {} distinct integer level(s); at least 3 are needed to pin the scale",
                levels.len()
            ),
        });
    }

    Ok(best_scale)
}
