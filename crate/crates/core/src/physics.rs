//! Closed-form photon-budget and noise-model formulas.
//!
//! The two-level scattering rate, per-atom photoelectron yield, the
//! four-term variance budget of a single atom-number measurement, the
//! maximum resolvable atom number, and the conversion of the fluorescence
//! noise parameter into equivalent laser noise sources.

use crate::model::{DetectionParams, TrapParams};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PhysicsError {
    /// The background variance alone already exceeds the single-atom
    /// discrimination threshold, so no positive atom number solves it.
    #[error("background variance {bkg_var_atoms} >= 1 atom^2: already above the resolution threshold at N = 0")]
    BackgroundAboveThreshold { bkg_var_atoms: f64 },
    /// Both the linear and quadratic variance coefficients vanish; the
    /// threshold crossing is undefined.
    #[error("noise model has no atom-number dependence; threshold crossing undefined")]
    NoNoiseScaling,
    /// The log-derivative of the scattering rate vanishes at the operating
    /// point, so no finite equivalent noise reproduces the fluctuation.
    #[error("scattering-rate sensitivity to {quantity} is zero at the operating point")]
    ZeroSensitivity { quantity: &'static str },
}

/// Variance budget of one atom-number measurement, all terms in atoms².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    /// Background noise from stray light and detector readout.
    pub bkg: f64,
    /// Photoelectron shot noise, linear in the atom number.
    pub psn: f64,
    /// Scattering-rate noise, quadratic in the atom number.
    pub srn: f64,
    /// Noise from atom loss during the exposure, linear in the atom number.
    pub loss: f64,
    /// Exact sum of the four terms above.
    pub total: f64,
}

/// Photon scattering rate of a single atom (photons/s):
/// Γ/2 · s₀ / (1 + s₀ + 4Δ²/Γ²). Bounded above by Γ/2.
pub fn scattering_rate(d: &DetectionParams) -> f64 {
    let x = d.detuning / d.gamma;
    d.gamma / 2.0 * d.s0 / (1.0 + d.s0 + 4.0 * x * x)
}

/// Photoelectrons one atom contributes to one image: R_sc · τ_det · η.
pub fn photoelectrons_per_atom(d: &DetectionParams) -> f64 {
    scattering_rate(d) * d.tau_det * d.eta
}

/// Linear-in-N variance coefficient: photoelectron shot noise plus loss
/// noise, 1/(η τ_det R_sc) + τ_det/(2 τ_life).
pub(crate) fn linear_coefficient(d: &DetectionParams, t: &TrapParams) -> f64 {
    1.0 / photoelectrons_per_atom(d) + d.tau_det / (2.0 * t.tau_life)
}

/// Quadratic-in-N variance coefficient: α²/τ_det.
fn quadratic_coefficient(d: &DetectionParams, t: &TrapParams) -> f64 {
    t.alpha * t.alpha / d.tau_det
}

/// Evaluates the measurement-variance budget at a (real-valued) atom number.
pub fn noise_budget(n_atoms: f64, d: &DetectionParams, t: &TrapParams) -> NoiseBudget {
    let bkg = t.bkg_var_atoms;
    let psn = n_atoms / photoelectrons_per_atom(d);
    let loss = n_atoms * d.tau_det / (2.0 * t.tau_life);
    let srn = n_atoms * n_atoms * quadratic_coefficient(d, t);
    NoiseBudget {
        bkg,
        psn,
        srn,
        loss,
        total: bkg + psn + srn + loss,
    }
}

/// Largest atom number at which neighbouring atom numbers remain
/// distinguishable: the positive root of σ²_bkg + a·N + b·N² = 1.
///
/// Solved in closed form. With α = 0 the quadratic term vanishes and the
/// linear-only root (1 − σ²_bkg)/a is returned.
pub fn max_resolvable_atoms(d: &DetectionParams, t: &TrapParams) -> Result<f64, PhysicsError> {
    let bkg = t.bkg_var_atoms;
    if bkg >= 1.0 {
        return Err(PhysicsError::BackgroundAboveThreshold { bkg_var_atoms: bkg });
    }
    let a = linear_coefficient(d, t);
    let b = quadratic_coefficient(d, t);
    let rhs = 1.0 - bkg;
    if b <= 0.0 {
        if a <= 0.0 {
            return Err(PhysicsError::NoNoiseScaling);
        }
        return Ok(rhs / a);
    }
    // positive root of b N^2 + a N - rhs = 0
    Ok((-a + (a * a + 4.0 * b * rhs).sqrt()) / (2.0 * b))
}

/// ∂ ln R_sc / ∂s₀ = 1/s₀ − 1/(1 + s₀ + 4Δ²/Γ²).
pub fn dln_rate_ds0(d: &DetectionParams) -> f64 {
    let x = d.detuning / d.gamma;
    1.0 / d.s0 - 1.0 / (1.0 + d.s0 + 4.0 * x * x)
}

/// ∂ ln R_sc / ∂Δ = −8Δ / (Γ² (1 + s₀ + 4Δ²/Γ²)), per (rad/s) of detuning.
pub fn dln_rate_ddetuning(d: &DetectionParams) -> f64 {
    let x = d.detuning / d.gamma;
    -8.0 * d.detuning / (d.gamma * d.gamma * (1.0 + d.s0 + 4.0 * x * x))
}

/// Equivalent single-source explanations of the fluorescence noise
/// parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalentNoise {
    /// Laser frequency noise (Hz, ordinary frequency) that alone would
    /// produce the observed per-exposure rate fluctuation.
    pub detuning_hz: f64,
    /// Absolute s₀ deviation that alone would produce it. The same number
    /// read as a relative fluctuation of s₀ would be ~26× smaller for the
    /// reference operating point; the absolute reading is the one that
    /// matches the per-exposure rate deviation.
    pub saturation: f64,
}

/// Converts the fluorescence noise parameter into equivalent laser noise.
///
/// The per-exposure relative rate deviation is r = α/√τ_det; dividing by
/// the analytic log-derivative of the scattering rate at the operating
/// point gives the equivalent detuning deviation (in ordinary frequency,
/// ∂Δ = 2π ∂ν) and the equivalent absolute s₀ deviation.
pub fn equivalent_noise_sources(
    alpha: f64,
    d: &DetectionParams,
) -> Result<EquivalentNoise, PhysicsError> {
    if alpha == 0.0 {
        return Ok(EquivalentNoise {
            detuning_hz: 0.0,
            saturation: 0.0,
        });
    }
    let r = alpha / d.tau_det.sqrt();
    let d_detuning = dln_rate_ddetuning(d);
    if d_detuning == 0.0 {
        return Err(PhysicsError::ZeroSensitivity {
            quantity: "detuning",
        });
    }
    let d_s0 = dln_rate_ds0(d);
    if d_s0 == 0.0 {
        return Err(PhysicsError::ZeroSensitivity {
            quantity: "saturation parameter",
        });
    }
    let per_hz = d_detuning.abs() * std::f64::consts::TAU;
    Ok(EquivalentNoise {
        detuning_hz: r / per_hz,
        saturation: r / d_s0.abs(),
    })
}
