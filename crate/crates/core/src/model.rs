//! Shared configuration and data types with unit discipline.
//!
//! All frequencies are stored as angular frequencies (rad/s). Configuration
//! files quote ordinary frequencies in Hz; the 2π conversion happens once at
//! the parse boundary (see [`crate::config`]). Times are seconds throughout.

use serde::{Deserialize, Serialize};

/// Optical and detection-chain constants for one imaging configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    /// Natural linewidth of the cycling transition (rad/s).
    pub gamma: f64,
    /// Laser detuning from resonance (rad/s, signed).
    pub detuning: f64,
    /// Saturation parameter s0 = I/I_sat (dimensionless).
    pub s0: f64,
    /// Total photon detection efficiency, in (0, 1].
    pub eta: f64,
    /// Exposure duration of one image (s).
    pub tau_det: f64,
    /// Hold duration between consecutive exposures (s).
    pub tau_hold: f64,
}

impl DetectionParams {
    /// Reference ⁸⁷Rb D₂ detection-MOT operating point.
    ///
    /// Γ = 2π·6 MHz, Δ = 2π·6 MHz, s₀ = 6.65, η = 4.71 %, 90 ms exposures
    /// separated by 220 ms holds. The imaging magnification and pixel-limited
    /// spatial resolution of the reference apparatus play no role here: every
    /// image is reduced to one background-subtracted photoelectron count.
    pub fn rb87() -> Self {
        Self {
            gamma: std::f64::consts::TAU * 6.0e6,
            detuning: std::f64::consts::TAU * 6.0e6,
            s0: 6.65,
            eta: 0.0471,
            tau_det: 0.09,
            tau_hold: 0.22,
        }
    }

    /// Duration of one image cycle: exposure plus hold (s).
    pub fn cycle_time(&self) -> f64 {
        self.tau_det + self.tau_hold
    }
}

/// Stochastic trap environment: lifetime, loading, engineered loss and
/// fluorescence noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapParams {
    /// Mean single-atom trap lifetime (s).
    pub tau_life: f64,
    /// Loading rate from background gas (atoms/s).
    pub r_load: f64,
    /// Per-atom survival probability of one engineered loss step, in [0, 1].
    pub p_survival: f64,
    /// Fluorescence noise parameter (s^1/2): shot-to-shot relative scattering
    /// rate fluctuations scale as alpha / sqrt(tau_det).
    pub alpha: f64,
    /// Background variance in squared atom-number units. Conversion to raw
    /// photoelectron counts uses the calibration scale squared.
    pub bkg_var_atoms: f64,
}

impl TrapParams {
    /// Reference detection-MOT environment: 540 s lifetime, 0.014 atoms/s
    /// loading, 96.66 % engineered-loss survival, alpha = 7.6e-4 s^1/2 and
    /// a background variance of 8.4e-4 atoms².
    pub fn rb87_mot() -> Self {
        Self {
            tau_life: 540.0,
            r_load: 0.014,
            p_survival: 0.9666,
            alpha: 7.6e-4,
            bkg_var_atoms: 8.4e-4,
        }
    }
}

/// Ground-truth record of the atom count over one exposure (simulation only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomTruth {
    /// Atom count at the start of the exposure.
    pub atoms_start: u32,
    /// Atom count at the end of the exposure.
    pub atoms_end: u32,
    /// Loss times within the exposure, seconds from exposure start.
    pub loss_times: Vec<f64>,
    /// Arrival times of newly loaded atoms, seconds from exposure start.
    pub load_times: Vec<f64>,
}

/// One background-subtracted fluorescence image reduced to a scalar count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSample {
    /// Ordinal of this image within its trace.
    pub index: usize,
    /// Exposure start time since the start of the trace (s).
    pub start_time: f64,
    /// Exposure duration (s).
    pub exposure: f64,
    /// Integrated, background-subtracted photoelectron count. Real-valued:
    /// background subtraction can leave fractional or negative residues.
    pub photoelectrons: f64,
    /// Ground-truth atom record; `None` for ingested data.
    pub truth: Option<AtomTruth>,
}

/// Where a trace came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Simulated { seed: u64, run_index: u64 },
    Ingested { file: String },
}

/// Ordered sequence of per-image photoelectron samples from one run.
///
/// Pair statistics (event classification, two-sample variance) never cross
/// trace boundaries: one trace is one separately loaded ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTrace {
    pub samples: Vec<ImageSample>,
    pub params: DetectionParams,
    pub provenance: Provenance,
}

impl TimeTrace {
    /// Checks the trace ordering invariants: strictly increasing indices and
    /// start times, consecutive exposures separated by at least `tau_hold`.
    pub fn check_ordering(&self) -> Result<(), String> {
        for pair in self.samples.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b.index <= a.index {
                return Err(format!(
                    "sample indices not strictly increasing at {} -> {}",
                    a.index, b.index
                ));
            }
            if b.start_time <= a.start_time {
                return Err(format!(
                    "start times not strictly increasing at sample {}",
                    b.index
                ));
            }
            let gap = b.start_time - (a.start_time + a.exposure);
            // allow a float-rounding sliver below tau_hold
            if gap < self.params.tau_hold - 1e-9 {
                return Err(format!(
                    "samples {} and {} separated by {:.6} s < tau_hold {:.6} s",
                    a.index, b.index, gap, self.params.tau_hold
                ));
            }
        }
        for s in &self.samples {
            if s.exposure <= 0.0 {
                return Err(format!("sample {} has non-positive exposure", s.index));
            }
        }
        Ok(())
    }
}

/// Outcome of validating a parameter set. All problems are reported, none
/// are thrown: an empty report means the parameters are valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[String] {
        &self.violations
    }

    fn check(&mut self, ok: bool, rule: &str) {
        if !ok {
            self.violations.push(rule.to_string());
        }
    }
}

/// Validates detection and trap parameters against their invariants.
///
/// Pure and idempotent; returns the list of violated invariants instead of
/// failing on the first one.
pub fn validate(d: &DetectionParams, t: &TrapParams) -> ValidationReport {
    let mut r = ValidationReport::default();
    r.check(d.gamma > 0.0, "gamma > 0");
    r.check(d.detuning.is_finite(), "detuning finite");
    r.check(d.s0 >= 0.0, "s0 >= 0");
    r.check(d.eta > 0.0, "0 < eta");
    r.check(d.eta <= 1.0, "eta <= 1");
    r.check(d.tau_det > 0.0, "tau_det > 0");
    r.check(d.tau_hold >= 0.0, "tau_hold >= 0");
    r.check(t.tau_life > 0.0, "tau_life > 0");
    r.check(t.r_load >= 0.0, "r_load >= 0");
    r.check(
        (0.0..=1.0).contains(&t.p_survival),
        "0 <= p_survival <= 1",
    );
    r.check(t.alpha >= 0.0, "alpha >= 0");
    r.check(t.bkg_var_atoms >= 0.0, "bkg_var_atoms >= 0");
    r
}
