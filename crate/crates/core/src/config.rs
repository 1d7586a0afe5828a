//! Declarative run configuration.
//!
//! Flat key = value sections in TOML. Frequencies are written in ordinary
//! frequency (Hz) so reference values can be transcribed verbatim; the 2π
//! conversion to angular frequency happens exactly once, here. Times are
//! seconds. Seeds are mandatory: no run may depend on the wall clock.

use crate::model::{validate, DetectionParams, TrapParams};
use crate::sim::{InitialAtoms, LossPulse, SimConfig};
use crate::stabilization::ControllerConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: String,
        source: Box<toml::de::Error>,
    },
    #[error("config invalid: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("config has no [{0}] section, required by this command")]
    MissingSection(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    /// Natural linewidth, ordinary frequency (Hz).
    pub gamma_hz: f64,
    /// Detuning from resonance, ordinary frequency (Hz, signed).
    pub detuning_hz: f64,
    pub s0: f64,
    pub eta: f64,
    pub tau_det_s: f64,
    pub tau_hold_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub tau_life_s: f64,
    pub r_load_per_s: f64,
    pub p_survival: f64,
    pub alpha_sqrt_s: f64,
    pub bkg_var_atoms: f64,
}

/// Initial atom number: `{ fixed = 3 }` or `{ poisson = 15.0 }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum InitialAtomsSpec {
    Fixed { fixed: u32 },
    Poisson { poisson: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub n_images: usize,
    pub n_runs: usize,
    pub counts_per_atom_per_s: f64,
    pub initial_atoms: InitialAtomsSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    pub enabled: bool,
    pub duration_s: f64,
    /// Offset of the pulse within the hold period (s).
    pub placement_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub threshold_atoms: f64,
    pub target_atoms: u32,
    #[serde(default = "default_n_verify")]
    pub n_verify: usize,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_n_verify() -> usize {
    4
}

fn default_max_steps() -> usize {
    100
}

/// One experiment description: everything a command needs to reproduce a
/// run byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub detection: DetectionSection,
    pub trap: TrapSection,
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<PulseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<ControllerSection>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let cfg: Self = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source: Box::new(source),
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Validates the parameter invariants; all violations are collected.
    pub fn check(&self) -> Result<(), ConfigError> {
        let sim = self.sim_config(None, None);
        let mut violations = sim.violations();
        if let Some(p) = &self.pulse {
            if p.enabled {
                if !(0.0..=self.detection.tau_hold_s).contains(&p.duration_s) {
                    violations.push("pulse duration_s must lie in [0, tau_hold_s]".into());
                }
                if p.placement_s < 0.0 || p.placement_s + p.duration_s > self.detection.tau_hold_s {
                    violations.push("pulse placement_s + duration_s must fit in tau_hold_s".into());
                }
            }
        }
        if let Some(c) = &self.controller {
            if !(c.threshold_atoms > 0.0) {
                violations.push("controller threshold_atoms > 0".into());
            }
            if c.max_steps < 1 {
                violations.push("controller max_steps >= 1".into());
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(violations))
        }
    }

    /// Detection parameters with the Hz → rad/s conversion applied.
    pub fn detection_params(&self) -> DetectionParams {
        DetectionParams {
            gamma: std::f64::consts::TAU * self.detection.gamma_hz,
            detuning: std::f64::consts::TAU * self.detection.detuning_hz,
            s0: self.detection.s0,
            eta: self.detection.eta,
            tau_det: self.detection.tau_det_s,
            tau_hold: self.detection.tau_hold_s,
        }
    }

    pub fn trap_params(&self) -> TrapParams {
        TrapParams {
            tau_life: self.trap.tau_life_s,
            r_load: self.trap.r_load_per_s,
            p_survival: self.trap.p_survival,
            alpha: self.trap.alpha_sqrt_s,
            bkg_var_atoms: self.trap.bkg_var_atoms,
        }
    }

    pub fn validation_report(&self) -> crate::model::ValidationReport {
        validate(&self.detection_params(), &self.trap_params())
    }

    pub fn sim_config(&self, seed_override: Option<u64>, runs_override: Option<usize>) -> SimConfig {
        let _ = runs_override; // runs live outside SimConfig; kept for call symmetry
        SimConfig {
            detection: self.detection_params(),
            trap: self.trap_params(),
            n_images: self.run.n_images,
            initial_atoms: match self.run.initial_atoms {
                InitialAtomsSpec::Fixed { fixed } => InitialAtoms::Fixed(fixed),
                InitialAtomsSpec::Poisson { poisson } => InitialAtoms::Poisson(poisson),
            },
            counts_per_atom_per_second: self.run.counts_per_atom_per_s,
            seed: seed_override.unwrap_or(self.seed),
        }
    }

    /// The loss pulse, when one is configured and enabled.
    pub fn loss_pulse(&self) -> Option<LossPulse> {
        self.pulse.and_then(|p| {
            p.enabled.then_some(LossPulse {
                duration: p.duration_s,
                placement: p.placement_s,
            })
        })
    }

    /// Controller configuration; requires both [controller] and an enabled
    /// [pulse] section.
    pub fn controller_config(&self) -> Result<ControllerConfig, ConfigError> {
        let c = self
            .controller
            .as_ref()
            .ok_or(ConfigError::MissingSection("controller"))?;
        let pulse = self.loss_pulse().ok_or(ConfigError::MissingSection("pulse"))?;
        Ok(ControllerConfig {
            threshold: c.threshold_atoms,
            target: c.target_atoms,
            pulse,
            n_verify: c.n_verify,
            max_steps: c.max_steps,
        })
    }
}
