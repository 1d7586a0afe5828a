//! Seeded continuous-time stochastic generator of fluorescence time traces.
//!
//! Atoms evolve as a birth-death process (loss at rate N/τ_life, loading at
//! rate R_load) between and during exposures. During an exposure every atom
//! present emits photoelectrons as a Poisson process whose rate carries one
//! shared per-image multiplier m ~ Normal(1, α/√τ_det) truncated at zero; an
//! atom lost mid-exposure contributes only up to its loss time. A zero-mean
//! Gaussian background is added to every image. Everything is deterministic
//! for a fixed seed, with one independent ChaCha stream per run so campaigns
//! can execute in parallel and stay reproducible run by run.

use crate::model::{
    validate, AtomTruth, DetectionParams, ImageSample, Provenance, TimeTrace, TrapParams,
};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution, Exp, Normal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
}

/// Atom-number distribution at the start of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialAtoms {
    /// Exactly this many atoms.
    Fixed(u32),
    /// Poisson-distributed with the given mean.
    Poisson(f64),
}

/// Engineered loss step: a brief repumper-off window inside the hold period.
///
/// The physical pulse shape is abstracted to one independent Bernoulli
/// survival trial per atom, applied at `placement` into the hold; `duration`
/// only has to fit inside the hold period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPulse {
    /// Repumper-off duration (s).
    pub duration: f64,
    /// Offset of the pulse within the hold period (s).
    pub placement: f64,
}

/// Full description of one simulated run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub detection: DetectionParams,
    pub trap: TrapParams,
    /// Images per run.
    pub n_images: usize,
    pub initial_atoms: InitialAtoms,
    /// Ground-truth emission scale (photoelectrons/atom/s). The detection
    /// parameters predict η·R_sc for this quantity; the calibration chain
    /// measures it. Keeping it an independent knob lets a run inject a scale
    /// that deviates from the photon-budget expectation, exactly like a real
    /// calibration does.
    pub counts_per_atom_per_second: f64,
    pub seed: u64,
}

impl SimConfig {
    /// All violated invariants of this config; empty means valid.
    pub fn violations(&self) -> Vec<String> {
        let mut v = validate(&self.detection, &self.trap)
            .violations()
            .to_vec();
        if self.n_images < 1 {
            v.push("n_images >= 1".into());
        }
        if !(self.counts_per_atom_per_second > 0.0) {
            v.push("counts_per_atom_per_second > 0".into());
        }
        if let InitialAtoms::Poisson(mean) = self.initial_atoms {
            if !(mean >= 0.0) || !mean.is_finite() {
                v.push("initial_atoms poisson mean >= 0 and finite".into());
            }
        }
        v
    }

    pub(crate) fn check(&self, pulse: Option<&LossPulse>) -> Result<(), SimError> {
        let mut v = self.violations();
        if let Some(p) = pulse {
            if !(0.0..=self.detection.tau_hold).contains(&p.duration) {
                v.push("pulse duration must lie in [0, tau_hold]".into());
            }
            if p.placement < 0.0 || p.placement + p.duration > self.detection.tau_hold {
                v.push("pulse placement + duration must fit in tau_hold".into());
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(SimError::InvalidConfig(v))
        }
    }
}

/// Ground truth of one engineered loss step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseTruth {
    pub atoms_before: u32,
    pub atoms_after: u32,
}

/// What happened during one hold period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoldRecord {
    /// `Some` when a loss pulse was applied during this hold.
    pub pulse: Option<PulseTruth>,
}

/// Stateful continuous-time simulation of the trapped ensemble plus camera.
///
/// Drives one run image by image; [`simulate_run`] wraps it for fixed
/// sequences and the stabilization controller steps it interactively.
pub struct AtomFieldSim {
    rng: ChaCha12Rng,
    atoms: u32,
    clock: f64,
    next_index: usize,
    detection: DetectionParams,
    trap: TrapParams,
    counts_per_atom_per_second: f64,
    rate_sigma: f64,
    bkg_sigma_counts: f64,
}

impl AtomFieldSim {
    /// Builds the simulation for run `run_index` of `cfg`. Each run index
    /// selects an independent random stream of the same seed.
    pub fn new(cfg: &SimConfig, run_index: u64) -> Result<Self, SimError> {
        cfg.check(None)?;
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
        rng.set_stream(run_index);
        let atoms = match cfg.initial_atoms {
            InitialAtoms::Fixed(k) => k,
            InitialAtoms::Poisson(mean) => {
                if mean > 0.0 {
                    Poisson::new(mean).expect("validated mean").sample(&mut rng) as u32
                } else {
                    0
                }
            }
        };
        let image_counts = cfg.counts_per_atom_per_second * cfg.detection.tau_det;
        Ok(Self {
            rng,
            atoms,
            clock: 0.0,
            next_index: 0,
            detection: cfg.detection,
            trap: cfg.trap,
            counts_per_atom_per_second: cfg.counts_per_atom_per_second,
            rate_sigma: cfg.trap.alpha / cfg.detection.tau_det.sqrt(),
            bkg_sigma_counts: cfg.trap.bkg_var_atoms.sqrt() * image_counts,
        })
    }

    /// Current true atom count.
    pub fn atoms(&self) -> u32 {
        self.atoms
    }

    /// Elapsed simulated time (s).
    pub fn clock(&self) -> f64 {
        self.clock
    }

    /// Evolves the birth-death process for `duration`, returning the
    /// integral of the atom count over the interval and recording event
    /// times (relative to the interval start) when asked to.
    fn evolve(&mut self, duration: f64, mut events: Option<(&mut Vec<f64>, &mut Vec<f64>)>) -> f64 {
        let mut t = 0.0;
        let mut presence = 0.0;
        loop {
            let loss_rate = self.atoms as f64 / self.trap.tau_life;
            let dt_loss = if self.atoms > 0 && loss_rate > 0.0 {
                Exp::new(loss_rate).expect("positive rate").sample(&mut self.rng)
            } else {
                f64::INFINITY
            };
            let dt_load = if self.trap.r_load > 0.0 {
                Exp::new(self.trap.r_load)
                    .expect("positive rate")
                    .sample(&mut self.rng)
            } else {
                f64::INFINITY
            };
            let dt = dt_loss.min(dt_load);
            if t + dt >= duration {
                presence += self.atoms as f64 * (duration - t);
                break;
            }
            t += dt;
            presence += self.atoms as f64 * dt;
            if dt_loss <= dt_load {
                self.atoms -= 1;
                if let Some((losses, _)) = events.as_mut() {
                    losses.push(t);
                }
            } else {
                self.atoms += 1;
                if let Some((_, loads)) = events.as_mut() {
                    loads.push(t);
                }
            }
        }
        presence
    }

    /// Per-image scattering-rate multiplier, Normal(1, α/√τ_det) truncated
    /// at zero. At realistic α the truncation probability is below 1e-100;
    /// the resample loop exists for pathological configs.
    fn rate_multiplier(&mut self) -> f64 {
        if self.rate_sigma == 0.0 {
            return 1.0;
        }
        let dist = Normal::new(1.0, self.rate_sigma).expect("validated sigma");
        for _ in 0..1000 {
            let m = dist.sample(&mut self.rng);
            if m >= 0.0 {
                return m;
            }
        }
        0.0
    }

    /// Acquires one image: advances the clock by τ_det and returns the
    /// background-subtracted photoelectron sample with its ground truth.
    pub fn expose(&mut self) -> ImageSample {
        let start_time = self.clock;
        let atoms_start = self.atoms;
        let m = self.rate_multiplier();
        let mut losses = Vec::new();
        let mut loads = Vec::new();
        let presence = self.evolve(self.detection.tau_det, Some((&mut losses, &mut loads)));
        let lambda = self.counts_per_atom_per_second * m * presence;
        let photons = if lambda > 0.0 {
            Poisson::new(lambda).expect("positive rate").sample(&mut self.rng)
        } else {
            0.0
        };
        let background = if self.bkg_sigma_counts > 0.0 {
            Normal::new(0.0, self.bkg_sigma_counts)
                .expect("validated sigma")
                .sample(&mut self.rng)
        } else {
            0.0
        };
        self.clock += self.detection.tau_det;
        let index = self.next_index;
        self.next_index += 1;
        ImageSample {
            index,
            start_time,
            exposure: self.detection.tau_det,
            photoelectrons: photons + background,
            truth: Some(AtomTruth {
                atoms_start,
                atoms_end: self.atoms,
                loss_times: losses,
                load_times: loads,
            }),
        }
    }

    /// Advances through one hold period, optionally applying an engineered
    /// loss pulse: one Bernoulli(p_survival) trial per atom at the pulse
    /// placement time.
    pub fn hold(&mut self, pulse: Option<&LossPulse>) -> HoldRecord {
        let tau_hold = self.detection.tau_hold;
        let record = match pulse {
            None => {
                self.evolve(tau_hold, None);
                HoldRecord { pulse: None }
            }
            Some(p) => {
                self.evolve(p.placement, None);
                let before = self.atoms;
                if before > 0 {
                    self.atoms = Binomial::new(before as u64, self.trap.p_survival)
                        .expect("validated probability")
                        .sample(&mut self.rng) as u32;
                }
                let after = self.atoms;
                self.evolve(tau_hold - p.placement, None);
                HoldRecord {
                    pulse: Some(PulseTruth {
                        atoms_before: before,
                        atoms_after: after,
                    }),
                }
            }
        };
        self.clock += tau_hold;
        record
    }
}

/// Simulates run `run_index` of `cfg`: n_images exposures separated by
/// holds, with the loss pulse (when given) applied during every hold.
pub fn simulate_run(
    cfg: &SimConfig,
    pulse: Option<&LossPulse>,
    run_index: u64,
) -> Result<TimeTrace, SimError> {
    cfg.check(pulse)?;
    let mut sim = AtomFieldSim::new(cfg, run_index)?;
    let mut samples = Vec::with_capacity(cfg.n_images);
    samples.push(sim.expose());
    for _ in 1..cfg.n_images {
        sim.hold(pulse);
        samples.push(sim.expose());
    }
    Ok(TimeTrace {
        samples,
        params: cfg.detection,
        provenance: Provenance::Simulated {
            seed: cfg.seed,
            run_index,
        },
    })
}

/// Simulates a single trace (run index 0).
pub fn simulate_trace(cfg: &SimConfig, pulse: Option<&LossPulse>) -> Result<TimeTrace, SimError> {
    simulate_run(cfg, pulse, 0)
}

/// Simulates `n_runs` independent detection runs. Run `i` uses the random
/// stream derived from (seed, i), so any run can be reproduced on its own
/// and runs may execute in parallel.
pub fn simulate_detection_campaign(
    cfg: &SimConfig,
    n_runs: usize,
) -> Result<Vec<TimeTrace>, SimError> {
    (0..n_runs)
        .map(|i| simulate_run(cfg, None, i as u64))
        .collect()
}
