//! Closed-loop atom-number preparation and its binomial analytics.
//!
//! The controller interleaves number measurements with engineered loss
//! pulses until the measured number falls below a threshold, then verifies
//! the prepared ensemble with pulse-free images. Loss-step statistics follow
//! a binomial law whose survival probability, together with the truncated
//! final-number distribution it implies, bounds the attainable preparation
//! fidelity.

use crate::estimation::{counts_to_atoms, AtomEstimate, MixtureCalibration};
use crate::model::TimeTrace;
use crate::sim::{AtomFieldSim, LossPulse, PulseTruth, SimConfig, SimError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StabilizationError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("invalid controller config: {}", .0.join("; "))]
    InvalidController(Vec<String>),
    #[error("survival probability must lie strictly between 0 and 1, got {0}")]
    InvalidProbability(f64),
    #[error("pre-threshold number {pre_threshold_n} must exceed the target {target}")]
    InvalidTarget { pre_threshold_n: u32, target: u32 },
    #[error("transition table holds no loss-step transitions with atoms at risk")]
    EmptyTable,
    #[error("no completed stabilization runs to summarize")]
    NoCompletedRuns,
    #[error("need at least 2 runs for a final-number variance, got {found}")]
    TooFewRuns { found: usize },
}

/// Closed-loop controller settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    /// Stop once the measured (real-valued) atom number falls below this.
    pub threshold: f64,
    /// Target integer atom number the loop prepares.
    pub target: u32,
    /// Engineered loss step applied during each hold while above threshold.
    pub pulse: LossPulse,
    /// Pulse-free verification images acquired after stopping.
    pub n_verify: usize,
    /// Abort bound on the number of measurement steps.
    pub max_steps: usize,
}

/// How one controller episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControllerResult {
    /// The loop stopped; `reported` is the integer measurement of the
    /// threshold-crossing image itself (verification images are stored but
    /// do not redefine the result).
    Stabilized { reported: u32, crossing_index: usize },
    /// `max_steps` measurements never fell below threshold.
    Exhausted,
}

/// One controller episode: its trace plus everything the loop decided.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerRun {
    pub trace: TimeTrace,
    pub result: ControllerResult,
    /// Per-image atom estimates, parallel to `trace.samples`.
    pub measurements: Vec<AtomEstimate>,
    /// `pulsed_after[i]` is true when the hold following sample `i` carried
    /// a loss pulse; length is `samples.len() - 1`.
    pub pulsed_after: Vec<bool>,
    /// Ground-truth atom counts around every applied pulse.
    pub truth_pulses: Vec<PulseTruth>,
}

/// Runs one closed-loop episode on run stream `run_index`.
///
/// Each cycle exposes for τ_det, estimates the number in real time with the
/// ground-truth scale of the simulation (the pre-existing calibration), and
/// either applies the loss pulse during the next hold or stops. The
/// controller never pulses after the stop condition fires.
pub fn run_controller(
    ctrl: &ControllerConfig,
    sim_cfg: &SimConfig,
    run_index: u64,
) -> Result<ControllerRun, StabilizationError> {
    let mut problems = Vec::new();
    if !(ctrl.threshold > 0.0) {
        problems.push("threshold > 0".to_string());
    }
    if ctrl.max_steps < 1 {
        problems.push("max_steps >= 1".to_string());
    }
    if !problems.is_empty() {
        return Err(StabilizationError::InvalidController(problems));
    }
    sim_cfg.check(Some(&ctrl.pulse))?;

    let cal = MixtureCalibration::from_scale(
        sim_cfg.counts_per_atom_per_second,
        0.0,
        sim_cfg.detection.tau_det,
    );
    let mut sim = AtomFieldSim::new(sim_cfg, run_index)?;
    let mut samples = Vec::new();
    let mut measurements = Vec::new();
    let mut pulsed_after = Vec::new();
    let mut truth_pulses = Vec::new();

    let mut result = ControllerResult::Exhausted;
    for step in 0..ctrl.max_steps {
        let sample = sim.expose();
        let est = counts_to_atoms(sample.photoelectrons, &cal, sample.exposure);
        samples.push(sample);
        measurements.push(est);
        if est.real_atoms < ctrl.threshold {
            result = ControllerResult::Stabilized {
                reported: est.integer_atoms,
                crossing_index: step,
            };
            break;
        }
        let record = sim.hold(Some(&ctrl.pulse));
        pulsed_after.push(true);
        if let Some(p) = record.pulse {
            truth_pulses.push(p);
        }
    }

    if matches!(result, ControllerResult::Stabilized { .. }) {
        for _ in 0..ctrl.n_verify {
            sim.hold(None);
            pulsed_after.push(false);
            let sample = sim.expose();
            let est = counts_to_atoms(sample.photoelectrons, &cal, sample.exposure);
            samples.push(sample);
            measurements.push(est);
        }
    } else {
        // the final exposure of an exhausted run has no hold after it
        pulsed_after.pop();
    }

    Ok(ControllerRun {
        trace: TimeTrace {
            samples,
            params: sim_cfg.detection,
            provenance: crate::model::Provenance::Simulated {
                seed: sim_cfg.seed,
                run_index,
            },
        },
        result,
        measurements,
        pulsed_after,
        truth_pulses,
    })
}

/// Occurrences of measured one-loss-step transitions n_in → n_out.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransitionTable {
    counts: BTreeMap<(u32, u32), u64>,
}

impl TransitionTable {
    pub fn record(&mut self, n_in: u32, n_out: u32) {
        *self.counts.entry((n_in, n_out)).or_insert(0) += 1;
    }

    /// Collects every measured transition across a pulsed hold.
    pub fn from_runs(runs: &[ControllerRun]) -> Self {
        let mut table = Self::default();
        for run in runs {
            for (i, &pulsed) in run.pulsed_after.iter().enumerate() {
                if pulsed && i + 1 < run.measurements.len() {
                    table.record(
                        run.measurements[i].integer_atoms,
                        run.measurements[i + 1].integer_atoms,
                    );
                }
            }
        }
        table
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// (n_in, n_out, occurrences), ordered by n_in then n_out.
    pub fn entries(&self) -> impl Iterator<Item = (u32, u32, u64)> + '_ {
        self.counts.iter().map(|(&(i, o), &c)| (i, o, c))
    }
}

/// Jointly fitted per-atom survival probability of one loss step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalFit {
    pub p_survival: f64,
    /// Fisher-information standard error, sqrt(p(1-p)/trials).
    pub std_error: f64,
    /// Total atoms at risk across all fitted transitions.
    pub trials: u64,
    /// Transitions with n_out > n_in (loading during the step) that were
    /// excluded from the binomial fit.
    pub excluded_gain_rows: u64,
}

/// Maximum-likelihood binomial fit over all rows of the table: the joint
/// MLE is survivors over atoms at risk.
pub fn fit_survival_probability(table: &TransitionTable) -> Result<SurvivalFit, StabilizationError> {
    let mut survivors = 0u64;
    let mut at_risk = 0u64;
    let mut excluded = 0u64;
    for (n_in, n_out, count) in table.entries() {
        if n_in == 0 {
            continue;
        }
        if n_out > n_in {
            excluded += count;
            continue;
        }
        survivors += count * n_out as u64;
        at_risk += count * n_in as u64;
    }
    if at_risk == 0 {
        return Err(StabilizationError::EmptyTable);
    }
    let p = survivors as f64 / at_risk as f64;
    Ok(SurvivalFit {
        p_survival: p,
        std_error: (p * (1.0 - p) / at_risk as f64).sqrt(),
        trials: at_risk,
        excluded_gain_rows: excluded,
    })
}

/// Binomial probability mass B(p, n, k) = C(n, k) p^k (1-p)^(n-k).
fn binomial_pmf(n: u32, k: u32, p: f64) -> f64 {
    debug_assert!(k <= n);
    let mut ln_choose = 0.0;
    for i in 1..=k.min(n - k) {
        ln_choose += ((n - k.min(n - k) + i) as f64).ln() - (i as f64).ln();
    }
    (ln_choose + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
}

/// Final-number distribution after the crossing loss step: the binomial
/// outcome of one step from `pre_threshold_n` atoms, conditioned on landing
/// at or below `target`. Index k of the returned vector is P(k atoms),
/// k = 0..=target, normalized to 1.
pub fn truncated_final_distribution(
    p_s: f64,
    pre_threshold_n: u32,
    target: u32,
) -> Result<Vec<f64>, StabilizationError> {
    if !(p_s > 0.0 && p_s < 1.0) {
        return Err(StabilizationError::InvalidProbability(p_s));
    }
    if pre_threshold_n <= target {
        return Err(StabilizationError::InvalidTarget {
            pre_threshold_n,
            target,
        });
    }
    let raw: Vec<f64> = (0..=target)
        .map(|k| binomial_pmf(pre_threshold_n, k, p_s))
        .collect();
    let norm: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|v| v / norm).collect())
}

/// Best attainable preparation fidelity for a given loss step: the chance
/// the final crossing from target+1 lands exactly on the target.
pub fn max_fidelity(p_s: f64, target: u32) -> Result<f64, StabilizationError> {
    let dist = truncated_final_distribution(p_s, target + 1, target)?;
    Ok(dist[target as usize])
}

/// Which variance the shot-noise reference σ² = ⟨N⟩ is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShotNoiseReference {
    /// Reference the sample mean of the final numbers (default).
    SampleMean,
    /// Reference the prepared target number instead.
    Target(u32),
}

/// Sub-shot-noise suppression of a final-number histogram in dB:
/// 10·log₁₀(reference/variance), with the population variance of the
/// histogram so that scaling all counts leaves the result unchanged.
/// Returns +∞ when the variance is zero (perfect preparation within the
/// sample).
pub fn suppression_db_with(
    final_counts: &[u64],
    reference: ShotNoiseReference,
) -> Result<f64, StabilizationError> {
    let n: u64 = final_counts.iter().sum();
    if n < 2 {
        return Err(StabilizationError::TooFewRuns { found: n as usize });
    }
    let nf = n as f64;
    let mean = final_counts
        .iter()
        .enumerate()
        .map(|(k, &c)| k as f64 * c as f64)
        .sum::<f64>()
        / nf;
    let variance = final_counts
        .iter()
        .enumerate()
        .map(|(k, &c)| c as f64 * (k as f64 - mean).powi(2))
        .sum::<f64>()
        / nf;
    if variance == 0.0 {
        return Ok(f64::INFINITY);
    }
    let reference = match reference {
        ShotNoiseReference::SampleMean => mean,
        ShotNoiseReference::Target(t) => t as f64,
    };
    Ok(10.0 * (reference / variance).log10())
}

/// [`suppression_db_with`] referenced to the sample mean.
pub fn suppression_db(final_counts: &[u64]) -> Result<f64, StabilizationError> {
    suppression_db_with(final_counts, ShotNoiseReference::SampleMean)
}

/// Mean/variance suppression of a predicted probability distribution over
/// atom numbers (index = atom number), in dB.
pub fn distribution_suppression_db(probs: &[f64]) -> f64 {
    let norm: f64 = probs.iter().sum();
    let mean = probs
        .iter()
        .enumerate()
        .map(|(k, &p)| k as f64 * p)
        .sum::<f64>()
        / norm;
    let variance = probs
        .iter()
        .enumerate()
        .map(|(k, &p)| p * (k as f64 - mean).powi(2))
        .sum::<f64>()
        / norm;
    10.0 * (mean / variance).log10()
}

/// Aggregate view of a batch of controller runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizationReport {
    pub target: u32,
    pub n_runs: u64,
    pub n_completed: u64,
    pub n_exhausted: u64,
    /// (final number, occurrences) over completed runs, sorted.
    pub final_histogram: Vec<(u32, u64)>,
    /// Fraction of completed runs ending exactly on target.
    pub fidelity: f64,
    /// Wilson-interval (z = 1) half-width on the fidelity.
    pub fidelity_std_error: f64,
    pub mean_final: f64,
    pub variance_final: f64,
    /// `None` encodes the +∞ flag of a zero-variance sample.
    pub suppression_db: Option<f64>,
    /// Joint survival fit over every pulsed transition; `None` when no
    /// pulse step was ever applied.
    pub p_survival_fit: Option<SurvivalFit>,
}

/// Wilson score interval half-width at z standard normal units.
fn wilson_half_width(successes: u64, n: u64, z: f64) -> f64 {
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / (1.0 + z2 / nf)
}

/// Aggregates completed runs into the final report. The reported number of
/// each run is its threshold-crossing measurement; exhausted runs are
/// counted but excluded from the fidelity statistics.
pub fn summarize(runs: &[ControllerRun], target: u32) -> Result<StabilizationReport, StabilizationError> {
    let mut hist: BTreeMap<u32, u64> = BTreeMap::new();
    let mut n_exhausted = 0u64;
    for run in runs {
        match run.result {
            ControllerResult::Stabilized { reported, .. } => {
                *hist.entry(reported).or_insert(0) += 1;
            }
            ControllerResult::Exhausted => n_exhausted += 1,
        }
    }
    let n_completed: u64 = hist.values().sum();
    if n_completed == 0 {
        return Err(StabilizationError::NoCompletedRuns);
    }
    let at_target = hist.get(&target).copied().unwrap_or(0);
    let fidelity = at_target as f64 / n_completed as f64;
    let fidelity_std_error = wilson_half_width(at_target, n_completed, 1.0);

    let mean_final = hist
        .iter()
        .map(|(&k, &c)| k as f64 * c as f64)
        .sum::<f64>()
        / n_completed as f64;
    let variance_final = hist
        .iter()
        .map(|(&k, &c)| c as f64 * (k as f64 - mean_final).powi(2))
        .sum::<f64>()
        / n_completed as f64;

    let max_final = hist.keys().max().copied().unwrap_or(0);
    let mut dense = vec![0u64; max_final as usize + 1];
    for (&k, &c) in &hist {
        dense[k as usize] = c;
    }
    let suppression = if n_completed >= 2 {
        match suppression_db(&dense)? {
            v if v.is_finite() => Some(v),
            _ => None,
        }
    } else {
        None
    };

    let table = TransitionTable::from_runs(runs);
    let p_survival_fit = if table.is_empty() {
        None
    } else {
        fit_survival_probability(&table).ok()
    };

    Ok(StabilizationReport {
        target,
        n_runs: runs.len() as u64,
        n_completed,
        n_exhausted,
        final_histogram: hist.into_iter().collect(),
        fidelity,
        fidelity_std_error,
        mean_final,
        variance_final,
        suppression_db: suppression,
        p_survival_fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DetectionParams, TrapParams};
    use crate::sim::InitialAtoms;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn stabilization_sim(initial: InitialAtoms, p_survival: f64, seed: u64) -> SimConfig {
        SimConfig {
            detection: DetectionParams {
                tau_hold: 0.198,
                ..DetectionParams::rb87()
            },
            trap: TrapParams {
                p_survival,
                ..TrapParams::rb87_mot()
            },
            n_images: 1, // ignored by the controller
            initial_atoms: initial,
            counts_per_atom_per_second: 600_000.0,
            seed,
        }
    }

    fn controller() -> ControllerConfig {
        ControllerConfig {
            threshold: 7.5,
            target: 7,
            pulse: LossPulse {
                duration: 0.003,
                placement: 0.0,
            },
            n_verify: 4,
            max_steps: 100,
        }
    }

    #[test]
    fn below_threshold_stops_immediately() {
        let run = run_controller(
            &controller(),
            &stabilization_sim(InitialAtoms::Fixed(3), 0.9666, 11),
            0,
        )
        .unwrap();
        match run.result {
            ControllerResult::Stabilized { crossing_index, .. } => assert_eq!(crossing_index, 0),
            _ => panic!("expected immediate stop"),
        }
        assert!(run.truth_pulses.is_empty());
        assert_eq!(run.trace.samples.len(), 1 + 4);
        assert_eq!(run.pulsed_after, vec![false; 4]);
    }

    #[test]
    fn killer_pulse_stops_after_one_step() {
        let run = run_controller(
            &controller(),
            &stabilization_sim(InitialAtoms::Fixed(15), 0.0, 3),
            0,
        )
        .unwrap();
        match run.result {
            ControllerResult::Stabilized {
                reported,
                crossing_index,
            } => {
                assert_eq!(reported, 0);
                assert_eq!(crossing_index, 1);
            }
            _ => panic!("expected stop at the second image"),
        }
        assert_eq!(run.truth_pulses.len(), 1);
    }

    #[test]
    fn no_pulse_after_stop() {
        for seed in 0..20 {
            let run = run_controller(
                &controller(),
                &stabilization_sim(InitialAtoms::Poisson(15.0), 0.9666, seed),
                seed,
            )
            .unwrap();
            if let ControllerResult::Stabilized { crossing_index, .. } = run.result {
                for (i, &pulsed) in run.pulsed_after.iter().enumerate() {
                    assert_eq!(pulsed, i < crossing_index, "run {seed} gap {i}");
                }
            }
        }
    }

    #[test]
    fn exhausted_runs_are_flagged_not_errors() {
        let mut ctrl = controller();
        ctrl.max_steps = 3;
        // survival 1.0 and 20 atoms: never crosses
        let run = run_controller(&ctrl, &stabilization_sim(InitialAtoms::Fixed(20), 1.0, 5), 0)
            .unwrap();
        assert_eq!(run.result, ControllerResult::Exhausted);
        assert_eq!(run.trace.samples.len(), 3);
    }

    #[test]
    fn survival_fit_closed_forms() {
        let mut table = TransitionTable::default();
        for _ in 0..100 {
            table.record(10, 10);
        }
        let fit = fit_survival_probability(&table).unwrap();
        assert_eq!(fit.p_survival, 1.0);

        let mut table = TransitionTable::default();
        for _ in 0..50 {
            table.record(2, 1);
            table.record(2, 2);
        }
        let fit = fit_survival_probability(&table).unwrap();
        assert_relative_eq!(fit.p_survival, 0.75, max_relative = 1e-12);
        assert_eq!(fit.trials, 200);
    }

    #[test]
    fn survival_fit_rejects_empty() {
        assert!(matches!(
            fit_survival_probability(&TransitionTable::default()),
            Err(StabilizationError::EmptyTable)
        ));
        let mut only_zero = TransitionTable::default();
        only_zero.record(0, 0);
        assert!(fit_survival_probability(&only_zero).is_err());
    }

    #[test]
    fn truncated_distribution_reference_values() {
        // frozen from exact evaluation of the conditioned binomial
        let dist = truncated_final_distribution(0.9666, 8, 7).unwrap();
        assert_eq!(dist.len(), 8);
        assert_abs_diff_eq!(dist[7], 0.885215494309338, epsilon = 1e-12);
        assert_abs_diff_eq!(dist[6], 0.10705740873656276, epsilon = 1e-12);
        assert_abs_diff_eq!(dist[5], 0.007398546351750868, epsilon = 1e-12);
        assert_abs_diff_eq!(dist.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn truncated_distribution_near_unit_survival() {
        let dist = truncated_final_distribution(1.0 - 1e-9, 8, 7).unwrap();
        assert!(dist[7] > 1.0 - 1e-8);
    }

    #[test]
    fn truncated_distribution_argument_checks() {
        assert!(truncated_final_distribution(0.0, 8, 7).is_err());
        assert!(truncated_final_distribution(1.0, 8, 7).is_err());
        assert!(truncated_final_distribution(0.9, 7, 7).is_err());
    }

    #[test]
    fn max_fidelity_values() {
        assert_abs_diff_eq!(
            max_fidelity(0.9666, 7).unwrap(),
            0.885215494309338,
            epsilon = 1e-12
        );
        // hand-computable: P(1 | <=1 from 2) = 2pq/(q^2+2pq) = 2/3 at p=1/2
        assert_abs_diff_eq!(max_fidelity(0.5, 1).unwrap(), 2.0 / 3.0, epsilon = 1e-12);
        assert!(max_fidelity(1.0 - 1e-9, 7).unwrap() > 1.0 - 1e-7);
    }

    #[test]
    fn max_fidelity_monotone_in_survival() {
        let mut prev = 0.0;
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let f = max_fidelity(p, 7).unwrap();
            assert!(f >= prev, "fidelity not monotone at p={p}");
            prev = f;
        }
    }

    #[test]
    fn suppression_reference_counts() {
        // counts {7:142, 6:12, 5:1}: mean 6.910, population variance 0.095
        let mut counts = vec![0u64; 8];
        counts[7] = 142;
        counts[6] = 12;
        counts[5] = 1;
        let db = suppression_db(&counts).unwrap();
        assert_abs_diff_eq!(db, 18.614250694283367, epsilon = 1e-9);
        // target-referenced variant differs by well under 0.1 dB here
        let db_t = suppression_db_with(&counts, ShotNoiseReference::Target(7)).unwrap();
        assert!((db_t - db).abs() < 0.1);
    }

    #[test]
    fn suppression_is_scale_invariant() {
        let mut counts = vec![0u64; 8];
        counts[7] = 142;
        counts[6] = 12;
        counts[5] = 1;
        let base = suppression_db(&counts).unwrap();
        let scaled: Vec<u64> = counts.iter().map(|c| c * 7).collect();
        assert_abs_diff_eq!(base, suppression_db(&scaled).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn zero_variance_is_infinite() {
        let mut counts = vec![0u64; 8];
        counts[7] = 10;
        assert!(suppression_db(&counts).unwrap().is_infinite());
    }

    #[test]
    fn poissonian_histogram_sits_at_shot_noise() {
        // a large Poisson(8) sample has mean ~= variance, i.e. ~0 dB
        use rand::SeedableRng;
        use rand_distr::{Distribution, Poisson};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        let poisson = Poisson::new(8.0).unwrap();
        let mut counts = vec![0u64; 40];
        for _ in 0..100_000 {
            let k = poisson.sample(&mut rng) as usize;
            counts[k.min(39)] += 1;
        }
        let db = suppression_db(&counts).unwrap();
        assert!(db.abs() < 0.15, "Poisson reference off shot noise: {db} dB");
    }

    #[test]
    fn summarize_reference_fidelity() {
        // 142 of 155 runs on target
        let mk_run = |reported: u32| ControllerRun {
            trace: TimeTrace {
                samples: Vec::new(),
                params: DetectionParams::rb87(),
                provenance: crate::model::Provenance::Simulated { seed: 0, run_index: 0 },
            },
            result: ControllerResult::Stabilized {
                reported,
                crossing_index: 0,
            },
            measurements: Vec::new(),
            pulsed_after: Vec::new(),
            truth_pulses: Vec::new(),
        };
        let mut runs = Vec::new();
        for _ in 0..142 {
            runs.push(mk_run(7));
        }
        for _ in 0..12 {
            runs.push(mk_run(6));
        }
        runs.push(mk_run(5));
        let report = summarize(&runs, 7).unwrap();
        assert_relative_eq!(report.fidelity, 142.0 / 155.0, max_relative = 1e-12);
        assert_abs_diff_eq!(report.fidelity_std_error, 0.022353031418933543, epsilon = 1e-12);
        assert_abs_diff_eq!(report.mean_final, 6.909677419354839, epsilon = 1e-12);
        assert_abs_diff_eq!(report.variance_final, 0.09506763787721123, epsilon = 1e-9);
        assert_abs_diff_eq!(
            report.suppression_db.unwrap(),
            18.614250694283367,
            epsilon = 1e-9
        );

        // a single run on target: fidelity 1 with a wide interval
        let report = summarize(&[mk_run(7)], 7).unwrap();
        assert_eq!(report.fidelity, 1.0);
        assert!(report.fidelity_std_error > 0.2);
        assert!(report.suppression_db.is_none());
    }
}
