//! Pairwise event classification and the lifetime/loading estimators.

use super::{counts_to_atoms, EstimationError, MixtureCalibration};
use crate::model::TimeTrace;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Loss,
    Load,
    Survival,
}

/// Classification of one pair of successive measurements within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub pair_index: usize,
    pub n_before: u32,
    pub n_after: u32,
    pub kind: EventKind,
}

/// Classifies every consecutive pair of one trace. Pairs never span trace
/// boundaries; call per run and concatenate.
pub fn classify_transitions(trace: &TimeTrace, cal: &MixtureCalibration) -> Vec<EventRecord> {
    let atoms: Vec<u32> = trace
        .samples
        .iter()
        .map(|s| counts_to_atoms(s.photoelectrons, cal, s.exposure).integer_atoms)
        .collect();
    atoms
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let kind = match w[1].cmp(&w[0]) {
                std::cmp::Ordering::Less => EventKind::Loss,
                std::cmp::Ordering::Greater => EventKind::Load,
                std::cmp::Ordering::Equal => EventKind::Survival,
            };
            EventRecord {
                pair_index: i,
                n_before: w[0],
                n_after: w[1],
                kind,
            }
        })
        .collect()
}

/// Trap-lifetime estimate from classified pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeEstimate {
    /// Estimated mean single-atom lifetime (s); a lower bound when
    /// `one_sided` is set.
    pub tau_life: f64,
    /// Poisson counting error, tau_life/sqrt(n_loss); 0 when one-sided.
    pub std_error: f64,
    /// Set when no loss was observed and only a lower bound can be given.
    pub one_sided: bool,
    pub n_loss: u64,
    pub atoms_observed: u64,
}

/// Single-atom loss probability per cycle inverted into a lifetime:
/// tau_life = cycle_time / P_loss with P_loss = losses / atoms observed.
pub fn estimate_lifetime(
    events: &[EventRecord],
    cycle_time: f64,
) -> Result<LifetimeEstimate, EstimationError> {
    let atoms_observed: u64 = events.iter().map(|e| e.n_before as u64).sum();
    if atoms_observed == 0 {
        return Err(EstimationError::EmptyInput(
            "no atoms observed across the provided pairs",
        ));
    }
    let n_loss = events
        .iter()
        .filter(|e| e.kind == EventKind::Loss && e.n_before - e.n_after == 1)
        .count() as u64;
    if n_loss == 0 {
        return Ok(LifetimeEstimate {
            tau_life: cycle_time * atoms_observed as f64,
            std_error: 0.0,
            one_sided: true,
            n_loss,
            atoms_observed,
        });
    }
    let p_loss = n_loss as f64 / atoms_observed as f64;
    let tau_life = cycle_time / p_loss;
    Ok(LifetimeEstimate {
        tau_life,
        std_error: tau_life / (n_loss as f64).sqrt(),
        one_sided: false,
        n_loss,
        atoms_observed,
    })
}

/// Loading-rate estimate from classified pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadingEstimate {
    /// Estimated loading rate (atoms/s).
    pub r_load: f64,
    /// Poisson counting error; with zero events this is the one-sided
    /// one-event upper bound 1/(n_pairs·cycle_time).
    pub std_error: f64,
    pub one_sided: bool,
    pub n_load: u64,
    pub n_pairs: u64,
}

/// Loading events per unit of observed hold-plus-exposure time.
pub fn estimate_loading_rate(
    events: &[EventRecord],
    n_pairs: u64,
    cycle_time: f64,
) -> Result<LoadingEstimate, EstimationError> {
    if n_pairs == 0 {
        return Err(EstimationError::InvalidArgument(
            "n_pairs must be >= 1".into(),
        ));
    }
    let n_load = events.iter().filter(|e| e.kind == EventKind::Load).count() as u64;
    let exposure_time = n_pairs as f64 * cycle_time;
    if n_load == 0 {
        return Ok(LoadingEstimate {
            r_load: 0.0,
            std_error: 1.0 / exposure_time,
            one_sided: true,
            n_load,
            n_pairs,
        });
    }
    Ok(LoadingEstimate {
        r_load: n_load as f64 / exposure_time,
        std_error: (n_load as f64).sqrt() / exposure_time,
        one_sided: false,
        n_load,
        n_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DetectionParams, ImageSample, Provenance};
    use approx::assert_relative_eq;

    fn trace_of_atoms(levels: &[u32]) -> (TimeTrace, MixtureCalibration) {
        let d = DetectionParams::rb87();
        let cal = MixtureCalibration::from_scale(600_000.0, 0.0, d.tau_det);
        let scale = 600_000.0 * d.tau_det;
        let trace = TimeTrace {
            samples: levels
                .iter()
                .enumerate()
                .map(|(i, &n)| ImageSample {
                    index: i,
                    start_time: i as f64 * d.cycle_time(),
                    exposure: d.tau_det,
                    photoelectrons: n as f64 * scale,
                    truth: None,
                })
                .collect(),
            params: d,
            provenance: Provenance::Ingested { file: "test".into() },
        };
        (trace, cal)
    }

    #[test]
    fn constant_trace_gives_survivals() {
        let (trace, cal) = trace_of_atoms(&[5; 11]);
        let events = classify_transitions(&trace, &cal);
        assert_eq!(events.len(), 10);
        assert!(events.iter().all(|e| e.kind == EventKind::Survival));
    }

    #[test]
    fn single_drop_is_one_loss() {
        let (trace, cal) = trace_of_atoms(&[4, 4, 3, 3, 3]);
        let events = classify_transitions(&trace, &cal);
        let losses: Vec<_> = events.iter().filter(|e| e.kind == EventKind::Loss).collect();
        assert_eq!(losses.len(), 1);
        assert_eq!(losses[0].n_before - losses[0].n_after, 1);
        assert_eq!(losses[0].pair_index, 1);
    }

    #[test]
    fn classification_partitions_pairs() {
        let (trace, cal) = trace_of_atoms(&[3, 2, 2, 4, 4, 4, 3, 3]);
        let events = classify_transitions(&trace, &cal);
        let losses = events.iter().filter(|e| e.kind == EventKind::Loss).count();
        let loads = events.iter().filter(|e| e.kind == EventKind::Load).count();
        let survivals = events
            .iter()
            .filter(|e| e.kind == EventKind::Survival)
            .count();
        assert_eq!(losses + loads + survivals, trace.samples.len() - 1);
        assert_eq!(losses, 2);
        assert_eq!(loads, 1);
    }

    /// Builds an event list with the requested loss count, total observed
    /// atoms, and load count.
    fn synthetic_events(n_loss: usize, atoms_total: u64, n_load: usize) -> Vec<EventRecord> {
        let mut events = Vec::new();
        let mut atoms = 0u64;
        for i in 0..n_loss {
            events.push(EventRecord {
                pair_index: i,
                n_before: 1,
                n_after: 0,
                kind: EventKind::Loss,
            });
            atoms += 1;
        }
        for i in 0..n_load {
            events.push(EventRecord {
                pair_index: n_loss + i,
                n_before: 1,
                n_after: 2,
                kind: EventKind::Load,
            });
            atoms += 1;
        }
        // fill the remaining observed atoms with survival pairs
        let mut idx = n_loss + n_load;
        while atoms < atoms_total {
            let n = (atoms_total - atoms).min(9) as u32;
            events.push(EventRecord {
                pair_index: idx,
                n_before: n,
                n_after: n,
                kind: EventKind::Survival,
            });
            atoms += n as u64;
            idx += 1;
        }
        events
    }

    #[test]
    fn lifetime_reproduces_reference_arithmetic() {
        // 14 single-atom losses among 24_482 observed atoms at 0.310 s/cycle
        let events = synthetic_events(14, 24_482, 0);
        let est = estimate_lifetime(&events, 0.310).unwrap();
        assert_relative_eq!(est.tau_life, 542.1014285714286, max_relative = 1e-12);
        assert_relative_eq!(est.std_error, 144.88270104249943, max_relative = 1e-12);
        assert!(!est.one_sided);
        assert_eq!(est.n_loss, 14);
        assert_eq!(est.atoms_observed, 24_482);
    }

    #[test]
    fn zero_losses_give_a_lower_bound() {
        let events = synthetic_events(0, 1000, 0);
        let est = estimate_lifetime(&events, 0.31).unwrap();
        assert!(est.one_sided);
        assert_relative_eq!(est.tau_life, 310.0, max_relative = 1e-12);
    }

    #[test]
    fn loading_reproduces_reference_arithmetic() {
        // 12 loading events in 2710 pairs at 0.310 s/cycle
        let events = synthetic_events(0, 20_000, 12);
        let est = estimate_loading_rate(&events, 2710, 0.310).unwrap();
        assert_relative_eq!(est.r_load, 0.014284013807880015, max_relative = 1e-12);
        assert_relative_eq!(est.std_error, 0.004123439608543928, max_relative = 1e-12);
        assert!(!est.one_sided);
    }

    #[test]
    fn zero_loads_give_one_sided_bound() {
        let events = synthetic_events(0, 100, 0);
        let est = estimate_loading_rate(&events, 1000, 0.31).unwrap();
        assert_eq!(est.r_load, 0.0);
        assert!(est.one_sided);
        assert_relative_eq!(est.std_error, 1.0 / 310.0, max_relative = 1e-12);
    }
}
