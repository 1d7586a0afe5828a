//! Property tests over the invariants that must hold for arbitrary inputs.

use motcount::estimation::{classify_transitions, two_sample_variance, EventKind, MixtureCalibration};
use motcount::model::{
    AtomTruth, DetectionParams, ImageSample, Provenance, TimeTrace, TrapParams,
};
use motcount::physics::{noise_budget, scattering_rate};
use motcount::stabilization::{suppression_db, truncated_final_distribution};
use proptest::prelude::*;

fn finite_positive() -> impl Strategy<Value = f64> {
    prop_oneof![1e-9..1e9f64, 1e-3..1e3f64]
}

fn detection_strategy() -> impl Strategy<Value = DetectionParams> {
    (
        finite_positive(),
        -1e9..1e9f64,
        0.0..1e4f64,
        1e-6..1.0f64,
        1e-6..10.0f64,
        0.0..10.0f64,
    )
        .prop_map(|(gamma, detuning, s0, eta, tau_det, tau_hold)| DetectionParams {
            gamma,
            detuning,
            s0,
            eta,
            tau_det,
            tau_hold,
        })
}

fn trap_strategy() -> impl Strategy<Value = TrapParams> {
    (
        1e-3..1e6f64,
        0.0..10.0f64,
        0.0..=1.0f64,
        0.0..1e-2f64,
        0.0..1e-2f64,
    )
        .prop_map(|(tau_life, r_load, p_survival, alpha, bkg_var_atoms)| TrapParams {
            tau_life,
            r_load,
            p_survival,
            alpha,
            bkg_var_atoms,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn budget_terms_nonnegative_and_total_exact(
        d in detection_strategy(),
        t in trap_strategy(),
        n in 0.0..1e4f64,
    ) {
        let b = noise_budget(n, &d, &t);
        prop_assert!(b.bkg >= 0.0 && b.psn >= 0.0 && b.srn >= 0.0 && b.loss >= 0.0);
        // the stored total is the literal sum, no reordering tolerance
        prop_assert_eq!(b.total.to_bits(), (b.bkg + b.psn + b.srn + b.loss).to_bits());
    }

    #[test]
    fn scattering_rate_monotone(
        d in detection_strategy(),
        ds0 in 1e-6..1e3f64,
        ddet in 1e-3..1e9f64,
    ) {
        let r0 = scattering_rate(&d);
        let mut d_up = d;
        d_up.s0 += ds0;
        prop_assert!(scattering_rate(&d_up) >= r0);
        let mut d_near = d;
        d_near.detuning = d.detuning.abs();
        let mut d_far = d;
        d_far.detuning = d.detuning.abs() + ddet;
        let (near, far) = (scattering_rate(&d_near), scattering_rate(&d_far));
        prop_assert!(far <= near);
    }

    #[test]
    fn truncated_distribution_normalizes(
        p in 0.01..0.99f64,
        n in 2u32..40,
        target_off in 1u32..10,
    ) {
        let target = n.saturating_sub(target_off.min(n - 1)).max(0);
        prop_assume!(target < n);
        let dist = truncated_final_distribution(p, n, target).unwrap();
        let sum: f64 = dist.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12, "sum = {}", sum);
        prop_assert!(dist.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn truncated_distribution_matches_enumeration(
        p in 0.05..0.95f64,
        n in 2u32..12,
    ) {
        // brute force: enumerate all 2^n survival patterns
        let target = n - 1;
        let mut mass = vec![0.0f64; n as usize + 1];
        for pattern in 0u32..(1 << n) {
            let survivors = pattern.count_ones();
            let prob = p.powi(survivors as i32) * (1.0 - p).powi((n - survivors) as i32);
            mass[survivors as usize] += prob;
        }
        let norm: f64 = mass[..=target as usize].iter().sum();
        let dist = truncated_final_distribution(p, n, target).unwrap();
        for k in 0..=target as usize {
            prop_assert!((dist[k] - mass[k] / norm).abs() < 1e-12);
        }
    }

    #[test]
    fn suppression_invariant_under_count_scaling(
        counts in proptest::collection::vec(0u64..500, 2..20),
        factor in 2u64..50,
    ) {
        let occupied = counts.iter().filter(|&&c| c > 0).count();
        prop_assume!(occupied >= 2);
        let base = suppression_db(&counts).unwrap();
        let scaled: Vec<u64> = counts.iter().map(|c| c * factor).collect();
        let scaled_db = suppression_db(&scaled).unwrap();
        prop_assert!((base - scaled_db).abs() < 1e-9);
    }

    #[test]
    fn classification_partitions_all_pairs(
        levels in proptest::collection::vec(0u32..30, 2..40),
    ) {
        let (trace, cal) = trace_of_levels(&levels);
        let events = classify_transitions(&trace, &cal);
        prop_assert_eq!(events.len(), levels.len() - 1);
        let losses = events.iter().filter(|e| e.kind == EventKind::Loss).count();
        let loads = events.iter().filter(|e| e.kind == EventKind::Load).count();
        let survivals = events.iter().filter(|e| e.kind == EventKind::Survival).count();
        prop_assert_eq!(losses + loads + survivals, events.len());
        for e in &events {
            match e.kind {
                EventKind::Loss => prop_assert!(e.n_after < e.n_before),
                EventKind::Load => prop_assert!(e.n_after > e.n_before),
                EventKind::Survival => prop_assert_eq!(e.n_after, e.n_before),
            }
        }
    }

    #[test]
    fn two_sample_variance_offset_invariant(
        values in proptest::collection::vec(0.0..20.0f64, 3..30),
        offset in 1u32..50,
    ) {
        let (trace, cal) = trace_of_reals(&values);
        let base = two_sample_variance(&[trace], &cal).unwrap();
        let shifted: Vec<f64> = values.iter().map(|v| v + offset as f64).collect();
        let (trace, cal) = trace_of_reals(&shifted);
        let moved = two_sample_variance(&[trace], &cal).unwrap();
        prop_assert_eq!(base.bins.len(), moved.bins.len());
        for (a, b) in base.bins.iter().zip(&moved.bins) {
            prop_assert_eq!(a.n_atoms + offset, b.n_atoms);
            prop_assert!((a.variance - b.variance).abs() < 1e-9);
            prop_assert_eq!(a.n_pairs, b.n_pairs);
        }
    }

    #[test]
    fn model_types_roundtrip_bit_exact_through_json(
        gamma in finite_positive(),
        detuning in -1e9..1e9f64,
        s0 in 0.0..1e4f64,
        photoelectrons in -1e6..1e7f64,
        start in 0.0..1e4f64,
    ) {
        let d = DetectionParams {
            gamma,
            detuning,
            s0,
            eta: 0.0471,
            tau_det: 0.09,
            tau_hold: 0.22,
        };
        let trace = TimeTrace {
            samples: vec![ImageSample {
                index: 0,
                start_time: start,
                exposure: 0.09,
                photoelectrons,
                truth: Some(AtomTruth {
                    atoms_start: 3,
                    atoms_end: 2,
                    loss_times: vec![0.01234567890123],
                    load_times: vec![],
                }),
            }],
            params: d,
            provenance: Provenance::Simulated { seed: 1, run_index: 0 },
        };
        let json = serde_json::to_string(&trace).unwrap();
        let back: TimeTrace = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back.params.gamma.to_bits(), gamma.to_bits());
        prop_assert_eq!(back.params.detuning.to_bits(), detuning.to_bits());
        prop_assert_eq!(
            back.samples[0].photoelectrons.to_bits(),
            photoelectrons.to_bits()
        );
        prop_assert_eq!(back.samples[0].start_time.to_bits(), start.to_bits());
    }
}

fn trace_of_levels(levels: &[u32]) -> (TimeTrace, MixtureCalibration) {
    let reals: Vec<f64> = levels.iter().map(|&n| n as f64).collect();
    trace_of_reals(&reals)
}

fn trace_of_reals(values: &[f64]) -> (TimeTrace, MixtureCalibration) {
    let d = DetectionParams::rb87();
    let cal = MixtureCalibration::from_scale(600_000.0, 0.0, d.tau_det);
    let scale = 600_000.0 * d.tau_det;
    let trace = TimeTrace {
        samples: values
            .iter()
            .enumerate()
            .map(|(i, &v)| ImageSample {
                index: i,
                start_time: i as f64 * d.cycle_time(),
                exposure: d.tau_det,
                photoelectrons: v * scale,
                truth: None,
            })
            .collect(),
        params: d,
        provenance: Provenance::Ingested { file: "prop".into() },
    };
    (trace, cal)
}
