//! Monte-Carlo recovery checks: the estimators applied to simulated
//! campaigns must reproduce the injected environment parameters.

use motcount::estimation::{
    classify_transitions, estimate_lifetime, estimate_loading_rate, MixtureCalibration,
};
use motcount::model::{DetectionParams, TrapParams};
use motcount::sim::{simulate_detection_campaign, InitialAtoms, SimConfig};

fn campaign_config(seed: u64) -> SimConfig {
    SimConfig {
        detection: DetectionParams::rb87(),
        trap: TrapParams::rb87_mot(),
        n_images: 11,
        initial_atoms: InitialAtoms::Poisson(9.0),
        counts_per_atom_per_second: 6.0e5,
        seed,
    }
}

#[test]
fn lifetime_and_loading_are_recovered_across_campaigns() {
    // 20 independent campaigns, pooled: the aggregated estimates must sit
    // within two standard errors of the injected values
    let mut events = Vec::new();
    let mut n_pairs = 0u64;
    let mut cycle_time = 0.0;
    for campaign in 0..20u64 {
        let cfg = campaign_config(1000 + campaign);
        cycle_time = cfg.detection.cycle_time();
        let traces = simulate_detection_campaign(&cfg, 100).unwrap();
        let cal = MixtureCalibration::from_scale(
            cfg.counts_per_atom_per_second,
            0.0,
            cfg.detection.tau_det,
        );
        for trace in &traces {
            let trace_events = classify_transitions(trace, &cal);
            n_pairs += trace_events.len() as u64;
            events.extend(trace_events);
        }
    }

    let lifetime = estimate_lifetime(&events, cycle_time).unwrap();
    assert!(!lifetime.one_sided);
    assert!(
        (lifetime.tau_life - 540.0).abs() < 2.0 * lifetime.std_error,
        "lifetime {} +- {} vs injected 540",
        lifetime.tau_life,
        lifetime.std_error
    );

    let loading = estimate_loading_rate(&events, n_pairs, cycle_time).unwrap();
    assert!(!loading.one_sided);
    assert!(
        (loading.r_load - 0.014).abs() < 2.0 * loading.std_error,
        "loading {} +- {} vs injected 0.014",
        loading.r_load,
        loading.std_error
    );
}
