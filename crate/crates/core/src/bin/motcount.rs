//! Command-line surface: simulate | analyze | stabilize | calibrate |
//! noisefit | report.
//!
//! Exit codes: 0 ok, 2 config error, 3 validation error, 4 partial
//! analysis failure, 5 I/O error.

use clap::{Parser, Subcommand};
use motcount::config::{ConfigError, ExperimentConfig};
use motcount::estimation::{
    build_histogram, classify_transitions, estimate_lifetime, estimate_loading_rate,
    estimate_peak_spacing, fit_mixture, fit_noise_model, self_calibrate_integer,
    two_sample_variance_with, EstimationError, EventKind, EventRecord, MixtureCalibration,
    NoiseModelFit, PairSelection, SignalHistogram, VarianceTable,
};
use motcount::io::{
    list_trace_files, read_trace_csv, write_csv_with, write_json, write_trace_csv, IoError,
    RunManifest,
};
use motcount::model::TimeTrace;
use motcount::physics;
use motcount::sim::{simulate_run, SimConfig};
use motcount::stabilization::{
    run_controller, ControllerRun, StabilizationError, TransitionTable,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "motcount",
    version,
    about = "Simulator and analysis toolkit for single-atom-resolved MOT fluorescence detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate detection runs and write one trace CSV per run.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replace the config seed.
        #[arg(long)]
        seed_override: Option<u64>,
        /// Replace the configured number of runs.
        #[arg(long)]
        runs: Option<usize>,
        /// Worker threads for parallel runs.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run the full analysis chain on a directory of trace files.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Histogram bins per expected single-atom spacing.
        #[arg(long, default_value_t = 16)]
        bins_per_atom: usize,
        /// Number of Gaussian peaks in the calibration fit.
        #[arg(long, default_value_t = 20)]
        k_peaks: usize,
        /// Largest atom number entering the noise-model fit.
        #[arg(long, default_value_t = 36)]
        n_cut: u32,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run closed-loop stabilization episodes and report the outcome.
    Stabilize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed_override: Option<u64>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Refine the counts-per-atom scale of each run against the integer
    /// lattice of its own signals.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Relative half-width of the scale search window.
        #[arg(long, default_value_t = 0.10)]
        window: f64,
        /// Nominal scale to search around (photoelectrons/atom/s);
        /// defaults to the configured counts_per_atom_per_s.
        #[arg(long)]
        nominal_cps: Option<f64>,
    },
    /// Two-sample variance table and noise-model fit only.
    Noisefit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Calibration JSON from `analyze`; defaults to the configured
        /// counts_per_atom_per_s with zero intercept.
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(long, default_value_t = 36)]
        n_cut: u32,
    },
    /// Summarize an output directory and verify its manifest digests.
    Report {
        #[arg(long)]
        dir: PathBuf,
        /// Output format: text or json.
        #[arg(long, default_value = "text")]
        format: String,
    },
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Validation(String),
    Partial(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Partial(_) => 4,
            CliError::Io(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m)
            | CliError::Validation(m)
            | CliError::Partial(m)
            | CliError::Io(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Invalid(_) => CliError::Validation(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<StabilizationError> for CliError {
    fn from(e: StabilizationError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<motcount::sim::SimError> for CliError {
    fn from(e: motcount::sim::SimError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            seed_override,
            runs,
            jobs,
        } => cmd_simulate(&config, &out, seed_override, runs, jobs),
        Command::Analyze {
            config,
            traces,
            out,
            bins_per_atom,
            k_peaks,
            n_cut,
            jobs,
        } => cmd_analyze(&config, &traces, &out, bins_per_atom, k_peaks, n_cut, jobs),
        Command::Stabilize {
            config,
            out,
            seed_override,
            runs,
            jobs,
        } => cmd_stabilize(&config, &out, seed_override, runs, jobs),
        Command::Calibrate {
            config,
            traces,
            out,
            window,
            nominal_cps,
        } => cmd_calibrate(&config, &traces, &out, window, nominal_cps),
        Command::Noisefit {
            config,
            traces,
            out,
            calibration,
            n_cut,
        } => cmd_noisefit(&config, &traces, &out, calibration.as_deref(), n_cut),
        Command::Report { dir, format } => cmd_report(&dir, &format),
    }
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("cannot build a {n}-thread pool: {e}")))
            .map(|pool| pool.install(f)),
        None => Ok(f()),
    }
}

/// Resolves the config with command-line overrides applied, so the
/// manifest records exactly what ran.
fn resolve_config(
    path: &Path,
    seed_override: Option<u64>,
    runs: Option<usize>,
) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::from_path(path)?;
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    if let Some(n) = runs {
        cfg.run.n_runs = n;
    }
    cfg.check()?;
    Ok(cfg)
}

fn prepare_out_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)?;
    // stale traces from a previous, larger run would otherwise leak into
    // the manifest
    for path in list_trace_files(out)? {
        std::fs::remove_file(path)?;
    }
    Ok(())
}

fn trace_file_name(run: usize) -> String {
    format!("trace_{run:05}.csv")
}

fn cmd_simulate(
    config: &Path,
    out: &Path,
    seed_override: Option<u64>,
    runs: Option<usize>,
    jobs: Option<usize>,
) -> Result<(), CliError> {
    let cfg = resolve_config(config, seed_override, runs)?;
    let sim_cfg = cfg.sim_config(None, None);
    let pulse = cfg.loss_pulse();
    let n_runs = cfg.run.n_runs;
    prepare_out_dir(out)?;

    let traces: Vec<Result<TimeTrace, motcount::sim::SimError>> = with_pool(jobs, || {
        (0..n_runs)
            .into_par_iter()
            .map(|i| simulate_run(&sim_cfg, pulse.as_ref(), i as u64))
            .collect()
    })?;
    let pulsed = vec![pulse.is_some(); cfg.run.n_images.saturating_sub(1)];
    for (i, trace) in traces.into_iter().enumerate() {
        let trace = trace?;
        write_trace_csv(&out.join(trace_file_name(i)), &trace, i as u64, Some(&pulsed))?;
    }

    RunManifest::new("simulate", cfg.seed, cfg).digest_outputs_and_write(out)?;
    Ok(())
}

/// Parsed traces plus the files that failed; analysis proceeds on the rest.
struct IngestedTraces {
    traces: Vec<TimeTrace>,
    failures: Vec<String>,
}

fn ingest_traces(
    dir: &Path,
    cfg: &ExperimentConfig,
    jobs: Option<usize>,
) -> Result<IngestedTraces, CliError> {
    let files = list_trace_files(dir)?;
    if files.is_empty() {
        return Err(CliError::Validation(format!(
            "no trace_*.csv files in {}",
            dir.display()
        )));
    }
    let params = cfg.detection_params();
    let results: Vec<Result<TimeTrace, IoError>> = with_pool(jobs, || {
        files
            .par_iter()
            .map(|f| read_trace_csv(f, params))
            .collect()
    })?;
    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(t) => traces.push(t),
            Err(e) => failures.push(e.to_string()),
        }
    }
    if traces.is_empty() {
        return Err(CliError::Validation(
            "every trace file failed to parse".to_string(),
        ));
    }
    Ok(IngestedTraces { traces, failures })
}

fn write_histogram_csv(path: &Path, h: &SignalHistogram) -> Result<(), IoError> {
    write_csv_with(path, &["bin_lo", "bin_hi", "count"], |w| {
        for i in 0..h.n_bins() {
            writeln!(w, "{},{},{}", h.bin_edges[i], h.bin_edges[i + 1], h.counts[i])?;
        }
        Ok(())
    })
}

fn write_variance_csv(path: &Path, table: &VarianceTable) -> Result<(), IoError> {
    write_csv_with(
        path,
        &["n_atoms", "variance_atoms2", "std_error", "n_pairs"],
        |w| {
            for b in &table.bins {
                writeln!(w, "{},{},{},{}", b.n_atoms, b.variance, b.std_error, b.n_pairs)?;
            }
            Ok(())
        },
    )
}

fn write_noise_curve_csv(
    path: &Path,
    cfg: &ExperimentConfig,
    alpha: f64,
    n_cut: u32,
) -> Result<(), IoError> {
    let d = cfg.detection_params();
    let t = motcount::model::TrapParams {
        alpha,
        ..cfg.trap_params()
    };
    write_csv_with(path, &["n_atoms", "bkg", "psn", "srn", "loss", "total"], |w| {
        let mut half_steps = 0u32;
        loop {
            let n = half_steps as f64 * 0.5;
            if n > n_cut as f64 + 4.0 {
                break;
            }
            let b = physics::noise_budget(n, &d, &t);
            writeln!(w, "{},{},{},{},{},{}", n, b.bkg, b.psn, b.srn, b.loss, b.total)?;
            half_steps += 1;
        }
        Ok(())
    })
}

/// Noise-fit report written even when α is unidentifiable.
#[derive(Serialize, Deserialize)]
struct NoiseFitReport {
    fit: Option<NoiseModelFit>,
    alpha_upper_bound: Option<f64>,
    error: Option<String>,
    n_cut: u32,
}

#[derive(Serialize)]
struct EstimatesReport {
    lifetime: motcount::estimation::LifetimeEstimate,
    loading: motcount::estimation::LoadingEstimate,
    cycle_time_s: f64,
    n_pairs: u64,
}

#[allow(clippy::too_many_arguments)]
fn cmd_analyze(
    config: &Path,
    traces_dir: &Path,
    out: &Path,
    bins_per_atom: usize,
    k_peaks: usize,
    n_cut: u32,
    jobs: Option<usize>,
) -> Result<(), CliError> {
    let cfg = ExperimentConfig::from_path(config)?;
    let ingested = ingest_traces(traces_dir, &cfg, jobs)?;
    std::fs::create_dir_all(out)?;
    let d = cfg.detection_params();

    let histogram = build_histogram(&ingested.traces, bins_per_atom)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    write_histogram_csv(&out.join("histogram.csv"), &histogram)?;

    let spacing = estimate_peak_spacing(&histogram).map_err(|e| match e {
        EstimationError::NoPeriodicity => CliError::Validation(
            "calibration refused: the histogram shows no periodic integer-peak structure \
             (too few samples or too few distinct atom numbers); simulate a larger campaign \
             or adjust --bins-per-atom"
                .to_string(),
        ),
        other => CliError::Validation(other.to_string()),
    })?;

    let cal = fit_mixture(&histogram, k_peaks, spacing, d.tau_det)
        .map_err(|e| CliError::Validation(format!("calibration refused: {e}")))?;
    if cal.diagnostics.degenerate {
        return Err(CliError::Validation(format!(
            "calibration refused: the {k_peaks}-peak fit is degenerate on this data \
             ({}); reduce --k-peaks or provide a campaign spanning more atom numbers",
            cal.diagnostics.notes.join("; ")
        )));
    }
    // the regression slope must agree with the autocorrelation spacing, or
    // the peak indexing cannot be trusted
    if (cal.slope - spacing).abs() / spacing > 0.25 {
        return Err(CliError::Validation(format!(
            "calibration refused: fitted counts/atom {} disagrees with the histogram \
             peak spacing {spacing}; the peak comb was not resolved",
            cal.slope
        )));
    }
    write_json(&out.join("calibration.json"), &cal)?;
    write_csv_with(
        &out.join("peaks.csv"),
        &["peak_index", "center_pe", "width_pe", "amplitude"],
        |w| {
            for (i, p) in cal.peaks.iter().enumerate() {
                writeln!(w, "{},{},{},{}", i, p.center, p.width, p.amplitude)?;
            }
            Ok(())
        },
    )?;

    // event classification, per run
    let mut all_events: Vec<(usize, Vec<EventRecord>)> = Vec::new();
    for (run, trace) in ingested.traces.iter().enumerate() {
        all_events.push((run, classify_transitions(trace, &cal)));
    }
    write_csv_with(
        &out.join("events.csv"),
        &["run", "pair", "n_before", "n_after", "kind"],
        |w| {
            for (run, events) in &all_events {
                for e in events {
                    let kind = match e.kind {
                        EventKind::Loss => "loss",
                        EventKind::Load => "load",
                        EventKind::Survival => "survival",
                    };
                    writeln!(w, "{},{},{},{},{}", run, e.pair_index, e.n_before, e.n_after, kind)?;
                }
            }
            Ok(())
        },
    )?;

    let flat: Vec<EventRecord> = all_events.iter().flat_map(|(_, e)| e.iter().copied()).collect();
    let max_n = flat.iter().map(|e| e.n_before).max().unwrap_or(0);
    write_csv_with(
        &out.join("event_histogram.csv"),
        &["n_before", "loss", "survival", "load"],
        |w| {
            for n in 0..=max_n {
                let of_kind = |k: EventKind| {
                    flat.iter()
                        .filter(|e| e.n_before == n && e.kind == k)
                        .count()
                };
                writeln!(
                    w,
                    "{},{},{},{}",
                    n,
                    of_kind(EventKind::Loss),
                    of_kind(EventKind::Survival),
                    of_kind(EventKind::Load)
                )?;
            }
            Ok(())
        },
    )?;

    let cycle_time = d.cycle_time();
    let lifetime = estimate_lifetime(&flat, cycle_time)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let loading = estimate_loading_rate(&flat, flat.len() as u64, cycle_time)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    write_json(
        &out.join("estimates.json"),
        &EstimatesReport {
            lifetime,
            loading,
            cycle_time_s: cycle_time,
            n_pairs: flat.len() as u64,
        },
    )?;

    let table = two_sample_variance_with(&ingested.traces, &cal, PairSelection::SameLevel)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    write_variance_csv(&out.join("variance.csv"), &table)?;

    let trap = cfg.trap_params();
    let noise_report = match fit_noise_model(&table, &d, &trap, n_cut) {
        Ok(fit) => {
            write_noise_curve_csv(&out.join("noise_model_curve.csv"), &cfg, fit.alpha, n_cut)?;
            NoiseFitReport {
                fit: Some(fit),
                alpha_upper_bound: None,
                error: None,
                n_cut,
            }
        }
        Err(EstimationError::AlphaUnidentifiable { upper_bound }) => NoiseFitReport {
            fit: None,
            alpha_upper_bound: Some(upper_bound),
            error: Some("alpha unidentifiable: data are shot-noise dominated".to_string()),
            n_cut,
        },
        Err(e) => NoiseFitReport {
            fit: None,
            alpha_upper_bound: None,
            error: Some(e.to_string()),
            n_cut,
        },
    };
    write_json(&out.join("noisefit.json"), &noise_report)?;

    RunManifest::new("analyze", cfg.seed, cfg.clone()).digest_outputs_and_write(out)?;

    if !ingested.failures.is_empty() {
        return Err(CliError::Partial(format!(
            "analysis completed on {} traces, {} file(s) skipped: {}",
            ingested.traces.len(),
            ingested.failures.len(),
            ingested.failures.join("; ")
        )));
    }
    Ok(())
}

fn cmd_stabilize(
    config: &Path,
    out: &Path,
    seed_override: Option<u64>,
    runs: Option<usize>,
    jobs: Option<usize>,
) -> Result<(), CliError> {
    let cfg = resolve_config(config, seed_override, runs)?;
    let ctrl = cfg.controller_config()?;
    let sim_cfg: SimConfig = cfg.sim_config(None, None);
    let n_runs = cfg.run.n_runs;
    prepare_out_dir(out)?;

    let runs_result: Vec<Result<ControllerRun, StabilizationError>> = with_pool(jobs, || {
        (0..n_runs)
            .into_par_iter()
            .map(|i| run_controller(&ctrl, &sim_cfg, i as u64))
            .collect()
    })?;
    let mut episodes = Vec::with_capacity(n_runs);
    for (i, r) in runs_result.into_iter().enumerate() {
        let episode = r?;
        write_trace_csv(
            &out.join(trace_file_name(i)),
            &episode.trace,
            i as u64,
            Some(&episode.pulsed_after),
        )?;
        episodes.push(episode);
    }

    let report = motcount::stabilization::summarize(&episodes, ctrl.target)?;
    write_json(&out.join("report.json"), &report)?;

    let table = TransitionTable::from_runs(&episodes);
    write_csv_with(&out.join("transitions.csv"), &["n_in", "n_out", "count"], |w| {
        for (n_in, n_out, count) in table.entries() {
            writeln!(w, "{n_in},{n_out},{count}")?;
        }
        Ok(())
    })?;

    write_csv_with(&out.join("final_histogram.csv"), &["atoms", "count"], |w| {
        for (atoms, count) in &report.final_histogram {
            writeln!(w, "{atoms},{count}")?;
        }
        Ok(())
    })?;

    RunManifest::new("stabilize", cfg.seed, cfg).digest_outputs_and_write(out)?;
    Ok(())
}

fn cmd_calibrate(
    config: &Path,
    traces_dir: &Path,
    out: &Path,
    window: f64,
    nominal_cps: Option<f64>,
) -> Result<(), CliError> {
    let cfg = ExperimentConfig::from_path(config)?;
    let ingested = ingest_traces(traces_dir, &cfg, None)?;
    std::fs::create_dir_all(out)?;
    let tau_det = cfg.detection.tau_det_s;
    let nominal = nominal_cps.unwrap_or(cfg.run.counts_per_atom_per_s) * tau_det;

    let results: Vec<(usize, Result<f64, EstimationError>)> = ingested
        .traces
        .iter()
        .enumerate()
        .map(|(run, trace)| {
            let signals: Vec<f64> = trace.samples.iter().map(|s| s.photoelectrons).collect();
            (run, self_calibrate_integer(&signals, nominal, window))
        })
        .collect();
    let n_failed = results.iter().filter(|(_, r)| r.is_err()).count();
    write_csv_with(
        &out.join("scales.csv"),
        &["run", "scale_pe_per_atom_image", "counts_per_atom_per_s", "status"],
        |w| {
            for (run, result) in &results {
                match result {
                    Ok(scale) => {
                        writeln!(w, "{},{},{},ok", run, scale, scale / tau_det)?;
                    }
                    Err(e) => {
                        let msg = e.to_string().replace(',', ";");
                        writeln!(w, "{run},,,{msg}")?;
                    }
                }
            }
            Ok(())
        },
    )?;

    RunManifest::new("calibrate", cfg.seed, cfg).digest_outputs_and_write(out)?;

    if n_failed == results.len() {
        return Err(CliError::Validation(
            "self-calibration failed on every run".to_string(),
        ));
    }
    if n_failed > 0 || !ingested.failures.is_empty() {
        return Err(CliError::Partial(format!(
            "{} run(s) not calibrated, {} file(s) skipped",
            n_failed,
            ingested.failures.len()
        )));
    }
    Ok(())
}

fn cmd_noisefit(
    config: &Path,
    traces_dir: &Path,
    out: &Path,
    calibration: Option<&Path>,
    n_cut: u32,
) -> Result<(), CliError> {
    let cfg = ExperimentConfig::from_path(config)?;
    let ingested = ingest_traces(traces_dir, &cfg, None)?;
    std::fs::create_dir_all(out)?;
    let d = cfg.detection_params();

    let cal: MixtureCalibration = match calibration {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => MixtureCalibration::from_scale(cfg.run.counts_per_atom_per_s, 0.0, d.tau_det),
    };

    let table = two_sample_variance_with(&ingested.traces, &cal, PairSelection::SameLevel)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    write_variance_csv(&out.join("variance.csv"), &table)?;

    let trap = cfg.trap_params();
    let report = match fit_noise_model(&table, &d, &trap, n_cut) {
        Ok(fit) => {
            write_noise_curve_csv(&out.join("noise_model_curve.csv"), &cfg, fit.alpha, n_cut)?;
            NoiseFitReport {
                fit: Some(fit),
                alpha_upper_bound: None,
                error: None,
                n_cut,
            }
        }
        Err(EstimationError::AlphaUnidentifiable { upper_bound }) => NoiseFitReport {
            fit: None,
            alpha_upper_bound: Some(upper_bound),
            error: Some("alpha unidentifiable: data are shot-noise dominated".to_string()),
            n_cut,
        },
        Err(e) => return Err(CliError::Validation(e.to_string())),
    };
    write_json(&out.join("noisefit.json"), &report)?;

    RunManifest::new("noisefit", cfg.seed, cfg).digest_outputs_and_write(out)?;

    if !ingested.failures.is_empty() {
        return Err(CliError::Partial(format!(
            "{} file(s) skipped",
            ingested.failures.len()
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct ReportSummary {
    tool: String,
    version: String,
    command: String,
    seed: u64,
    n_outputs: usize,
    digests_ok: bool,
    mismatched: Vec<String>,
    stabilization: Option<serde_json::Value>,
    noisefit: Option<serde_json::Value>,
    estimates: Option<serde_json::Value>,
    calibration_counts_per_atom_per_s: Option<f64>,
}

fn cmd_report(dir: &Path, format: &str) -> Result<(), CliError> {
    let manifest = RunManifest::read(dir)?;
    let mismatched = manifest.verify(dir)?;

    let read_value = |name: &str| -> Option<serde_json::Value> {
        std::fs::read_to_string(dir.join(name))
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
    };
    let calibration_scale = read_value("calibration.json").and_then(|v| {
        v.get("counts_per_atom_per_second")
            .and_then(serde_json::Value::as_f64)
    });

    let summary = ReportSummary {
        tool: manifest.tool.clone(),
        version: manifest.version.clone(),
        command: manifest.command.clone(),
        seed: manifest.seed,
        n_outputs: manifest.outputs.len(),
        digests_ok: mismatched.is_empty(),
        mismatched: mismatched.clone(),
        stabilization: read_value("report.json"),
        noisefit: read_value("noisefit.json"),
        estimates: read_value("estimates.json"),
        calibration_counts_per_atom_per_s: calibration_scale,
    };

    match format {
        "json" => println!("{}", serde_json::to_string_pretty(&summary).unwrap()),
        "text" => {
            println!(
                "{} {} :: {} (seed {})",
                summary.tool, summary.version, summary.command, summary.seed
            );
            println!(
                "outputs: {} file(s), digests {}",
                summary.n_outputs,
                if summary.digests_ok { "ok" } else { "MISMATCH" }
            );
            for m in &summary.mismatched {
                println!("  mismatched: {m}");
            }
            if let Some(scale) = summary.calibration_counts_per_atom_per_s {
                println!("calibration: {scale} photoelectrons/atom/s");
            }
            if let Some(est) = &summary.estimates {
                println!("estimates: {est}");
            }
            if let Some(nf) = &summary.noisefit {
                println!("noisefit: {nf}");
            }
            if let Some(st) = &summary.stabilization {
                println!("stabilization: {st}");
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown --format {other}; use text or json"
            )))
        }
    }

    if !mismatched.is_empty() {
        return Err(CliError::Validation(format!(
            "{} output file(s) do not match their manifest digests",
            mismatched.len()
        )));
    }
    Ok(())
}
