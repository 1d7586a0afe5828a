//! C ABI for the motcount simulator and analysis toolkit.
//!
//! Plain-old-data parameter structs mirror the Rust types field for field;
//! simulation results travel as opaque handles with accessor functions.
//! Every function returns an [`McStatus`] and writes results through out
//! pointers; panics never unwind across the boundary.
//!
//! The C header is generated into `include/motcount.h` at build time.

use motcount::estimation::{self_calibrate_integer, EstimationError};
use motcount::model::{validate, DetectionParams, TimeTrace, TrapParams};
use motcount::physics;
use motcount::sim::{simulate_run, InitialAtoms, LossPulse, SimConfig};
use motcount::stabilization::{
    fit_survival_probability, max_fidelity, suppression_db, truncated_final_distribution,
    TransitionTable,
};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status code of every C-ABI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Arguments violate a parameter invariant or a precondition.
    InvalidInput = 2,
    /// The requested quantity cannot be identified from the data.
    Unidentifiable = 3,
    /// Two calibration minima are statistically indistinguishable.
    Ambiguous = 4,
    /// The output buffer is too small.
    BufferTooSmall = 5,
    /// An internal panic was caught; the out parameters are untouched.
    Panic = 6,
}

/// Optical and detection-chain constants (angular frequencies in rad/s).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct McDetectionParams {
    pub gamma_rad_s: f64,
    pub detuning_rad_s: f64,
    pub s0: f64,
    pub eta: f64,
    pub tau_det_s: f64,
    pub tau_hold_s: f64,
}

/// Stochastic trap environment.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct McTrapParams {
    pub tau_life_s: f64,
    pub r_load_per_s: f64,
    pub p_survival: f64,
    pub alpha_sqrt_s: f64,
    pub bkg_var_atoms: f64,
}

/// Measurement-variance budget, all terms in atoms².
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct McNoiseBudget {
    pub bkg: f64,
    pub psn: f64,
    pub srn: f64,
    pub loss: f64,
    pub total: f64,
}

/// Initial atom-number distribution selector for [`McSimConfig`].
pub const MC_INITIAL_FIXED: u32 = 0;
pub const MC_INITIAL_POISSON: u32 = 1;

/// Simulation run description.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct McSimConfig {
    pub detection: McDetectionParams,
    pub trap: McTrapParams,
    pub n_images: u64,
    /// `MC_INITIAL_FIXED` or `MC_INITIAL_POISSON`.
    pub initial_kind: u32,
    /// Atom count (fixed) or mean (poisson).
    pub initial_value: f64,
    pub counts_per_atom_per_s: f64,
    pub seed: u64,
}

/// Engineered loss pulse inside the hold period.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct McLossPulse {
    pub duration_s: f64,
    pub placement_s: f64,
}

/// One image of a simulated trace.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct McSample {
    pub index: u64,
    pub start_time_s: f64,
    pub exposure_s: f64,
    pub photoelectrons: f64,
    /// 1 when ground truth is attached.
    pub has_truth: u8,
    pub atoms_start: u32,
    pub atoms_end: u32,
}

/// Opaque fluorescence trace handle; free with [`mc_trace_free`].
pub struct McTrace {
    inner: TimeTrace,
}

fn to_detection(d: &McDetectionParams) -> DetectionParams {
    DetectionParams {
        gamma: d.gamma_rad_s,
        detuning: d.detuning_rad_s,
        s0: d.s0,
        eta: d.eta,
        tau_det: d.tau_det_s,
        tau_hold: d.tau_hold_s,
    }
}

fn to_trap(t: &McTrapParams) -> TrapParams {
    TrapParams {
        tau_life: t.tau_life_s,
        r_load: t.r_load_per_s,
        p_survival: t.p_survival,
        alpha: t.alpha_sqrt_s,
        bkg_var_atoms: t.bkg_var_atoms,
    }
}

fn guarded(f: impl FnOnce() -> McStatus) -> McStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(McStatus::Panic)
}

/// Version string of the library; static storage, do not free.
#[no_mangle]
pub extern "C" fn mc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Photon scattering rate of a single atom (photons/s).
///
/// # Safety
/// `d` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mc_scattering_rate(
    d: *const McDetectionParams,
    out: *mut f64,
) -> McStatus {
    if d.is_null() || out.is_null() {
        return McStatus::NullPointer;
    }
    guarded(|| {
        *out = physics::scattering_rate(&to_detection(&*d));
        McStatus::Ok
    })
}

/// Photoelectrons one atom contributes to one image.
///
/// # Safety
/// `d` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mc_photoelectrons_per_atom(
    d: *const McDetectionParams,
    out: *mut f64,
) -> McStatus {
    if d.is_null() || out.is_null() {
        return McStatus::NullPointer;
    }
    guarded(|| {
        *out = physics::photoelectrons_per_atom(&to_detection(&*d));
        McStatus::Ok
    })
}

/// Variance budget of one atom-number measurement at `n_atoms`.
///
/// # Safety
/// `d`, `t` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mc_noise_budget(
    n_atoms: f64,
    d: *const McDetectionParams,
    t: *const McTrapParams,
    out: *mut McNoiseBudget,
) -> McStatus {
    if d.is_null() || t.is_null() || out.is_null() {
        return McStatus::NullPointer;
    }
    guarded(|| {
        let b = physics::noise_budget(n_atoms, &to_detection(&*d), &to_trap(&*t));
        *out = McNoiseBudget {
            bkg: b.bkg,
            psn: b.psn,
            srn: b.srn,
            loss: b.loss,
            total: b.total,
        };
        McStatus::Ok
    })
}

/// Largest atom number at which neighbouring numbers stay resolvable.
///
/// # Safety
/// `d`, `t` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mc_max_resolvable_atoms(
    d: *const McDetectionParams,
    t: *const McTrapParams,
    out: *mut f64,
) -> McStatus {
    if d.is_null() || t.is_null() || out.is_null() {
        return McStatus::NullPointer;
    }
    guarded(|| match physics::max_resolvable_atoms(&to_detection(&*d), &to_trap(&*t)) {
        Ok(n) => {
            *out = n;
            McStatus::Ok
        }
        Err(_) => McStatus::InvalidInput,
    })
}

/// Equivalent laser frequency noise (Hz) and absolute s0 deviation that
/// alone would reproduce the fluorescence noise parameter `alpha`.
///
/// # Safety
/// `d` and both out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mc_equivalent_noise_sources(
    alpha_sqrt_s: f64,
    d: *const McDetectionParams,
    detuning_hz_out: *mut f64,
    saturation_out: *mut f64,
) -> McStatus {
    if d.is_null() || detuning_hz_out.is_null() || saturation_out.is_null() {
        return McStatus::NullPointer;
    }
    guarded(
        || match physics::equivalent_noise_sources(alpha_sqrt_s, &to_detection(&*d)) {
            Ok(eq) => {
                *detuning_hz_out = eq.detuning_hz;
                *saturation_out = eq.saturation;
                McStatus::Ok
            }
            Err(_) => McStatus::InvalidInput,
        },
    )
}

/// Simulates run `run_index` of the configured experiment. `pulse` may be
/// null for pulse-free runs. On success the caller owns the returned trace
/// and must release it with [`mc_trace_free`].
///
/// # Safety
/// `cfg` and `out` must be valid pointers; `pulse` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn mc_simulate_trace(
    cfg: *const McSimConfig,
    pulse: *const McLossPulse,
    run_index: u64,
    out: *mut *mut McTrace,
) -> McStatus {
    if cfg.is_null() || out.is_null() {
        return McStatus::NullPointer;
    }
    guarded(|| {
        let c = &*cfg;
        let initial = match c.initial_kind {
            MC_INITIAL_FIXED => InitialAtoms::Fixed(c.initial_value as u32),
            MC_INITIAL_POISSON => InitialAtoms::Poisson(c.initial_value),
            _ => return McStatus::InvalidInput,
        };
        let sim_cfg = SimConfig {
            detection: to_detection(&c.detection),
            trap: to_trap(&c.trap),
            n_images: c.n_images as usize,
            initial_atoms: initial,
            counts_per_atom_per_second: c.counts_per_atom_per_s,
            seed: c.seed,
        };
        let rust_pulse = if pulse.is_null() {
            None
        } else {
            Some(LossPulse {
                duration: (*pulse).duration_s,
                placement: (*pulse).placement_s,
            })
        };
        match simulate_run(&sim_cfg, rust_pulse.as_ref(), run_index) {
            Ok(trace) => {
                *out = Box::into_raw(Box::new(McTrace { inner: trace }));
                McStatus::Ok
            }
            Err(_) => McStatus::InvalidInput,
        }
    })
}

/// Number of images in a trace; 0 for a null handle.
///
/// # Safety
/// `trace` must be a live handle from [`mc_simulate_trace`] or null.
#[no_mangle]
pub unsafe extern "C" fn mc_trace_len(trace: *const McTrace) -> usize {
    if trace.is_null() {
        return 0;
    }
    (*trace).inner.samples.len()
}

/// Copies image `index` of the trace into `out`.
///
/// # Safety
/// `trace` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mc_trace_sample(
    trace: *const McTrace,
    index: usize,
    out: *mut McSample,
) -> McStatus {
    if trace.is_null() || out.is_null() {
        return McStatus::NullPointer;
    }
    let samples = &(*trace).inner.samples;
    let Some(s) = samples.get(index) else {
        return McStatus::InvalidInput;
    };
    *out = McSample {
        index: s.index as u64,
        start_time_s: s.start_time,
        exposure_s: s.exposure,
        photoelectrons: s.photoelectrons,
        has_truth: u8::from(s.truth.is_some()),
        atoms_start: s.truth.as_ref().map(|t| t.atoms_start).unwrap_or(0),
        atoms_end: s.truth.as_ref().map(|t| t.atoms_end).unwrap_or(0),
    };
    McStatus::Ok
}

/// Releases a trace returned by [`mc_simulate_trace`]. Null is a no-op.
///
/// # Safety
/// `trace` must originate from [`mc_simulate_trace`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mc_trace_free(trace: *mut McTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Validates a parameter set; returns Ok when every invariant holds.
///
/// # Safety
/// `d` and `t` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mc_validate_params(
    d: *const McDetectionParams,
    t: *const McTrapParams,
) -> McStatus {
    if d.is_null() || t.is_null() {
        return McStatus::NullPointer;
    }
    guarded(|| {
        if validate(&to_detection(&*d), &to_trap(&*t)).is_valid() {
            McStatus::Ok
        } else {
            McStatus::InvalidInput
        }
    })
}

/// Final-number distribution P(0..=target) after the crossing loss step
/// from `pre_threshold_n` atoms. `out` must hold `target + 1` values.
///
/// # Safety
/// `out` must point to at least `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mc_truncated_final_distribution(
    p_survival: f64,
    pre_threshold_n: u32,
    target: u32,
    out: *mut f64,
    out_len: usize,
) -> McStatus {
    if out.is_null() {
        return McStatus::NullPointer;
    }
    if out_len < target as usize + 1 {
        return McStatus::BufferTooSmall;
    }
    guarded(
        || match truncated_final_distribution(p_survival, pre_threshold_n, target) {
            Ok(dist) => {
                let slice = std::slice::from_raw_parts_mut(out, target as usize + 1);
                slice.copy_from_slice(&dist);
                McStatus::Ok
            }
            Err(_) => McStatus::InvalidInput,
        },
    )
}

/// Best attainable preparation fidelity for the given loss step.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mc_max_fidelity(
    p_survival: f64,
    target: u32,
    out: *mut f64,
) -> McStatus {
    if out.is_null() {
        return McStatus::NullPointer;
    }
    guarded(|| match max_fidelity(p_survival, target) {
        Ok(f) => {
            *out = f;
            McStatus::Ok
        }
        Err(_) => McStatus::InvalidInput,
    })
}

/// Sub-shot-noise suppression (dB) of a final-number histogram where
/// `counts[k]` is the number of runs ending with k atoms. Writes +inf when
/// the sample variance is zero.
///
/// # Safety
/// `counts` must point to `len` readable values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mc_suppression_db(
    counts: *const u64,
    len: usize,
    out: *mut f64,
) -> McStatus {
    if counts.is_null() || out.is_null() {
        return McStatus::NullPointer;
    }
    guarded(|| {
        let slice = std::slice::from_raw_parts(counts, len);
        match suppression_db(slice) {
            Ok(db) => {
                *out = db;
                McStatus::Ok
            }
            Err(_) => McStatus::InvalidInput,
        }
    })
}

/// Joint binomial fit of the survival probability over transition rows
/// (n_in[i] -> n_out[i], seen counts[i] times).
///
/// # Safety
/// The three arrays must each hold `len` readable values; the out pointers
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn mc_fit_survival_probability(
    n_in: *const u32,
    n_out: *const u32,
    counts: *const u64,
    len: usize,
    p_out: *mut f64,
    std_error_out: *mut f64,
) -> McStatus {
    if n_in.is_null() || n_out.is_null() || counts.is_null() || p_out.is_null()
        || std_error_out.is_null()
    {
        return McStatus::NullPointer;
    }
    guarded(|| {
        let n_in = std::slice::from_raw_parts(n_in, len);
        let n_out = std::slice::from_raw_parts(n_out, len);
        let counts = std::slice::from_raw_parts(counts, len);
        let mut table = TransitionTable::default();
        for i in 0..len {
            for _ in 0..counts[i] {
                table.record(n_in[i], n_out[i]);
            }
        }
        match fit_survival_probability(&table) {
            Ok(fit) => {
                *p_out = fit.p_survival;
                *std_error_out = fit.std_error;
                McStatus::Ok
            }
            Err(_) => McStatus::InvalidInput,
        }
    })
}

/// Refines the counts-per-atom scale against the integer lattice of the
/// signals, searching `nominal_scale * (1 ± search_window)`.
///
/// # Safety
/// `signals` must point to `len` readable values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mc_self_calibrate(
    signals: *const f64,
    len: usize,
    nominal_scale: f64,
    search_window: f64,
    out: *mut f64,
) -> McStatus {
    if signals.is_null() || out.is_null() {
        return McStatus::NullPointer;
    }
    guarded(|| {
        let slice = std::slice::from_raw_parts(signals, len);
        match self_calibrate_integer(slice, nominal_scale, search_window) {
            Ok(scale) => {
                *out = scale;
                McStatus::Ok
            }
            Err(EstimationError::AmbiguousScale { .. }) => McStatus::Ambiguous,
            Err(_) => McStatus::InvalidInput,
        }
    })
}
