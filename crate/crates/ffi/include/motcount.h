#ifndef MOTCOUNT_H
#define MOTCOUNT_H

#pragma once

/* This file is generated by cbindgen from motcount-ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Initial atom-number distribution selector for [`McSimConfig`].
#define MC_INITIAL_FIXED 0

#define MC_INITIAL_POISSON 1

// Status code of every C-ABI call.
typedef enum McStatus {
  McStatus_Ok = 0,
  // A required pointer argument was null.
  McStatus_NullPointer = 1,
  // Arguments violate a parameter invariant or a precondition.
  McStatus_InvalidInput = 2,
  // The requested quantity cannot be identified from the data.
  McStatus_Unidentifiable = 3,
  // Two calibration minima are statistically indistinguishable.
  McStatus_Ambiguous = 4,
  // The output buffer is too small.
  McStatus_BufferTooSmall = 5,
  // An internal panic was caught; the out parameters are untouched.
  McStatus_Panic = 6,
} McStatus;

// Opaque fluorescence trace handle; free with [`mc_trace_free`].
typedef struct McTrace McTrace;

// Optical and detection-chain constants (angular frequencies in rad/s).
typedef struct McDetectionParams {
  double gamma_rad_s;
  double detuning_rad_s;
  double s0;
  double eta;
  double tau_det_s;
  double tau_hold_s;
} McDetectionParams;

// Stochastic trap environment.
typedef struct McTrapParams {
  double tau_life_s;
  double r_load_per_s;
  double p_survival;
  double alpha_sqrt_s;
  double bkg_var_atoms;
} McTrapParams;

// Measurement-variance budget, all terms in atoms².
typedef struct McNoiseBudget {
  double bkg;
  double psn;
  double srn;
  double loss;
  double total;
} McNoiseBudget;

// Simulation run description.
typedef struct McSimConfig {
  struct McDetectionParams detection;
  struct McTrapParams trap;
  uint64_t n_images;
  // `MC_INITIAL_FIXED` or `MC_INITIAL_POISSON`.
  uint32_t initial_kind;
  // Atom count (fixed) or mean (poisson).
  double initial_value;
  double counts_per_atom_per_s;
  uint64_t seed;
} McSimConfig;

// Engineered loss pulse inside the hold period.
typedef struct McLossPulse {
  double duration_s;
  double placement_s;
} McLossPulse;

// One image of a simulated trace.
typedef struct McSample {
  uint64_t index;
  double start_time_s;
  double exposure_s;
  double photoelectrons;
  // 1 when ground truth is attached.
  uint8_t has_truth;
  uint32_t atoms_start;
  uint32_t atoms_end;
} McSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Version string of the library; static storage, do not free.
const char *mc_version(void);

// Photon scattering rate of a single atom (photons/s).
//
// # Safety
// `d` and `out` must be valid pointers.
enum McStatus mc_scattering_rate(const struct McDetectionParams *d, double *out);

// Photoelectrons one atom contributes to one image.
//
// # Safety
// `d` and `out` must be valid pointers.
enum McStatus mc_photoelectrons_per_atom(const struct McDetectionParams *d, double *out);

// Variance budget of one atom-number measurement at `n_atoms`.
//
// # Safety
// `d`, `t` and `out` must be valid pointers.
enum McStatus mc_noise_budget(double n_atoms,
                              const struct McDetectionParams *d,
                              const struct McTrapParams *t,
                              struct McNoiseBudget *out);

// Largest atom number at which neighbouring numbers stay resolvable.
//
// # Safety
// `d`, `t` and `out` must be valid pointers.
enum McStatus mc_max_resolvable_atoms(const struct McDetectionParams *d,
                                      const struct McTrapParams *t,
                                      double *out);

// Equivalent laser frequency noise (Hz) and absolute s0 deviation that
// alone would reproduce the fluorescence noise parameter `alpha`.
//
// # Safety
// `d` and both out pointers must be valid.
enum McStatus mc_equivalent_noise_sources(double alpha_sqrt_s,
                                          const struct McDetectionParams *d,
                                          double *detuning_hz_out,
                                          double *saturation_out);

// Simulates run `run_index` of the configured experiment. `pulse` may be
// null for pulse-free runs. On success the caller owns the returned trace
// and must release it with [`mc_trace_free`].
//
// # Safety
// `cfg` and `out` must be valid pointers; `pulse` must be valid or null.
enum McStatus mc_simulate_trace(const struct McSimConfig *cfg,
                                const struct McLossPulse *pulse,
                                uint64_t run_index,
                                struct McTrace **out);

// Number of images in a trace; 0 for a null handle.
//
// # Safety
// `trace` must be a live handle from [`mc_simulate_trace`] or null.
size_t mc_trace_len(const struct McTrace *trace);

// Copies image `index` of the trace into `out`.
//
// # Safety
// `trace` must be a live handle; `out` must be a valid pointer.
enum McStatus mc_trace_sample(const struct McTrace *trace, size_t index, struct McSample *out);

// Releases a trace returned by [`mc_simulate_trace`]. Null is a no-op.
//
// # Safety
// `trace` must originate from [`mc_simulate_trace`] and not be freed twice.
void mc_trace_free(struct McTrace *trace);

// Validates a parameter set; returns Ok when every invariant holds.
//
// # Safety
// `d` and `t` must be valid pointers.
enum McStatus mc_validate_params(const struct McDetectionParams *d, const struct McTrapParams *t);

// Final-number distribution P(0..=target) after the crossing loss step
// from `pre_threshold_n` atoms. `out` must hold `target + 1` values.
//
// # Safety
// `out` must point to at least `out_len` writable doubles.
enum McStatus mc_truncated_final_distribution(double p_survival,
                                              uint32_t pre_threshold_n,
                                              uint32_t target,
                                              double *out,
                                              size_t out_len);

// Best attainable preparation fidelity for the given loss step.
//
// # Safety
// `out` must be a valid pointer.
enum McStatus mc_max_fidelity(double p_survival, uint32_t target, double *out);

// Sub-shot-noise suppression (dB) of a final-number histogram where
// `counts[k]` is the number of runs ending with k atoms. Writes +inf when
// the sample variance is zero.
//
// # Safety
// `counts` must point to `len` readable values; `out` must be valid.
enum McStatus mc_suppression_db(const uint64_t *counts, size_t len, double *out);

// Joint binomial fit of the survival probability over transition rows
// (n_in[i] -> n_out[i], seen counts[i] times).
//
// # Safety
// The three arrays must each hold `len` readable values; the out pointers
// must be valid.
enum McStatus mc_fit_survival_probability(const uint32_t *n_in,
                                          const uint32_t *n_out,
                                          const uint64_t *counts,
                                          size_t len,
                                          double *p_out,
                                          double *std_error_out);

// Refines the counts-per-atom scale against the integer lattice of the
// signals, searching `nominal_scale * (1 ± search_window)`.
//
// # Safety
// `signals` must point to `len` readable values; `out` must be valid.
enum McStatus mc_self_calibrate(const double *signals,
                                size_t len,
                                double nominal_scale,
                                double search_window,
                                double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOTCOUNT_H */
