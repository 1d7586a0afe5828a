//! Stochastic simulator and analysis toolkit for single-atom-resolved
//! fluorescence detection in a magneto-optical trap.
//!
//! The crate models each fluorescence image as one background-subtracted
//! photoelectron count and covers the full chain around that signal:
//!
//! - [`physics`]: photon budget and the four-term measurement noise model,
//!   with equivalent-noise conversions and the maximum resolvable atom
//!   number.
//! - [`sim`]: seeded continuous-time generation of fluorescence traces —
//!   trap loss and loading, engineered loss pulses, photoelectron shot
//!   noise, scattering-rate noise and Gaussian background.
//! - [`estimation`]: histogram calibration via a Gaussian-sum fit,
//!   atom-number inference, loss/load/survival classification, lifetime and
//!   loading-rate estimation, two-sample variance and the one-parameter
//!   noise-model fit, plus integer self-calibration against scale drift.
//! - [`stabilization`]: the closed-loop preparation of a target atom number
//!   by repeated measure-and-prune steps, with binomial transition
//!   analytics, preparation fidelity and sub-shot-noise suppression.
//! - [`config`] and [`io`]: declarative TOML run configs, CSV trace files,
//!   JSON reports and a digest manifest that makes every run reproducible.

pub mod config;
pub mod estimation;
pub mod io;
pub mod model;
pub mod physics;
pub mod sim;
pub mod stabilization;
