//! # wigkit
//!
//! Pseudospectral toolkit for semiclassical quantum dynamics on periodic
//! boxes: phase-space transforms of finite-rank density operators, three
//! cross-validated evolution backends, velocity-average Sobolev diagnostics,
//! rank-one kernel identities, concentration sweeps, and a Madelung
//! quantum-hydrodynamics solver.
//!
//! The library surface is organized by subsystem:
//!
//! - [`grid`] — periodic grids, Fourier duals, center/difference variables
//! - [`states`] — wave packets, WKB and concentrating profiles, mixtures
//! - [`wigner`] — kernels, phase-space densities, moments, trace identities
//! - [`evolution`] — split-step, conjugation, and phase-space backends
//! - [`averaging`] — velocity averages and fractional Sobolev sweeps
//! - [`purity`] — rank-one characterization residuals
//! - [`semiclassics`] — Bohm/pressure identities and ħ-sweeps
//! - [`madelung`] — quantum hydrodynamics and moment-closure checks
//! - [`runner`] — experiment configs, bundled experiments, manifests
//!
//! Each major capability has a runnable demonstration under `examples/`:
//!
//! ```bash
//! cargo run --release --example wigner_transform
//! cargo run --release --example evolution_backends
//! cargo run --release --example averaging_contrast
//! cargo run --release --example density_regularity
//! cargo run --release --example purity_check
//! cargo run --release --example concentration_sweep
//! cargo run --release --example madelung_hydro
//! ```
//!
//! The `wigkit` binary runs the same pipelines from config files:
//! `wigkit list`, `wigkit validate --config <file-or-name>`,
//! `wigkit run --config <file-or-name> --out <dir>`.

pub mod averaging;
pub mod config;
pub mod error;
pub mod evolution;
pub mod expr;
pub mod grid;
pub mod io;
pub mod madelung;
pub mod purity;
pub mod runner;
pub mod semiclassics;
pub mod spectral;
pub mod states;
pub mod wigner;

pub use error::{Error, Result};
