//! Experiment runner: builds states from a config, drives the pipelines,
//! writes CSV/field artifacts and a manifest with named PASS/FAIL checks.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::averaging::{
    density_regularity_1d, homogeneous_half_bound, mollifier_inequality, sobolev_sweep,
    transform_sources, velocity_average, Cutoff, SobolevSweepLeg,
};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{Error, Result};
use crate::evolution::{
    schrodinger_evolve, von_neumann_evolve, wigner_evolve, Backend, EvolutionConfig, Trajectory,
};
use crate::expr::Expr;
use crate::grid::{SpatialGrid, TensorGrid};
use crate::io::{fmt_float, write_csv, write_trajectory, write_wigner};
use crate::madelung::{
    compare_with_wave_moments, lifted_packet, madelung_evolve, moment_closure_check,
    MadelungConfig,
};
use crate::purity::{rank_one_residuals, Verdict, DEFAULT_MASK_TAU};
use crate::semiclassics::{concentration_sweep, SweepOptions};
use crate::states::{
    coherent_state, hilbert_schmidt_trace, mixed_state, oscillator_eigenstate, rank_lower_bound,
    scaled_state, spectral_purity, wkb_state, BuildOpts, Potential, QuantumState, WaveFunction,
};
use crate::wigner::{
    hilbert_schmidt_identity, kernel_from_state, moments, wigner_from_kernel, KernelField,
    WignerField,
};

/// One named check with its frozen threshold.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub threshold: String,
    pub value: f64,
    pub pass: bool,
}

impl CheckResult {
    fn new(name: &str, threshold: &str, value: f64, pass: bool) -> Self {
        Self { name: name.into(), threshold: threshold.into(), value, pass }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub checks: Vec<CheckResult>,
    pub artifacts: Vec<PathBuf>,
    pub out_dir: PathBuf,
}

impl RunSummary {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Bundled experiment configs compiled into the binary.
pub fn bundled_configs() -> Vec<(&'static str, &'static str)> {
    vec![
        ("coherent_transform_d1", include_str!("../configs/coherent_transform_d1.toml")),
        ("harmonic_backends_d1", include_str!("../configs/harmonic_backends_d1.toml")),
        ("coherent_sweep_d1", include_str!("../configs/coherent_sweep_d1.toml")),
        ("coherent_sweep_d2", include_str!("../configs/coherent_sweep_d2.toml")),
        ("scaled_sweep_d1", include_str!("../configs/scaled_sweep_d1.toml")),
        ("purity_corpus_d1", include_str!("../configs/purity_corpus_d1.toml")),
        ("mixed_vs_pure_averaging", include_str!("../configs/mixed_vs_pure_averaging.toml")),
        ("madelung_free", include_str!("../configs/madelung_free.toml")),
        ("madelung_harmonic", include_str!("../configs/madelung_harmonic.toml")),
        ("density_regularity_d1", include_str!("../configs/density_regularity_d1.toml")),
    ]
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub kind: ExperimentKind,
    pub description: String,
}

pub fn list_experiments() -> Vec<CatalogEntry> {
    bundled_configs()
        .into_iter()
        .map(|(name, src)| {
            let cfg = ExperimentConfig::parse(src).expect("bundled config must parse");
            CatalogEntry {
                name: name.to_string(),
                kind: cfg.kind,
                description: cfg.description.unwrap_or_default(),
            }
        })
        .collect()
}

/// Resolve `--config` as a bundled name first, then as a path.
pub fn load_config_source(spec: &str) -> Result<String> {
    for (name, src) in bundled_configs() {
        if name == spec {
            return Ok(src.to_string());
        }
    }
    std::fs::read_to_string(spec)
        .map_err(|e| Error::Config(format!("config '{spec}' is neither bundled nor readable: {e}")))
}

fn xgrid_of(cfg: &ExperimentConfig) -> Result<SpatialGrid> {
    let origin = cfg.grid.origin.unwrap_or(-0.5 * cfg.grid.length);
    SpatialGrid::new(cfg.grid.n, cfg.grid.length, origin)
}

fn tensor_grid_of(cfg: &ExperimentConfig) -> Result<TensorGrid> {
    let dim = cfg.grid.dim.unwrap_or(1);
    let axis = xgrid_of(cfg)?;
    TensorGrid::new(vec![axis; dim])
}

fn potential_of(cfg: &ExperimentConfig, hbar: f64) -> Result<Potential> {
    match &cfg.potential {
        None => Ok(Potential::zero()),
        Some(section) => {
            let mut p = match section.kind.as_deref().unwrap_or("expr") {
                "confined_harmonic" => Potential::confined_harmonic(
                    1.0,
                    section.omega.unwrap_or(1.0),
                    section.core.unwrap_or(4.0),
                    section.plateau.unwrap_or(7.0),
                ),
                _ => {
                    let src = section
                        .expr
                        .as_ref()
                        .ok_or_else(|| Error::Config("potential.expr missing".into()))?;
                    Potential::from_expr_with_hbar(src, hbar)?
                }
            };
            if let Some(s) = section.supnorm {
                p = p.with_supnorm(s);
            }
            if let Some(l) = section.lipschitz {
                p = p.with_lipschitz(l);
            }
            Ok(p)
        }
    }
}

fn pure_state_of(cfg: &ExperimentConfig, hbar: f64) -> Result<QuantumState> {
    let grid = tensor_grid_of(cfg)?;
    let section = cfg
        .state
        .as_ref()
        .ok_or_else(|| Error::Config("state section required".into()))?;
    let dim = grid.dim();
    let zeros = vec![0.0; dim];
    let q = section.q.clone().unwrap_or_else(|| zeros.clone());
    let p = section.p.clone().unwrap_or_else(|| zeros.clone());
    let opts = BuildOpts::default();
    let wave = match section.family.as_str() {
        "coherent" => coherent_state(&grid, &q, &p, hbar, &opts)?,
        "wkb" => {
            let amp_src = section
                .amplitude
                .as_ref()
                .ok_or_else(|| Error::Config("wkb family needs state.amplitude".into()))?;
            let amp = Expr::parse(amp_src, &["x"])?;
            let phase = match &section.phase {
                Some(src) => Expr::parse(src, &["x"])?,
                None => Expr::parse("0", &["x"])?,
            };
            if dim != 1 {
                return Err(Error::Config("expression-defined wkb states are 1-d".into()));
            }
            wkb_state(
                &grid,
                move |x| amp.eval(&[x[0]], hbar),
                move |x| phase.eval(&[x[0]], hbar),
                hbar,
                &opts,
            )?
        }
        "scaled" => {
            let alpha = section
                .alpha
                .ok_or_else(|| Error::Config("scaled family needs state.alpha".into()))?;
            let profile: Box<dyn Fn(&[f64]) -> f64> = match &section.amplitude {
                Some(src) => {
                    let expr = Expr::parse(src, &["x"])?;
                    Box::new(move |x: &[f64]| expr.eval(&[x[0]], hbar))
                }
                None => Box::new(|x: &[f64]| {
                    (2.0 / std::f64::consts::PI).powf(0.25)
                        * (-x.iter().map(|c| c * c).sum::<f64>()).exp()
                }),
            };
            scaled_state(&grid, |x| profile(x), &p, alpha, hbar, &opts)?
        }
        other => return Err(Error::Config(format!("family '{other}' is not rank one"))),
    };
    Ok(QuantumState::pure(wave))
}

/// Rank ⌈(2πħ)^{-1}⌉ uniform mixture of displaced oscillator eigenstates;
/// the family satisfying the Hilbert–Schmidt scaling hypothesis with C = 1.
pub fn oscillator_mixture(
    grid: &SpatialGrid,
    hbar: f64,
    displacement: f64,
) -> Result<QuantumState> {
    let rank = rank_lower_bound(1.0, hbar, 1)?;
    let opts = BuildOpts::default();
    let mut waves = Vec::with_capacity(rank);
    for k in 0..rank {
        let base = oscillator_eigenstate(grid, k, hbar, &opts)?;
        let line = base.line().to_vec();
        let shifted = crate::spectral::shift(&line, grid, -displacement);
        let samples =
            ndarray::ArrayD::from_shape_vec(ndarray::IxDyn(&[grid.n()]), shifted).unwrap();
        waves.push(WaveFunction { samples, grid: base.grid.clone(), hbar });
    }
    mixed_state(waves, vec![1.0 / rank as f64; rank])
}

fn ygrid_for(
    state: &QuantumState,
    cfg: &ExperimentConfig,
    xi_need: f64,
    pad: f64,
) -> Result<SpatialGrid> {
    if let Some(ylen) = cfg.grid.ylength {
        if ylen > 0.0 {
            let ny = cfg.grid.ny.unwrap_or(cfg.grid.n);
            return SpatialGrid::centered(ny, ylen);
        }
    }
    crate::wigner::difference_grid_padded(state, cfg.grid.ny.unwrap_or(cfg.grid.n), xi_need, pad)
}

fn wigner_of(state: &QuantumState, ygrid: &SpatialGrid) -> Result<WignerField> {
    wigner_from_kernel(&kernel_from_state(state, ygrid)?)
}

/// Run a parsed config; writes artifacts and the manifest under `out_dir`.
pub fn run(
    cfg: &ExperimentConfig,
    config_source: &str,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<RunSummary> {
    let diags = cfg.diagnostics();
    if !diags.is_empty() {
        return Err(Error::Config(diags.join("; ")));
    }
    std::fs::create_dir_all(out_dir)?;
    let seed = seed_override.or(cfg.seed).unwrap_or(42);
    let mut summary = match cfg.kind {
        ExperimentKind::Transform => run_transform(cfg, out_dir),
        ExperimentKind::Evolve => run_evolve(cfg, out_dir),
        ExperimentKind::Sweep => run_sweep(cfg, out_dir),
        ExperimentKind::Purity => run_purity(cfg, out_dir, seed),
        ExperimentKind::Averaging => run_averaging(cfg, out_dir),
        ExperimentKind::Madelung => run_madelung(cfg, out_dir),
        ExperimentKind::Density1d => run_density1d(cfg, out_dir),
    }?;
    let manifest = write_manifest(cfg, config_source, out_dir, seed, &summary)?;
    summary.artifacts.push(manifest);
    Ok(summary)
}

fn write_manifest(
    cfg: &ExperimentConfig,
    config_source: &str,
    out_dir: &Path,
    seed: u64,
    summary: &RunSummary,
) -> Result<PathBuf> {
    let mut hasher = Sha256::new();
    hasher.update(config_source.as_bytes());
    let hash = hex_string(&hasher.finalize());
    let mut text = String::new();
    text.push_str("[meta]\n");
    text.push_str(&format!("toolkit_version = \"{}\"\n", env!("CARGO_PKG_VERSION")));
    text.push_str(&format!("kind = \"{}\"\n", cfg.kind));
    text.push_str(&format!("config_sha256 = \"{hash}\"\n"));
    text.push_str(&format!("seed = {seed}\n"));
    text.push_str(&format!("all_pass = {}\n", summary.all_pass()));
    for check in &summary.checks {
        text.push_str("\n[[checks]]\n");
        text.push_str(&format!("name = \"{}\"\n", check.name));
        text.push_str(&format!("threshold = \"{}\"\n", check.threshold));
        text.push_str(&format!("value = \"{}\"\n", fmt_float(check.value)));
        text.push_str(&format!("pass = {}\n", check.pass));
    }
    let path = out_dir.join("manifest.toml");
    std::fs::write(&path, text)?;
    Ok(path)
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn run_transform(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    let mut checks = Vec::new();
    let mut artifacts = Vec::new();
    let mut rows = Vec::new();
    let mut worst_gap = 0.0f64;
    let mut worst_mass = 0.0f64;
    let mut worst_herm = 0.0f64;
    for (i, &hbar) in cfg.hbars.iter().enumerate() {
        let state = pure_state_of(cfg, hbar)?;
        let ygrid = ygrid_for(&state, cfg, 0.0, 0.0)?;
        let kernel = kernel_from_state(&state, &ygrid)?;
        let herm = kernel.hermitian_defect();
        let w = wigner_from_kernel(&kernel)?;
        let m = moments(&w, 1.0)?;
        let id = hilbert_schmidt_identity(&w, &state);
        let mass_err = (w.mass() - 1.0).abs();
        worst_gap = worst_gap.max(id.relative_gap);
        worst_mass = worst_mass.max(mass_err);
        worst_herm = worst_herm.max(herm);
        rows.push(vec![
            fmt_float(hbar),
            fmt_float(w.mass()),
            fmt_float(id.lhs),
            fmt_float(id.rhs),
            fmt_float(id.relative_gap),
            fmt_float(herm),
        ]);
        if i == 0 {
            let base = out_dir.join("wigner");
            write_wigner(&base, &w)?;
            artifacts.push(base.with_extension("f64"));
            let rho_rows: Vec<Vec<String>> = m
                .rho
                .iter()
                .enumerate()
                .map(|(j, &r)| {
                    vec![
                        fmt_float(m.grid.axis(0).node(j)),
                        fmt_float(r),
                        fmt_float(m.current[0][ndarray::IxDyn(&[j])]),
                        fmt_float(m.energy[ndarray::IxDyn(&[j])]),
                    ]
                })
                .collect();
            let path = out_dir.join("moments.csv");
            write_csv(&path, &["x", "rho", "current", "energy"], &rho_rows)?;
            artifacts.push(path);
        }
    }
    let path = out_dir.join("transform.csv");
    write_csv(
        &path,
        &["hbar", "mass", "l2_sq", "hs_side", "relative_gap", "hermitian_defect"],
        &rows,
    )?;
    artifacts.push(path);
    checks.push(CheckResult::new("hs_identity_gap", "<= 1e-8", worst_gap, worst_gap <= 1e-8));
    checks.push(CheckResult::new("mass_error", "<= 1e-8", worst_mass, worst_mass <= 1e-8));
    checks.push(CheckResult::new(
        "hermitian_defect",
        "<= 1e-10",
        worst_herm,
        worst_herm <= 1e-10,
    ));
    Ok(RunSummary { checks, artifacts, out_dir: out_dir.to_path_buf() })
}

fn evolution_config(cfg: &ExperimentConfig, backend: Backend) -> Result<EvolutionConfig> {
    let e = cfg
        .evolution
        .as_ref()
        .ok_or_else(|| Error::Config("evolution section required".into()))?;
    Ok(EvolutionConfig {
        dt: e.dt,
        t_final: e.t_final,
        backend,
        mass: e.mass,
        record_stride: e.record_stride,
    })
}

fn run_evolve(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    let e = cfg.evolution.as_ref().unwrap();
    let backend = match e.backend.as_str() {
        "schrodinger" => Backend::Schrodinger,
        "von_neumann" => Backend::VonNeumann,
        _ => Backend::Wigner,
    };
    let hbar = cfg.hbars[0];
    let state = pure_state_of(cfg, hbar)?;
    let v = potential_of(cfg, hbar)?;
    let run_cfg = evolution_config(cfg, backend)?;
    let mut checks = Vec::new();
    let mut artifacts = Vec::new();

    // drive the requested backend; for the phase-space backend also evolve
    // the wavefunction and cross-validate frame by frame
    let xi_need = 3.0;
    let ygrid = ygrid_for(&state, cfg, xi_need, 1.0)?;
    let mut rows = Vec::new();
    match backend {
        Backend::Wigner => {
            let w0 = wigner_of(&state, &ygrid)?;
            let traj = wigner_evolve(&w0, &v, &run_cfg)?;
            let wave_traj = schrodinger_evolve(&state.waves[0], &v, &run_cfg)?;
            let mut worst_mass = 0.0f64;
            let mut worst_dist = 0.0f64;
            let mut worst_norm = 0.0f64;
            for ((t, frame), wave) in
                traj.times.iter().zip(&traj.frames).zip(&wave_traj.frames)
            {
                let mass_err = (frame.mass() - 1.0).abs();
                let reference =
                    wigner_of(&QuantumState::pure(wave.clone()), &ygrid)?;
                let dist = frame.l2_distance(&reference);
                let norm_err = (wave.norm() - 1.0).abs();
                worst_mass = worst_mass.max(mass_err);
                worst_dist = worst_dist.max(dist);
                worst_norm = worst_norm.max(norm_err);
                rows.push(vec![
                    fmt_float(*t),
                    fmt_float(mass_err),
                    fmt_float(norm_err),
                    fmt_float(dist),
                ]);
            }
            checks.push(CheckResult::new(
                "backend_l2_distance",
                "<= 1e-6",
                worst_dist,
                worst_dist <= 1e-6,
            ));
            checks.push(CheckResult::new(
                "mass_conservation",
                "<= 1e-10",
                worst_mass,
                worst_mass <= 1e-10,
            ));
            checks.push(CheckResult::new(
                "norm_conservation",
                "<= 1e-10",
                worst_norm,
                worst_norm <= 1e-10,
            ));
            let dir = out_dir.join("trajectory");
            artifacts.push(write_trajectory(&dir, &traj)?);
        }
        Backend::Schrodinger | Backend::VonNeumann => {
            let traj = von_neumann_evolve(&state, &v, &run_cfg)?;
            let tr0 = hilbert_schmidt_trace(&state);
            let mut worst_tr = 0.0f64;
            for (t, frame) in traj.times.iter().zip(&traj.frames) {
                let tr_err = (hilbert_schmidt_trace(frame) - tr0).abs();
                worst_tr = worst_tr.max(tr_err);
                rows.push(vec![fmt_float(*t), fmt_float(tr_err), String::from("0"), String::from("0")]);
            }
            checks.push(CheckResult::new(
                "hs_trace_conservation",
                "<= 1e-10",
                worst_tr,
                worst_tr <= 1e-10,
            ));
        }
    }
    let path = out_dir.join("conservation.csv");
    write_csv(&path, &["t", "mass_err", "norm_err", "backend_l2_dist"], &rows)?;
    artifacts.push(path);
    Ok(RunSummary { checks, artifacts, out_dir: out_dir.to_path_buf() })
}

fn run_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    let report = concentration_sweep(
        &cfg.hbars,
        |hbar| pure_state_of(cfg, hbar),
        &SweepOptions::default(),
    )?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, &hbar) in report.hbars.iter().enumerate() {
        rows.push(vec![
            fmt_float(hbar),
            fmt_float(report.grad_rho_metric[i] * report.grad_rho_metric[i]),
            fmt_float(report.defect_l1[i]),
            fmt_float(report.rho2_bohm_l1[i]),
            fmt_float(report.rho2_pressure_l1[i]),
            fmt_float(report.xi_spread[i]),
        ]);
    }
    rows.push(vec![
        "exponents".into(),
        fmt_float(report.grad_sq_exponent.0),
        fmt_float(report.defect_exponent.0),
        fmt_float(report.rho2_bohm_exponent.0),
        fmt_float(report.rho2_pressure_exponent.0),
        String::new(),
    ]);
    let path = out_dir.join("sweep.csv");
    write_csv(
        &path,
        &["hbar", "grad_rho_sq", "defect_l1", "rho2P_l1", "rho2TrPi_l1", "xi_spread"],
        &rows,
    )?;

    let mut checks = Vec::new();
    if let Some(expected) = &cfg.expected {
        if let Some(exp) = expected.exponent {
            let tol = expected.exponent_tol.unwrap_or(0.05);
            let got = report.grad_sq_exponent.0;
            checks.push(CheckResult::new(
                "grad_sq_exponent",
                &format!("{exp} +/- {tol}"),
                got,
                (got - exp).abs() <= tol,
            ));
        }
        if let Some(pref) = expected.prefactor {
            let tol = expected.prefactor_rel_tol.unwrap_or(0.01);
            let mut worst = 0.0f64;
            for (h, m) in report.hbars.iter().zip(&report.grad_rho_metric) {
                let expected_value =
                    pref * h.powf(cfg.expected.as_ref().unwrap().exponent.unwrap_or(0.0));
                let rel = ((m * m) - expected_value).abs() / expected_value;
                worst = worst.max(rel);
            }
            checks.push(CheckResult::new(
                "grad_sq_prefactor_rel_err",
                &format!("<= {tol}"),
                worst,
                worst <= tol,
            ));
        }
    }
    checks.push(CheckResult::new(
        "decay_verdicts_consistent",
        "grad², ρ²P, ρ²TrΠ agree",
        if report.equivalence_consistent { 1.0 } else { 0.0 },
        report.equivalence_consistent,
    ));
    Ok(RunSummary {
        checks,
        artifacts: vec![path],
        out_dir: out_dir.to_path_buf(),
    })
}

fn run_purity(cfg: &ExperimentConfig, out_dir: &Path, seed: u64) -> Result<RunSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = tensor_grid_of(cfg)?;
    if grid.dim() != 1 {
        return Err(Error::Config("purity experiments are one-dimensional".into()));
    }
    let mut rows = Vec::new();
    let mut worst_pure = 0.0f64;
    let mut best_mixed = f64::INFINITY;
    let mut verdicts_agree = true;
    for &hbar in &cfg.hbars {
        let pure = pure_state_of(cfg, hbar)?;
        let mixed = {
            let dq = rng.gen_range(2.0..4.0) * hbar.sqrt();
            let dp = rng.gen_range(0.0..2.0) * hbar.sqrt();
            let w_min = rng.gen_range(0.2..0.5);
            let a = coherent_state(&grid, &[-dq / 2.0], &[0.0], hbar, &BuildOpts::default())?;
            let b = coherent_state(&grid, &[dq / 2.0], &[dp], hbar, &BuildOpts::default())?;
            mixed_state(vec![a, b], vec![1.0 - w_min, w_min])?
        };
        for (label, state) in [("pure", &pure), ("mixed", &mixed)] {
            let ygrid = ygrid_for(state, cfg, 0.0, 0.0)?;
            let kernel = kernel_from_state(state, &ygrid)?;
            let sp = spectral_purity(state);
            let report = rank_one_residuals(&kernel, sp, DEFAULT_MASK_TAU)?;
            match label {
                "pure" => worst_pure = worst_pure.max(report.max_residual),
                _ => best_mixed = best_mixed.min(report.max_residual),
            }
            let spectrally_pure = (sp - 1.0).abs() <= 1e-8;
            if (report.verdict == Verdict::Pure) != spectrally_pure {
                verdicts_agree = false;
            }
            rows.push(vec![
                fmt_float(hbar),
                label.to_string(),
                fmt_float(report.max_residual),
                fmt_float(report.masked_fraction),
                fmt_float(sp),
                format!("{:?}", report.verdict),
            ]);
        }
    }
    let path = out_dir.join("purity.csv");
    write_csv(
        &path,
        &["hbar", "kind", "max_residual", "masked_fraction", "spectral_purity", "verdict"],
        &rows,
    )?;
    let checks = vec![
        CheckResult::new("pure_residual_max", "<= 1e-6", worst_pure, worst_pure <= 1e-6),
        CheckResult::new(
            "mixed_residual_min",
            ">= 10x pure baseline (1e-5)",
            best_mixed,
            best_mixed >= 1e-5,
        ),
        CheckResult::new(
            "verdicts_match_spectral_purity",
            "all states",
            if verdicts_agree { 1.0 } else { 0.0 },
            verdicts_agree,
        ),
    ];
    Ok(RunSummary { checks, artifacts: vec![path], out_dir: out_dir.to_path_buf() })
}

/// ħ-legs of the averaging contrast: evolve a family, transform the recorded
/// frames, and average with the cutoff.
fn averaged_leg(
    cfg: &ExperimentConfig,
    state: &QuantumState,
    cutoff: &Cutoff,
) -> Result<SobolevSweepLeg> {
    let e = cfg.evolution.as_ref().unwrap();
    // record roughly the configured number of frames regardless of the
    // stability-limited dt; the stride must divide the step count so the
    // recorded times stay uniform
    let dt = e.dt.min(stable_dt(cfg, state.hbar)?);
    let frames_wanted = ((e.t_final / e.dt) as usize / e.record_stride).max(8);
    let steps = (e.t_final / dt).ceil() as usize;
    let stride = (steps / frames_wanted).max(1);
    let steps = steps.div_ceil(stride) * stride;
    let run_cfg = EvolutionConfig {
        dt: e.t_final / steps as f64,
        t_final: e.t_final,
        backend: Backend::VonNeumann,
        mass: e.mass,
        record_stride: stride,
    };
    let v = potential_of(cfg, state.hbar)?;
    let traj = von_neumann_evolve(state, &v, &run_cfg)?;
    // pad for the excursion of the displaced family over the trajectory
    let ygrid = ygrid_for(state, cfg, 3.0, 1.0)?;
    let frames: Vec<WignerField> = traj
        .frames
        .par_iter()
        .map(|s| wigner_of(s, &ygrid))
        .collect::<Result<_>>()?;
    let wtraj = Trajectory { times: traj.times, frames };
    let field = velocity_average(&wtraj, cutoff)?;
    Ok(SobolevSweepLeg { hbar: state.hbar, hs_trace: hilbert_schmidt_trace(state), field })
}

fn stable_dt(cfg: &ExperimentConfig, hbar: f64) -> Result<f64> {
    let e = cfg.evolution.as_ref().unwrap();
    let grid = xgrid_of(cfg)?;
    let v = potential_of(cfg, hbar)?;
    let kmax = std::f64::consts::PI / grid.spacing();
    let vmax = v.supnorm.unwrap_or_else(|| {
        grid.nodes().map(|x| v.value(x).abs()).fold(0.0f64, f64::max)
    });
    let rate = (hbar * kmax * kmax / (2.0 * e.mass)).max(vmax / hbar);
    Ok(2.0 * std::f64::consts::PI / (8.0 * rate))
}

fn run_averaging(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    let a = cfg
        .averaging
        .as_ref()
        .ok_or_else(|| Error::Config("averaging section required".into()))?;
    let cutoff = match &a.cutoff {
        Some(src) => Cutoff::from_expr(src)?,
        None => Cutoff::gaussian(),
    };
    let grid = xgrid_of(cfg)?;
    let displacement = cfg
        .state
        .as_ref()
        .and_then(|s| s.displacement)
        .unwrap_or(0.5);

    let mixed_legs: Vec<SobolevSweepLeg> = cfg
        .hbars
        .iter()
        .map(|&hbar| {
            let state = oscillator_mixture(&grid, hbar, displacement)?;
            averaged_leg(cfg, &state, &cutoff)
        })
        .collect::<Result<_>>()?;
    let mixed = sobolev_sweep(&mixed_legs, a.s, a.beta, a.hs_constant)?;

    let pure_legs: Vec<SobolevSweepLeg> = cfg
        .hbars
        .iter()
        .map(|&hbar| {
            let state = pure_state_of(cfg, hbar)?;
            averaged_leg(cfg, &state, &cutoff)
        })
        .collect::<Result<_>>()?;
    let pure = sobolev_sweep(&pure_legs, a.s, a.beta, None)?;

    let mut rows = Vec::new();
    for (family, report) in [("mixed", &mixed), ("pure", &pure)] {
        for &(h, v) in &report.per_hbar {
            rows.push(vec![
                family.to_string(),
                fmt_float(h),
                fmt_float(report.s),
                fmt_float(report.beta),
                fmt_float(v),
                String::new(),
                String::new(),
            ]);
        }
        rows.push(vec![
            family.to_string(),
            "summary".into(),
            fmt_float(report.s),
            fmt_float(report.beta),
            String::new(),
            fmt_float(report.fitted_exponent),
            (if family == "mixed" { report.bounded_pass } else { report.fitted_exponent <= -0.2 })
                .to_string(),
        ]);
    }
    let path = out_dir.join("averaging.csv");
    write_csv(
        &path,
        &["family", "hbar", "s", "beta", "weighted_norm", "slope", "pass"],
        &rows,
    )?;
    let checks = vec![
        CheckResult::new(
            "mixed_family_bounded",
            "slope >= -0.05 and spread < 3",
            mixed.fitted_exponent,
            mixed.bounded_pass,
        ),
        CheckResult::new(
            "pure_family_grows",
            "slope <= -0.2",
            pure.fitted_exponent,
            pure.fitted_exponent <= -0.2,
        ),
    ];
    Ok(RunSummary { checks, artifacts: vec![path], out_dir: out_dir.to_path_buf() })
}

fn subsample<F: Clone>(traj: &Trajectory<F>, every: usize) -> Trajectory<F> {
    let times: Vec<f64> = traj.times.iter().copied().step_by(every).collect();
    let frames: Vec<F> = traj.frames.iter().cloned().step_by(every).collect();
    Trajectory { times, frames }
}

fn run_madelung(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    let m = cfg
        .madelung
        .as_ref()
        .ok_or_else(|| Error::Config("madelung section required".into()))?;
    let hbar = cfg.hbars[0];
    let grid = xgrid_of(cfg)?;
    let q = cfg.state.as_ref().and_then(|s| s.q.as_ref()).map(|q| q[0]).unwrap_or(0.0);
    let (fluid0, wf0) = lifted_packet(&grid, q, hbar, m.background)?;
    let v = potential_of(cfg, hbar)?;

    let wave_cfg = EvolutionConfig {
        dt: m.dt,
        t_final: m.t_final,
        backend: Backend::Schrodinger,
        mass: 1.0,
        record_stride: m.record_stride,
    };
    let waves = schrodinger_evolve(&wf0, &v, &wave_cfg)?;
    let fluid_cfg = MadelungConfig {
        dt: m.dt,
        t_final: m.t_final,
        record_stride: m.record_stride,
        ..Default::default()
    };
    let fluids = madelung_evolve(&fluid0, &v, &fluid_cfg)?;

    let comparison = compare_with_wave_moments(&fluids, &waves, 1.0)?;
    let closure = moment_closure_check(&waves, &v, 1.0, 1e-6)?;
    let mut rows = Vec::new();
    for row in &comparison {
        let closure_row = closure.iter().find(|c| (c.t - row.t).abs() < 1e-9);
        rows.push(vec![
            fmt_float(row.t),
            fmt_float(row.rho_rel_l2),
            fmt_float(row.u_rel_l2),
            closure_row.map(|c| fmt_float(c.continuity)).unwrap_or_default(),
            closure_row.map(|c| fmt_float(c.euler)).unwrap_or_default(),
        ]);
    }
    let path = out_dir.join("madelung.csv");
    write_csv(&path, &["t", "L2_rho_err", "L2_u_err", "continuity_res", "euler_res"], &rows)?;

    let final_row = comparison.last().ok_or_else(|| {
        Error::Inconsistency("no matched comparison times".into())
    })?;
    let worst_current = comparison.iter().map(|r| r.current_rel_l2).fold(0.0f64, f64::max);
    // closure order by subsampling the recorded frames
    let mut pts_c = Vec::new();
    let mut pts_e = Vec::new();
    for every in [4usize, 2, 1] {
        let sub = subsample(&waves, every);
        if sub.frames.len() < 3 {
            continue;
        }
        let rows = moment_closure_check(&sub, &v, 1.0, 1e-6)?;
        let c = rows.iter().map(|r| r.continuity).fold(0.0f64, f64::max);
        let e = rows.iter().map(|r| r.euler).fold(0.0f64, f64::max);
        let h = sub.recording_dt();
        pts_c.push((h.ln(), c.max(1e-300).ln()));
        pts_e.push((h.ln(), e.max(1e-300).ln()));
    }
    let order_c = crate::semiclassics::fit_slope(&pts_c).0;
    let order_e = crate::semiclassics::fit_slope(&pts_e).0;
    let mass_drift = fluids
        .frames
        .iter()
        .map(|f| (f.mass_total() - fluid0.mass_total()).abs())
        .fold(0.0f64, f64::max);

    let checks = vec![
        CheckResult::new(
            "rho_rel_l2_at_final_time",
            "<= 1e-3",
            final_row.rho_rel_l2,
            final_row.rho_rel_l2 <= 1e-3,
        ),
        CheckResult::new(
            "current_rel_l2",
            "<= 1e-3",
            worst_current,
            worst_current <= 1e-3,
        ),
        CheckResult::new(
            "continuity_order",
            "in [1.8, 2.2]",
            order_c,
            (1.8..=2.2).contains(&order_c),
        ),
        CheckResult::new("euler_order", "in [1.8, 2.2]", order_e, (1.8..=2.2).contains(&order_e)),
        CheckResult::new("mass_drift", "<= 1e-8", mass_drift, mass_drift <= 1e-8),
    ];
    Ok(RunSummary { checks, artifacts: vec![path], out_dir: out_dir.to_path_buf() })
}

fn run_density1d(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    let grid = xgrid_of(cfg)?;
    let hbar = cfg.hbars[0];
    let opts = BuildOpts::default();

    // n = 0: any kernel with the full derivative as the single source
    let coherent = pure_state_of(cfg, hbar)?;
    let ygrid = ygrid_for(&coherent, cfg, 0.0, 0.0)?;
    let k0 = kernel_from_state(&coherent, &ygrid)?;
    let u0_full = full_derivative_source(&k0);
    let case0 = (k0, vec![u0_full]);

    // n = 1: stationary oscillator eigenstate under the harmonic potential
    let eigen = QuantumState::pure(oscillator_eigenstate(&grid, 2, hbar, &opts)?);
    let ygrid = ygrid_for(&eigen, cfg, 0.0, 0.0)?;
    let k1 = kernel_from_state(&eigen, &ygrid)?;
    let u1 = scaled_by_x(&k1, |x| Complex64::new(0.0, -x));
    let zero1 = Array2::<Complex64>::zeros(k1.values.raw_dim());
    let case1 = (k1.clone(), vec![zero1.clone(), u1.clone()]);

    // n = 2: the same data with the linear source split by a smooth weight,
    // populating the quadratic slot (the quotient itself is odd in y, so a
    // pure y² source never arises from a potential)
    let mut u0_split = Array2::<Complex64>::zeros(k1.values.raw_dim());
    let mut u2_split = Array2::<Complex64>::zeros(k1.values.raw_dim());
    for (i, x) in k1.xgrid.nodes().enumerate() {
        for (j, y) in k1.ygrid.nodes().enumerate() {
            let g = Complex64::new(0.0, -x * y) * k1.values[[i, j]];
            let w = (-y * y).exp();
            u0_split[[i, j]] = g * w;
            u2_split[[i, j]] = if y.abs() > 0.0 {
                Complex64::new(0.0, -x) * k1.values[[i, j]] * (1.0 - w) / y
            } else {
                Complex64::default()
            };
        }
    }
    let case2 = (k1, vec![u0_split, zero1, u2_split]);

    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut all_pass = true;
    let mut worst_mollifier = 0.0f64;
    for (kernel, sources) in [&case0, &case1, &case2] {
        let report = density_regularity_1d(kernel, sources)?;
        let (f, b, xi) = transform_sources(kernel, sources);
        let mollifier = mollifier_inequality(&f, &b, &xi, &kernel.ygrid)?;
        worst_mollifier = worst_mollifier.max(mollifier.worst_ratio);
        let (hom_lhs, hom_rhs) = homogeneous_half_bound(kernel);
        all_pass &= report.pass;
        rows.push(vec![
            report.n.to_string(),
            fmt_float(report.s),
            fmt_float(report.lhs),
            fmt_float(report.chain_bound_sq.sqrt()),
            fmt_float(report.theorem_rhs),
            fmt_float(report.empirical_constant),
            fmt_float(mollifier.worst_ratio),
            fmt_float(hom_lhs / hom_rhs),
            report.pass.to_string(),
        ]);
    }
    let path = out_dir.join("density_regularity.csv");
    write_csv(
        &path,
        &[
            "n",
            "s",
            "hs_norm",
            "chain_bound",
            "theorem_rhs",
            "empirical_constant",
            "mollifier_worst_ratio",
            "homogeneous_ratio",
            "pass",
        ],
        &rows,
    )?;
    checks.push(CheckResult::new(
        "chain_bound_holds",
        "lhs² <= assembled bound, n in {0,1,2}",
        if all_pass { 1.0 } else { 0.0 },
        all_pass,
    ));
    checks.push(CheckResult::new(
        "mollifier_worst_ratio",
        "<= 1",
        worst_mollifier,
        worst_mollifier <= 1.0,
    ));
    Ok(RunSummary { checks, artifacts: vec![path], out_dir: out_dir.to_path_buf() })
}

fn full_derivative_source(kernel: &KernelField) -> Array2<Complex64> {
    let mut dx = kernel.values.clone();
    for j in 0..kernel.values.ncols() {
        let col: Vec<Complex64> = kernel.values.column(j).to_vec();
        let d = crate::spectral::derivative(&col, &kernel.xgrid, 1);
        for (i, v) in d.into_iter().enumerate() {
            dx[[i, j]] = v;
        }
    }
    let mut out = dx.clone();
    for i in 0..dx.nrows() {
        let row: Vec<Complex64> = dx.row(i).to_vec();
        let d = crate::spectral::derivative(&row, &kernel.ygrid, 1);
        for (j, v) in d.into_iter().enumerate() {
            out[[i, j]] = Complex64::new(0.0, -1.0) * v;
        }
    }
    out
}

fn scaled_by_x(
    kernel: &KernelField,
    factor: impl Fn(f64) -> Complex64,
) -> Array2<Complex64> {
    let mut out = kernel.values.clone();
    for (i, x) in kernel.xgrid.nodes().enumerate() {
        let f = factor(x);
        for j in 0..kernel.ygrid.n() {
            out[[i, j]] *= f;
        }
    }
    out
}
