//! Experiment configuration: one TOML file per experiment, schema-validated
//! before any numerics run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Transform,
    Evolve,
    Sweep,
    Purity,
    Averaging,
    Madelung,
    Density1d,
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Transform => "transform",
            Self::Evolve => "evolve",
            Self::Sweep => "sweep",
            Self::Purity => "purity",
            Self::Averaging => "averaging",
            Self::Madelung => "madelung",
            Self::Density1d => "density1d",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    pub length: f64,
    /// defaults to -length/2
    pub origin: Option<f64>,
    /// difference-grid points (defaults to n)
    pub ny: Option<usize>,
    /// difference-grid length (0 or absent: sized from the state)
    pub ylength: Option<f64>,
    /// spatial dimension (default 1)
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    /// coherent | wkb | scaled | oscillator_mixture
    pub family: String,
    pub q: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    /// amplitude a(x) for wkb/scaled families
    pub amplitude: Option<String>,
    /// phase S(x) for the wkb family
    pub phase: Option<String>,
    /// center displacement of the oscillator mixture
    pub displacement: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    /// expr (default) | confined_harmonic
    pub kind: Option<String>,
    pub expr: Option<String>,
    /// confined_harmonic parameters
    pub omega: Option<f64>,
    pub core: Option<f64>,
    pub plateau: Option<f64>,
    pub supnorm: Option<f64>,
    pub lipschitz: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    pub dt: f64,
    pub t_final: f64,
    /// schrodinger | von_neumann | wigner
    pub backend: String,
    pub mass: f64,
    pub record_stride: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AveragingSection {
    /// cutoff ψ(xi); defaults to the unit Gaussian
    pub cutoff: Option<String>,
    pub s: f64,
    pub beta: f64,
    /// scaling-hypothesis constant for the mixed family
    pub hs_constant: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MadelungSection {
    pub dt: f64,
    pub t_final: f64,
    pub record_stride: usize,
    /// relative background lifting the packet off vacuum
    pub background: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedSection {
    /// expected log-log exponent of the squared gradient metric
    pub exponent: Option<f64>,
    pub exponent_tol: Option<f64>,
    /// expected prefactor of the squared gradient metric at each ħ
    pub prefactor: Option<f64>,
    pub prefactor_rel_tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub description: Option<String>,
    pub seed: Option<u64>,
    pub output_dir: Option<String>,
    pub hbars: Vec<f64>,
    pub grid: GridSection,
    pub state: Option<StateSection>,
    pub potential: Option<PotentialSection>,
    pub evolution: Option<EvolutionSection>,
    pub averaging: Option<AveragingSection>,
    pub madelung: Option<MadelungSection>,
    pub expected: Option<ExpectedSection>,
}

impl ExperimentConfig {
    pub fn parse(src: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| Error::Config(format!("{e}")))
    }

    /// Schema diagnostics; empty means the config is runnable. Never runs
    /// numerics.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.hbars.is_empty() {
            out.push("hbars: list must not be empty".into());
        }
        if self.hbars.iter().any(|&h| !(h > 0.0)) {
            out.push("hbars: all values must be positive".into());
        }
        if self.hbars.windows(2).any(|w| w[1] >= w[0]) {
            out.push("hbars: values must be strictly decreasing".into());
        }
        if self.grid.n < 8 || !self.grid.n.is_power_of_two() {
            out.push("grid.n: must be a power of two, at least 8".into());
        }
        if !(self.grid.length > 0.0) {
            out.push("grid.length: must be positive".into());
        }
        if let Some(ny) = self.grid.ny {
            if ny < 8 || !ny.is_power_of_two() {
                out.push("grid.ny: must be a power of two, at least 8".into());
            }
        }
        let dim = self.grid.dim.unwrap_or(1);
        if dim == 0 || dim > 2 {
            out.push("grid.dim: supported dimensions are 1 and 2".into());
        }

        if let Some(state) = &self.state {
            match state.family.as_str() {
                "coherent" | "wkb" | "scaled" | "oscillator_mixture" => {}
                other => out.push(format!("state.family: unknown family '{other}'")),
            }
            if state.family == "scaled" {
                match state.alpha {
                    Some(a) if (0.0..1.0).contains(&a) => {}
                    Some(a) => out.push(format!("state.alpha: {a} outside [0, 1)")),
                    None => out.push("state.alpha: required for the scaled family".into()),
                }
            }
            for (name, src) in
                [("state.amplitude", &state.amplitude), ("state.phase", &state.phase)]
            {
                if let Some(src) = src {
                    if let Err(e) = Expr::parse(src, &["x"]) {
                        out.push(format!("{name}: {e}"));
                    }
                }
            }
            if state.family == "wkb" && state.amplitude.is_none() {
                out.push("state.amplitude: required for the wkb family".into());
            }
        } else if matches!(
            self.kind,
            ExperimentKind::Transform | ExperimentKind::Sweep | ExperimentKind::Purity
        ) {
            out.push(format!("state: section required for kind = {}", self.kind));
        }

        if let Some(p) = &self.potential {
            match p.kind.as_deref().unwrap_or("expr") {
                "expr" => match &p.expr {
                    Some(src) => {
                        if let Err(e) = Expr::parse(src, &["x"]) {
                            out.push(format!("potential.expr: {e}"));
                        }
                    }
                    None => out.push("potential.expr: required for an expression potential".into()),
                },
                "confined_harmonic" => {
                    let core = p.core.unwrap_or(0.0);
                    let plateau = p.plateau.unwrap_or(0.0);
                    if !(p.omega.unwrap_or(0.0) > 0.0) || !(core > 0.0) || plateau <= core {
                        out.push(
                            "potential: confined_harmonic needs omega > 0 and plateau > core > 0"
                                .into(),
                        );
                    }
                }
                other => out.push(format!("potential.kind: unknown kind '{other}'")),
            }
        }

        if let Some(e) = &self.evolution {
            if !(e.dt > 0.0) {
                out.push("evolution.dt: must be positive".into());
            }
            if e.t_final < e.dt {
                out.push("evolution.t_final: must be at least dt".into());
            }
            if !(e.mass > 0.0) {
                out.push("evolution.mass: must be positive".into());
            }
            if e.record_stride == 0 {
                out.push("evolution.record_stride: must be at least 1".into());
            }
            match e.backend.as_str() {
                "schrodinger" | "von_neumann" | "wigner" => {}
                other => out.push(format!("evolution.backend: unknown backend '{other}'")),
            }
        } else if matches!(self.kind, ExperimentKind::Evolve | ExperimentKind::Averaging) {
            out.push(format!("evolution: section required for kind = {}", self.kind));
        }

        if let Some(a) = &self.averaging {
            if !(0.0..=1.0).contains(&a.s) {
                out.push("averaging.s: order must lie in [0, 1]".into());
            }
            if let Some(c) = &a.cutoff {
                if let Err(e) = Expr::parse(c, &["xi"]) {
                    out.push(format!("averaging.cutoff: {e}"));
                }
            }
        } else if matches!(self.kind, ExperimentKind::Averaging) {
            out.push("averaging: section required for kind = averaging".into());
        }

        if let Some(m) = &self.madelung {
            if !(m.dt > 0.0) || m.t_final < m.dt {
                out.push("madelung: need 0 < dt <= t_final".into());
            }
            if !(m.background > 0.0) {
                out.push("madelung.background: must be positive (vacuum floor)".into());
            }
        } else if matches!(self.kind, ExperimentKind::Madelung) {
            out.push("madelung: section required for kind = madelung".into());
        }
        out
    }
}
