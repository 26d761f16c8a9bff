//! Experiment configuration: a TOML document with one section per module.
//!
//! Every key is optional except `command` (which the command line can
//! supply); unknown keys are rejected.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use wickspde::linfield::{ConvolutionKind, DEFAULT_PAST_HORIZON};
use wickspde::solver::{Equation, SolveConfig};
use wickspde::subordinator::{check_log_moment, JumpLaw, SubordinatorKind, SubordinatorSpec};
use wickspde::wick::{CauchyStudy, NormSpec, TimeNorm, MIN_ENSEMBLE};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Isometry,
    Covariance,
    WickConvergence,
    RenormDivergence,
    JumpContinuity,
    SolveHeat,
    SolveWave,
    StationaryCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Isometry => "isometry",
            Command::Covariance => "covariance",
            Command::WickConvergence => "wick-convergence",
            Command::RenormDivergence => "renorm-divergence",
            Command::JumpContinuity => "jump-continuity",
            Command::SolveHeat => "solve-heat",
            Command::SolveWave => "solve-wave",
            Command::StationaryCheck => "stationary-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum JumpLawConfig {
    Fixed { size: f64 },
    Exponential { mean: f64 },
    Uniform { low: f64, high: f64 },
    LogTail,
}

fn zero() -> f64 {
    0.0
}

fn one() -> f64 {
    1.0
}

fn default_truncation() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SubordinatorConfig {
    Deterministic {
        #[serde(default = "one")]
        drift: f64,
    },
    Poisson {
        #[serde(default = "one")]
        rate: f64,
        #[serde(default = "one")]
        jump_size: f64,
        #[serde(default = "zero")]
        drift: f64,
    },
    CompoundPoisson {
        rate: f64,
        law: JumpLawConfig,
        #[serde(default = "zero")]
        drift: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
        #[serde(default = "default_truncation")]
        truncation: f64,
        #[serde(default = "zero")]
        drift: f64,
    },
    TemperedStable {
        alpha: f64,
        intensity: f64,
        tempering: f64,
        #[serde(default = "default_truncation")]
        truncation: f64,
        #[serde(default = "zero")]
        drift: f64,
    },
}

impl Default for SubordinatorConfig {
    fn default() -> Self {
        SubordinatorConfig::Poisson { rate: 1.0, jump_size: 1.0, drift: 0.0 }
    }
}

impl SubordinatorConfig {
    pub fn spec(&self) -> SubordinatorSpec {
        match *self {
            SubordinatorConfig::Deterministic { drift } => SubordinatorSpec::deterministic(drift),
            SubordinatorConfig::Poisson { rate, jump_size, drift } => {
                SubordinatorSpec { kind: SubordinatorKind::Poisson { rate, jump_size }, drift, truncation: 0.0 }
            }
            SubordinatorConfig::CompoundPoisson { rate, ref law, drift } => {
                let law = match *law {
                    JumpLawConfig::Fixed { size } => JumpLaw::Fixed(size),
                    JumpLawConfig::Exponential { mean } => JumpLaw::Exponential { mean },
                    JumpLawConfig::Uniform { low, high } => JumpLaw::Uniform { low, high },
                    JumpLawConfig::LogTail => JumpLaw::LogTail,
                };
                SubordinatorSpec::compound_poisson(rate, law).with_drift(drift)
            }
            SubordinatorConfig::Gamma { shape, rate, truncation, drift } => {
                SubordinatorSpec::gamma(shape, rate, truncation).with_drift(drift)
            }
            SubordinatorConfig::TemperedStable { alpha, intensity, tempering, truncation, drift } => {
                SubordinatorSpec::tempered_stable(alpha, intensity, tempering, truncation).with_drift(drift)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Heat,
    Wave,
    HeatStationary,
    DampedWaveStationary,
}

impl From<FieldKind> for ConvolutionKind {
    fn from(k: FieldKind) -> Self {
        match k {
            FieldKind::Heat => ConvolutionKind::Heat,
            FieldKind::Wave => ConvolutionKind::Wave,
            FieldKind::HeatStationary => ConvolutionKind::HeatStationary,
            FieldKind::DampedWaveStationary => ConvolutionKind::DampedWaveStationary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub kind: FieldKind,
    pub cutoffs: Vec<usize>,
    pub horizon: f64,
    /// Uniform cells of the time mesh (jump times are always added).
    pub time_cells: usize,
    /// Geometric refinement levels after each jump in heat studies.
    pub graded_levels: usize,
    pub past_horizon: f64,
    /// Observation times for `covariance` and `stationary-check`.
    pub times: Vec<f64>,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            kind: FieldKind::Heat,
            cutoffs: vec![4, 8, 16, 32],
            horizon: 1.0,
            time_cells: 16,
            graded_levels: 4,
            past_horizon: DEFAULT_PAST_HORIZON,
            times: vec![0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeKind {
    Lebesgue,
    Sup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormConfig {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub time: TimeKind,
    /// Exponent of `L^γ` in time; ignored for `time = "sup"`.
    pub gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub oversample: usize,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self { alpha: -0.5, p: 2.0, q: 2.0, time: TimeKind::Lebesgue, gamma: 1.0, epsilon: None, oversample: 2 }
    }
}

impl NormConfig {
    pub fn spec(&self) -> NormSpec {
        NormSpec {
            alpha: self.alpha,
            p: self.p,
            q: self.q,
            time: match self.time {
                TimeKind::Lebesgue => TimeNorm::Lebesgue { gamma: self.gamma },
                TimeKind::Sup => TimeNorm::Sup,
            },
            oversample: self.oversample,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WickConfig {
    pub order: usize,
    pub ensemble: usize,
    /// Monte-Carlo acceptance half-width in standard errors.
    pub n_se: f64,
    /// Spatial points `x`, `y` of the covariance experiment.
    pub points: [[f64; 2]; 2],
}

impl Default for WickConfig {
    fn default() -> Self {
        Self { order: 2, ensemble: 20, n_se: 4.0, points: [[0.0, 0.0], [0.3, 0.1]] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeData {
    pub mode: [i64; 2],
    pub amplitude: f64,
}

impl Default for ModeData {
    fn default() -> Self {
        Self { mode: [1, 0], amplitude: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub sign: f64,
    /// Solver cutoff `M`; defaults to `k·N` for each field cutoff `N`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
    pub dt: f64,
    pub threshold: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub max_halvings: usize,
    pub gamma: f64,
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub nonlinear: bool,
    /// Wick data `H_j(X; c_N)`; `false` uses the naive powers `P_N X^j`.
    pub renormalized: bool,
    /// Uniform cells of the data grid.
    pub data_cells: usize,
    /// Compute the mild residual of every solve (keeps every step in memory).
    pub residual: bool,
    pub residual_tol: f64,
    pub u0: ModeData,
    pub u1: ModeData,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            sign: -1.0,
            cutoff: None,
            dt: 1e-3,
            threshold: 10.0,
            picard_tol: 1e-10,
            picard_max_iter: 30,
            max_halvings: 8,
            gamma: 4.0,
            delta: 0.1,
            epsilon: None,
            nonlinear: true,
            renormalized: true,
            data_cells: 50,
            residual: false,
            residual_tol: 1e-4,
            u0: ModeData::default(),
            u1: ModeData::default(),
        }
    }
}

fn default_seed() -> u64 {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub subordinator: SubordinatorConfig,
    #[serde(default)]
    pub field: FieldConfig,
    #[serde(default)]
    pub norm: NormConfig,
    #[serde(default)]
    pub wick: WickConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parse and validate a configuration document. `command` fills in or must
/// agree with the document's `command` key.
pub fn parse_config(text: &str, command: Option<Command>) -> Result<ExperimentConfig, CliError> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
    if let Some(c) = command {
        match table.get("command") {
            Some(v) if v.as_str() != Some(c.name()) => {
                return Err(invalid(format!("config names command {v}, command line names {}", c.name())));
            }
            _ => {
                table.insert("command".into(), toml::Value::String(c.name().into()));
            }
        }
    }
    let cfg: ExperimentConfig = table.try_into().map_err(|e: toml::de::Error| invalid(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Serialize a configuration back to TOML.
pub fn emit_config(cfg: &ExperimentConfig) -> Result<String, CliError> {
    toml::to_string(cfg).map_err(|e| invalid(e.to_string()))
}

impl ExperimentConfig {
    /// The cutoff of the solver run at field cutoff `n`.
    pub fn solver_cutoff(&self, n: usize) -> usize {
        self.solver.cutoff.unwrap_or(self.wick.order * n)
    }

    pub fn solve_config(&self, n: usize) -> SolveConfig {
        let k = self.wick.order;
        let m = self.solver_cutoff(n);
        let base = match self.command {
            Command::SolveWave => SolveConfig::wave(m, k),
            _ => SolveConfig::heat(m),
        };
        let s = &self.solver;
        SolveConfig {
            sign: s.sign,
            order: k,
            dt: s.dt,
            threshold: s.threshold,
            picard_tol: s.picard_tol,
            picard_max_iter: s.picard_max_iter,
            max_halvings: s.max_halvings,
            gamma: s.gamma,
            delta: s.delta,
            epsilon: s.epsilon.unwrap_or(base.epsilon),
            nonlinear: s.nonlinear,
            oversample: self.norm.oversample,
            record_steps: s.residual,
            ..base
        }
    }

    pub fn cauchy_study(&self) -> CauchyStudy {
        CauchyStudy {
            kind: self.field.kind.into(),
            order: self.wick.order,
            cutoffs: self.field.cutoffs.clone(),
            norm: self.norm.spec(),
            epsilon: self.norm.epsilon,
            subordinator: self.subordinator.spec(),
            horizon: self.field.horizon,
            time_cells: self.field.time_cells,
            graded_levels: self.field.graded_levels,
            ensemble: self.wick.ensemble,
            seed: self.seed,
        }
    }

    /// Every parameter window the command depends on.
    pub fn validate(&self) -> Result<(), CliError> {
        let f = &self.field;
        if f.cutoffs.is_empty() || f.cutoffs[0] < 1 || f.cutoffs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("field.cutoffs must be a nonempty strictly increasing list of positive integers"));
        }
        if !(f.horizon > 0.0 && f.horizon.is_finite()) {
            return Err(invalid(format!("field.horizon = {} violates T > 0", f.horizon)));
        }
        if f.time_cells < 1 {
            return Err(invalid("field.time_cells must be at least 1"));
        }
        if self.wick.ensemble < 1 {
            return Err(invalid("wick.ensemble must be at least 1"));
        }
        if !(self.wick.n_se > 0.0) {
            return Err(invalid("wick.n_se must be positive"));
        }
        let spec = self.subordinator.spec();
        if self.command != Command::RenormDivergence {
            spec.validate()?;
        }
        let kind_is = |ok: &[FieldKind]| -> Result<(), CliError> {
            if ok.contains(&f.kind) {
                Ok(())
            } else {
                Err(invalid(format!("{} needs field.kind in {ok:?}, got {:?}", self.command.name(), f.kind)))
            }
        };
        let times_in_horizon = || -> Result<(), CliError> {
            if f.times.is_empty() || f.times.iter().any(|&t| !(t > 0.0 && t <= f.horizon)) || f.times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid(format!("field.times must increase strictly within (0, T = {}]", f.horizon)));
            }
            Ok(())
        };
        match self.command {
            Command::Isometry | Command::JumpContinuity | Command::RenormDivergence => {}
            Command::Covariance => {
                kind_is(&[FieldKind::Heat, FieldKind::Wave])?;
                times_in_horizon()?;
                if f.times.len() != 2 {
                    return Err(invalid("covariance needs exactly two field.times s, t"));
                }
                if self.wick.order < 1 {
                    return Err(invalid("wick.order must be at least 1"));
                }
                if self.wick.ensemble < MIN_ENSEMBLE {
                    return Err(invalid(format!(
                        "wick.ensemble = {} violates ensemble ≥ {MIN_ENSEMBLE} for covariance diagnostics",
                        self.wick.ensemble
                    )));
                }
            }
            Command::WickConvergence => {
                kind_is(&[FieldKind::Heat, FieldKind::Wave])?;
                self.cauchy_study().validate()?;
            }
            Command::SolveHeat | Command::SolveWave => {
                let want = if self.command == Command::SolveHeat { FieldKind::Heat } else { FieldKind::Wave };
                kind_is(&[want])?;
                let s = &self.solver;
                if s.data_cells < 1 {
                    return Err(invalid("solver.data_cells must be at least 1"));
                }
                if !(s.residual_tol > 0.0) {
                    return Err(invalid("solver.residual_tol must be positive"));
                }
                for &n in &f.cutoffs {
                    let cfg = self.solve_config(n);
                    debug_assert_eq!(cfg.equation == Equation::Heat, self.command == Command::SolveHeat);
                    cfg.validate()?;
                    let m = cfg.cutoff;
                    if m < self.wick.order * n {
                        return Err(invalid(format!(
                            "solver.cutoff M = {m} violates M ≥ k·N = {} at N = {n}",
                            self.wick.order * n
                        )));
                    }
                    for (name, d) in [("u0", &s.u0), ("u1", &s.u1)] {
                        let r2 = d.mode[0] * d.mode[0] + d.mode[1] * d.mode[1];
                        if r2 as usize > m * m || !d.amplitude.is_finite() {
                            return Err(invalid(format!("solver.{name} mode {:?} lies outside |l| ≤ M = {m}", d.mode)));
                        }
                    }
                }
            }
            Command::StationaryCheck => {
                kind_is(&[FieldKind::HeatStationary, FieldKind::DampedWaveStationary])?;
                times_in_horizon()?;
                if f.times.len() < 2 {
                    return Err(invalid("stationary-check needs at least two field.times"));
                }
                if !(f.past_horizon > 0.0 && f.past_horizon.is_finite()) {
                    return Err(invalid(format!("field.past_horizon = {} violates T_past > 0", f.past_horizon)));
                }
                let lm = check_log_moment(&spec)?;
                if !lm.finite {
                    return Err(CliError::Core(wickspde::Error::StationarityUnsupported(format!(
                        "the Lévy measure has no finite logarithmic moment (partial integral {:.6e})",
                        lm.value
                    ))));
                }
            }
        }
        Ok(())
    }
}
