//! Experiment configuration: TOML with one table per concern.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::verification::ManufacturedKind;

/// Documented schema, printed by `parest schema`.
pub const SCHEMA: &str = include_str!("../../schema/config.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    IdentitySuite,
    ConvergenceStudy,
    EstimatorReport,
    InefficiencyStudy,
    HypercircleCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::IdentitySuite,
        ExperimentKind::ConvergenceStudy,
        ExperimentKind::EstimatorReport,
        ExperimentKind::InefficiencyStudy,
        ExperimentKind::HypercircleCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::IdentitySuite => "identity_suite",
            ExperimentKind::ConvergenceStudy => "convergence_study",
            ExperimentKind::EstimatorReport => "estimator_report",
            ExperimentKind::InefficiencyStudy => "inefficiency_study",
            ExperimentKind::HypercircleCheck => "hypercircle_check",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            ExperimentKind::IdentitySuite => "equilibration and norm identities on random and computed functions",
            ExperimentKind::ConvergenceStudy => "errors and estimators under simultaneous refinement in space and time",
            ExperimentKind::EstimatorReport => "localized estimators and all bounds against a reference solution",
            ExperimentKind::InefficiencyStudy => "one-step modal sweep of the jump estimator against both errors",
            ExperimentKind::HypercircleCheck => "hypercircle identity and jump exactness for time-independent data",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    #[serde(rename = "fourier_1d")]
    Fourier1d,
    #[serde(rename = "fourier_2d")]
    Fourier2d,
    PolynomialInTime,
    Relaxation,
}

/// Which data the run is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataMode {
    /// The manufactured source and initial datum.
    Exact,
    /// The projected data `f_{h,tau}` and `u_{h,tau,0}` of the run itself.
    Discrete,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    pub k: u32,
    pub ky: u32,
    pub decay: f64,
    pub amplitude: f64,
    pub data: DataMode,
    /// Eigenvalues of the modal sweep.
    pub lambdas: Vec<f64>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            kind: ProblemKind::Fourier1d,
            k: 1,
            ky: 1,
            decay: PI * PI,
            amplitude: 1.0,
            data: DataMode::Exact,
            lambdas: vec![1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub dim: usize,
    /// Cells per direction on the coarsest level.
    pub resolution: usize,
    pub degree: usize,
    /// Extra uniform refinement of the run mesh, to approach the time-only setting.
    pub semidiscrete_refinement: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            dim: 1,
            resolution: 8,
            degree: 1,
            semidiscrete_refinement: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub final_time: f64,
    pub steps: usize,
    /// Nodes `T (n / N)^grading`.
    pub grading: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            final_time: 0.5,
            steps: 8,
            grading: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorConfig {
    /// Defaults to the space degree plus one.
    pub flux_degree: Option<usize>,
    /// Refinement of the lift space for dual norms when no reference is used.
    pub lift_refinement: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            flux_degree: None,
            lift_refinement: 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceConfig {
    pub space_refinement: usize,
    pub time_refinement: usize,
    pub richardson: bool,
    pub dof_cap: usize,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            space_refinement: 4,
            time_refinement: 4,
            richardson: true,
            dof_cap: crate::verification::reference::DEFAULT_DOF_CAP,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyConfig {
    /// Refinement levels; each halves `h` and `tau`.
    pub levels: usize,
    /// Random functions of the identity suite.
    pub samples: usize,
    pub seed: u64,
    pub order_min: f64,
    pub order_max: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            levels: 1,
            samples: 20,
            seed: 7,
            order_min: 0.9,
            order_max: 1.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: "out".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "one")]
    pub threads: usize,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub study: StudyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one() -> usize {
    1
}

fn bad(key: &str, why: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key}: {why}"))
}

impl ExperimentConfig {
    /// Parse and validate. Parse errors carry the line and column of the offending key.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.threads == 0 {
            return Err(bad("threads", "must be at least 1"));
        }
        let m = &self.mesh;
        if m.dim != 1 && m.dim != 2 {
            return Err(bad("mesh.dim", format!("{} is not 1 or 2", m.dim)));
        }
        if m.resolution == 0 {
            return Err(bad("mesh.resolution", "must be positive"));
        }
        if !(1..=3).contains(&m.degree) {
            return Err(bad("mesh.degree", format!("{} is not in 1..=3", m.degree)));
        }
        if m.semidiscrete_refinement == 0 {
            return Err(bad("mesh.semidiscrete_refinement", "must be positive"));
        }
        let t = &self.time;
        if !(t.final_time > 0.0 && t.final_time.is_finite()) {
            return Err(bad("time.final_time", "must be positive"));
        }
        if t.steps == 0 {
            return Err(bad("time.steps", "must be positive"));
        }
        if !(t.grading >= 1.0) {
            return Err(bad("time.grading", "must be at least 1"));
        }
        if let Some(d) = self.estimator.flux_degree {
            if d <= m.degree {
                return Err(bad("estimator.flux_degree", "must exceed mesh.degree"));
            }
        }
        if self.estimator.lift_refinement == 0 {
            return Err(bad("estimator.lift_refinement", "must be positive"));
        }
        let r = &self.reference;
        let needs_reference = matches!(
            self.experiment,
            ExperimentKind::EstimatorReport | ExperimentKind::HypercircleCheck
        );
        if needs_reference {
            if r.space_refinement < 4 || r.time_refinement < 4 {
                return Err(bad("reference", "space_refinement and time_refinement must be at least 4"));
            }
            if r.richardson && r.time_refinement % 2 != 0 {
                return Err(bad("reference.time_refinement", "must be even with richardson = true"));
            }
        }
        let s = &self.study;
        if s.levels == 0 {
            return Err(bad("study.levels", "must be positive"));
        }
        if self.experiment == ExperimentKind::ConvergenceStudy && s.levels < 2 {
            return Err(bad("study.levels", "a convergence study needs at least 2 levels"));
        }
        if s.samples == 0 {
            return Err(bad("study.samples", "must be positive"));
        }
        if !(s.order_min <= s.order_max) {
            return Err(bad("study.order_min", "must not exceed study.order_max"));
        }
        if self.experiment == ExperimentKind::InefficiencyStudy {
            if self.problem.lambdas.is_empty() {
                return Err(bad("problem.lambdas", "must not be empty"));
            }
            if let Some(l) = self.problem.lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
                return Err(bad("problem.lambdas", format!("{l} is not a positive number")));
            }
        } else {
            self.manufactured_kind()?;
        }
        if self.output.directory.is_empty() {
            return Err(bad("output.directory", "must not be empty"));
        }
        Ok(())
    }

    pub fn manufactured_kind(&self) -> Result<ManufacturedKind> {
        let p = &self.problem;
        let dim = self.mesh.dim;
        if p.k == 0 || p.ky == 0 {
            return Err(bad("problem.k", "mode indices must be at least 1"));
        }
        Ok(match p.kind {
            ProblemKind::Fourier1d => {
                if dim != 1 {
                    return Err(bad("problem.kind", "fourier_1d needs mesh.dim = 1"));
                }
                ManufacturedKind::Fourier1d { k: p.k, decay: p.decay }
            }
            ProblemKind::Fourier2d => {
                if dim != 2 {
                    return Err(bad("problem.kind", "fourier_2d needs mesh.dim = 2"));
                }
                ManufacturedKind::Fourier2d {
                    kx: p.k,
                    ky: p.ky,
                    decay: p.decay,
                }
            }
            ProblemKind::PolynomialInTime => ManufacturedKind::PolynomialInTime { dim },
            ProblemKind::Relaxation => ManufacturedKind::Relaxation {
                dim,
                k: p.k,
                amplitude: p.amplitude,
            },
        })
    }

    pub fn flux_degree(&self) -> usize {
        self.estimator.flux_degree.unwrap_or(self.mesh.degree + 1)
    }

    pub fn lift_refinement(&self) -> usize {
        self.estimator.lift_refinement
    }
}
