//! The experiment configuration file.
//!
//! A JSON object; unknown keys are rejected and omitted keys take the
//! defaults listed by `online-hmm --help`. Minimal example:
//!
//! ```json
//! {"dims": {"n": 2, "m": 3, "T": 2}, "learners": [{"algorithm": "mpa"}]}
//! ```

use std::path::Path;

use online_hmm::dirichlet::SolverOptions;
use online_hmm::harness::{DriftKind, ExperimentConfig, StudentInit, TeacherSource};
use online_hmm::hmm::DEFAULT_ENUMERATION_CAP;
use online_hmm::learners::{LearnerConfig, LearnerKind, DEFAULT_EPSILON};
use online_hmm::ModelDims;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::params::ParamsJson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimsSpec {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "T")]
    pub t: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Bwo,
    Bc,
    Bona,
    Mpa,
}

impl From<Algorithm> for LearnerKind {
    fn from(a: Algorithm) -> Self {
        match a {
            Algorithm::Bwo => LearnerKind::Bwo,
            Algorithm::Bc => LearnerKind::Bc,
            Algorithm::Bona => LearnerKind::Bona,
            Algorithm::Mpa => LearnerKind::Mpa,
        }
    }
}

impl From<LearnerKind> for Algorithm {
    fn from(k: LearnerKind) -> Self {
        match k {
            LearnerKind::Bwo => Algorithm::Bwo,
            LearnerKind::Bc => Algorithm::Bc,
            LearnerKind::Bona => Algorithm::Bona,
            LearnerKind::Mpa => Algorithm::Mpa,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "defaults::solver_tol")]
    pub tol: f64,
    #[serde(default = "defaults::solver_max_iter")]
    pub max_iter: usize,
    #[serde(default = "defaults::solver_guard")]
    pub degeneracy_guard: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            tol: o.tol,
            max_iter: o.max_iter,
            degeneracy_guard: o.degeneracy_guard,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSpec {
    pub algorithm: Algorithm,
    #[serde(default = "defaults::eta_bw")]
    pub eta_bw: f64,
    #[serde(default = "defaults::eta_bc")]
    pub eta_bc: f64,
    #[serde(default = "defaults::lambda")]
    pub lambda: f64,
    #[serde(default = "defaults::prior_strength")]
    pub prior_strength: f64,
    #[serde(default = "defaults::epsilon")]
    pub epsilon: f64,
    #[serde(default = "defaults::cap")]
    pub enumeration_cap: u64,
    #[serde(default)]
    pub solver: SolverSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TeacherSpec {
    #[default]
    Random,
    Fixed(ParamsJson),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSpec {
    #[default]
    Static,
    Abrupt {
        interval: usize,
    },
    Gradual {
        #[serde(default = "defaults::delta")]
        delta: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StudentInitSpec {
    #[default]
    Symmetric,
    Perturbed {
        amplitude: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dims: DimsSpec,
    pub learners: Vec<LearnerSpec>,
    #[serde(default)]
    pub teacher: TeacherSpec,
    #[serde(default)]
    pub drift: DriftSpec,
    #[serde(default)]
    pub student_init: StudentInitSpec,
    #[serde(default = "defaults::sequences")]
    pub sequences: usize,
    #[serde(default = "defaults::replicas")]
    pub replicas: usize,
    #[serde(default = "defaults::snapshot_stride")]
    pub snapshot_stride: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::cap")]
    pub kl_cap: u64,
}

pub mod defaults {
    use super::*;

    pub const REPLICAS: usize = 1;

    pub fn eta_bw() -> f64 {
        LearnerConfig::DEFAULT_ETA_BW
    }
    pub fn eta_bc() -> f64 {
        LearnerConfig::DEFAULT_ETA_BC
    }
    pub fn lambda() -> f64 {
        LearnerConfig::DEFAULT_LAMBDA
    }
    pub fn prior_strength() -> f64 {
        LearnerConfig::DEFAULT_PRIOR_STRENGTH
    }
    pub fn epsilon() -> f64 {
        DEFAULT_EPSILON
    }
    pub fn cap() -> u64 {
        DEFAULT_ENUMERATION_CAP as u64
    }
    pub fn solver_tol() -> f64 {
        SolverOptions::default().tol
    }
    pub fn solver_max_iter() -> usize {
        SolverOptions::default().max_iter
    }
    pub fn solver_guard() -> f64 {
        SolverOptions::default().degeneracy_guard
    }
    pub fn delta() -> f64 {
        DriftKind::DEFAULT_GRADUAL_DELTA
    }
    pub fn sequences() -> usize {
        ExperimentConfig::DEFAULT_SEQUENCES
    }
    pub fn replicas() -> usize {
        REPLICAS
    }
    pub fn snapshot_stride() -> usize {
        ExperimentConfig::DEFAULT_SNAPSHOT_STRIDE
    }
}

impl LearnerSpec {
    pub fn to_config(&self) -> LearnerConfig {
        LearnerConfig {
            kind: self.algorithm.into(),
            eta_bw: self.eta_bw,
            eta_bc: self.eta_bc,
            lambda: self.lambda,
            prior_strength: self.prior_strength,
            epsilon: self.epsilon,
            enumeration_cap: u128::from(self.enumeration_cap),
            solver: SolverOptions {
                tol: self.solver.tol,
                max_iter: self.solver.max_iter,
                degeneracy_guard: self.solver.degeneracy_guard,
            },
        }
    }

    pub fn from_config(c: &LearnerConfig) -> Self {
        Self {
            algorithm: c.kind.into(),
            eta_bw: c.eta_bw,
            eta_bc: c.eta_bc,
            lambda: c.lambda,
            prior_strength: c.prior_strength,
            epsilon: c.epsilon,
            enumeration_cap: u64::try_from(c.enumeration_cap).unwrap_or(u64::MAX),
            solver: SolverSpec {
                tol: c.solver.tol,
                max_iter: c.solver.max_iter,
                degeneracy_guard: c.solver.degeneracy_guard,
            },
        }
    }
}

/// Prefixes the field of a core validation error with its position in the
/// file.
fn locate(err: online_hmm::Error, prefix: &str) -> online_hmm::Error {
    match err {
        online_hmm::Error::InvalidConfig { field, message } => online_hmm::Error::InvalidConfig {
            field: format!("{prefix}{field}"),
            message,
        },
        other => online_hmm::Error::InvalidConfig {
            field: prefix.trim_end_matches('.').to_string(),
            message: other.to_string(),
        },
    }
}

impl ConfigFile {
    /// Converts and validates.
    pub fn to_experiment(&self) -> Result<ExperimentConfig> {
        let dims = ModelDims::new(self.dims.n, self.dims.m, self.dims.t).map_err(|e| CliError::Config(locate(e, "dims.")))?;
        let learners: Vec<LearnerConfig> = self.learners.iter().map(LearnerSpec::to_config).collect();
        for (k, l) in learners.iter().enumerate() {
            l.validate()
                .map_err(|e| CliError::Config(locate(e, &format!("learners[{k}]."))))?;
        }
        let teacher = match &self.teacher {
            TeacherSpec::Random => TeacherSource::Random,
            TeacherSpec::Fixed(p) => {
                TeacherSource::Fixed(p.to_params().map_err(|e| CliError::Config(locate(e, "teacher.fixed.")))?)
            }
        };
        let config = ExperimentConfig {
            dims,
            learners,
            teacher,
            drift: match self.drift {
                DriftSpec::Static => DriftKind::Static,
                DriftSpec::Abrupt { interval } => DriftKind::Abrupt { interval },
                DriftSpec::Gradual { delta } => DriftKind::Gradual { delta },
            },
            student_init: match self.student_init {
                StudentInitSpec::Symmetric => StudentInit::Symmetric,
                StudentInitSpec::Perturbed { amplitude } => StudentInit::Perturbed { amplitude },
            },
            sequences: self.sequences,
            replicas: self.replicas,
            snapshot_stride: self.snapshot_stride,
            seed: self.seed,
            kl_cap: u128::from(self.kl_cap),
        };
        config.validate().map_err(CliError::Config)?;
        Ok(config)
    }

    /// The file that [`ConfigFile::to_experiment`] maps back to `config`,
    /// with every default spelled out.
    pub fn from_experiment(config: &ExperimentConfig) -> Self {
        Self {
            dims: DimsSpec {
                n: config.dims.n,
                m: config.dims.m,
                t: config.dims.t,
            },
            learners: config.learners.iter().map(LearnerSpec::from_config).collect(),
            teacher: match &config.teacher {
                TeacherSource::Random => TeacherSpec::Random,
                TeacherSource::Fixed(p) => TeacherSpec::Fixed(ParamsJson::from_params(p)),
            },
            drift: match config.drift {
                DriftKind::Static => DriftSpec::Static,
                DriftKind::Abrupt { interval } => DriftSpec::Abrupt { interval },
                DriftKind::Gradual { delta } => DriftSpec::Gradual { delta },
            },
            student_init: match config.student_init {
                StudentInit::Symmetric => StudentInitSpec::Symmetric,
                StudentInit::Perturbed { amplitude } => StudentInitSpec::Perturbed { amplitude },
            },
            sequences: config.sequences,
            replicas: config.replicas,
            snapshot_stride: config.snapshot_stride,
            seed: config.seed,
            kl_cap: u64::try_from(config.kl_cap).unwrap_or(u64::MAX),
        }
    }
}

/// Parses JSON text, reporting the path of the offending field.
pub fn parse_config_str(text: &str, origin: &Path) -> Result<ConfigFile> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::Parse {
        path: origin.to_path_buf(),
        message: if e.path().to_string() == "." {
            e.inner().to_string()
        } else {
            format!("{}: {}", e.path(), e.inner())
        },
    })
}

/// Reads, parses and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<(ConfigFile, ExperimentConfig)> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::ReadInput {
        path: path.to_path_buf(),
        source,
    })?;
    let file = parse_config_str(&text, path)?;
    let experiment = file.to_experiment()?;
    Ok((file, experiment))
}
