//! Online learners: each observes one sequence at a time and exposes a
//! point estimate of the model.
//!
//! | kind   | state                      | update                                   |
//! |--------|----------------------------|------------------------------------------|
//! | `bwo`  | parameters `ω`             | `ω ← ω + η_BW (BW(ω, y) − ω)`            |
//! | `bc`   | softmax weights `w`        | gradient step on `ln P(y \| ω(w))`       |
//! | `bona` | Dirichlet hyperparameters  | Bayes update, log-moment projection      |
//! | `mpa`  | Dirichlet hyperparameters  | Bayes update, mean/variance projection   |

mod bayes;
mod bc;
mod bwo;

use alloc::format;
use alloc::string::ToString;
use core::fmt;
use core::str::FromStr;

pub use bayes::{bona_posterior, BayesRule, BayesState, HyperParams, MixtureTerm, PathCounts, PosteriorMixture};
pub use bc::{softmax_into, BcState};
pub use bwo::{bw_reestimate, BwoState};

use crate::dirichlet::SolverOptions;
use crate::error::{Error, Result};
use crate::hmm::{HmmParams, ModelDims, ObservedSequence, DEFAULT_ENUMERATION_CAP};

/// Floor applied to student parameters inside likelihood computations.
pub const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateReport {
    /// `ln P(y | ω)` under the (floored) student before the update.
    pub log_likelihood: f64,
    /// Largest log-moment mismatch of the projected rows (`bona` only).
    pub projection_residual: Option<f64>,
}

pub trait OnlineLearner {
    fn dims(&self) -> ModelDims;

    /// Consumes one sequence. On error the state is left untouched.
    fn observe(&mut self, y: &ObservedSequence) -> Result<UpdateReport>;

    /// Current point estimate; always a valid [`HmmParams`].
    fn estimate(&self) -> HmmParams;

    /// Returns to the state the learner was constructed with.
    fn reset(&mut self);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LearnerKind {
    Bwo,
    Bc,
    Bona,
    Mpa,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 4] = [LearnerKind::Bwo, LearnerKind::Bc, LearnerKind::Bona, LearnerKind::Mpa];

    pub fn name(&self) -> &'static str {
        match self {
            LearnerKind::Bwo => "bwo",
            LearnerKind::Bc => "bc",
            LearnerKind::Bona => "bona",
            LearnerKind::Mpa => "mpa",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig {
                field: "algorithm".to_string(),
                message: format!("unknown algorithm `{s}`, expected one of bwo, bc, bona, mpa"),
            })
    }
}

/// Everything needed to construct one learner.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    pub eta_bw: f64,
    pub eta_bc: f64,
    pub lambda: f64,
    /// Per-entry Dirichlet concentration of the symmetric prior.
    pub prior_strength: f64,
    pub epsilon: f64,
    /// Cap on `n^T` for the Bayesian posterior mixture.
    pub enumeration_cap: u128,
    pub solver: SolverOptions,
}

impl LearnerConfig {
    pub const DEFAULT_ETA_BW: f64 = 0.1;
    pub const DEFAULT_ETA_BC: f64 = 0.5;
    pub const DEFAULT_LAMBDA: f64 = 0.01;
    pub const DEFAULT_PRIOR_STRENGTH: f64 = 1.0;

    pub fn new(kind: LearnerKind) -> Self {
        Self {
            kind,
            eta_bw: Self::DEFAULT_ETA_BW,
            eta_bc: Self::DEFAULT_ETA_BC,
            lambda: Self::DEFAULT_LAMBDA,
            prior_strength: Self::DEFAULT_PRIOR_STRENGTH,
            epsilon: DEFAULT_EPSILON,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            solver: SolverOptions::default(),
        }
    }

    pub fn bwo(eta_bw: f64) -> Self {
        Self {
            eta_bw,
            ..Self::new(LearnerKind::Bwo)
        }
    }

    pub fn bc(lambda: f64, eta_bc: f64) -> Self {
        Self {
            lambda,
            eta_bc,
            ..Self::new(LearnerKind::Bc)
        }
    }

    pub fn bona() -> Self {
        Self::new(LearnerKind::Bona)
    }

    pub fn mpa() -> Self {
        Self::new(LearnerKind::Mpa)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig {
                    field: field.to_string(),
                    message: format!("must be positive and finite, got {v}"),
                })
            }
        };
        positive("eta_bw", self.eta_bw)?;
        positive("eta_bc", self.eta_bc)?;
        positive("lambda", self.lambda)?;
        positive("prior_strength", self.prior_strength)?;
        if !(self.epsilon >= 0.0 && self.epsilon < 1e-3) {
            return Err(Error::InvalidConfig {
                field: "epsilon".to_string(),
                message: format!("must lie in [0, 1e-3), got {}", self.epsilon),
            });
        }
        if self.enumeration_cap == 0 {
            return Err(Error::InvalidConfig {
                field: "enumeration_cap".to_string(),
                message: "must be at least 1".to_string(),
            });
        }
        positive("solver.tol", self.solver.tol)?;
        if self.solver.max_iter == 0 {
            return Err(Error::InvalidConfig {
                field: "solver.max_iter".to_string(),
                message: "must be at least 1".to_string(),
            });
        }
        Ok(())
    }
}

/// Any of the four learners.
#[derive(Debug, Clone, PartialEq)]
pub enum Learner {
    Bwo(BwoState),
    Bc(BcState),
    Bayes(BayesState),
}

impl Learner {
    /// Student whose estimate is the uniform model.
    pub fn symmetric(config: &LearnerConfig, dims: ModelDims) -> Result<Self> {
        Self::starting_at(config, &HmmParams::uniform(dims))
    }

    /// Student whose estimate starts at `init`.
    ///
    /// Bayesian learners get hyperparameters `prior_strength · N · init_row`
    /// per row, so a uniform `init` gives every hyperparameter equal to
    /// `prior_strength`.
    pub fn starting_at(config: &LearnerConfig, init: &HmmParams) -> Result<Self> {
        config.validate()?;
        Ok(match config.kind {
            LearnerKind::Bwo => Learner::Bwo(BwoState::new(init.clone(), config.eta_bw, config.epsilon)?),
            LearnerKind::Bc => Learner::Bc(BcState::from_params(init, config.lambda, config.eta_bc, config.epsilon)?),
            LearnerKind::Bona | LearnerKind::Mpa => {
                let rule = if config.kind == LearnerKind::Bona {
                    BayesRule::LogMoment
                } else {
                    BayesRule::MeanVariance
                };
                let hyper = HyperParams::from_means(init, config.prior_strength)?;
                let mut state = BayesState::new(hyper, rule);
                state.enumeration_cap = config.enumeration_cap;
                state.solver = config.solver;
                Learner::Bayes(state)
            }
        })
    }

    pub fn kind(&self) -> LearnerKind {
        match self {
            Learner::Bwo(_) => LearnerKind::Bwo,
            Learner::Bc(_) => LearnerKind::Bc,
            Learner::Bayes(s) => match s.rule() {
                BayesRule::LogMoment => LearnerKind::Bona,
                BayesRule::MeanVariance => LearnerKind::Mpa,
            },
        }
    }
}

impl OnlineLearner for Learner {
    fn dims(&self) -> ModelDims {
        match self {
            Learner::Bwo(s) => s.dims(),
            Learner::Bc(s) => s.dims(),
            Learner::Bayes(s) => s.dims(),
        }
    }

    fn observe(&mut self, y: &ObservedSequence) -> Result<UpdateReport> {
        match self {
            Learner::Bwo(s) => s.observe(y),
            Learner::Bc(s) => s.observe(y),
            Learner::Bayes(s) => s.observe(y),
        }
    }

    fn estimate(&self) -> HmmParams {
        match self {
            Learner::Bwo(s) => s.estimate(),
            Learner::Bc(s) => s.estimate(),
            Learner::Bayes(s) => s.estimate(),
        }
    }

    fn reset(&mut self) {
        match self {
            Learner::Bwo(s) => s.reset(),
            Learner::Bc(s) => s.reset(),
            Learner::Bayes(s) => s.reset(),
        }
    }
}
