//! Online learning of discrete hidden Markov models in a teacher-student
//! setting.
//!
//! The crate is `no_std` and only needs `alloc`. It provides:
//!
//! - [`hmm`]: parameters, sampling, forward-backward and exact KL divergence
//!   between the sequence distributions of two models;
//! - [`special`] and [`dirichlet`]: digamma machinery, Dirichlet monomial
//!   moments and the digamma-system solver used for Dirichlet projection;
//! - [`learners`]: Baum-Welch Online, Baldi-Chauvin, Bayesian Online and Mean
//!   Posterior learners behind one [`learners::OnlineLearner`] contract;
//! - [`harness`]: random teachers, drift schedules, learning curves and
//!   symmetry-breaking detection.
//!
//! File formats, the command-line runner and replica parallelism live in the
//! companion `online-hmm-cli` crate.
#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dirichlet;
pub mod error;
pub mod harness;
pub mod hmm;
pub mod learners;
mod math;
pub mod special;

pub use error::{Error, Result};
pub use hmm::{HiddenPath, HmmParams, ModelDims, ObservedSequence, PathPosterior};
