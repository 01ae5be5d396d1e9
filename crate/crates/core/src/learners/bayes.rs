//! Bayesian online learners over a factorized Dirichlet prior.
//!
//! The prior is one Dirichlet per probability row: `π ~ D(ρ)`,
//! `A_i ~ D(a_i)`, `B_i ~ D(b_i)`. After one sequence `y` the exact posterior
//! is a mixture over hidden paths `q`; each term is the prior reweighted by
//! the monomial `P(y, q | ω)`, whose exponents are the path's counts of
//! initial state, transitions and emissions. Each row marginal of that
//! mixture is projected back onto a single Dirichlet, either by matching
//! `⟨ln x_i⟩` (log-moment rule) or by matching the mean vector and the
//! variance of the first component (mean/variance rule).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dirichlet::{log_mass_counts, mass_counts, solve_digamma_system, DigammaSystem, SolverOptions};
use crate::error::{Error, Result};
use crate::hmm::{all_paths, flat_len, HiddenPath, HmmParams, ModelDims, ObservedSequence, RowId, DEFAULT_ENUMERATION_CAP};
use crate::math::{exp, ln, log_sum_exp};
use crate::special::digamma;

use super::{OnlineLearner, UpdateReport};

/// Smallest first-component variance the mean/variance rule accepts.
const MIN_VARIANCE: f64 = 1e-14;

/// Dirichlet hyperparameters `(ρ, a, b)`, stored as one flat `[ρ | a | b]`
/// vector laid out like [`HmmParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    dims: ModelDims,
    values: Vec<f64>,
}

impl HyperParams {
    pub fn new(dims: ModelDims, rho: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let ModelDims { n, m, .. } = dims;
        if rho.len() != n || a.len() != n * n || b.len() != n * m {
            return Err(Error::DimensionMismatch("hyperparameter shapes do not match dims".into()));
        }
        let values = [rho, a, b].concat();
        if let Some(bad) = values.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidParams(format!(
                "hyperparameters must be positive and finite, got {bad}"
            )));
        }
        Ok(Self { dims, values })
    }

    /// Every hyperparameter equal to `strength`.
    pub fn symmetric(dims: ModelDims, strength: f64) -> Result<Self> {
        let ModelDims { n, m, .. } = dims;
        Self::new(dims, vec![strength; n], vec![strength; n * n], vec![strength; n * m])
    }

    /// Rows `strength · N · p_row`, with `p` floored away from zero.
    pub fn from_means(params: &HmmParams, strength: f64) -> Result<Self> {
        let dims = params.dims();
        let p = params.floored(1e-12);
        let mut values = vec![0.0; flat_len(dims)];
        for id in RowId::all(dims) {
            let scale = strength * id.len(dims) as f64;
            for (v, &x) in values[id.range(dims)].iter_mut().zip(p.row(id)) {
                *v = scale * x;
            }
        }
        if let Some(bad) = values.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidParams(format!(
                "hyperparameters must be positive and finite, got {bad}"
            )));
        }
        Ok(Self { dims, values })
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn row(&self, id: RowId) -> &[f64] {
        &self.values[id.range(self.dims)]
    }

    pub fn rho(&self) -> &[f64] {
        self.row(RowId::Pi)
    }

    pub fn a_flat(&self) -> &[f64] {
        let n = self.dims.n;
        &self.values[n..n + n * n]
    }

    pub fn b_flat(&self) -> &[f64] {
        let n = self.dims.n;
        &self.values[n + n * n..]
    }

    /// Per-row Dirichlet means.
    pub fn means(&self) -> HmmParams {
        let mut out = HmmParams::uniform(self.dims);
        for id in RowId::all(self.dims) {
            let u = self.row(id);
            let u0: f64 = u.iter().sum();
            for (o, &x) in out.row_mut(id).iter_mut().zip(u) {
                *o = x / u0;
            }
        }
        out
    }
}

/// Counts of initial state, transitions and emissions along one `(q, y)`,
/// laid out like [`HmmParams`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathCounts {
    dims: ModelDims,
    counts: Vec<u32>,
}

impl PathCounts {
    pub fn new(dims: ModelDims, q: &HiddenPath, y: &ObservedSequence) -> Self {
        let mut counts = vec![0u32; flat_len(dims)];
        fill_counts(dims, q.states(), y.symbols(), &mut counts);
        Self { dims, counts }
    }

    pub fn row(&self, id: RowId) -> &[u32] {
        &self.counts[id.range(self.dims)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureTerm {
    pub path: HiddenPath,
    pub counts: PathCounts,
    /// Normalized log mixture weight.
    pub log_weight: f64,
    /// `exp(log_weight)`.
    pub weight: f64,
}

/// The unprojected posterior after one sequence: a mixture over all `n^T`
/// hidden paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMixture {
    pub terms: Vec<MixtureTerm>,
    /// `ln P(y)` under the prior (the normalizer of the mixture).
    pub log_evidence: f64,
}

impl PosteriorMixture {
    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.terms.iter().map(|t| t.weight)
    }
}

/// Builds the Bayes posterior mixture for `y` under the prior `hyper`.
///
/// The unnormalized weight of path `q` is `Π_rows E_row[Π x_j^{r_j}]` with
/// `r` the path's counts in that row.
pub fn bona_posterior(hyper: &HyperParams, y: &ObservedSequence, cap: u128) -> Result<PosteriorMixture> {
    let dims = hyper.dims();
    let compact = CompactMixture::build(hyper, y, cap)?;
    let terms = all_paths(dims, cap)?
        .zip(compact.weights.iter().enumerate())
        .map(|(path, (k, &weight))| MixtureTerm {
            counts: PathCounts::new(dims, &path, y),
            path,
            log_weight: compact.log_weights.as_ref().map_or_else(|| ln(weight), |lw| lw[k]),
            weight,
        })
        .collect();
    Ok(PosteriorMixture {
        terms,
        log_evidence: compact.log_evidence,
    })
}

/// The same mixture as [`PosteriorMixture`] with path counts stored in one
/// flat buffer, `width` counts per path.
struct CompactMixture {
    dims: ModelDims,
    width: usize,
    counts: Vec<u32>,
    /// Kept only when the weights were computed in log space.
    log_weights: Option<Vec<f64>>,
    weights: Vec<f64>,
    log_evidence: f64,
}

impl CompactMixture {
    fn build(hyper: &HyperParams, y: &ObservedSequence, cap: u128) -> Result<Self> {
        let dims = hyper.dims();
        y.check(dims)?;
        check_path_cap(dims, cap)?;
        let width = flat_len(dims);
        let paths = dims.n.pow(dims.t as u32);
        let rows: Vec<(core::ops::Range<usize>, f64)> = RowId::all(dims)
            .map(|id| {
                let r = id.range(dims);
                let sum = hyper.values[r.clone()].iter().sum();
                (r, sum)
            })
            .collect();
        let mut counts = vec![0u32; paths * width];
        let mut q = vec![0usize; dims.t];
        for c in counts.chunks_exact_mut(width) {
            fill_counts(dims, &q, y.symbols(), c);
            advance(&mut q, dims.n);
        }
        let row_mass = |c: &[u32]| -> Option<f64> {
            rows.iter()
                .try_fold(1.0, |acc, (r, sum)| {
                    Some(acc * mass_counts(&hyper.values[r.clone()], *sum, &c[r.clone()])?)
                })
                .filter(|w| *w >= f64::MIN_POSITIVE)
        };
        let linear: Option<Vec<f64>> = counts.chunks_exact(width).map(row_mass).collect();
        if let Some(mut weights) = linear {
            let total: f64 = weights.iter().sum();
            if total.is_finite() {
                weights.iter_mut().for_each(|w| *w /= total);
                return Ok(Self {
                    dims,
                    width,
                    counts,
                    log_weights: None,
                    weights,
                    log_evidence: ln(total),
                });
            }
        }
        let mut log_weights: Vec<f64> = counts
            .chunks_exact(width)
            .map(|c| {
                rows.iter()
                    .map(|(r, sum)| log_mass_counts(&hyper.values[r.clone()], *sum, &c[r.clone()]))
                    .sum()
            })
            .collect();
        let log_evidence = log_sum_exp(&log_weights);
        for lw in &mut log_weights {
            *lw -= log_evidence;
        }
        let weights = log_weights.iter().map(|&lw| exp(lw)).collect();
        Ok(Self {
            dims,
            width,
            counts,
            log_weights: Some(log_weights),
            weights,
            log_evidence,
        })
    }

    fn row_terms(&self, id: RowId) -> impl Iterator<Item = (f64, &[u32])> + '_ {
        let r = id.range(self.dims);
        self.weights
            .iter()
            .zip(self.counts.chunks_exact(self.width))
            .map(move |(&w, c)| (w, &c[r.clone()]))
    }
}

fn check_path_cap(dims: ModelDims, cap: u128) -> Result<()> {
    all_paths(dims, cap).map(|_| ())
}

fn fill_counts(dims: ModelDims, q: &[usize], y: &[usize], c: &mut [u32]) {
    let a0 = dims.n;
    let b0 = dims.n + dims.n * dims.n;
    c[q[0]] += 1;
    for t in 1..q.len() {
        c[a0 + q[t - 1] * dims.n + q[t]] += 1;
    }
    for (&state, &symbol) in q.iter().zip(y) {
        c[b0 + state * dims.m + symbol] += 1;
    }
}

/// Next path in the same order as [`all_paths`].
fn advance(q: &mut [usize], n: usize) {
    for d in q.iter_mut().rev() {
        *d += 1;
        if *d < n {
            return;
        }
        *d = 0;
    }
}

fn log_moments<'a>(u: &[f64], terms: impl Iterator<Item = (f64, &'a [u32])>) -> Vec<f64> {
    let u0: f64 = u.iter().sum();
    let psi_u: Vec<f64> = u.iter().map(|&x| digamma(x)).collect();
    let psi_u0 = digamma(u0);
    let mut mu = vec![0.0; u.len()];
    for (w, c) in terms {
        let r0: u32 = c.iter().sum();
        let psi0 = if r0 == 0 { psi_u0 } else { digamma(u0 + f64::from(r0)) };
        for (i, slot) in mu.iter_mut().enumerate() {
            let psi_i = if c[i] == 0 {
                psi_u[i]
            } else {
                digamma(u[i] + f64::from(c[i]))
            };
            *slot += w * (psi_i - psi0);
        }
    }
    mu
}

/// Writes the mean vector of a row marginal into `mean` and returns the
/// first component's second moment.
fn moments_into<'a>(u: &[f64], terms: impl Iterator<Item = (f64, &'a [u32])>, mean: &mut [f64]) -> f64 {
    let u0: f64 = u.iter().sum();
    mean.fill(0.0);
    let mut second = 0.0;
    for (w, c) in terms {
        let total = u0 + f64::from(c.iter().sum::<u32>());
        let scale = w / total;
        for (slot, (&ui, &ci)) in mean.iter_mut().zip(u.iter().zip(c)) {
            *slot += scale * (ui + f64::from(ci));
        }
        let first = u[0] + f64::from(c[0]);
        second += scale * first * (first + 1.0) / (total + 1.0);
    }
    second
}

/// Concentration `u0` of the Dirichlet with the given first mean and second
/// moment.
fn mean_variance_scale(id: RowId, mean0: f64, second: f64) -> Result<f64> {
    let variance = second - mean0 * mean0;
    if !(variance >= MIN_VARIANCE) {
        return Err(Error::CollapsedComponent {
            row: format!("{id}"),
            variance,
        });
    }
    Ok((mean0 - second) / variance)
}

/// How a posterior row marginal is projected back onto a Dirichlet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BayesRule {
    /// Match `⟨ln x_i⟩` by solving a digamma system (Bayesian Online).
    LogMoment,
    /// Match the mean vector and the first component's variance (Mean
    /// Posterior Approximation).
    MeanVariance,
}

/// State shared by the Bayesian learners.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesState {
    hyper: HyperParams,
    rule: BayesRule,
    pub enumeration_cap: u128,
    pub solver: SolverOptions,
    initial: HyperParams,
}

impl BayesState {
    pub fn new(hyper: HyperParams, rule: BayesRule) -> Self {
        Self {
            initial: hyper.clone(),
            hyper,
            rule,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            solver: SolverOptions::default(),
        }
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.hyper
    }

    pub fn rule(&self) -> BayesRule {
        self.rule
    }

    /// `⟨ln x_i⟩` of one row marginal of the mixture.
    pub fn mixture_log_moments(&self, mix: &PosteriorMixture, id: RowId) -> Vec<f64> {
        log_moments(self.hyper.row(id), mix.terms.iter().map(|t| (t.weight, t.counts.row(id))))
    }

    /// Mean vector and first-component second moment of one row marginal.
    pub fn mixture_moments(&self, mix: &PosteriorMixture, id: RowId) -> (Vec<f64>, f64) {
        let u = self.hyper.row(id);
        let mut mean = vec![0.0; u.len()];
        let second = moments_into(u, mix.terms.iter().map(|t| (t.weight, t.counts.row(id))), &mut mean);
        (mean, second)
    }

    /// Projects one row of `mix` into `out`, returning the solver residual
    /// for the log-moment rule.
    fn project_into(&self, mix: &CompactMixture, id: RowId, out: &mut [f64]) -> Result<Option<f64>> {
        let u = self.hyper.row(id);
        match self.rule {
            BayesRule::LogMoment => {
                let sys = DigammaSystem::new(log_moments(u, mix.row_terms(id)))?;
                let x = solve_digamma_system(&sys, &self.solver)?;
                out.copy_from_slice(&x);
                Ok(Some(sys.residual(&x)))
            }
            BayesRule::MeanVariance => {
                let second = moments_into(u, mix.row_terms(id), out);
                let scale = mean_variance_scale(id, out[0], second)?;
                out.iter_mut().for_each(|m| *m *= scale);
                Ok(None)
            }
        }
    }
}

impl OnlineLearner for BayesState {
    fn dims(&self) -> ModelDims {
        self.hyper.dims()
    }

    /// `log_likelihood` in the report is the prior predictive `ln P(y)`.
    fn observe(&mut self, y: &ObservedSequence) -> Result<UpdateReport> {
        let dims = self.hyper.dims();
        let mix = CompactMixture::build(&self.hyper, y, self.enumeration_cap)?;
        let mut next = self.hyper.clone();
        let mut worst = 0.0_f64;
        for id in RowId::all(dims) {
            // A one-component row is the point mass at 1 whatever the data.
            if id.len(dims) < 2 {
                continue;
            }
            let out = &mut next.values[id.range(dims)];
            if let Some(r) = self.project_into(&mix, id, out)? {
                worst = worst.max(r);
            }
            if let Some(bad) = out.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::InvalidParams(format!("projection of {id} produced {bad}")));
            }
        }
        self.hyper = next;
        Ok(UpdateReport {
            log_likelihood: mix.log_evidence,
            projection_residual: match self.rule {
                BayesRule::LogMoment => Some(worst),
                BayesRule::MeanVariance => None,
            },
        })
    }

    fn estimate(&self) -> HmmParams {
        self.hyper.means()
    }

    fn reset(&mut self) {
        self.hyper = self.initial.clone();
    }
}
