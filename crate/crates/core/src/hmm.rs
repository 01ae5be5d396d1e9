//! Discrete HMM parameters and the exact computations on them: joint path
//! probabilities, the forward and forward-backward recursions, sampling and
//! the KL divergence between the sequence distributions of two models.
//!
//! Matrices are stored row-major in flat vectors. `A` and `B` are
//! time-homogeneous.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::math::ln;

/// Default cap on the number of terms any exhaustive enumeration (hidden
/// paths `n^T` or observation sequences `m^T`) is allowed to visit.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// Tolerance on row sums used by [`HmmParams::validate`].
pub const STOCHASTIC_TOLERANCE: f64 = 1e-12;

/// Sizes of a model: `n` hidden states, `m` symbols, sequences of length `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelDims {
    pub n: usize,
    pub m: usize,
    pub t: usize,
}

impl ModelDims {
    pub fn new(n: usize, m: usize, t: usize) -> Result<Self> {
        if n == 0 || m == 0 || t == 0 {
            return Err(Error::InvalidParams(format!(
                "dimensions must be positive, got n={n}, m={m}, T={t}"
            )));
        }
        Ok(Self { n, m, t })
    }

    /// `n^T`, saturating.
    pub fn path_count(&self) -> u128 {
        saturating_pow(self.n, self.t)
    }

    /// `m^T`, saturating.
    pub fn sequence_count(&self) -> u128 {
        saturating_pow(self.m, self.t)
    }
}

fn saturating_pow(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}

/// Identifies one probability row of an [`HmmParams`] (or of a matching
/// hyperparameter set).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowId {
    Pi,
    A(usize),
    B(usize),
}

impl RowId {
    /// All rows of a model in canonical order: `π`, `A` rows, `B` rows.
    pub fn all(dims: ModelDims) -> impl Iterator<Item = RowId> {
        core::iter::once(RowId::Pi)
            .chain((0..dims.n).map(RowId::A))
            .chain((0..dims.n).map(RowId::B))
    }

    pub fn len(&self, dims: ModelDims) -> usize {
        match self {
            RowId::Pi | RowId::A(_) => dims.n,
            RowId::B(_) => dims.m,
        }
    }

    /// Position of the row in the concatenation `[π | A | B]`.
    pub fn range(&self, dims: ModelDims) -> core::ops::Range<usize> {
        let ModelDims { n, m, .. } = dims;
        let start = match *self {
            RowId::Pi => 0,
            RowId::A(i) => n + i * n,
            RowId::B(i) => n + n * n + i * m,
        };
        start..start + self.len(dims)
    }
}

/// Length of the concatenation `[π | A | B]`.
pub fn flat_len(dims: ModelDims) -> usize {
    dims.n * (1 + dims.n + dims.m)
}

impl fmt::Display for RowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowId::Pi => write!(f, "pi"),
            RowId::A(i) => write!(f, "A[{i}]"),
            RowId::B(i) => write!(f, "B[{i}]"),
        }
    }
}

/// The parameter triple `(π, A, B)`.
///
/// Construction only checks shapes; stochasticity is checked by
/// [`HmmParams::validate`] so that invalid parameter sets can still be
/// represented and reported on.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmParams {
    dims: ModelDims,
    pi: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl HmmParams {
    /// Builds from flat row-major `A` (`n*n`) and `B` (`n*m`).
    pub fn new(dims: ModelDims, pi: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let ModelDims { n, m, .. } = dims;
        if pi.len() != n || a.len() != n * n || b.len() != n * m {
            return Err(Error::DimensionMismatch(format!(
                "expected pi[{n}], A[{n}x{n}], B[{n}x{m}]; got lengths {}, {}, {}",
                pi.len(),
                a.len(),
                b.len()
            )));
        }
        Ok(Self { dims, pi, a, b })
    }

    /// Builds from nested rows; `n` and `m` are inferred.
    pub fn from_rows(pi: Vec<f64>, a: &[Vec<f64>], b: &[Vec<f64>], t: usize) -> Result<Self> {
        let n = pi.len();
        let m = b.first().map_or(0, Vec::len);
        let dims = ModelDims::new(n, m, t)?;
        if a.len() != n || b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "expected {n} rows in A and B, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        if a.iter().any(|r| r.len() != n) || b.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch("ragged A or B rows".into()));
        }
        Self::new(dims, pi, a.concat(), b.concat())
    }

    /// The model with every row uniform.
    pub fn uniform(dims: ModelDims) -> Self {
        let ModelDims { n, m, .. } = dims;
        Self {
            dims,
            pi: vec![1.0 / n as f64; n],
            a: vec![1.0 / n as f64; n * n],
            b: vec![1.0 / m as f64; n * m],
        }
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// Flat row-major transition matrix.
    pub fn a_flat(&self) -> &[f64] {
        &self.a
    }

    /// Flat row-major emission matrix.
    pub fn b_flat(&self) -> &[f64] {
        &self.b
    }

    #[inline]
    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.dims.n + j]
    }

    #[inline]
    pub fn b(&self, i: usize, symbol: usize) -> f64 {
        self.b[i * self.dims.m + symbol]
    }

    pub fn a_row(&self, i: usize) -> &[f64] {
        let n = self.dims.n;
        &self.a[i * n..(i + 1) * n]
    }

    pub fn b_row(&self, i: usize) -> &[f64] {
        let m = self.dims.m;
        &self.b[i * m..(i + 1) * m]
    }

    pub fn row(&self, id: RowId) -> &[f64] {
        match id {
            RowId::Pi => &self.pi,
            RowId::A(i) => self.a_row(i),
            RowId::B(i) => self.b_row(i),
        }
    }

    pub fn row_mut(&mut self, id: RowId) -> &mut [f64] {
        let ModelDims { n, m, .. } = self.dims;
        match id {
            RowId::Pi => &mut self.pi,
            RowId::A(i) => &mut self.a[i * n..(i + 1) * n],
            RowId::B(i) => &mut self.b[i * m..(i + 1) * m],
        }
    }

    /// Same parameters, reinterpreted for a different sequence length.
    pub fn with_length(mut self, t: usize) -> Result<Self> {
        self.dims = ModelDims::new(self.dims.n, self.dims.m, t)?;
        Ok(self)
    }

    /// Checks that every entry lies in `[0, 1]` and every row sums to one
    /// within [`STOCHASTIC_TOLERANCE`].
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for id in RowId::all(self.dims) {
            let row = self.row(id);
            for (index, &value) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    violations.push(Violation {
                        row: id,
                        kind: ViolationKind::EntryOutOfRange { index, value },
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            let deviation = sum - 1.0;
            if !(deviation.abs() <= STOCHASTIC_TOLERANCE) {
                violations.push(Violation {
                    row: id,
                    kind: ViolationKind::SumDeviation { sum, deviation },
                });
            }
        }
        ValidationReport { violations }
    }

    /// Every entry raised to at least `epsilon`, rows renormalized.
    ///
    /// Learners evaluate likelihoods on the floored model so that a student
    /// with hard zeros never assigns zero probability to an observation.
    pub fn floored(&self, epsilon: f64) -> Self {
        let mut out = self.clone();
        if epsilon > 0.0 {
            for id in RowId::all(self.dims) {
                floor_row(out.row_mut(id), epsilon);
            }
        }
        out
    }
}

pub(crate) fn floor_row(row: &mut [f64], epsilon: f64) {
    if row.iter().all(|&x| x >= epsilon) {
        return;
    }
    for x in row.iter_mut() {
        if !(*x >= epsilon) {
            *x = epsilon;
        }
    }
    let sum: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= sum);
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub row: RowId,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    EntryOutOfRange { index: usize, value: f64 },
    SumDeviation { sum: f64, deviation: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::EntryOutOfRange { index, value } => {
                write!(f, "{}: entry {index} = {value} outside [0, 1]", self.row)
            }
            ViolationKind::SumDeviation { sum, deviation } => {
                write!(f, "{}: sums to {sum} (deviation {deviation:e})", self.row)
            }
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// One emitted sequence `y_1..y_T` of symbol indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ObservedSequence(pub Vec<usize>);

impl ObservedSequence {
    pub fn new(symbols: Vec<usize>) -> Self {
        Self(symbols)
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check(&self, dims: ModelDims) -> Result<()> {
        check_indices("observed sequence", &self.0, dims.t, dims.m)
    }
}

/// One hidden-state path `q_1..q_T`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HiddenPath(pub Vec<usize>);

impl HiddenPath {
    pub fn new(states: Vec<usize>) -> Self {
        Self(states)
    }

    pub fn states(&self) -> &[usize] {
        &self.0
    }

    pub fn check(&self, dims: ModelDims) -> Result<()> {
        check_indices("hidden path", &self.0, dims.t, dims.n)
    }
}

fn check_indices(what: &str, xs: &[usize], len: usize, bound: usize) -> Result<()> {
    if xs.len() != len {
        return Err(Error::DimensionMismatch(format!(
            "{what} has length {}, expected {len}",
            xs.len()
        )));
    }
    if let Some(&bad) = xs.iter().find(|&&x| x >= bound) {
        return Err(Error::DimensionMismatch(format!(
            "{what} contains index {bad}, expected < {bound}"
        )));
    }
    Ok(())
}

/// Iterates over all `radix^len` index vectors in lexicographic order.
#[derive(Debug, Clone)]
pub struct Odometer {
    radix: usize,
    digits: Vec<usize>,
    done: bool,
}

impl Odometer {
    pub fn new(radix: usize, len: usize) -> Self {
        Self {
            radix,
            digits: vec![0; len],
            done: radix == 0,
        }
    }
}

impl Iterator for Odometer {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.digits.clone();
        let mut k = self.digits.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.digits[k] += 1;
            if self.digits[k] < self.radix {
                break;
            }
            self.digits[k] = 0;
        }
        Some(out)
    }
}

fn check_cap(count: u128, cap: u128) -> Result<()> {
    if count > cap {
        Err(Error::EnumerationCap { count, cap })
    } else {
        Ok(())
    }
}

/// All `m^T` observation sequences, refusing if there are more than `cap`.
pub fn all_sequences(dims: ModelDims, cap: u128) -> Result<impl Iterator<Item = ObservedSequence>> {
    check_cap(dims.sequence_count(), cap)?;
    Ok(Odometer::new(dims.m, dims.t).map(ObservedSequence))
}

/// All `n^T` hidden paths, refusing if there are more than `cap`.
pub fn all_paths(dims: ModelDims, cap: u128) -> Result<impl Iterator<Item = HiddenPath>> {
    check_cap(dims.path_count(), cap)?;
    Ok(Odometer::new(dims.n, dims.t).map(HiddenPath))
}

fn check_sequence(params: &HmmParams, y: &ObservedSequence) -> Result<()> {
    y.check(params.dims)
}

/// `π_{q1} B_{q1,y1} Π_{t≥2} A_{q(t-1),q(t)} B_{q(t),y(t)}`.
pub fn joint_path_probability(params: &HmmParams, y: &ObservedSequence, q: &HiddenPath) -> Result<f64> {
    check_sequence(params, y)?;
    q.check(params.dims)?;
    Ok(joint_unchecked(params, y.symbols(), q.states()))
}

fn joint_unchecked(params: &HmmParams, y: &[usize], q: &[usize]) -> f64 {
    let mut p = params.pi[q[0]] * params.b(q[0], y[0]);
    for t in 1..y.len() {
        p *= params.a(q[t - 1], q[t]) * params.b(q[t], y[t]);
    }
    p
}

/// Whether the forward recursion renormalizes at every step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scaling {
    #[default]
    Scaled,
    Unscaled,
}

/// `P(y | ω)` by the forward recursion, with per-step scaling.
pub fn sequence_likelihood(params: &HmmParams, y: &ObservedSequence) -> Result<f64> {
    sequence_likelihood_with(params, y, Scaling::Scaled)
}

pub fn sequence_likelihood_with(params: &HmmParams, y: &ObservedSequence, scaling: Scaling) -> Result<f64> {
    check_sequence(params, y)?;
    Ok(forward_likelihood(params, y.symbols(), scaling))
}

fn forward_likelihood(params: &HmmParams, y: &[usize], scaling: Scaling) -> f64 {
    let n = params.dims.n;
    let mut alpha: Vec<f64> = (0..n).map(|i| params.pi[i] * params.b(i, y[0])).collect();
    let mut next = vec![0.0; n];
    let mut likelihood = 1.0;
    for (t, &symbol) in y.iter().enumerate() {
        if t > 0 {
            for (j, slot) in next.iter_mut().enumerate() {
                let s: f64 = (0..n).map(|i| alpha[i] * params.a(i, j)).sum();
                *slot = s * params.b(j, symbol);
            }
            core::mem::swap(&mut alpha, &mut next);
        }
        if scaling == Scaling::Scaled {
            let c: f64 = alpha.iter().sum();
            if c == 0.0 {
                return 0.0;
            }
            likelihood *= c;
            alpha.iter_mut().for_each(|a| *a /= c);
        }
    }
    match scaling {
        Scaling::Scaled => likelihood,
        Scaling::Unscaled => alpha.iter().sum(),
    }
}

/// `P(y | ω)` as the explicit sum over all `n^T` hidden paths.
pub fn brute_force_likelihood(params: &HmmParams, y: &ObservedSequence, cap: u128) -> Result<f64> {
    check_sequence(params, y)?;
    let mut total = 0.0;
    for q in all_paths(params.dims, cap)? {
        total += joint_unchecked(params, y.symbols(), q.states());
    }
    Ok(total)
}

/// State and pair posteriors of one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPosterior {
    n: usize,
    t: usize,
    gamma: Vec<f64>,
    xi: Vec<f64>,
    log_likelihood: f64,
}

impl PathPosterior {
    pub fn len(&self) -> usize {
        self.t
    }

    pub fn is_empty(&self) -> bool {
        self.t == 0
    }

    pub fn states(&self) -> usize {
        self.n
    }

    /// `P(q_t = i | y, ω)`, `t` zero-based.
    #[inline]
    pub fn gamma(&self, t: usize, i: usize) -> f64 {
        self.gamma[t * self.n + i]
    }

    pub fn gamma_row(&self, t: usize) -> &[f64] {
        &self.gamma[t * self.n..(t + 1) * self.n]
    }

    /// `P(q_t = i, q_{t+1} = j | y, ω)`, `t` zero-based, `t < T-1`.
    #[inline]
    pub fn xi(&self, t: usize, i: usize, j: usize) -> f64 {
        self.xi[(t * self.n + i) * self.n + j]
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }
}

/// Scaled forward-backward pass.
///
/// Fails with [`Error::ZeroLikelihood`] when `y` is impossible under `params`.
pub fn forward_backward(params: &HmmParams, y: &ObservedSequence) -> Result<PathPosterior> {
    check_sequence(params, y)?;
    let n = params.dims.n;
    let ys = y.symbols();
    let t_len = ys.len();

    let mut alpha = vec![0.0; t_len * n];
    let mut scale = vec![0.0; t_len];
    for t in 0..t_len {
        for j in 0..n {
            let prior = if t == 0 {
                params.pi[j]
            } else {
                (0..n).map(|i| alpha[(t - 1) * n + i] * params.a(i, j)).sum()
            };
            alpha[t * n + j] = prior * params.b(j, ys[t]);
        }
        let c: f64 = alpha[t * n..(t + 1) * n].iter().sum();
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::ZeroLikelihood);
        }
        scale[t] = c;
        alpha[t * n..(t + 1) * n].iter_mut().for_each(|a| *a /= c);
    }

    let mut beta = vec![1.0; t_len * n];
    for t in (0..t_len.saturating_sub(1)).rev() {
        for i in 0..n {
            let s: f64 = (0..n)
                .map(|j| params.a(i, j) * params.b(j, ys[t + 1]) * beta[(t + 1) * n + j])
                .sum();
            beta[t * n + i] = s / scale[t + 1];
        }
    }

    let mut gamma = vec![0.0; t_len * n];
    for t in 0..t_len {
        let row = &mut gamma[t * n..(t + 1) * n];
        for (i, g) in row.iter_mut().enumerate() {
            *g = alpha[t * n + i] * beta[t * n + i];
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|g| *g /= s);
    }

    let mut xi = vec![0.0; t_len.saturating_sub(1) * n * n];
    for t in 0..t_len.saturating_sub(1) {
        let block = &mut xi[t * n * n..(t + 1) * n * n];
        for i in 0..n {
            for j in 0..n {
                block[i * n + j] = alpha[t * n + i] * params.a(i, j) * params.b(j, ys[t + 1]) * beta[(t + 1) * n + j];
            }
        }
        let s: f64 = block.iter().sum();
        block.iter_mut().for_each(|x| *x /= s);
    }

    let log_likelihood = scale.iter().map(|&c| ln(c)).sum();
    Ok(PathPosterior {
        n,
        t: t_len,
        gamma,
        xi,
        log_likelihood,
    })
}

/// Index drawn from `probs` using one uniform variate `u ∈ [0, 1)`.
pub(crate) fn categorical(probs: &[f64], u: f64) -> usize {
    let total: f64 = probs.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = k;
        }
        acc += p;
        if target < acc {
            return k;
        }
    }
    last_positive
}

/// Draws a hidden path and the sequence it emits.
pub fn sample_path_and_sequence<R: Rng + ?Sized>(params: &HmmParams, rng: &mut R) -> (HiddenPath, ObservedSequence) {
    let t_len = params.dims.t;
    let mut states = Vec::with_capacity(t_len);
    let mut symbols = Vec::with_capacity(t_len);
    let mut q = categorical(&params.pi, rng.random::<f64>());
    for t in 0..t_len {
        if t > 0 {
            q = categorical(params.a_row(q), rng.random::<f64>());
        }
        states.push(q);
        symbols.push(categorical(params.b_row(q), rng.random::<f64>()));
    }
    (HiddenPath(states), ObservedSequence(symbols))
}

/// Draws one observed sequence; the hidden path is discarded.
pub fn sample_sequence<R: Rng + ?Sized>(params: &HmmParams, rng: &mut R) -> ObservedSequence {
    sample_path_and_sequence(params, rng).1
}

/// `P(y | ω)` for every sequence, in [`all_sequences`] order.
pub fn sequence_distribution(params: &HmmParams, cap: u128) -> Result<Vec<f64>> {
    Ok(all_sequences(params.dims, cap)?
        .map(|y| forward_likelihood(params, y.symbols(), Scaling::Scaled))
        .collect())
}

/// KL divergence between two distributions over the same finite set.
///
/// Returns `+inf` when `q` misses support of `p`.
pub fn kl_from_distributions(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&pk, &qk) in p.iter().zip(q) {
        if pk > 0.0 {
            if !(qk > 0.0) {
                return f64::INFINITY;
            }
            total += pk * ln(pk / qk);
        }
    }
    total.max(0.0)
}

/// KL divergence between the length-`T` sequence distributions of two models,
/// by exact enumeration with the default cap.
///
/// `+inf` (not an error) when `omega2` gives zero probability to a sequence
/// `omega1` can emit.
pub fn kl_divergence(omega1: &HmmParams, omega2: &HmmParams) -> Result<f64> {
    kl_divergence_capped(omega1, omega2, DEFAULT_ENUMERATION_CAP)
}

pub fn kl_divergence_capped(omega1: &HmmParams, omega2: &HmmParams, cap: u128) -> Result<f64> {
    if omega1.dims != omega2.dims {
        return Err(Error::DimensionMismatch(format!(
            "KL between models of dims {:?} and {:?}",
            omega1.dims, omega2.dims
        )));
    }
    let p = sequence_distribution(omega1, cap)?;
    let q = sequence_distribution(omega2, cap)?;
    Ok(kl_from_distributions(&p, &q))
}
