//! Dirichlet machinery for projecting mixtures back onto a single Dirichlet.
//!
//! For a Dirichlet `D(x | u)` and a monomial `Π x_j^{r_j}` the two building
//! blocks are
//!
//! ```text
//! E_u[Π x_j^{r_j}]            = Γ(u0) Π Γ(u_j + r_j) / (Π Γ(u_j) Γ(u0 + r0))
//! E_u[Π x_j^{r_j} ln x_i]     = E_u[Π x_j^{r_j}] · (ψ(u_i + r_i) − ψ(u0 + r0))
//! ```
//!
//! and projection by log-moment matching needs the inverse of
//! `u ↦ ψ(u_i) − ψ(u0)`, the digamma system. All Gamma ratios are formed in
//! log space.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{exp, ln, ln_gamma, sqrt};
use crate::special::{digamma, inverse_digamma, trigamma};

/// Concentration vector of a Dirichlet distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletParams {
    u: Vec<f64>,
    u0: f64,
}

impl DirichletParams {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if u.is_empty() {
            return Err(Error::InvalidParams("empty Dirichlet parameter vector".into()));
        }
        if let Some(bad) = u.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidParams(format!(
                "Dirichlet parameters must be positive and finite, got {bad}"
            )));
        }
        let u0 = u.iter().sum();
        Ok(Self { u, u0 })
    }

    pub fn symmetric(len: usize, value: f64) -> Result<Self> {
        Self::new(alloc::vec![value; len])
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn mean(&self) -> Vec<f64> {
        self.u.iter().map(|&x| x / self.u0).collect()
    }

    /// `E[ln x_i] = ψ(u_i) − ψ(u0)`.
    pub fn log_expectations(&self) -> Vec<f64> {
        let psi0 = digamma(self.u0);
        self.u.iter().map(|&x| digamma(x) - psi0).collect()
    }
}

/// Exponents `r_j ≥ 0` of a monomial `Π x_j^{r_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialExponents {
    r: Vec<f64>,
    r0: f64,
}

impl MonomialExponents {
    pub fn new(r: Vec<f64>) -> Result<Self> {
        if let Some(bad) = r.iter().find(|&&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::InvalidParams(format!(
                "monomial exponents must be non-negative and finite, got {bad}"
            )));
        }
        let r0 = r.iter().sum();
        Ok(Self { r, r0 })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            r: alloc::vec![0.0; len],
            r0: 0.0,
        }
    }

    pub fn from_counts(counts: &[u32]) -> Self {
        let r: Vec<f64> = counts.iter().map(|&c| f64::from(c)).collect();
        let r0 = r.iter().sum();
        Self { r, r0 }
    }

    /// The unit exponent on component `i`.
    pub fn unit(len: usize, i: usize) -> Self {
        let mut r = Self::zeros(len);
        r.r[i] = 1.0;
        r.r0 = 1.0;
        r
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Component-wise sum.
    pub fn plus(&self, other: &MonomialExponents) -> MonomialExponents {
        let r: Vec<f64> = self.r.iter().zip(&other.r).map(|(a, b)| a + b).collect();
        MonomialExponents {
            r0: self.r0 + other.r0,
            r,
        }
    }
}

/// `ln Γ(u + r) − ln Γ(u)`.
///
/// Small integer `r` uses the rising factorial directly, which is both exact
/// and cheaper than two log-gamma evaluations.
pub fn ln_rising(u: f64, r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    if r <= 8.0 && r == (r as u32) as f64 {
        let mut prod = 1.0;
        for k in 0..r as u32 {
            prod *= u + f64::from(k);
        }
        if prod.is_finite() {
            return ln(prod);
        }
    }
    ln_gamma(u + r) - ln_gamma(u)
}

fn check_dims(u: &DirichletParams, r: &MonomialExponents) -> Result<()> {
    if u.len() != r.len() {
        return Err(Error::DimensionMismatch(format!(
            "Dirichlet of dimension {} with exponents of dimension {}",
            u.len(),
            r.len()
        )));
    }
    Ok(())
}

/// `ln E_u[Π x_j^{r_j}]`, the log of the monomial's normalization mass.
pub fn log_monomial_mass(u: &DirichletParams, r: &MonomialExponents) -> Result<f64> {
    check_dims(u, r)?;
    Ok(log_mass_unchecked(u.u(), u.u0(), r.r(), r.r0()))
}

pub(crate) fn log_mass_unchecked(u: &[f64], u0: f64, r: &[f64], r0: f64) -> f64 {
    if r0 == 0.0 {
        return 0.0;
    }
    let num: f64 = u.iter().zip(r).map(|(&uj, &rj)| ln_rising(uj, rj)).sum();
    num - ln_rising(u0, r0)
}

/// `E_u[Π x_j^{c_j}]` as a product of rising-factorial ratios, when the
/// counts are small and the result is a normal float.
pub(crate) fn mass_counts(u: &[f64], u0: f64, c: &[u32]) -> Option<f64> {
    let r0: u32 = c.iter().sum();
    if r0 > 8 {
        return None;
    }
    let mut ratio = 1.0;
    for (&uj, &cj) in u.iter().zip(c) {
        for k in 0..cj {
            ratio *= uj + f64::from(k);
        }
    }
    for k in 0..r0 {
        ratio /= u0 + f64::from(k);
    }
    (ratio >= f64::MIN_POSITIVE && ratio.is_finite()).then_some(ratio)
}

/// [`log_mass_unchecked`] for integer exponents.
pub(crate) fn log_mass_counts(u: &[f64], u0: f64, c: &[u32]) -> f64 {
    let r0: u32 = c.iter().sum();
    if r0 == 0 {
        return 0.0;
    }
    if let Some(ratio) = mass_counts(u, u0, c) {
        return ln(ratio);
    }
    let num: f64 = u.iter().zip(c).map(|(&uj, &cj)| ln_rising(uj, f64::from(cj))).sum();
    num - ln_rising(u0, f64::from(r0))
}

/// The two factors of `E_u[Π x_j^{r_j} ln x_i]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMoment {
    /// `E_u[Π x_j^{r_j}]`.
    pub weight: f64,
    /// `ψ(u_i + r_i) − ψ(u0 + r0)`.
    pub value: f64,
}

impl LogMoment {
    /// The full reweighted average `weight · value`.
    pub fn average(&self) -> f64 {
        self.weight * self.value
    }
}

pub fn log_moment(u: &DirichletParams, r: &MonomialExponents, i: usize) -> Result<LogMoment> {
    check_dims(u, r)?;
    if i >= u.len() {
        return Err(Error::DimensionMismatch(format!(
            "component {i} of a {}-dimensional Dirichlet",
            u.len()
        )));
    }
    let weight = exp(log_mass_unchecked(u.u(), u.u0(), r.r(), r.r0()));
    let value = digamma(u.u()[i] + r.r()[i]) - digamma(u.u0() + r.r0());
    Ok(LogMoment { weight, value })
}

/// `E_u[Π x_j^{r_j + extra_j}]`.
pub fn monomial_moment(u: &DirichletParams, r: &MonomialExponents, extra: &MonomialExponents) -> Result<f64> {
    check_dims(u, r)?;
    check_dims(u, extra)?;
    let total = r.plus(extra);
    // Written as a single ratio so that all-zero exponents give exactly 1.
    let ln_num: f64 = u.u().iter().zip(total.r()).map(|(&uj, &rj)| ln_rising(uj, rj)).sum();
    Ok(exp(ln_num - ln_rising(u.u0(), total.r0())))
}

/// Coefficients `μ_i` of `ψ(x_i) − ψ(Σ_j x_j) = μ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DigammaSystem {
    mu: Vec<f64>,
}

impl DigammaSystem {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::InvalidParams("empty digamma system".into()));
        }
        if let Some(bad) = mu.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite digamma coefficient {bad}")));
        }
        Ok(Self { mu })
    }

    /// The system whose solution is `u` itself.
    pub fn from_dirichlet(u: &DirichletParams) -> Self {
        Self {
            mu: u.log_expectations(),
        }
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// `max_i |ψ(x_i) − ψ(Σ x) − μ_i|`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let psi0 = digamma(x.iter().sum());
        self.mu
            .iter()
            .zip(x)
            .map(|(&m, &xi)| (digamma(xi) - psi0 - m).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative tolerance on the total `x0`.
    pub tol: f64,
    pub max_iter: usize,
    /// Coefficients at or above `-degeneracy_guard` are rejected.
    pub degeneracy_guard: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            degeneracy_guard: 1e-6,
        }
    }
}

/// Solves a digamma system through the one-dimensional map on the total
/// `x0 = Σ x_i`:
///
/// ```text
/// x0 ← g(x0) = Σ_i ψ⁻¹(μ_i + ψ(x0))
/// ```
///
/// The plain map contracts at rate `g'(x0) → 1` as the concentration grows,
/// so each step is a Newton step on `g(x0) − x0` (using `g'` from
/// trigammas), safeguarded by the bracket that the sign of `g(x0) − x0`
/// maintains. A step leaving the bracket is replaced by geometric bisection,
/// or by doubling/halving while the bracket is still open. Iteration starts at `x0 = N` and stops when the step is within
/// `tol · x0`; then `x_i = ψ⁻¹(μ_i + ψ(x0))`.
pub fn solve_digamma_system(sys: &DigammaSystem, opts: &SolverOptions) -> Result<Vec<f64>> {
    for (index, &value) in sys.mu.iter().enumerate() {
        if !(value < -opts.degeneracy_guard) {
            return Err(Error::DegenerateSystem {
                index,
                value,
                guard: opts.degeneracy_guard,
            });
        }
    }
    let mu = &sys.mu;
    let mut x0 = mu.len() as f64;
    // Sign of g(x0) - x0 is positive below the root and negative above it.
    let mut lo = 0.0_f64;
    let mut hi = f64::INFINITY;

    for _ in 0..opts.max_iter {
        let psi0 = digamma(x0);
        let mut g = 0.0;
        let mut inv_tri = 0.0;
        for &m in mu {
            let xi = inverse_digamma(m + psi0);
            g += xi;
            inv_tri += 1.0 / trigamma(xi);
        }
        let f = g - x0;
        if f > 0.0 {
            lo = lo.max(x0);
        } else if f < 0.0 {
            hi = hi.min(x0);
        } else {
            return Ok(components(mu, x0));
        }
        let slope = trigamma(x0) * inv_tri - 1.0;
        let inside = |c: f64| c.is_finite() && c > lo && c < hi;
        let mut next = x0 - f / slope;
        if !inside(next) {
            next = if hi.is_finite() && lo > 0.0 {
                sqrt(lo * hi)
            } else if hi.is_finite() {
                0.5 * hi
            } else {
                2.0 * lo
            };
        }
        let converged = (next - x0).abs() <= opts.tol * x0;
        x0 = next;
        if converged {
            return Ok(components(mu, x0));
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
    })
}

fn components(mu: &[f64], x0: f64) -> Vec<f64> {
    let psi0 = digamma(x0);
    mu.iter().map(|&m| inverse_digamma(m + psi0)).collect()
}
