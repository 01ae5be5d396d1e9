use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::hmm::{forward_backward, HmmParams, ModelDims, ObservedSequence, RowId};
use crate::math::{exp, ln};

use super::{OnlineLearner, UpdateReport};

/// `out = softmax(lambda · w)`.
pub fn softmax_into(w: &[f64], lambda: f64, out: &mut [f64]) {
    let max = w.iter().map(|&x| lambda * x).fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &x) in out.iter_mut().zip(w) {
        *o = exp(lambda * x - max);
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
}

/// Baldi-Chauvin learner.
///
/// Each row of `π`, `A`, `B` is `softmax(λ w)` over an unconstrained weight
/// row. An observation moves the weights by `η_BC` times the expected-count
/// residual
///
/// ```text
/// Δw_π(i)  = η (γ_1(i) − π_i)
/// Δw_A(ij) = η (Σ_t ξ_t(i,j) − A_ij Σ_{t<T} γ_t(i))
/// Δw_B(iα) = η (Σ_{t: y_t=α} γ_t(i) − B_iα Σ_t γ_t(i))
/// ```
///
/// which is `(η/λ) ∂ ln P(y | ω(w)) / ∂w`.
#[derive(Debug, Clone, PartialEq)]
pub struct BcState {
    dims: ModelDims,
    w_pi: Vec<f64>,
    w_a: Vec<f64>,
    w_b: Vec<f64>,
    lambda: f64,
    eta_bc: f64,
    epsilon: f64,
    initial: (Vec<f64>, Vec<f64>, Vec<f64>),
}

impl BcState {
    /// All weights zero: the uniform model.
    pub fn symmetric(dims: ModelDims, lambda: f64, eta_bc: f64, epsilon: f64) -> Result<Self> {
        let ModelDims { n, m, .. } = dims;
        Self::from_weights(
            dims,
            vec![0.0; n],
            vec![0.0; n * n],
            vec![0.0; n * m],
            lambda,
            eta_bc,
            epsilon,
        )
    }

    /// Weights `ln(p) / λ`, so the derived parameters equal `params`
    /// (entries floored at `epsilon`).
    pub fn from_params(params: &HmmParams, lambda: f64, eta_bc: f64, epsilon: f64) -> Result<Self> {
        let floored = params.floored(epsilon.max(f64::MIN_POSITIVE));
        let to_w = |xs: &[f64]| -> Vec<f64> { xs.iter().map(|&x| ln(x) / lambda).collect() };
        Self::from_weights(
            params.dims(),
            to_w(floored.pi()),
            to_w(floored.a_flat()),
            to_w(floored.b_flat()),
            lambda,
            eta_bc,
            epsilon,
        )
    }

    pub fn from_weights(
        dims: ModelDims,
        w_pi: Vec<f64>,
        w_a: Vec<f64>,
        w_b: Vec<f64>,
        lambda: f64,
        eta_bc: f64,
        epsilon: f64,
    ) -> Result<Self> {
        let ModelDims { n, m, .. } = dims;
        if w_pi.len() != n || w_a.len() != n * n || w_b.len() != n * m {
            return Err(Error::DimensionMismatch("weight arrays do not match dims".into()));
        }
        if !(lambda > 0.0 && lambda.is_finite()) || !(eta_bc >= 0.0 && eta_bc.is_finite()) {
            return Err(Error::InvalidParams(alloc::format!(
                "need lambda > 0 and eta_bc >= 0, got {lambda} and {eta_bc}"
            )));
        }
        Ok(Self {
            dims,
            initial: (w_pi.clone(), w_a.clone(), w_b.clone()),
            w_pi,
            w_a,
            w_b,
            lambda,
            eta_bc,
            epsilon,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eta_bc(&self) -> f64 {
        self.eta_bc
    }

    pub fn weights(&self, id: RowId) -> &[f64] {
        let ModelDims { n, m, .. } = self.dims;
        match id {
            RowId::Pi => &self.w_pi,
            RowId::A(i) => &self.w_a[i * n..(i + 1) * n],
            RowId::B(i) => &self.w_b[i * m..(i + 1) * m],
        }
    }

    fn weights_mut(&mut self, id: RowId) -> &mut [f64] {
        let ModelDims { n, m, .. } = self.dims;
        match id {
            RowId::Pi => &mut self.w_pi,
            RowId::A(i) => &mut self.w_a[i * n..(i + 1) * n],
            RowId::B(i) => &mut self.w_b[i * m..(i + 1) * m],
        }
    }

    /// The weight increments an observation of `y` would apply, in the
    /// layout of an [`HmmParams`] (rows are not stochastic).
    pub fn weight_step(&self, y: &ObservedSequence) -> Result<HmmParams> {
        let params = self.estimate();
        let post = forward_backward(&params.floored(self.epsilon), y)?;
        let ModelDims { n, t, .. } = self.dims;
        let ys = y.symbols();
        let eta = self.eta_bc;
        let mut step = params.clone();

        for (i, d) in step.row_mut(RowId::Pi).iter_mut().enumerate() {
            *d = eta * (post.gamma(0, i) - params.pi()[i]);
        }
        for i in 0..n {
            let occupancy: f64 = (0..t - 1).map(|s| post.gamma(s, i)).sum();
            let a_row = params.a_row(i).to_vec();
            for (j, d) in step.row_mut(RowId::A(i)).iter_mut().enumerate() {
                let expected: f64 = (0..t - 1).map(|s| post.xi(s, i, j)).sum();
                *d = eta * (expected - a_row[j] * occupancy);
            }

            let occupancy: f64 = (0..t).map(|s| post.gamma(s, i)).sum();
            let b_row = params.b_row(i).to_vec();
            let row = step.row_mut(RowId::B(i));
            for (alpha, d) in row.iter_mut().enumerate() {
                *d = -eta * b_row[alpha] * occupancy;
            }
            for (s, &symbol) in ys.iter().enumerate() {
                row[symbol] += eta * post.gamma(s, i);
            }
        }
        Ok(step)
    }
}

impl OnlineLearner for BcState {
    fn dims(&self) -> ModelDims {
        self.dims
    }

    fn observe(&mut self, y: &ObservedSequence) -> Result<UpdateReport> {
        let log_likelihood = forward_backward(&self.estimate().floored(self.epsilon), y)?.log_likelihood();
        let step = self.weight_step(y)?;
        for id in RowId::all(self.dims) {
            for (w, d) in self.weights_mut(id).iter_mut().zip(step.row(id)) {
                *w += d;
            }
        }
        Ok(UpdateReport {
            log_likelihood,
            projection_residual: None,
        })
    }

    fn estimate(&self) -> HmmParams {
        let mut out = HmmParams::uniform(self.dims);
        for id in RowId::all(self.dims) {
            softmax_into(self.weights(id), self.lambda, out.row_mut(id));
        }
        out
    }

    fn reset(&mut self) {
        let (p, a, b) = self.initial.clone();
        self.w_pi = p;
        self.w_a = a;
        self.w_b = b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::sequence_likelihood;

    fn seq(v: &[usize]) -> ObservedSequence {
        ObservedSequence::new(v.to_vec())
    }

    #[test]
    fn equal_weights_give_uniform_model() {
        let dims = ModelDims::new(2, 3, 2).unwrap();
        let s = BcState::from_weights(dims, vec![4.0; 2], vec![-1.0; 4], vec![7.5; 6], 0.3, 1.0, 0.0).unwrap();
        assert_eq!(s.estimate(), HmmParams::uniform(dims));
    }

    #[test]
    fn zero_rate_leaves_parameters() {
        let dims = ModelDims::new(2, 3, 2).unwrap();
        let mut s = BcState::symmetric(dims, 0.5, 0.0, 1e-12).unwrap();
        s.observe(&seq(&[0, 2])).unwrap();
        assert_eq!(s.estimate(), HmmParams::uniform(dims));
    }

    #[test]
    fn from_params_reproduces_parameters() {
        let dims = ModelDims::new(2, 2, 3).unwrap();
        let p = HmmParams::new(dims, vec![0.3, 0.7], vec![0.9, 0.1, 0.4, 0.6], vec![0.2, 0.8, 0.5, 0.5]).unwrap();
        let s = BcState::from_params(&p, 0.01, 1.0, 1e-12).unwrap();
        for (a, b) in s.estimate().a_flat().iter().zip(p.a_flat()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn step_is_scaled_log_likelihood_gradient() {
        let dims = ModelDims::new(2, 3, 3).unwrap();
        let w_pi = vec![0.4, -0.2];
        let w_a = vec![1.0, 0.1, -0.5, 0.3];
        let w_b = vec![0.2, -0.7, 0.9, 0.0, 0.5, -0.3];
        let (lambda, eta) = (0.8, 1.0);
        let s = BcState::from_weights(dims, w_pi, w_a, w_b, lambda, eta, 0.0).unwrap();
        let y = seq(&[2, 0, 1]);
        let step = s.weight_step(&y).unwrap();
        let ll = |state: &BcState| sequence_likelihood(&state.estimate(), &y).unwrap().ln();
        let h = 1e-6;
        for id in RowId::all(dims) {
            for k in 0..s.weights(id).len() {
                let mut plus = s.clone();
                plus.weights_mut(id)[k] += h;
                let mut minus = s.clone();
                minus.weights_mut(id)[k] -= h;
                let grad = (ll(&plus) - ll(&minus)) / (2.0 * h);
                let expected = eta / lambda * grad;
                assert!(
                    (step.row(id)[k] - expected).abs() < 1e-6,
                    "{id} {k}: {} vs {expected}",
                    step.row(id)[k]
                );
            }
        }
    }
}
