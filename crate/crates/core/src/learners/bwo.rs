use crate::error::{Error, Result};
use crate::hmm::{floor_row, forward_backward, HmmParams, ModelDims, ObservedSequence, RowId};

use super::{OnlineLearner, UpdateReport};

/// One Baum-Welch reestimation pass on a single sequence.
///
/// `π̂_i = γ_1(i)`, `Â_ij = Σ_t ξ_t(i,j) / Σ_{t<T} γ_t(i)`,
/// `B̂_iα = Σ_{t: y_t = α} γ_t(i) / Σ_t γ_t(i)`. Rows whose denominator is
/// zero are copied from `params`.
pub fn bw_reestimate(params: &HmmParams, y: &ObservedSequence) -> Result<HmmParams> {
    let post = forward_backward(params, y)?;
    let ModelDims { n, m, t } = params.dims();
    let ys = y.symbols();
    let mut out = params.clone();

    out.row_mut(RowId::Pi).copy_from_slice(post.gamma_row(0));

    for i in 0..n {
        let denom: f64 = (0..t - 1).map(|s| post.gamma(s, i)).sum();
        if denom > 0.0 {
            let row = out.row_mut(RowId::A(i));
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = (0..t - 1).map(|s| post.xi(s, i, j)).sum::<f64>() / denom;
            }
        }

        let denom: f64 = (0..t).map(|s| post.gamma(s, i)).sum();
        if denom > 0.0 {
            let mut counts = alloc::vec![0.0; m];
            for (s, &symbol) in ys.iter().enumerate() {
                counts[symbol] += post.gamma(s, i);
            }
            let row = out.row_mut(RowId::B(i));
            for (slot, c) in row.iter_mut().zip(counts) {
                *slot = c / denom;
            }
        }
    }
    Ok(out)
}

/// Baum-Welch Online: a fraction `η_BW` of the full reestimation step.
#[derive(Debug, Clone, PartialEq)]
pub struct BwoState {
    omega: HmmParams,
    eta_bw: f64,
    epsilon: f64,
    initial: HmmParams,
}

impl BwoState {
    pub fn new(omega: HmmParams, eta_bw: f64, epsilon: f64) -> Result<Self> {
        if !(eta_bw >= 0.0 && eta_bw.is_finite()) {
            return Err(Error::InvalidParams(alloc::format!(
                "learning rate must be >= 0, got {eta_bw}"
            )));
        }
        let report = omega.validate();
        if let Some(v) = report.violations.first() {
            return Err(Error::InvalidParams(alloc::format!("initial student: {v}")));
        }
        Ok(Self {
            initial: omega.clone(),
            omega,
            eta_bw,
            epsilon,
        })
    }

    pub fn omega(&self) -> &HmmParams {
        &self.omega
    }

    pub fn eta_bw(&self) -> f64 {
        self.eta_bw
    }

    /// The update `Δω̃ = η_BW (BW(ω) − ω)` this state would apply for `y`,
    /// before any simplex repair.
    pub fn variation(&self, y: &ObservedSequence) -> Result<HmmParams> {
        let target = bw_reestimate(&self.omega.floored(self.epsilon), y)?;
        let mut out = target.clone();
        for id in RowId::all(self.omega.dims()) {
            for ((d, &new), &old) in out.row_mut(id).iter_mut().zip(target.row(id)).zip(self.omega.row(id)) {
                *d = self.eta_bw * (new - old);
            }
        }
        Ok(out)
    }
}

impl OnlineLearner for BwoState {
    fn dims(&self) -> ModelDims {
        self.omega.dims()
    }

    fn observe(&mut self, y: &ObservedSequence) -> Result<UpdateReport> {
        let floored = self.omega.floored(self.epsilon);
        let post_ll = forward_backward(&floored, y)?.log_likelihood();
        let target = bw_reestimate(&floored, y)?;
        let eta = self.eta_bw;
        let keep = 1.0 - eta;
        let mut next = self.omega.clone();
        for id in RowId::all(self.omega.dims()) {
            let row = next.row_mut(id);
            for (x, &t) in row.iter_mut().zip(target.row(id)) {
                *x = keep * *x + eta * t;
            }
            // Only rows pushed off the simplex (η_BW > 1) are repaired.
            if row.iter().any(|&x| !(x >= 0.0)) {
                row.iter_mut().for_each(|x| {
                    if !(*x >= 0.0) {
                        *x = 0.0;
                    }
                });
                floor_row(row, self.epsilon.max(f64::MIN_POSITIVE));
            }
        }
        self.omega = next;
        Ok(UpdateReport {
            log_likelihood: post_ll,
            projection_residual: None,
        })
    }

    fn estimate(&self) -> HmmParams {
        self.omega.clone()
    }

    fn reset(&mut self) {
        self.omega = self.initial.clone();
    }
}
