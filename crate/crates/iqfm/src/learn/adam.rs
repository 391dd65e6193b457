//! Adam with bias correction and optional L2-style weight decay (decay is
//! added to the raw gradient before the moment updates, as in the common
//! reference implementation).

use ndarray::{Array, Dimension};

use crate::error::{Error, Result};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// First/second moment accumulators for one parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState<D: Dimension> {
    m: Array<f64, D>,
    v: Array<f64, D>,
    t: u64,
}

impl<D: Dimension> AdamState<D> {
    /// Zeroed state shaped like the parameter it will update.
    pub fn for_param(param: &Array<f64, D>) -> Self {
        AdamState {
            m: Array::zeros(param.raw_dim()),
            v: Array::zeros(param.raw_dim()),
            t: 0,
        }
    }

    /// One update of `param` in place.
    pub fn step(
        &mut self,
        param: &mut Array<f64, D>,
        grad: &Array<f64, D>,
        learning_rate: f64,
        weight_decay: f64,
    ) -> Result<()> {
        if grad.raw_dim() != param.raw_dim() {
            return Err(Error::Optimizer(format!(
                "gradient shape {:?} does not match parameter shape {:?}",
                grad.shape(),
                param.shape()
            )));
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("adam gradient"));
        }
        self.t += 1;
        let bc1 = 1.0 - BETA1.powi(self.t as i32);
        let bc2 = 1.0 - BETA2.powi(self.t as i32);
        for ((p, g), (m, v)) in param
            .iter_mut()
            .zip(grad.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let g = g + weight_decay * *p;
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= learning_rate * m_hat / (v_hat.sqrt() + EPS);
        }
        Ok(())
    }
}
