use crate::model::{OptimizerState, Param};
use crate::scalar::Real;

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub state: OptimizerState<T>,
}

impl<T: Real> Adam<T> {
    pub fn new(params: &[Param<T>], beta1: f64, beta2: f64, eps: f64) -> Self {
        let zeros = || params.iter().map(|p| vec![T::zero(); p.data.len()]).collect();
        Self {
            beta1,
            beta2,
            eps,
            state: OptimizerState {
                step: 0,
                m: zeros(),
                v: zeros(),
            },
        }
    }

    pub fn step(&mut self, params: &mut [Param<T>], grads: &[Vec<T>], lr: f64) {
        self.state.step += 1;
        let t = self.state.step as i32;
        let (b1, b2) = (T::lit(self.beta1), T::lit(self.beta2));
        let c1 = T::lit(1.0 - self.beta1.powi(t));
        let c2 = T::lit(1.0 - self.beta2.powi(t));
        let (lr, eps) = (T::lit(lr), T::lit(self.eps));
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.state.m).zip(&mut self.state.v) {
            for i in 0..p.data.len() {
                m[i] = b1 * m[i] + (T::one() - b1) * g[i];
                v[i] = b2 * v[i] + (T::one() - b2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p.data[i] = p.data[i] - lr * mh / (vh.sqrt() + eps);
            }
        }
    }
}
