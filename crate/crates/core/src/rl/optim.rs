use serde::{Deserialize, Serialize};

use crate::tensor::ParamSet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam moment estimates for one parameter set, tensor order as in
/// [`ParamSet::tensors`].
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new<P: ParamSet>(config: AdamConfig, params: &P) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.data.len()]).collect();
        Self { config, step: 0, m: zeros.clone(), v: zeros }
    }

    /// One descent step along `grads`.
    pub fn apply<P: ParamSet>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let g: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.data.to_vec()).collect();
        let dst = params.tensors_mut();
        if dst.len() != g.len() || dst.len() != self.m.len() {
            return Err(crate::error::shape_err("adam tensors", self.m.len(), g.len()));
        }
        self.step += 1;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step as i32);
        for (((p, g), m), v) in dst.into_iter().zip(&g).zip(&mut self.m).zip(&mut self.v) {
            if p.len() != g.len() || m.len() != g.len() {
                return Err(crate::error::shape_err("adam tensor", m.len(), g.len()));
            }
            for k in 0..p.len() {
                m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
                v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
                p[k] -= c.lr * (m[k] / bc1) / ((v[k] / bc2).sqrt() + c.eps);
            }
        }
        if g.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Divergence("non-finite gradient".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::TensorRef;

    struct Vec1(Vec<f64>);

    impl ParamSet for Vec1 {
        fn tensors(&self) -> Vec<TensorRef<'_>> {
            vec![TensorRef { name: "x".into(), shape: vec![self.0.len()], data: &self.0 }]
        }
        fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
            vec![&mut self.0]
        }
    }

    #[test]
    fn first_step_moves_by_lr_against_the_gradient_sign() {
        let mut p = Vec1(vec![1.0, -2.0]);
        let mut adam = Adam::new(AdamConfig::with_lr(0.1), &p);
        adam.apply(&mut p, &Vec1(vec![3.0, -0.5])).unwrap();
        assert!((p.0[0] - 0.9).abs() < 1e-6);
        assert!((p.0[1] + 1.9).abs() < 1e-6);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut p = Vec1(vec![5.0]);
        let mut adam = Adam::new(AdamConfig::with_lr(0.05), &p);
        for _ in 0..2000 {
            let g = Vec1(vec![2.0 * (p.0[0] - 1.5)]);
            adam.apply(&mut p, &g).unwrap();
        }
        assert!((p.0[0] - 1.5).abs() < 1e-3);
    }
}
