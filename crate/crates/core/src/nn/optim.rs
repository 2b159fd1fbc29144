//! SGD and Adam over named parameter tensors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Adam,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::InvalidConfig("betas must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Optimizer with per-tensor first/second moment state, keyed by parameter
/// name.
#[derive(Debug, Clone)]
pub struct Optimizer {
    config: OptimizerConfig,
    t: u64,
    moments: BTreeMap<String, (Vec<f64>, Vec<f64>)>,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig) -> Result<Optimizer> {
        config.validate()?;
        Ok(Optimizer {
            config,
            t: 0,
            moments: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    /// Overrides the step size (used for lr = 0 "null training" runs the
    /// validation gate would otherwise reject).
    pub fn with_learning_rate(mut self, lr: f64) -> Optimizer {
        self.config.learning_rate = lr;
        self
    }

    /// One update over aligned (name, param) / (name, grad) listings. The
    /// two listings must come from identically shaped structs so that names
    /// line up pairwise.
    pub fn step(
        &mut self,
        params: Vec<(String, &mut Tensor)>,
        grads: &[(String, &Tensor)],
    ) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::DimensionMismatch {
                what: "optimizer parameter/gradient listing".into(),
                expected: params.len(),
                got: grads.len(),
            });
        }
        self.t += 1;
        for ((p_name, param), (g_name, grad)) in params.into_iter().zip(grads) {
            if &p_name != g_name {
                return Err(Error::InvalidConfig(format!(
                    "parameter/gradient name mismatch: {p_name} vs {g_name}"
                )));
            }
            if param.len() != grad.len() {
                return Err(Error::DimensionMismatch {
                    what: format!("gradient for {p_name}"),
                    expected: param.len(),
                    got: grad.len(),
                });
            }
            match self.config.kind {
                OptimizerKind::Sgd => {
                    let lr = self.config.learning_rate;
                    for (p, g) in param.data_mut().iter_mut().zip(grad.data()) {
                        *p -= lr * g;
                    }
                }
                OptimizerKind::Adam => {
                    let (m, v) = self
                        .moments
                        .entry(p_name)
                        .or_insert_with(|| (vec![0.0; grad.len()], vec![0.0; grad.len()]));
                    let c = &self.config;
                    let bc1 = 1.0 - c.beta1.powi(self.t as i32);
                    let bc2 = 1.0 - c.beta2.powi(self.t as i32);
                    for ((p, &g), (m_i, v_i)) in param
                        .data_mut()
                        .iter_mut()
                        .zip(grad.data())
                        .zip(m.iter_mut().zip(v.iter_mut()))
                    {
                        *m_i = c.beta1 * *m_i + (1.0 - c.beta1) * g;
                        *v_i = c.beta2 * *v_i + (1.0 - c.beta2) * g * g;
                        let m_hat = *m_i / bc1;
                        let v_hat = *v_i / bc2;
                        *p -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named_single(t: &Tensor) -> Vec<(String, &Tensor)> {
        vec![("x".to_string(), t)]
    }

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        let mut p = Tensor::vector(vec![1.0, -2.0, 3.0]);
        let g = p.zeros_like();
        let before = p.clone();
        let mut opt = Optimizer::new(OptimizerConfig::default()).unwrap();
        opt.step(vec![("x".into(), &mut p)], &named_single(&g)).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate_sign() {
        let mut p = Tensor::vector(vec![0.0, 0.0]);
        let g = Tensor::vector(vec![0.002, -5.0]);
        let mut opt = Optimizer::new(OptimizerConfig::default()).unwrap();
        opt.step(vec![("x".into(), &mut p)], &[("x".into(), &g)]).unwrap();
        // Bias-corrected first step is lr * g / (|g| + eps) ~= lr * sign(g).
        assert!((p.data()[0] + 0.001).abs() < 1e-6);
        assert!((p.data()[1] - 0.001).abs() < 1e-6);
    }

    #[test]
    fn sgd_step_is_plain_descent() {
        let mut p = Tensor::vector(vec![1.0]);
        let g = Tensor::vector(vec![0.5]);
        let config = OptimizerConfig {
            kind: OptimizerKind::Sgd,
            learning_rate: 0.1,
            ..OptimizerConfig::default()
        };
        let mut opt = Optimizer::new(config).unwrap();
        opt.step(vec![("x".into(), &mut p)], &[("x".into(), &g)]).unwrap();
        assert!((p.data()[0] - 0.95).abs() < 1e-12);
    }

    #[test]
    fn adam_minimizes_quadratic_bowl() {
        // f(x) = 0.5 * ||x - a||^2, gradient x - a.
        let target = [0.3, -0.1, 0.25, 0.05];
        let mut p = Tensor::vector(vec![0.0; 4]);
        let mut opt = Optimizer::new(OptimizerConfig::default()).unwrap();
        let mut best = f64::INFINITY;
        for _ in 0..2000 {
            let g = Tensor::vector(
                p.data().iter().zip(&target).map(|(x, a)| x - a).collect(),
            );
            opt.step(vec![("x".into(), &mut p)], &[("x".into(), &g)]).unwrap();
            let f: f64 = p
                .data()
                .iter()
                .zip(&target)
                .map(|(x, a)| 0.5 * (x - a) * (x - a))
                .sum();
            best = best.min(f);
        }
        assert!(best < 1e-6, "best objective {best}");
    }

    #[test]
    fn name_mismatch_is_an_error() {
        let mut p = Tensor::vector(vec![1.0]);
        let g = Tensor::vector(vec![1.0]);
        let mut opt = Optimizer::new(OptimizerConfig::default()).unwrap();
        assert!(opt
            .step(vec![("x".into(), &mut p)], &[("y".into(), &g)])
            .is_err());
    }
}
