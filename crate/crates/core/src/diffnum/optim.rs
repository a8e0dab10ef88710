use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerSpec {
    Sgd {
        lr: f64,
        #[serde(default)]
        momentum: f64,
    },
    Adam {
        lr: f64,
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps")]
        eps: f64,
    },
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        OptimizerSpec::Adam {
            lr: 1e-3,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }
}

impl OptimizerSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            OptimizerSpec::Sgd { lr, momentum } => lr > 0.0 && (0.0..1.0).contains(&momentum),
            OptimizerSpec::Adam {
                lr,
                beta1,
                beta2,
                eps,
            } => lr > 0.0 && (0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid optimizer settings {self:?}")))
        }
    }
}

/// Optimizer hyperparameters plus per-parameter accumulators.
#[derive(Debug, Clone)]
pub struct OptimState {
    spec: OptimizerSpec,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl OptimState {
    pub fn new(spec: OptimizerSpec, params: &[&Tensor]) -> Self {
        let zeros = || params.iter().map(|p| vec![0.0; p.len()]).collect::<Vec<_>>();
        let second = match spec {
            OptimizerSpec::Adam { .. } => zeros(),
            OptimizerSpec::Sgd { .. } => Vec::new(),
        };
        Self {
            spec,
            step: 0,
            first: zeros(),
            second,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update. Parameters are left untouched if any gradient is
    /// non-finite or mis-shaped.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[Tensor]) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.first.len() {
            return Err(Error::Shape(format!(
                "optimizer tracks {} parameters, got {} params and {} grads",
                self.first.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() {
                return Err(Error::Shape(format!(
                    "parameter {i}: shape {:?} vs gradient {:?}",
                    p.shape(),
                    g.shape()
                )));
            }
            if let Some(k) = g.data().iter().position(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite gradient {} at parameter {i}, element {k}",
                    g.data()[k]
                )));
            }
        }

        self.step += 1;
        match self.spec {
            OptimizerSpec::Sgd { lr, momentum } => {
                for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.first) {
                    for ((pv, &gv), vv) in p.data_mut().iter_mut().zip(g.data()).zip(v.iter_mut()) {
                        *vv = momentum * *vv + gv;
                        *pv -= lr * *vv;
                    }
                }
            }
            OptimizerSpec::Adam {
                lr,
                beta1,
                beta2,
                eps,
            } => {
                let t = self.step as i32;
                let bc1 = 1.0 - beta1.powi(t);
                let bc2 = 1.0 - beta2.powi(t);
                for (((p, g), m), v) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(&mut self.first)
                    .zip(&mut self.second)
                {
                    for (((pv, &gv), mv), vv) in p
                        .data_mut()
                        .iter_mut()
                        .zip(g.data())
                        .zip(m.iter_mut())
                        .zip(v.iter_mut())
                    {
                        *mv = beta1 * *mv + (1.0 - beta1) * gv;
                        *vv = beta2 * *vv + (1.0 - beta2) * gv * gv;
                        let m_hat = *mv / bc1;
                        let v_hat = *vv / bc2;
                        *pv -= lr * m_hat / (v_hat.sqrt() + eps);
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

    #[test]
    fn sgd_single_step() {
        let mut p = Tensor::scalar(1.0);
        let spec = OptimizerSpec::Sgd { lr: 0.1, momentum: 0.0 };
        let mut st = OptimState::new(spec, &[&p]);
        st.step(&mut [&mut p], &[Tensor::scalar(1.0)]).unwrap();
        assert!((p.data()[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        for spec in [OptimizerSpec::default(), OptimizerSpec::Sgd { lr: 0.5, momentum: 0.9 }] {
            let mut p = Tensor::vector(vec![0.3, -1.2]);
            let before = p.clone();
            let mut st = OptimState::new(spec, &[&p]);
            for _ in 0..3 {
                st.step(&mut [&mut p], &[Tensor::zeros(&[2])]).unwrap();
            }
            assert_eq!(p, before);
        }
    }

    #[test]
    fn adam_first_step_is_lr_regardless_of_scale() {
        for scale in [1e-4, 1.0, 1e4] {
            let mut p = Tensor::vector(vec![0.0; 3]);
            let mut st = OptimState::new(OptimizerSpec::default(), &[&p]);
            st.step(&mut [&mut p], &[Tensor::filled(&[3], scale)]).unwrap();
            for &v in p.data() {
                assert!((v + 1e-3).abs() < 1e-6, "scale {scale}: {v}");
            }
        }
    }

    #[test]
    fn nan_gradient_rejected() {
        let mut p = Tensor::vector(vec![1.0, 2.0]);
        let before = p.clone();
        let mut st = OptimState::new(OptimizerSpec::default(), &[&p]);
        let err = st
            .step(&mut [&mut p], &[Tensor::vector(vec![0.0, f64::NAN])])
            .unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
        assert_eq!(p, before);
        assert_eq!(st.steps_taken(), 0);
    }
}
