use super::matrix::Matrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 coefficient added to each gradient before the moment update.
    pub weight_decay: f64,
}

impl AdamConfig {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        AdamConfig {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
        }
    }
}

/// Adam with bias-corrected moments, one moment pair per tensor.
#[derive(Clone, Debug)]
pub struct Adam {
    config: AdamConfig,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    t: u64,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            first: Vec::new(),
            second: Vec::new(),
            t: 0,
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Applies one update. `tensors` pairs each named parameter with its
    /// gradient; the list must keep the same order and shapes across calls.
    ///
    /// Nothing is modified if any gradient is non-finite.
    pub fn step(&mut self, tensors: &mut [(&str, &mut Matrix, &Matrix)]) -> Result<()> {
        for (name, param, grad) in tensors.iter() {
            if param.shape() != grad.shape() {
                return Err(Error::Shape {
                    op: "adam_step",
                    left: param.shape(),
                    right: grad.shape(),
                });
            }
            if !grad.is_finite() {
                return Err(Error::NonFiniteGradient {
                    tensor: (*name).to_string(),
                });
            }
        }
        if self.first.is_empty() {
            self.first = tensors.iter().map(|(_, p, _)| vec![0.0; p.len()]).collect();
            self.second = self.first.clone();
        } else if self.first.len() != tensors.len()
            || self.first.iter().zip(tensors.iter()).any(|(m, (_, p, _))| m.len() != p.len())
        {
            return Err(Error::invalid("adam_step: parameter layout changed between steps"));
        }

        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let t = self.t as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);

        for (i, (_, param, grad)) in tensors.iter_mut().enumerate() {
            let (m, v) = (&mut self.first[i], &mut self.second[i]);
            for (j, (w, &g)) in param.data_mut().iter_mut().zip(grad.data()).enumerate() {
                let g = g + weight_decay * *w;
                m[j] = beta1 * m[j] + (1.0 - beta1) * g;
                v[j] = beta2 * v[j] + (1.0 - beta2) * g * g;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Matrix {
        Matrix::filled(1, 1, v)
    }

    #[test]
    fn zero_gradient_without_decay_is_a_no_op() {
        let mut adam = Adam::new(AdamConfig::new(1e-3, 0.0));
        let mut w = Matrix::from_rows(&[[0.3, -1.2], [4.0, 0.0]]);
        let before = w.clone();
        let g = Matrix::zeros(2, 2);
        for _ in 0..10 {
            adam.step(&mut [("w", &mut w, &g)]).unwrap();
        }
        assert_eq!(w, before);
        assert_eq!(adam.steps(), 10);
    }

    #[test]
    fn constant_gradient_moves_against_its_sign() {
        for g in [2.5, -0.01] {
            let mut adam = Adam::new(AdamConfig::new(1e-2, 0.0));
            let mut w = scalar(0.0);
            let grad = scalar(g);
            for _ in 0..100 {
                adam.step(&mut [("w", &mut w, &grad)]).unwrap();
            }
            assert!(w.get(0, 0) * g < 0.0, "g={g} w={}", w.get(0, 0));
        }
    }

    #[test]
    fn quadratic_bowl_converges_monotonically() {
        let mut adam = Adam::new(AdamConfig::new(1e-3, 0.0));
        let mut w = scalar(1.0);
        let mut last = 1.0;
        for _ in 0..5000 {
            let grad = scalar(2.0 * w.get(0, 0));
            adam.step(&mut [("w", &mut w, &grad)]).unwrap();
            let loss = w.get(0, 0).powi(2);
            assert!(loss <= last);
            last = loss;
        }
        assert!(w.get(0, 0).abs() < 0.01, "w = {}", w.get(0, 0));
    }

    #[test]
    fn non_finite_gradient_names_the_tensor_and_leaves_params() {
        let mut adam = Adam::new(AdamConfig::new(1e-3, 0.0));
        let mut a = scalar(1.0);
        let mut b = scalar(2.0);
        let ga = scalar(0.5);
        let gb = scalar(f64::NAN);
        let err = adam
            .step(&mut [("w_out", &mut a, &ga), ("b_out", &mut b, &gb)])
            .unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient { ref tensor } if tensor == "b_out"));
        assert_eq!(a.get(0, 0), 1.0);
        assert_eq!(adam.steps(), 0);
    }

    #[test]
    fn weight_decay_shrinks_with_zero_gradient() {
        let mut adam = Adam::new(AdamConfig::new(1e-2, 1.5e-3));
        let mut w = scalar(3.0);
        let g = scalar(0.0);
        adam.step(&mut [("w", &mut w, &g)]).unwrap();
        assert!(w.get(0, 0) < 3.0);
    }
}
