use super::Matrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..Self::default()
        }
    }
}

/// Adam with bias correction. Moment buffers are created on the first step
/// and mirror the parameter shapes from then on.
#[derive(Clone, Debug)]
pub struct Adam {
    config: AdamConfig,
    step: u64,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// Applies one update. Fails without touching any parameter if a
    /// gradient is non-finite or shapes disagree.
    pub fn step(&mut self, params: &mut [&mut Matrix], grads: &[&Matrix]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::dim(
                "adam_step",
                format!("{} params, {} grads", params.len(), grads.len()),
            ));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() {
                return Err(Error::dim(
                    "adam_step",
                    format!("param {i}: {:?} vs grad {:?}", p.shape(), g.shape()),
                ));
            }
            if let Some(k) = g.data().iter().position(|x| !x.is_finite()) {
                return Err(Error::Training(format!(
                    "non-finite gradient in parameter {i} at element {k} (step {})",
                    self.step + 1
                )));
            }
        }
        if self.m.is_empty() {
            self.m = params
                .iter()
                .map(|p| Matrix::zeros(p.rows(), p.cols()))
                .collect();
            self.v = self.m.clone();
        } else if self.m.len() != params.len()
            || self
                .m
                .iter()
                .zip(params.iter())
                .any(|(m, p)| m.shape() != p.shape())
        {
            return Err(Error::dim(
                "adam_step",
                "parameter set changed between steps",
            ));
        }

        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let (p, g) = (p.data_mut(), g.data());
            let (m, v) = (m.data_mut(), v.data_mut());
            for k in 0..p.len() {
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                let mhat = m[k] / bc1;
                let vhat = v[k] / bc2;
                p[k] -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = Matrix::filled(2, 2, 0.7);
        let g = Matrix::zeros(2, 2);
        let mut adam = Adam::new(AdamConfig::default());
        adam.step(&mut [&mut p], &[&g]).unwrap();
        assert_eq!(p, Matrix::filled(2, 2, 0.7));
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = Matrix::zeros(1, 3);
        let g = Matrix::from_vec(1, 3, vec![3.0, -0.01, 100.0]).unwrap();
        let mut adam = Adam::new(AdamConfig::with_lr(1e-3));
        adam.step(&mut [&mut p], &[&g]).unwrap();
        for (x, s) in p.data().iter().zip([-1.0, 1.0, -1.0]) {
            assert!((x - s * 1e-3).abs() < 1e-8, "{x}");
        }
    }

    #[test]
    fn nan_gradient_is_a_training_error() {
        let mut p = Matrix::zeros(1, 2);
        let g = Matrix::from_vec(1, 2, vec![0.0, f64::NAN]).unwrap();
        let mut adam = Adam::new(AdamConfig::default());
        assert!(matches!(
            adam.step(&mut [&mut p], &[&g]),
            Err(Error::Training(_))
        ));
        assert_eq!(p, Matrix::zeros(1, 2));
    }

    #[test]
    fn converges_on_quadratic() {
        let mut x = Matrix::from_vec(1, 2, vec![1.0, 1.0]).unwrap();
        let mut adam = Adam::new(AdamConfig::with_lr(0.1));
        for _ in 0..200 {
            let g = x.map(|v| 2.0 * v);
            adam.step(&mut [&mut x], &[&g]).unwrap();
        }
        let norm = x.data().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-2, "{norm}");
    }
}
