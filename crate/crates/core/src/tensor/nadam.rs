use crate::error::{Error, Result};

/// NADAM moment hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NadamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for NadamConfig {
    fn default() -> Self {
        NadamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Nesterov-accelerated Adam, minimizing.
#[derive(Debug, Clone, PartialEq)]
pub struct Nadam {
    config: NadamConfig,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Nadam {
    pub fn new(num_params: usize, config: NadamConfig) -> Self {
        Nadam {
            config,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> NadamConfig {
        self.config
    }

    /// One descent step. Refuses (leaving everything untouched) when any
    /// gradient entry is non-finite.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::shape(format!(
                "optimizer tracks {} parameters, got {} params / {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::numeric(format!("non-finite gradient at index {i}")));
        }
        let NadamConfig { beta1, beta2, eps } = self.config;
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            let direction = beta1 * m_hat + (1.0 - beta1) * g / c1;
            *p -= lr * direction / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}
