//! Adam with bias-corrected moment estimates.

use serde::{Deserialize, Serialize};

use super::params::{Gradients, Parameterized};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !(self.learning_rate > 0.0) || !unit(self.beta1) || !unit(self.beta2) || !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!("invalid Adam settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn new<P: Parameterized + ?Sized>(params: &P, config: AdamConfig) -> Result<Self> {
        config.validate()?;
        let zeros: Vec<Vec<f64>> = params
            .param_blocks()
            .iter()
            .map(|b| vec![0.0; b.values.len()])
            .collect();
        Ok(AdamState {
            config,
            first_moment: zeros.clone(),
            second_moment: zeros,
            step: 0,
        })
    }

    /// One update `θ ← θ − lr · m̂ / (√v̂ + ε)`.
    pub fn step<P: Parameterized + ?Sized>(&mut self, params: &mut P, grads: &Gradients) -> Result<()> {
        grads.check_layout(params)?;
        if self.first_moment.len() != grads.blocks.len()
            || self
                .first_moment
                .iter()
                .zip(&grads.blocks)
                .any(|(m, g)| m.len() != g.values.len())
        {
            return Err(Error::InvalidInput(
                "optimizer state does not mirror the parameter set".into(),
            ));
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let bias1 = 1.0 - beta1.powi(t);
        let bias2 = 1.0 - beta2.powi(t);
        for (((block, g), m), v) in params
            .param_blocks_mut()
            .into_iter()
            .zip(&grads.blocks)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            for i in 0..block.values.len() {
                let gi = g.values[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                block.values[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::params::{BlockMut, BlockRef};

    #[derive(Clone)]
    struct Flat(Vec<f64>);

    impl Parameterized for Flat {
        fn param_blocks(&self) -> Vec<BlockRef<'_>> {
            vec![BlockRef::vector("w".into(), &self.0)]
        }
        fn param_blocks_mut(&mut self) -> Vec<BlockMut<'_>> {
            vec![BlockMut::vector("w".into(), &mut self.0)]
        }
    }

    fn grads(v: Vec<f64>) -> Gradients {
        let mut g = Gradients::default();
        g.push_vector("w", v);
        g
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut p = Flat(vec![0.3, -1.7, 4.0]);
        let before = p.0.clone();
        let mut adam = AdamState::new(&p, AdamConfig::default()).unwrap();
        for _ in 0..50 {
            adam.step(&mut p, &grads(vec![0.0; 3])).unwrap();
        }
        assert_eq!(p.0, before);
    }

    // At t = 1: m̂ = g and v̂ = g², so the step is lr · g / (|g| + ε).
    #[test]
    fn first_step_is_sign_scaled_by_learning_rate() {
        let mut p = Flat(vec![1.0, 1.0, 1.0]);
        let cfg = AdamConfig::default();
        let mut adam = AdamState::new(&p, cfg).unwrap();
        let g = vec![0.5, -3.0, 1e-3];
        adam.step(&mut p, &grads(g.clone())).unwrap();
        for (pi, gi) in p.0.iter().zip(&g) {
            let expected = 1.0 - cfg.learning_rate * gi / (gi.abs() + cfg.epsilon);
            assert!((pi - expected).abs() < 1e-15);
            assert!(((1.0 - pi) - cfg.learning_rate * gi.signum()).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_across_runs() {
        let run = || {
            let mut p = Flat(vec![0.1, 0.2]);
            let mut adam = AdamState::new(&p, AdamConfig::default()).unwrap();
            for k in 0..20 {
                let k = k as f64;
                adam.step(&mut p, &grads(vec![k.sin(), k.cos()])).unwrap();
            }
            p.0
        };
        let (a, b) = (run(), run());
        assert_eq!(a[0].to_bits(), b[0].to_bits());
        assert_eq!(a[1].to_bits(), b[1].to_bits());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = Flat(vec![0.0; 3]);
        let mut adam = AdamState::new(&p, AdamConfig::default()).unwrap();
        assert!(adam.step(&mut p, &grads(vec![0.0; 2])).is_err());
    }

    #[test]
    fn second_moments_stay_non_negative() {
        let mut p = Flat(vec![0.0; 2]);
        let mut adam = AdamState::new(&p, AdamConfig::default()).unwrap();
        adam.step(&mut p, &grads(vec![-5.0, 2.0])).unwrap();
        assert!(adam.second_moment[0].iter().all(|&v| v >= 0.0));
    }
}
