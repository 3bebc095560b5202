use crate::error::{LabError, Result};

use super::config::TrainConfig;
use super::model::{FnoModel, Gradients};
use super::real::Real;

/// First and second moment estimates, one buffer per parameter array.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    step: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(model: &FnoModel<T>) -> Self {
        let zeros = || model.params().iter().map(|p| vec![T::zero(); p.data.len()]).collect();
        AdamState {
            m: zeros(),
            v: zeros(),
            step: 0,
        }
    }

    /// Number of updates applied so far.
    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update.
pub fn adam_step<T: Real>(
    model: &mut FnoModel<T>,
    grads: &Gradients<T>,
    state: &mut AdamState<T>,
    cfg: &TrainConfig,
) -> Result<()> {
    if grads.arrays.len() != model.params().len() || state.m.len() != grads.arrays.len() {
        return Err(LabError::ShapeMismatch("gradient and optimizer state do not match the model".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let (tb1, tb2) = (T::lit(b1), T::lit(b2));
    let (ob1, ob2) = (T::lit(1.0 - b1), T::lit(1.0 - b2));
    let step = T::lit(cfg.learning_rate / c1);
    let inv_c2 = T::lit(1.0 / c2);
    let eps = T::lit(cfg.adam_eps);
    for (((p, g), m), v) in model
        .params_mut()
        .iter_mut()
        .zip(&grads.arrays)
        .zip(&mut state.m)
        .zip(&mut state.v)
    {
        if g.len() != p.data.len() {
            return Err(LabError::LengthMismatch {
                expected: p.data.len(),
                found: g.len(),
            });
        }
        for (((w, &g), m), v) in p.data.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = tb1 * *m + ob1 * g;
            *v = tb2 * *v + ob2 * g * g;
            *w -= step * *m / ((*v * inv_c2).sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fno::FnoConfig;

    fn tiny() -> FnoModel<f64> {
        let cfg = FnoConfig {
            in_channels: 3,
            width: 2,
            n_layers: 1,
            modes: 1,
            projection_hidden: 2,
        };
        FnoModel::init(cfg, 3).unwrap()
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut m = tiny();
        let before = m.clone();
        let g = m.zero_gradients();
        let mut s = AdamState::new(&m);
        adam_step(&mut m, &g, &mut s, &TrainConfig::default()).unwrap();
        assert_eq!(m, before);
        assert_eq!(s.step(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut m = tiny();
        let before = m.clone();
        let mut g = m.zero_gradients();
        g.arrays[0][0] = 3.7;
        g.arrays[0][1] = -0.002;
        let cfg = TrainConfig {
            adam_eps: 0.0,
            learning_rate: 0.01,
            ..TrainConfig::default()
        };
        let mut s = AdamState::new(&m);
        adam_step(&mut m, &g, &mut s, &cfg).unwrap();
        let d0 = m.params()[0].data[0] - before.params()[0].data[0];
        let d1 = m.params()[0].data[1] - before.params()[0].data[1];
        assert!((d0 + 0.01).abs() < 1e-15);
        assert!((d1 - 0.01).abs() < 1e-15);
    }

    #[test]
    fn two_step_hand_trace() {
        let mut m = tiny();
        let w0 = m.params()[1].data[0];
        let cfg = TrainConfig {
            learning_rate: 0.1,
            adam_beta1: 0.5,
            adam_beta2: 0.75,
            adam_eps: 0.0,
            ..TrainConfig::default()
        };
        let mut s = AdamState::new(&m);
        let mut g = m.zero_gradients();
        g.arrays[1][0] = 1.0;
        adam_step(&mut m, &g, &mut s, &cfg).unwrap();
        g.arrays[1][0] = -2.0;
        adam_step(&mut m, &g, &mut s, &cfg).unwrap();
        // step 1: m = .5, v = .25 → m̂ = 1, v̂ = 1, Δ = -.1
        // step 2: m = .25 - 1 = -.75, v = .1875 + 1 = 1.1875
        //         m̂ = -.75/.75 = -1, v̂ = 1.1875/.4375
        let v_hat: f64 = 1.1875 / 0.4375;
        let expected = w0 - 0.1 + 0.1 / v_hat.sqrt();
        assert!((m.params()[1].data[0] - expected).abs() < 1e-14);
    }
}
