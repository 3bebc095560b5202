use crate::error::{LabError, Result};
use crate::rng::{SampleRng, INIT_STREAM};

use super::config::FnoConfig;
use super::real::Real;

/// One named, shaped parameter tensor stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamArray<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Real> ParamArray<T> {
    fn zeros(name: String, shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        ParamArray {
            name,
            shape,
            data: vec![T::zero(); len],
        }
    }

    fn uniform(name: String, shape: Vec<usize>, bound: f64, rng: &mut SampleRng) -> Self {
        let len = shape.iter().product();
        let data = (0..len).map(|_| T::lit(rng.uniform_range(-bound, bound))).collect();
        ParamArray { name, shape, data }
    }
}

/// Parameter order:
///
/// | index | name | shape |
/// |---|---|---|
/// | 0, 1 | `lifting.weight`, `lifting.bias` | `[w, c_in]`, `[w]` |
/// | 2+4l .. 5+4l | `spectral.l.re`, `spectral.l.im`, `bypass.l.weight`, `bypass.l.bias` | `[2m, 2m, w, w]` ×2, `[w, w]`, `[w]` |
/// | end-4 .. end | `projection.0.weight`, `projection.0.bias`, `projection.1.weight`, `projection.1.bias` | `[p, w]`, `[p]`, `[1, p]`, `[1]` |
///
/// Spectral weights are indexed `[kx_idx][ky_idx][out][in]`, one complex
/// weight matrix per retained frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct FnoModel<T> {
    config: FnoConfig,
    params: Vec<ParamArray<T>>,
}

pub(crate) const LIFT_W: usize = 0;
pub(crate) const LIFT_B: usize = 1;

#[inline]
pub(crate) fn spec_re(l: usize) -> usize {
    2 + 4 * l
}
#[inline]
pub(crate) fn spec_im(l: usize) -> usize {
    3 + 4 * l
}
#[inline]
pub(crate) fn bypass_w(l: usize) -> usize {
    4 + 4 * l
}
#[inline]
pub(crate) fn bypass_b(l: usize) -> usize {
    5 + 4 * l
}

impl<T: Real> FnoModel<T> {
    /// Random initialisation: pointwise weights uniform in `±√(1/fan_in)`,
    /// spectral real and imaginary parts uniform in `±1/width²`, biases zero.
    /// Draws are made in `f64` so both precisions start from the same values.
    pub fn init(config: FnoConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = SampleRng::new(seed, INIT_STREAM);
        let w = config.width;
        let r = 2 * config.modes;
        let p = config.projection_hidden;
        let fan = |k: usize| (1.0 / k as f64).sqrt();
        let spec_bound = 1.0 / (w * w) as f64;

        let mut params = Vec::with_capacity(2 + 4 * config.n_layers + 4);
        params.push(ParamArray::uniform("lifting.weight".into(), vec![w, config.in_channels], fan(config.in_channels), &mut rng));
        params.push(ParamArray::zeros("lifting.bias".into(), vec![w]));
        for l in 0..config.n_layers {
            params.push(ParamArray::uniform(format!("spectral.{l}.re"), vec![r, r, w, w], spec_bound, &mut rng));
            params.push(ParamArray::uniform(format!("spectral.{l}.im"), vec![r, r, w, w], spec_bound, &mut rng));
            params.push(ParamArray::uniform(format!("bypass.{l}.weight"), vec![w, w], fan(w), &mut rng));
            params.push(ParamArray::zeros(format!("bypass.{l}.bias"), vec![w]));
        }
        params.push(ParamArray::uniform("projection.0.weight".into(), vec![p, w], fan(w), &mut rng));
        params.push(ParamArray::zeros("projection.0.bias".into(), vec![p]));
        params.push(ParamArray::uniform("projection.1.weight".into(), vec![1, p], fan(p), &mut rng));
        params.push(ParamArray::zeros("projection.1.bias".into(), vec![1]));
        Ok(FnoModel { config, params })
    }

    /// Model with every parameter zero.
    pub fn zeros(config: FnoConfig) -> Result<Self> {
        let mut m = Self::init(config, 0)?;
        for p in &mut m.params {
            p.data.fill(T::zero());
        }
        Ok(m)
    }

    /// Rebuilds a model from named arrays; names and shapes must match the
    /// layout implied by `config`.
    pub fn from_params(config: FnoConfig, params: Vec<ParamArray<T>>) -> Result<Self> {
        let template = Self::zeros(config)?;
        if template.params.len() != params.len() {
            return Err(LabError::ShapeMismatch(format!(
                "expected {} parameter arrays, found {}",
                template.params.len(),
                params.len()
            )));
        }
        for (t, p) in template.params.iter().zip(&params) {
            if t.name != p.name || t.shape != p.shape || p.data.len() != t.data.len() {
                return Err(LabError::ShapeMismatch(format!(
                    "parameter {:?} {:?} does not match expected {:?} {:?}",
                    p.name, p.shape, t.name, t.shape
                )));
            }
            if !p.data.iter().all(|v| v.is_finite()) {
                return Err(LabError::NonFinite(p.name.clone()));
            }
        }
        Ok(FnoModel { config, params })
    }

    pub fn config(&self) -> &FnoConfig {
        &self.config
    }

    pub fn params(&self) -> &[ParamArray<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [ParamArray<T>] {
        &mut self.params
    }

    pub fn param(&self, name: &str) -> Option<&ParamArray<T>> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut ParamArray<T>> {
        self.params.iter_mut().find(|p| p.name == name)
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(|p| p.data.len()).sum()
    }

    pub(crate) fn data(&self, idx: usize) -> &[T] {
        &self.params[idx].data
    }

    pub(crate) fn proj_index(&self) -> usize {
        2 + 4 * self.config.n_layers
    }

    /// Same parameters in another precision.
    pub fn cast<U: Real>(&self) -> FnoModel<U> {
        FnoModel {
            config: self.config,
            params: self
                .params
                .iter()
                .map(|p| ParamArray {
                    name: p.name.clone(),
                    shape: p.shape.clone(),
                    data: p.data.iter().map(|&v| U::lit(v.to_f64_lossy())).collect(),
                })
                .collect(),
        }
    }

    /// Zero-valued gradient buffers aligned with the parameters.
    pub fn zero_gradients(&self) -> Gradients<T> {
        Gradients {
            arrays: self.params.iter().map(|p| vec![T::zero(); p.data.len()]).collect(),
        }
    }
}

/// Gradient arrays aligned index-for-index with [`FnoModel::params`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub arrays: Vec<Vec<T>>,
}

impl<T: Real> Gradients<T> {
    pub fn max_abs(&self) -> T {
        self.arrays
            .iter()
            .flat_map(|a| a.iter())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fno::InputEncoding;

    #[test]
    fn layout_and_counts() {
        let cfg = FnoConfig {
            in_channels: 6,
            width: 4,
            n_layers: 2,
            modes: 3,
            projection_hidden: 8,
        };
        let m = FnoModel::<f64>::init(cfg, 7).unwrap();
        assert_eq!(m.params().len(), 2 + 8 + 4);
        assert_eq!(m.params()[spec_re(1)].name, "spectral.1.re");
        assert_eq!(m.params()[spec_re(1)].shape, vec![6, 6, 4, 4]);
        assert_eq!(m.params()[bypass_b(0)].name, "bypass.0.bias");
        assert_eq!(m.params()[m.proj_index()].name, "projection.0.weight");
        let expected = 6 * 4 + 4 + 2 * (2 * 36 * 16 + 16 + 4) + 8 * 4 + 8 + 8 + 1;
        assert_eq!(m.parameter_count(), expected);
    }

    #[test]
    fn init_bounds_and_determinism() {
        let cfg = FnoConfig::standard(InputEncoding::BoundaryAware);
        let a = FnoModel::<f32>::init(cfg, 7).unwrap();
        let b = FnoModel::<f32>::init(cfg, 7).unwrap();
        assert_eq!(a, b);
        let c = FnoModel::<f32>::init(cfg, 8).unwrap();
        assert_ne!(a, c);
        let lift = &a.params()[LIFT_W].data;
        let bound = (1.0f32 / 6.0).sqrt();
        assert!(lift.iter().all(|v| v.abs() <= bound));
        let spec = &a.params()[spec_im(3)].data;
        assert!(spec.iter().all(|v| v.abs() <= 1.0 / 1024.0));
        assert!(a.params()[LIFT_B].data.iter().all(|&v| v == 0.0));
        // f32 init is the rounded f64 init.
        let d = FnoModel::<f64>::init(cfg, 7).unwrap();
        assert_eq!(d.cast::<f32>(), a);
    }

    #[test]
    fn from_params_rejects_bad_shapes() {
        let cfg = FnoConfig {
            in_channels: 3,
            width: 2,
            n_layers: 1,
            modes: 1,
            projection_hidden: 2,
        };
        let m = FnoModel::<f32>::init(cfg, 1).unwrap();
        assert!(FnoModel::from_params(cfg, m.params().to_vec()).is_ok());
        let mut bad = m.params().to_vec();
        bad[0].shape = vec![3, 2];
        assert!(FnoModel::from_params(cfg, bad).is_err());
        assert!(FnoModel::from_params(cfg, m.params()[..3].to_vec()).is_err());
    }
}
