use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::{Graph, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    None,
}

/// Architecture of the feature extractor: flatten, then a stack of affine
/// layers with ReLU between them; the last layer is linear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackboneSpec {
    pub input_shape: [usize; 2],
    pub hidden: Vec<usize>,
    pub feature_dim: usize,
}

impl Default for BackboneSpec {
    fn default() -> Self {
        Self {
            input_shape: [64, 64],
            hidden: vec![64],
            feature_dim: 16,
        }
    }
}

impl BackboneSpec {
    pub fn input_len(&self) -> usize {
        self.input_shape[0] * self.input_shape[1]
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_len() == 0 || self.feature_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::Config(format!("degenerate backbone {self:?}")));
        }
        Ok(())
    }

    fn layer_dims(&self) -> Vec<(usize, usize, Activation)> {
        let mut dims = Vec::new();
        let mut prev = self.input_len();
        for &h in &self.hidden {
            dims.push((prev, h, Activation::Relu));
            prev = h;
        }
        dims.push((prev, self.feature_dim, Activation::None));
        dims
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weight: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Backbone {
    input_shape: [usize; 2],
    layers: Vec<DenseLayer>,
}

/// Uniform(-a, a) with `a = sqrt(6 / (fan_in + fan_out))`.
pub fn xavier_uniform<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize) -> Tensor {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out).map(|_| rng.gen_range(-a..a)).collect();
    Tensor::new(vec![fan_in, fan_out], data).expect("positive dims")
}

impl Backbone {
    pub fn init<R: Rng>(spec: &BackboneSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let layers = spec
            .layer_dims()
            .into_iter()
            .map(|(i, o, activation)| DenseLayer {
                weight: xavier_uniform(rng, i, o),
                bias: Tensor::zeros(&[o]),
                activation,
            })
            .collect();
        Ok(Self {
            input_shape: spec.input_shape,
            layers,
        })
    }

    pub fn from_layers(input_shape: [usize; 2], layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("backbone needs at least one layer".into()));
        }
        let mut prev = input_shape[0] * input_shape[1];
        for (k, layer) in layers.iter().enumerate() {
            let (i, o) = layer.weight.as_matrix()?;
            if i != prev || layer.bias.len() != o {
                return Err(Error::Shape(format!(
                    "layer {k}: weight {:?}, bias {:?}, expected input {prev}",
                    layer.weight.shape(),
                    layer.bias.shape()
                )));
            }
            prev = o;
        }
        Ok(Self {
            input_shape,
            layers,
        })
    }

    pub fn input_shape(&self) -> [usize; 2] {
        self.input_shape
    }

    pub fn input_len(&self) -> usize {
        self.input_shape[0] * self.input_shape[1]
    }

    pub fn feature_dim(&self) -> usize {
        self.layers.last().map(|l| l.bias.len()).unwrap_or(0)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn parameters(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias]).collect()
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }

    /// Flattens `[n, H, W]` or `[n, H*W]` batches to `[n, H*W]`.
    pub fn flatten_batch(&self, batch: &Tensor) -> Result<Tensor> {
        let ok = match batch.shape() {
            [_, h, w] => [*h, *w] == self.input_shape,
            [_, d] => *d == self.input_len(),
            _ => false,
        };
        if !ok {
            return Err(Error::Shape(format!(
                "batch shape {:?} does not match backbone input {:?}",
                batch.shape(),
                self.input_shape
            )));
        }
        let n = batch.shape()[0];
        batch.clone().reshape(vec![n, self.input_len()])
    }

    /// Records the forward pass on `g`. Parameters are inserted as graph
    /// params when `trainable`, otherwise as constants; their vars are
    /// returned in [`Backbone::parameters`] order.
    pub fn forward_var(&self, g: &mut Graph, x: Var, trainable: bool) -> Result<(Var, Vec<Var>)> {
        let (_, d) = g.value(x).as_matrix()?;
        if d != self.input_len() {
            return Err(Error::Shape(format!(
                "input width {d} does not match backbone input {}",
                self.input_len()
            )));
        }
        let mut vars = Vec::with_capacity(self.layers.len() * 2);
        let mut h = x;
        for layer in &self.layers {
            let (w, b) = if trainable {
                (g.param(layer.weight.clone()), g.param(layer.bias.clone()))
            } else {
                (g.constant(layer.weight.clone()), g.constant(layer.bias.clone()))
            };
            vars.push(w);
            vars.push(b);
            h = g.affine(h, w, b)?;
            if layer.activation == Activation::Relu {
                h = g.relu(h)?;
            }
        }
        Ok((h, vars))
    }

    pub fn forward(&self, g: &mut Graph, batch: &Tensor, trainable: bool) -> Result<(Var, Vec<Var>)> {
        let flat = self.flatten_batch(batch)?;
        let x = g.constant(flat);
        self.forward_var(g, x, trainable)
    }

    /// Inference-only features `[n, d]`.
    pub fn features(&self, batch: &Tensor) -> Result<Tensor> {
        let mut g = Graph::new();
        let (z, _) = self.forward(&mut g, batch, false)?;
        Ok(g.value(z).clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_single_layer_returns_flattened_input() {
        let eye: Vec<f64> = (0..16).map(|k| if k % 5 == 0 { 1.0 } else { 0.0 }).collect();
        let bb = Backbone::from_layers(
            [2, 2],
            vec![DenseLayer {
                weight: Tensor::matrix(4, 4, eye).unwrap(),
                bias: Tensor::zeros(&[4]),
                activation: Activation::None,
            }],
        )
        .unwrap();
        let batch = Tensor::new(vec![1, 2, 2], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(bb.features(&batch).unwrap().data(), &[0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn zero_weights_yield_bias() {
        let bb = Backbone::from_layers(
            [2, 2],
            vec![DenseLayer {
                weight: Tensor::zeros(&[4, 3]),
                bias: Tensor::vector(vec![1.0, -2.0, 0.5]),
                activation: Activation::None,
            }],
        )
        .unwrap();
        let batch = Tensor::new(vec![2, 4], vec![1.0, 2.0, 3.0, 4.0, -1.0, 0.0, 5.0, 2.0]).unwrap();
        assert_eq!(bb.features(&batch).unwrap().data(), &[1.0, -2.0, 0.5, 1.0, -2.0, 0.5]);
    }

    #[test]
    fn seeded_init_is_bit_identical() {
        let spec = BackboneSpec {
            input_shape: [8, 8],
            hidden: vec![12],
            feature_dim: 4,
        };
        let a = Backbone::init(&spec, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = Backbone::init(&spec, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
        let batch = Tensor::new(vec![3, 64], (0..192).map(|k| (k as f64 * 0.37).sin()).collect()).unwrap();
        let za = a.features(&batch).unwrap();
        let zb = b.features(&batch).unwrap();
        assert!(za.data().iter().zip(zb.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_eq!(za.shape(), &[3, 4]);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let bb = Backbone::init(&BackboneSpec::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(bb.features(&Tensor::zeros(&[1, 32, 32])).is_err());
        assert!(Backbone::from_layers(
            [2, 2],
            vec![DenseLayer {
                weight: Tensor::zeros(&[3, 3]),
                bias: Tensor::zeros(&[3]),
                activation: Activation::None,
            }]
        )
        .is_err());
    }

    #[test]
    fn xavier_bounds() {
        let t = xavier_uniform(&mut ChaCha8Rng::seed_from_u64(1), 30, 10);
        let a = (6.0f64 / 40.0).sqrt();
        assert!(t.data().iter().all(|v| v.abs() < a));
    }
}
