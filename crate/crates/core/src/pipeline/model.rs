use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{BiasInit, TrainConfig};
use crate::diffnum::{
    decode_ordered_biases, encode_ordered_biases, xavier_uniform, Activation, Backbone, DenseLayer, Graph, Tensor,
    Var,
};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::{self, StoredTensor};
use crate::ordinal::{
    argmax_predict, coral_forward, coral_predict, corn_forward, corn_predict, BinaryClassifier, CoralHead, CornHead,
    HeadKind, RankLabel,
};

const MODEL_FILE: &str = "model.json";
const PARAM_DIR: &str = "params";
const FORMAT: &str = "ordgate-model";
const FORMAT_VERSION: u32 = 1;
const PRIOR_LOGIT_LIMIT: f64 = 8.0;

/// Output layer on top of the backbone features.
///
/// CORAL keeps one shared weight column `[d, 1]` and `K - 1` biases (raw
/// parameters decoded by [`decode_ordered_biases`] when ordered); CORN keeps
/// `K - 1` independent columns `[d, K - 1]`; softmax and focal keep `[d, K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Head {
    pub kind: HeadKind,
    pub num_classes: usize,
    pub weight: Tensor,
    pub bias: Tensor,
    pub ordered_biases: bool,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln().clamp(-PRIOR_LOGIT_LIMIT, PRIOR_LOGIT_LIMIT)
}

/// Smoothed fraction `(hits + 0.5) / (total + 1)`.
fn smoothed(hits: usize, total: usize) -> f64 {
    (hits as f64 + 0.5) / (total as f64 + 1.0)
}

/// Bias values matching the label distribution of `labels`.
pub fn prior_biases(kind: HeadKind, labels: &[RankLabel], num_classes: usize) -> Vec<f64> {
    let above = |k: usize| labels.iter().filter(|y| y.value() > k).count();
    match kind {
        HeadKind::Coral => (1..num_classes).map(|k| logit(smoothed(above(k), labels.len()))).collect(),
        HeadKind::Corn => (1..num_classes)
            .map(|k| logit(smoothed(above(k), above(k - 1))))
            .collect(),
        HeadKind::Softmax | HeadKind::Focal => (1..=num_classes)
            .map(|k| smoothed(labels.iter().filter(|y| y.value() == k).count(), labels.len()).ln())
            .collect(),
    }
}

impl Head {
    pub fn init<R: Rng>(cfg: &TrainConfig, train_labels: &[RankLabel], rng: &mut R) -> Self {
        let k = cfg.num_classes;
        let d = cfg.backbone.feature_dim;
        let cols = match cfg.head {
            HeadKind::Coral => 1,
            other => other.output_width(k),
        };
        let weight = xavier_uniform(rng, d, cols);
        let biases = match cfg.bias_init {
            BiasInit::Zeros => vec![0.0; cfg.head.output_width(k)],
            BiasInit::Prior => prior_biases(cfg.head, train_labels, k),
        };
        let ordered = cfg.head == HeadKind::Coral && cfg.coral_ordered_biases;
        let stored = if ordered { encode_ordered_biases(&biases) } else { biases };
        Self {
            kind: cfg.head,
            num_classes: k,
            weight,
            bias: Tensor::vector(stored),
            ordered_biases: ordered,
        }
    }

    /// Biases as used for prediction.
    pub fn effective_biases(&self) -> Vec<f64> {
        if self.ordered_biases {
            decode_ordered_biases(self.bias.data())
        } else {
            self.bias.data().to_vec()
        }
    }

    fn check(&self, feature_dim: usize) -> Result<()> {
        let (d, cols) = self.weight.as_matrix()?;
        let width = self.kind.output_width(self.num_classes);
        let want_cols = if self.kind == HeadKind::Coral { 1 } else { width };
        if d != feature_dim || cols != want_cols || self.bias.len() != width {
            return Err(Error::Shape(format!(
                "{} head weight {:?} / bias {:?} do not fit {feature_dim} features and {} classes",
                self.kind,
                self.weight.shape(),
                self.bias.shape(),
                self.num_classes
            )));
        }
        Ok(())
    }

    /// Records the head on `g`; returns logits `[n, width]` and the
    /// `(weight, bias)` vars.
    pub fn forward_var(&self, g: &mut Graph, z: Var, trainable: bool) -> Result<(Var, [Var; 2])> {
        let leaf = |g: &mut Graph, t: &Tensor| if trainable { g.param(t.clone()) } else { g.constant(t.clone()) };
        let w = leaf(g, &self.weight);
        let b = leaf(g, &self.bias);
        let logits = if self.kind == HeadKind::Coral {
            let zero = g.constant(Tensor::zeros(&[1]));
            let score = g.affine(z, w, zero)?;
            let biases = if self.ordered_biases { g.ordered_biases(b) } else { b };
            g.broadcast_add(score, biases)?
        } else {
            g.affine(z, w, b)?
        };
        Ok((logits, [w, b]))
    }

    /// Rank prediction for one feature vector via the head's own rule.
    pub fn predict(&self, z: &[f64]) -> Result<RankLabel> {
        let (d, cols) = self.weight.as_matrix()?;
        let column = |j: usize| -> Vec<f64> { (0..d).map(|i| self.weight.data()[i * cols + j]).collect() };
        match self.kind {
            HeadKind::Coral => {
                let head = CoralHead::new(column(0), self.effective_biases())?;
                coral_predict(&coral_forward(z, &head)?)
            }
            HeadKind::Corn => {
                let classifiers = (0..cols)
                    .map(|j| BinaryClassifier {
                        weights: column(j),
                        bias: self.bias.data()[j],
                    })
                    .collect();
                let head = CornHead::new(classifiers)?;
                corn_predict(&corn_forward(z, &head)?.marginal)
            }
            HeadKind::Softmax | HeadKind::Focal => {
                let logits: Vec<f64> = (0..cols)
                    .map(|j| self.bias.data()[j] + (0..d).map(|i| z[i] * self.weight.data()[i * cols + j]).sum::<f64>())
                    .collect();
                argmax_predict(&logits)
            }
        }
    }
}

/// Trained severity classifier: backbone, head and the config that built it.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: TrainConfig,
    pub backbone: Backbone,
    pub head: Head,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    config: TrainConfig,
    ordered_biases: bool,
    parameters: Vec<String>,
}

fn param_names(layers: usize) -> Vec<String> {
    let mut names: Vec<String> = (0..layers)
        .flat_map(|i| [format!("backbone.{i}.weight.ogt"), format!("backbone.{i}.bias.ogt")])
        .collect();
    names.push("head.weight.ogt".into());
    names.push("head.bias.ogt".into());
    names
}

impl Model {
    pub fn new(config: TrainConfig, backbone: Backbone, head: Head) -> Result<Self> {
        head.check(backbone.feature_dim())?;
        Ok(Self {
            config,
            backbone,
            head,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.head.num_classes
    }

    /// All trainable tensors: backbone layers in order, then head weight and bias.
    pub fn parameters(&self) -> Vec<&Tensor> {
        let mut p = self.backbone.parameters();
        p.push(&self.head.weight);
        p.push(&self.head.bias);
        p
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = self.backbone.parameters_mut();
        p.push(&mut self.head.weight);
        p.push(&mut self.head.bias);
        p
    }

    /// Per-slice severity predictions.
    pub fn predict_slices(&self, slices: &[Image]) -> Result<Vec<RankLabel>> {
        if slices.is_empty() {
            return Ok(Vec::new());
        }
        let [h, w] = self.backbone.input_shape();
        let mut data = Vec::with_capacity(slices.len() * h * w);
        for s in slices {
            if s.dims() != (h, w) {
                return Err(Error::Shape(format!(
                    "image {:?} does not match model input {h}x{w}",
                    s.dims()
                )));
            }
            data.extend_from_slice(s.as_slice());
        }
        let feats = self.backbone.features(&Tensor::new(vec![slices.len(), h * w], data)?)?;
        let d = self.backbone.feature_dim();
        feats.data().chunks_exact(d).map(|z| self.head.predict(z)).collect()
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let params_dir = dir.join(PARAM_DIR);
        io::create_dir_all(&params_dir)?;
        let names = param_names(self.backbone.layers().len());
        for (name, t) in names.iter().zip(self.parameters()) {
            io::write_tensor(&params_dir.join(name), &StoredTensor::from_tensor(t))?;
        }
        let file = ModelFile {
            format: FORMAT.into(),
            version: FORMAT_VERSION,
            config: self.config.clone(),
            ordered_biases: self.head.ordered_biases,
            parameters: names,
        };
        let mut text = serde_json::to_string_pretty(&file)
            .map_err(|e| Error::InvalidArgument(format!("model encoding: {e}")))?;
        text.push('\n');
        io::write_atomic(&dir.join(MODEL_FILE), text.as_bytes())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MODEL_FILE);
        let text = io::read_to_string(&path)?;
        let file: ModelFile =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if file.format != FORMAT || file.version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "{}: unsupported model format {} v{}",
                path.display(),
                file.format,
                file.version
            )));
        }
        file.config.validate()?;
        let layers = file.config.backbone.hidden.len() + 1;
        if file.parameters != param_names(layers) {
            return Err(Error::Config(format!("{}: parameter list does not match backbone", path.display())));
        }
        let mut tensors = file
            .parameters
            .iter()
            .map(|n| io::read_tensor(&dir.join(PARAM_DIR).join(n))?.to_tensor())
            .collect::<Result<Vec<_>>>()?;
        let bias = tensors.pop().expect("head bias listed");
        let weight = tensors.pop().expect("head weight listed");
        let mut it = tensors.into_iter();
        let dense = (0..layers)
            .map(|i| DenseLayer {
                weight: it.next().expect("weight listed"),
                bias: it.next().expect("bias listed"),
                activation: if i + 1 < layers { Activation::Relu } else { Activation::None },
            })
            .collect();
        let backbone = Backbone::from_layers(file.config.backbone.input_shape, dense)?;
        let head = Head {
            kind: file.config.head,
            num_classes: file.config.num_classes,
            weight,
            bias,
            ordered_biases: file.ordered_biases,
        };
        Model::new(file.config, backbone, head)
    }
}
