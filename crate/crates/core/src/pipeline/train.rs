use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::model::{Head, Model};
use crate::diffnum::{Backbone, Graph, OptimState, Tensor, Var};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::{self, Manifest, Split};
use crate::ordinal::{
    coral_objective, corn_objective, corn_subsets, focal_objective, softmax_objective, HeadKind, RankLabel,
};

const EVAL_CHUNK: usize = 256;

/// Image slices with their severity labels.
#[derive(Debug, Clone, Default)]
pub struct LabeledSlices {
    pub images: Vec<Image>,
    pub labels: Vec<RankLabel>,
}

impl LabeledSlices {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Every slice of every image in `split`, each carrying its image's label.
    pub fn from_manifest(manifest: &Manifest, split: Split) -> Result<Self> {
        let mut out = Self::default();
        for entry in manifest.split(split) {
            let slices = io::read_tensor(&manifest.image_path(entry))?.to_image_slices()?;
            out.labels.extend(std::iter::repeat_n(entry.severity, slices.len()));
            out.images.extend(slices);
        }
        Ok(out)
    }

    fn batch(&self, idx: &[usize], flips: Option<&mut ChaCha8Rng>) -> Result<(Tensor, Vec<RankLabel>)> {
        let (h, w) = self.images[idx[0]].dims();
        let mut data = Vec::with_capacity(idx.len() * h * w);
        let mut rng = flips;
        for &i in idx {
            let img = &self.images[i];
            if img.dims() != (h, w) {
                return Err(Error::Shape("training images differ in size".into()));
            }
            let (fv, fh) = match rng.as_deref_mut() {
                Some(r) => (r.gen_bool(0.5), r.gen_bool(0.5)),
                None => (false, false),
            };
            for r in 0..h {
                let rr = if fv { h - 1 - r } else { r };
                for c in 0..w {
                    let cc = if fh { w - 1 - c } else { c };
                    data.push(img.get(rr, cc));
                }
            }
        }
        let labels = idx.iter().map(|&i| self.labels[i]).collect();
        Ok((Tensor::new(vec![idx.len(), h * w], data)?, labels))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Sample-weighted mean of the batch losses.
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    /// Batches in which some CORN level had no eligible sample.
    pub corn_sparse_batches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub head: HeadKind,
    pub train_samples: usize,
    pub val_samples: usize,
    pub epochs: Vec<EpochLog>,
}

/// Records backbone, head and loss for one batch. Returns the loss node and
/// the parameter vars in [`Model::parameters`] order.
pub fn batch_loss(model: &Model, g: &mut Graph, x: Var, labels: &[RankLabel], trainable: bool) -> Result<(Var, Vec<Var>)> {
    let (z, mut vars) = model.backbone.forward_var(g, x, trainable)?;
    let (logits, head_vars) = model.head.forward_var(g, z, trainable)?;
    vars.extend(head_vars);
    let cfg = &model.config;
    let loss = match cfg.head {
        HeadKind::Coral => coral_objective(g, logits, labels, &cfg.loss_config())?,
        HeadKind::Corn => corn_objective(g, logits, labels, cfg.num_classes)?,
        HeadKind::Softmax => softmax_objective(g, logits, labels)?,
        HeadKind::Focal => focal_objective(g, logits, labels, cfg.focal_gamma)?,
    };
    Ok((loss, vars))
}

fn scalar(g: &Graph, v: Var) -> f64 {
    g.value(v).item().expect("losses are scalar")
}

/// Mean loss over `data` without gradient tracking.
pub fn evaluate_loss(model: &Model, data: &LabeledSlices) -> Result<Option<f64>> {
    if data.is_empty() {
        return Ok(None);
    }
    let order: Vec<usize> = (0..data.len()).collect();
    let mut total = 0.0;
    for chunk in order.chunks(EVAL_CHUNK) {
        let (x, labels) = data.batch(chunk, None)?;
        let mut g = Graph::new();
        let xv = g.constant(x);
        let (loss, _) = batch_loss(model, &mut g, xv, &labels, false)?;
        total += scalar(&g, loss) * chunk.len() as f64;
    }
    Ok(Some(total / data.len() as f64))
}

/// Deterministic training: initialization, shuffling and augmentation all
/// draw from one ChaCha stream seeded by `cfg.seed`.
pub fn train(cfg: &TrainConfig, train_set: &LabeledSlices, val_set: &LabeledSlices) -> Result<(Model, TrainLog)> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::InvalidArgument("training split is empty".into()));
    }
    let [h, w] = cfg.backbone.input_shape;
    if let Some(img) = train_set.images.iter().chain(&val_set.images).find(|i| i.dims() != (h, w)) {
        return Err(Error::Shape(format!(
            "image {:?} does not match configured input {h}x{w}",
            img.dims()
        )));
    }
    for y in train_set.labels.iter().chain(&val_set.labels) {
        y.check(cfg.num_classes)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let backbone = Backbone::init(&cfg.backbone, &mut rng)?;
    let head = Head::init(cfg, &train_set.labels, &mut rng);
    let mut model = Model::new(cfg.clone(), backbone, head)?;
    let mut optim = OptimState::new(cfg.optimizer, &model.parameters());

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        let mut sparse = 0;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let (x, labels) = train_set.batch(idx, cfg.augment_flips.then_some(&mut rng))?;
            if cfg.head == HeadKind::Corn {
                let empty = corn_subsets(&labels, cfg.num_classes)?.empty_levels();
                if !empty.is_empty() {
                    sparse += 1;
                    log::debug!("epoch {epoch} batch {b}: CORN levels {empty:?} have no samples, skipped");
                }
            }
            let mut g = Graph::new();
            let xv = g.constant(x);
            let (loss, vars) = batch_loss(&model, &mut g, xv, &labels, true)?;
            let value = scalar(&g, loss);
            if !value.is_finite() {
                return Err(Error::Numerical(format!(
                    "{} loss became {value} at epoch {epoch}, batch {b} ({} samples, {} steps taken)",
                    cfg.head,
                    idx.len(),
                    optim.steps_taken()
                )));
            }
            let grads = g.backward(loss)?;
            let grads: Vec<Tensor> = vars.iter().map(|&v| grads.get(v)).collect();
            optim.step(&mut model.parameters_mut(), &grads)?;
            sum += value * idx.len() as f64;
        }
        if sparse > 0 {
            log::warn!("epoch {epoch}: {sparse} batches had empty CORN subsets; those classifiers were skipped there");
        }
        let train_loss = sum / train_set.len() as f64;
        let val_loss = evaluate_loss(&model, val_set)?;
        log::info!(
            "epoch {epoch:>3}  train {train_loss:.6}  val {}",
            val_loss.map_or("-".to_string(), |v| format!("{v:.6}"))
        );
        epochs.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
            corn_sparse_batches: sparse,
        });
    }
    let log = TrainLog {
        head: cfg.head,
        train_samples: train_set.len(),
        val_samples: val_set.len(),
        epochs,
    };
    Ok((model, log))
}

pub fn train_from_manifest(cfg: &TrainConfig, manifest: &Manifest) -> Result<(Model, TrainLog)> {
    let train_set = LabeledSlices::from_manifest(manifest, Split::Train)?;
    let val_set = LabeledSlices::from_manifest(manifest, Split::Val)?;
    train(cfg, &train_set, &val_set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffnum::BackboneSpec;

    fn toy(n: usize) -> LabeledSlices {
        // severity is encoded in the brightness of the first row
        let mut out = LabeledSlices::default();
        for i in 0..n {
            let k = i % 3 + 1;
            let mut img = Image::filled(4, 4, 0.1);
            for c in 0..4 {
                img.set(0, c, k as f64 / 3.0);
            }
            out.images.push(img);
            out.labels.push(RankLabel::new(k, 3).unwrap());
        }
        out
    }

    fn small(head: HeadKind) -> TrainConfig {
        TrainConfig {
            head,
            backbone: BackboneSpec {
                input_shape: [4, 4],
                hidden: vec![8],
                feature_dim: 4,
            },
            epochs: 40,
            batch_size: 6,
            augment_flips: false,
            optimizer: crate::diffnum::OptimizerSpec::Adam {
                lr: 0.02,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
            },
            ..TrainConfig::default()
        }
    }

    #[test]
    fn learns_toy_task_for_every_head() {
        let data = toy(30);
        for head in HeadKind::ALL {
            let (model, log) = train(&small(head), &data, &LabeledSlices::default()).unwrap();
            let first = log.epochs[0].train_loss;
            let last = log.epochs.last().unwrap().train_loss;
            assert!(last < first, "{head}: {first} -> {last}");
            let preds = model.predict_slices(&data.images).unwrap();
            assert_eq!(preds, data.labels, "{head}");
        }
    }

    #[test]
    fn repeatable() {
        let data = toy(12);
        let mut cfg = small(HeadKind::Corn);
        cfg.augment_flips = true;
        cfg.epochs = 3;
        let (a, la) = train(&cfg, &data, &data).unwrap();
        let (b, lb) = train(&cfg, &data, &data).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = small(HeadKind::Coral);
        assert!(train(&cfg, &LabeledSlices::default(), &LabeledSlices::default()).is_err());
        let mut wrong = toy(3);
        wrong.images[1] = Image::filled(5, 4, 0.0);
        assert!(matches!(train(&cfg, &wrong, &LabeledSlices::default()), Err(Error::Shape(_))));
    }

    #[test]
    fn divergence_is_numerical_error() {
        let mut cfg = small(HeadKind::Softmax);
        cfg.optimizer = crate::diffnum::OptimizerSpec::Sgd { lr: 1e300, momentum: 0.0 };
        let err = train(&cfg, &toy(12), &LabeledSlices::default()).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)), "{err}");
    }
}
