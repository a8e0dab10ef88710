//! Dense reverse-mode differentiation, optimizers and the trainable
//! feature extractor.

mod backbone;
mod gradcheck;
mod graph;
mod optim;
mod tensor;

pub use backbone::{xavier_uniform, Activation, Backbone, BackboneSpec, DenseLayer};
pub use gradcheck::{finite_difference_check, GradCheck};
pub use graph::{
    decode_ordered_biases, encode_ordered_biases, log_sum_exp, sigmoid, softplus, Gradients, Graph,
    UnaryKind, Var,
};
pub use optim::{OptimState, OptimizerSpec};
pub use tensor::Tensor;
