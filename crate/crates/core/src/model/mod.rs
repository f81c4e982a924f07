//! Convolutional mode classifier, training and evaluation protocols.

mod checkpoint;
mod eval;
mod gradcheck;
mod grid;
mod network;
mod scalar;
mod train;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, MAGIC, VERSION};
pub use eval::{
    assign_folds, cross_dataset_eval, evaluate_cross, fit_classifier, kfold_cv, ClassAccuracy, Classifier, Confusion, EvalOptions, EvalReport, Example,
    FoldReport, LabeledSet, Preprocess, Protocol, Setting,
};
pub use gradcheck::{gradient_check, GradCheck, FD_STEP, REL_FLOOR};
pub use grid::{ResultsGrid, PROTOCOLS};
pub use network::{softmax_cross_entropy, Network, NetworkConfig, Phase, Tensor, BN_EPS, BN_MOMENTUM};
pub use scalar::Scalar;
pub use train::{mean_loss, predict, predict_logits, train, TrainConfig, TrainedModel};
