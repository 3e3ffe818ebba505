//! Learning procedures: Adam, Barlow Twins pretraining of the encoder,
//! transfer training of the classifier head, victim training and the
//! Base and QuantumLeak baselines.

mod adam;
mod barlow;
mod baselines;
mod fit;
mod substitute;
mod victim;

pub use adam::{adam_step, AdamState};
pub use barlow::{barlow_loss, standardize, BarlowConfig, BarlowOutput, CrossCorrelation};
pub use baselines::{train_base, train_qleak, Ensemble, DEFAULT_COMMITTEE};
pub use fit::{fit, one_hot, EpochLog, FitConfig, QnnClassifier, TrainLog, DEFAULT_LOGIT_SCALE};
pub use substitute::{
    fresh_qenc, pretrain_qenc, train_classifier, with_mixup, Pretrained, SubstituteModel, CLASSIFIER_LAYERS,
    CLASSIFIER_QUBITS, QENC_LAYERS, QENC_QUBITS,
};
pub use victim::{labelled_inputs, train_victim, victim_architecture};
