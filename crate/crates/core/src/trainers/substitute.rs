use std::fs;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::barlow::{barlow_loss, BarlowConfig};
use super::fit::{accuracy_of, fit, FitConfig, QnnClassifier, TrainLog};
use crate::datapipe::{augment_pair_keyed, bilinear_downsample, mixup, AugmentConfig, ImageSample, ENCODER_SIDE};
use crate::error::{Error, Result};
use crate::math::argmax;
use crate::rng;
use crate::simcore::{forward_features, gradient, Encoding, ParamCircuit};

pub const QENC_QUBITS: usize = 8;
pub const QENC_LAYERS: usize = 4;
pub const CLASSIFIER_QUBITS: usize = 4;
pub const CLASSIFIER_LAYERS: usize = 4;

/// Randomly initialized encoder: 8 qubits, 4 layers, amplitude encoding of 16×16 images.
pub fn fresh_qenc(seed: u64) -> Result<ParamCircuit> {
    let mut init = ChaCha8Rng::seed_from_u64(rng::derive_seed(seed, &[rng::tag("qenc-init")]));
    ParamCircuit::random(QENC_QUBITS, QENC_LAYERS, Encoding::Amplitude, &mut init)
}

/// Encoder features are Z readouts; rounding can push them a hair past ±1.
fn encoder_features(x: &[f64], qenc: &ParamCircuit) -> Result<Vec<f64>> {
    Ok(forward_features(x, qenc)?.into_iter().map(|z| z.clamp(-1.0, 1.0)).collect())
}

/// Pretrained encoder feeding a 4-qubit angle-pair classifier head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstituteModel {
    pub qenc: ParamCircuit,
    pub qenc_frozen: bool,
    pub classifier: QnnClassifier,
}

impl SubstituteModel {
    pub fn new(qenc: ParamCircuit, num_classes: usize, logit_scale: f64, seed: u64) -> Result<Self> {
        if 2 * CLASSIFIER_QUBITS != qenc.num_qubits() {
            return Err(Error::Dimension {
                expected: 2 * CLASSIFIER_QUBITS,
                got: qenc.num_qubits(),
            });
        }
        let mut init = ChaCha8Rng::seed_from_u64(rng::derive_seed(seed, &[rng::tag("classifier-init")]));
        let head = ParamCircuit::random(CLASSIFIER_QUBITS, CLASSIFIER_LAYERS, Encoding::AnglePair, &mut init)?;
        Ok(Self {
            qenc,
            qenc_frozen: true,
            classifier: QnnClassifier::new(head, num_classes, logit_scale)?,
        })
    }

    /// Encoder output for a flattened 16×16 image.
    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        encoder_features(x, &self.qenc)
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.classifier.logits(&self.features(x)?)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.logits(x)?))
    }

    pub fn accuracy(&self, data: &[(Vec<f64>, usize)]) -> Result<f64> {
        accuracy_of(data, |x| self.predict(x))
    }

    pub fn gate_counts(&self) -> (usize, usize) {
        let (a, b) = self.qenc.gate_counts();
        let (c, d) = self.classifier.circuit.gate_counts();
        (a + c, b + d)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pretrained {
    pub qenc: ParamCircuit,
    /// Mean Barlow loss per epoch.
    pub loss_history: Vec<f64>,
}

fn encoder_input(img: &ImageSample) -> Result<Vec<f64>> {
    let px = bilinear_downsample(img, ENCODER_SIDE, ENCODER_SIDE)?.pixels;
    if px.iter().all(|p| *p == 0.0) {
        return Err(Error::DegenerateInput("augmented view is blank"));
    }
    Ok(px)
}

/// Contrastive pretraining of a fresh encoder on `source` images with the
/// Barlow Twins objective over pairs of augmented views.
pub fn pretrain_qenc(source: &[ImageSample], cfg: &BarlowConfig, aug: &AugmentConfig, seed: u64) -> Result<Pretrained> {
    cfg.validate()?;
    if source.len() < 2 {
        return Err(Error::Training("pretraining needs at least two source images".into()));
    }
    let mut qenc = fresh_qenc(seed)?;
    let mut adam = AdamState::new(qenc.num_params(), cfg.lr, cfg.weight_decay);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..source.len()).collect();
    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng::stream(seed, &[rng::tag("barlow-shuffle"), epoch as u64]));
        let mut losses = Vec::new();
        for chunk in order.chunks(cfg.batch_size).filter(|c| c.len() >= 2) {
            let views = chunk
                .par_iter()
                .map(|&i| {
                    let (a, b) = augment_pair_keyed(&source[i], aug, &[seed, epoch as u64, i as u64]);
                    let (a, b) = (encoder_input(&a)?, encoder_input(&b)?);
                    let (za, zb) = (forward_features(&a, &qenc)?, forward_features(&b, &qenc)?);
                    Ok((a, b, za, zb))
                })
                .collect::<Result<Vec<_>>>()?;
            let z1: Vec<Vec<f64>> = views.iter().map(|v| v.2.clone()).collect();
            let z2: Vec<Vec<f64>> = views.iter().map(|v| v.3.clone()).collect();
            let out = barlow_loss(&z1, &z2, cfg.lambda, cfg.std_eps)?;
            let grads = views
                .par_iter()
                .enumerate()
                .map(|(k, (a, b, _, _))| {
                    let ga = gradient(a, &qenc, &out.grad_z1[k])?;
                    let gb = gradient(b, &qenc, &out.grad_z2[k])?;
                    Ok(ga.into_iter().zip(gb).map(|(x, y)| x + y).collect::<Vec<f64>>())
                })
                .collect::<Result<Vec<_>>>()?;
            let mut total = vec![0.0; qenc.num_params()];
            for g in &grads {
                total.iter_mut().zip(g).for_each(|(t, v)| *t += v);
            }
            adam.step(qenc.thetas_mut(), &total)
                .map_err(|e| Error::Training(format!("pretraining epoch {epoch}: {e}")))?;
            losses.push(out.loss);
        }
        history.push(losses.iter().sum::<f64>() / losses.len() as f64);
    }
    Ok(Pretrained {
        qenc,
        loss_history: history,
    })
}

/// Adds `copies` Mixup samples per input, each mixing it with a random
/// partner that has the same predicted class.
pub fn with_mixup(
    samples: &[(Vec<f64>, Vec<f64>)],
    copies: usize,
    alpha: f64,
    seed: u64,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let mut out = samples.to_vec();
    let mut draw = rng::stream(seed, &[rng::tag("mixup")]);
    for (i, (px, label)) in samples.iter().enumerate() {
        let class = argmax(label);
        let partners: Vec<usize> = (0..samples.len())
            .filter(|&j| j != i && argmax(&samples[j].1) == class)
            .collect();
        for _ in 0..copies {
            let Some(&j) = partners.choose(&mut draw) else { break };
            let m = mixup((px, label), (&samples[j].0, &samples[j].1), alpha, &mut draw)?;
            out.push((m.pixels, m.soft_label));
        }
    }
    Ok(out)
}

/// Trains only the classifier head on frozen-encoder features of `data`
/// (flattened 16×16 images with target distributions).
pub fn train_classifier(
    model: &mut SubstituteModel,
    data: &[(Vec<f64>, Vec<f64>)],
    cfg: &FitConfig,
    seed: u64,
    eval: Option<&[(Vec<f64>, usize)]>,
) -> Result<TrainLog> {
    if !model.qenc_frozen {
        return Err(Error::Training("encoder must be frozen for transfer training".into()));
    }
    if data.is_empty() {
        return Err(Error::Training("cleaned set is empty".into()));
    }
    let qenc = &model.qenc;
    let feats = data
        .par_iter()
        .map(|(x, t)| Ok((encoder_features(x, qenc)?, t.clone())))
        .collect::<Result<Vec<_>>>()?;
    let eval_feats = match eval {
        Some(set) => Some(
            set.par_iter()
                .map(|(x, y)| Ok((encoder_features(x, qenc)?, *y)))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    fit(&mut model.classifier, &feats, cfg, seed, eval_feats.as_deref())
}
