use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::fit::{fit, one_hot, FitConfig, QnnClassifier, TrainLog};
use crate::datapipe::{resized_pixels, BinaryTask, VICTIM_SIDE};
use crate::error::{Error, Result};
use crate::qnnaas::VictimModel;
use crate::rng;
use crate::simcore::ParamCircuit;

/// Labelled `side × side` inputs of a pool of images.
pub fn labelled_inputs(images: &[crate::datapipe::ImageSample], side: usize) -> Result<Vec<(Vec<f64>, usize)>> {
    let pixels = resized_pixels(images, side)?;
    images
        .iter()
        .zip(pixels)
        .map(|(img, px)| {
            img.label
                .map(|l| (px, l))
                .ok_or_else(|| Error::Argument("unlabelled image in a labelled pool".into()))
        })
        .collect()
}

/// Fresh classifier with the victim's geometry (4 qubits, 2 layers, amplitude encoding).
pub fn victim_architecture(num_classes: usize, logit_scale: f64, seed: u64) -> Result<QnnClassifier> {
    let (q, layers, enc) = VictimModel::default_architecture();
    let mut init = ChaCha8Rng::seed_from_u64(rng::derive_seed(seed, &[rng::tag("init")]));
    QnnClassifier::new(ParamCircuit::random(q, layers, enc, &mut init)?, num_classes, logit_scale)
}

/// Trains the cloud model on the task's training pool at 4×4 resolution,
/// logging accuracy on the task's test pool each epoch.
pub fn train_victim(task: &BinaryTask, cfg: &FitConfig, seed: u64) -> Result<(VictimModel, TrainLog)> {
    let train = labelled_inputs(&task.train, VICTIM_SIDE)?;
    let test = labelled_inputs(&task.test, VICTIM_SIDE)?;
    if train.is_empty() {
        return Err(Error::Training("victim training pool is empty".into()));
    }
    let data: Vec<(Vec<f64>, Vec<f64>)> = train.into_iter().map(|(x, y)| (x, one_hot(y, 2))).collect();
    let mut model = victim_architecture(2, cfg.logit_scale, rng::derive_seed(seed, &[rng::tag("victim")]))?;
    let log = fit(&mut model, &data, cfg, rng::derive_seed(seed, &[rng::tag("victim-fit")]), Some(&test))?;
    let mut victim = VictimModel::new(model.circuit, 2)?;
    victim.class_qubits = model.class_qubits;
    victim.trained = true;
    Ok((victim, log))
}
