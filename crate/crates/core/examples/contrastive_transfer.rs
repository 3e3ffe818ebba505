//! Pretrains the 8-qubit encoder with Barlow Twins on one MNIST task and
//! transfer-trains the 4-qubit classifier head on another.

use qnn_extract::datapipe::{AugmentConfig, AugmentMethod, BinaryTask, DatasetKind, DatasetSplits, TaskSizes, ENCODER_SIDE};
use qnn_extract::trainers::{
    labelled_inputs, one_hot, pretrain_qenc, train_classifier, with_mixup, BarlowConfig, FitConfig, SubstituteModel,
    DEFAULT_LOGIT_SCALE,
};

fn main() -> qnn_extract::Result<()> {
    let data_dir = std::env::args().nth(1).unwrap_or_else(|| "data".into());
    let splits = DatasetSplits::load(&data_dir, DatasetKind::Mnist)?;
    let source = BinaryTask::build("m01".parse()?, &splits, TaskSizes { train: 128, test: 0, public: 0 }, 1)?;
    let target = BinaryTask::build("m23".parse()?, &splits, TaskSizes::DESK, 2)?;

    let cfg = BarlowConfig { epochs: 30, ..BarlowConfig::default() };
    let aug = AugmentConfig { method: AugmentMethod::Any, gaussian_blur: true, rng_seed: 0 };
    let pre = pretrain_qenc(&source.train, &cfg, &aug, 1)?;
    let h = &pre.loss_history;
    println!("Barlow loss {:.3} -> {:.3} over {} epochs", h[0], h[h.len() - 1], h.len());

    let train: Vec<(Vec<f64>, Vec<f64>)> = labelled_inputs(&target.public[..40], ENCODER_SIDE)?
        .into_iter()
        .map(|(x, y)| (x, one_hot(y, 2)))
        .collect();
    let train = with_mixup(&train, 1, 0.2, 3)?;
    let test = labelled_inputs(&target.test, ENCODER_SIDE)?;

    let mut model = SubstituteModel::new(pre.qenc, 2, DEFAULT_LOGIT_SCALE, 4)?;
    let log = train_classifier(&mut model, &train, &FitConfig::classifier(), 4, None)?;
    println!(
        "head trained on {} samples, final loss {:.3}, test accuracy {:.3}",
        train.len(),
        log.losses().last().copied().unwrap_or(f64::NAN),
        model.accuracy(&test)?
    );
    Ok(())
}
