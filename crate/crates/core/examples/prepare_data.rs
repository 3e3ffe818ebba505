//! Loads an MNIST binary task, downsamples it to the victim and encoder
//! resolutions, and dumps one augmented pair and one Mixup blend as PGM files.

use qnn_extract::datapipe::{
    augment_pair_keyed, bilinear_downsample, mixup_with_lambda, AugmentConfig, AugmentMethod, BinaryTask,
    DatasetKind, DatasetSplits, TaskSizes, ENCODER_SIDE, VICTIM_SIDE,
};

fn main() -> qnn_extract::Result<()> {
    let data_dir = std::env::args().nth(1).unwrap_or_else(|| "data".into());
    let out = std::env::temp_dir().join("qnn-extract-data-demo");
    std::fs::create_dir_all(&out)?;

    let splits = DatasetSplits::load(&data_dir, DatasetKind::Mnist)?;
    let task = BinaryTask::build("m01".parse()?, &splits, TaskSizes::DESK, 0)?;
    println!("{}: {} train / {} test / {} public", task.name(), task.train.len(), task.test.len(), task.public.len());

    let img = &task.train[0];
    let small = bilinear_downsample(img, VICTIM_SIDE, VICTIM_SIDE)?;
    let medium = bilinear_downsample(img, ENCODER_SIDE, ENCODER_SIDE)?;
    println!("label {:?}; 4x4 pixels {:.2?}", img.label, small.pixels);
    img.write_pgm(out.join("original.pgm"))?;
    medium.write_pgm(out.join("encoder_16x16.pgm"))?;

    let aug = AugmentConfig { method: AugmentMethod::Any, gaussian_blur: true, rng_seed: 1 };
    let (a, b) = augment_pair_keyed(img, &aug, &[0]);
    a.write_pgm(out.join("view_a.pgm"))?;
    b.write_pgm(out.join("view_b.pgm"))?;

    let other = &task.train[1];
    let mixed = mixup_with_lambda(
        (&img.pixels, &[1.0, 0.0]),
        (&other.pixels, &[0.0, 1.0]),
        0.7,
    )?;
    println!("mixup label {:?}", mixed.soft_label);
    println!("wrote PGM files to {}", out.display());
    Ok(())
}
