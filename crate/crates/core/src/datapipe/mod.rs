//! Dataset ingestion, binary-task construction, resizing, contrastive
//! augmentation and Mixup.

mod augment;
mod idx;
mod image;
mod mixup;
mod task;

pub use augment::{
    augment_pair, augment_pair_keyed, crop_resize, flip_horizontal, gaussian_blur, jitter, rotate,
    AugmentConfig, AugmentMethod,
};
pub use idx::{load_idx, load_idx_images, load_idx_labels};
pub use image::{bilinear_downsample, ImageSample};
pub use mixup::{mixup, mixup_with_lambda, MixedSample, DEFAULT_ALPHA};
pub use task::{BinaryTask, DatasetKind, DatasetSplits, TaskConfig, TaskId, TaskSizes};

/// Side of the victim's input image (16 amplitudes on 4 qubits).
pub const VICTIM_SIDE: usize = 4;
/// Side of the encoder's input image (256 amplitudes on 8 qubits).
pub const ENCODER_SIDE: usize = 16;

/// Resizes every image to `side × side` and returns the flattened pixels.
pub fn resized_pixels(images: &[ImageSample], side: usize) -> crate::Result<Vec<Vec<f64>>> {
    images
        .iter()
        .map(|img| bilinear_downsample(img, side, side).map(|s| s.pixels))
        .collect()
}
