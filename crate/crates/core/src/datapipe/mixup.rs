use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};

/// Default Beta(α, α) concentration.
pub const DEFAULT_ALPHA: f64 = 0.2;

/// Convex combination of two samples and their soft labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedSample {
    pub pixels: Vec<f64>,
    pub soft_label: Vec<f64>,
    pub lambda: f64,
}

/// `λ·a + (1−λ)·b` for pixels and labels alike.
pub fn mixup_with_lambda(
    a: (&[f64], &[f64]),
    b: (&[f64], &[f64]),
    lambda: f64,
) -> Result<MixedSample> {
    if a.0.len() != b.0.len() {
        return Err(Error::Dimension {
            expected: a.0.len(),
            got: b.0.len(),
        });
    }
    if a.1.len() != b.1.len() {
        return Err(Error::Dimension {
            expected: a.1.len(),
            got: b.1.len(),
        });
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Argument(format!("mixup weight {lambda} outside [0, 1]")));
    }
    let mix = |x: &[f64], y: &[f64]| -> Vec<f64> {
        x.iter().zip(y).map(|(p, q)| lambda * p + (1.0 - lambda) * q).collect()
    };
    Ok(MixedSample {
        pixels: mix(a.0, b.0),
        soft_label: mix(a.1, b.1),
        lambda,
    })
}

/// Mixup with `λ ~ Beta(alpha, alpha)`.
pub fn mixup<R: Rng + ?Sized>(
    a: (&[f64], &[f64]),
    b: (&[f64], &[f64]),
    alpha: f64,
    rng: &mut R,
) -> Result<MixedSample> {
    let beta = Beta::new(alpha, alpha)
        .map_err(|e| Error::Argument(format!("mixup alpha {alpha}: {e}")))?;
    mixup_with_lambda(a, b, beta.sample(rng))
}
