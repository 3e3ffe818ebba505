use rand::Rng;
use serde::{Deserialize, Serialize};

use super::image::ImageSample;
use crate::rng;

pub const BRIGHTNESS_RANGE: f64 = 0.2;
pub const CONTRAST_RANGE: (f64, f64) = (0.8, 1.25);
pub const ROTATION_DEGREES: f64 = 15.0;
pub const MIN_CROP_AREA: f64 = 0.75;
pub const BLUR_SIGMA_RANGE: (f64, f64) = (0.1, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AugmentMethod {
    /// Contrast and brightness.
    Jitter,
    Rotation,
    Crop,
    /// Horizontal mirror with probability 1/2.
    Flip,
    /// Uniform choice among the four above, per view.
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub method: AugmentMethod,
    pub gaussian_blur: bool,
    pub rng_seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            method: AugmentMethod::Jitter,
            gaussian_blur: true,
            rng_seed: 0,
        }
    }
}

/// `clamp(contrast·p + brightness)` on every pixel.
pub fn jitter(img: &ImageSample, contrast: f64, brightness: f64) -> ImageSample {
    img.with_pixels(
        img.pixels
            .iter()
            .map(|p| (contrast * p + brightness).clamp(0.0, 1.0))
            .collect(),
    )
}

/// Rotation about the image center, bilinear resampling, zero fill.
pub fn rotate(img: &ImageSample, degrees: f64) -> ImageSample {
    let (s, c) = degrees.to_radians().sin_cos();
    let cx = (img.width as f64 - 1.0) / 2.0;
    let cy = (img.height as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(img.pixels.len());
    for y in 0..img.height {
        for x in 0..img.width {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            // inverse map: destination → source
            let sx = c * dx + s * dy + cx;
            let sy = -s * dx + c * dy + cy;
            out.push(img.sample_bilinear(sx, sy).clamp(0.0, 1.0));
        }
    }
    img.with_pixels(out)
}

/// Crops the box `(x0, y0, w, h)` (pixel units) and resizes it back to the full frame.
pub fn crop_resize(img: &ImageSample, x0: f64, y0: f64, w: f64, h: f64) -> ImageSample {
    let mut out = Vec::with_capacity(img.pixels.len());
    let (sx, sy) = (w / img.width as f64, h / img.height as f64);
    for y in 0..img.height {
        for x in 0..img.width {
            let u = x0 + (x as f64 + 0.5) * sx - 0.5;
            let v = y0 + (y as f64 + 0.5) * sy - 0.5;
            out.push(img.sample_bilinear(u, v).clamp(0.0, 1.0));
        }
    }
    img.with_pixels(out)
}

pub fn flip_horizontal(img: &ImageSample) -> ImageSample {
    let mut out = Vec::with_capacity(img.pixels.len());
    for y in 0..img.height {
        out.extend((0..img.width).rev().map(|x| img.at(x, y)));
    }
    img.with_pixels(out)
}

/// Separable Gaussian blur (radius `ceil(3σ)`, zero padding), not clamped.
pub fn gaussian_blur(img: &ImageSample, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let (w, h) = (img.width as isize, img.height as isize);
    let pass = |src: &[f64], horizontal: bool| {
        let mut dst = vec![0.0; src.len()];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for (k, kv) in kernel.iter().enumerate() {
                    let off = k as isize - radius;
                    let (sx, sy) = if horizontal { (x + off, y) } else { (x, y + off) };
                    if (0..w).contains(&sx) && (0..h).contains(&sy) {
                        acc += kv * src[(sy * w + sx) as usize];
                    }
                }
                dst[(y * w + x) as usize] = acc;
            }
        }
        dst
    };
    pass(&pass(&img.pixels, true), false)
}

fn one_view<R: Rng + ?Sized>(img: &ImageSample, cfg: &AugmentConfig, rng: &mut R) -> ImageSample {
    let method = match cfg.method {
        AugmentMethod::Any => [
            AugmentMethod::Jitter,
            AugmentMethod::Rotation,
            AugmentMethod::Crop,
            AugmentMethod::Flip,
        ][rng.random_range(0..4)],
        m => m,
    };
    let view = match method {
        AugmentMethod::Jitter => {
            let (lo, hi) = CONTRAST_RANGE;
            let contrast = rng.random_range(lo.ln()..=hi.ln()).exp();
            let brightness = rng.random_range(-BRIGHTNESS_RANGE..=BRIGHTNESS_RANGE);
            jitter(img, contrast, brightness)
        }
        AugmentMethod::Rotation => {
            rotate(img, rng.random_range(-ROTATION_DEGREES..=ROTATION_DEGREES))
        }
        AugmentMethod::Crop => {
            let side = rng.random_range(MIN_CROP_AREA..=1.0f64).sqrt();
            let (w, h) = (side * img.width as f64, side * img.height as f64);
            let x0 = rng.random_range(0.0..=img.width as f64 - w);
            let y0 = rng.random_range(0.0..=img.height as f64 - h);
            crop_resize(img, x0, y0, w, h)
        }
        AugmentMethod::Flip => {
            if rng.random_bool(0.5) {
                flip_horizontal(img)
            } else {
                img.clone()
            }
        }
        AugmentMethod::Any => unreachable!(),
    };
    if cfg.gaussian_blur {
        let (lo, hi) = BLUR_SIGMA_RANGE;
        let sigma = rng.random_range(lo..=hi);
        view.with_pixels(
            gaussian_blur(&view, sigma)
                .into_iter()
                .map(|p| p.clamp(0.0, 1.0))
                .collect(),
        )
    } else {
        view
    }
}

/// Two independent random views of the same source image.
pub fn augment_pair<R: Rng + ?Sized>(
    img: &ImageSample,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> (ImageSample, ImageSample) {
    let a = one_view(img, cfg, rng);
    let b = one_view(img, cfg, rng);
    (a, b)
}

/// [`augment_pair`] with a generator derived from `(cfg.rng_seed, key)`.
pub fn augment_pair_keyed(img: &ImageSample, cfg: &AugmentConfig, key: &[u64]) -> (ImageSample, ImageSample) {
    let mut coords = vec![rng::tag("augment")];
    coords.extend_from_slice(key);
    augment_pair(img, cfg, &mut rng::stream(cfg.rng_seed, &coords))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn ramp(w: usize, h: usize) -> ImageSample {
        ImageSample::new((0..w * h).map(|i| (i % w) as f64 / (w - 1) as f64).collect(), w, h, Some(1)).unwrap()
    }

    #[test]
    fn flip_views_are_identity_or_mirror() {
        let img = ramp(5, 3);
        let mirrored = flip_horizontal(&img);
        let cfg = AugmentConfig {
            method: AugmentMethod::Flip,
            gaussian_blur: false,
            rng_seed: 4,
        };
        let mut saw = [false; 2];
        for key in 0..16 {
            let (a, b) = augment_pair_keyed(&img, &cfg, &[key]);
            for v in [a, b] {
                if v == img {
                    saw[0] = true;
                } else {
                    assert_eq!(v, mirrored);
                    saw[1] = true;
                }
            }
        }
        assert_eq!(saw, [true, true]);
    }

    #[test]
    fn jitter_on_constant_image_is_affine() {
        let img = ImageSample::new(vec![0.4; 16], 4, 4, None).unwrap();
        for (c, b) in [(1.1, 0.1), (0.8, -0.2), (1.25, 0.2)] {
            let out = jitter(&img, c, b);
            let want = (c * 0.4 + b).clamp(0.0, 1.0);
            assert!(out.pixels.iter().all(|p| (p - want).abs() < 1e-15));
        }
        let bright = ImageSample::new(vec![0.95; 4], 2, 2, None).unwrap();
        assert!(jitter(&bright, 1.25, 0.2).pixels.iter().all(|p| *p == 1.0));
    }

    #[test]
    fn blur_preserves_delta_mass() {
        let mut px = vec![0.0; 15 * 15];
        px[7 * 15 + 7] = 1.0;
        let img = ImageSample::new(px, 15, 15, None).unwrap();
        for sigma in [0.1, 0.5, 1.0] {
            let out = gaussian_blur(&img, sigma);
            let mass: f64 = out.iter().sum();
            assert!((mass - 1.0).abs() < 1e-6);
            if sigma >= 0.5 {
                assert!(out[7 * 15 + 8] > 0.0 && out[7 * 15 + 7] < 1.0);
            }
        }
    }

    #[test]
    fn views_keep_shape_and_range() {
        let img = ramp(16, 16);
        for method in [
            AugmentMethod::Jitter,
            AugmentMethod::Rotation,
            AugmentMethod::Crop,
            AugmentMethod::Flip,
            AugmentMethod::Any,
        ] {
            let cfg = AugmentConfig {
                method,
                gaussian_blur: true,
                rng_seed: 9,
            };
            let (a, b) = augment_pair(&img, &cfg, &mut ChaCha8Rng::seed_from_u64(1));
            for v in [&a, &b] {
                assert_eq!((v.width, v.height, v.pixels.len()), (16, 16, 256));
                assert!(v.pixels.iter().all(|p| (0.0..=1.0).contains(p)));
                assert_eq!(v.label, Some(1));
            }
            assert_eq!(augment_pair_keyed(&img, &cfg, &[3]), augment_pair_keyed(&img, &cfg, &[3]));
        }
    }

    #[test]
    fn zero_rotation_and_full_crop_are_identity() {
        let img = ramp(8, 8);
        let r = rotate(&img, 0.0);
        let c = crop_resize(&img, 0.0, 0.0, 8.0, 8.0);
        for ((a, b), d) in img.pixels.iter().zip(&r.pixels).zip(&c.pixels) {
            assert!((a - b).abs() < 1e-12 && (a - d).abs() < 1e-12);
        }
    }
}
