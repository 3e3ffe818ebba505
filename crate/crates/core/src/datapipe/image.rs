use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grayscale image, row-major pixels in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSample {
    pub pixels: Vec<f64>,
    pub width: usize,
    pub height: usize,
    pub label: Option<usize>,
}

impl ImageSample {
    pub fn new(pixels: Vec<f64>, width: usize, height: usize, label: Option<usize>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Dimension {
                expected: width * height,
                got: pixels.len(),
            });
        }
        if let Some(i) = pixels.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Range {
                index: i,
                value: pixels[i],
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(Self {
            pixels,
            width,
            height,
            label,
        })
    }

    pub(crate) fn with_pixels(&self, pixels: Vec<f64>) -> Self {
        debug_assert_eq!(pixels.len(), self.pixels.len());
        Self {
            pixels,
            width: self.width,
            height: self.height,
            label: self.label,
        }
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Bilinear sample at continuous pixel coordinates; zero outside the frame.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        let get = |xi: f64, yi: f64| {
            if xi < 0.0 || yi < 0.0 || xi >= self.width as f64 || yi >= self.height as f64 {
                0.0
            } else {
                self.at(xi as usize, yi as usize)
            }
        };
        let top = get(x0, y0) * (1.0 - fx) + get(x0 + 1.0, y0) * fx;
        let bottom = get(x0, y0 + 1.0) * (1.0 - fx) + get(x0 + 1.0, y0 + 1.0) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Writes an 8-bit binary PGM.
    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pixels.iter().map(|p| (p.clamp(0.0, 1.0) * 255.0).round() as u8));
        fs::write(path, out)?;
        Ok(())
    }
}

// Triangle-filter weights for one output coordinate; the filter widens with the
// reduction factor so every source pixel contributes when shrinking.
fn axis_weights(in_len: usize, out_len: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = in_len as f64 / out_len as f64;
    let support = scale.max(1.0);
    (0..out_len)
        .map(|o| {
            let center = (o as f64 + 0.5) * scale - 0.5;
            let lo = (center - support).floor().max(0.0) as usize;
            let hi = ((center + support).ceil() as usize).min(in_len - 1);
            let mut taps: Vec<(usize, f64)> = (lo..=hi)
                .map(|i| (i, (1.0 - (i as f64 - center).abs() / support).max(0.0)))
                .filter(|(_, w)| *w > 0.0)
                .collect();
            if taps.is_empty() {
                taps.push((center.round().clamp(0.0, (in_len - 1) as f64) as usize, 1.0));
            }
            let total: f64 = taps.iter().map(|(_, w)| w).sum();
            taps.iter_mut().for_each(|(_, w)| *w /= total);
            taps
        })
        .collect()
}

/// Bilinear resize. Pixel centers are aligned; when shrinking, the bilinear
/// (triangle) kernel is stretched by the reduction factor.
pub fn bilinear_downsample(img: &ImageSample, out_w: usize, out_h: usize) -> Result<ImageSample> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::Argument("output dimensions must be at least 1".into()));
    }
    let wx = axis_weights(img.width, out_w);
    let wy = axis_weights(img.height, out_h);
    // rows first, then columns
    let mut horiz = vec![0.0; out_w * img.height];
    for y in 0..img.height {
        for (ox, taps) in wx.iter().enumerate() {
            horiz[y * out_w + ox] = taps.iter().map(|&(x, w)| w * img.at(x, y)).sum();
        }
    }
    let mut out = vec![0.0; out_w * out_h];
    for (oy, taps) in wy.iter().enumerate() {
        for ox in 0..out_w {
            let v: f64 = taps.iter().map(|&(y, w)| w * horiz[y * out_w + ox]).sum();
            out[oy * out_w + ox] = v.clamp(0.0, 1.0);
        }
    }
    Ok(ImageSample {
        pixels: out,
        width: out_w,
        height: out_h,
        label: img.label,
    })
}
