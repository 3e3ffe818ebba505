use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use super::image::ImageSample;
use crate::error::{Error, IdxError, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_maybe_gzip(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], at: usize) -> Option<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
}

fn idx_err(path: &Path, kind: IdxError) -> Error {
    Error::Idx {
        path: path.to_path_buf(),
        kind,
    }
}

fn header(bytes: &[u8], path: &Path, magic: u32, words: usize) -> Result<Vec<usize>> {
    let found = be_u32(bytes, 0).ok_or_else(|| {
        idx_err(
            path,
            IdxError::Truncated {
                expected: 4 * words,
                found: bytes.len(),
            },
        )
    })?;
    if found != magic {
        return Err(idx_err(path, IdxError::BadMagic { expected: magic, found }));
    }
    (1..words)
        .map(|w| {
            be_u32(bytes, 4 * w).map(|v| v as usize).ok_or_else(|| {
                idx_err(
                    path,
                    IdxError::Truncated {
                        expected: 4 * words,
                        found: bytes.len(),
                    },
                )
            })
        })
        .collect()
}

/// Parses an IDX image file (optionally gzip-compressed) into `[0, 1]` pixels.
pub fn load_idx_images(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<Vec<f64>>)> {
    let path = path.as_ref();
    let bytes = read_maybe_gzip(path)?;
    let dims = header(&bytes, path, IMAGES_MAGIC, 4)?;
    let (count, rows, cols) = (dims[0], dims[1], dims[2]);
    let size = rows * cols;
    let expected = 16 + count * size;
    if bytes.len() < expected {
        return Err(idx_err(
            path,
            IdxError::Truncated {
                expected,
                found: bytes.len(),
            },
        ));
    }
    let images = bytes[16..expected]
        .chunks_exact(size.max(1))
        .take(count)
        .map(|px| px.iter().map(|&b| b as f64 / 255.0).collect())
        .collect();
    Ok((cols, rows, images))
}

/// Parses an IDX label file (optionally gzip-compressed).
pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let bytes = read_maybe_gzip(path)?;
    let count = header(&bytes, path, LABELS_MAGIC, 2)?[0];
    let expected = 8 + count;
    if bytes.len() < expected {
        return Err(idx_err(
            path,
            IdxError::Truncated {
                expected,
                found: bytes.len(),
            },
        ));
    }
    Ok(bytes[8..expected].iter().map(|&b| b as usize).collect())
}

/// Loads paired image and label files into labeled samples.
pub fn load_idx(path_images: impl AsRef<Path>, path_labels: impl AsRef<Path>) -> Result<Vec<ImageSample>> {
    let (width, height, images) = load_idx_images(&path_images)?;
    let labels = load_idx_labels(&path_labels)?;
    if images.len() != labels.len() {
        return Err(idx_err(
            path_labels.as_ref(),
            IdxError::CountMismatch {
                images: images.len(),
                labels: labels.len(),
            },
        ));
    }
    images
        .into_iter()
        .zip(labels)
        .map(|(px, label)| ImageSample::new(px, width, height, Some(label)))
        .collect()
}
