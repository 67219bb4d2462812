//! Loader for the IDX image/label format (big-endian headers, u8 payloads).
//! Pixels are scaled to [0,1] and then normalized per channel over the
//! loaded split.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::{Dataset, SplitTag};
use crate::nn::Tensor;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    if bytes.len() < offset + 4 {
        return Err(Error::IdxFormat {
            path: path.to_path_buf(),
            offset: bytes.len() as u64,
            reason: format!("truncated while reading u32 at byte {offset}"),
        });
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let img = fs::read(images_path)?;
    let magic = be_u32(&img, 0, images_path)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::IdxFormat {
            path: images_path.to_path_buf(),
            offset: 0,
            reason: format!("image magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"),
        });
    }
    let n = be_u32(&img, 4, images_path)? as usize;
    let h = be_u32(&img, 8, images_path)? as usize;
    let w = be_u32(&img, 12, images_path)? as usize;
    let need = 16 + n * h * w;
    if img.len() != need {
        return Err(Error::IdxFormat {
            path: images_path.to_path_buf(),
            offset: img.len() as u64,
            reason: format!("expected {need} bytes for {n} images of {h}x{w}"),
        });
    }

    let lab = fs::read(labels_path)?;
    let magic = be_u32(&lab, 0, labels_path)?;
    if magic != LABELS_MAGIC {
        return Err(Error::IdxFormat {
            path: labels_path.to_path_buf(),
            offset: 0,
            reason: format!("label magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"),
        });
    }
    let ln = be_u32(&lab, 4, labels_path)? as usize;
    if lab.len() != 8 + ln {
        return Err(Error::IdxFormat {
            path: labels_path.to_path_buf(),
            offset: lab.len() as u64,
            reason: format!("expected {} bytes for {ln} labels", 8 + ln),
        });
    }
    if ln != n {
        return Err(Error::IdxFormat {
            path: labels_path.to_path_buf(),
            offset: 4,
            reason: format!("{ln} labels for {n} images"),
        });
    }

    let mut pixels: Vec<f64> = img[16..].iter().map(|&b| f64::from(b) / 255.0).collect();
    // single-channel normalization over the whole split
    let mean = pixels.iter().sum::<f64>() / pixels.len() as f64;
    let var = pixels.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / pixels.len() as f64;
    let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
    for p in &mut pixels {
        *p = (*p - mean) / sd;
    }

    let labels: Vec<usize> = lab[8..].iter().map(|&b| b as usize).collect();
    let classes = labels.iter().copied().max().unwrap_or(0) + 1;
    let inputs = Tensor::from_vec(&[n, 1, h, w], pixels.iter().map(|&v| v as f32).collect())?;
    Dataset::new(inputs, labels, classes, SplitTag::Train)
}
