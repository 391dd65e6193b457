//! IDX image files: the big-endian header format used by the classic
//! 28×28 grayscale benchmark sets, plus a deterministic synthetic
//! drop-in generated when the real files are absent.
//!
//! Pixels are stored as bytes and exposed as `f64` in `[0, 1]` (divided by
//! 255). Parsing validates magics, dimensions, and exact file length, and
//! reports failures with the byte offset where the problem sits. The
//! synthetic generator produces ten balanced classes built from
//! class-specific low-frequency intensity patterns with per-sample jitter —
//! enough structure that every classifier in the crate has something real
//! to learn, while staying fully reproducible from one seed.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exp::seeds::trial_seed;
use crate::spinchain::write_bytes_atomic;

/// Image edge length; the format is fixed to square 28×28 frames here.
pub const IMAGE_SIDE: usize = 28;
/// Pixels per image.
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;
/// Class count of the image task.
pub const IMAGE_CLASSES: u32 = 10;

/// Images in the synthesized training file.
pub const TRAIN_COUNT: usize = 60_000;
/// Images in the synthesized test file.
pub const TEST_COUNT: usize = 10_000;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// Decoded image set: row-major pixel intensities in `[0, 1]` with class
/// labels in `0..10`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageDataset {
    pub images: Vec<Vec<f64>>,
    pub labels: Vec<u32>,
}

impl ImageDataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Shape and range checks; every producer in this module upholds these,
    /// writers re-check before serializing.
    pub fn check(&self) -> Result<()> {
        if self.images.len() != self.labels.len() {
            return Err(Error::Dimension {
                context: "image dataset labels",
                expected: self.images.len(),
                actual: self.labels.len(),
            });
        }
        for image in &self.images {
            if image.len() != IMAGE_PIXELS {
                return Err(Error::Dimension {
                    context: "image pixels",
                    expected: IMAGE_PIXELS,
                    actual: image.len(),
                });
            }
            if image.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::NonFinite("image pixel outside [0, 1]"));
            }
        }
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= IMAGE_CLASSES) {
            return Err(Error::Config(format!(
                "image label {bad} outside 0..{IMAGE_CLASSES}"
            )));
        }
        Ok(())
    }
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(Error::format(
            path.display().to_string(),
            bytes.len() as u64,
            format!("file too short for a header word at byte {offset}"),
        ));
    }
    Ok(u32::from_be_bytes(bytes[offset..end].try_into().unwrap()))
}

fn expect_len(bytes: &[u8], expected: usize, path: &Path) -> Result<()> {
    if bytes.len() < expected {
        return Err(Error::format(
            path.display().to_string(),
            bytes.len() as u64,
            format!("truncated: expected {expected} bytes, found {}", bytes.len()),
        ));
    }
    if bytes.len() > expected {
        return Err(Error::format(
            path.display().to_string(),
            expected as u64,
            format!("{} trailing bytes after the payload", bytes.len() - expected),
        ));
    }
    Ok(())
}

/// Validate both files and return their raw payload bytes plus the shared
/// record count. Image payload starts at byte 16, label payload at byte 8.
fn load_raw(images_path: &Path, labels_path: &Path) -> Result<(Vec<u8>, Vec<u8>, usize)> {
    let images = std::fs::read(images_path)
        .map_err(|e| Error::io(images_path.display().to_string(), e))?;
    let magic = be_u32(&images, 0, images_path)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::format(
            images_path.display().to_string(),
            0,
            format!("bad image magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"),
        ));
    }
    let count = be_u32(&images, 4, images_path)? as usize;
    for (offset, expected) in [(8usize, IMAGE_SIDE), (12, IMAGE_SIDE)] {
        let dim = be_u32(&images, offset, images_path)? as usize;
        if dim != expected {
            return Err(Error::format(
                images_path.display().to_string(),
                offset as u64,
                format!("image dimension {dim}, expected {expected}"),
            ));
        }
    }
    expect_len(&images, 16 + count * IMAGE_PIXELS, images_path)?;

    let labels = std::fs::read(labels_path)
        .map_err(|e| Error::io(labels_path.display().to_string(), e))?;
    let magic = be_u32(&labels, 0, labels_path)?;
    if magic != LABELS_MAGIC {
        return Err(Error::format(
            labels_path.display().to_string(),
            0,
            format!("bad label magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"),
        ));
    }
    let label_count = be_u32(&labels, 4, labels_path)? as usize;
    if label_count != count {
        return Err(Error::format(
            labels_path.display().to_string(),
            4,
            format!("label count {label_count} does not match image count {count}"),
        ));
    }
    expect_len(&labels, 8 + count, labels_path)?;
    if let Some(pos) = labels[8..].iter().position(|&l| u32::from(l) >= IMAGE_CLASSES) {
        return Err(Error::format(
            labels_path.display().to_string(),
            (8 + pos) as u64,
            format!("label value {} outside 0..{IMAGE_CLASSES}", labels[8 + pos]),
        ));
    }
    Ok((images, labels, count))
}

/// Number of records in a validated image/label file pair, without decoding
/// the pixels.
pub fn count_idx(images_path: &Path, labels_path: &Path) -> Result<usize> {
    load_raw(images_path, labels_path).map(|(_, _, count)| count)
}

/// Every label in a validated image/label file pair, without decoding the
/// pixels. Lets callers pick class-balanced subsets before paying for image
/// decoding.
pub fn read_idx_labels(images_path: &Path, labels_path: &Path) -> Result<Vec<u32>> {
    let (_, labels, count) = load_raw(images_path, labels_path)?;
    Ok(labels[8..8 + count].iter().map(|&l| u32::from(l)).collect())
}

fn decode(images: &[u8], labels: &[u8], indices: &[usize], count: usize) -> Result<ImageDataset> {
    let mut out = ImageDataset {
        images: Vec::with_capacity(indices.len()),
        labels: Vec::with_capacity(indices.len()),
    };
    for &i in indices {
        if i >= count {
            return Err(Error::Config(format!(
                "image index {i} out of range for {count} records"
            )));
        }
        let start = 16 + i * IMAGE_PIXELS;
        out.images.push(
            images[start..start + IMAGE_PIXELS]
                .iter()
                .map(|&p| f64::from(p) / 255.0)
                .collect(),
        );
        out.labels.push(u32::from(labels[8 + i]));
    }
    Ok(out)
}

/// Load a full image/label file pair.
pub fn parse_idx(images_path: &Path, labels_path: &Path) -> Result<ImageDataset> {
    let (images, labels, count) = load_raw(images_path, labels_path)?;
    let all: Vec<usize> = (0..count).collect();
    decode(&images, &labels, &all, count)
}

/// Load only the listed records (validates the whole file first). This keeps
/// per-trial subsets cheap against the 60 000-image training file.
pub fn parse_idx_subset(
    images_path: &Path,
    labels_path: &Path,
    indices: &[usize],
) -> Result<ImageDataset> {
    let (images, labels, count) = load_raw(images_path, labels_path)?;
    decode(&images, &labels, indices, count)
}

/// Write an image/label file pair, quantizing pixels to bytes. Writes are
/// atomic (temp file + rename) so readers never see a half-written set.
pub fn write_idx(images_path: &Path, labels_path: &Path, data: &ImageDataset) -> Result<()> {
    data.check()?;
    let count = data.len() as u32;
    let mut images = Vec::with_capacity(16 + data.len() * IMAGE_PIXELS);
    images.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    images.extend_from_slice(&count.to_be_bytes());
    images.extend_from_slice(&(IMAGE_SIDE as u32).to_be_bytes());
    images.extend_from_slice(&(IMAGE_SIDE as u32).to_be_bytes());
    for image in &data.images {
        images.extend(image.iter().map(|&p| (p * 255.0).round() as u8));
    }
    let mut labels = Vec::with_capacity(8 + data.len());
    labels.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    labels.extend_from_slice(&count.to_be_bytes());
    labels.extend(data.labels.iter().map(|&l| l as u8));
    write_bytes_atomic(images_path, &images)?;
    write_bytes_atomic(labels_path, &labels)
}

/// One synthetic frame. Each class owns a distinct pair of low spatial
/// frequencies plus a phase, so class means are well separated; samples
/// jitter the pattern by a sub-pixel translation and add pixel noise.
fn synthetic_image(class: u32, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let fr = 1.0 + f64::from(class % 3);
    let fc = 1.0 + f64::from((class / 3) % 3);
    let phase = 0.6 * f64::from(class);
    let dr: f64 = rng.gen_range(-1.5..1.5);
    let dc: f64 = rng.gen_range(-1.5..1.5);
    let side = IMAGE_SIDE as f64;
    let mut pixels = Vec::with_capacity(IMAGE_PIXELS);
    for r in 0..IMAGE_SIDE {
        for c in 0..IMAGE_SIDE {
            let u = (r as f64 + dr) / side;
            let v = (c as f64 + dc) / side;
            let value = 0.5
                + 0.45
                    * (std::f64::consts::PI * fr * u + phase).sin()
                    * (std::f64::consts::PI * fc * v - phase).cos()
                + rng.gen_range(-0.06..0.06);
            pixels.push(value.clamp(0.0, 1.0));
        }
    }
    pixels
}

/// Deterministic balanced synthetic image set. Record `i` has label
/// `i % 10` and its own seed derived from `(seed, offset + i)`, so any
/// prefix of the stream is stable regardless of `count`.
pub fn synthesize_fashion(count: usize, seed: u64, offset: u64) -> ImageDataset {
    let mut data = ImageDataset {
        images: Vec::with_capacity(count),
        labels: Vec::with_capacity(count),
    };
    for i in 0..count {
        let label = (i as u32) % IMAGE_CLASSES;
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, offset + i as u64));
        // Quantize through the byte format so in-memory data equals what a
        // write/parse round trip yields.
        data.images.push(
            synthetic_image(label, &mut rng)
                .into_iter()
                .map(|p| f64::from((p * 255.0).round() as u8) / 255.0)
                .collect(),
        );
        data.labels.push(label);
    }
    data
}

/// The four files of an image task directory, under their conventional
/// names.
#[derive(Debug, Clone)]
pub struct FashionPaths {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
}

impl FashionPaths {
    pub fn in_dir(dir: &Path) -> Self {
        FashionPaths {
            train_images: dir.join("train-images-idx3-ubyte"),
            train_labels: dir.join("train-labels-idx1-ubyte"),
            test_images: dir.join("t10k-images-idx3-ubyte"),
            test_labels: dir.join("t10k-labels-idx1-ubyte"),
        }
    }

    pub fn all_exist(&self) -> bool {
        [
            &self.train_images,
            &self.train_labels,
            &self.test_images,
            &self.test_labels,
        ]
        .iter()
        .all(|p| p.exists())
    }
}

/// Make sure an image task directory is usable: if any of the four files is
/// missing, synthesize a full replacement set (train and test drawn from
/// disjoint seed ranges). Existing complete sets are left untouched, so
/// dropping in real benchmark files works.
pub fn ensure_fashion_files(dir: &Path, seed: u64) -> Result<FashionPaths> {
    ensure_fashion_files_sized(dir, seed, TRAIN_COUNT, TEST_COUNT)
}

/// [`ensure_fashion_files`] with explicit record counts (tests use small
/// ones).
pub fn ensure_fashion_files_sized(
    dir: &Path,
    seed: u64,
    n_train: usize,
    n_test: usize,
) -> Result<FashionPaths> {
    let paths = FashionPaths::in_dir(dir);
    if paths.all_exist() {
        return Ok(paths);
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let train = synthesize_fashion(n_train, seed, 0);
    write_idx(&paths.train_images, &paths.train_labels, &train)?;
    drop(train);
    let test = synthesize_fashion(n_test, seed, n_train as u64);
    write_idx(&paths.test_images, &paths.test_labels, &test)?;
    Ok(paths)
}
