//! MNIST IDX reading and writing, binarization, bit flipping and stratified
//! subsampling. Paths ending in `.gz` are (de)compressed transparently.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::math::seeded_rng;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
pub const PIXELS: usize = 784;
pub const N_DIGITS: usize = 10;
pub const DEFAULT_THRESHOLD: u8 = 127;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Raw,
    Binarized,
    Flipped,
}

impl Variant {
    fn name(self) -> &'static str {
        match self {
            Variant::Raw => "raw",
            Variant::Binarized => "binarized",
            Variant::Flipped => "flipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    /// `n_images × 784`: bytes 0–255 when raw, bits afterwards.
    pub pixels: Array2<u8>,
    pub labels: Vec<u8>,
    pub variant: Variant,
}

impl ImageSet {
    pub fn new(pixels: Array2<u8>, labels: Vec<u8>, variant: Variant) -> Result<Self> {
        if pixels.ncols() != PIXELS {
            return Err(Error::shape("pixels per image", PIXELS, pixels.ncols()));
        }
        if pixels.nrows() != labels.len() {
            return Err(Error::shape("label count", pixels.nrows(), labels.len()));
        }
        if let Some(bad) = labels.iter().find(|&&l| l as usize >= N_DIGITS) {
            return Err(Error::Domain(format!("digit label {bad} out of range")));
        }
        if variant != Variant::Raw && pixels.iter().any(|&p| p > 1) {
            return Err(Error::Domain(format!("{} images must contain only 0/1", variant.name())));
        }
        Ok(Self { pixels, labels, variant })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Fraction of zero pixels.
    pub fn zero_fraction(&self) -> f64 {
        if self.pixels.is_empty() {
            return 0.0;
        }
        self.pixels.iter().filter(|&&p| p == 0).count() as f64 / self.pixels.len() as f64
    }

    /// Pixels as `f64` features, bits unchanged and raw bytes divided by 255.
    pub fn to_dataset(&self, seed: u64) -> Dataset {
        let scale = if self.variant == Variant::Raw { 255.0 } else { 1.0 };
        let features = self.pixels.mapv(|p| f64::from(p) / scale);
        let labels = self.labels.iter().map(|&l| l as usize).collect();
        Dataset::from_parts(features, labels, seed).expect("image set is consistent")
    }

    fn expect(&self, variant: Variant) -> Result<()> {
        if self.variant == variant {
            Ok(())
        } else {
            Err(Error::State {
                expected: variant.name(),
                found: self.variant.name().to_string(),
            })
        }
    }

    fn select(&self, rows: &[usize]) -> ImageSet {
        ImageSet {
            pixels: self.pixels.select(Axis(0), rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            variant: self.variant,
        }
    }
}

fn read_u32(bytes: &[u8], at: usize) -> Option<u32> {
    bytes.get(at..at + 4).map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
}

fn header(bytes: &[u8], field: &str, magic: u32, n_dims: usize) -> Result<Vec<usize>> {
    let len = 4 * (n_dims + 1);
    if bytes.len() < len {
        return Err(Error::parse(field, "truncated header"));
    }
    let found = read_u32(bytes, 0).expect("length checked");
    if found != magic {
        return Err(Error::parse(
            field,
            format!("unexpected magic 0x{found:08x} (expected 0x{magic:08x})"),
        ));
    }
    Ok((1..=n_dims).map(|d| read_u32(bytes, 4 * d).expect("length checked") as usize).collect())
}

/// Parses an image file and a label file already read into memory.
pub fn parse_idx(images: &[u8], labels: &[u8]) -> Result<ImageSet> {
    let dims = header(images, "images", IMAGE_MAGIC, 3)?;
    let (n, rows, cols) = (dims[0], dims[1], dims[2]);
    if rows * cols != PIXELS {
        return Err(Error::parse("images", format!("expected 28x28 images, found {rows}x{cols}")));
    }
    let body = &images[16..];
    if body.len() != n * PIXELS {
        return Err(Error::parse(
            "images",
            format!("truncated body: expected {} bytes, found {}", n * PIXELS, body.len()),
        ));
    }
    let n_labels = header(labels, "labels", LABEL_MAGIC, 1)?[0];
    if n_labels != n {
        return Err(Error::parse("labels", format!("count {n_labels} does not match {n} images")));
    }
    let label_body = &labels[8..];
    if label_body.len() != n {
        return Err(Error::parse(
            "labels",
            format!("truncated body: expected {n} bytes, found {}", label_body.len()),
        ));
    }
    let pixels = Array2::from_shape_vec((n, PIXELS), body.to_vec()).expect("length checked");
    ImageSet::new(pixels, label_body.to_vec(), Variant::Raw)
        .map_err(|e| Error::parse("labels", e.to_string()))
}

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    if is_gz(path) {
        GzDecoder::new(file).read_to_end(&mut bytes)
    } else {
        file.read_to_end(&mut bytes)
    }
    .map_err(|e| Error::io(path, e))?;
    Ok(bytes)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    if is_gz(path) {
        let mut enc = GzEncoder::new(file, Compression::default());
        enc.write_all(bytes).and_then(|_| enc.finish().map(drop))
    } else {
        let mut file = file;
        file.write_all(bytes)
    }
    .map_err(|e| Error::io(path, e))
}

pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<ImageSet> {
    parse_idx(&read_file(images_path)?, &read_file(labels_path)?)
}

/// Serializes to the two IDX byte streams `(images, labels)`.
pub fn encode_idx(set: &ImageSet) -> (Vec<u8>, Vec<u8>) {
    let n = set.len() as u32;
    let mut images = Vec::with_capacity(16 + set.pixels.len());
    for word in [IMAGE_MAGIC, n, 28, 28] {
        images.extend_from_slice(&word.to_be_bytes());
    }
    images.extend(set.pixels.iter());
    let mut labels = Vec::with_capacity(8 + set.len());
    labels.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    labels.extend_from_slice(&n.to_be_bytes());
    labels.extend_from_slice(&set.labels);
    (images, labels)
}

pub fn write_idx(set: &ImageSet, images_path: &Path, labels_path: &Path) -> Result<()> {
    let (images, labels) = encode_idx(set);
    write_file(images_path, &images)?;
    write_file(labels_path, &labels)
}

/// `1` where the raw byte exceeds `threshold`.
pub fn binarize(set: &ImageSet, threshold: u8) -> Result<ImageSet> {
    set.expect(Variant::Raw)?;
    Ok(ImageSet {
        pixels: set.pixels.mapv(|p| u8::from(p > threshold)),
        labels: set.labels.clone(),
        variant: Variant::Binarized,
    })
}

/// Swaps foreground and background bits.
pub fn flip(set: &ImageSet) -> Result<ImageSet> {
    set.expect(Variant::Binarized)?;
    Ok(ImageSet {
        pixels: set.pixels.mapv(|p| 1 - p),
        labels: set.labels.clone(),
        variant: Variant::Flipped,
    })
}

/// Draws `n` images without replacement, allocating per-digit quotas by
/// largest remainder so each class gets its proportional share within one
/// image. The result is shuffled.
pub fn subsample(set: &ImageSet, n: usize, seed: u64) -> Result<ImageSet> {
    let total = set.len();
    if n > total {
        return Err(Error::Domain(format!("cannot sample {n} of {total} images")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); N_DIGITS];
    for (i, &label) in set.labels.iter().enumerate() {
        by_class[label as usize].push(i);
    }

    let mut quotas: Vec<usize> = Vec::with_capacity(N_DIGITS);
    let mut remainders: Vec<(usize, usize)> = Vec::with_capacity(N_DIGITS);
    for (class, rows) in by_class.iter().enumerate() {
        let exact = n * rows.len();
        quotas.push(exact / total.max(1));
        remainders.push((exact % total.max(1), class));
    }
    let short = n - quotas.iter().sum::<usize>();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, class) in remainders.iter().take(short) {
        quotas[class] += 1;
    }

    let mut rng = seeded_rng(seed);
    let mut chosen = Vec::with_capacity(n);
    for (rows, &quota) in by_class.iter_mut().zip(&quotas) {
        rows.shuffle(&mut rng);
        chosen.extend_from_slice(&rows[..quota]);
    }
    chosen.shuffle(&mut rng);
    Ok(set.select(&chosen))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> ImageSet {
        let mut pixels = Array2::zeros((3, PIXELS));
        pixels[[0, 0]] = 100;
        pixels[[0, 1]] = 128;
        pixels[[1, 5]] = 255;
        ImageSet::new(pixels, vec![3, 7, 3], Variant::Raw).unwrap()
    }

    #[test]
    fn header_errors() {
        let (images, labels) = encode_idx(&fixture());
        let err = parse_idx(&[], &labels).unwrap_err();
        assert!(err.to_string().contains("truncated header"));
        let err = parse_idx(&images, &images).unwrap_err();
        assert!(err.to_string().contains("unexpected magic"));
        let err = parse_idx(&images[..images.len() - 1], &labels).unwrap_err();
        assert!(err.to_string().contains("truncated body"));
    }

    #[test]
    fn wrong_variant_is_a_state_error() {
        let set = fixture();
        assert!(matches!(flip(&set), Err(Error::State { .. })));
        let bits = binarize(&set, DEFAULT_THRESHOLD).unwrap();
        assert!(matches!(binarize(&bits, 0), Err(Error::State { .. })));
    }

    #[test]
    fn subsample_too_many() {
        assert!(matches!(subsample(&fixture(), 4, 0), Err(Error::Domain(_))));
    }
}
