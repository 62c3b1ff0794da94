//! Reader for the big-endian IDX files the MNIST digits are distributed in.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::snn::{LabeledImage, IMAGE_SIDE};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

pub const DOWNLOAD_HINT: &str = "MNIST files not found. Download train-images-idx3-ubyte, train-labels-idx1-ubyte, \
t10k-images-idx3-ubyte and t10k-labels-idx1-ubyte (gunzipped) from https://yann.lecun.com/exdb/mnist/ \
or a mirror, and place them in the dataset directory (default data/mnist, or set MNIST_DIR).";

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_be_bytes(b))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            log::error!("{DOWNLOAD_HINT}");
        }
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

/// Parses an IDX3 image file; returns the count and the flat pixel payload.
pub fn read_images(path: &Path) -> Result<(usize, Vec<u8>)> {
    let mut r = open(path)?;
    let magic = read_u32(&mut r)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Format(format!("{}: image magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}", path.display())));
    }
    let n = read_u32(&mut r)? as usize;
    let rows = read_u32(&mut r)? as usize;
    let cols = read_u32(&mut r)? as usize;
    if rows != IMAGE_SIDE || cols != IMAGE_SIDE {
        return Err(Error::Format(format!("{}: images are {rows}x{cols}, expected 28x28", path.display())));
    }
    let mut pixels = vec![0u8; n * rows * cols];
    r.read_exact(&mut pixels)?;
    Ok((n, pixels))
}

/// Parses an IDX1 label file.
pub fn read_labels(path: &Path) -> Result<Vec<u8>> {
    let mut r = open(path)?;
    let magic = read_u32(&mut r)?;
    if magic != LABEL_MAGIC {
        return Err(Error::Format(format!("{}: label magic {magic:#010x}, expected {LABEL_MAGIC:#010x}", path.display())));
    }
    let n = read_u32(&mut r)? as usize;
    let mut labels = vec![0u8; n];
    r.read_exact(&mut labels)?;
    Ok(labels)
}

/// Loads paired image and label files.
pub fn load_mnist_idx(images_path: &Path, labels_path: &Path) -> Result<Vec<LabeledImage>> {
    let (n, pixels) = read_images(images_path)?;
    let labels = read_labels(labels_path)?;
    if labels.len() != n {
        return Err(Error::Consistency(format!("{n} images but {} labels", labels.len())));
    }
    if let Some(bad) = labels.iter().position(|&l| l > 9) {
        return Err(Error::Consistency(format!("label {} at index {bad} is not a digit", labels[bad])));
    }
    let px = IMAGE_SIDE * IMAGE_SIDE;
    Ok(pixels
        .chunks_exact(px)
        .zip(labels)
        .map(|(p, label)| LabeledImage { pixels: p.to_vec(), label })
        .collect())
}

/// Directory holding the four MNIST files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MnistDir(pub PathBuf);

impl MnistDir {
    /// `MNIST_DIR` if set, else `data/mnist` under `root`.
    pub fn locate(root: &Path) -> Self {
        match std::env::var_os("MNIST_DIR") {
            Some(d) => Self(PathBuf::from(d)),
            None => Self(root.join("data").join("mnist")),
        }
    }

    pub fn exists(&self) -> bool {
        [TRAIN_IMAGES, TRAIN_LABELS, TEST_IMAGES, TEST_LABELS].iter().all(|f| self.0.join(f).is_file())
    }

    pub fn train(&self) -> Result<Vec<LabeledImage>> {
        load_mnist_idx(&self.0.join(TRAIN_IMAGES), &self.0.join(TRAIN_LABELS))
    }

    pub fn test(&self) -> Result<Vec<LabeledImage>> {
        load_mnist_idx(&self.0.join(TEST_IMAGES), &self.0.join(TEST_LABELS))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn idx_images(n: u32, rows: u32, payload: usize) -> Vec<u8> {
        let mut v = Vec::new();
        for x in [IMAGE_MAGIC, n, rows, 28] {
            v.extend_from_slice(&x.to_be_bytes());
        }
        v.extend((0..payload).map(|i| (i % 251) as u8));
        v
    }

    fn idx_labels(labels: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        v.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
        v.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        v.extend_from_slice(labels);
        v
    }

    fn write(dir: &Path, name: &str, bytes: &[u8]) -> PathBuf {
        let p = dir.join(name);
        File::create(&p).unwrap().write_all(bytes).unwrap();
        p
    }

    #[test]
    fn parses_well_formed_files() {
        let d = tempfile::tempdir().unwrap();
        let im = write(d.path(), "i", &idx_images(3, 28, 3 * 784));
        let lb = write(d.path(), "l", &idx_labels(&[7, 0, 9]));
        let set = load_mnist_idx(&im, &lb).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set[2].label, 9);
        assert_eq!(set[1].pixels[0], (784 % 251) as u8);
    }

    #[test]
    fn wrong_magic_is_format_error() {
        let d = tempfile::tempdir().unwrap();
        let mut bytes = idx_images(1, 28, 784);
        bytes[3] = 0x01;
        let im = write(d.path(), "i", &bytes);
        let lb = write(d.path(), "l", &idx_labels(&[1]));
        assert!(matches!(load_mnist_idx(&im, &lb), Err(Error::Format(_))));
        // swapped files
        assert!(matches!(load_mnist_idx(&lb, &lb), Err(Error::Format(_))));
    }

    #[test]
    fn wrong_dimensions_are_format_errors() {
        let d = tempfile::tempdir().unwrap();
        let im = write(d.path(), "i", &idx_images(1, 27, 27 * 28));
        let lb = write(d.path(), "l", &idx_labels(&[1]));
        assert!(matches!(load_mnist_idx(&im, &lb), Err(Error::Format(_))));
    }

    #[test]
    fn count_mismatch_and_bad_labels_are_consistency_errors() {
        let d = tempfile::tempdir().unwrap();
        let im = write(d.path(), "i", &idx_images(2, 28, 2 * 784));
        let lb = write(d.path(), "l", &idx_labels(&[1]));
        assert!(matches!(load_mnist_idx(&im, &lb), Err(Error::Consistency(_))));
        let lb = write(d.path(), "l2", &idx_labels(&[1, 10]));
        assert!(matches!(load_mnist_idx(&im, &lb), Err(Error::Consistency(_))));
    }

    #[test]
    fn truncated_payload_is_io_error() {
        let d = tempfile::tempdir().unwrap();
        let im = write(d.path(), "i", &idx_images(2, 28, 784 + 100));
        let lb = write(d.path(), "l", &idx_labels(&[1, 2]));
        assert!(matches!(load_mnist_idx(&im, &lb), Err(Error::Io(_))));
        let im = write(d.path(), "i2", &idx_images(2, 28, 2 * 784));
        let mut short = idx_labels(&[1, 2]);
        short.pop();
        let lb = write(d.path(), "l2", &short);
        assert!(matches!(load_mnist_idx(&im, &lb), Err(Error::Io(_))));
    }

    #[test]
    fn missing_file_is_io_error() {
        let d = tempfile::tempdir().unwrap();
        assert!(matches!(load_mnist_idx(&d.path().join("x"), &d.path().join("y")), Err(Error::Io(_))));
    }
}
