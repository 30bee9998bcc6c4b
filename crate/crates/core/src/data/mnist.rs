//! MNIST idx loader and latent-space interpolation of ambiguous digits.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::PathwayNetwork;
use crate::nn::{Matrix, Rng, Sampling};

use super::{DatasetKind, Group, LabeledDataset};

const IMAGE_MAGIC: u32 = 2051;
const LABEL_MAGIC: u32 = 2049;

const FILE_PAIRS: [(&str, &str); 5] = [
    ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    ("train-images.idx3-ubyte", "train-labels.idx1-ubyte"),
    ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
    ("t10k-images.idx3-ubyte", "t10k-labels.idx1-ubyte"),
    ("images-idx3-ubyte", "labels-idx1-ubyte"),
];

pub const DEFAULT_T_VALUES: [f64; 3] = [0.4, 0.5, 0.6];

#[derive(Clone, Debug, PartialEq)]
pub struct MnistConfig {
    pub normal_digit: u8,
    /// Fault digits in label order: the first becomes class 1.
    pub fault_digits: Vec<u8>,
    pub unknown_digits: Vec<u8>,
    /// 2×2 average pooling to 14×14.
    pub pool: bool,
    /// Keep at most this many images of each digit (first come first kept).
    pub max_per_digit: Option<usize>,
}

impl Default for MnistConfig {
    fn default() -> Self {
        Self {
            normal_digit: 0,
            fault_digits: vec![5, 6, 8, 9],
            unknown_digits: vec![1, 2, 3, 4, 7],
            pool: true,
            max_per_digit: None,
        }
    }
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    let b = bytes.get(at..at + 4).ok_or(Error::Truncated {
        expected: at + 4,
        found: bytes.len(),
    })?;
    Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
}

fn check_magic(bytes: &[u8], magic: u32) -> Result<()> {
    let found = be_u32(bytes, 0).map_err(|_| Error::BadMagic {
        expected: magic.to_be_bytes().to_vec(),
        found: bytes.to_vec(),
    })?;
    if found != magic {
        return Err(Error::BadMagic {
            expected: magic.to_be_bytes().to_vec(),
            found: found.to_be_bytes().to_vec(),
        });
    }
    Ok(())
}

/// Image file: magic, count, rows, cols (big-endian u32), then u8 pixels.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, usize, &[u8])> {
    check_magic(bytes, IMAGE_MAGIC)?;
    let n = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let need = n * rows * cols;
    let pixels = &bytes[16..];
    if pixels.len() != need {
        return Err(Error::Truncated {
            expected: need,
            found: pixels.len(),
        });
    }
    Ok((n, rows, cols, pixels))
}

/// Label file: magic, count (big-endian u32), then u8 labels.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<&[u8]> {
    check_magic(bytes, LABEL_MAGIC)?;
    let n = be_u32(bytes, 4)? as usize;
    let labels = &bytes[8..];
    if labels.len() != n {
        return Err(Error::Truncated {
            expected: n,
            found: labels.len(),
        });
    }
    Ok(labels)
}

/// Non-overlapping `k × k` average pooling of a row-major image.
pub fn average_pool(image: &[f64], rows: usize, cols: usize, k: usize) -> Result<Vec<f64>> {
    if k == 0 || !rows.is_multiple_of(k) || !cols.is_multiple_of(k) || image.len() != rows * cols {
        return Err(Error::invalid(format!("cannot pool a {rows}x{cols} image by {k}")));
    }
    let (r2, c2) = (rows / k, cols / k);
    let mut out = vec![0.0; r2 * c2];
    for i in 0..rows {
        for j in 0..cols {
            out[(i / k) * c2 + j / k] += image[i * cols + j];
        }
    }
    let area = (k * k) as f64;
    out.iter_mut().for_each(|v| *v /= area);
    Ok(out)
}

/// Loads every idx image/label pair found in `dir`, scales pixels to
/// `[0, 1]` and keeps the configured digits.
pub fn load_mnist(dir: impl AsRef<Path>, cfg: &MnistConfig) -> Result<LabeledDataset> {
    let dir = dir.as_ref();
    let pairs: Vec<_> = FILE_PAIRS
        .iter()
        .map(|(i, l)| (dir.join(i), dir.join(l)))
        .filter(|(i, l)| i.is_file() && l.is_file())
        .collect();
    if pairs.is_empty() {
        return Err(Error::DataNotFound(format!("no MNIST idx image/label pair under {}", dir.display())));
    }
    let mut rows = Vec::new();
    let mut groups = Vec::new();
    let mut kept = [0usize; 10];
    for (img_path, lbl_path) in pairs {
        let img_bytes = fs::read(&img_path)?;
        let lbl_bytes = fs::read(&lbl_path)?;
        let (n, h, w, pixels) = parse_idx_images(&img_bytes)?;
        let labels = parse_idx_labels(&lbl_bytes)?;
        if labels.len() != n {
            return Err(Error::DataMismatch(format!(
                "{} has {n} images but {} has {} labels",
                img_path.display(),
                lbl_path.display(),
                labels.len()
            )));
        }
        for (i, &digit) in labels.iter().enumerate() {
            let group = if digit == cfg.normal_digit {
                Group::Normal
            } else if let Some(p) = cfg.fault_digits.iter().position(|&d| d == digit) {
                Group::Fault(p + 1)
            } else if cfg.unknown_digits.contains(&digit) {
                Group::Unknown
            } else {
                continue;
            };
            let d = digit as usize % 10;
            if cfg.max_per_digit.is_some_and(|m| kept[d] >= m) {
                continue;
            }
            kept[d] += 1;
            let image: Vec<f64> = pixels[i * h * w..(i + 1) * h * w].iter().map(|&p| p as f64 / 255.0).collect();
            rows.push(if cfg.pool { average_pool(&image, h, w, 2)? } else { image });
            groups.push(group);
        }
    }
    if rows.is_empty() {
        return Err(Error::Empty("no images of the configured digits".into()));
    }
    LabeledDataset::new(DatasetKind::Digits, Matrix::from_rows(&rows)?, groups, 1 + cfg.fault_digits.len())
}

/// Decodes `(1 − t)·enc(a) + t·enc(b)` for each row pair and each `t`,
/// using the deterministic encoder. Row `i` of `x_fault` has fault class
/// `fault_classes[i]`; outputs are tagged incipient with severity `10 t`.
pub fn gen_ambiguous(
    net: &PathwayNetwork,
    x_normal: &Matrix,
    x_fault: &Matrix,
    fault_classes: &[usize],
    t_values: &[f64],
) -> Result<LabeledDataset> {
    if net.decoder().is_none() {
        return Err(Error::MissingPathway("decoding"));
    }
    if x_normal.shape() != x_fault.shape() {
        return Err(Error::shape("gen_ambiguous", format!("{:?}", x_normal.shape()), format!("{:?}", x_fault.shape())));
    }
    if fault_classes.len() != x_fault.rows() {
        return Err(Error::shape("gen_ambiguous classes", x_fault.rows(), fault_classes.len()));
    }
    let mut rng = Rng::seed(0);
    let za = net.encode(x_normal, &mut rng, Sampling::Deterministic)?;
    let zb = net.encode(x_fault, &mut rng, Sampling::Deterministic)?;
    let mut out: Option<Matrix> = None;
    let mut groups = Vec::new();
    for &t in t_values {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::invalid(format!("interpolation weight {t} outside [0, 1]")));
        }
        let mut z = za.clone();
        for (v, &b) in z.as_mut_slice().iter_mut().zip(zb.as_slice()) {
            *v = (1.0 - t) * *v + t * b;
        }
        let decoded = net.decode(&z)?;
        out = Some(match out {
            Some(m) => m.vstack(&decoded)?,
            None => decoded,
        });
        let severity = (t * 10.0).round() as u32;
        groups.extend(fault_classes.iter().map(|&class| Group::Incipient { class, severity }));
    }
    let x = out.ok_or_else(|| Error::Empty("interpolation weights".into()))?;
    LabeledDataset::new(DatasetKind::Digits, x, groups, net.n_classes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx_images(n: u32, h: u32, w: u32, pixels: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        for x in [IMAGE_MAGIC, n, h, w] {
            v.extend_from_slice(&x.to_be_bytes());
        }
        v.extend_from_slice(pixels);
        v
    }

    fn idx_labels(labels: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        v.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
        v.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        v.extend_from_slice(labels);
        v
    }

    #[test]
    fn parses_header() {
        let bytes = idx_images(2, 28, 28, &vec![7; 2 * 784]);
        let (n, h, w, p) = parse_idx_images(&bytes).unwrap();
        assert_eq!((n, h, w, p.len()), (2, 28, 28, 1568));
        let mut bad = bytes.clone();
        bad[3] = 0x04;
        assert!(matches!(parse_idx_images(&bad), Err(Error::BadMagic { .. })));
        assert!(matches!(parse_idx_labels(&bytes), Err(Error::BadMagic { .. })));
        assert!(parse_idx_images(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn pooling_preserves_mean() {
        let mut rng = Rng::seed(4);
        let img: Vec<f64> = (0..784).map(|_| rng.uniform()).collect();
        let pooled = average_pool(&img, 28, 28, 2).unwrap();
        assert_eq!(pooled.len(), 196);
        let m0 = img.iter().sum::<f64>() / 784.0;
        let m1 = pooled.iter().sum::<f64>() / 196.0;
        assert!((m0 - m1).abs() < 1e-12);
        assert_eq!(average_pool(&[1.0, 2.0, 3.0, 4.0], 2, 2, 2).unwrap(), vec![2.5]);
    }

    #[test]
    fn loads_and_filters_digits() {
        let dir = tempfile::tempdir().unwrap();
        let labels = [0u8, 1, 5, 9, 7, 0, 6, 8, 2];
        let pixels: Vec<u8> = labels.iter().flat_map(|&l| vec![l * 20; 784]).collect();
        fs::write(dir.path().join("t10k-images-idx3-ubyte"), idx_images(9, 28, 28, &pixels)).unwrap();
        fs::write(dir.path().join("t10k-labels-idx1-ubyte"), idx_labels(&labels)).unwrap();
        let d = load_mnist(dir.path(), &MnistConfig::default()).unwrap();
        assert_eq!(d.len(), 9);
        assert_eq!(d.dim(), 196);
        assert_eq!(d.n_classes, 5);
        assert_eq!(d.groups[2], Group::Fault(1));
        assert_eq!(d.groups[3], Group::Fault(4));
        assert_eq!(d.groups[1], Group::Unknown);
        assert!((d.x[(3, 0)] - 180.0 / 255.0).abs() < 1e-12);

        let cfg = MnistConfig {
            unknown_digits: vec![],
            ..MnistConfig::default()
        };
        let d = load_mnist(dir.path(), &cfg).unwrap();
        assert_eq!(d.len(), 6);
        assert!(d.groups.iter().all(|g| g.trainable()));
    }

    #[test]
    fn count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("images-idx3-ubyte"), idx_images(2, 28, 28, &[0; 1568])).unwrap();
        fs::write(dir.path().join("labels-idx1-ubyte"), idx_labels(&[0])).unwrap();
        assert!(matches!(load_mnist(dir.path(), &MnistConfig::default()), Err(Error::DataMismatch(_))));
    }

    #[test]
    fn missing_files() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_mnist(dir.path(), &MnistConfig::default()), Err(Error::DataNotFound(_))));
    }
}
