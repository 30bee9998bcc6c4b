//! UCI "ann-thyroid" loader.
//!
//! Each row holds 21 features followed by a class code: 3 = normal,
//! 2 = subnormal, 1 = diseased. Only the continuous features are kept.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::nn::Matrix;

use super::{DatasetKind, Group, LabeledDataset};

/// Zero-based columns of age, TSH, T3, TT4, T4U and FTI.
pub const THYROID_CONTINUOUS_COLUMNS: [usize; 6] = [0, 16, 17, 18, 19, 20];

const FEATURES: usize = 21;
const FILES: [&str; 2] = ["ann-train.data", "ann-test.data"];

const NORMAL_SHARE: (f64, f64) = (0.89, 0.95);
const SUBNORMAL_SHARE: (f64, f64) = (0.62, 0.72);

/// Parses one ann-thyroid text file into continuous features and groups.
pub fn parse_thyroid(text: &str, path: &Path) -> Result<(Vec<Vec<f64>>, Vec<Group>)> {
    let mut rows = Vec::new();
    let mut groups = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        if tokens.len() != FEATURES + 1 {
            return Err(err(format!("expected {} columns, found {}", FEATURES + 1, tokens.len())));
        }
        let values: Vec<f64> = tokens[..FEATURES]
            .iter()
            .map(|t| t.parse::<f64>().map_err(|_| err(format!("bad number {t:?}"))))
            .collect::<Result<_>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(err("non-finite feature".into()));
        }
        let group = match tokens[FEATURES] {
            "3" => Group::Normal,
            "2" => Group::Incipient { class: 1, severity: 1 },
            "1" => Group::Fault(1),
            other => return Err(err(format!("unknown class code {other:?}"))),
        };
        rows.push(THYROID_CONTINUOUS_COLUMNS.iter().map(|&c| values[c]).collect());
        groups.push(group);
    }
    Ok((rows, groups))
}

fn files_at(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let found: Vec<PathBuf> = FILES.iter().map(|f| path.join(f)).filter(|p| p.is_file()).collect();
    if found.is_empty() {
        return Err(Error::DataNotFound(format!(
            "no ann-thyroid files ({}) under {}",
            FILES.join(", "),
            path.display()
        )));
    }
    Ok(found)
}

/// Loads ann-thyroid from a file or a directory holding `ann-train.data`
/// and/or `ann-test.data` (rows of both are pooled).
///
/// The class shares are checked against the documented layout (about 92%
/// normal, about two thirds of the rest subnormal); a mismatch usually
/// means a different file or class coding and is reported as an error.
pub fn load_thyroid(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let mut rows = Vec::new();
    let mut groups = Vec::new();
    for file in files_at(path.as_ref())? {
        let text = fs::read_to_string(&file)?;
        let (r, g) = parse_thyroid(&text, &file)?;
        rows.extend(r);
        groups.extend(g);
    }
    if rows.is_empty() {
        return Err(Error::Empty("thyroid data".into()));
    }
    check_shares(&groups)?;
    LabeledDataset::new(DatasetKind::Thyroid, Matrix::from_rows(&rows)?, groups, 2)
}

fn check_shares(groups: &[Group]) -> Result<()> {
    let n = groups.len() as f64;
    let normal = groups.iter().filter(|&&g| g == Group::Normal).count() as f64;
    let subnormal = groups.iter().filter(|g| matches!(g, Group::Incipient { .. })).count() as f64;
    let normal_share = normal / n;
    let subnormal_share = if n > normal { subnormal / (n - normal) } else { 0.0 };
    let inside = |v: f64, (lo, hi): (f64, f64)| (lo..=hi).contains(&v);
    if !inside(normal_share, NORMAL_SHARE) || !inside(subnormal_share, SUBNORMAL_SHARE) {
        return Err(Error::DataMismatch(format!(
            "thyroid class shares {:.3} normal / {:.3} subnormal among the rest are outside {:?} / {:?}",
            normal_share, subnormal_share, NORMAL_SHARE, SUBNORMAL_SHARE
        )));
    }
    Ok(())
}
