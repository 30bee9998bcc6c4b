//! Datasets: loaders, the chiller surrogate generator, splitting and
//! standardisation.

mod chiller;
mod mnist;
mod thyroid;

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

pub use chiller::{gen_chiller_surrogate, ChillerConfig};
pub use mnist::{average_pool, gen_ambiguous, load_mnist, parse_idx_images, parse_idx_labels, MnistConfig, DEFAULT_T_VALUES};
pub use thyroid::{load_thyroid, parse_thyroid, THYROID_CONTINUOUS_COLUMNS};

use crate::detect::ExampleTag;
use crate::error::{Error, Result};
use crate::nn::{Matrix, Rng};
use crate::uncertainty::EntropyGroup;

/// Role of an example in the experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    Normal,
    /// Known fault class `k ≥ 1` at full severity; trainable.
    Fault(usize),
    /// Low-severity (or ambiguous) version of fault `class`; test only.
    Incipient { class: usize, severity: u32 },
    /// Fault type absent from training; test only.
    Unknown,
}

impl Group {
    /// Training label, if the group has a known class.
    pub fn label(self) -> Option<usize> {
        match self {
            Group::Normal => Some(0),
            Group::Fault(k) | Group::Incipient { class: k, .. } => Some(k),
            Group::Unknown => None,
        }
    }

    pub fn trainable(self) -> bool {
        matches!(self, Group::Normal | Group::Fault(_))
    }

    pub fn entropy_group(self) -> EntropyGroup {
        match self {
            Group::Normal => EntropyGroup::Normal,
            Group::Fault(_) => EntropyGroup::InDistributionFault,
            _ => EntropyGroup::OutOfDistribution,
        }
    }

    fn rank(self) -> (u8, u32, usize) {
        match self {
            Group::Normal => (0, 0, 0),
            Group::Incipient { class, severity } => (1, severity, class),
            Group::Fault(k) => (2, 0, k),
            Group::Unknown => (3, 0, 0),
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::Normal => write!(f, "normal"),
            Group::Fault(k) => write!(f, "fault:{k}"),
            Group::Incipient { class, severity } => write!(f, "incipient:{class}:{severity}"),
            Group::Unknown => write!(f, "unknown"),
        }
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("unknown group {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["normal"] => Ok(Group::Normal),
            ["unknown"] => Ok(Group::Unknown),
            ["fault", k] => Ok(Group::Fault(k.parse().map_err(|_| bad())?)),
            ["incipient", c, sev] => Ok(Group::Incipient {
                class: c.parse().map_err(|_| bad())?,
                severity: sev.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

/// Which experiment a dataset belongs to; fixes the table row names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DatasetKind {
    Thyroid,
    Chiller,
    Digits,
}

impl DatasetKind {
    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Thyroid => "thyroid",
            DatasetKind::Chiller => "chiller",
            DatasetKind::Digits => "mnist",
        }
    }

    /// Row name of `group` in the accuracy table.
    pub fn table_group(self, group: Group) -> String {
        match (self, group) {
            (DatasetKind::Thyroid, Group::Normal) => "normal".into(),
            (DatasetKind::Thyroid, Group::Incipient { .. }) => "subnormal".into(),
            (DatasetKind::Thyroid, Group::Fault(_)) => "diseased".into(),
            (DatasetKind::Chiller, Group::Normal) => "normal".into(),
            (DatasetKind::Chiller, Group::Incipient { severity, .. }) => format!("SL{severity}"),
            (DatasetKind::Chiller, Group::Fault(_)) => "SL4".into(),
            (DatasetKind::Digits, Group::Normal) => "zero".into(),
            (DatasetKind::Digits, Group::Fault(_)) => "non-zero".into(),
            (DatasetKind::Digits, Group::Incipient { .. }) => "ambiguous".into(),
            (DatasetKind::Digits, Group::Unknown) => "out-of-domain".into(),
            (_, Group::Unknown) => "unknown".into(),
        }
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thyroid" => Ok(DatasetKind::Thyroid),
            "chiller" | "chiller-surrogate" => Ok(DatasetKind::Chiller),
            "mnist" | "digits" => Ok(DatasetKind::Digits),
            _ => Err(Error::Config(format!("unknown dataset {s:?}"))),
        }
    }
}

/// Per-feature standardisation statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureStats {
    /// Population mean and standard deviation per column. Constant columns
    /// get a unit scale so they map to zero.
    pub fn fit(x: &Matrix) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::Empty("standardisation data".into()));
        }
        let mean = x.column_means();
        let n = x.rows() as f64;
        let std = (0..x.cols())
            .map(|j| {
                let var = x.iter_rows().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        Ok(out)
    }

    pub fn invert(&self, z: &Matrix) -> Result<Matrix> {
        self.check(z)?;
        let mut out = z.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = *v * self.std[j] + self.mean[j];
            }
        }
        Ok(out)
    }

    fn check(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.mean.len() {
            return Err(Error::shape("standardise", self.mean.len(), x.cols()));
        }
        Ok(())
    }

    /// `feature,mean,std` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("feature,mean,std\n");
        for (j, (m, d)) in self.mean.iter().zip(&self.std).enumerate() {
            let _ = writeln!(s, "{j},{m:.17e},{d:.17e}");
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut mean = Vec::new();
        let mut std = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1).filter(|(_, l)| !l.trim().is_empty()) {
            let parts: Vec<&str> = line.split(',').collect();
            let parse = |s: &str| -> Result<f64> {
                s.trim().parse().map_err(|_| Error::Parse {
                    path: "stats.csv".into(),
                    line: i + 1,
                    msg: format!("bad number {s:?}"),
                })
            };
            if parts.len() != 3 {
                return Err(Error::Parse {
                    path: "stats.csv".into(),
                    line: i + 1,
                    msg: "expected feature,mean,std".into(),
                });
            }
            mean.push(parse(parts[1])?);
            std.push(parse(parts[2])?);
        }
        if mean.is_empty() {
            return Err(Error::Empty("feature statistics".into()));
        }
        Ok(Self { mean, std })
    }
}

/// Feature matrix with a group tag per row.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub kind: DatasetKind,
    pub x: Matrix,
    pub groups: Vec<Group>,
    /// Normal class plus the known fault classes.
    pub n_classes: usize,
    /// Set once the features have been standardised.
    pub feature_stats: Option<FeatureStats>,
}

impl LabeledDataset {
    pub fn new(kind: DatasetKind, x: Matrix, groups: Vec<Group>, n_classes: usize) -> Result<Self> {
        if x.rows() != groups.len() {
            return Err(Error::shape("dataset groups", x.rows(), groups.len()));
        }
        if let Some(l) = groups.iter().filter_map(|g| g.label()).find(|&l| l >= n_classes) {
            return Err(Error::LabelOutOfRange {
                label: l,
                classes: n_classes,
            });
        }
        x.ensure_finite("dataset features")?;
        Ok(Self {
            kind,
            x,
            groups,
            n_classes,
            feature_stats: None,
        })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    /// Training labels; fails if any example lacks a known class.
    pub fn labels(&self) -> Result<Vec<usize>> {
        self.groups
            .iter()
            .map(|g| g.label().ok_or_else(|| Error::invalid("unknown-fault examples have no training label")))
            .collect()
    }

    pub fn indices_where(&self, pred: impl Fn(Group) -> bool) -> Vec<usize> {
        (0..self.len()).filter(|&i| pred(self.groups[i])).collect()
    }

    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            kind: self.kind,
            x: self.x.select_rows(rows),
            groups: rows.iter().map(|&i| self.groups[i]).collect(),
            n_classes: self.n_classes,
            feature_stats: self.feature_stats.clone(),
        }
    }

    pub fn normals(&self) -> Matrix {
        self.x.select_rows(&self.indices_where(|g| g == Group::Normal))
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.kind != other.kind || self.n_classes != other.n_classes {
            return Err(Error::invalid("cannot concatenate datasets of different experiments"));
        }
        let mut groups = self.groups.clone();
        groups.extend_from_slice(&other.groups);
        Ok(Self {
            kind: self.kind,
            x: self.x.vstack(&other.x)?,
            groups,
            n_classes: self.n_classes,
            feature_stats: self.feature_stats.clone(),
        })
    }

    pub fn standardize_with(&self, stats: &FeatureStats) -> Result<Self> {
        Ok(Self {
            x: stats.apply(&self.x)?,
            feature_stats: Some(stats.clone()),
            ..self.clone()
        })
    }

    pub fn tags(&self) -> Vec<ExampleTag> {
        self.groups
            .iter()
            .map(|&g| ExampleTag {
                group: self.kind.table_group(g),
                normal: g == Group::Normal,
                class: g.label().filter(|&c| c > 0),
            })
            .collect()
    }

    pub fn entropy_groups(&self) -> Vec<Option<EntropyGroup>> {
        self.groups.iter().map(|g| Some(g.entropy_group())).collect()
    }

    /// Features, then `label` (empty for unknown faults) and `group`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for j in 0..self.dim() {
            let _ = write!(s, "x{j},");
        }
        s.push_str("label,group\n");
        for (row, g) in self.x.iter_rows().zip(&self.groups) {
            for v in row {
                let _ = write!(s, "{v:.6},");
            }
            let label = g.label().map(|l| l.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{label},{g}");
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Reorders rows by group (normal, incipient by severity, faults,
    /// unknown), keeping the original order within a group.
    pub fn sorted_by_group(&self) -> Self {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by_key(|&i| self.groups[i].rank());
        self.subset(&idx)
    }
}

/// Seeded split stratified by group. Normal and fault groups are divided by
/// `train_fraction`; incipient and unknown examples all go to the test set.
pub fn split(dataset: &LabeledDataset, train_fraction: f64, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!("train fraction must lie in (0, 1), got {train_fraction}")));
    }
    let mut keys: Vec<Group> = dataset.groups.iter().copied().filter(|g| g.trainable()).collect();
    keys.sort();
    keys.dedup();
    let mut rng = Rng::seed(seed);
    let mut train = Vec::new();
    let mut test: Vec<usize> = dataset.indices_where(|g| !g.trainable());
    for key in keys {
        let mut idx = dataset.indices_where(|g| g == key);
        if idx.len() < 2 {
            return Err(Error::invalid(format!(
                "group {key} has {} example(s); at least 2 are needed to stratify",
                idx.len()
            )));
        }
        rng.shuffle(&mut idx);
        let n_train = ((idx.len() as f64 * train_fraction).round() as usize).clamp(1, idx.len() - 1);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((dataset.subset(&train), dataset.subset(&test).sorted_by_group()))
}

/// Fits statistics on the training normals and applies them to both splits.
pub fn standardize_split(train: &LabeledDataset, test: &LabeledDataset) -> Result<(LabeledDataset, LabeledDataset)> {
    let stats = FeatureStats::fit(&train.normals())?;
    Ok((train.standardize_with(&stats)?, test.standardize_with(&stats)?))
}
