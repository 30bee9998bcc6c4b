//! Anomaly scores, threshold calibration, multilabel prediction and the
//! evaluation metrics built on them.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::ModelKind;
use crate::nn::Matrix;
use crate::uncertainty::{McBatch, McPrediction};

/// Fewest normal training examples accepted for threshold calibration.
pub const MIN_CALIBRATION: usize = 50;

/// `s_j = μ_j + σ_j` for faults, `s_0 = 1 − μ_0 + σ_0` for the normal class.
pub fn clf_anomaly_scores(mean: &[f64], variance: &[f64]) -> Vec<f64> {
    mean.iter()
        .zip(variance)
        .enumerate()
        .map(|(j, (&m, &v))| if j == 0 { 1.0 - m + v } else { m + v })
        .collect()
}

pub fn clf_scores_of(pred: &McPrediction) -> Vec<f64> {
    clf_anomaly_scores(&pred.mean, &pred.variance)
}

/// Mean squared error between the reconstruction predictive mean and `x`.
pub fn rec_anomaly_score(mu_rec: &[f64], x: &[f64]) -> Result<f64> {
    if mu_rec.len() != x.len() {
        return Err(Error::shape("rec_anomaly_score", x.len(), mu_rec.len()));
    }
    if x.is_empty() {
        return Err(Error::Empty("reconstruction vector".into()));
    }
    Ok(mu_rec.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64)
}

/// Scores of a batch: `clf` is `N × C`, `rec` has one entry per row.
#[derive(Clone, Debug, PartialEq)]
pub struct AnomalyScores {
    pub clf: Option<Matrix>,
    pub rec: Option<Vec<f64>>,
}

impl AnomalyScores {
    pub fn from_batch(mc: &McBatch, x: &Matrix) -> Result<Self> {
        let clf = match (&mc.class_mean, &mc.class_variance) {
            (Some(m), Some(v)) => {
                let mut s = Matrix::zeros(m.rows(), m.cols());
                for i in 0..m.rows() {
                    s.row_mut(i).copy_from_slice(&clf_anomaly_scores(m.row(i), v.row(i)));
                }
                Some(s)
            }
            _ => None,
        };
        let rec = match &mc.reconstruction_mean {
            Some(mu) => {
                if mu.shape() != x.shape() {
                    return Err(Error::shape("reconstruction scores", format!("{:?}", x.shape()), format!("{:?}", mu.shape())));
                }
                Some((0..x.rows()).map(|i| rec_anomaly_score(mu.row(i), x.row(i))).collect::<Result<_>>()?)
            }
            None => None,
        };
        Ok(Self { clf, rec })
    }

    pub fn len(&self) -> usize {
        self.clf
            .as_ref()
            .map(Matrix::rows)
            .or(self.rec.as_ref().map(Vec::len))
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            clf: self.clf.as_ref().map(|m| m.select_rows(rows)),
            rec: self.rec.as_ref().map(|r| rows.iter().map(|&i| r[i]).collect()),
        }
    }
}

/// Empirical quantile with linear interpolation between order statistics
/// at position `(n − 1) p`.
pub fn quantile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("quantile input".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("quantile level {p} outside [0, 1]")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("quantile input"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    Ok(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdSet {
    pub clf: Option<Vec<f64>>,
    pub rec: Option<f64>,
    pub alpha: f64,
}

impl ThresholdSet {
    /// Mean of the per-output classifier thresholds.
    pub fn clf_average(&self) -> Option<f64> {
        self.clf.as_ref().map(|t| t.iter().sum::<f64>() / t.len() as f64)
    }
}

/// Thresholds at the `(1 − α)` quantile of each score channel on normal
/// training data, so roughly a fraction `α` of those normals is flagged.
pub fn calibrate_thresholds(normal: &AnomalyScores, alpha: f64) -> Result<ThresholdSet> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let n = normal.len();
    if n < MIN_CALIBRATION {
        return Err(Error::invalid(format!(
            "threshold calibration needs at least {MIN_CALIBRATION} normal examples, got {n}"
        )));
    }
    let p = 1.0 - alpha;
    let clf = match &normal.clf {
        Some(s) => Some((0..s.cols()).map(|j| quantile(&s.column(j), p)).collect::<Result<_>>()?),
        None => None,
    };
    let rec = normal.rec.as_ref().map(|r| quantile(r, p)).transpose()?;
    Ok(ThresholdSet { clf, rec, alpha })
}

/// Per-output flags `b_j`, the label set `Y` and the overall flag `z`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictionSet {
    pub b: Vec<bool>,
    pub labels: BTreeSet<usize>,
    pub z: bool,
}

/// `b_j = s_j > s̃_j` (strict), `Y = {j : b_j}`, `z = ⋁ b_j`.
pub fn predict_labels(scores: &[f64], thresholds: &[f64]) -> Result<PredictionSet> {
    if scores.len() != thresholds.len() {
        return Err(Error::shape("predict_labels", thresholds.len(), scores.len()));
    }
    let b: Vec<bool> = scores.iter().zip(thresholds).map(|(s, t)| s > t).collect();
    let labels = b.iter().enumerate().filter(|(_, &f)| f).map(|(j, _)| j).collect();
    let z = b.iter().any(|&f| f);
    Ok(PredictionSet { b, labels, z })
}

/// `δ = 1{y ∈ Y} / |Y ∩ {1..n}|`, and 0 whenever `y ∉ Y`.
pub fn diagnostic_accuracy(labels: &BTreeSet<usize>, y: usize) -> Result<f64> {
    if y == 0 {
        return Err(Error::invalid("diagnostic accuracy is undefined for the normal class"));
    }
    if !labels.contains(&y) {
        return Ok(0.0);
    }
    let faults = labels.iter().filter(|&&j| j != 0).count();
    Ok(1.0 / faults as f64)
}

/// Fraction of correct detections: unflagged for the normal group,
/// flagged for any fault group.
pub fn binary_accuracy(flags: &[bool], normal_group: bool) -> Result<f64> {
    if flags.is_empty() {
        return Err(Error::Empty("group for binary accuracy".into()));
    }
    let correct = flags.iter().filter(|&&f| f != normal_group).count();
    Ok(correct as f64 / flags.len() as f64)
}

/// Largest margin `s_j − s̃_j`. Positive exactly when `z = 1`, which makes
/// it the scalar detection score of a multi-output classifier.
pub fn detection_margin(scores: &[f64], thresholds: &[f64]) -> f64 {
    scores
        .iter()
        .zip(thresholds)
        .map(|(s, t)| s - t)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `(precision, recall)` with flags `score > threshold`. Precision is 1 by
/// convention when nothing is flagged.
pub fn precision_recall_at(scores: &[f64], is_fault: &[bool], threshold: f64) -> Result<(f64, f64)> {
    if scores.len() != is_fault.len() {
        return Err(Error::shape("precision_recall", scores.len(), is_fault.len()));
    }
    let faults = is_fault.iter().filter(|&&f| f).count();
    if faults == 0 || faults == is_fault.len() {
        return Err(Error::Degenerate("precision/recall needs both fault and normal examples".into()));
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    for (&s, &f) in scores.iter().zip(is_fault) {
        if s > threshold {
            if f {
                tp += 1;
            } else {
                fp += 1;
            }
        }
    }
    let precision = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
    Ok((precision, tp as f64 / faults as f64))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrCurve {
    pub thresholds: Vec<f64>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
}

impl PrCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("threshold,precision,recall\n");
        for k in 0..self.thresholds.len() {
            let _ = writeln!(s, "{:.6},{:.6},{:.6}", self.thresholds[k], self.precision[k], self.recall[k]);
        }
        s
    }
}

/// Precision and recall at `k` evenly spaced thresholds from the smallest
/// to the largest observed score.
pub fn precision_recall_sweep(scores: &[f64], is_fault: &[bool], k: usize) -> Result<PrCurve> {
    if k < 2 {
        return Err(Error::invalid("sweep needs at least 2 thresholds"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("precision/recall scores"));
    }
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut curve = PrCurve {
        thresholds: Vec::with_capacity(k),
        precision: Vec::with_capacity(k),
        recall: Vec::with_capacity(k),
    };
    for i in 0..k {
        let t = lo + (hi - lo) * i as f64 / (k - 1) as f64;
        let (p, r) = precision_recall_at(scores, is_fault, t)?;
        curve.thresholds.push(t);
        curve.precision.push(p);
        curve.recall.push(r);
    }
    Ok(curve)
}

/// Evaluation tag of one test example.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExampleTag {
    /// Table row the example is reported under, e.g. `"SL2"`.
    pub group: String,
    pub normal: bool,
    /// Fault class for diagnostic accuracy, if the example has a known one.
    pub class: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScorePath {
    Classifying,
    Decoding,
}

impl ScorePath {
    pub fn name(self) -> &'static str {
        match self {
            ScorePath::Classifying => "classifying",
            ScorePath::Decoding => "decoding",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupMetrics {
    pub group: String,
    pub count: usize,
    pub binary_accuracy: f64,
    /// Mean diagnostic accuracy over the group's examples with a known class.
    pub diagnostic_accuracy: Option<f64>,
}

/// Metrics of one output pathway of one trained model.
#[derive(Clone, Debug, PartialEq)]
pub struct PathReport {
    pub model: ModelKind,
    pub path: ScorePath,
    /// Per-output thresholds (a single entry for the decoding path).
    pub thresholds: Vec<f64>,
    pub groups: Vec<GroupMetrics>,
    pub pr_curve: Option<PrCurve>,
}

impl PathReport {
    pub fn average_threshold(&self) -> f64 {
        self.thresholds.iter().sum::<f64>() / self.thresholds.len() as f64
    }

    pub fn group(&self, name: &str) -> Option<&GroupMetrics> {
        self.groups.iter().find(|g| g.group == name)
    }
}

fn group_order(tags: &[ExampleTag]) -> Vec<String> {
    let mut order: Vec<String> = Vec::new();
    for t in tags {
        if !order.contains(&t.group) {
            order.push(t.group.clone());
        }
    }
    order
}

/// Evaluates one pathway on a tagged test set. Diagnostic accuracy is
/// reported only when `diagnose` is set (multiclass classifying paths).
pub fn evaluate_path(
    model: ModelKind,
    path: ScorePath,
    scores: &AnomalyScores,
    thresholds: &ThresholdSet,
    tags: &[ExampleTag],
    diagnose: bool,
    sweep: usize,
) -> Result<PathReport> {
    if scores.len() != tags.len() {
        return Err(Error::shape("evaluate_path tags", scores.len(), tags.len()));
    }
    let (flags, margins, label_sets, thr): (Vec<bool>, Vec<f64>, Option<Vec<BTreeSet<usize>>>, Vec<f64>) = match path {
        ScorePath::Classifying => {
            let s = scores.clf.as_ref().ok_or(Error::MissingPathway("classifying"))?;
            let t = thresholds.clf.as_ref().ok_or(Error::MissingPathway("classifying"))?;
            let mut flags = Vec::with_capacity(s.rows());
            let mut margins = Vec::with_capacity(s.rows());
            let mut sets = Vec::with_capacity(s.rows());
            for i in 0..s.rows() {
                let p = predict_labels(s.row(i), t)?;
                flags.push(p.z);
                margins.push(detection_margin(s.row(i), t));
                sets.push(p.labels);
            }
            (flags, margins, Some(sets), t.clone())
        }
        ScorePath::Decoding => {
            let r = scores.rec.as_ref().ok_or(Error::MissingPathway("decoding"))?;
            let t = thresholds.rec.ok_or(Error::MissingPathway("decoding"))?;
            (r.iter().map(|&s| s > t).collect(), r.iter().map(|&s| s - t).collect(), None, vec![t])
        }
    };

    let mut groups = Vec::new();
    for name in group_order(tags) {
        let idx: Vec<usize> = (0..tags.len()).filter(|&i| tags[i].group == name).collect();
        let normal = tags[idx[0]].normal;
        let f: Vec<bool> = idx.iter().map(|&i| flags[i]).collect();
        let diagnostic_accuracy = match (&label_sets, diagnose) {
            (Some(sets), true) => {
                let known: Vec<(usize, usize)> =
                    idx.iter().filter_map(|&i| tags[i].class.filter(|&c| c > 0).map(|c| (i, c))).collect();
                if known.is_empty() {
                    None
                } else {
                    let sum: f64 = known
                        .iter()
                        .map(|&(i, c)| diagnostic_accuracy(&sets[i], c))
                        .sum::<Result<f64>>()?;
                    Some(sum / known.len() as f64)
                }
            }
            _ => None,
        };
        groups.push(GroupMetrics {
            group: name,
            count: idx.len(),
            binary_accuracy: binary_accuracy(&f, normal)?,
            diagnostic_accuracy,
        });
    }

    let is_fault: Vec<bool> = tags.iter().map(|t| !t.normal).collect();
    let pr_curve = if is_fault.iter().any(|&f| f) && is_fault.iter().any(|&f| !f) {
        Some(precision_recall_sweep(&margins, &is_fault, sweep)?)
    } else {
        None
    };
    Ok(PathReport {
        model,
        path,
        thresholds: thr,
        groups,
        pr_curve,
    })
}

/// All pathway reports of one dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub dataset: String,
    pub alpha: f64,
    pub paths: Vec<PathReport>,
}

impl MetricsReport {
    pub fn path(&self, model: ModelKind, path: ScorePath) -> Option<&PathReport> {
        self.paths.iter().find(|p| p.model == model && p.path == path)
    }
}

const TABLE_COLUMNS: [(ModelKind, ScorePath); 4] = [
    (ModelKind::Augmented, ScorePath::Decoding),
    (ModelKind::AutoencoderOnly, ScorePath::Decoding),
    (ModelKind::Augmented, ScorePath::Classifying),
    (ModelKind::ClassifierOnly, ScorePath::Classifying),
];

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into())
}

/// Binary classification accuracy and diagnostic accuracy per group, one
/// row per dataset and group.
pub fn table1_csv(reports: &[MetricsReport]) -> String {
    let mut s = String::from(
        "dataset,group,augmented_decoding,autoencoder,augmented_classifying,classifier,augmented_diagnostic,classifier_diagnostic\n",
    );
    for r in reports {
        let mut names: Vec<String> = Vec::new();
        for p in &r.paths {
            for g in &p.groups {
                if !names.contains(&g.group) {
                    names.push(g.group.clone());
                }
            }
        }
        for name in names {
            let acc = |m, p| r.path(m, p).and_then(|p| p.group(&name)).map(|g| g.binary_accuracy);
            let diag =
                |m| r.path(m, ScorePath::Classifying).and_then(|p| p.group(&name)).and_then(|g| g.diagnostic_accuracy);
            let mut row = vec![r.dataset.clone(), name.clone()];
            row.extend(TABLE_COLUMNS.iter().map(|&(m, p)| cell(acc(m, p))));
            row.push(cell(diag(ModelKind::Augmented)));
            row.push(cell(diag(ModelKind::ClassifierOnly)));
            let _ = writeln!(s, "{}", row.join(","));
        }
    }
    s
}

/// Average detection threshold per pathway (rows) and dataset (columns).
pub fn table2_csv(reports: &[MetricsReport]) -> String {
    let mut s = String::from("pathway");
    for r in reports {
        let _ = write!(s, ",{}", r.dataset);
    }
    s.push('\n');
    for &(m, p) in &TABLE_COLUMNS {
        let _ = write!(s, "{}_{}", m.name(), p.name());
        for r in reports {
            let _ = write!(s, ",{}", cell(r.path(m, p).map(PathReport::average_threshold)));
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn clf_score_examples() {
        assert_eq!(clf_anomaly_scores(&[1.0, 0.0], &[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(clf_anomaly_scores(&[0.0, 1.0], &[0.0, 0.0]), vec![1.0, 1.0]);
        let s = clf_anomaly_scores(&[0.6, 0.4], &[0.04, 0.04]);
        assert!((s[0] - 0.44).abs() < 1e-12 && (s[1] - 0.44).abs() < 1e-12);
    }

    #[test]
    fn rec_score_examples() {
        assert_eq!(rec_anomaly_score(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(rec_anomaly_score(&[1.0, 1.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert!(rec_anomaly_score(&[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn quantile_of_one_to_hundred() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert!((quantile(&v, 0.95).unwrap() - 95.05).abs() < 1e-9);
        assert_eq!(quantile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&v, 1.0).unwrap(), 100.0);
    }

    #[test]
    fn calibration_examples() {
        let rec: Vec<f64> = (1..=100).map(f64::from).collect();
        let t = calibrate_thresholds(&AnomalyScores { clf: None, rec: Some(rec) }, 0.05).unwrap();
        assert!((t.rec.unwrap() - 95.05).abs() < 1e-9);

        let same = AnomalyScores { clf: None, rec: Some(vec![0.3; 60]) };
        let t = calibrate_thresholds(&same, 0.1).unwrap();
        assert_eq!(t.rec, Some(0.3));
        assert!(same.rec.unwrap().iter().all(|&s| s <= t.rec.unwrap()));

        let few = AnomalyScores { clf: None, rec: Some(vec![0.0; 49]) };
        assert!(calibrate_thresholds(&few, 0.1).is_err());
    }

    #[test]
    fn prediction_examples() {
        let p = predict_labels(&[0.1, 0.1], &[0.2, 0.2]).unwrap();
        assert!(p.labels.is_empty() && !p.z);
        let p = predict_labels(&[0.5, 0.9, 0.1], &[0.2, 0.2, 0.2]).unwrap();
        assert_eq!(p.labels, set(&[0, 1]));
        assert!(p.z);
        let p = predict_labels(&[0.2], &[0.2]).unwrap();
        assert!(!p.z);
    }

    #[test]
    fn diagnostic_examples() {
        assert_eq!(diagnostic_accuracy(&set(&[1]), 1).unwrap(), 1.0);
        assert_eq!(diagnostic_accuracy(&set(&[0, 1]), 1).unwrap(), 1.0);
        assert_eq!(diagnostic_accuracy(&set(&[1, 2]), 1).unwrap(), 0.5);
        assert_eq!(diagnostic_accuracy(&set(&[2]), 1).unwrap(), 0.0);
        assert_eq!(diagnostic_accuracy(&set(&[0]), 1).unwrap(), 0.0);
        assert!(diagnostic_accuracy(&set(&[0]), 0).is_err());
    }

    #[test]
    fn binary_accuracy_examples() {
        assert_eq!(binary_accuracy(&[false; 5], true).unwrap(), 1.0);
        assert_eq!(binary_accuracy(&[true, false, true, true], false).unwrap(), 0.75);
        assert!(binary_accuracy(&[], true).is_err());
    }

    #[test]
    fn precision_recall_examples() {
        let scores = [0.1, 0.2, 0.8, 0.9];
        let fault = [false, false, true, true];
        assert_eq!(precision_recall_at(&scores, &fault, 0.5).unwrap(), (1.0, 1.0));
        assert_eq!(precision_recall_at(&scores, &fault, 0.0).unwrap(), (0.5, 1.0));
        assert!(precision_recall_at(&scores, &[true; 4], 0.0).is_err());
        let c = precision_recall_sweep(&scores, &fault, 5).unwrap();
        assert_eq!(c.thresholds.len(), 5);
        assert_eq!(c.thresholds[0], 0.1);
        assert_eq!(c.thresholds[4], 0.9);
    }

    #[test]
    fn margin_matches_disjunction() {
        let t = [0.2, 0.3, 0.4];
        for s in [[0.1, 0.1, 0.1], [0.3, 0.1, 0.1], [0.1, 0.1, 0.5], [0.2, 0.3, 0.4]] {
            assert_eq!(detection_margin(&s, &t) > 0.0, predict_labels(&s, &t).unwrap().z);
        }
    }

    #[test]
    fn evaluate_and_tables() {
        let tags: Vec<ExampleTag> = [("normal", true, None), ("normal", true, None), ("SL4", false, Some(1)), ("SL4", false, Some(2))]
            .iter()
            .map(|&(g, n, c)| ExampleTag { group: g.into(), normal: n, class: c })
            .collect();
        let clf = Matrix::from_rows(&[[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.9, 0.9, 0.0], [0.0, 0.9, 0.9]]).unwrap();
        let scores = AnomalyScores { clf: Some(clf), rec: Some(vec![0.0, 0.0, 1.0, 0.0]) };
        let th = ThresholdSet { clf: Some(vec![0.2, 0.2, 0.2]), rec: Some(0.5), alpha: 0.1 };
        let c = evaluate_path(ModelKind::Augmented, ScorePath::Classifying, &scores, &th, &tags, true, 5).unwrap();
        assert_eq!(c.groups[0].binary_accuracy, 0.5);
        assert_eq!(c.groups[1].binary_accuracy, 1.0);
        // {0,1} with y=1 → 1; {1,2} with y=2 → 0.5
        assert_eq!(c.groups[1].diagnostic_accuracy, Some(0.75));
        let d = evaluate_path(ModelKind::Augmented, ScorePath::Decoding, &scores, &th, &tags, true, 5).unwrap();
        assert_eq!(d.groups[0].binary_accuracy, 1.0);
        assert_eq!(d.groups[1].binary_accuracy, 0.5);
        assert_eq!(d.groups[1].diagnostic_accuracy, None);

        let report = MetricsReport { dataset: "chiller".into(), alpha: 0.1, paths: vec![d, c] };
        let t1 = table1_csv(std::slice::from_ref(&report));
        let lines: Vec<_> = t1.lines().collect();
        assert_eq!(lines[1], "chiller,normal,1.000000,-,0.500000,-,-,-");
        assert_eq!(lines[2], "chiller,SL4,0.500000,-,1.000000,-,0.750000,-");
        let t2 = table2_csv(&[report]);
        assert!(t2.starts_with("pathway,chiller\naugmented_decoding,0.500000\n"));
        assert!(t2.contains("augmented_classifying,0.200000"));
    }
}
