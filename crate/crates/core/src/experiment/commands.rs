//! The five command-line operations. Each writes its artifacts under the
//! configured output directory and records them in the manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{
    assess_with, calibrate, check_compatible, compare, group_names, latent_lda, mc_scores, prepare, read_thresholds,
    thresholds_csv, train_model, with_ambiguous, ArtifactWriter, Comparison, ExperimentConfig, ModelRun,
    EVALUATION_STREAM,
};
use crate::data::FeatureStats;
use crate::detect::{predict_labels, table1_csv, table2_csv, MetricsReport, ThresholdSet};
use crate::error::{Error, Result};
use crate::model::{load as load_archive, write_archive, PathwayNetwork};
use crate::nn::{Matrix, Rng};
use crate::report::{emit_scatter_svg, jitter_for_display, matrix_csv, score_matrix};
use crate::train::TrainLog;

const HISTOGRAM_BINS: usize = 20;
const DISPLAY_STREAM: u64 = 500;

/// Path of a sidecar next to `weights`: `<stem>.<suffix>`.
pub fn sidecar(weights: &Path, suffix: &str) -> PathBuf {
    let stem = weights.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    weights.with_file_name(format!("{stem}.{suffix}"))
}

fn read_sidecar(weights: &Path, suffix: &str) -> Result<Option<String>> {
    let path = sidecar(weights, suffix);
    if path.is_file() {
        Ok(Some(fs::read_to_string(path)?))
    } else {
        Ok(None)
    }
}

fn load_weights(weights: &Path) -> Result<PathwayNetwork> {
    if !weights.is_file() {
        return Err(Error::DataNotFound(format!("weights file {}", weights.display())));
    }
    load_archive(weights)
}

fn write_model(w: &mut ArtifactWriter, cfg: &ExperimentConfig, run: &ModelRun, stats: Option<&FeatureStats>) -> Result<()> {
    let stem = run.kind.name();
    w.write(&format!("{stem}.ofdd"), &write_archive(&run.net))?;
    w.write_text(&format!("{stem}.thresholds.csv"), &thresholds_csv(&run.thresholds))?;
    w.write_text(&format!("{stem}.config.txt"), &cfg.to_kv().replace(
        &format!("model = {}", cfg.model.name()),
        &format!("model = {stem}"),
    ))?;
    if let Some(s) = stats {
        w.write_text(&format!("{stem}.stats.csv"), &s.to_csv())?;
    }
    if !run.log.records.is_empty() {
        w.write_text(&format!("{stem}.train_log.csv"), &run.log.to_csv())?;
    }
    Ok(())
}

fn write_paths(w: &mut ArtifactWriter, run: &ModelRun) -> Result<()> {
    for p in &run.paths {
        if let Some(c) = &p.pr_curve {
            w.write_text(&format!("pr_{}_{}.csv", run.kind.name(), p.path.name()), &c.to_csv())?;
        }
    }
    Ok(())
}

/// Trains `cfg.model` and writes `<model>.ofdd` with its thresholds,
/// standardisation statistics, config and training log.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let prepared = prepare(cfg)?;
    let (net, log) = train_model(cfg, cfg.model, &prepared.train)?;
    let thresholds = calibrate(cfg, &net, &prepared.train)?;
    let run = ModelRun {
        kind: net.kind(),
        net,
        log,
        thresholds,
        paths: Vec::new(),
        entropy: None,
        ood_mean_entropy: None,
        separation: None,
    };
    let mut w = ArtifactWriter::new(&cfg.output_dir)?;
    write_model(&mut w, cfg, &run, prepared.stats.as_ref())?;
    let path = w.dir().join(format!("{}.ofdd", run.kind.name()));
    w.finish()?;
    Ok(path)
}

fn thresholds_for(
    cfg: &ExperimentConfig,
    weights: &Path,
    net: &PathwayNetwork,
    train: &crate::data::LabeledDataset,
) -> Result<ThresholdSet> {
    match read_sidecar(weights, "thresholds.csv")? {
        Some(t) => read_thresholds(&t),
        None => calibrate(cfg, net, train),
    }
}

/// Evaluates a trained model on the configured test split and writes its
/// accuracy table, threshold table and precision/recall curves.
pub fn cmd_evaluate(cfg: &ExperimentConfig, weights: &Path) -> Result<Vec<PathBuf>> {
    let net = load_weights(weights)?;
    let prepared = prepare(cfg)?;
    check_compatible(&net, &prepared.train)?;
    let thresholds = thresholds_for(cfg, weights, &net, &prepared.train)?;
    let test = with_ambiguous(cfg, &net, &prepared.test)?;
    let run = assess_with(cfg, net, TrainLog::default(), thresholds, &test)?;
    let report = MetricsReport {
        dataset: cfg.dataset.name().into(),
        alpha: run.thresholds.alpha,
        paths: run.paths.clone(),
    };
    let stem = run.kind.name();
    let mut w = ArtifactWriter::new(&cfg.output_dir)?;
    w.write_text(&format!("table1_{stem}.csv"), &table1_csv(std::slice::from_ref(&report)))?;
    w.write_text(&format!("table2_{stem}.csv"), &table2_csv(std::slice::from_ref(&report)))?;
    write_paths(&mut w, &run)?;
    let mut out = w.written();
    out.push(w.finish()?);
    Ok(out)
}

/// Numeric rows of a CSV file; a first row that does not parse is taken as
/// a header. Only the first `dim` columns are used.
pub fn read_feature_csv(path: &Path, dim: usize) -> Result<Matrix> {
    if !path.is_file() {
        return Err(Error::DataNotFound(format!("input file {}", path.display())));
    }
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = cells.iter().take(dim).map(|c| c.parse::<f64>()).collect();
        match parsed {
            Ok(v) if v.len() == dim => rows.push(v),
            _ if i == 0 => continue,
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: format!("expected {dim} numeric columns"),
                })
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Empty(format!("no rows in {}", path.display())));
    }
    Matrix::from_rows(&rows)
}

/// Scores each row of `input` and writes `scores.csv`: classifier scores,
/// reconstruction score, predicted label set and both detection flags.
pub fn cmd_score(cfg: &ExperimentConfig, weights: &Path, input: &Path) -> Result<PathBuf> {
    let net = load_weights(weights)?;
    let thresholds = match read_sidecar(weights, "thresholds.csv")? {
        Some(t) => read_thresholds(&t)?,
        None => {
            return Err(Error::DataNotFound(format!(
                "thresholds file {}",
                sidecar(weights, "thresholds.csv").display()
            )))
        }
    };
    let mut x = read_feature_csv(input, net.input_dim())?;
    if let Some(s) = read_sidecar(weights, "stats.csv")? {
        x = FeatureStats::from_csv(&s)?.apply(&x)?;
    }
    let (_, scores) = mc_scores(cfg, &net, &x, EVALUATION_STREAM)?;
    let mut s = String::from("row");
    if scores.clf.is_some() {
        for j in 0..net.n_classes() {
            let _ = write!(s, ",s_{j}");
        }
        s.push_str(",labels,clf_flag");
    }
    if scores.rec.is_some() {
        s.push_str(",s_rec,rec_flag");
    }
    s.push('\n');
    for i in 0..x.rows() {
        let _ = write!(s, "{i}");
        if let (Some(c), Some(t)) = (&scores.clf, &thresholds.clf) {
            let p = predict_labels(c.row(i), t)?;
            for v in c.row(i) {
                let _ = write!(s, ",{v:.6}");
            }
            let labels: Vec<String> = p.labels.iter().map(usize::to_string).collect();
            let _ = write!(s, ",{},{}", labels.join(";"), u8::from(p.z));
        }
        if let (Some(r), Some(t)) = (&scores.rec, thresholds.rec) {
            let _ = write!(s, ",{:.6},{}", r[i], u8::from(r[i] > t));
        }
        s.push('\n');
    }
    let mut w = ArtifactWriter::new(&cfg.output_dir)?;
    let path = w.write_text("scores.csv", &s)?;
    w.finish()?;
    Ok(path)
}

fn lda_artifacts(w: &mut ArtifactWriter, cfg: &ExperimentConfig, net: &PathwayNetwork, test: &crate::data::LabeledDataset) -> Result<()> {
    let stem = net.kind().name();
    let (_, projected, separation) = latent_lda(net, test)?;
    let names = group_names(test);
    let display = if projected.cols() >= 2 {
        projected.clone()
    } else {
        // one discriminant: spread the points vertically for legibility
        let col = projected.column(0);
        let spread = col.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - col.iter().copied().fold(f64::INFINITY, f64::min);
        let noise = jitter_for_display(
            &Matrix::zeros(projected.rows(), 1),
            0.05 * spread.max(1e-12),
            &mut Rng::derive(cfg.seed, DISPLAY_STREAM),
        )?;
        let rows: Vec<Vec<f64>> = (0..projected.rows()).map(|i| vec![col[i], noise[(i, 0)]]).collect();
        Matrix::from_rows(&rows)?
    };
    let title = format!("{} latent space, {} model (separation {separation:.3})", cfg.dataset.name(), stem);
    w.write_text(&format!("lda_{stem}.svg"), &emit_scatter_svg(&display, &names, &title)?)?;
    let mut s = String::from("group");
    for j in 0..projected.cols() {
        let _ = write!(s, ",lda_{}", j + 1);
    }
    s.push('\n');
    for (i, name) in names.iter().enumerate() {
        let _ = write!(s, "{name}");
        for v in projected.row(i) {
            let _ = write!(s, ",{v:.6}");
        }
        s.push('\n');
    }
    w.write_text(&format!("lda_{stem}.csv"), &s)?;
    Ok(())
}

fn distinct(names: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for n in names {
        if !out.contains(n) {
            out.push(n.clone());
        }
    }
    out
}

/// Latent LDA scatter, per-group mean score matrix and per-output MC
/// histograms of the first example of each group.
pub fn cmd_report(cfg: &ExperimentConfig, weights: &Path) -> Result<Vec<PathBuf>> {
    let net = load_weights(weights)?;
    let prepared = prepare(cfg)?;
    check_compatible(&net, &prepared.train)?;
    let test = with_ambiguous(cfg, &net, &prepared.test)?;
    let stem = net.kind().name();
    let mut w = ArtifactWriter::new(&cfg.output_dir)?;
    lda_artifacts(&mut w, cfg, &net, &test)?;

    let (mc, scores) = mc_scores(cfg, &net, &test.x, EVALUATION_STREAM)?;
    let names = group_names(&test);
    let groups = distinct(&names);
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut col_names = Vec::new();
    if let Some(c) = &scores.clf {
        for j in 0..c.cols() {
            columns.push(c.column(j));
            col_names.push(format!("s_{j}"));
        }
    }
    if let Some(r) = &scores.rec {
        columns.push(r.clone());
        col_names.push("s_rec".into());
    }
    let rows: Vec<Vec<f64>> = (0..test.len()).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
    let m = score_matrix(&Matrix::from_rows(&rows)?, &names, &groups)?;
    w.write_text(&format!("score_matrix_{stem}.csv"), &matrix_csv("group", &groups, &col_names, &m)?)?;

    if mc.class_samples.is_some() {
        for g in &groups {
            let i = names.iter().position(|n| n == g).unwrap_or(0);
            let p = mc.prediction(i)?;
            let hist = crate::uncertainty::histogram_csv(&p.samples, HISTOGRAM_BINS, 0.0, 1.0)?;
            w.write_text(&format!("hist_{stem}_{}.csv", g.replace(|c: char| !c.is_alphanumeric(), "_")), &hist)?;
        }
    }
    let mut out = w.written();
    out.push(w.finish()?);
    Ok(out)
}

/// Trains all three models on one split and writes the side-by-side
/// tables, entropy decomposition, separation scores and per-model files.
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<Comparison> {
    let c = compare(cfg)?;
    let mut w = ArtifactWriter::new(&cfg.output_dir)?;
    w.write_text("table1.csv", &table1_csv(std::slice::from_ref(&c.report)))?;
    w.write_text("table2.csv", &table2_csv(std::slice::from_ref(&c.report)))?;
    w.write_text("entropy.csv", &c.entropy_csv())?;
    w.write_text("separation.csv", &c.separation_csv())?;
    for run in &c.runs {
        write_model(&mut w, cfg, run, c.prepared.stats.as_ref())?;
        write_paths(&mut w, run)?;
        lda_artifacts(&mut w, cfg, &run.net, &c.test)?;
    }
    w.finish()?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DatasetKind;

    #[test]
    fn sidecar_names() {
        assert_eq!(sidecar(Path::new("out/augmented.ofdd"), "stats.csv"), Path::new("out/augmented.stats.csv"));
    }

    #[test]
    fn feature_csv_header_and_extra_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("in.csv");
        fs::write(&p, "x0,x1,label\n1,2,0\n3,4,1\n").unwrap();
        let m = read_feature_csv(&p, 2).unwrap();
        assert_eq!(m.as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        fs::write(&p, "1,2\n3,x\n").unwrap();
        assert!(matches!(read_feature_csv(&p, 2), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(read_feature_csv(&dir.path().join("none.csv"), 2), Err(Error::DataNotFound(_))));
    }

    #[test]
    fn train_then_score_and_report() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::defaults(DatasetKind::Chiller);
        cfg.chiller_n_per_class = 100;
        cfg.epochs = 3;
        cfg.pretrain_epochs = 1;
        cfg.mc_samples = 5;
        cfg.output_dir = dir.path().to_path_buf();
        let weights = cmd_train(&cfg).unwrap();
        let prepared = prepare(&cfg).unwrap();
        let raw = dir.path().join("raw.csv");
        let raw_x = prepared.stats.as_ref().unwrap().invert(&prepared.test.x).unwrap();
        let rows: Vec<String> = raw_x
            .iter_rows()
            .map(|r| r.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(","))
            .collect();
        fs::write(&raw, rows.join("\n")).unwrap();
        let scores = fs::read_to_string(cmd_score(&cfg, &weights, &raw).unwrap()).unwrap();
        assert_eq!(scores.lines().count(), prepared.test.len() + 1);
        assert!(scores.starts_with("row,s_0,"));
        cmd_report(&cfg, &weights).unwrap();
        let manifest = fs::read_to_string(dir.path().join(super::super::MANIFEST)).unwrap();
        for f in ["augmented.ofdd", "augmented.thresholds.csv", "scores.csv", "lda_augmented.svg", "score_matrix_augmented.csv"] {
            assert!(manifest.contains(f), "{f} missing from manifest");
        }
    }
}
