//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 7, 8 and 11 need the ann-thyroid files and 10 needs MNIST idx
//! files (see README). A criterion whose data is missing prints FAIL with
//! the reason; it fails the process only when OODFDD_REQUIRE_DATA=1.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use oodfdd::data::{gen_chiller_surrogate, ChillerConfig, DatasetKind};
use oodfdd::detect::{
    calibrate_thresholds, clf_anomaly_scores, diagnostic_accuracy, predict_labels, AnomalyScores, ScorePath,
};
use oodfdd::experiment::{compare, Comparison, ExperimentConfig, DATA_DIR_ENV};
use oodfdd::model::{Architecture, ModelKind, PathwayNetwork};
use oodfdd::nn::{check_pathway, gradient_check, Activation, Matrix, Pathway, Rng, Sampling, Target};
use oodfdd::train::{batch_loss_and_grads, Objective};
use oodfdd::uncertainty::{decompose_entropy, mc_sample, predictive_entropy, EntropyGroup};
use oodfdd::Error;

const SEEDS: [u64; 3] = [0, 1, 2];

enum Outcome {
    Pass(String),
    Fail(String),
    /// Could not be evaluated because input data is missing.
    NoData(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.normal()).collect();
    Matrix::new(rows, cols, data).unwrap()
}

fn c1_gradients() -> Outcome {
    let start = Instant::now();
    let mut rng = Rng::seed(101);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    let hidden = [Activation::Relu, Activation::Sigmoid, Activation::Identity];
    for trial in 0..30 {
        let layers = 1 + rng.below(3);
        let input = 2 + rng.below(4);
        let mut widths = vec![input];
        for _ in 1..layers {
            widths.push(2 + rng.below(5));
        }
        let batch = 3 + rng.below(5);
        let x = random_matrix(batch, input, &mut rng);
        let (output, target) = match trial % 3 {
            0 => {
                let c = 3 + rng.below(3);
                widths.push(c);
                (Activation::Softmax, Target::Classes((0..batch).map(|_| rng.below(c)).collect()))
            }
            1 => {
                widths.push(1);
                (Activation::Sigmoid, Target::Classes((0..batch).map(|_| rng.below(2)).collect()))
            }
            _ => {
                let d = 1 + rng.below(4);
                widths.push(d);
                (Activation::Identity, Target::Values(random_matrix(batch, d, &mut rng)))
            }
        };
        let act = hidden[trial % hidden.len()];
        let mut net = Pathway::mlp(&widths, act, output, None, &mut rng).unwrap();
        // zero initial biases can put a pre-activation exactly on the ReLU kink
        let p: Vec<f64> = net.flat_params().iter().map(|v| v + 0.1 * rng.normal()).collect();
        net.set_flat_params(&p).unwrap();
        let check = check_pathway(&net, &x, &target, 1e-6).unwrap();
        worst = worst.max(check.max_rel_error);
        n += 1;
    }
    // the assembled network under the joint objective
    for n_classes in [2, 3] {
        let arch = Architecture {
            input_dim: 4,
            latent_dim: 2,
            hidden_widths: vec![3],
            head_widths: vec![3],
            dropout_rate: 0.2,
            n_classes,
            decoder_output: Activation::Identity,
        };
        let mut net = PathwayNetwork::build(ModelKind::Augmented, &arch, &mut rng).unwrap();
        let p: Vec<f64> = net.flat_params().iter().map(|v| v + 0.1 * rng.normal()).collect();
        net.set_flat_params(&p).unwrap();
        let x = random_matrix(6, 4, &mut rng);
        let labels: Vec<usize> = (0..6).map(|i| i % n_classes).collect();
        let objective = Objective::Joint { beta: 0.7 };
        let eval = |p: &[f64]| {
            let mut probe = net.clone();
            probe.set_flat_params(p)?;
            let (loss, grads) = batch_loss_and_grads(&probe, &x, &labels, objective, &mut Rng::seed(0), Sampling::Deterministic)?;
            Ok((loss.total, grads.flatten()))
        };
        let check = gradient_check(&net.flat_params(), 1e-6, eval).unwrap();
        worst = worst.max(check.max_rel_error);
        n += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst < 1e-4 && secs < 10.0,
        format!("max relative error {worst:.2e} over {n} networks in {secs:.2} s"),
    )
}

fn c2_mc_statistics() -> Outcome {
    let arch = Architecture {
        input_dim: 5,
        latent_dim: 3,
        hidden_widths: vec![6],
        head_widths: vec![4],
        dropout_rate: 0.3,
        n_classes: 4,
        decoder_output: Activation::Identity,
    };
    let net = PathwayNetwork::build(ModelKind::Augmented, &arch, &mut Rng::seed(5)).unwrap();
    let x = random_matrix(7, 5, &mut Rng::seed(6));
    let t = 64;
    let batch = mc_sample(&net, &x, t, &mut Rng::seed(7)).unwrap();
    let samples = batch.class_samples.as_ref().unwrap();
    let mean = batch.class_mean.as_ref().unwrap();
    let var = batch.class_variance.as_ref().unwrap();
    let mut mismatches = 0;
    let mut checked = 0;
    for i in 0..x.rows() {
        for j in 0..4 {
            let col: Vec<f64> = samples.iter().map(|m| m[(i, j)]).collect();
            let constant = col.iter().all(|v| v.to_bits() == col[0].to_bits());
            let mut mu = 0.0;
            for v in &col {
                mu += v;
            }
            mu /= t as f64;
            let mut s2 = 0.0;
            for v in &col {
                s2 += (v - mu) * (v - mu);
            }
            s2 /= t as f64;
            if constant {
                (mu, s2) = (col[0], 0.0);
            }
            checked += 1;
            if mu.to_bits() != mean[(i, j)].to_bits() || s2.to_bits() != var[(i, j)].to_bits() {
                mismatches += 1;
            }
        }
    }
    // the same draws again must reproduce every sample bit for bit
    let again = mc_sample(&net, &x, t, &mut Rng::seed(7)).unwrap();
    let repeat = again.class_samples.as_ref().unwrap() == samples && again.class_mean.as_ref() == Some(mean);
    verdict(
        mismatches == 0 && repeat,
        format!("{checked} mean/variance entries over T = {t}, {mismatches} bitwise mismatches, repeat identical {repeat}"),
    )
}

fn c3_score_oracles() -> Outcome {
    let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let mut score_cases = 0usize;
    let mut score_bad = 0usize;
    for &m0 in &grid {
        for &m1 in &grid {
            for &m2 in &grid {
                for &v0 in &grid {
                    for &v1 in &grid {
                        for &v2 in &grid {
                            let s = clf_anomaly_scores(&[m0, m1, m2], &[v0, v1, v2]);
                            let oracle = [1.0 - m0 + v0, m1 + v1, m2 + v2];
                            score_cases += 1;
                            if s.iter().zip(&oracle).any(|(a, b)| a.to_bits() != b.to_bits()) {
                                score_bad += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    // every label set |Y| <= 3 over four outputs, reached through thresholds
    let c = 4;
    let thresholds = vec![0.5; c];
    let mut delta_cases = 0usize;
    let mut delta_bad = 0usize;
    for mask in 0u32..(1 << c) {
        let y_set: BTreeSet<usize> = (0..c).filter(|&j| mask & (1 << j) != 0).collect();
        if y_set.len() > 3 {
            continue;
        }
        let scores: Vec<f64> = (0..c).map(|j| if y_set.contains(&j) { 0.9 } else { 0.1 }).collect();
        let p = predict_labels(&scores, &thresholds).unwrap();
        if p.labels != y_set || p.z != !y_set.is_empty() {
            delta_bad += 1;
        }
        for y in 1..c {
            let faults = y_set.iter().filter(|&&j| j != 0).count();
            let oracle = if y_set.contains(&y) { 1.0 / faults as f64 } else { 0.0 };
            delta_cases += 1;
            if diagnostic_accuracy(&p.labels, y).unwrap().to_bits() != oracle.to_bits() {
                delta_bad += 1;
            }
        }
    }
    verdict(
        score_bad == 0 && delta_bad == 0,
        format!("{score_cases} score vectors ({score_bad} wrong), {delta_cases} label-set cases ({delta_bad} wrong)"),
    )
}

fn c4_calibration() -> Outcome {
    let mut rng = Rng::seed(2024);
    let mut draw = |n: usize| -> AnomalyScores {
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.normal().abs(), rng.uniform(), 0.2 + 0.1 * rng.normal()]).collect();
        let rec = (0..n).map(|_| rng.normal().powi(2)).collect();
        AnomalyScores {
            clf: Some(Matrix::from_rows(&rows).unwrap()),
            rec: Some(rec),
        }
    };
    let rates = |set: &AnomalyScores, t: &oodfdd::detect::ThresholdSet| -> Vec<f64> {
        let n = set.len() as f64;
        let m = set.clf.as_ref().unwrap();
        let mut r: Vec<f64> = t
            .clf
            .as_ref()
            .unwrap()
            .iter()
            .enumerate()
            .map(|(j, &tj)| m.column(j).iter().filter(|&&s| s > tj).count() as f64 / n)
            .collect();
        r.push(set.rec.as_ref().unwrap().iter().filter(|&&s| s > t.rec.unwrap()).count() as f64 / n);
        r
    };
    let calib = draw(2000);
    let fresh = draw(100_000);
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for alpha in [0.05, 0.1] {
        let t = calibrate_thresholds(&calib, alpha).unwrap();
        let own = rates(&calib, &t);
        worst = own.iter().fold(worst, |w, r| w.max((r - alpha).abs()));
        parts.push(format!("alpha {alpha}: rates {own:.4?}, on 100k fresh draws {:.4?}", rates(&fresh, &t)));
    }
    verdict(worst <= 0.02, format!("largest |rate - alpha| {worst:.4}; {}", parts.join("; ")))
}

fn c5_masked_loss() -> Outcome {
    let arch = Architecture {
        input_dim: 5,
        latent_dim: 2,
        hidden_widths: vec![4],
        head_widths: vec![3],
        dropout_rate: 0.25,
        n_classes: 3,
        decoder_output: Activation::Identity,
    };
    let net = PathwayNetwork::build(ModelKind::Augmented, &arch, &mut Rng::seed(9)).unwrap();
    let x = random_matrix(12, 5, &mut Rng::seed(10));
    let labels: Vec<usize> = (0..12).map(|i| [0, 1, 0, 2][i % 4]).collect();
    let normals: Vec<usize> = (0..12).filter(|&i| labels[i] == 0).collect();
    let objective = Objective::Joint { beta: 1.0 };
    let grads = |x: &Matrix, y: &[usize]| {
        let (_, g) = batch_loss_and_grads(&net, x, y, objective, &mut Rng::seed(0), Sampling::Deterministic).unwrap();
        // per-example sums: undo the batch mean
        let b = x.rows() as f64;
        g.decoder
            .unwrap()
            .iter()
            .flat_map(|d| d.weights.as_slice().iter().chain(&d.bias).map(|v| v * b).collect::<Vec<_>>())
            .collect::<Vec<f64>>()
    };
    let full = grads(&x, &labels);
    let kept = grads(&x.select_rows(&normals), &vec![0; normals.len()]);
    let diff = full.iter().zip(&kept).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    verdict(
        diff <= 1e-12 && full.len() == kept.len(),
        format!("max decoder gradient difference {diff:.2e} over {} entries", full.len()),
    )
}

fn c6_entropy_identity() -> Outcome {
    let ds = gen_chiller_surrogate(
        4,
        &ChillerConfig {
            n_per_class: 20,
            ..ChillerConfig::default()
        },
    )
    .unwrap();
    let arch = Architecture {
        input_dim: ds.dim(),
        latent_dim: 4,
        hidden_widths: vec![8],
        head_widths: vec![8],
        dropout_rate: 0.2,
        n_classes: ds.n_classes,
        decoder_output: Activation::Identity,
    };
    let net = PathwayNetwork::build(ModelKind::ClassifierOnly, &arch, &mut Rng::seed(3)).unwrap();
    let mc = mc_sample(&net, &ds.x, 20, &mut Rng::seed(4)).unwrap();
    let means = mc.class_mean.unwrap();
    let groups = ds.entropy_groups();
    let d = decompose_entropy(&means, &groups).unwrap();
    let parts = d.p0 + d.p1_in + d.p1_ood;
    let mut counts = [0usize; 3];
    for g in &groups {
        match g {
            Some(EntropyGroup::Normal) => counts[0] += 1,
            Some(EntropyGroup::InDistributionFault) => counts[1] += 1,
            Some(EntropyGroup::OutOfDistribution) => counts[2] += 1,
            None => {}
        }
    }
    let direct: f64 = (0..means.rows()).map(|i| predictive_entropy(means.row(i)).unwrap()).sum();
    let covered = counts.iter().sum::<usize>() == ds.len();
    verdict(
        (d.total - parts).abs() <= 1e-9 && (d.total - direct).abs() <= 1e-9 && covered,
        format!(
            "total {:.6}, |total - parts| {:.1e}, |total - direct| {:.1e}, partition {:?} of {}",
            d.total,
            (d.total - parts).abs(),
            (d.total - direct).abs(),
            counts,
            ds.len()
        ),
    )
}

/// Runs `compare` once per seed; `Err` if the data is missing.
fn runs(dataset: DatasetKind) -> Result<Vec<Comparison>, String> {
    let mut out = Vec::new();
    for seed in SEEDS {
        let mut cfg = ExperimentConfig::defaults(dataset);
        cfg.seed = seed;
        if std::env::var_os(DATA_DIR_ENV).is_none() {
            cfg.data_dir = Some(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"));
        }
        let start = Instant::now();
        match compare(&cfg) {
            Ok(c) => {
                eprintln!("  {} seed {seed}: {:.1} s", dataset.name(), start.elapsed().as_secs_f64());
                out.push(c);
            }
            Err(Error::DataNotFound(msg)) => return Err(msg),
            Err(e) => panic!("{} seed {seed}: {e}", dataset.name()),
        }
    }
    Ok(out)
}

fn binary(c: &Comparison, m: ModelKind, p: ScorePath, group: &str) -> f64 {
    c.report.path(m, p).and_then(|r| r.group(group)).map(|g| g.binary_accuracy).unwrap_or(f64::NAN)
}

fn diagnostic(c: &Comparison, m: ModelKind, group: &str) -> f64 {
    c.report
        .path(m, ScorePath::Classifying)
        .and_then(|r| r.group(group))
        .and_then(|g| g.diagnostic_accuracy)
        .unwrap_or(f64::NAN)
}

fn majority(passes: &[bool]) -> bool {
    passes.iter().filter(|&&p| p).count() * 2 > passes.len()
}

fn c7_thyroid(runs: &[Comparison]) -> Outcome {
    let mut passes = Vec::new();
    let mut parts = Vec::new();
    for (seed, c) in SEEDS.iter().zip(runs) {
        let aug_sub = binary(c, ModelKind::Augmented, ScorePath::Classifying, "subnormal");
        let clf_sub = binary(c, ModelKind::ClassifierOnly, ScorePath::Classifying, "subnormal");
        let normal = binary(c, ModelKind::Augmented, ScorePath::Classifying, "normal");
        let diseased = binary(c, ModelKind::Augmented, ScorePath::Classifying, "diseased");
        let ok = aug_sub - clf_sub >= 0.10 && (0.85..=0.95).contains(&normal) && diseased >= 0.95;
        passes.push(ok);
        parts.push(format!(
            "seed {seed}: subnormal {aug_sub:.3} vs {clf_sub:.3}, normal {normal:.3}, diseased {diseased:.3} [{}]",
            if ok { "ok" } else { "x" }
        ));
    }
    verdict(majority(&passes), parts.join("; "))
}

fn c8_thyroid_thresholds(runs: &[Comparison]) -> Outcome {
    let mut passes = Vec::new();
    let mut parts = Vec::new();
    for (seed, c) in SEEDS.iter().zip(runs) {
        let t = |m| c.report.path(m, ScorePath::Classifying).map(|p| p.average_threshold()).unwrap_or(f64::NAN);
        let (aug, clf) = (t(ModelKind::Augmented), t(ModelKind::ClassifierOnly));
        passes.push(aug < clf);
        parts.push(format!("seed {seed}: {aug:.4} vs {clf:.4}"));
    }
    verdict(majority(&passes), parts.join("; "))
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

fn c9_chiller(runs: &[Comparison]) -> Outcome {
    let mut passes = Vec::new();
    let mut parts = Vec::new();
    for (seed, c) in SEEDS.iter().zip(runs) {
        let acc: Vec<f64> = (1..=4)
            .map(|s| binary(c, ModelKind::Augmented, ScorePath::Classifying, &format!("SL{s}")))
            .collect();
        let rho = spearman(&[1.0, 2.0, 3.0, 4.0], &acc);
        let clf_sl1 = binary(c, ModelKind::ClassifierOnly, ScorePath::Classifying, "SL1");
        let ok = rho > 0.0 && acc[0] >= clf_sl1;
        passes.push(ok);
        parts.push(format!(
            "seed {seed}: SL1..SL4 {:.3?} (rho {rho:.2}), SL1 {:.3} vs {clf_sl1:.3} [{}]",
            acc,
            acc[0],
            if ok { "ok" } else { "x" }
        ));
    }
    verdict(majority(&passes), parts.join("; "))
}

fn c10_mnist(runs: &[Comparison]) -> Outcome {
    let mut passes = Vec::new();
    let mut parts = Vec::new();
    for (seed, c) in SEEDS.iter().zip(runs) {
        let aug = diagnostic(c, ModelKind::Augmented, "ambiguous");
        let clf = diagnostic(c, ModelKind::ClassifierOnly, "ambiguous");
        let dec = binary(c, ModelKind::Augmented, ScorePath::Decoding, "out-of-domain");
        let cls = binary(c, ModelKind::Augmented, ScorePath::Classifying, "out-of-domain");
        let ok = aug > clf && dec >= 0.95 && cls >= 0.95;
        passes.push(ok);
        parts.push(format!(
            "seed {seed}: ambiguous diagnostic {aug:.3} vs {clf:.3}, unknown detection {dec:.3}/{cls:.3} [{}]",
            if ok { "ok" } else { "x" }
        ));
    }
    verdict(majority(&passes), parts.join("; "))
}

fn c11_entropy(runs: &[Comparison]) -> Outcome {
    let mut passes = Vec::new();
    let mut parts = Vec::new();
    for (seed, c) in SEEDS.iter().zip(runs) {
        let (Some(a), Some(b)) = (c.run(ModelKind::Augmented), c.run(ModelKind::ClassifierOnly)) else {
            return Outcome::Fail("missing model run".into());
        };
        let (pa, pb) = (a.entropy.unwrap().p0, b.entropy.unwrap().p0);
        let (oa, ob) = (a.ood_mean_entropy.unwrap_or(f64::NAN), b.ood_mean_entropy.unwrap_or(f64::NAN));
        let ok = pa <= pb && oa > ob;
        passes.push(ok);
        parts.push(format!("seed {seed}: P0 {pa:.3} vs {pb:.3}, OOD mean {oa:.4} vs {ob:.4}"));
    }
    verdict(passes.iter().filter(|&&p| p).count() >= 2, parts.join("; "))
}

fn main() {
    let require_data = std::env::var("OODFDD_REQUIRE_DATA").is_ok_and(|v| v == "1");
    let mut results: Vec<(usize, Outcome)> = vec![
        (1, c1_gradients()),
        (2, c2_mc_statistics()),
        (3, c3_score_oracles()),
        (4, c4_calibration()),
        (5, c5_masked_loss()),
        (6, c6_entropy_identity()),
    ];
    match runs(DatasetKind::Thyroid) {
        Ok(r) => {
            results.push((7, c7_thyroid(&r)));
            results.push((8, c8_thyroid_thresholds(&r)));
            results.push((11, c11_entropy(&r)));
        }
        Err(msg) => {
            for k in [7, 8, 11] {
                results.push((k, Outcome::NoData(msg.clone())));
            }
        }
    }
    match runs(DatasetKind::Chiller) {
        Ok(r) => results.push((9, c9_chiller(&r))),
        Err(msg) => results.push((9, Outcome::NoData(msg))),
    }
    match runs(DatasetKind::Digits) {
        Ok(r) => results.push((10, c10_mnist(&r))),
        Err(msg) => results.push((10, Outcome::NoData(msg))),
    }
    results.sort_by_key(|(k, _)| *k);

    let mut failed = 0;
    for (k, outcome) in &results {
        match outcome {
            Outcome::Pass(d) => println!("criterion {k:2}: PASS  {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("criterion {k:2}: FAIL  {d}");
            }
            Outcome::NoData(d) => {
                if require_data {
                    failed += 1;
                }
                println!("criterion {k:2}: FAIL  not evaluated, data missing: {d}");
            }
        }
    }
    let passed = results.iter().filter(|(_, o)| matches!(o, Outcome::Pass(_))).count();
    println!("acceptance: {passed} of {} criteria passed", results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
