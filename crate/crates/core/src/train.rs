//! Training loops: reconstruction warm-up, the masked joint objective and the
//! two single-task baselines.
//!
//! The joint per-example loss is `ℓ_clf + β · ℓ_rec · 1{y = 0}`. The masked
//! reconstruction term is normalised by the full batch size, so
//! `batch loss = mean(ℓ_clf) + β · Σ_{normal} ℓ_rec / batch_size`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{ModelKind, NetworkGrads, PathwayNetwork};
use crate::nn::pathway::GradAt;
use crate::nn::{binary_cross_entropy, cross_entropy, mse_rows, Adam, AdamConfig, Matrix, Rng, Sampling};

const SUPERVISED_STREAM: u64 = 11;
const RECONSTRUCTION_STREAM: u64 = 12;
const VALIDATION_STREAM: u64 = 13;

/// "Train until convergence": stop once the validation loss has not improved
/// by `min_delta` for `patience` epochs, then restore the best weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub min_delta: f64,
    pub validation_fraction: f64,
}

impl Default for EarlyStopping {
    fn default() -> Self {
        Self {
            patience: 10,
            min_delta: 1e-4,
            validation_fraction: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// Weight of the masked reconstruction loss.
    pub beta: f64,
    /// Joint (or single-objective) epochs, after any warm-up.
    pub epochs: usize,
    /// Reconstruction-only warm-up epochs for the augmented model.
    pub pretrain_epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Applied to the benchmark models only.
    pub early_stopping: Option<EarlyStopping>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            epochs: 100,
            pretrain_epochs: 20,
            batch_size: 64,
            adam: AdamConfig::default(),
            seed: 0,
            early_stopping: None,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(format!("beta must be a finite non-negative number, got {}", self.beta)));
        }
        if self.adam.lr <= 0.0 {
            return Err(Error::invalid("learning rate must be positive"));
        }
        Ok(())
    }
}

/// Which terms of the loss are active.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Objective {
    /// `ℓ_clf + β ℓ_rec 1{y=0}`.
    Joint { beta: f64 },
    Classification,
    /// Reconstruction of every example in the batch (callers pass normals only).
    Reconstruction,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BatchLoss {
    pub clf: f64,
    /// The weighted, masked reconstruction term as it enters the total.
    pub rec: f64,
    pub total: f64,
}

/// Loss and exact parameter gradients of one batch.
///
/// In `Joint` mode, examples with a non-zero label contribute nothing to the
/// reconstruction loss or to any decoder gradient.
pub fn batch_loss_and_grads(
    net: &PathwayNetwork,
    x: &Matrix,
    labels: &[usize],
    objective: Objective,
    rng: &mut Rng,
    sampling: Sampling,
) -> Result<(BatchLoss, NetworkGrads)> {
    let batch = x.rows();
    if batch == 0 {
        return Err(Error::Empty("training batch".into()));
    }
    if labels.len() != batch {
        return Err(Error::shape("batch labels", batch, labels.len()));
    }
    let (use_clf, rec_weight) = match objective {
        Objective::Joint { beta } => (true, beta),
        Objective::Classification => (true, 0.0),
        Objective::Reconstruction => (false, 1.0),
    };
    if use_clf && net.head().is_none() {
        return Err(Error::MissingPathway("classifying"));
    }
    if matches!(objective, Objective::Joint { .. } | Objective::Reconstruction) && net.decoder().is_none() {
        return Err(Error::MissingPathway("decoding"));
    }

    let enc_trace = net.encoder().forward_traced(x, rng, sampling)?;
    let latent = enc_trace.output();
    let mut grads = net.zero_grads();
    let mut d_latent = Matrix::zeros(batch, net.latent_dim());
    let mut loss = BatchLoss::default();

    if use_clf {
        let head = net.head().expect("checked above");
        let trace = head.forward_traced(latent, rng, sampling)?;
        let (l, g) = if net.is_binary() {
            binary_cross_entropy(trace.output(), labels)?
        } else {
            cross_entropy(trace.output(), labels)?
        };
        let (dz, hg) = head.backward(&trace, &g, GradAt::Logits)?;
        d_latent.add_assign(&dz)?;
        grads.head = Some(hg);
        loss.clf = l;
    }

    if rec_weight > 0.0 {
        let decoder = net.decoder().expect("checked above");
        let trace = decoder.forward_traced(latent, rng, sampling)?;
        let xhat = trace.output();
        let per_example = mse_rows(xhat, x)?;
        let dim = x.cols() as f64;
        let mut g = Matrix::zeros(batch, x.cols());
        let mut rec = 0.0;
        for i in 0..batch {
            let keep = match objective {
                Objective::Joint { .. } => labels[i] == 0,
                _ => true,
            };
            if !keep {
                continue;
            }
            rec += per_example[i];
            let scale = rec_weight * 2.0 / (dim * batch as f64);
            for ((gv, &p), &t) in g.row_mut(i).iter_mut().zip(xhat.row(i)).zip(x.row(i)) {
                *gv = scale * (p - t);
            }
        }
        let (dz, dg) = decoder.backward(&trace, &g, GradAt::Output)?;
        d_latent.add_assign(&dz)?;
        grads.decoder = Some(dg);
        loss.rec = rec_weight * rec / batch as f64;
    }

    let (_, eg) = net.encoder().backward(&enc_trace, &d_latent, GradAt::Output)?;
    grads.encoder = eg;
    loss.total = loss.clf + loss.rec;
    if !loss.total.is_finite() {
        return Err(Error::NonFinite("training loss"));
    }
    Ok((loss, grads))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub phase: Phase,
    pub epoch: usize,
    pub clf: f64,
    pub rec: f64,
    pub total: f64,
    pub validation: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Pretrain,
    Joint,
    Classifier,
    Autoencoder,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Pretrain => "pretrain",
            Phase::Joint => "joint",
            Phase::Classifier => "classifier",
            Phase::Autoencoder => "autoencoder",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
}

impl TrainLog {
    /// `phase,epoch,clf_loss,rec_loss,total,validation` with 6-decimal values.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("phase,epoch,clf_loss,rec_loss,total,validation\n");
        for r in &self.records {
            let val = r.validation.map(|v| format!("{v:.6}")).unwrap_or_default();
            let _ = writeln!(s, "{},{},{:.6},{:.6},{:.6},{}", r.phase.name(), r.epoch, r.clf, r.rec, r.total, val);
        }
        s
    }

    pub fn extend(&mut self, other: TrainLog) {
        self.records.extend(other.records);
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }
}

struct Loop<'a> {
    objective: Objective,
    phase: Phase,
    epochs: usize,
    batch_size: usize,
    adam: AdamConfig,
    rng: Rng,
    early_stopping: Option<(EarlyStopping, &'a Matrix, &'a [usize])>,
}

impl Loop<'_> {
    fn run(mut self, net: &mut PathwayNetwork, x: &Matrix, labels: &[usize]) -> Result<TrainLog> {
        let mut adam = Adam::new(self.adam);
        let mut log = TrainLog::default();
        let mut order: Vec<usize> = (0..x.rows()).collect();
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut stale = 0;

        for epoch in 1..=self.epochs {
            self.rng.shuffle(&mut order);
            let (mut clf, mut rec, mut total) = (0.0, 0.0, 0.0);
            for chunk in order.chunks(self.batch_size) {
                let xb = x.select_rows(chunk);
                let yb: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
                let (loss, grads) =
                    batch_loss_and_grads(net, &xb, &yb, self.objective, &mut self.rng, Sampling::Stochastic)?;
                adam.step(&mut net.param_tensors_mut(), &grads.tensors())?;
                let w = chunk.len() as f64;
                clf += loss.clf * w;
                rec += loss.rec * w;
                total += loss.total * w;
            }
            let n = x.rows() as f64;
            let mut record = EpochRecord {
                phase: self.phase,
                epoch,
                clf: clf / n,
                rec: rec / n,
                total: total / n,
                validation: None,
            };

            if let Some((rule, vx, vy)) = self.early_stopping {
                let (val, _) =
                    batch_loss_and_grads(net, vx, vy, self.objective, &mut Rng::seed(0), Sampling::Deterministic)?;
                record.validation = Some(val.total);
                log.records.push(record);
                match &best {
                    Some((b, _)) if val.total > b - rule.min_delta => {
                        stale += 1;
                        if stale >= rule.patience {
                            break;
                        }
                    }
                    _ => {
                        best = Some((val.total, net.flat_params()));
                        stale = 0;
                    }
                }
            } else {
                log.records.push(record);
            }
        }
        if let Some((_, params)) = best {
            net.set_flat_params(&params)?;
        }
        Ok(log)
    }
}

fn check_labels(labels: &[usize], classes: usize) -> Result<()> {
    match labels.iter().find(|&&l| l >= classes) {
        Some(&label) => Err(Error::LabelOutOfRange { label, classes }),
        None => Ok(()),
    }
}

fn check_rows(x: &Matrix, labels: &[usize]) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::Empty("training data".into()));
    }
    if x.rows() != labels.len() {
        return Err(Error::shape("training labels", x.rows(), labels.len()));
    }
    Ok(())
}

/// Splits off a seeded validation subset for early stopping.
fn holdout(x: &Matrix, labels: &[usize], fraction: f64, seed: u64) -> (Matrix, Vec<usize>, Matrix, Vec<usize>) {
    let mut idx: Vec<usize> = (0..x.rows()).collect();
    Rng::derive(seed, VALIDATION_STREAM).shuffle(&mut idx);
    let n_val = ((x.rows() as f64 * fraction).round() as usize).clamp(1, x.rows().saturating_sub(1).max(1));
    let (val, train) = idx.split_at(n_val);
    let pick = |ix: &[usize]| (x.select_rows(ix), ix.iter().map(|&i| labels[i]).collect::<Vec<_>>());
    let (tx, ty) = pick(train);
    let (vx, vy) = pick(val);
    (tx, ty, vx, vy)
}

/// Reconstruction-only warm-up on normal examples.
pub fn pretrain_reconstruction(net: &mut PathwayNetwork, normal: &Matrix, cfg: &TrainConfig) -> Result<TrainLog> {
    cfg.validate()?;
    if net.decoder().is_none() {
        return Err(Error::MissingPathway("decoding"));
    }
    if normal.rows() == 0 {
        return Err(Error::Empty("normal training data".into()));
    }
    let labels = vec![0; normal.rows()];
    Loop {
        objective: Objective::Reconstruction,
        phase: Phase::Pretrain,
        epochs: cfg.pretrain_epochs,
        batch_size: cfg.batch_size,
        adam: cfg.adam,
        rng: Rng::derive(cfg.seed, RECONSTRUCTION_STREAM),
        early_stopping: None,
    }
    .run(net, normal, &labels)
}

/// Joint training with the masked reconstruction term.
pub fn train_joint(net: &mut PathwayNetwork, x: &Matrix, labels: &[usize], cfg: &TrainConfig) -> Result<TrainLog> {
    cfg.validate()?;
    if net.kind() != ModelKind::Augmented {
        return Err(Error::invalid(format!("joint training needs an augmented model, got {}", net.kind())));
    }
    check_rows(x, labels)?;
    check_labels(labels, net.n_classes())?;
    Loop {
        objective: Objective::Joint { beta: cfg.beta },
        phase: Phase::Joint,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        adam: cfg.adam,
        rng: Rng::derive(cfg.seed, SUPERVISED_STREAM),
        early_stopping: None,
    }
    .run(net, x, labels)
}

/// Cross-entropy training of the classifying pathway only.
pub fn train_classifier(net: &mut PathwayNetwork, x: &Matrix, labels: &[usize], cfg: &TrainConfig) -> Result<TrainLog> {
    cfg.validate()?;
    if net.head().is_none() {
        return Err(Error::MissingPathway("classifying"));
    }
    check_rows(x, labels)?;
    check_labels(labels, net.n_classes())?;
    let rng = Rng::derive(cfg.seed, SUPERVISED_STREAM);
    match cfg.early_stopping {
        None => Loop {
            objective: Objective::Classification,
            phase: Phase::Classifier,
            epochs: cfg.epochs,
            batch_size: cfg.batch_size,
            adam: cfg.adam,
            rng,
            early_stopping: None,
        }
        .run(net, x, labels),
        Some(rule) => {
            let (tx, ty, vx, vy) = holdout(x, labels, rule.validation_fraction, cfg.seed);
            Loop {
                objective: Objective::Classification,
                phase: Phase::Classifier,
                epochs: cfg.epochs,
                batch_size: cfg.batch_size,
                adam: cfg.adam,
                rng,
                early_stopping: Some((rule, &vx, &vy)),
            }
            .run(net, &tx, &ty)
        }
    }
}

/// Reconstruction training on normal data; any fault label is an error.
pub fn train_autoencoder(net: &mut PathwayNetwork, x: &Matrix, labels: &[usize], cfg: &TrainConfig) -> Result<TrainLog> {
    cfg.validate()?;
    if net.decoder().is_none() {
        return Err(Error::MissingPathway("decoding"));
    }
    check_rows(x, labels)?;
    if let Some(&l) = labels.iter().find(|&&l| l != 0) {
        return Err(Error::invalid(format!(
            "autoencoder trains on normal data only, found label {l}"
        )));
    }
    let rng = Rng::derive(cfg.seed, RECONSTRUCTION_STREAM);
    match cfg.early_stopping {
        None => Loop {
            objective: Objective::Reconstruction,
            phase: Phase::Autoencoder,
            epochs: cfg.epochs,
            batch_size: cfg.batch_size,
            adam: cfg.adam,
            rng,
            early_stopping: None,
        }
        .run(net, x, labels),
        Some(rule) => {
            let (tx, ty, vx, vy) = holdout(x, labels, rule.validation_fraction, cfg.seed);
            Loop {
                objective: Objective::Reconstruction,
                phase: Phase::Autoencoder,
                epochs: cfg.epochs,
                batch_size: cfg.batch_size,
                adam: cfg.adam,
                rng,
                early_stopping: Some((rule, &vx, &vy)),
            }
            .run(net, &tx, &ty)
        }
    }
}

/// Full schedule for any model kind: warm-up plus joint training for the
/// augmented model, single-objective training for the baselines (the
/// autoencoder only sees label-0 rows).
pub fn fit(net: &mut PathwayNetwork, x: &Matrix, labels: &[usize], cfg: &TrainConfig) -> Result<TrainLog> {
    check_rows(x, labels)?;
    let normal_idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    match net.kind() {
        ModelKind::Augmented => {
            let mut log = TrainLog::default();
            if cfg.pretrain_epochs > 0 {
                log.extend(pretrain_reconstruction(net, &x.select_rows(&normal_idx), cfg)?);
            }
            log.extend(train_joint(net, x, labels, cfg)?);
            Ok(log)
        }
        ModelKind::ClassifierOnly => train_classifier(net, x, labels, cfg),
        ModelKind::AutoencoderOnly => {
            train_autoencoder(net, &x.select_rows(&normal_idx), &vec![0; normal_idx.len()], cfg)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Architecture;
    use crate::nn::Activation;

    fn arch(n_classes: usize, dropout: f64) -> Architecture {
        Architecture {
            input_dim: 4,
            latent_dim: 2,
            hidden_widths: vec![3],
            head_widths: vec![4],
            dropout_rate: dropout,
            n_classes,
            decoder_output: Activation::Identity,
        }
    }

    fn toy(n: usize, seed: u64) -> (Matrix, Vec<usize>) {
        let mut rng = Rng::seed(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let label = i % 3;
            let shift = label as f64 * 2.0;
            rows.push((0..4).map(|_| rng.normal() + shift).collect::<Vec<_>>());
            labels.push(label);
        }
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn fault_only_batch_has_pure_classification_loss() {
        let net = PathwayNetwork::build(ModelKind::Augmented, &arch(3, 0.0), &mut Rng::seed(1)).unwrap();
        let (x, _) = toy(6, 2);
        let labels = vec![1, 2, 1, 2, 1, 2];
        let mut r = Rng::seed(0);
        let (joint, jg) =
            batch_loss_and_grads(&net, &x, &labels, Objective::Joint { beta: 1.0 }, &mut r, Sampling::Deterministic)
                .unwrap();
        let (clf, _) =
            batch_loss_and_grads(&net, &x, &labels, Objective::Classification, &mut r, Sampling::Deterministic)
                .unwrap();
        assert_eq!(joint.rec, 0.0);
        assert_eq!(joint.total, clf.total);
        assert!(jg.decoder.unwrap().iter().all(|g| g.weights.as_slice().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn zero_pretrain_epochs_leave_net_unchanged() {
        let mut net = PathwayNetwork::build(ModelKind::Augmented, &arch(3, 0.2), &mut Rng::seed(1)).unwrap();
        let before = net.clone();
        let (x, _) = toy(10, 3);
        let cfg = TrainConfig {
            pretrain_epochs: 0,
            ..TrainConfig::default()
        };
        let log = pretrain_reconstruction(&mut net, &x, &cfg).unwrap();
        assert!(log.records.is_empty());
        assert_eq!(net, before);
    }

    #[test]
    fn empty_data_rejected() {
        let mut net = PathwayNetwork::build(ModelKind::Augmented, &arch(3, 0.2), &mut Rng::seed(1)).unwrap();
        let cfg = TrainConfig::default();
        assert!(matches!(
            pretrain_reconstruction(&mut net, &Matrix::zeros(0, 4), &cfg),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn label_out_of_range_rejected() {
        let mut net = PathwayNetwork::build(ModelKind::Augmented, &arch(3, 0.2), &mut Rng::seed(1)).unwrap();
        let (x, mut labels) = toy(6, 3);
        labels[2] = 3;
        assert!(matches!(
            train_joint(&mut net, &x, &labels, &TrainConfig::default()),
            Err(Error::LabelOutOfRange { label: 3, .. })
        ));
    }

    #[test]
    fn autoencoder_rejects_fault_labels() {
        let mut net = PathwayNetwork::build(ModelKind::AutoencoderOnly, &arch(3, 0.2), &mut Rng::seed(1)).unwrap();
        let (x, labels) = toy(6, 3);
        assert!(matches!(
            train_autoencoder(&mut net, &x, &labels, &TrainConfig::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn joint_requires_augmented() {
        let mut net = PathwayNetwork::build(ModelKind::ClassifierOnly, &arch(3, 0.2), &mut Rng::seed(1)).unwrap();
        let (x, labels) = toy(6, 3);
        assert!(train_joint(&mut net, &x, &labels, &TrainConfig::default()).is_err());
    }

    #[test]
    fn log_csv_has_header_and_rows() {
        let mut net = PathwayNetwork::build(ModelKind::Augmented, &arch(3, 0.2), &mut Rng::seed(1)).unwrap();
        let (x, labels) = toy(30, 3);
        let cfg = TrainConfig {
            epochs: 2,
            pretrain_epochs: 1,
            batch_size: 8,
            ..TrainConfig::default()
        };
        let log = fit(&mut net, &x, &labels, &cfg).unwrap();
        let csv = log.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "phase,epoch,clf_loss,rec_loss,total,validation");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("pretrain,1,"));
        assert!(lines[3].starts_with("joint,2,"));
    }

    #[test]
    fn early_stopping_halts_and_restores() {
        let mut net = PathwayNetwork::build(ModelKind::ClassifierOnly, &arch(3, 0.0), &mut Rng::seed(1)).unwrap();
        let (x, labels) = toy(60, 4);
        let cfg = TrainConfig {
            epochs: 500,
            batch_size: 16,
            adam: AdamConfig { lr: 0.05, ..AdamConfig::default() },
            early_stopping: Some(EarlyStopping::default()),
            ..TrainConfig::default()
        };
        let log = train_classifier(&mut net, &x, &labels, &cfg).unwrap();
        assert!(log.records.len() < 500);
        assert!(log.records.iter().all(|r| r.validation.is_some()));
    }
}
