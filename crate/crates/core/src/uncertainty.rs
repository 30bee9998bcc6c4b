//! Monte Carlo dropout inference and entropy diagnostics.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::PathwayNetwork;
use crate::nn::{Matrix, Rng, Sampling};

pub const DEFAULT_SAMPLES: usize = 100;

/// Forward passes evaluated concurrently before being folded into the
/// running sums. Bounds memory for wide reconstructions.
const PASSES_PER_WAVE: usize = 16;

/// `T` sampled output vectors of one input with their predictive moments.
#[derive(Clone, Debug, PartialEq)]
pub struct McPrediction {
    /// `T × C`, one row per stochastic pass.
    pub samples: Matrix,
    pub mean: Vec<f64>,
    /// Population variance, divided by `T`.
    pub variance: Vec<f64>,
}

impl McPrediction {
    pub fn from_samples(samples: Matrix) -> Result<Self> {
        if samples.rows() < 2 {
            return Err(Error::invalid(format!("need at least 2 samples, got {}", samples.rows())));
        }
        samples.ensure_finite("mc samples")?;
        let (mean, variance) = moments(&samples.iter_rows().collect::<Vec<_>>(), samples.cols());
        Ok(Self {
            samples,
            mean,
            variance,
        })
    }

    pub fn t(&self) -> usize {
        self.samples.rows()
    }
}

/// Mean and population variance over the rows, summed in row order.
///
/// The mean is accumulated relative to the first row so identical samples
/// give exactly their common value and exactly zero variance.
fn moments(rows: &[&[f64]], c: usize) -> (Vec<f64>, Vec<f64>) {
    let t = rows.len() as f64;
    let mut mean = vec![0.0; c];
    for &row in rows {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= t);
    let mut var = vec![0.0; c];
    for &row in rows {
        for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    var.iter_mut().for_each(|s| *s /= t);
    // a column of identical samples has that value as its exact mean; the
    // rounded sum above can miss it by an ulp
    for j in 0..c {
        let first = rows[0][j];
        if rows.iter().all(|r| r[j].to_bits() == first.to_bits()) {
            mean[j] = first;
            var[j] = 0.0;
        }
    }
    (mean, var)
}

/// MC dropout predictions for a batch of inputs.
#[derive(Clone, Debug)]
pub struct McBatch {
    /// Per pass, the `N × C` class probabilities (`None` without a head).
    pub class_samples: Option<Vec<Matrix>>,
    pub class_mean: Option<Matrix>,
    pub class_variance: Option<Matrix>,
    /// `N × d` reconstruction predictive mean (`None` without a decoder).
    pub reconstruction_mean: Option<Matrix>,
}

impl McBatch {
    pub fn t(&self) -> usize {
        self.class_samples.as_ref().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.class_mean
            .as_ref()
            .or(self.reconstruction_mean.as_ref())
            .map_or(0, Matrix::rows)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Classifier samples of example `i` as a standalone prediction.
    pub fn prediction(&self, i: usize) -> Result<McPrediction> {
        let samples = self.class_samples.as_ref().ok_or(Error::MissingPathway("classifying"))?;
        if i >= self.len() {
            return Err(Error::invalid(format!("example {i} out of range for {} inputs", self.len())));
        }
        let rows: Vec<&[f64]> = samples.iter().map(|m| m.row(i)).collect();
        let c = rows[0].len();
        let mut flat = Vec::with_capacity(rows.len() * c);
        rows.iter().for_each(|r| flat.extend_from_slice(r));
        McPrediction::from_samples(Matrix::new(rows.len(), c, flat)?)
    }
}

/// Runs `t` stochastic passes over `x`.
///
/// One base seed is drawn from `rng` and pass `k` uses its own derived
/// stream, so passes may run in parallel while the result stays a pure
/// function of the generator state. Reductions run in pass order.
pub fn mc_sample(net: &PathwayNetwork, x: &Matrix, t: usize, rng: &mut Rng) -> Result<McBatch> {
    if t < 2 {
        return Err(Error::invalid(format!("MC dropout needs T >= 2, got {t}")));
    }
    let base = rng.next_u64();
    let n = x.rows();
    let mut class_samples = net.head().map(|_| Vec::with_capacity(t));
    let mut rec_sum = net.decoder().map(|_| Matrix::zeros(n, net.input_dim()));

    let mut start = 0;
    while start < t {
        let end = (start + PASSES_PER_WAVE).min(t);
        let wave: Vec<_> = (start..end)
            .into_par_iter()
            .map(|k| net.forward_all(x, &mut Rng::derive(base, k as u64), Sampling::Stochastic))
            .collect::<Result<_>>()?;
        for out in wave {
            if let (Some(cs), Some(p)) = (class_samples.as_mut(), out.probs) {
                cs.push(p);
            }
            if let (Some(sum), Some(r)) = (rec_sum.as_mut(), out.reconstruction.as_ref()) {
                sum.add_assign(r)?;
            }
        }
        start = end;
    }

    let (class_mean, class_variance) = match &class_samples {
        Some(cs) => {
            let c = cs[0].cols();
            let mut mean = Matrix::zeros(n, c);
            let mut var = Matrix::zeros(n, c);
            for i in 0..n {
                let (m, v) = moments(&cs.iter().map(|s| s.row(i)).collect::<Vec<_>>(), c);
                mean.row_mut(i).copy_from_slice(&m);
                var.row_mut(i).copy_from_slice(&v);
            }
            (Some(mean), Some(var))
        }
        None => (None, None),
    };
    let reconstruction_mean = rec_sum.map(|s| s.map(|v| v / t as f64));
    Ok(McBatch {
        class_samples,
        class_mean,
        class_variance,
        reconstruction_mean,
    })
}

/// MC prediction for a single input vector.
pub fn mc_sample_one(net: &PathwayNetwork, x: &[f64], t: usize, rng: &mut Rng) -> Result<McPrediction> {
    let batch = mc_sample(net, &Matrix::row_vector(x), t, rng)?;
    batch.prediction(0)
}

/// Natural-log entropy of a probability vector, with `0 ln 0 = 0`.
pub fn predictive_entropy(p: &[f64]) -> Result<f64> {
    if p.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::invalid("probabilities must be finite and non-negative"));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!("probabilities sum to {sum}, not 1")));
    }
    Ok(-p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>())
}

/// Test-set partition used by the entropy decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EntropyGroup {
    Normal,
    InDistributionFault,
    OutOfDistribution,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EntropyDecomposition {
    pub p0: f64,
    pub p1_in: f64,
    pub p1_ood: f64,
    pub total: f64,
}

/// Sums predictive-mean entropies per group. `groups[i]` tags row `i`;
/// a missing tag is an error.
pub fn decompose_entropy(means: &Matrix, groups: &[Option<EntropyGroup>]) -> Result<EntropyDecomposition> {
    if groups.len() != means.rows() {
        return Err(Error::shape("entropy groups", means.rows(), groups.len()));
    }
    let mut d = EntropyDecomposition::default();
    for (i, g) in groups.iter().enumerate() {
        let h = predictive_entropy(means.row(i))?;
        match g.ok_or_else(|| Error::invalid(format!("example {i} has no entropy group")))? {
            EntropyGroup::Normal => d.p0 += h,
            EntropyGroup::InDistributionFault => d.p1_in += h,
            EntropyGroup::OutOfDistribution => d.p1_ood += h,
        }
    }
    d.total = d.p0 + d.p1_in + d.p1_ood;
    Ok(d)
}

pub fn entropy_decomposition(
    net: &PathwayNetwork,
    x: &Matrix,
    groups: &[Option<EntropyGroup>],
    t: usize,
    rng: &mut Rng,
) -> Result<EntropyDecomposition> {
    if groups.len() != x.rows() {
        return Err(Error::shape("entropy groups", x.rows(), groups.len()));
    }
    let batch = mc_sample(net, x, t, rng)?;
    let means = batch.class_mean.ok_or(Error::MissingPathway("classifying"))?;
    decompose_entropy(&means, groups)
}

/// Histogram of each output column over `[lo, hi]` with `bins` equal bins.
///
/// CSV columns: output index, bin left edge, count. Values at `hi` fall in
/// the last bin; values outside the range are ignored.
pub fn histogram_csv(samples: &Matrix, bins: usize, lo: f64, hi: f64) -> Result<String> {
    if bins == 0 || !(hi > lo) {
        return Err(Error::invalid("histogram needs bins > 0 and hi > lo"));
    }
    let width = (hi - lo) / bins as f64;
    let mut s = String::from("output,bin_left,count\n");
    for j in 0..samples.cols() {
        let mut counts = vec![0usize; bins];
        for v in samples.column(j) {
            if v < lo || v > hi {
                continue;
            }
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        for (b, c) in counts.iter().enumerate() {
            let _ = writeln!(s, "{},{:.6},{}", j, lo + b as f64 * width, c);
        }
    }
    Ok(s)
}
