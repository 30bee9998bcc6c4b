//! Synthetic stand-in for a chiller fault dataset with severity levels.
//!
//! Normal data is a standard Gaussian at the origin. Fault `k` has a random
//! unit direction `v_k` scaled to `fault_length`; severity `s` of `S`
//! centres its cluster at `(s / S) v_k` with unit isotropic noise. The top
//! severity is the trainable fault, lower severities are incipient, and the
//! last fault type is held out as unknown.

use crate::error::{Error, Result};
use crate::nn::{Matrix, Rng};

use super::{DatasetKind, Group, LabeledDataset};

const DIRECTION_STREAM: u64 = 1;
const SAMPLE_STREAM: u64 = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct ChillerConfig {
    /// Examples per normal cluster and per (fault, severity) cluster.
    pub n_per_class: usize,
    pub dim: usize,
    pub n_faults: usize,
    pub severities: u32,
    pub fault_length: f64,
}

impl Default for ChillerConfig {
    fn default() -> Self {
        Self {
            n_per_class: 200,
            dim: 16,
            n_faults: 7,
            severities: 4,
            fault_length: 6.0,
        }
    }
}

impl ChillerConfig {
    /// Fault directions `v_1..v_n` as rows, each of length `fault_length`.
    pub fn directions(&self, seed: u64) -> Matrix {
        let mut rng = Rng::derive(seed, DIRECTION_STREAM);
        let mut m = Matrix::zeros(self.n_faults, self.dim);
        for k in 0..self.n_faults {
            let row = m.row_mut(k);
            loop {
                row.iter_mut().for_each(|v| *v = rng.normal());
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 1e-8 {
                    row.iter_mut().for_each(|v| *v *= self.fault_length / norm);
                    break;
                }
            }
        }
        m
    }

    /// Cluster centre of fault `k` (1-based) at severity `s`.
    pub fn centre(&self, directions: &Matrix, k: usize, s: u32) -> Vec<f64> {
        let scale = s as f64 / self.severities as f64;
        directions.row(k - 1).iter().map(|v| v * scale).collect()
    }
}

pub fn gen_chiller_surrogate(seed: u64, cfg: &ChillerConfig) -> Result<LabeledDataset> {
    if cfg.n_faults < 2 || cfg.severities < 1 || cfg.dim == 0 || cfg.n_per_class == 0 {
        return Err(Error::invalid("chiller surrogate needs 2+ faults, 1+ severities, and non-empty clusters"));
    }
    let directions = cfg.directions(seed);
    let mut rng = Rng::derive(seed, SAMPLE_STREAM);
    let mut rows = Vec::new();
    let mut groups = Vec::new();
    let mut draw = |centre: &[f64], group: Group, rows: &mut Vec<Vec<f64>>| {
        for _ in 0..cfg.n_per_class {
            rows.push(centre.iter().map(|c| c + rng.normal()).collect());
            groups.push(group);
        }
    };
    draw(&vec![0.0; cfg.dim], Group::Normal, &mut rows);
    let unknown = cfg.n_faults;
    for k in 1..=cfg.n_faults {
        for s in 1..=cfg.severities {
            let group = if k == unknown {
                Group::Unknown
            } else if s == cfg.severities {
                Group::Fault(k)
            } else {
                Group::Incipient { class: k, severity: s }
            };
            draw(&cfg.centre(&directions, k, s), group, &mut rows);
        }
    }
    LabeledDataset::new(DatasetKind::Chiller, Matrix::from_rows(&rows)?, groups, cfg.n_faults)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn centres_by_construction() {
        let cfg = ChillerConfig::default();
        let dirs = cfg.directions(5);
        for k in 1..=cfg.n_faults {
            assert!((norm(&cfg.centre(&dirs, k, 4)) - 6.0).abs() < 1e-12);
            assert!((norm(&cfg.centre(&dirs, k, 1)) - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn layout_and_groups() {
        let cfg = ChillerConfig {
            n_per_class: 10,
            ..ChillerConfig::default()
        };
        let d = gen_chiller_surrogate(1, &cfg).unwrap();
        assert_eq!(d.dim(), 16);
        assert_eq!(d.len(), 10 * (1 + 7 * 4));
        assert_eq!(d.n_classes, 7);
        assert_eq!(d.groups.iter().filter(|&&g| g == Group::Unknown).count(), 40);
        assert_eq!(d.groups.iter().filter(|g| matches!(g, Group::Fault(_))).count(), 60);
        assert_eq!(d.groups.iter().filter(|g| matches!(g, Group::Incipient { .. })).count(), 180);
    }

    #[test]
    fn sample_means_near_centres() {
        let cfg = ChillerConfig {
            n_per_class: 4000,
            n_faults: 2,
            ..ChillerConfig::default()
        };
        let d = gen_chiller_surrogate(3, &cfg).unwrap();
        let dirs = cfg.directions(3);
        let idx = d.indices_where(|g| g == Group::Fault(1));
        let mean = d.x.select_rows(&idx).column_means();
        let centre = cfg.centre(&dirs, 1, 4);
        let err: Vec<f64> = mean.iter().zip(&centre).map(|(a, b)| a - b).collect();
        // standard error per coordinate is 1/sqrt(4000) ≈ 0.016
        assert!(norm(&err) < 0.2, "{}", norm(&err));
    }

    #[test]
    fn seed_deterministic() {
        let cfg = ChillerConfig {
            n_per_class: 5,
            ..ChillerConfig::default()
        };
        assert_eq!(gen_chiller_surrogate(8, &cfg).unwrap(), gen_chiller_surrogate(8, &cfg).unwrap());
        assert_ne!(gen_chiller_surrogate(8, &cfg).unwrap().x, gen_chiller_surrogate(9, &cfg).unwrap().x);
    }
}
