//! Linear max-margin classifier.
//!
//! Features are standardized with training-set statistics, a constant 1 is
//! appended for the bias, and the L2-regularized hinge objective
//! `lambda/2 |w|^2 + mean(max(0, 1 - y w.z))` is minimized by full-batch
//! projected subgradient descent with step `1 / (lambda t)`. The iterate with
//! the lowest objective is kept. `lambda` is chosen by stratified k-fold
//! cross-validation on the training set.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::seeding::{self, TAG_FOLDS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub lambdas: Vec<f64>,
    pub folds: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            lambdas: vec![1e-3, 1e-2, 1e-1, 1.0],
            folds: 5,
            iterations: 300,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearSvm {
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// Weights on standardized features; the last entry is the bias.
    weights: Vec<f64>,
    lambda: f64,
}

fn standardization(features: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = features[0].len();
    let n = features.len() as f64;
    let mut mean = vec![0.0; d];
    for f in features {
        for (m, x) in mean.iter_mut().zip(f) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for f in features {
        for ((v, x), m) in var.iter_mut().zip(f).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let scale = var
        .into_iter()
        .map(|v| {
            let sd = (v / n).sqrt();
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

impl LinearSvm {
    /// Cross-validates `lambda` over `config.lambdas`, then refits on all of
    /// `train`.
    pub fn fit(train: &LabeledDataset, config: &SvmConfig) -> Result<Self> {
        check_trainable(train)?;
        if config.lambdas.is_empty() || config.lambdas.iter().any(|&l| l.is_nan() || l <= 0.0) {
            return Err(Error::Fit("lambda grid must be non-empty and positive".into()));
        }
        let lambda = select_lambda(train, config)?;
        Self::fit_with_lambda(train, lambda, config.iterations)
    }

    pub fn fit_with_lambda(train: &LabeledDataset, lambda: f64, iterations: usize) -> Result<Self> {
        check_trainable(train)?;
        let (mean, scale) = standardization(&train.features);
        let rows: Vec<Vec<f64>> = train
            .features
            .iter()
            .map(|f| augment(f, &mean, &scale))
            .collect();
        let ys: Vec<f64> = train.labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
        let weights = pegasos(&rows, &ys, lambda, iterations.max(1));
        Ok(Self {
            mean,
            scale,
            weights,
            lambda,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        let z = augment(x, &self.mean, &self.scale);
        dot(&self.weights, &z)
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.decision(x) >= 0.0
    }

    pub fn predict_all(&self, data: &LabeledDataset) -> Vec<bool> {
        data.features.iter().map(|x| self.predict(x)).collect()
    }
}

fn check_trainable(train: &LabeledDataset) -> Result<()> {
    let (pos, neg) = train.class_counts();
    if pos == 0 || neg == 0 {
        return Err(Error::Fit(format!(
            "training set needs both classes, got {pos} positive / {neg} negative"
        )));
    }
    Ok(())
}

fn augment(x: &[f64], mean: &[f64], scale: &[f64]) -> Vec<f64> {
    let mut z: Vec<f64> = x
        .iter()
        .zip(mean)
        .zip(scale)
        .map(|((x, m), s)| (x - m) / s)
        .collect();
    z.push(1.0);
    z
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pegasos(rows: &[Vec<f64>], ys: &[f64], lambda: f64, iterations: usize) -> Vec<f64> {
    let d = rows[0].len();
    let n = rows.len() as f64;
    let radius = 1.0 / lambda.sqrt();
    let mut w = vec![0.0; d];
    let mut best = w.clone();
    let mut best_obj = f64::INFINITY;
    let mut sub = vec![0.0; d];
    for t in 1..=iterations + 1 {
        sub.fill(0.0);
        let mut hinge = 0.0;
        for (z, &y) in rows.iter().zip(ys) {
            let margin = y * dot(&w, z);
            if margin < 1.0 {
                hinge += 1.0 - margin;
                for (s, x) in sub.iter_mut().zip(z) {
                    *s += y * x;
                }
            }
        }
        let norm2 = dot(&w, &w);
        let obj = 0.5 * lambda * norm2 + hinge / n;
        if obj < best_obj {
            best_obj = obj;
            best.copy_from_slice(&w);
        }
        if t > iterations {
            break;
        }
        let eta = 1.0 / (lambda * t as f64);
        for (wk, s) in w.iter_mut().zip(&sub) {
            *wk -= eta * (lambda * *wk - s / n);
        }
        let norm = dot(&w, &w).sqrt();
        if norm > radius {
            w.iter_mut().for_each(|x| *x *= radius / norm);
        }
    }
    best
}

/// Stratified fold assignment, reproducible per seed.
fn fold_assignment(labels: &[bool], folds: usize, seed: u64) -> Vec<usize> {
    let mut assign = vec![0; labels.len()];
    for (g, class) in [true, false].into_iter().enumerate() {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut seeding::stream(seed, &[TAG_FOLDS, g as u64]));
        for (pos, i) in members.into_iter().enumerate() {
            assign[i] = pos % folds;
        }
    }
    assign
}

fn select_lambda(train: &LabeledDataset, config: &SvmConfig) -> Result<f64> {
    let mut grid = config.lambdas.clone();
    grid.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let (pos, neg) = train.class_counts();
    let folds = config.folds.min(pos).min(neg);
    if folds < 2 {
        // too few samples to cross-validate; take the middle of the grid
        return Ok(grid[grid.len() / 2]);
    }
    let assign = fold_assignment(&train.labels, folds, config.seed);
    let mut best = (f64::NEG_INFINITY, grid[0]);
    // grid is descending, so ties keep the stronger regularization
    for &lambda in &grid {
        let mut correct = 0usize;
        for fold in 0..folds {
            let tr: Vec<usize> = (0..train.len()).filter(|&i| assign[i] != fold).collect();
            let te: Vec<usize> = (0..train.len()).filter(|&i| assign[i] == fold).collect();
            let model = LinearSvm::fit_with_lambda(&train.subset(&tr), lambda, config.iterations)?;
            correct += te
                .iter()
                .filter(|&&i| model.predict(&train.features[i]) == train.labels[i])
                .count();
        }
        let acc = correct as f64 / train.len() as f64;
        if acc > best.0 {
            best = (acc, lambda);
        }
    }
    Ok(best.1)
}
