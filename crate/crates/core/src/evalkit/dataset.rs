use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{self, TAG_SPLIT};
use crate::sgns::NodeEmbeddings;

/// Labeled feature vectors; `true` is the positive (phishing) class.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabeledDataset {
    pub ids: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

impl LabeledDataset {
    pub fn new(ids: Vec<String>, features: Vec<Vec<f64>>, labels: Vec<bool>) -> Result<Self> {
        if ids.len() != features.len() || ids.len() != labels.len() {
            return Err(Error::Validation(
                "ids, features and labels must have equal length".into(),
            ));
        }
        if let Some(first) = features.first() {
            if features.iter().any(|f| f.len() != first.len()) {
                return Err(Error::Validation("feature vectors differ in dimension".into()));
            }
        }
        Ok(Self { ids, features, labels })
    }

    /// Looks up each labeled node's vector.
    pub fn from_embeddings(embeddings: &NodeEmbeddings, labels: &[(String, bool)]) -> Result<Self> {
        let mut ds = Self::default();
        for (id, label) in labels {
            let v = embeddings
                .get(id)
                .ok_or_else(|| Error::UnknownNode(id.clone()))?;
            ds.ids.push(id.clone());
            ds.features.push(v.to_vec());
            ds.labels.push(*label);
        }
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// `(positives, negatives)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l).count();
        (pos, self.labels.len() - pos)
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_ratio: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(train_ratio: f64, seed: u64) -> Self {
        Self {
            train_ratio,
            seed,
            stratified: true,
        }
    }
}

fn take_count(n: usize, ratio: f64) -> usize {
    ((ratio * n as f64).round() as usize).clamp(1, n - 1)
}

/// Random train/test partition, stratified by class when requested. Both
/// halves keep the dataset's original order.
pub fn split(dataset: &LabeledDataset, spec: &SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(spec.train_ratio > 0.0 && spec.train_ratio < 1.0) {
        return Err(Error::Split(format!(
            "train ratio must lie in (0, 1), got {}",
            spec.train_ratio
        )));
    }
    let groups: Vec<Vec<usize>> = if spec.stratified {
        [true, false]
            .iter()
            .map(|&class| (0..dataset.len()).filter(|&i| dataset.labels[i] == class).collect())
            .collect()
    } else {
        vec![(0..dataset.len()).collect()]
    };
    let mut train = Vec::new();
    for (g, mut members) in groups.into_iter().enumerate() {
        if members.len() < 2 {
            return Err(Error::Split(format!(
                "need at least 2 samples per group, got {}",
                members.len()
            )));
        }
        members.shuffle(&mut seeding::stream(spec.seed, &[TAG_SPLIT, g as u64]));
        let k = take_count(members.len(), spec.train_ratio);
        train.extend_from_slice(&members[..k]);
    }
    train.sort_unstable();
    let mut in_train = vec![false; dataset.len()];
    for &i in &train {
        in_train[i] = true;
    }
    let test: Vec<usize> = (0..dataset.len()).filter(|&i| !in_train[i]).collect();
    Ok((dataset.subset(&train), dataset.subset(&test)))
}
