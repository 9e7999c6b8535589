use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary confusion table; the positive class is `true` (phishing).
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// The same table seen from the negative class.
    pub fn flipped(&self) -> Self {
        Self {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
        }
    }
}

pub fn confusion(y_true: &[bool], y_pred: &[bool]) -> Result<ConfusionCounts> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Validation(format!(
            "label sequences differ in length: {} vs {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    Ok(c)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// `(precision, recall, f1)` from one class's counts.
pub fn precision_recall_f1(tp: u64, fp: u64, fn_: u64) -> (f64, f64, f64) {
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    (p, r, f1_score(p, r))
}

/// F1 of the globally pooled `(tp, fp, fn)` over all classes.
pub fn micro_f1(per_class: &[ConfusionCounts]) -> f64 {
    let (tp, fp, fn_) = per_class
        .iter()
        .fold((0, 0, 0), |(a, b, c), k| (a + k.tp, b + k.fp, c + k.fn_));
    precision_recall_f1(tp, fp, fn_).2
}

/// Unweighted mean of per-class F1 scores.
pub fn macro_f1(per_class_f1: &[f64]) -> f64 {
    if per_class_f1.is_empty() {
        return 0.0;
    }
    per_class_f1.iter().sum::<f64>() / per_class_f1.len() as f64
}

pub fn accuracy(c: &ConfusionCounts) -> f64 {
    ratio(c.tp + c.tn, c.total())
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Positive-class precision.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Pooled over both classes.
    pub micro_f1: f64,
    /// Mean of the two per-class F1 scores.
    pub macro_f1: f64,
}

impl MetricsReport {
    pub fn values(&self) -> [f64; 5] {
        [self.precision, self.recall, self.f1, self.micro_f1, self.macro_f1]
    }

    pub fn from_values(v: [f64; 5]) -> Self {
        Self {
            precision: v[0],
            recall: v[1],
            f1: v[2],
            micro_f1: v[3],
            macro_f1: v[4],
        }
    }
}

pub fn metrics(counts: &ConfusionCounts) -> MetricsReport {
    let neg = counts.flipped();
    let (precision, recall, f1) = precision_recall_f1(counts.tp, counts.fp, counts.fn_);
    let (_, _, f1_neg) = precision_recall_f1(neg.tp, neg.fp, neg.fn_);
    MetricsReport {
        precision,
        recall,
        f1,
        micro_f1: micro_f1(&[*counts, neg]),
        macro_f1: macro_f1(&[f1, f1_neg]),
    }
}
