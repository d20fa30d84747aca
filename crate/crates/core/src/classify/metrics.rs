use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Classification metrics. For `k = 2` precision, recall, specificity and F
/// refer to class 1 as the positive class; for `k > 2` they are macro
/// averages of the one-vs-rest values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    pub f_measure: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Binary {
    precision: f64,
    recall: f64,
    specificity: f64,
    f: f64,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn one_vs_rest(conf: &[Vec<usize>], c: usize) -> Binary {
    let k = conf.len();
    let tp = conf[c][c];
    let fn_: usize = (0..k).filter(|&p| p != c).map(|p| conf[c][p]).sum();
    let fp: usize = (0..k).filter(|&t| t != c).map(|t| conf[t][c]).sum();
    let total: usize = conf.iter().flatten().sum();
    let tn = total - tp - fn_ - fp;
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Binary {
        precision,
        recall,
        specificity: ratio(tn, tn + fp),
        f,
    }
}

impl Metrics {
    pub fn from_predictions(truth: &[usize], predicted: &[usize], k: usize) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::invalid("cannot score an empty test set"));
        }
        if truth.len() != predicted.len() {
            return Err(Error::invalid("truth and prediction lengths differ"));
        }
        let mut confusion = vec![vec![0usize; k]; k];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= k || p >= k {
                return Err(Error::invalid(format!(
                    "class index out of range for k = {k}"
                )));
            }
            confusion[t][p] += 1;
        }
        Ok(Self::from_confusion(confusion))
    }

    pub fn from_confusion(confusion: Vec<Vec<usize>>) -> Self {
        let k = confusion.len();
        let total: usize = confusion.iter().flatten().sum();
        let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
        let (precision, recall, specificity, f_measure) = if k == 2 {
            let b = one_vs_rest(&confusion, 1);
            (b.precision, b.recall, b.specificity, b.f)
        } else {
            let per: Vec<Binary> = (0..k).map(|c| one_vs_rest(&confusion, c)).collect();
            let avg = |f: fn(&Binary) -> f64| per.iter().map(f).sum::<f64>() / k as f64;
            (
                avg(|b| b.precision),
                avg(|b| b.recall),
                avg(|b| b.specificity),
                avg(|b| b.f),
            )
        };
        Self {
            accuracy: ratio(correct, total),
            precision,
            recall,
            specificity,
            f_measure,
            confusion,
        }
    }

    /// `[accuracy, precision, recall, specificity, f_measure]`.
    pub fn values(&self) -> [f64; 5] {
        [
            self.accuracy,
            self.precision,
            self.recall,
            self.specificity,
            self.f_measure,
        ]
    }

    pub const NAMES: [&'static str; 5] = [
        "accuracy",
        "precision",
        "recall",
        "specificity",
        "f_measure",
    ];
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect() {
        let m = Metrics::from_predictions(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap();
        assert_eq!(m.values(), [1.0; 5]);
    }

    #[test]
    fn binary_arithmetic() {
        // rows: truth 0 (negative), truth 1 (positive)
        let m = Metrics::from_confusion(vec![vec![12, 1], vec![2, 5]]);
        let (p, r) = (5.0 / 6.0, 5.0 / 7.0);
        assert!((m.precision - p).abs() < 1e-15);
        assert!((m.recall - r).abs() < 1e-15);
        assert!((m.specificity - 12.0 / 13.0).abs() < 1e-15);
        assert!((m.f_measure - 2.0 * p * r / (p + r)).abs() < 1e-12);
        assert_eq!(m.accuracy, 17.0 / 20.0);
    }

    #[test]
    fn constant_predictor() {
        let truth = [0, 0, 1, 1];
        let m = Metrics::from_predictions(&truth, &[1, 1, 1, 1], 2).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.specificity, 0.0);
        let m = Metrics::from_predictions(&truth, &[0, 0, 0, 0], 2).unwrap();
        assert_eq!(m.specificity, 1.0);
        assert_eq!(m.recall, 0.0);
    }

    #[test]
    fn confusion_rows_match_class_counts() {
        let truth = [0, 0, 1, 2, 2, 2];
        let m = Metrics::from_predictions(&truth, &[1, 0, 1, 0, 2, 2], 3).unwrap();
        let rows: Vec<usize> = m.confusion.iter().map(|r| r.iter().sum()).collect();
        assert_eq!(rows, vec![2, 1, 3]);
        assert!(Metrics::from_predictions(&[], &[], 3).is_err());
    }
}
