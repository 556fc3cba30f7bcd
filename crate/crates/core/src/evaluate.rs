//! Accuracy metrics.

use rayon::prelude::*;

use crate::ctree::Tree;
use crate::data::{Class, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prediction {
    pub row_index: usize,
    pub predicted: Class,
}

/// Fraction of predictions matching the true class.
pub fn overall_accuracy(preds: &[Prediction], ds: &Dataset) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::UndefinedMetric("no predictions".into()));
    }
    let correct = preds
        .iter()
        .filter(|p| ds.class_of(p.row_index) == p.predicted)
        .count();
    Ok(correct as f64 / preds.len() as f64)
}

/// Per-class accuracies `(small, large)`.
pub fn class_accuracies(preds: &[Prediction], ds: &Dataset) -> Result<[f64; 2]> {
    let mut total = [0usize; 2];
    let mut correct = [0usize; 2];
    for p in preds {
        let truth = ds.class_of(p.row_index);
        total[truth.index()] += 1;
        if truth == p.predicted {
            correct[truth.index()] += 1;
        }
    }
    for class in Class::BOTH {
        if total[class.index()] == 0 {
            return Err(Error::UndefinedMetric(format!(
                "no rows of class '{}' among the predictions",
                ds.class_spec().label(class)
            )));
        }
    }
    Ok([
        correct[0] as f64 / total[0] as f64,
        correct[1] as f64 / total[1] as f64,
    ])
}

/// Mean of the two per-class accuracies.
pub fn balanced_accuracy(preds: &[Prediction], ds: &Dataset) -> Result<f64> {
    let [small, large] = class_accuracies(preds, ds)?;
    Ok((small + large) / 2.0)
}

pub fn predict_all(tree: &Tree, ds: &Dataset) -> Vec<Prediction> {
    (0..ds.n_rows())
        .into_par_iter()
        .map(|row| Prediction {
            row_index: row,
            predicted: tree.leaf_for(ds.frame(), row).predicted(),
        })
        .collect()
}

/// Balanced accuracy of `tree` over every row of `ds`.
///
/// When the tree's training rows include the whole small class, this scores
/// the small class as fit and the large class as fit plus hold-out prediction.
pub fn prindt_accuracy(tree: &Tree, ds: &Dataset) -> Result<f64> {
    balanced_accuracy(&predict_all(tree, ds), ds)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bins: Vec<Bin>,
    pub min: f64,
    pub max: f64,
    pub median: f64,
}

/// Median with the lower of the two central order statistics for even counts.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(sorted[(sorted.len() - 1) / 2])
}

/// Equal-width bins over `[min, max]`; the last bin is closed on the right.
pub fn histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::argument("histogram needs at least one bin"));
    }
    if values.is_empty() {
        return Err(Error::argument("histogram of no values"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::argument("histogram values must be finite"));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (max - min) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = if width > 0.0 {
            (((v - min) / width).floor() as usize).min(bins - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    let bins = counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| Bin {
            low: min + width * i as f64,
            high: if i + 1 == bins { max } else { min + width * (i + 1) as f64 },
            count,
        })
        .collect();
    Ok(Histogram {
        bins,
        min,
        max,
        median: lower_median(values).expect("non-empty"),
    })
}
