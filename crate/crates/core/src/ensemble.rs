//! Majority-vote ensembles of interpretable trees.

use rayon::prelude::*;

use crate::data::{Class, Dataset, Frame};
use crate::error::{Error, Result};
use crate::evaluate::{balanced_accuracy, lower_median, Prediction};
use crate::resample::TreeRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// Lower median of the balanced accuracies of all records, interpretable or not.
    MedianOfAll,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnsembleSelector {
    /// The k interpretable trees with the highest balanced accuracy.
    TopK(usize),
    AllInterpretable,
    /// Interpretable trees whose balanced accuracy is strictly above the threshold.
    AboveThreshold(Threshold),
}

impl EnsembleSelector {
    pub fn above_median() -> Self {
        EnsembleSelector::AboveThreshold(Threshold::MedianOfAll)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<TreeRecord>,
    selector: EnsembleSelector,
    /// Resolved threshold for `AboveThreshold` selectors.
    threshold: Option<f64>,
}

impl Ensemble {
    pub fn members(&self) -> &[TreeRecord] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn selector(&self) -> EnsembleSelector {
        self.selector
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }
}

pub fn build_ensemble(records: &[TreeRecord], selector: EnsembleSelector) -> Result<Ensemble> {
    if records.is_empty() {
        return Err(Error::argument("no tree records to build an ensemble from"));
    }
    let interpretable: Vec<&TreeRecord> = records.iter().filter(|r| r.interpretable).collect();
    let chain = format!("{} records -> {} interpretable", records.len(), interpretable.len());

    let (members, threshold, chain): (Vec<&TreeRecord>, Option<f64>, String) = match selector {
        EnsembleSelector::TopK(k) => {
            if k == 0 {
                return Err(Error::argument("top-k ensemble needs k >= 1"));
            }
            let mut ranked = interpretable;
            ranked.sort_by(|a, b| {
                b.balanced_accuracy
                    .total_cmp(&a.balanced_accuracy)
                    .then(a.rep_index.cmp(&b.rep_index))
            });
            ranked.truncate(k);
            let chain = format!("{chain} -> top {k}");
            (ranked, None, chain)
        }
        EnsembleSelector::AllInterpretable => (interpretable, None, chain),
        EnsembleSelector::AboveThreshold(t) => {
            let c = match t {
                Threshold::MedianOfAll => {
                    let all: Vec<f64> = records.iter().map(|r| r.balanced_accuracy).collect();
                    lower_median(&all).expect("records are non-empty")
                }
                Threshold::Value(c) => {
                    if !(0.0..=1.0).contains(&c) {
                        return Err(Error::argument(format!("threshold must lie in [0, 1], got {c}")));
                    }
                    c
                }
            };
            let above: Vec<&TreeRecord> = interpretable
                .into_iter()
                .filter(|r| r.balanced_accuracy > c)
                .collect();
            let chain = format!("{chain} -> {} above {c}", above.len());
            (above, Some(c), chain)
        }
    };
    if members.is_empty() {
        return Err(Error::EmptyEnsemble(chain));
    }
    Ok(Ensemble {
        members: members.into_iter().cloned().collect(),
        selector,
        threshold,
    })
}

/// Unweighted vote of the members' predicted labels; ties go to the small class.
pub fn ensemble_predict(e: &Ensemble, frame: &Frame, row: usize) -> Class {
    let small_votes = e
        .members
        .iter()
        .filter(|m| m.tree.leaf_for(frame, row).predicted() == Class::Small)
        .count();
    if 2 * small_votes >= e.members.len() {
        Class::Small
    } else {
        Class::Large
    }
}

pub fn ensemble_predict_all(e: &Ensemble, frame: &Frame) -> Vec<Class> {
    (0..frame.n_rows())
        .into_par_iter()
        .map(|row| ensemble_predict(e, frame, row))
        .collect()
}

/// Balanced accuracy of the ensemble's votes over every row of `ds`.
pub fn ensemble_accuracy(e: &Ensemble, ds: &Dataset) -> Result<f64> {
    let preds: Vec<Prediction> = ensemble_predict_all(e, ds.frame())
        .into_iter()
        .enumerate()
        .map(|(row_index, predicted)| Prediction { row_index, predicted })
        .collect();
    balanced_accuracy(&preds, ds)
}
