//! Repeated undersampling and the training loop.
//!
//! Repetition `i` draws its large-class sample from a ChaCha8 stream seeded
//! with `repetition_seed(master_seed, i)`, so any subset of repetitions can be
//! computed in any order, serially or in parallel, with identical results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constraints::{check_tree, ExclusionRule};
use crate::ctree::{grow, Tree, TreeParams};
use crate::data::{Class, Dataset};
use crate::error::{Error, Result};
use crate::evaluate::prindt_accuracy;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleParams {
    /// Fraction of the large class drawn for training.
    pub fraction: f64,
    /// Number of repetitions.
    pub reps: usize,
    pub master_seed: u64,
}

impl ResampleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::argument(format!(
                "fraction must lie in (0, 1], got {}",
                self.fraction
            )));
        }
        if self.reps == 0 {
            return Err(Error::argument("reps must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepetitionPlan {
    pub rep_index: usize,
    /// All small-class rows plus the sampled large-class rows, ascending.
    pub train_rows: Vec<usize>,
    /// Large-class rows left out of training, ascending.
    pub holdout_rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeRecord {
    pub rep_index: usize,
    pub tree: Tree,
    pub balanced_accuracy: f64,
    pub interpretable: bool,
    pub violations: usize,
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of repetition `rep_index`: `splitmix64(master_seed ^ splitmix64(rep_index))`.
pub fn repetition_seed(master_seed: u64, rep_index: usize) -> u64 {
    splitmix64(master_seed ^ splitmix64(rep_index as u64))
}

/// round_half_up(fraction × n_large).
pub fn sample_size(fraction: f64, n_large: usize) -> usize {
    (fraction * n_large as f64 + 0.5).floor() as usize
}

pub fn undersample_plan(ds: &Dataset, params: &ResampleParams, rep_index: usize) -> Result<RepetitionPlan> {
    params.validate()?;
    if rep_index >= params.reps {
        return Err(Error::argument(format!(
            "repetition {rep_index} out of range for {} reps",
            params.reps
        )));
    }
    let small = ds.rows_of(Class::Small);
    let mut large = ds.rows_of(Class::Large);
    let k = sample_size(params.fraction, large.len()).min(large.len());
    if k == 0 {
        return Err(Error::argument(format!(
            "fraction {} of {} large-class rows samples nothing",
            params.fraction,
            large.len()
        )));
    }

    // Partial Fisher–Yates: the first k slots become the sample.
    let mut rng = ChaCha8Rng::seed_from_u64(repetition_seed(params.master_seed, rep_index));
    for i in 0..k {
        let j = rng.gen_range(i..large.len());
        large.swap(i, j);
    }
    let (sampled, rest) = large.split_at(k);

    let mut train_rows: Vec<usize> = small.into_iter().chain(sampled.iter().copied()).collect();
    train_rows.sort_unstable();
    let mut holdout_rows = rest.to_vec();
    holdout_rows.sort_unstable();
    Ok(RepetitionPlan {
        rep_index,
        train_rows,
        holdout_rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Runs every repetition in parallel; see [`run_prindt_with`].
pub fn run_prindt(
    ds: &Dataset,
    tree_params: &TreeParams,
    res_params: &ResampleParams,
    rules: &[ExclusionRule],
) -> Result<Vec<TreeRecord>> {
    run_prindt_with(ds, tree_params, res_params, rules, Execution::Parallel)
}

/// Plans, grows, scores and checks one tree per repetition. Records come back
/// ordered by repetition index regardless of `exec`.
pub fn run_prindt_with(
    ds: &Dataset,
    tree_params: &TreeParams,
    res_params: &ResampleParams,
    rules: &[ExclusionRule],
    exec: Execution,
) -> Result<Vec<TreeRecord>> {
    tree_params.validate()?;
    res_params.validate()?;
    let one = |rep: usize| {
        run_repetition(ds, tree_params, res_params, rules, rep).map_err(|e| Error::Repetition {
            rep,
            source: Box::new(e),
        })
    };
    let results: Vec<Result<TreeRecord>> = match exec {
        Execution::Serial => (0..res_params.reps).map(one).collect(),
        Execution::Parallel => (0..res_params.reps).into_par_iter().map(one).collect(),
    };
    // first error by repetition index, independent of scheduling
    results.into_iter().collect()
}

pub fn run_repetition(
    ds: &Dataset,
    tree_params: &TreeParams,
    res_params: &ResampleParams,
    rules: &[ExclusionRule],
    rep_index: usize,
) -> Result<TreeRecord> {
    let plan = undersample_plan(ds, res_params, rep_index)?;
    let tree = grow(ds, &plan.train_rows, tree_params)?;
    let balanced_accuracy = prindt_accuracy(&tree, ds)?;
    let verdict = check_tree(&tree, rules);
    Ok(TreeRecord {
        rep_index,
        balanced_accuracy,
        interpretable: verdict.interpretable(),
        violations: verdict.violations.len(),
        tree,
    })
}
