//! Conditional inference trees trained under repeated undersampling of
//! unbalanced two-class data.
//!
//! The pipeline is:
//!
//! 1. [`data`] loads a CSV corpus into a validated [`Dataset`] with a designated
//!    small class.
//! 2. [`resample`] draws repeated undersampling plans (all small-class rows plus
//!    a random fraction of the large class) and grows one [`ctree::Tree`] per plan.
//! 3. Each tree is scored with [`evaluate::prindt_accuracy`]: the balanced
//!    accuracy over every row, so the small class is scored as fit and the large
//!    class as fit plus hold-out prediction.
//! 4. [`constraints`] flags trees whose categorical splits group levels that the
//!    analyst has declared uninterpretable.
//! 5. [`ensemble`] combines interpretable trees into majority-vote ensembles.

pub mod constraints;
pub mod ctree;
pub mod data;
pub mod ensemble;
mod error;
pub mod evaluate;
pub mod resample;
pub mod stats;

pub use constraints::{check_tree, parse_rules, ExclusionRule, InterpretabilityVerdict, RuleKind};
pub use ctree::{grow, predict, Split, SplitRule, Tree, TreeParams};
pub use data::{load_csv, Class, ClassSpec, Column, Dataset, Frame, LoadOptions, VariableKind, VariableSchema};
pub use ensemble::{build_ensemble, ensemble_accuracy, ensemble_predict, Ensemble, EnsembleSelector, Threshold};
pub use error::{Error, Result};
pub use evaluate::{balanced_accuracy, histogram, overall_accuracy, prindt_accuracy, Histogram, Prediction};
pub use resample::{run_prindt, run_prindt_with, undersample_plan, Execution, RepetitionPlan, ResampleParams, TreeRecord};
