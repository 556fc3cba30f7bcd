//! Batch front end: `train`, `predict` and `check`.
//!
//! Commands take their output streams as arguments so they can be driven
//! from tests; `main` wires them to stdout and stderr.

pub mod model;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use prindt_core::constraints::{check_tree, parse_rules, ExclusionRule};
use prindt_core::ctree::TreeParams;
use prindt_core::data::{load_csv, load_frame_with_schema, ColumnKind, Dataset, LoadOptions};
use prindt_core::ensemble::{build_ensemble, ensemble_accuracy, ensemble_predict_all, EnsembleSelector, Threshold};
use prindt_core::evaluate::{histogram, lower_median};
use prindt_core::resample::{run_prindt_with, Execution, ResampleParams, TreeRecord};
use prindt_core::Error as CoreError;

use model::ModelFile;

/// Size of ensemble a.
pub const TOP_K: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: PathBuf,
    pub class_col: String,
    pub small_class: Option<String>,
    /// `None` uses every non-class column.
    pub predictors: Option<Vec<String>>,
    /// Columns read as categorical even when every value is numeric.
    pub categorical: Vec<String>,
    pub fraction: f64,
    pub reps: usize,
    pub alpha: f64,
    pub min_split: usize,
    pub min_bucket: usize,
    pub max_levels: usize,
    pub constraints: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
    pub bins: usize,
    pub execution: Execution,
}

impl RunConfig {
    /// Defaults for everything except the paths, class column and seed.
    pub fn new(data: impl Into<PathBuf>, class_col: impl Into<String>, seed: u64, out: impl Into<PathBuf>) -> Self {
        let tp = TreeParams::default();
        RunConfig {
            data: data.into(),
            class_col: class_col.into(),
            small_class: None,
            predictors: None,
            categorical: Vec::new(),
            fraction: 0.09,
            reps: 1001,
            alpha: tp.alpha,
            min_split: tp.min_split,
            min_bucket: tp.min_bucket,
            max_levels: tp.max_levels_for_split_search,
            constraints: None,
            seed,
            out: out.into(),
            bins: 20,
            execution: Execution::Parallel,
        }
    }

    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            alpha: self.alpha,
            min_split: self.min_split,
            min_bucket: self.min_bucket,
            max_levels_for_split_search: self.max_levels,
        }
    }

    pub fn resample_params(&self) -> ResampleParams {
        ResampleParams {
            fraction: self.fraction,
            reps: self.reps,
            master_seed: self.seed,
        }
    }

    fn load_options(&self) -> LoadOptions {
        let mut opts = LoadOptions::new(&self.class_col);
        opts.small_label = self.small_class.clone();
        opts.predictors = self.predictors.clone();
        opts.overrides = self
            .categorical
            .iter()
            .map(|c| (c.clone(), ColumnKind::Categorical))
            .collect::<HashMap<_, _>>();
        opts
    }
}

/// Ensemble selector as written on the command line: `a`, `b`, `c`, `all`,
/// `top:K` or `above:X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectorArg {
    A,
    B,
    C,
    Top(usize),
    Above(f64),
}

impl std::str::FromStr for SelectorArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "a" => Ok(SelectorArg::A),
            "b" | "all" => Ok(SelectorArg::B),
            "c" => Ok(SelectorArg::C),
            _ => {
                if let Some(k) = s.strip_prefix("top:") {
                    let k: usize = k.parse().map_err(|_| format!("bad k in '{s}'"))?;
                    if k == 0 {
                        return Err("top:K needs K >= 1".into());
                    }
                    Ok(SelectorArg::Top(k))
                } else if let Some(x) = s.strip_prefix("above:") {
                    let x: f64 = x.parse().map_err(|_| format!("bad threshold in '{s}'"))?;
                    if !(0.0..=1.0).contains(&x) {
                        return Err("above:X needs X in [0, 1]".into());
                    }
                    Ok(SelectorArg::Above(x))
                } else {
                    Err(format!("unknown selector '{s}' (expected a, b, c, all, top:K or above:X)"))
                }
            }
        }
    }
}

impl SelectorArg {
    /// Core selector; `c` resolves to the median stored with the model.
    fn resolve(self, model_median: f64) -> EnsembleSelector {
        match self {
            SelectorArg::A => EnsembleSelector::TopK(TOP_K),
            SelectorArg::B => EnsembleSelector::AllInterpretable,
            SelectorArg::C => EnsembleSelector::AboveThreshold(Threshold::Value(model_median)),
            SelectorArg::Top(k) => EnsembleSelector::TopK(k),
            SelectorArg::Above(x) => EnsembleSelector::AboveThreshold(Threshold::Value(x)),
        }
    }
}

/// Output files of a training run, in write order.
pub const TRAIN_OUTPUTS: [&str; 5] = ["records.csv", "ensembles.csv", "histogram.csv", "model.json", "report.txt"];

fn read_rules(path: Option<&Path>) -> Result<Vec<ExclusionRule>> {
    match path {
        None => Ok(Vec::new()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading constraints file {}", p.display()))?;
            parse_rules(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn warn_unknown_variables(rules: &[ExclusionRule], known: &[&str], stderr: &mut dyn Write) -> Result<()> {
    for rule in rules {
        if !known.contains(&rule.variable.as_str()) {
            writeln!(stderr, "warning: rule '{rule}' names unknown variable '{}'", rule.variable)?;
        }
    }
    Ok(())
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

struct EnsembleRow {
    name: &'static str,
    n_trees: usize,
    balanced_accuracy: Option<f64>,
}

fn ensemble_row(
    name: &'static str,
    records: &[TreeRecord],
    selector: EnsembleSelector,
    ds: &Dataset,
    stderr: &mut dyn Write,
) -> Result<EnsembleRow> {
    match build_ensemble(records, selector) {
        Ok(e) => Ok(EnsembleRow {
            name,
            n_trees: e.len(),
            balanced_accuracy: Some(ensemble_accuracy(&e, ds)?),
        }),
        Err(CoreError::EmptyEnsemble(chain)) => {
            writeln!(stderr, "warning: ensemble {name} is empty ({chain})")?;
            Ok(EnsembleRow {
                name,
                n_trees: 0,
                balanced_accuracy: None,
            })
        }
        Err(e) => Err(e.into()),
    }
}

/// Trains, evaluates and writes every output file. Nothing is written unless
/// the whole run succeeds.
pub fn cmd_train(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let tree_params = cfg.tree_params();
    let res_params = cfg.resample_params();
    tree_params.validate()?;
    res_params.validate()?;
    if cfg.bins == 0 {
        bail!("--bins must be >= 1");
    }
    let rules = read_rules(cfg.constraints.as_deref())?;
    let ds = load_csv(&cfg.data, &cfg.load_options()).with_context(|| format!("loading {}", cfg.data.display()))?;
    let names: Vec<&str> = ds.schema().iter().map(|v| v.name.as_str()).collect();
    warn_unknown_variables(&rules, &names, stderr)?;

    let records = run_prindt_with(&ds, &tree_params, &res_params, &rules, cfg.execution)?;
    let accuracies: Vec<f64> = records.iter().map(|r| r.balanced_accuracy).collect();
    let median = lower_median(&accuracies).expect("reps >= 1");
    let hist = histogram(&accuracies, cfg.bins)?;

    let ensembles = [
        ensemble_row("a", &records, EnsembleSelector::TopK(TOP_K), &ds, stderr)?,
        ensemble_row("b", &records, EnsembleSelector::AllInterpretable, &ds, stderr)?,
        ensemble_row("c", &records, EnsembleSelector::above_median(), &ds, stderr)?,
    ];

    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    files.push((
        "records.csv".into(),
        csv_bytes(
            &["rep", "balanced_accuracy", "interpretable", "n_nodes", "n_leaves"],
            records.iter().map(|r| {
                vec![
                    r.rep_index.to_string(),
                    r.balanced_accuracy.to_string(),
                    r.interpretable.to_string(),
                    r.tree.n_nodes().to_string(),
                    r.tree.n_leaves().to_string(),
                ]
            }),
        )?,
    ));
    files.push((
        "ensembles.csv".into(),
        csv_bytes(
            &["selector", "n_trees", "balanced_accuracy"],
            ensembles.iter().map(|e| {
                vec![
                    e.name.to_string(),
                    e.n_trees.to_string(),
                    e.balanced_accuracy.map_or_else(|| "NA".to_string(), |b| b.to_string()),
                ]
            }),
        )?,
    ));
    files.push((
        "histogram.csv".into(),
        csv_bytes(
            &["bin_low", "bin_high", "count"],
            hist.bins
                .iter()
                .map(|b| vec![b.low.to_string(), b.high.to_string(), b.count.to_string()]),
        )?,
    ));

    let interpretable: Vec<&TreeRecord> = records.iter().filter(|r| r.interpretable).collect();
    let model = ModelFile::new(ds.schema(), ds.class_spec(), &tree_params, &res_params, median, &interpretable);
    let mut json = serde_json::to_vec_pretty(&model)?;
    json.push(b'\n');
    files.push(("model.json".into(), json));

    let mut top: Vec<&TreeRecord> = interpretable.clone();
    top.sort_by(|a, b| {
        b.balanced_accuracy
            .total_cmp(&a.balanced_accuracy)
            .then(a.rep_index.cmp(&b.rep_index))
    });
    for (i, r) in top.iter().take(TOP_K).enumerate() {
        files.push((format!("tree_top{}.dot", i + 1), r.tree.to_dot(ds.class_spec()).into_bytes()));
    }

    let uninterpretable = records.len() - interpretable.len();
    let (n_small, n_large) = ds.class_counts();
    let mut report = String::new();
    writeln!(report, "data: {}", cfg.data.display())?;
    writeln!(
        report,
        "rows: {} ({} '{}', {} '{}')",
        ds.n_rows(),
        n_small,
        ds.class_spec().small_label(),
        n_large,
        ds.class_spec().large_label()
    )?;
    writeln!(report, "predictors: {}", names.join(", "))?;
    writeln!(
        report,
        "repetitions: {} (fraction {}, seed {})",
        cfg.reps, cfg.fraction, cfg.seed
    )?;
    writeln!(report, "rules: {}", rules.len())?;
    writeln!(report, "uninterpretable trees: {uninterpretable}")?;
    writeln!(report, "balanced accuracy min: {}", hist.min)?;
    writeln!(report, "balanced accuracy max: {}", hist.max)?;
    writeln!(report, "balanced accuracy median: {}", hist.median)?;
    for e in &ensembles {
        let ba = e.balanced_accuracy.map_or_else(|| "NA".to_string(), |b| b.to_string());
        writeln!(report, "ensemble {}: {} trees, balanced accuracy {}", e.name, e.n_trees, ba)?;
    }
    files.push(("report.txt".into(), report.clone().into_bytes()));

    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    for (name, bytes) in &files {
        let path = cfg.out.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    }
    stdout.write_all(report.as_bytes())?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing model {}", path.display()))
}

/// Writes `row,predicted_class` for every row of `data`, rows numbered from 0.
pub fn cmd_predict(
    model_path: &Path,
    data: &Path,
    selector: SelectorArg,
    out: &Path,
    stdout: &mut dyn Write,
) -> Result<()> {
    let model = read_model(model_path)?;
    let schema = model.variable_schema()?;
    let spec = model.class_spec()?;
    let records = model.records()?;
    if records.is_empty() {
        bail!("model {} holds no trees", model_path.display());
    }
    let frame = load_frame_with_schema(data, &schema).with_context(|| format!("loading {}", data.display()))?;
    let ensemble = build_ensemble(&records, selector.resolve(model.median_balanced_accuracy))?;
    let predictions = ensemble_predict_all(&ensemble, &frame);
    let bytes = csv_bytes(
        &["row", "predicted_class"],
        predictions
            .iter()
            .enumerate()
            .map(|(i, &c)| vec![i.to_string(), spec.label(c).to_string()]),
    )?;
    fs::write(out, bytes).with_context(|| format!("writing {}", out.display()))?;
    writeln!(
        stdout,
        "{} rows predicted with {} trees -> {}",
        predictions.len(),
        ensemble.len(),
        out.display()
    )?;
    Ok(())
}

/// Re-audits every stored tree against a rule file. Violations are reported,
/// not treated as failure.
pub fn cmd_check(model_path: &Path, constraints: &Path, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let model = read_model(model_path)?;
    let rules = read_rules(Some(constraints))?;
    let schema = model.variable_schema()?;
    let names: Vec<&str> = schema.iter().map(|v| v.name.as_str()).collect();
    warn_unknown_variables(&rules, &names, stderr)?;
    let records = model.records()?;
    let mut flagged = 0;
    for r in &records {
        let verdict = check_tree(&r.tree, &rules);
        if verdict.interpretable() {
            writeln!(stdout, "rep {}: interpretable", r.rep_index)?;
            continue;
        }
        flagged += 1;
        writeln!(stdout, "rep {}: {} violation(s)", r.rep_index, verdict.violations.len())?;
        for v in &verdict.violations {
            writeln!(stdout, "  {} matched by split on {}", v.rule, describe_split(&v.split))?;
        }
    }
    writeln!(
        stdout,
        "{} of {} trees uninterpretable under {} rule(s)",
        flagged,
        records.len(),
        rules.len()
    )?;
    Ok(())
}

fn describe_split(split: &prindt_core::ctree::Split) -> String {
    use prindt_core::ctree::SplitRule;
    match split.rule() {
        SplitRule::Numeric { threshold } => format!("{} <= {threshold}", split.variable()),
        SplitRule::Categorical(part) => format!(
            "{} {{{}}} | {{{}}}",
            split.variable(),
            part.left().join(", "),
            part.right().join(", ")
        ),
    }
}
