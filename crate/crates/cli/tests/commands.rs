mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use prindt_cli::model::ModelFile;
use prindt_cli::{cmd_check, cmd_predict, cmd_train, read_model, RunConfig, SelectorArg, TRAIN_OUTPUTS};
use prindt_core::ctree::{Node, Split, Tree, TreeParams};
use prindt_core::data::VariableSchema;
use prindt_core::resample::{ResampleParams, TreeRecord};

fn train(cfg: &RunConfig) -> (String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    cmd_train(cfg, &mut out, &mut err).unwrap();
    (String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn small_config(dir: &Path, reps: usize) -> RunConfig {
    let data = dir.join("corpus.csv");
    common::write_corpus(&data, 7, 600);
    let mut cfg = RunConfig::new(data, "PRN", 99, dir.join("out"));
    cfg.reps = reps;
    cfg.fraction = 0.3;
    cfg
}

#[test]
fn five_reps_on_small_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("small.csv");
    common::write_corpus(&data, 1, 100);
    let mut cfg = RunConfig::new(&data, "PRN", 3, dir.path().join("out"));
    cfg.reps = 5;
    cfg.fraction = 0.5;
    train(&cfg);
    let records = common::read_csv(&cfg.out.join("records.csv"));
    assert_eq!(records.len(), 5);
    let reps: Vec<&str> = records.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(reps, ["0", "1", "2", "3", "4"]);
}

#[test]
fn train_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path(), 20);
    let rules = dir.path().join("rules.txt");
    fs::write(&rules, "ETH == {S/C, S/m}\n").unwrap();
    cfg.constraints = Some(rules);
    let (report, _) = train(&cfg);
    for name in TRAIN_OUTPUTS {
        assert!(cfg.out.join(name).is_file(), "{name} missing");
    }
    let ensembles = common::read_csv(&cfg.out.join("ensembles.csv"));
    let selectors: Vec<&str> = ensembles.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(selectors, ["a", "b", "c"]);

    // uninterpretable count = reps − size of ensemble b
    let records = common::read_csv(&cfg.out.join("records.csv"));
    assert_eq!(records.len(), 20);
    let flagged = records.iter().filter(|r| r[2] == "false").count();
    let b: usize = ensembles[1][1].parse().unwrap();
    assert_eq!(flagged, 20 - b);
    assert!(report.contains(&format!("uninterpretable trees: {flagged}")));
    assert_eq!(fs::read_to_string(cfg.out.join("report.txt")).unwrap(), report);

    let hist = common::read_csv(&cfg.out.join("histogram.csv"));
    assert_eq!(hist.len(), 20);
    assert_eq!(hist.iter().map(|r| r[2].parse::<usize>().unwrap()).sum::<usize>(), 20);

    let model = read_model(&cfg.out.join("model.json")).unwrap();
    assert_eq!(model.trees.len(), b);
    assert!(model.trees.iter().all(|t| t.interpretable));
    let dots = (1..=3).filter(|i| cfg.out.join(format!("tree_top{i}.dot")).is_file()).count();
    assert_eq!(dots, b.min(3));
}

#[test]
fn missing_constraints_file_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path(), 3);
    cfg.constraints = Some(dir.path().join("nope.txt"));
    let err = cmd_train(&cfg, &mut Vec::new(), &mut Vec::new()).unwrap_err();
    assert!(format!("{err:#}").contains("nope.txt"));
    assert!(!cfg.out.exists());
}

#[test]
fn invalid_parameters_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path(), 3);
    cfg.min_split = 5;
    assert!(cmd_train(&cfg, &mut Vec::new(), &mut Vec::new()).is_err());
    cfg.min_split = 20;
    cfg.fraction = 0.0;
    assert!(cmd_train(&cfg, &mut Vec::new(), &mut Vec::new()).is_err());
    assert!(!cfg.out.exists());
}

#[test]
fn model_round_trips_interpretable_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 8);
    train(&cfg);
    let text = fs::read_to_string(cfg.out.join("model.json")).unwrap();
    let model: ModelFile = serde_json::from_str(&text).unwrap();
    let again = serde_json::to_string_pretty(&model).unwrap() + "\n";
    assert_eq!(again, text);
    let records = model.records().unwrap();
    let spec = model.class_spec().unwrap();
    let schema = model.variable_schema().unwrap();
    let rebuilt = ModelFile::new(
        &schema,
        &spec,
        &cfg.tree_params(),
        &cfg.resample_params(),
        model.median_balanced_accuracy,
        &records.iter().collect::<Vec<_>>(),
    );
    assert_eq!(rebuilt, model);
}

fn balanced_accuracy_of(pred_path: &Path, data_path: &Path) -> f64 {
    let preds = common::read_csv(pred_path);
    let truth = common::read_csv(data_path);
    assert_eq!(preds.len(), truth.len());
    let mut total = [0usize; 2];
    let mut right = [0usize; 2];
    for (p, t) in preds.iter().zip(&truth) {
        let class = &t[4];
        let i = usize::from(class != "zero");
        total[i] += 1;
        right[i] += usize::from(&p[1] == class);
    }
    (right[0] as f64 / total[0] as f64 + right[1] as f64 / total[1] as f64) / 2.0
}

#[test]
fn predict_on_training_data_reproduces_ensemble_accuracies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 15);
    train(&cfg);
    let ensembles = common::read_csv(&cfg.out.join("ensembles.csv"));
    let model = cfg.out.join("model.json");
    for (row, sel) in [(0, "top:3"), (1, "all"), (2, "c")] {
        let out = dir.path().join(format!("pred_{row}.csv"));
        cmd_predict(&model, &cfg.data, sel.parse().unwrap(), &out, &mut Vec::new()).unwrap();
        let ba = balanced_accuracy_of(&out, &cfg.data);
        let expected: f64 = ensembles[row][2].parse().unwrap();
        assert_eq!(ba, expected, "selector {sel}");
        let header = csv::Reader::from_path(&out).unwrap().headers().unwrap().clone();
        assert_eq!(header.iter().collect::<Vec<_>>(), ["row", "predicted_class"]);
    }
}

#[test]
fn predict_handles_unseen_levels_and_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 6);
    train(&cfg);
    let model = cfg.out.join("model.json");
    let out = dir.path().join("pred.csv");

    let fresh = dir.path().join("fresh.csv");
    fs::write(&fresh, "AGE,ETH,MLU,SEX\n44,S/X,2,m\n60,E/a,OL,f\n").unwrap();
    cmd_predict(&model, &fresh, SelectorArg::B, &out, &mut Vec::new()).unwrap();
    let preds = common::read_csv(&out);
    assert_eq!(preds.len(), 2);
    assert!(preds.iter().all(|p| p[1] == "zero" || p[1] == "realized"));

    let missing = dir.path().join("missing.csv");
    fs::write(&missing, "ETH,SEX,MLU\nE/a,m,1\n").unwrap();
    let err = cmd_predict(&model, &missing, SelectorArg::B, &out, &mut Vec::new()).unwrap_err();
    assert!(format!("{err:#}").contains("'AGE'"), "{err:#}");

    let bad_kind = dir.path().join("bad_kind.csv");
    fs::write(&bad_kind, "ETH,AGE,SEX,MLU\nE/a,old,m,1\n").unwrap();
    let err = cmd_predict(&model, &bad_kind, SelectorArg::B, &out, &mut Vec::new()).unwrap_err();
    assert!(format!("{err:#}").contains("'AGE'"), "{err:#}");

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    assert!(cmd_predict(&model, &empty, SelectorArg::B, &out, &mut Vec::new()).is_err());
    fs::write(&empty, "ETH,AGE,SEX,MLU\n").unwrap();
    assert!(cmd_predict(&model, &empty, SelectorArg::B, &out, &mut Vec::new()).is_err());
}

#[test]
fn selector_syntax() {
    assert_eq!("a".parse(), Ok(SelectorArg::A));
    assert_eq!("all".parse(), Ok(SelectorArg::B));
    assert_eq!("top:5".parse(), Ok(SelectorArg::Top(5)));
    assert_eq!("above:0.7".parse(), Ok(SelectorArg::Above(0.7)));
    for bad in ["top:0", "above:2", "d", "top:x"] {
        assert!(bad.parse::<SelectorArg>().is_err(), "{bad}");
    }
}

/// Model holding one tree that joins E/a and S/C and one that separates them.
fn write_audit_model(path: &Path) {
    let schema = vec![
        VariableSchema::categorical("ETH", common::ETH).unwrap(),
        VariableSchema::numeric("AGE"),
    ];
    let spec = prindt_core::data::ClassSpec::new("PRN", "zero", "realized").unwrap();
    let tree = |left: &[&str], right: &[&str]| {
        let split = Split::categorical(&schema, "ETH", left, right, 0.002).unwrap();
        Tree::new(Node::inner(split, Node::leaf([30, 10]).unwrap(), Node::leaf([5, 60]).unwrap()))
    };
    let records = [
        TreeRecord {
            rep_index: 0,
            tree: tree(&["E/a", "S/C"], &["E/m", "E/migr", "S/I", "S/m"]),
            balanced_accuracy: 0.6898,
            interpretable: true,
            violations: 0,
        },
        TreeRecord {
            rep_index: 1,
            tree: tree(&["E/a", "E/m"], &["E/migr", "S/C", "S/I", "S/m"]),
            balanced_accuracy: 0.7,
            interpretable: true,
            violations: 0,
        },
    ];
    let rp = ResampleParams { fraction: 0.09, reps: 2, master_seed: 1 };
    let model = ModelFile::new(&schema, &spec, &TreeParams::default(), &rp, 0.6898, &records.iter().collect::<Vec<_>>());
    fs::write(path, serde_json::to_string_pretty(&model).unwrap()).unwrap();
}

#[test]
fn check_reports_offending_tree() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    write_audit_model(&model);
    let rules = dir.path().join("rules.txt");
    fs::copy(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/fixtures/eth_rules.txt"), &rules).unwrap();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    cmd_check(&model, &rules, &mut out, &mut err).unwrap();
    let out = String::from_utf8(out).unwrap();
    assert!(out.contains("rep 0: 1 violation(s)"), "{out}");
    assert!(out.contains("rep 1: interpretable"), "{out}");
    assert!(out.contains("1 of 2 trees uninterpretable"), "{out}");
    // MLU is not in this model's schema
    assert!(String::from_utf8(err).unwrap().contains("unknown variable 'MLU'"));
}

#[test]
fn check_with_empty_rules_and_unknown_variables() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    write_audit_model(&model);
    let rules = dir.path().join("rules.txt");
    fs::write(&rules, "").unwrap();
    let mut out = Vec::new();
    cmd_check(&model, &rules, &mut out, &mut Vec::new()).unwrap();
    assert!(String::from_utf8(out).unwrap().contains("0 of 2 trees uninterpretable"));

    fs::write(&rules, "LiBa == {mono, multi}\n").unwrap();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    cmd_check(&model, &rules, &mut out, &mut err).unwrap();
    assert!(String::from_utf8(out).unwrap().contains("0 of 2 trees uninterpretable"));
    assert!(String::from_utf8(err).unwrap().contains("warning"));

    fs::write(&rules, "ETH = {E/a}\n").unwrap();
    assert!(cmd_check(&model, &rules, &mut Vec::new(), &mut Vec::new()).is_err());
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    write_audit_model(&model);
    let rules = dir.path().join("rules.txt");
    fs::write(&rules, "ETH == {E/a, S/C}\n").unwrap();
    let bin = env!("CARGO_BIN_EXE_prindt");

    let ok = Command::new(bin)
        .args(["check", "--model"])
        .arg(&model)
        .arg("--constraints")
        .arg(&rules)
        .output()
        .unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("rep 0: 1 violation(s)"));

    let data = dir.path().join("corpus.csv");
    common::write_corpus(&data, 2, 200);
    let fail = Command::new(bin)
        .args(["train", "--class-col", "PRN", "--seed", "1", "--reps", "2", "--data"])
        .arg(&data)
        .arg("--constraints")
        .arg(dir.path().join("absent.txt"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(!fail.status.success());
    assert!(String::from_utf8_lossy(&fail.stderr).starts_with("error:"));
    assert!(!dir.path().join("out").exists());

    let no_seed = Command::new(bin)
        .args(["train", "--class-col", "PRN", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(!no_seed.status.success());
}
