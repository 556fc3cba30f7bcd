#![allow(dead_code)]

use prindt_core::data::{Class, ClassSpec, Column, Dataset, Frame, VariableSchema};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn class_spec() -> ClassSpec {
    ClassSpec::new("PRN", "zero", "realized").unwrap()
}

/// Random mixed-kind dataset. `signal` in [0, 1] controls how strongly the
/// first categorical predictor tracks the class.
pub fn random_dataset(seed: u64, n: usize, small_rate: f64, signal: f64) -> Dataset {
    let mut rng = rng(seed);
    let classes: Vec<Class> = (0..n)
        .map(|i| {
            // force at least one of each class
            if i == 0 {
                Class::Small
            } else if i == 1 {
                Class::Large
            } else if rng.gen_bool(small_rate) {
                Class::Small
            } else {
                Class::Large
            }
        })
        .collect();
    let eth_levels = ["E/a", "E/m", "E/migr", "S/C", "S/I", "S/m"];
    let eth: Vec<u32> = classes
        .iter()
        .map(|&c| {
            if rng.gen_bool(signal) {
                if c == Class::Small {
                    [0, 3][rng.gen_range(0..2)]
                } else {
                    [1, 2, 4, 5][rng.gen_range(0..4)]
                }
            } else {
                rng.gen_range(0..6)
            }
        })
        .collect();
    let age: Vec<f64> = classes
        .iter()
        .map(|&c| {
            let base = rng.gen_range(30..90) as f64;
            if c == Class::Small && rng.gen_bool(signal) {
                base - 20.0
            } else {
                base
            }
        })
        .collect();
    let sex: Vec<u32> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    let mlu: Vec<u32> = (0..n).map(|_| rng.gen_range(0..4)).collect();
    let schema = vec![
        VariableSchema::categorical("ETH", eth_levels).unwrap(),
        VariableSchema::numeric("AGE"),
        VariableSchema::categorical("SEX", ["m", "f"]).unwrap(),
        VariableSchema::categorical("MLU", ["1", "2", "3", "OL"]).unwrap(),
    ];
    let columns = vec![
        Column::Categorical(eth),
        Column::Numeric(age),
        Column::Categorical(sex),
        Column::Categorical(mlu),
    ];
    // Drop levels that never occur so every declared level is observed.
    let (schema, columns) = compact_levels(schema, columns);
    Dataset::new(Frame::new(schema, columns).unwrap(), class_spec(), classes).unwrap()
}

fn compact_levels(schema: Vec<VariableSchema>, columns: Vec<Column>) -> (Vec<VariableSchema>, Vec<Column>) {
    schema
        .into_iter()
        .zip(columns)
        .map(|(var, col)| match col {
            Column::Categorical(codes) => {
                let levels = var.levels();
                let mut remap = vec![u32::MAX; levels.len()];
                let mut kept = Vec::new();
                for &c in &codes {
                    if remap[c as usize] == u32::MAX {
                        remap[c as usize] = kept.len() as u32;
                        kept.push(levels[c as usize].clone());
                    }
                }
                let codes = codes.iter().map(|&c| remap[c as usize]).collect();
                (VariableSchema::categorical(&var.name, kept).unwrap(), Column::Categorical(codes))
            }
            numeric => (var, numeric),
        })
        .unzip()
}

/// Rows `0..n_small` small, the rest large; predictors are independent noise.
pub fn noise_dataset(seed: u64, n_small: usize, n_large: usize) -> Dataset {
    let mut rng = rng(seed);
    let n = n_small + n_large;
    let classes: Vec<Class> = (0..n).map(|i| if i < n_small { Class::Small } else { Class::Large }).collect();
    let schema = vec![
        VariableSchema::categorical("ETH", ["E/a", "E/m", "E/migr", "S/C", "S/I", "S/m"]).unwrap(),
        VariableSchema::numeric("AGE"),
        VariableSchema::categorical("SEX", ["m", "f"]).unwrap(),
        VariableSchema::categorical("LiBa", ["mono", "multi"]).unwrap(),
        VariableSchema::categorical("MLU", ["1", "2", "3", "OL"]).unwrap(),
        VariableSchema::categorical("PRN", ["he", "I", "it", "she", "they", "we", "you"]).unwrap(),
    ];
    let columns = vec![
        Column::Categorical((0..n).map(|_| rng.gen_range(0..6)).collect()),
        Column::Numeric((0..n).map(|_| rng.gen_range(25..100) as f64).collect()),
        Column::Categorical((0..n).map(|_| rng.gen_range(0..2)).collect()),
        Column::Categorical((0..n).map(|_| rng.gen_range(0..2)).collect()),
        Column::Categorical((0..n).map(|_| rng.gen_range(0..4)).collect()),
        Column::Categorical((0..n).map(|_| rng.gen_range(0..7)).collect()),
    ];
    let spec = ClassSpec::new("realization", "zero", "realized").unwrap();
    Dataset::new(Frame::new(schema, columns).unwrap(), spec, classes).unwrap()
}
