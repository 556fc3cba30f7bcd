#![allow(dead_code)]

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ETH: [&str; 6] = ["E/a", "E/m", "E/migr", "S/C", "S/I", "S/m"];
pub const MLU: [&str; 4] = ["1", "2", "3", "OL"];

/// Pronoun-study-shaped CSV: ETH, AGE, SEX, MLU predictors and class column
/// PRN with labels `zero` (small) and `realized`. Small-class probability
/// depends on ETH through `eth_rates`.
pub fn corpus_csv(seed: u64, n: usize, eth_rates: [f64; 6]) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("ETH,AGE,SEX,MLU,PRN\n");
    for _ in 0..n {
        let eth = rng.gen_range(0..6);
        let small = rng.gen_bool(eth_rates[eth]);
        let age = rng.gen_range(30..100);
        let sex = ["m", "f"][rng.gen_range(0..2)];
        let mlu = MLU[rng.gen_range(0..4)];
        let prn = if small { "zero" } else { "realized" };
        out.push_str(&format!("{},{age},{sex},{mlu},{prn}\n", ETH[eth]));
    }
    out
}

/// Default fixture: S/C and S/m children drop subjects more often.
pub fn write_corpus(path: &Path, seed: u64, n: usize) {
    fs::write(path, corpus_csv(seed, n, [0.05, 0.05, 0.05, 0.35, 0.2, 0.35])).unwrap();
}

pub fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}
