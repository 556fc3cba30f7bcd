//! Independence tests between one predictor and the binary class.
//!
//! Pearson chi-square for categorical predictors, the tie-corrected
//! normal-approximation Wilcoxon rank-sum test for numeric predictors, and
//! Bonferroni adjustment across the predictors tested at a node. No continuity
//! corrections are applied.

mod special;

pub use special::{gamma_q, ln_gamma};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    /// Degrees of freedom of the chi-square reference; `None` for the rank test.
    pub dof: Option<u32>,
    pub p_value: f64,
}

/// Upper tail P(X ≥ x) of a chi-square variable with `dof` degrees of freedom.
pub fn chi_square_sf(x: f64, dof: u32) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::argument(format!("chi-square statistic must be >= 0, got {x}")));
    }
    if dof == 0 {
        return Err(Error::argument("chi-square dof must be >= 1"));
    }
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    Ok(gamma_q(dof as f64 / 2.0, x / 2.0))
}

/// Pearson statistic Σ (obs − exp)² / exp of an r×2 table of counts.
///
/// Every row and both columns must have positive totals.
pub fn pearson_statistic(table: &[[u64; 2]]) -> Result<f64> {
    if table.len() < 2 {
        return Err(Error::DegenerateTable(format!(
            "need at least 2 rows, got {}",
            table.len()
        )));
    }
    let col = [
        table.iter().map(|r| r[0]).sum::<u64>(),
        table.iter().map(|r| r[1]).sum::<u64>(),
    ];
    if let Some(i) = table.iter().position(|r| r[0] + r[1] == 0) {
        return Err(Error::DegenerateTable(format!("row {i} is empty")));
    }
    if let Some(j) = col.iter().position(|&c| c == 0) {
        return Err(Error::DegenerateTable(format!("column {j} is empty")));
    }
    let n = (col[0] + col[1]) as f64;
    let mut stat = 0.0;
    for row in table {
        let row_total = (row[0] + row[1]) as f64;
        for j in 0..2 {
            let expected = row_total * col[j] as f64 / n;
            let diff = row[j] as f64 - expected;
            stat += diff * diff / expected;
        }
    }
    Ok(stat)
}

pub fn chi_square_test(table: &[[u64; 2]]) -> Result<TestResult> {
    let statistic = pearson_statistic(table)?;
    let dof = (table.len() - 1) as u32;
    Ok(TestResult {
        statistic,
        dof: Some(dof),
        p_value: chi_square_sf(statistic, dof)?,
    })
}

/// Mid-ranks (1-based) of `values`; tied values share the mean of their ranks.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Two-sided Wilcoxon rank-sum test; `in_first[i]` marks membership of the first group.
///
/// The statistic is |z| with the tie-corrected variance and p = 2·Φ(−|z|).
pub fn rank_sum_test(values: &[f64], in_first: &[bool]) -> Result<TestResult> {
    if values.len() != in_first.len() {
        return Err(Error::argument(format!(
            "{} values but {} group flags",
            values.len(),
            in_first.len()
        )));
    }
    let n = values.len();
    let n1 = in_first.iter().filter(|&&g| g).count();
    let n2 = n - n1;
    if n1 == 0 || n2 == 0 {
        return Err(Error::argument("rank-sum test needs two non-empty groups"));
    }
    let ranks = mid_ranks(values);
    let w: f64 = ranks
        .iter()
        .zip(in_first)
        .filter_map(|(&r, &g)| g.then_some(r))
        .sum();

    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    for run in sorted.chunk_by(|a, b| a == b) {
        let t = run.len() as f64;
        tie_term += t * t * t - t;
    }

    let (n, n1, n2) = (n as f64, n1 as f64, n2 as f64);
    let expected = n1 * (n + 1.0) / 2.0;
    let variance = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if variance <= 0.0 {
        return Ok(TestResult {
            statistic: 0.0,
            dof: None,
            p_value: 1.0,
        });
    }
    let z = ((w - expected) / variance.sqrt()).abs();
    Ok(TestResult {
        statistic: z,
        dof: None,
        p_value: normal_two_sided(z),
    })
}

/// 2·Φ(−|z|), via 2·Φ(−|z|) = P(χ²₁ ≥ z²).
pub fn normal_two_sided(z: f64) -> f64 {
    gamma_q(0.5, z * z / 2.0).min(1.0)
}

pub fn bonferroni(p: f64, m: usize) -> f64 {
    debug_assert!(m >= 1);
    (p * m as f64).min(1.0)
}
