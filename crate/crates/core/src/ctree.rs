//! Conditional inference trees.
//!
//! A node is split only when some predictor is significantly associated with
//! the class after Bonferroni adjustment over the predictors tested at that
//! node. The chosen predictor's cut point (numeric) or level partition
//! (categorical) maximizes the chi-square statistic of the induced 2×2 table.

use std::fmt::Write as _;

use crate::data::{Class, ClassSpec, Column, Dataset, Frame, VariableKind, VariableSchema};
use crate::error::{Error, Result};
use crate::stats;

/// Counts ordered `(small, large)`, indexed by [`Class::index`].
pub type ClassCounts = [u64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    /// Significance limit for admitting a split.
    pub alpha: f64,
    /// Nodes with fewer rows are not split.
    pub min_split: usize,
    /// Minimum number of rows in each child.
    pub min_bucket: usize,
    /// Categorical predictors with more observed levels than this are split by
    /// ordered search instead of exhaustive partition search.
    pub max_levels_for_split_search: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            alpha: 0.01,
            min_split: 20,
            min_bucket: 7,
            max_levels_for_split_search: 20,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::argument(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.min_bucket < 1 {
            return Err(Error::argument("min_bucket must be >= 1"));
        }
        if self.min_split < 2 * self.min_bucket {
            return Err(Error::argument(format!(
                "min_split ({}) must be >= 2 * min_bucket ({})",
                self.min_split, self.min_bucket
            )));
        }
        if !(2..=63).contains(&self.max_levels_for_split_search) {
            return Err(Error::argument("max_levels_for_split_search must lie in 2..=63"));
        }
        Ok(())
    }
}

/// Binary partition of the levels observed at a node.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelPartition {
    left: Vec<String>,
    right: Vec<String>,
    /// Sorted codes of `left` in the schema the split was bound to.
    left_codes: Vec<u32>,
}

impl LevelPartition {
    pub fn left(&self) -> &[String] {
        &self.left
    }

    pub fn right(&self) -> &[String] {
        &self.right
    }

    fn goes_left(&self, code: u32) -> bool {
        self.left_codes.binary_search(&code).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitRule {
    /// Left child takes values `<= threshold`.
    Numeric { threshold: f64 },
    /// Left child takes the levels in `left`; everything else, including
    /// levels never seen at this node, goes right.
    Categorical(LevelPartition),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    variable: String,
    var_index: usize,
    rule: SplitRule,
    p_adjusted: f64,
}

impl Split {
    pub fn numeric(
        schema: &[VariableSchema],
        variable: &str,
        threshold: f64,
        p_adjusted: f64,
    ) -> Result<Split> {
        let var_index = lookup(schema, variable)?;
        if schema[var_index].kind != VariableKind::Numeric {
            return Err(Error::Schema(format!("'{variable}' is not numeric")));
        }
        if !threshold.is_finite() {
            return Err(Error::Schema(format!("threshold for '{variable}' is not finite")));
        }
        Ok(Split {
            variable: variable.to_string(),
            var_index,
            rule: SplitRule::Numeric { threshold },
            p_adjusted,
        })
    }

    /// Both sides must be non-empty, disjoint and made of declared levels.
    pub fn categorical<S: AsRef<str>>(
        schema: &[VariableSchema],
        variable: &str,
        left: &[S],
        right: &[S],
        p_adjusted: f64,
    ) -> Result<Split> {
        let var_index = lookup(schema, variable)?;
        let var = &schema[var_index];
        if var.kind == VariableKind::Numeric {
            return Err(Error::Schema(format!("'{variable}' is not categorical")));
        }
        if left.is_empty() || right.is_empty() {
            return Err(Error::Schema(format!(
                "split on '{variable}' needs levels on both sides"
            )));
        }
        let code_of = |level: &str| {
            var.level_code(level).ok_or_else(|| {
                Error::Schema(format!("'{level}' is not a level of '{variable}'"))
            })
        };
        let mut left_codes = left
            .iter()
            .map(|l| code_of(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let mut right_codes = right
            .iter()
            .map(|l| code_of(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        left_codes.sort_unstable();
        right_codes.sort_unstable();
        let before = left_codes.len() + right_codes.len();
        let mut all: Vec<u32> = left_codes.iter().chain(&right_codes).copied().collect();
        all.sort_unstable();
        all.dedup();
        if all.len() != before {
            return Err(Error::Schema(format!(
                "split on '{variable}' repeats a level"
            )));
        }
        Ok(Split::from_codes(schema, var_index, &left_codes, &right_codes, p_adjusted))
    }

    fn from_codes(
        schema: &[VariableSchema],
        var_index: usize,
        left_codes: &[u32],
        right_codes: &[u32],
        p_adjusted: f64,
    ) -> Split {
        let var = &schema[var_index];
        let names = |codes: &[u32]| codes.iter().map(|&c| var.levels()[c as usize].clone()).collect();
        Split {
            variable: var.name.clone(),
            var_index,
            rule: SplitRule::Categorical(LevelPartition {
                left: names(left_codes),
                right: names(right_codes),
                left_codes: left_codes.to_vec(),
            }),
            p_adjusted,
        }
    }

    pub fn variable(&self) -> &str {
        &self.variable
    }

    pub fn rule(&self) -> &SplitRule {
        &self.rule
    }

    pub fn p_adjusted(&self) -> f64 {
        self.p_adjusted
    }

    pub fn goes_left(&self, frame: &Frame, row: usize) -> bool {
        debug_assert_eq!(frame.schema()[self.var_index].name, self.variable);
        match (&self.rule, frame.column(self.var_index)) {
            (SplitRule::Numeric { threshold }, Column::Numeric(values)) => {
                values[row] <= *threshold
            }
            (SplitRule::Categorical(part), Column::Categorical(codes)) => {
                part.goes_left(codes[row])
            }
            _ => unreachable!("split kind checked against schema at construction"),
        }
    }

    /// Same split with its sides swapped (categorical only; numeric splits are returned unchanged).
    pub fn mirrored(&self, schema: &[VariableSchema]) -> Split {
        match &self.rule {
            SplitRule::Numeric { .. } => self.clone(),
            SplitRule::Categorical(part) => Split::categorical(
                schema,
                &self.variable,
                &part.right,
                &part.left,
                self.p_adjusted,
            )
            .expect("mirror of a valid split"),
        }
    }
}

fn lookup(schema: &[VariableSchema], variable: &str) -> Result<usize> {
    schema
        .iter()
        .position(|v| v.name == variable)
        .ok_or_else(|| Error::Schema(format!("unknown variable '{variable}'")))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Inner {
        split: Split,
        counts: ClassCounts,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        counts: ClassCounts,
    },
}

impl Node {
    pub fn leaf(counts: ClassCounts) -> Result<Node> {
        if counts[0] + counts[1] == 0 {
            return Err(Error::Schema("leaf with no rows".into()));
        }
        Ok(Node::Leaf { counts })
    }

    /// Inner node whose counts are the sum of its children's.
    pub fn inner(split: Split, left: Node, right: Node) -> Node {
        let (l, r) = (left.counts(), right.counts());
        Node::Inner {
            split,
            counts: [l[0] + r[0], l[1] + r[1]],
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn counts(&self) -> ClassCounts {
        match self {
            Node::Inner { counts, .. } | Node::Leaf { counts } => *counts,
        }
    }

    pub fn n(&self) -> u64 {
        let c = self.counts();
        c[0] + c[1]
    }

    /// Relative class frequencies `(small, large)`.
    pub fn freqs(&self) -> [f64; 2] {
        let c = self.counts();
        let n = (c[0] + c[1]) as f64;
        [c[0] as f64 / n, c[1] as f64 / n]
    }

    /// Majority class; ties go to the small class.
    pub fn predicted(&self) -> Class {
        let c = self.counts();
        if c[0] >= c[1] {
            Class::Small
        } else {
            Class::Large
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    root: Node,
}

impl Tree {
    pub fn new(root: Node) -> Tree {
        Tree { root }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn n_nodes(&self) -> usize {
        fn count(node: &Node) -> usize {
            match node {
                Node::Leaf { .. } => 1,
                Node::Inner { left, right, .. } => 1 + count(left) + count(right),
            }
        }
        count(&self.root)
    }

    pub fn n_leaves(&self) -> usize {
        fn count(node: &Node) -> usize {
            match node {
                Node::Leaf { .. } => 1,
                Node::Inner { left, right, .. } => count(left) + count(right),
            }
        }
        count(&self.root)
    }

    pub fn depth(&self) -> usize {
        fn depth(node: &Node) -> usize {
            match node {
                Node::Leaf { .. } => 0,
                Node::Inner { left, right, .. } => 1 + depth(left).max(depth(right)),
            }
        }
        depth(&self.root)
    }

    /// The leaf `row` of `frame` is routed to.
    pub fn leaf_for(&self, frame: &Frame, row: usize) -> &Node {
        let mut node = &self.root;
        while let Node::Inner {
            split, left, right, ..
        } = node
        {
            node = if split.goes_left(frame, row) { left } else { right };
        }
        node
    }

    /// Inner-node splits in preorder.
    pub fn collect_splits(&self) -> Vec<&Split> {
        fn walk<'a>(node: &'a Node, out: &mut Vec<&'a Split>) {
            if let Node::Inner {
                split, left, right, ..
            } = node
            {
                out.push(split);
                walk(left, out);
                walk(right, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    /// The split variable at the root, if the tree has one.
    pub fn root_variable(&self) -> Option<&str> {
        match &self.root {
            Node::Inner { split, .. } => Some(split.variable()),
            Node::Leaf { .. } => None,
        }
    }

    /// Graphviz DOT rendering; nodes are numbered in preorder.
    pub fn to_dot(&self, class_spec: &ClassSpec) -> String {
        let mut out = String::from("digraph tree {\n");
        out.push_str("  node [fontname=\"Helvetica\"];\n");
        let mut next_id = 0usize;
        write_dot_node(&self.root, class_spec, &mut next_id, &mut out);
        out.push_str("}\n");
        out
    }
}

fn dot_escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Three significant digits; scientific notation below 1e-3.
pub fn format_p(p: f64) -> String {
    if p == 0.0 {
        return "0".to_string();
    }
    let exponent = p.abs().log10().floor() as i32;
    if exponent < -3 {
        format!("{p:.2e}")
    } else {
        let decimals = (2 - exponent).max(0) as usize;
        format!("{p:.decimals$}")
    }
}

fn write_dot_node(node: &Node, spec: &ClassSpec, next_id: &mut usize, out: &mut String) -> usize {
    let id = *next_id;
    *next_id += 1;
    match node {
        Node::Leaf { .. } => {
            let f = node.freqs();
            let label = format!(
                "n={}\\n{}: {:.3}\\n{}: {:.3}",
                node.n(),
                dot_escape(spec.small_label()),
                f[0],
                dot_escape(spec.large_label()),
                f[1]
            );
            let _ = writeln!(out, "  n{id} [shape=box, label=\"{label}\"];");
        }
        Node::Inner {
            split, left, right, ..
        } => {
            let _ = writeln!(
                out,
                "  n{id} [shape=ellipse, label=\"{}\\np={}\"];",
                dot_escape(split.variable()),
                format_p(split.p_adjusted())
            );
            let (left_label, right_label) = match split.rule() {
                SplitRule::Numeric { threshold } => {
                    (format!("<= {threshold}"), format!("> {threshold}"))
                }
                SplitRule::Categorical(part) => (
                    format!("{{{}}}", part.left().join(", ")),
                    format!("{{{}}}", part.right().join(", ")),
                ),
            };
            let l = write_dot_node(left, spec, next_id, out);
            let _ = writeln!(out, "  n{id} -> n{l} [label=\"{}\"];", dot_escape(&left_label));
            let r = write_dot_node(right, spec, next_id, out);
            let _ = writeln!(out, "  n{id} -> n{r} [label=\"{}\"];", dot_escape(&right_label));
        }
    }
    id
}

/// Routes one row to its leaf and returns that leaf's prediction and frequencies.
pub fn predict(tree: &Tree, frame: &Frame, row: usize) -> (Class, [f64; 2]) {
    let leaf = tree.leaf_for(frame, row);
    (leaf.predicted(), leaf.freqs())
}

fn tally(ds: &Dataset, rows: &[usize]) -> ClassCounts {
    let mut counts = [0u64; 2];
    for &r in rows {
        counts[ds.class_of(r).index()] += 1;
    }
    counts
}

/// Level × class table over `rows`, keeping only observed levels (in code order).
fn level_table(codes: &[u32], n_levels: usize, ds: &Dataset, rows: &[usize]) -> (Vec<u32>, Vec<[u64; 2]>) {
    let mut table = vec![[0u64; 2]; n_levels];
    for &r in rows {
        table[codes[r] as usize][ds.class_of(r).index()] += 1;
    }
    table
        .into_iter()
        .enumerate()
        .filter(|(_, c)| c[0] + c[1] > 0)
        .map(|(code, c)| (code as u32, c))
        .unzip()
}

/// Raw (unadjusted) p-value of the independence test for one predictor, or
/// `None` when the predictor is not testable on these rows.
fn predictor_p_value(ds: &Dataset, var: usize, rows: &[usize]) -> Option<f64> {
    match ds.frame().column(var) {
        Column::Categorical(codes) => {
            let n_levels = ds.schema()[var].levels().len();
            let (_, table) = level_table(codes, n_levels, ds, rows);
            if table.len() < 2 {
                return None;
            }
            stats::chi_square_test(&table).ok().map(|r| r.p_value)
        }
        Column::Numeric(values) => {
            let xs: Vec<f64> = rows.iter().map(|&r| values[r]).collect();
            if xs.iter().all(|&x| x == xs[0]) {
                return None;
            }
            let small: Vec<bool> = rows.iter().map(|&r| ds.class_of(r) == Class::Small).collect();
            stats::rank_sum_test(&xs, &small).ok().map(|r| r.p_value)
        }
    }
}

/// Picks the predictor with the smallest Bonferroni-adjusted p-value, if it
/// does not exceed `alpha`. Returns `(variable index, adjusted p)`.
pub fn select_variable(ds: &Dataset, rows: &[usize], params: &TreeParams) -> Option<(usize, f64)> {
    let tested: Vec<(usize, f64)> = (0..ds.schema().len())
        .filter_map(|var| predictor_p_value(ds, var, rows).map(|p| (var, p)))
        .collect();
    let m = tested.len();
    let mut best: Option<(usize, f64)> = None;
    for (var, p) in tested {
        let adjusted = stats::bonferroni(p, m);
        if best.is_none_or(|(_, b)| adjusted < b) {
            best = Some((var, adjusted));
        }
    }
    best.filter(|&(_, p)| p <= params.alpha)
}

/// Chi-square statistic of a side × class table, from side-left counts and
/// class totals. Zero when either class total is zero.
fn two_by_two(left: ClassCounts, total: ClassCounts) -> f64 {
    let right = [total[0] - left[0], total[1] - left[1]];
    let n_left = (left[0] + left[1]) as f64;
    let n_right = (right[0] + right[1]) as f64;
    let (c0, c1) = (total[0] as f64, total[1] as f64);
    let denom = n_left * n_right * c0 * c1;
    if denom == 0.0 {
        return 0.0;
    }
    let cross = left[0] as f64 * right[1] as f64 - left[1] as f64 * right[0] as f64;
    (c0 + c1) * cross * cross / denom
}

/// Bitmasks over observed levels 1..r for the left side; level 0 is always on
/// the left. Yields the 2^(r−1) − 1 proper partitions.
pub fn partition_masks(r: usize) -> impl Iterator<Item = u64> {
    debug_assert!((2..=63).contains(&r));
    0..(1u64 << (r - 1)) - 1
}

/// Best cut of `var` over `rows`, or `None` when no candidate leaves at least
/// `min_bucket` rows on each side or every candidate has zero statistic.
pub fn best_split(
    ds: &Dataset,
    rows: &[usize],
    var: usize,
    p_adjusted: f64,
    params: &TreeParams,
) -> Option<Split> {
    let total = tally(ds, rows);
    let n = rows.len();
    let fits = |n_left: usize| n_left >= params.min_bucket && n - n_left >= params.min_bucket;
    match ds.frame().column(var) {
        Column::Numeric(values) => {
            let mut sorted: Vec<(f64, Class)> = rows.iter().map(|&r| (values[r], ds.class_of(r))).collect();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = [0u64; 2];
            let mut best: Option<(f64, f64)> = None;
            for i in 0..n - 1 {
                left[sorted[i].1.index()] += 1;
                let (lo, hi) = (sorted[i].0, sorted[i + 1].0);
                if lo == hi || !fits(i + 1) {
                    continue;
                }
                let stat = two_by_two(left, total);
                if stat > 0.0 && best.is_none_or(|(s, _)| stat > s) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some((stat, threshold));
                }
            }
            let (_, threshold) = best?;
            Some(Split {
                variable: ds.schema()[var].name.clone(),
                var_index: var,
                rule: SplitRule::Numeric { threshold },
                p_adjusted,
            })
        }
        Column::Categorical(codes) => {
            let n_levels = ds.schema()[var].levels().len();
            let (observed, table) = level_table(codes, n_levels, ds, rows);
            let r = observed.len();
            if r < 2 {
                return None;
            }
            let side_counts = |members: &[usize]| {
                members.iter().fold([0u64; 2], |acc, &i| [acc[0] + table[i][0], acc[1] + table[i][1]])
            };
            let mut best: Option<(f64, Vec<usize>)> = None;
            let mut consider = |left_members: Vec<usize>| {
                let left = side_counts(&left_members);
                if !fits((left[0] + left[1]) as usize) {
                    return;
                }
                let stat = two_by_two(left, total);
                if stat <= 0.0 {
                    return;
                }
                let better = match &best {
                    None => true,
                    Some((s, members)) => stat > *s || (stat == *s && left_members < *members),
                };
                if better {
                    best = Some((stat, left_members));
                }
            };
            if r <= params.max_levels_for_split_search {
                for mask in partition_masks(r) {
                    let members: Vec<usize> = std::iter::once(0)
                        .chain((1..r).filter(|i| mask >> (i - 1) & 1 == 1))
                        .collect();
                    consider(members);
                }
            } else {
                // Ordered search: levels sorted by small-class proportion, contiguous cuts.
                let mut order: Vec<usize> = (0..r).collect();
                order.sort_by(|&a, &b| {
                    let pa = table[a][0] as f64 / (table[a][0] + table[a][1]) as f64;
                    let pb = table[b][0] as f64 / (table[b][0] + table[b][1]) as f64;
                    pa.total_cmp(&pb).then(a.cmp(&b))
                });
                for cut in 1..r {
                    let mut prefix: Vec<usize> = order[..cut].to_vec();
                    if !prefix.contains(&0) {
                        prefix = order[cut..].to_vec();
                    }
                    prefix.sort_unstable();
                    consider(prefix);
                }
            }
            let (_, members) = best?;
            let left_codes: Vec<u32> = members.iter().map(|&i| observed[i]).collect();
            let right_codes: Vec<u32> = (0..r).filter(|i| !members.contains(i)).map(|i| observed[i]).collect();
            Some(Split::from_codes(ds.schema(), var, &left_codes, &right_codes, p_adjusted))
        }
    }
}

/// Grows a tree on `rows` of `ds`. Deterministic for fixed inputs.
pub fn grow(ds: &Dataset, rows: &[usize], params: &TreeParams) -> Result<Tree> {
    params.validate()?;
    if rows.is_empty() {
        return Err(Error::argument("cannot grow a tree on an empty row subset"));
    }
    if let Some(&bad) = rows.iter().find(|&&r| r >= ds.n_rows()) {
        return Err(Error::argument(format!("row index {bad} out of range")));
    }
    Ok(Tree::new(grow_node(ds, rows, params)))
}

fn grow_node(ds: &Dataset, rows: &[usize], params: &TreeParams) -> Node {
    let counts = tally(ds, rows);
    let leaf = Node::Leaf { counts };
    if rows.len() < params.min_split || counts[0] == 0 || counts[1] == 0 {
        return leaf;
    }
    let Some((var, p)) = select_variable(ds, rows, params) else {
        return leaf;
    };
    let Some(split) = best_split(ds, rows, var, p, params) else {
        return leaf;
    };
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
        rows.iter().partition(|&&r| split.goes_left(ds.frame(), r));
    let left = grow_node(ds, &left_rows, params);
    let right = grow_node(ds, &right_rows, params);
    Node::Inner {
        split,
        counts,
        left: Box::new(left),
        right: Box::new(right),
    }
}
