//! Interpretability rules over categorical level groupings.
//!
//! Rule file syntax, one rule per line, `#` starts a comment line:
//!
//! ```text
//! ETH == {E/a, S/C}          # this exact branch set is forbidden
//! ETH !together {E/a, S/C}   # these levels may never share a branch
//! ```

use std::collections::BTreeSet;
use std::fmt;

use crate::ctree::{Split, SplitRule, Tree};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleKind {
    /// A branch whose level set equals this set is forbidden.
    ExactSet(BTreeSet<String>),
    /// A branch containing all of these (observed) levels is forbidden.
    NeverTogether(BTreeSet<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExclusionRule {
    pub variable: String,
    pub kind: RuleKind,
}

impl ExclusionRule {
    pub fn exact_set<S: Into<String>>(variable: impl Into<String>, levels: impl IntoIterator<Item = S>) -> Self {
        ExclusionRule {
            variable: variable.into(),
            kind: RuleKind::ExactSet(levels.into_iter().map(Into::into).collect()),
        }
    }

    pub fn never_together<S: Into<String>>(
        variable: impl Into<String>,
        levels: impl IntoIterator<Item = S>,
    ) -> Self {
        ExclusionRule {
            variable: variable.into(),
            kind: RuleKind::NeverTogether(levels.into_iter().map(Into::into).collect()),
        }
    }

    /// Whether `split` realizes the forbidden grouping.
    pub fn violated_by(&self, split: &Split) -> bool {
        if split.variable() != self.variable {
            return false;
        }
        let SplitRule::Categorical(part) = split.rule() else {
            return false;
        };
        let left: BTreeSet<&str> = part.left().iter().map(String::as_str).collect();
        let right: BTreeSet<&str> = part.right().iter().map(String::as_str).collect();
        match &self.kind {
            RuleKind::ExactSet(set) => {
                let set: BTreeSet<&str> = set.iter().map(String::as_str).collect();
                set == left || set == right
            }
            RuleKind::NeverTogether(set) => {
                let observed: Vec<&str> = set
                    .iter()
                    .map(String::as_str)
                    .filter(|l| left.contains(l) || right.contains(l))
                    .collect();
                observed.len() >= 2
                    && (observed.iter().all(|l| left.contains(l))
                        || observed.iter().all(|l| right.contains(l)))
            }
        }
    }
}

impl fmt::Display for ExclusionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (op, set) = match &self.kind {
            RuleKind::ExactSet(s) => ("==", s),
            RuleKind::NeverTogether(s) => ("!together", s),
        };
        let levels: Vec<&str> = set.iter().map(String::as_str).collect();
        write!(f, "{} {} {{{}}}", self.variable, op, levels.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub rule: ExclusionRule,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpretabilityVerdict {
    pub violations: Vec<Violation>,
}

impl InterpretabilityVerdict {
    pub fn interpretable(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn parse_rules(text: &str) -> Result<Vec<ExclusionRule>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.trim();
            (!line.is_empty() && !line.starts_with('#')).then(|| parse_line(i + 1, line))
        })
        .collect()
}

fn parse_line(line_no: usize, line: &str) -> Result<ExclusionRule> {
    let err = |message: String| Error::RuleParse {
        line: line_no,
        message,
    };
    let (variable, op, rest) = if let Some((v, rest)) = line.split_once("!together") {
        (v, "!together", rest)
    } else if let Some((v, rest)) = line.split_once("==") {
        (v, "==", rest)
    } else {
        return Err(err(format!("expected '==' or '!together' in '{line}'")));
    };
    let variable = variable.trim();
    if variable.is_empty() || variable.contains(char::is_whitespace) {
        return Err(err(format!("invalid variable name '{variable}'")));
    }
    let body = rest
        .trim()
        .strip_prefix('{')
        .and_then(|b| b.strip_suffix('}'))
        .ok_or_else(|| err("level set must be written as {a, b, ...}".into()))?;
    let mut levels = BTreeSet::new();
    for level in body.split(',') {
        let level = level.trim();
        if level.is_empty() {
            return Err(err("empty level name".into()));
        }
        if level.contains(['{', '}']) {
            return Err(err(format!("unexpected brace in level '{level}'")));
        }
        if !levels.insert(level.to_string()) {
            return Err(err(format!("duplicate level '{level}'")));
        }
    }
    let kind = if op == "==" {
        RuleKind::ExactSet(levels)
    } else {
        if levels.len() < 2 {
            return Err(err("!together needs at least two levels".into()));
        }
        RuleKind::NeverTogether(levels)
    };
    Ok(ExclusionRule {
        variable: variable.to_string(),
        kind,
    })
}

/// Checks every split of `tree` against every rule.
pub fn check_tree(tree: &Tree, rules: &[ExclusionRule]) -> InterpretabilityVerdict {
    let mut violations = Vec::new();
    for split in tree.collect_splits() {
        for rule in rules.iter().filter(|r| r.violated_by(split)) {
            violations.push(Violation {
                rule: rule.clone(),
                split: split.clone(),
            });
        }
    }
    InterpretabilityVerdict { violations }
}
