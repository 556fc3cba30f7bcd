//! On-disk form of a trained model (`model.json`).

use anyhow::{bail, Context, Result};
use prindt_core::ctree::{Node, Split, SplitRule, Tree, TreeParams};
use prindt_core::data::{ClassSpec, VariableKind, VariableSchema};
use prindt_core::resample::{ResampleParams, TreeRecord};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema: Vec<VariableDto>,
    pub class_spec: ClassSpecDto,
    pub params: ParamsDto,
    /// Lower median balanced accuracy over all repetitions, interpretable or not.
    pub median_balanced_accuracy: f64,
    /// Interpretable trees only.
    pub trees: Vec<TreeDto>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VariableDto {
    Numeric { name: String },
    Categorical { name: String, levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpecDto {
    pub column: String,
    pub small: String,
    pub large: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsDto {
    pub alpha: f64,
    pub min_split: usize,
    pub min_bucket: usize,
    pub max_levels_for_split_search: usize,
    pub fraction: f64,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDto {
    pub rep: usize,
    pub balanced_accuracy: f64,
    pub interpretable: bool,
    pub root: NodeDto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NodeDto {
    Split {
        variable: String,
        rule: RuleDto,
        p_adjusted: f64,
        left: Box<NodeDto>,
        right: Box<NodeDto>,
    },
    Leaf {
        counts: [u64; 2],
        freqs: [f64; 2],
        predicted: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum RuleDto {
    Numeric { threshold: f64 },
    Categorical { left: Vec<String>, right: Vec<String> },
}

impl ModelFile {
    pub fn new(
        schema: &[VariableSchema],
        class_spec: &ClassSpec,
        tree_params: &TreeParams,
        res_params: &ResampleParams,
        median_balanced_accuracy: f64,
        records: &[&TreeRecord],
    ) -> ModelFile {
        ModelFile {
            schema: schema
                .iter()
                .map(|v| match &v.kind {
                    VariableKind::Numeric => VariableDto::Numeric { name: v.name.clone() },
                    VariableKind::Categorical { levels } => VariableDto::Categorical {
                        name: v.name.clone(),
                        levels: levels.clone(),
                    },
                })
                .collect(),
            class_spec: ClassSpecDto {
                column: class_spec.column().to_string(),
                small: class_spec.small_label().to_string(),
                large: class_spec.large_label().to_string(),
            },
            params: ParamsDto {
                alpha: tree_params.alpha,
                min_split: tree_params.min_split,
                min_bucket: tree_params.min_bucket,
                max_levels_for_split_search: tree_params.max_levels_for_split_search,
                fraction: res_params.fraction,
                reps: res_params.reps,
                seed: res_params.master_seed,
            },
            median_balanced_accuracy,
            trees: records
                .iter()
                .map(|r| TreeDto {
                    rep: r.rep_index,
                    balanced_accuracy: r.balanced_accuracy,
                    interpretable: r.interpretable,
                    root: node_dto(r.tree.root(), class_spec),
                })
                .collect(),
        }
    }

    pub fn variable_schema(&self) -> Result<Vec<VariableSchema>> {
        self.schema
            .iter()
            .map(|v| match v {
                VariableDto::Numeric { name } => Ok(VariableSchema::numeric(name)),
                VariableDto::Categorical { name, levels } => Ok(VariableSchema::categorical(name, levels.clone())?),
            })
            .collect()
    }

    pub fn class_spec(&self) -> Result<ClassSpec> {
        let c = &self.class_spec;
        Ok(ClassSpec::new(&c.column, &c.small, &c.large)?)
    }

    /// Rebuilds tree records, checking every node against the stored schema.
    pub fn records(&self) -> Result<Vec<TreeRecord>> {
        let schema = self.variable_schema()?;
        let spec = self.class_spec()?;
        self.trees
            .iter()
            .map(|t| {
                let root = node_from_dto(&t.root, &schema, &spec).with_context(|| format!("tree of repetition {}", t.rep))?;
                Ok(TreeRecord {
                    rep_index: t.rep,
                    tree: Tree::new(root),
                    balanced_accuracy: t.balanced_accuracy,
                    interpretable: t.interpretable,
                    violations: 0,
                })
            })
            .collect()
    }
}

fn node_dto(node: &Node, spec: &ClassSpec) -> NodeDto {
    match node {
        Node::Leaf { counts } => NodeDto::Leaf {
            counts: *counts,
            freqs: node.freqs(),
            predicted: spec.label(node.predicted()).to_string(),
        },
        Node::Inner { split, left, right, .. } => NodeDto::Split {
            variable: split.variable().to_string(),
            rule: match split.rule() {
                SplitRule::Numeric { threshold } => RuleDto::Numeric { threshold: *threshold },
                SplitRule::Categorical(part) => RuleDto::Categorical {
                    left: part.left().to_vec(),
                    right: part.right().to_vec(),
                },
            },
            p_adjusted: split.p_adjusted(),
            left: Box::new(node_dto(left, spec)),
            right: Box::new(node_dto(right, spec)),
        },
    }
}

fn node_from_dto(dto: &NodeDto, schema: &[VariableSchema], spec: &ClassSpec) -> Result<Node> {
    match dto {
        NodeDto::Leaf { counts, predicted, .. } => {
            let node = Node::leaf(*counts)?;
            let expected = spec.label(node.predicted());
            if predicted != expected {
                bail!("leaf with counts {counts:?} predicts '{predicted}', expected '{expected}'");
            }
            Ok(node)
        }
        NodeDto::Split { variable, rule, p_adjusted, left, right } => {
            let split = match rule {
                RuleDto::Numeric { threshold } => Split::numeric(schema, variable, *threshold, *p_adjusted)?,
                RuleDto::Categorical { left, right } => Split::categorical(schema, variable, left, right, *p_adjusted)?,
            };
            Ok(Node::inner(
                split,
                node_from_dto(left, schema, spec)?,
                node_from_dto(right, schema, spec)?,
            ))
        }
    }
}
