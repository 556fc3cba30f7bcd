//! Tabular data model and CSV ingestion.
//!
//! A [`Dataset`] is a column-oriented table of predictors (a [`Frame`]) plus a
//! binary class column. Categorical cells are stored as `u32` codes into the
//! column's level list; levels are kept in first-appearance order so that
//! loading is deterministic.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// One of the two class roles. The small class is the minority label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Class {
    Small,
    Large,
}

impl Class {
    pub const BOTH: [Class; 2] = [Class::Small, Class::Large];

    /// Position in `(small, large)` ordered pairs.
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Class::Small => 0,
            Class::Large => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Categorical,
    Numeric,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VariableKind {
    Categorical { levels: Vec<String> },
    Numeric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableSchema {
    pub name: String,
    pub kind: VariableKind,
}

impl VariableSchema {
    pub fn numeric(name: impl Into<String>) -> Self {
        VariableSchema {
            name: name.into(),
            kind: VariableKind::Numeric,
        }
    }

    /// Categorical variable; levels must be non-empty and duplicate-free.
    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        levels: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let name = name.into();
        let levels: Vec<String> = levels.into_iter().map(Into::into).collect();
        if levels.is_empty() {
            return Err(Error::Schema(format!("variable '{name}' has no levels")));
        }
        let mut seen = HashSet::new();
        for level in &levels {
            if !seen.insert(level.as_str()) {
                return Err(Error::Schema(format!(
                    "variable '{name}' has duplicate level '{level}'"
                )));
            }
        }
        Ok(VariableSchema {
            name,
            kind: VariableKind::Categorical { levels },
        })
    }

    pub fn column_kind(&self) -> ColumnKind {
        match self.kind {
            VariableKind::Categorical { .. } => ColumnKind::Categorical,
            VariableKind::Numeric => ColumnKind::Numeric,
        }
    }

    /// Levels of a categorical variable; empty for numeric ones.
    pub fn levels(&self) -> &[String] {
        match &self.kind {
            VariableKind::Categorical { levels } => levels,
            VariableKind::Numeric => &[],
        }
    }

    pub fn level_code(&self, level: &str) -> Option<u32> {
        self.levels()
            .iter()
            .position(|l| l == level)
            .map(|i| i as u32)
    }
}

/// Names the class column and its two labels, and which label is the small class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSpec {
    column: String,
    small: String,
    large: String,
}

impl ClassSpec {
    pub fn new(
        column: impl Into<String>,
        small_label: impl Into<String>,
        large_label: impl Into<String>,
    ) -> Result<Self> {
        let column = column.into();
        let small = small_label.into();
        let large = large_label.into();
        if small == large {
            return Err(Error::ClassLabels {
                column,
                message: format!("class labels must be distinct, got '{small}' twice"),
            });
        }
        Ok(ClassSpec {
            column,
            small,
            large,
        })
    }

    pub fn column(&self) -> &str {
        &self.column
    }

    pub fn small_label(&self) -> &str {
        &self.small
    }

    pub fn large_label(&self) -> &str {
        &self.large
    }

    pub fn label(&self, class: Class) -> &str {
        match class {
            Class::Small => &self.small,
            Class::Large => &self.large,
        }
    }

    pub fn class_of(&self, label: &str) -> Option<Class> {
        if label == self.small {
            Some(Class::Small)
        } else if label == self.large {
            Some(Class::Large)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    /// Codes into the owning variable's level list.
    Categorical(Vec<u32>),
    Numeric(Vec<f64>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Categorical(v) => v.len(),
            Column::Numeric(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Predictor columns without a class column. Prediction inputs are frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    schema: Vec<VariableSchema>,
    columns: Vec<Column>,
    n_rows: usize,
}

impl Frame {
    pub fn new(schema: Vec<VariableSchema>, columns: Vec<Column>) -> Result<Self> {
        if schema.len() != columns.len() {
            return Err(Error::Schema(format!(
                "{} variables but {} columns",
                schema.len(),
                columns.len()
            )));
        }
        let mut names = HashSet::new();
        for var in &schema {
            if !names.insert(var.name.as_str()) {
                return Err(Error::Schema(format!("duplicate variable '{}'", var.name)));
            }
        }
        let n_rows = columns.first().map_or(0, Column::len);
        for (var, col) in schema.iter().zip(&columns) {
            if col.len() != n_rows {
                return Err(Error::Schema(format!(
                    "column '{}' has {} rows, expected {n_rows}",
                    var.name,
                    col.len()
                )));
            }
            match (&var.kind, col) {
                (VariableKind::Categorical { levels }, Column::Categorical(codes)) => {
                    if let Some(row) = codes.iter().position(|&c| c as usize >= levels.len()) {
                        return Err(Error::Schema(format!(
                            "column '{}' row {row} has undeclared level code {}",
                            var.name, codes[row]
                        )));
                    }
                }
                (VariableKind::Numeric, Column::Numeric(values)) => {
                    if let Some(row) = values.iter().position(|v| !v.is_finite()) {
                        return Err(Error::Schema(format!(
                            "column '{}' row {row} is not finite",
                            var.name
                        )));
                    }
                }
                _ => {
                    return Err(Error::Schema(format!(
                        "column '{}' does not match its declared kind",
                        var.name
                    )))
                }
            }
        }
        Ok(Frame {
            schema,
            columns,
            n_rows,
        })
    }

    pub fn schema(&self) -> &[VariableSchema] {
        &self.schema
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, var: usize) -> &Column {
        &self.columns[var]
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|v| v.name == name)
    }

    /// String form of one cell, as it would appear in a CSV file.
    pub fn cell_text(&self, var: usize, row: usize) -> String {
        match &self.columns[var] {
            Column::Categorical(codes) => self.schema[var].levels()[codes[row] as usize].clone(),
            Column::Numeric(values) => values[row].to_string(),
        }
    }
}

/// Predictors plus a binary class column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    frame: Frame,
    class_spec: ClassSpec,
    classes: Vec<Class>,
}

impl Dataset {
    pub fn new(frame: Frame, class_spec: ClassSpec, classes: Vec<Class>) -> Result<Self> {
        if classes.len() != frame.n_rows() {
            return Err(Error::Schema(format!(
                "{} class values for {} rows",
                classes.len(),
                frame.n_rows()
            )));
        }
        if frame.variable_index(class_spec.column()).is_some() {
            return Err(Error::Schema(format!(
                "class column '{}' is also listed as a predictor",
                class_spec.column()
            )));
        }
        Ok(Dataset {
            frame,
            class_spec,
            classes,
        })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn schema(&self) -> &[VariableSchema] {
        self.frame.schema()
    }

    pub fn class_spec(&self) -> &ClassSpec {
        &self.class_spec
    }

    pub fn classes(&self) -> &[Class] {
        &self.classes
    }

    pub fn class_of(&self, row: usize) -> Class {
        self.classes[row]
    }

    pub fn n_rows(&self) -> usize {
        self.frame.n_rows()
    }

    /// Row counts ordered `(small, large)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let small = self.classes.iter().filter(|&&c| c == Class::Small).count();
        (small, self.classes.len() - small)
    }

    /// Ascending indices of the rows belonging to `class`.
    pub fn rows_of(&self, class: Class) -> Vec<usize> {
        self.classes
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| (c == class).then_some(i))
            .collect()
    }

    /// Writes predictors followed by the class column.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.schema().iter().map(|v| v.name.as_str()).collect();
        header.push(self.class_spec.column());
        out.write_record(&header)?;
        for row in 0..self.n_rows() {
            let mut record: Vec<String> = (0..self.schema().len())
                .map(|var| self.frame.cell_text(var, row))
                .collect();
            record.push(self.class_spec.label(self.classes[row]).to_string());
            out.write_record(&record)?;
        }
        out.flush().map_err(|source| Error::Io {
            path: "<writer>".into(),
            source,
        })?;
        Ok(())
    }

    /// Options that reload a CSV written by [`Dataset::write_csv`] into an identical dataset.
    pub fn reload_options(&self) -> LoadOptions {
        let mut opts = LoadOptions::new(self.class_spec.column());
        opts.small_label = Some(self.class_spec.small_label().to_string());
        opts.overrides = self
            .schema()
            .iter()
            .map(|v| (v.name.clone(), v.column_kind()))
            .collect();
        opts
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub class_column: String,
    /// Required when both classes have the same number of rows.
    pub small_label: Option<String>,
    /// Predictor columns to keep; `None` keeps every non-class column.
    pub predictors: Option<Vec<String>>,
    pub overrides: HashMap<String, ColumnKind>,
}

impl LoadOptions {
    pub fn new(class_column: impl Into<String>) -> Self {
        LoadOptions {
            class_column: class_column.into(),
            ..Default::default()
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader)
}

/// Reads the header and all records, rejecting empty cells.
fn read_table<R: Read>(reader: R) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut rdr = csv_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Schema("missing header row".into()));
    }
    let mut seen = HashSet::new();
    for name in &header {
        if name.is_empty() {
            return Err(Error::Schema("empty column name in header".into()));
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::Schema(format!("duplicate column '{name}' in header")));
        }
    }
    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if let Some(col) = rec.iter().position(str::is_empty) {
            return Err(Error::Ingest {
                row: i + 1,
                column: header[col].clone(),
                message: "missing value".into(),
            });
        }
        records.push(rec);
    }
    Ok((header, records))
}

fn parse_numeric(text: &str) -> Option<f64> {
    text.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn build_column(
    name: &str,
    col: usize,
    records: &[csv::StringRecord],
    kind: Option<ColumnKind>,
) -> Result<(VariableSchema, Column)> {
    let kind = kind.unwrap_or_else(|| {
        if records.iter().all(|r| parse_numeric(&r[col]).is_some()) {
            ColumnKind::Numeric
        } else {
            ColumnKind::Categorical
        }
    });
    match kind {
        ColumnKind::Numeric => {
            let values = records
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    parse_numeric(&r[col]).ok_or_else(|| Error::Ingest {
                        row: i + 1,
                        column: name.to_string(),
                        message: format!("'{}' is not a finite number", &r[col]),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((VariableSchema::numeric(name), Column::Numeric(values)))
        }
        ColumnKind::Categorical => {
            let mut levels: Vec<String> = Vec::new();
            let mut index: HashMap<&str, u32> = HashMap::new();
            let mut codes = Vec::with_capacity(records.len());
            for r in records {
                let cell = &r[col];
                let code = match index.get(cell) {
                    Some(&c) => c,
                    None => {
                        let c = levels.len() as u32;
                        levels.push(cell.to_string());
                        index.insert(cell, c);
                        c
                    }
                };
                codes.push(code);
            }
            Ok((
                VariableSchema::categorical(name, levels)?,
                Column::Categorical(codes),
            ))
        }
    }
}

/// Loads and validates a CSV corpus.
///
/// Column kinds are inferred (every cell parses as a finite number → numeric,
/// otherwise categorical with levels in first-appearance order) unless
/// overridden in `opts`.
pub fn load_csv(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Dataset> {
    read_dataset(open(path.as_ref())?, opts)
}

pub fn read_dataset<R: Read>(reader: R, opts: &LoadOptions) -> Result<Dataset> {
    let (header, records) = read_table(reader)?;
    let class_col = header
        .iter()
        .position(|h| *h == opts.class_column)
        .ok_or_else(|| Error::Schema(format!("class column '{}' not found", opts.class_column)))?;

    let predictor_cols: Vec<usize> = match &opts.predictors {
        Some(names) => names
            .iter()
            .map(|name| {
                if *name == opts.class_column {
                    return Err(Error::Schema(format!(
                        "class column '{name}' cannot be a predictor"
                    )));
                }
                header
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| Error::Schema(format!("predictor column '{name}' not found")))
            })
            .collect::<Result<_>>()?,
        None => (0..header.len()).filter(|&c| c != class_col).collect(),
    };
    for name in opts.overrides.keys() {
        if !predictor_cols.iter().any(|&c| header[c] == *name) {
            return Err(Error::Schema(format!(
                "kind override for unknown predictor '{name}'"
            )));
        }
    }

    let class_spec = resolve_class_spec(&opts.class_column, class_col, &records, opts)?;
    let classes: Vec<Class> = records
        .iter()
        .map(|r| class_spec.class_of(&r[class_col]).expect("label observed above"))
        .collect();

    let mut schema = Vec::with_capacity(predictor_cols.len());
    let mut columns = Vec::with_capacity(predictor_cols.len());
    for &c in &predictor_cols {
        let (var, col) = build_column(
            &header[c],
            c,
            &records,
            opts.overrides.get(&header[c]).copied(),
        )?;
        schema.push(var);
        columns.push(col);
    }
    let mut frame = Frame::new(schema, columns)?;
    // A frame with no predictors still has rows.
    frame.n_rows = records.len();
    Dataset::new(frame, class_spec, classes)
}

fn resolve_class_spec(
    column: &str,
    col: usize,
    records: &[csv::StringRecord],
    opts: &LoadOptions,
) -> Result<ClassSpec> {
    let mut labels: Vec<(String, usize)> = Vec::new();
    for r in records {
        let cell = &r[col];
        match labels.iter_mut().find(|(l, _)| l == cell) {
            Some((_, n)) => *n += 1,
            None => labels.push((cell.to_string(), 1)),
        }
    }
    let class_err = |message: String| Error::ClassLabels {
        column: column.to_string(),
        message,
    };
    if labels.len() != 2 {
        return Err(class_err(format!(
            "expected exactly two observed labels, found {}",
            labels.len()
        )));
    }
    let (a, na) = (&labels[0].0, labels[0].1);
    let (b, nb) = (&labels[1].0, labels[1].1);
    let (small, large) = match &opts.small_label {
        Some(forced) => {
            let (small, ns, large, nl) = if forced == a {
                (a, na, b, nb)
            } else if forced == b {
                (b, nb, a, na)
            } else {
                return Err(class_err(format!("small label '{forced}' is not observed")));
            };
            if ns > nl {
                return Err(class_err(format!(
                    "'{small}' has {ns} rows, more than '{large}' with {nl}"
                )));
            }
            (small, large)
        }
        None if na < nb => (a, b),
        None if nb < na => (b, a),
        None => {
            return Err(class_err(format!(
                "labels '{a}' and '{b}' both have {na} rows; choose the small class explicitly"
            )))
        }
    };
    ClassSpec::new(column, small.clone(), large.clone())
}

/// Loads predictor columns for prediction against a stored schema.
///
/// Columns are matched by name; extra columns are ignored. Categorical values
/// not in the stored level list are appended as new levels, so known levels
/// keep their codes.
pub fn load_frame_with_schema(path: impl AsRef<Path>, schema: &[VariableSchema]) -> Result<Frame> {
    read_frame_with_schema(open(path.as_ref())?, schema)
}

pub fn read_frame_with_schema<R: Read>(reader: R, schema: &[VariableSchema]) -> Result<Frame> {
    let (header, records) = read_table(reader)?;
    if records.is_empty() {
        return Err(Error::Schema("input has no data rows".into()));
    }
    let mut out_schema = Vec::with_capacity(schema.len());
    let mut columns = Vec::with_capacity(schema.len());
    for var in schema {
        let col = header
            .iter()
            .position(|h| *h == var.name)
            .ok_or_else(|| Error::Schema(format!("column '{}' missing from input", var.name)))?;
        match &var.kind {
            VariableKind::Numeric => {
                let (v, c) = build_column(&var.name, col, &records, Some(ColumnKind::Numeric))?;
                out_schema.push(v);
                columns.push(c);
            }
            VariableKind::Categorical { levels } => {
                let mut levels = levels.clone();
                let mut codes = Vec::with_capacity(records.len());
                for r in &records {
                    let cell = &r[col];
                    let code = match levels.iter().position(|l| l == cell) {
                        Some(c) => c,
                        None => {
                            levels.push(cell.to_string());
                            levels.len() - 1
                        }
                    };
                    codes.push(code as u32);
                }
                out_schema.push(VariableSchema::categorical(&var.name, levels)?);
                columns.push(Column::Categorical(codes));
            }
        }
    }
    let mut frame = Frame::new(out_schema, columns)?;
    frame.n_rows = records.len();
    Ok(frame)
}
