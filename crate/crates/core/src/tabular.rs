//! Cohort representation, partitioning, median imputation and design encoding.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;
use core::str::FromStr;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum VariableKind {
    Continuous,
    /// Ordered labels; the first is the reference category when encoding.
    Categorical(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableSchema {
    pub name: String,
    pub kind: VariableKind,
    pub unit: Option<String>,
}

impl VariableSchema {
    pub fn continuous(name: impl Into<String>) -> Self {
        Self { name: name.into(), kind: VariableKind::Continuous, unit: None }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, categories: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            kind: VariableKind::Categorical(categories.into_iter().map(Into::into).collect()),
            unit: None,
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.kind, VariableKind::Continuous)
    }

    pub fn categories(&self) -> Option<&[String]> {
        match &self.kind {
            VariableKind::Categorical(c) => Some(c),
            VariableKind::Continuous => None,
        }
    }

    /// Number of encoded design columns: 1 for continuous, L − 1 for categorical.
    pub fn encoded_width(&self) -> usize {
        match &self.kind {
            VariableKind::Continuous => 1,
            VariableKind::Categorical(c) => c.len() - 1,
        }
    }
}

/// Column storage. Continuous cells may be missing; categorical cells are
/// indices into the declared category list and never missing.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Continuous(Vec<Option<f64>>),
    Categorical(Vec<u32>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Continuous(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Partition {
    Train,
    Validation,
    Test,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Train, Partition::Validation, Partition::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Validation => "validation",
            Partition::Test => "test",
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Partition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Partition::Train),
            "validation" | "val" => Ok(Partition::Validation),
            "test" => Ok(Partition::Test),
            other => Err(Error::Invalid(format!("unknown partition `{other}`"))),
        }
    }
}

/// A typed binary-outcome dataset with partition labels.
///
/// Immutable once built; every transformation returns a new cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    schema: Vec<VariableSchema>,
    columns: Vec<Column>,
    outcome: Vec<u8>,
    partition: Vec<Partition>,
}

fn validate_schema(schema: &[VariableSchema]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for v in schema {
        if v.name.is_empty() {
            return Err(Error::Schema("variable with empty name".into()));
        }
        if !seen.insert(v.name.as_str()) {
            return Err(Error::Schema(format!("duplicate variable name `{}`", v.name)));
        }
        if let VariableKind::Categorical(cats) = &v.kind {
            if cats.len() < 2 {
                return Err(Error::Schema(format!(
                    "categorical variable `{}` needs at least 2 categories",
                    v.name
                )));
            }
            let distinct: BTreeSet<&str> = cats.iter().map(String::as_str).collect();
            if distinct.len() != cats.len() {
                return Err(Error::Schema(format!("variable `{}` repeats a category label", v.name)));
            }
        }
    }
    Ok(())
}

impl Cohort {
    /// Builds a cohort from column storage. All rows start in the train partition.
    pub fn new(schema: Vec<VariableSchema>, columns: Vec<Column>, outcome: Vec<u8>) -> Result<Self> {
        validate_schema(&schema)?;
        if schema.len() != columns.len() {
            return Err(Error::Shape(format!("{} schema entries, {} columns", schema.len(), columns.len())));
        }
        let n = outcome.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        if let Some(row) = outcome.iter().position(|&y| y > 1) {
            return Err(Error::NonBinaryOutcome { row: row + 1, text: outcome[row].to_string() });
        }
        for (v, c) in schema.iter().zip(&columns) {
            if c.len() != n {
                return Err(Error::Shape(format!("column `{}` has {} rows, outcome has {n}", v.name, c.len())));
            }
            match (&v.kind, c) {
                (VariableKind::Continuous, Column::Continuous(_)) => {}
                (VariableKind::Categorical(cats), Column::Categorical(codes)) => {
                    if let Some(row) = codes.iter().position(|&k| k as usize >= cats.len()) {
                        return Err(Error::UnseenCategory {
                            row: row + 1,
                            column: v.name.clone(),
                            label: format!("#{}", codes[row]),
                        });
                    }
                }
                _ => return Err(Error::Schema(format!("column `{}` storage does not match its kind", v.name))),
            }
        }
        Ok(Self { schema, columns, outcome, partition: vec![Partition::Train; n] })
    }

    pub fn n_rows(&self) -> usize {
        self.outcome.len()
    }

    pub fn schema(&self) -> &[VariableSchema] {
        &self.schema
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, variable: usize) -> &Column {
        &self.columns[variable]
    }

    pub fn outcome(&self) -> &[u8] {
        &self.outcome
    }

    pub fn partition(&self) -> &[Partition] {
        &self.partition
    }

    pub fn variable_index(&self, name: &str) -> Result<usize> {
        self.schema
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.into()))
    }

    pub fn variable_indices<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.variable_index(n.as_ref())).collect()
    }

    /// Row indices belonging to a partition, in row order.
    pub fn rows(&self, partition: Partition) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.partition[i] == partition).collect()
    }

    pub fn is_missing(&self, variable: usize, row: usize) -> bool {
        matches!(&self.columns[variable], Column::Continuous(v) if v[row].is_none())
    }

    pub fn missing_count(&self) -> usize {
        self.columns
            .iter()
            .map(|c| match c {
                Column::Continuous(v) => v.iter().filter(|x| x.is_none()).count(),
                Column::Categorical(_) => 0,
            })
            .sum()
    }

    /// Replaces partition labels wholesale.
    pub fn with_partition(mut self, partition: Vec<Partition>) -> Result<Self> {
        if partition.len() != self.n_rows() {
            return Err(Error::Shape(format!("{} partition labels for {} rows", partition.len(), self.n_rows())));
        }
        self.partition = partition;
        Ok(self)
    }

    /// Returns a copy with one variable replaced (same row count required).
    pub fn with_variable(&self, variable: usize, schema: VariableSchema, column: Column) -> Result<Self> {
        let mut out = self.clone();
        out.schema[variable] = schema;
        out.columns[variable] = column;
        validate_schema(&out.schema)?;
        if out.columns[variable].len() != self.n_rows() {
            return Err(Error::Shape("replacement column has the wrong length".into()));
        }
        Ok(out)
    }

    /// Assigns train/validation/test labels by a seeded uniform shuffle.
    ///
    /// Validation and test receive `⌊n·f⌋` rows; the remainder goes to train.
    /// Each partition must end up with at least two rows and both outcome classes.
    pub fn split(&self, fractions: [f64; 3], seed: u64) -> Result<Self> {
        if fractions.iter().any(|f| !(*f > 0.0)) || libm::fabs(fractions.iter().sum::<f64>() - 1.0) > 1e-9 {
            return Err(Error::Split(format!("fractions {fractions:?} must be positive and sum to 1")));
        }
        let n = self.n_rows();
        let size = |f: f64| libm::floor(n as f64 * f + 1e-9) as usize;
        let n_val = size(fractions[1]);
        let n_test = size(fractions[2]);
        let n_train = n - n_val - n_test;
        for (p, k) in [(Partition::Train, n_train), (Partition::Validation, n_val), (Partition::Test, n_test)] {
            if k < 2 {
                return Err(Error::Split(format!("{p} partition would receive {k} row(s); need at least 2")));
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut crate::rng_for(seed, 0));
        let mut partition = vec![Partition::Train; n];
        for &i in &order[n_train..n_train + n_val] {
            partition[i] = Partition::Validation;
        }
        for &i in &order[n_train + n_val..] {
            partition[i] = Partition::Test;
        }
        for p in Partition::ALL {
            let positives = (0..n).filter(|&i| partition[i] == p && self.outcome[i] == 1).count();
            let total = (0..n).filter(|&i| partition[i] == p).count();
            if positives == 0 || positives == total {
                return Err(Error::Split(format!("{p} partition contains a single outcome class")));
            }
        }
        self.clone().with_partition(partition)
    }

    /// Fills missing continuous cells with the median of the non-missing
    /// values of the same variable inside `source`.
    pub fn impute_median(&self, source: Partition) -> Result<Self> {
        let source_rows = self.rows(source);
        if source_rows.is_empty() {
            return Err(Error::Invalid(format!("imputation source partition `{source}` is empty")));
        }
        let mut out = self.clone();
        for (v, col) in out.columns.iter_mut().enumerate() {
            let Column::Continuous(values) = col else { continue };
            if values.iter().all(Option::is_some) {
                continue;
            }
            let observed: Vec<f64> = source_rows.iter().filter_map(|&i| values[i]).collect();
            let med = crate::stats::median(&observed).ok_or_else(|| Error::AllMissing(self.schema[v].name.clone()))?;
            for x in values.iter_mut().filter(|x| x.is_none()) {
                *x = Some(med);
            }
        }
        Ok(out)
    }

    /// Encodes the rows of one partition over an ordered subset of variables.
    pub fn encode(&self, partition: Partition, variables: &[usize]) -> Result<(DesignMatrix, Vec<f64>)> {
        self.encode_rows(&self.rows(partition), variables)
    }

    /// Encodes explicit rows (in the given order).
    ///
    /// Continuous variables pass through; a categorical variable with L
    /// categories yields L − 1 indicators with the first category as reference.
    pub fn encode_rows(&self, rows: &[usize], variables: &[usize]) -> Result<(DesignMatrix, Vec<f64>)> {
        let mut columns = Vec::new();
        let mut names = Vec::new();
        let mut groups = Vec::with_capacity(variables.len());
        for &v in variables {
            let schema = self.schema.get(v).ok_or_else(|| Error::UnknownVariable(format!("#{v}")))?;
            let start = columns.len();
            match &schema.kind {
                VariableKind::Continuous => {
                    columns.push(ColumnSource { variable: v, category: None });
                    names.push(schema.name.clone());
                }
                VariableKind::Categorical(cats) => {
                    for (k, label) in cats.iter().enumerate().skip(1) {
                        columns.push(ColumnSource { variable: v, category: Some(k) });
                        names.push(format!("{}={}", schema.name, label));
                    }
                }
            }
            groups.push(VariableGroup { variable: v, name: schema.name.clone(), columns: start..columns.len() });
        }
        let width = columns.len();
        let mut data = vec![0.0; rows.len() * width];
        for g in &groups {
            match &self.columns[g.variable] {
                Column::Continuous(values) => {
                    for (r, &i) in rows.iter().enumerate() {
                        data[r * width + g.columns.start] = values[i].ok_or_else(|| Error::MissingValue {
                            variable: self.schema[g.variable].name.clone(),
                            row: i + 1,
                        })?;
                    }
                }
                Column::Categorical(codes) => {
                    for (r, &i) in rows.iter().enumerate() {
                        let k = codes[i] as usize;
                        if k > 0 {
                            data[r * width + g.columns.start + k - 1] = 1.0;
                        }
                    }
                }
            }
        }
        let outcome = rows.iter().map(|&i| f64::from(self.outcome[i])).collect();
        Ok((DesignMatrix { n_rows: rows.len(), n_cols: width, data, columns, names, groups }, outcome))
    }
}

/// Incremental row-wise construction from text cells.
#[derive(Debug, Clone)]
pub struct CohortBuilder {
    schema: Vec<VariableSchema>,
    columns: Vec<Column>,
    outcome: Vec<u8>,
}

impl CohortBuilder {
    pub fn new(schema: Vec<VariableSchema>) -> Result<Self> {
        validate_schema(&schema)?;
        let columns = schema
            .iter()
            .map(|v| match v.kind {
                VariableKind::Continuous => Column::Continuous(Vec::new()),
                VariableKind::Categorical(_) => Column::Categorical(Vec::new()),
            })
            .collect();
        Ok(Self { schema, columns, outcome: Vec::new() })
    }

    /// Appends one record. `cells` follow schema order; an empty continuous
    /// cell is missing. `row` is the 1-based data row used in diagnostics.
    pub fn push_record(&mut self, row: usize, cells: &[&str], outcome: &str) -> Result<()> {
        if cells.len() != self.schema.len() {
            return Err(Error::RowWidth { row, expected: self.schema.len(), found: cells.len() });
        }
        let y = match outcome.trim() {
            "0" => 0,
            "1" => 1,
            other => return Err(Error::NonBinaryOutcome { row, text: other.into() }),
        };
        // validate first so a failed row leaves the builder untouched
        let mut parsed: Vec<Cell> = Vec::with_capacity(cells.len());
        for (v, cell) in self.schema.iter().zip(cells) {
            let cell = cell.trim();
            parsed.push(match &v.kind {
                VariableKind::Continuous if cell.is_empty() => Cell::Num(None),
                VariableKind::Continuous => Cell::Num(Some(cell.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(
                    || Error::BadNumber { row, column: v.name.clone(), text: cell.into() },
                )?)),
                VariableKind::Categorical(_) if cell.is_empty() => {
                    return Err(Error::MissingCategory { row, column: v.name.clone() })
                }
                VariableKind::Categorical(cats) => Cell::Cat(
                    cats.iter().position(|c| c == cell).ok_or_else(|| Error::UnseenCategory {
                        row,
                        column: v.name.clone(),
                        label: cell.into(),
                    })? as u32,
                ),
            });
        }
        for (col, cell) in self.columns.iter_mut().zip(parsed) {
            match (col, cell) {
                (Column::Continuous(v), Cell::Num(x)) => v.push(x),
                (Column::Categorical(v), Cell::Cat(k)) => v.push(k),
                _ => unreachable!("cell kind follows schema kind"),
            }
        }
        self.outcome.push(y);
        Ok(())
    }

    pub fn finish(self) -> Result<Cohort> {
        Cohort::new(self.schema, self.columns, self.outcome)
    }
}

enum Cell {
    Num(Option<f64>),
    Cat(u32),
}

/// Origin of one design column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnSource {
    /// Schema index of the variable.
    pub variable: usize,
    /// Category index for an indicator column, `None` for continuous pass-through.
    pub category: Option<usize>,
}

/// Contiguous block of design columns belonging to one variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableGroup {
    pub variable: usize,
    pub name: String,
    pub columns: Range<usize>,
}

/// Dense row-major numeric design without an intercept column; the model
/// carries its intercept separately.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
    columns: Vec<ColumnSource>,
    names: Vec<String>,
    groups: Vec<VariableGroup>,
}

impl DesignMatrix {
    /// Builds a design from raw rows, one single-column variable per column.
    /// Mostly useful for tests and synthetic problems.
    pub fn from_rows(n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if n_cols == 0 || !data.len().is_multiple_of(n_cols) {
            return Err(Error::Shape(format!("{} values do not fill rows of width {n_cols}", data.len())));
        }
        let columns = (0..n_cols).map(|j| ColumnSource { variable: j, category: None }).collect();
        let names: Vec<String> = (0..n_cols).map(|j| format!("x{}", j + 1)).collect();
        let groups = (0..n_cols)
            .map(|j| VariableGroup { variable: j, name: names[j].clone(), columns: j..j + 1 })
            .collect();
        Ok(Self { n_rows: data.len() / n_cols, n_cols, data, columns, names, groups })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn column_map(&self) -> &[ColumnSource] {
        &self.columns
    }

    pub fn column_names(&self) -> &[String] {
        &self.names
    }

    pub fn groups(&self) -> &[VariableGroup] {
        &self.groups
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    /// Rows restricted to a subset of row indices, keeping column metadata.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Self { n_rows: rows.len(), data, ..self.clone_meta() }
    }

    fn clone_meta(&self) -> Self {
        Self {
            n_rows: 0,
            n_cols: self.n_cols,
            data: Vec::new(),
            columns: self.columns.clone(),
            names: self.names.clone(),
            groups: self.groups.clone(),
        }
    }
}
