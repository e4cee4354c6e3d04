//! File formats: TOML schema, delimited data, and buffered artifact output.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vicscore_core::tabular::CohortBuilder;
use vicscore_core::{Cohort, VariableKind, VariableSchema};

use crate::error::{CliError, CliResult, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    #[default]
    Predictor,
    Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default)]
    pub role: Role,
}

/// Declares every column of a data file and which one is the outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaFile {
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    pub variables: Vec<SchemaEntry>,
}

fn default_delimiter() -> String {
    ",".into()
}

impl SchemaFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::data(format!("schema: {e}")))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::data(format!("cannot read schema {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    }

    pub fn from_schema(schema: &[VariableSchema], outcome: &str) -> Self {
        let mut variables: Vec<SchemaEntry> = schema
            .iter()
            .map(|v| SchemaEntry {
                name: v.name.clone(),
                kind: Some(if v.is_continuous() { "continuous" } else { "categorical" }.into()),
                categories: v.categories().map(<[String]>::to_vec),
                unit: v.unit.clone(),
                role: Role::Predictor,
            })
            .collect();
        variables.push(SchemaEntry { name: outcome.into(), kind: None, categories: None, unit: None, role: Role::Outcome });
        Self { delimiter: default_delimiter(), variables }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("schema serializes")
    }

    pub fn delimiter_byte(&self) -> CliResult<u8> {
        match self.delimiter.as_bytes() {
            [b] => Ok(*b),
            _ => Err(CliError::data(format!("schema: delimiter must be one byte, got `{}`", self.delimiter))),
        }
    }

    /// Predictor schema (file order) and the outcome column name.
    pub fn predictors(&self) -> CliResult<(Vec<VariableSchema>, String)> {
        let outcomes: Vec<&SchemaEntry> = self.variables.iter().filter(|v| v.role == Role::Outcome).collect();
        let [outcome] = outcomes.as_slice() else {
            return Err(CliError::data(format!("schema: expected exactly one outcome column, found {}", outcomes.len())));
        };
        let mut out = Vec::new();
        for v in self.variables.iter().filter(|v| v.role == Role::Predictor) {
            let kind = match (v.kind.as_deref(), &v.categories) {
                (Some("continuous"), None) => VariableKind::Continuous,
                (Some("categorical"), Some(c)) => VariableKind::Categorical(c.clone()),
                (Some("continuous"), Some(_)) => {
                    return Err(CliError::data(format!("schema: continuous `{}` cannot list categories", v.name)))
                }
                (Some("categorical"), None) => {
                    return Err(CliError::data(format!("schema: categorical `{}` needs categories", v.name)))
                }
                (other, _) => {
                    return Err(CliError::data(format!(
                        "schema: `{}` has kind {:?}; expected continuous or categorical",
                        v.name, other
                    )))
                }
            };
            out.push(VariableSchema { name: v.name.clone(), kind, unit: v.unit.clone() });
        }
        Ok((out, outcome.name.clone()))
    }
}

#[derive(Debug, Clone)]
pub struct LoadedCohort {
    pub cohort: Cohort,
    pub outcome: String,
    pub schema: SchemaFile,
}

/// Reads a delimited data file whose header names every schema column.
pub fn load_cohort(data: &Path, schema_path: &Path) -> CliResult<LoadedCohort> {
    let schema = SchemaFile::read(schema_path)?;
    let (predictors, outcome) = schema.predictors()?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter_byte()?)
        .flexible(true)
        .from_path(data)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", data.display())))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::data(format!("{}: {e}", data.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.iter().all(String::is_empty) {
        return Err(CliError::data(format!("{}: file is empty", data.display())));
    }
    for h in &header {
        if !schema.variables.iter().any(|v| &v.name == h) {
            return Err(CliError::data(format!("{}: unknown column `{h}` (not in schema)", data.display())));
        }
    }
    let position = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::data(format!("{}: schema column `{name}` is missing from the header", data.display())))
    };
    let columns: Vec<usize> = predictors.iter().map(|v| position(&v.name)).collect::<CliResult<_>>()?;
    let outcome_col = position(&outcome)?;
    let mut builder = CohortBuilder::new(predictors).stage("schema")?;
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| CliError::data(format!("{}: row {row}: {e}", data.display())))?;
        if record.len() != header.len() {
            return Err(CliError::data(format!(
                "{}: row {row}: expected {} cells, found {}",
                data.display(),
                header.len(),
                record.len()
            )));
        }
        let cells: Vec<&str> = columns.iter().map(|&c| &record[c]).collect();
        builder.push_record(row, &cells, &record[outcome_col]).map_err(|e| CliError::data(format!("{}: {e}", data.display())))?;
    }
    let cohort = builder.finish().map_err(|e| CliError::data(format!("{}: {e}", data.display())))?;
    Ok(LoadedCohort { cohort, outcome, schema })
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Serializes a header and rows as comma-separated text.
pub fn csv_bytes<S: AsRef<str>>(header: &[&str], rows: impl IntoIterator<Item = Vec<S>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r.iter().map(AsRef::as_ref)).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Reads a small comma-separated table with a header into string rows.
pub fn read_table(path: &Path, expected_header: &[&str]) -> CliResult<Vec<Vec<String>>> {
    let mut reader = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != expected_header {
        return Err(CliError::data(format!(
            "{}: header is `{}`, expected `{}`",
            path.display(),
            header.join(","),
            expected_header.join(",")
        )));
    }
    reader
        .records()
        .enumerate()
        .map(|(k, r)| {
            r.map(|rec| rec.iter().map(str::to_string).collect())
                .map_err(|e| CliError::data(format!("{}: row {}: {e}", path.display(), k + 1)))
        })
        .collect()
}

/// Output files held in memory until every stage has succeeded.
#[derive(Debug, Default)]
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into(), files: Vec::new() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.into(), bytes.into()));
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    pub fn names(&self) -> Vec<&str> {
        self.files.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Writes every file; without `force` nothing is written if any target exists.
    /// Files written before a failure are removed.
    pub fn commit(&self, force: bool) -> CliResult<Vec<PathBuf>> {
        let names: Vec<&str> = self.names();
        preflight(&self.dir, &names, force)?;
        fs::create_dir_all(&self.dir)
            .map_err(|e| CliError::usage(format!("cannot create {}: {e}", self.dir.display())))?;
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            let target = self.dir.join(name);
            let tmp = self.dir.join(format!(".{name}.partial"));
            let result = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, &target));
            if let Err(e) = result {
                let _ = fs::remove_file(&tmp);
                for p in &written {
                    let _ = fs::remove_file(p);
                }
                return Err(CliError::usage(format!("cannot write {}: {e}", target.display())));
            }
            written.push(target);
        }
        Ok(written)
    }
}

/// Fails when any of `names` already exists in `dir` and `force` is off.
pub fn preflight(dir: &Path, names: &[&str], force: bool) -> CliResult<()> {
    if force {
        return Ok(());
    }
    let existing: Vec<String> =
        names.iter().map(|n| dir.join(n)).filter(|p| p.exists()).map(|p| p.display().to_string()).collect();
    if existing.is_empty() {
        Ok(())
    } else {
        Err(CliError::usage(format!("refusing to overwrite {} (pass --force)", existing.join(", "))))
    }
}
