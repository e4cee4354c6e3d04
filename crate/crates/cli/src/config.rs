//! Pipeline and synthetic-spec configuration files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vicscore_core::synth::{CollinearPair, GeneratorSpec, SynthKind, SynthVariable};
use vicscore_core::{rashomon, sage, scorecard, Partition};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Shapleyvic,
    RandomForest,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "shapleyvic" => Ok(Method::Shapleyvic),
            "random_forest" => Ok(Method::RandomForest),
            other => Err(format!("unknown method `{other}` (shapleyvic | random_forest)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutMethodName {
    Quantile,
    Kmeans,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionName {
    Train,
    Validation,
    Test,
}

impl From<PartitionName> for Partition {
    fn from(p: PartitionName) -> Self {
        match p {
            PartitionName::Train => Partition::Train,
            PartitionName::Validation => Partition::Validation,
            PartitionName::Test => Partition::Test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub models: usize,
    pub epsilon: f64,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self { models: rashomon::DEFAULT_MODELS, epsilon: rashomon::DEFAULT_EPSILON }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SageSection {
    /// Capped at the validation partition size.
    pub eval_rows: usize,
    pub background_size: usize,
    pub permutations: usize,
    /// Early-stop ratio of max se to max |value|; 0 disables.
    pub convergence: f64,
    pub min_permutations: usize,
}

impl Default for SageSection {
    fn default() -> Self {
        let d = sage::SageConfig::default();
        Self {
            eval_rows: d.eval_rows,
            background_size: d.background_size,
            permutations: d.n_permutations,
            convergence: d.convergence.unwrap_or(0.0),
            min_permutations: d.min_permutations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestSection {
    pub trees: usize,
    /// 0 = ⌊√d⌋.
    pub mtry: usize,
    pub min_leaf: usize,
}

impl Default for ForestSection {
    fn default() -> Self {
        Self { trees: 100, mtry: 0, min_leaf: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutOverride {
    pub variable: String,
    pub cuts: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScorecardSection {
    pub cut_method: CutMethodName,
    pub kmeans_k: usize,
    pub min_gain: f64,
    /// 0 = use the suggested size.
    pub final_m: usize,
    pub bootstrap: usize,
    pub overrides: Vec<CutOverride>,
}

impl Default for ScorecardSection {
    fn default() -> Self {
        Self {
            cut_method: CutMethodName::Quantile,
            kmeans_k: scorecard::DEFAULT_KMEANS_K,
            min_gain: scorecard::DEFAULT_MIN_GAIN,
            final_m: 0,
            bootstrap: 1000,
            overrides: Vec::new(),
        }
    }
}

/// Column mapping for the LACE comparator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaceSection {
    pub los: String,
    pub ed_visits: String,
    /// Flag column for acute admission; when absent every row is acute.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acute: Option<String>,
    /// Precomputed comorbidity index column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cci: Option<String>,
    /// Comorbidity name → flag column, used when `cci` is absent.
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    pub comorbidities: std::collections::BTreeMap<String, String>,
    /// Optional `flag_name,weight` file overriding the default weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub data: PathBuf,
    pub schema: PathBuf,
    #[serde(default = "default_out", skip_serializing)]
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_split")]
    pub split: [f64; 3],
    #[serde(default = "default_impute")]
    pub impute_source: PartitionName,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_gvif")]
    pub gvif_threshold: f64,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub sage: SageSection,
    #[serde(default)]
    pub forest: ForestSection,
    #[serde(default)]
    pub scorecard: ScorecardSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lace: Option<LaceSection>,
}

fn default_out() -> PathBuf {
    PathBuf::from("vicscore-out")
}
fn default_split() -> [f64; 3] {
    [0.7, 0.1, 0.2]
}
fn default_impute() -> PartitionName {
    PartitionName::Train
}
fn default_method() -> Method {
    Method::Shapleyvic
}
fn default_alpha() -> f64 {
    0.05
}
fn default_gvif() -> f64 {
    2.0
}

impl PipelineConfig {
    pub fn new(data: impl Into<PathBuf>, schema: impl Into<PathBuf>) -> Self {
        Self {
            data: data.into(),
            schema: schema.into(),
            out: default_out(),
            seed: 0,
            split: default_split(),
            impute_source: default_impute(),
            method: default_method(),
            alpha: default_alpha(),
            gvif_threshold: default_gvif(),
            ensemble: EnsembleSection::default(),
            sage: SageSection::default(),
            forest: ForestSection::default(),
            scorecard: ScorecardSection::default(),
            lace: None,
        }
    }

    /// Parses a config; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> CliResult<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))?;
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        cfg.data = resolve(&cfg.data);
        cfg.schema = resolve(&cfg.schema);
        cfg.out = resolve(&cfg.out);
        if let Some(l) = cfg.lace.as_mut() {
            l.weights = l.weights.as_deref().map(resolve);
        }
        Ok(cfg)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Rejects out-of-range settings before any computation.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::usage(format!("config: {msg}")));
        let total: f64 = self.split.iter().sum();
        if self.split.iter().any(|&f| !(f > 0.0)) || (total - 1.0).abs() > 1e-9 {
            return bad(format!("split fractions must be positive and sum to 1, got {:?}", self.split));
        }
        if !(self.ensemble.epsilon > 0.0 && self.ensemble.epsilon.is_finite()) {
            return bad(format!("ensemble.epsilon must be positive, got {}", self.ensemble.epsilon));
        }
        if self.ensemble.models < 3 {
            return bad(format!("ensemble.models must be at least 3, got {}", self.ensemble.models));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.gvif_threshold >= 1.0) {
            return bad(format!("gvif_threshold must be at least 1, got {}", self.gvif_threshold));
        }
        let s = &self.sage;
        if s.eval_rows == 0 || s.background_size == 0 || s.permutations == 0 {
            return bad("sage sizes must be positive".into());
        }
        if !(s.convergence >= 0.0) {
            return bad(format!("sage.convergence must be ≥ 0, got {}", s.convergence));
        }
        if self.forest.trees == 0 || self.forest.min_leaf == 0 {
            return bad("forest.trees and forest.min_leaf must be positive".into());
        }
        let sc = &self.scorecard;
        if sc.kmeans_k < 2 {
            return bad(format!("scorecard.kmeans_k must be at least 2, got {}", sc.kmeans_k));
        }
        if !(sc.min_gain >= 0.0) {
            return bad(format!("scorecard.min_gain must be ≥ 0, got {}", sc.min_gain));
        }
        if sc.bootstrap < 100 {
            return bad(format!("scorecard.bootstrap must be at least 100, got {}", sc.bootstrap));
        }
        for o in &sc.overrides {
            scorecard::CutEntry::manual(o.variable.clone(), o.cuts.clone())
                .map_err(|e| CliError::usage(format!("config: {e}")))?;
        }
        Ok(())
    }

    pub fn sage_config(&self, eval_rows: usize, seed: u64) -> sage::SageConfig {
        sage::SageConfig {
            eval_rows,
            background_size: self.sage.background_size,
            n_permutations: self.sage.permutations,
            seed,
            convergence: (self.sage.convergence > 0.0).then_some(self.sage.convergence),
            min_permutations: self.sage.min_permutations,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// One variable of a synthetic spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthVariableEntry {
    pub name: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<f64>>,
    /// Continuous coefficient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// One coefficient per non-reference category.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    #[serde(default)]
    pub missing_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollinearEntry {
    pub source: String,
    pub copy: String,
    pub noise_sd: f64,
    #[serde(default)]
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpecFile {
    pub n: usize,
    pub intercept: f64,
    #[serde(default)]
    pub seed: u64,
    pub variables: Vec<SynthVariableEntry>,
    #[serde(default)]
    pub collinear: Vec<CollinearEntry>,
}

impl SynthSpecFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::usage(format!("synthetic spec: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn from_spec(spec: &GeneratorSpec) -> Self {
        let mut col = 0;
        let variables = spec
            .variables
            .iter()
            .map(|v| match &v.kind {
                SynthKind::Continuous { mean, sd } => {
                    col += 1;
                    SynthVariableEntry {
                        name: v.name.clone(),
                        kind: "continuous".into(),
                        mean: Some(*mean),
                        sd: Some(*sd),
                        categories: None,
                        probabilities: None,
                        beta: Some(spec.true_betas[col - 1]),
                        betas: None,
                        missing_rate: v.missing_rate,
                    }
                }
                SynthKind::Categorical { labels, probabilities } => {
                    let w = labels.len() - 1;
                    col += w;
                    SynthVariableEntry {
                        name: v.name.clone(),
                        kind: "categorical".into(),
                        mean: None,
                        sd: None,
                        categories: Some(labels.clone()),
                        probabilities: Some(probabilities.clone()),
                        beta: None,
                        betas: Some(spec.true_betas[col - w..col].to_vec()),
                        missing_rate: v.missing_rate,
                    }
                }
            })
            .collect();
        let collinear = spec
            .collinear_pairs
            .iter()
            .enumerate()
            .map(|(k, p)| CollinearEntry {
                source: p.source.clone(),
                copy: p.copy.clone(),
                noise_sd: p.noise_sd,
                beta: spec.true_betas[col + k],
            })
            .collect();
        Self { n: spec.n, intercept: spec.intercept, seed: spec.seed, variables, collinear }
    }

    pub fn to_spec(&self) -> CliResult<GeneratorSpec> {
        let bad = |msg: String| CliError::usage(format!("synthetic spec: {msg}"));
        let mut variables = Vec::new();
        let mut betas = Vec::new();
        for v in &self.variables {
            let kind = match v.kind.as_str() {
                "continuous" => {
                    betas.push(v.beta.unwrap_or(0.0));
                    SynthKind::Continuous {
                        mean: v.mean.unwrap_or(0.0),
                        sd: v.sd.ok_or_else(|| bad(format!("`{}` needs sd", v.name)))?,
                    }
                }
                "categorical" => {
                    let labels = v.categories.clone().ok_or_else(|| bad(format!("`{}` needs categories", v.name)))?;
                    let probabilities =
                        v.probabilities.clone().ok_or_else(|| bad(format!("`{}` needs probabilities", v.name)))?;
                    let b = v.betas.clone().unwrap_or_else(|| vec![0.0; labels.len().saturating_sub(1)]);
                    if b.len() + 1 != labels.len() {
                        return Err(bad(format!("`{}` needs one beta per non-reference category", v.name)));
                    }
                    betas.extend(b);
                    SynthKind::Categorical { labels, probabilities }
                }
                other => return Err(bad(format!("`{}` has unknown kind `{other}`", v.name))),
            };
            variables.push(SynthVariable { name: v.name.clone(), kind, missing_rate: v.missing_rate });
        }
        let mut collinear_pairs = Vec::new();
        for c in &self.collinear {
            betas.push(c.beta);
            collinear_pairs.push(CollinearPair { source: c.source.clone(), copy: c.copy.clone(), noise_sd: c.noise_sd });
        }
        Ok(GeneratorSpec {
            n: self.n,
            variables,
            collinear_pairs,
            true_betas: betas,
            intercept: self.intercept,
            seed: self.seed,
        })
    }
}
