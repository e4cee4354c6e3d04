//! Seeded synthetic cohorts with known coefficients, for tests and
//! end-to-end runs.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::stats::sigmoid;
use crate::tabular::{Cohort, Column, VariableSchema};

#[derive(Debug, Clone, PartialEq)]
pub enum SynthKind {
    Continuous { mean: f64, sd: f64 },
    Categorical { labels: Vec<String>, probabilities: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthVariable {
    pub name: String,
    pub kind: SynthKind,
    /// Fraction of continuous cells blanked after the outcome is drawn.
    pub missing_rate: f64,
}

impl SynthVariable {
    pub fn continuous(name: &str, mean: f64, sd: f64) -> Self {
        Self { name: name.into(), kind: SynthKind::Continuous { mean, sd }, missing_rate: 0.0 }
    }

    pub fn categorical(name: &str, labels: &[&str], probabilities: &[f64]) -> Self {
        Self {
            name: name.into(),
            kind: SynthKind::Categorical {
                labels: labels.iter().map(|s| String::from(*s)).collect(),
                probabilities: probabilities.to_vec(),
            },
            missing_rate: 0.0,
        }
    }

    fn encoded_width(&self) -> usize {
        match &self.kind {
            SynthKind::Continuous { .. } => 1,
            SynthKind::Categorical { labels, .. } => labels.len() - 1,
        }
    }
}

/// `copy = source + N(0, noise_sd²)`, appended after the listed variables.
#[derive(Debug, Clone, PartialEq)]
pub struct CollinearPair {
    pub source: String,
    pub copy: String,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub n: usize,
    pub variables: Vec<SynthVariable>,
    pub collinear_pairs: Vec<CollinearPair>,
    /// One coefficient per encoded column of the output schema (variables, then copies).
    pub true_betas: Vec<f64>,
    pub intercept: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub cohort: Cohort,
    pub warnings: Vec<String>,
}

impl GeneratorSpec {
    /// The end-to-end spec: 20 variables (12 continuous, 8 categorical),
    /// 6 carrying signal, with `c12` a near copy of the noise variable `c11`.
    pub fn acceptance_default(seed: u64) -> Self {
        let mut variables = Vec::new();
        let cont = [
            ("c1", 50.0, 10.0),
            ("c2", 0.0, 1.0),
            ("c3", 5.0, 2.0),
            ("c4", 100.0, 20.0),
            ("c5", 0.0, 1.0),
            ("c6", 30.0, 5.0),
            ("c7", 0.0, 1.0),
            ("c8", 10.0, 3.0),
            ("c9", 0.0, 1.0),
            ("c10", 70.0, 12.0),
            ("c11", 0.0, 1.0),
        ];
        for (name, mean, sd) in cont {
            variables.push(SynthVariable::continuous(name, mean, sd));
        }
        variables[0].missing_rate = 0.02;
        variables[5].missing_rate = 0.02;
        variables.push(SynthVariable::categorical("k1", &["A", "B", "C"], &[0.5, 0.3, 0.2]));
        variables.push(SynthVariable::categorical("k2", &["no", "yes"], &[0.6, 0.4]));
        variables.push(SynthVariable::categorical("k3", &["no", "yes"], &[0.7, 0.3]));
        variables.push(SynthVariable::categorical("k4", &["L", "M", "H"], &[0.3, 0.4, 0.3]));
        variables.push(SynthVariable::categorical("k5", &["no", "yes"], &[0.5, 0.5]));
        variables.push(SynthVariable::categorical("k6", &["P1", "P2", "P3"], &[0.2, 0.5, 0.3]));
        variables.push(SynthVariable::categorical("k7", &["no", "yes"], &[0.8, 0.2]));
        variables.push(SynthVariable::categorical("k8", &["a", "b", "c", "d"], &[0.25, 0.25, 0.25, 0.25]));
        let mut betas = vec![0.0; 11];
        betas[0] = 0.6 / 10.0;
        betas[1] = -0.5;
        betas[2] = 0.45 / 2.0;
        betas[3] = 0.4 / 20.0;
        // k1 (B, C), k2 (yes), then the noise categories
        betas.extend([0.8, 1.3, -0.9]);
        betas.extend([0.0; 1 + 2 + 1 + 2 + 1 + 3]);
        betas.push(0.0); // c12
        let intercept = -1.5 - (0.6 * 5.0 + 0.45 * 2.5 + 0.4 * 5.0) + 0.9 * 0.4;
        Self {
            n: 20_000,
            variables,
            collinear_pairs: vec![CollinearPair { source: "c11".into(), copy: "c12".into(), noise_sd: 0.5 }],
            true_betas: betas,
            intercept,
            seed,
        }
    }

    /// Names of the variables with a non-zero coefficient.
    pub fn signal_variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut col = 0;
        for v in &self.variables {
            let w = v.encoded_width();
            if self.true_betas[col..col + w].iter().any(|&b| b != 0.0) {
                out.push(v.name.clone());
            }
            col += w;
        }
        for (k, p) in self.collinear_pairs.iter().enumerate() {
            if self.true_betas.get(col + k).is_some_and(|&b| b != 0.0) {
                out.push(p.copy.clone());
            }
        }
        out
    }

    /// Every output variable name, in schema order.
    pub fn variable_names(&self) -> Vec<String> {
        self.variables
            .iter()
            .map(|v| v.name.clone())
            .chain(self.collinear_pairs.iter().map(|p| p.copy.clone()))
            .collect()
    }

    fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if self.n == 0 {
            return Err(Error::Invalid("synthetic cohort needs n ≥ 1".into()));
        }
        let width: usize = self.variables.iter().map(SynthVariable::encoded_width).sum::<usize>() + self.collinear_pairs.len();
        if self.true_betas.len() != width {
            return Err(Error::Invalid(format!(
                "{} coefficients given for {width} encoded columns",
                self.true_betas.len()
            )));
        }
        let mut col = 0;
        for v in &self.variables {
            if !(0.0..1.0).contains(&v.missing_rate) {
                return Err(Error::Invalid(format!("missing rate for `{}` must lie in [0, 1)", v.name)));
            }
            match &v.kind {
                SynthKind::Continuous { sd, .. } => {
                    if !(*sd >= 0.0 && sd.is_finite()) {
                        return Err(Error::Invalid(format!("sd for `{}` must be finite and ≥ 0", v.name)));
                    }
                }
                SynthKind::Categorical { labels, probabilities } => {
                    if v.missing_rate > 0.0 {
                        return Err(Error::Invalid(format!("categorical `{}` cannot have missing values", v.name)));
                    }
                    if labels.len() < 2 || labels.len() != probabilities.len() {
                        return Err(Error::Invalid(format!("`{}` needs ≥ 2 labels, one probability each", v.name)));
                    }
                    let total: f64 = probabilities.iter().sum();
                    if probabilities.iter().any(|&p| p < 0.0) || libm::fabs(total - 1.0) > 1e-9 {
                        return Err(Error::Invalid(format!("probabilities for `{}` must sum to 1", v.name)));
                    }
                    let betas = &self.true_betas[col..col + labels.len() - 1];
                    if probabilities.contains(&1.0) && betas.iter().any(|&b| b != 0.0) {
                        warnings.push(format!("`{}` is constant but carries a coefficient", v.name));
                    }
                }
            }
            col += v.encoded_width();
        }
        for p in &self.collinear_pairs {
            let source = self.variables.iter().find(|v| v.name == p.source);
            if !matches!(source.map(|v| &v.kind), Some(SynthKind::Continuous { .. })) {
                return Err(Error::Invalid(format!("collinear source `{}` must be a continuous variable", p.source)));
            }
            if !(p.noise_sd >= 0.0 && p.noise_sd.is_finite()) {
                return Err(Error::Invalid(format!("noise sd for `{}` must be finite and ≥ 0", p.copy)));
            }
        }
        Ok(warnings)
    }
}

fn normal(mean: f64, sd: f64) -> Result<Normal<f64>> {
    Normal::new(mean, sd).map_err(|e| Error::Invalid(format!("normal({mean}, {sd}): {e}")))
}

/// Draws predictors, collinear copies, the outcome and then missingness.
pub fn generate(spec: &GeneratorSpec) -> Result<Generated> {
    let warnings = spec.validate()?;
    let n = spec.n;
    let mut rng = crate::rng_for(spec.seed, 0);
    let mut schema = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut codes: Vec<Vec<u32>> = Vec::new();
    for v in &spec.variables {
        match &v.kind {
            SynthKind::Continuous { mean, sd } => {
                let dist = normal(*mean, *sd)?;
                values.push((0..n).map(|_| dist.sample(&mut rng)).collect());
                codes.push(Vec::new());
                schema.push(VariableSchema::continuous(v.name.clone()));
            }
            SynthKind::Categorical { labels, probabilities } => {
                let draw = |u: f64| {
                    let mut acc = 0.0;
                    for (k, p) in probabilities.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            return k as u32;
                        }
                    }
                    (labels.len() - 1) as u32
                };
                codes.push((0..n).map(|_| draw(rng.gen::<f64>())).collect());
                values.push(Vec::new());
                schema.push(VariableSchema::categorical(v.name.clone(), labels.iter().cloned()));
            }
        }
    }
    for p in &spec.collinear_pairs {
        let src = spec.variables.iter().position(|v| v.name == p.source).unwrap_or(0);
        let noise = normal(0.0, p.noise_sd)?;
        let copy: Vec<f64> = values[src].iter().map(|x| x + noise.sample(&mut rng)).collect();
        values.push(copy);
        codes.push(Vec::new());
        schema.push(VariableSchema::continuous(p.copy.clone()));
    }
    let mut eta = vec![spec.intercept; n];
    let mut col = 0;
    for (k, s) in schema.iter().enumerate() {
        if s.is_continuous() {
            let b = spec.true_betas[col];
            for (e, x) in eta.iter_mut().zip(&values[k]) {
                *e += b * x;
            }
            col += 1;
        } else {
            let width = s.encoded_width();
            for (e, &c) in eta.iter_mut().zip(&codes[k]) {
                if c > 0 {
                    *e += spec.true_betas[col + c as usize - 1];
                }
            }
            col += width;
        }
    }
    let outcome: Vec<u8> = eta.iter().map(|&e| (rng.gen::<f64>() < sigmoid(e)) as u8).collect();
    let mut columns = Vec::with_capacity(schema.len());
    for (k, s) in schema.iter().enumerate() {
        if s.is_continuous() {
            let rate = spec.variables.get(k).map_or(0.0, |v| v.missing_rate);
            let col: Vec<Option<f64>> = values[k]
                .iter()
                .map(|&x| if rate > 0.0 && rng.gen::<f64>() < rate { None } else { Some(x) })
                .collect();
            columns.push(Column::Continuous(col));
        } else {
            columns.push(Column::Categorical(core::mem::take(&mut codes[k])));
        }
    }
    let cohort = Cohort::new(schema, columns, outcome)?;
    Ok(Generated { cohort, warnings })
}
