//! Shapley additive global importance (SAGE) of each variable to a logistic
//! model, with marginal imputation from a fixed background sample.
//!
//! The cooperative game: a coalition `S` of variables is "revealed" on the
//! evaluation rows while the remaining variables take their values from each
//! background row in turn; the prediction is the background-averaged
//! probability and the coalition's loss is the mean logistic loss of that
//! prediction. A variable's importance is its Shapley value of the loss
//! reduction. All design columns of one variable move together.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};

use crate::error::{Error, Result};
use crate::glm::CoefficientVector;
use crate::stats::log_loss;
use crate::tabular::{Cohort, DesignMatrix, Partition};

/// Largest coalition game [`SageGame::exact`] will enumerate.
pub const MAX_EXACT_PLAYERS: usize = 12;

const EXP_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceRecord {
    pub model_index: usize,
    pub variable: String,
    /// Importance in mean-loss units (positive = revealing the variable lowers loss).
    pub value: f64,
    pub se: f64,
    pub absolute_applied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SageConfig {
    /// Leading validation rows used for evaluation.
    pub eval_rows: usize,
    /// Train rows drawn (seeded, without replacement) as the imputation background.
    pub background_size: usize,
    /// Permutation budget per model.
    pub n_permutations: usize,
    pub seed: u64,
    /// Stop early once the largest standard error falls below this fraction
    /// of the largest |value|. `None` always spends the full budget.
    pub convergence: Option<f64>,
    /// Permutations drawn before the convergence check is consulted.
    pub min_permutations: usize,
}

impl Default for SageConfig {
    fn default() -> Self {
        Self {
            eval_rows: 3500,
            background_size: 128,
            n_permutations: 256,
            seed: 0,
            convergence: Some(0.01),
            min_permutations: 32,
        }
    }
}

/// Evaluation and background designs shared by every model of an ensemble.
#[derive(Debug, Clone)]
pub struct SageData {
    pub eval: DesignMatrix,
    pub eval_outcome: Vec<f64>,
    pub background: DesignMatrix,
}

impl SageData {
    /// First `eval_rows` validation rows, and a seeded background sample from train.
    pub fn from_cohort(cohort: &Cohort, variables: &[usize], config: &SageConfig) -> Result<Self> {
        if config.eval_rows == 0 || config.background_size == 0 || config.n_permutations == 0 {
            return Err(Error::Invalid("SAGE sizes must all be positive".into()));
        }
        let validation = cohort.rows(Partition::Validation);
        if validation.len() < config.eval_rows {
            return Err(Error::Importance(format!(
                "validation partition has {} rows, {} requested for evaluation",
                validation.len(),
                config.eval_rows
            )));
        }
        let train = cohort.rows(Partition::Train);
        if train.len() < config.background_size {
            return Err(Error::Importance(format!(
                "background sample of {} requested but train has only {} rows",
                config.background_size,
                train.len()
            )));
        }
        let mut rng = crate::rng_for(crate::derive_seed(config.seed, 0xBAC6), 0);
        let mut picked: Vec<usize> = index::sample(&mut rng, train.len(), config.background_size)
            .into_iter()
            .map(|k| train[k])
            .collect();
        picked.sort_unstable();
        let (eval, eval_outcome) = cohort.encode_rows(&validation[..config.eval_rows], variables)?;
        let (background, _) = cohort.encode_rows(&picked, variables)?;
        Ok(Self { eval, eval_outcome, background })
    }

    pub fn game(&self, model: &CoefficientVector) -> Result<SageGame> {
        SageGame::new(model, &self.eval, &self.eval_outcome, &self.background)
    }
}

/// The coalition game for one model, reduced to per-variable linear
/// contributions on evaluation and background rows.
#[derive(Debug, Clone)]
pub struct SageGame {
    intercept: f64,
    players: Vec<String>,
    /// `eval_contrib[i * d + v]` = Σ over v's columns of β·x for evaluation row i.
    eval_contrib: Vec<f64>,
    eval_y: Vec<f64>,
    bg_contrib: Vec<f64>,
    n_eval: usize,
    n_bg: usize,
}

fn contributions(model: &CoefficientVector, design: &DesignMatrix) -> Vec<f64> {
    let groups = design.groups();
    let mut out = Vec::with_capacity(design.n_rows() * groups.len());
    for i in 0..design.n_rows() {
        let row = design.row(i);
        for g in groups {
            out.push(g.columns.clone().map(|j| row[j] * model.betas[j]).sum());
        }
    }
    out
}

impl SageGame {
    pub fn new(
        model: &CoefficientVector,
        eval: &DesignMatrix,
        eval_outcome: &[f64],
        background: &DesignMatrix,
    ) -> Result<Self> {
        if model.betas.len() != eval.n_cols() || eval.n_cols() != background.n_cols() {
            return Err(Error::Shape("model, evaluation and background layouts differ".into()));
        }
        if eval.n_rows() != eval_outcome.len() {
            return Err(Error::Shape("evaluation rows and outcomes differ in length".into()));
        }
        if eval.n_rows() == 0 || background.n_rows() == 0 {
            return Err(Error::Empty);
        }
        Ok(Self {
            intercept: model.intercept,
            players: eval.groups().iter().map(|g| g.name.clone()).collect(),
            eval_contrib: contributions(model, eval),
            eval_y: eval_outcome.to_vec(),
            bg_contrib: contributions(model, background),
            n_eval: eval.n_rows(),
            n_bg: background.n_rows(),
        })
    }

    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    pub fn players(&self) -> &[String] {
        &self.players
    }

    /// Mean loss when evaluation row `i` has linear predictor
    /// `intercept + revealed[i] + hidden[b]` under background row `b`.
    ///
    /// Uses σ(a + h) = 1 / (1 + e^(−a)·e^(−h)), so only `n_eval + n_bg`
    /// exponentials are evaluated per call.
    fn mean_loss(&self, revealed: &[f64], hidden: &[f64]) -> f64 {
        let inv_bg = 1.0 / self.n_bg as f64;
        let neg_exp = |x: f64| libm::exp(-x.clamp(-EXP_LIMIT, EXP_LIMIT));
        let f: Vec<f64> = hidden.iter().map(|&h| neg_exp(h)).collect();
        let mut total = 0.0;
        for i in 0..self.n_eval {
            let e = neg_exp(self.intercept + revealed[i]);
            let p = f.iter().map(|&fb| 1.0 / (1.0 + e * fb)).sum::<f64>() * inv_bg;
            total += log_loss(p, self.eval_y[i]);
        }
        total / self.n_eval as f64
    }

    /// Loss of the coalition given by `mask` (bit v set = variable v revealed).
    pub fn coalition_loss(&self, mask: u64) -> f64 {
        let d = self.n_players();
        let revealed: Vec<f64> = (0..self.n_eval)
            .map(|i| (0..d).filter(|v| mask >> v & 1 == 1).map(|v| self.eval_contrib[i * d + v]).sum())
            .collect();
        let hidden: Vec<f64> = (0..self.n_bg)
            .map(|b| (0..d).filter(|v| mask >> v & 1 == 0).map(|v| self.bg_contrib[b * d + v]).sum())
            .collect();
        self.mean_loss(&revealed, &hidden)
    }

    /// Loss with nothing revealed.
    pub fn null_loss(&self) -> f64 {
        self.coalition_loss(0)
    }

    /// Loss with every variable revealed (the model's own loss on the evaluation rows).
    pub fn full_loss(&self) -> f64 {
        self.coalition_loss((1u64 << self.n_players()) - 1)
    }

    /// Exact Shapley values by enumerating all `2^d` coalitions.
    pub fn exact(&self) -> Result<Vec<f64>> {
        let d = self.n_players();
        if d > MAX_EXACT_PLAYERS {
            return Err(Error::Importance(format!(
                "exact enumeration is limited to {MAX_EXACT_PLAYERS} variables, got {d}"
            )));
        }
        let losses: Vec<f64> = crate::par::map_range(1usize << d, |mask| self.coalition_loss(mask as u64));
        // weight(|S|) = |S|! (d − |S| − 1)! / d!
        let mut fact = vec![1.0f64; d + 1];
        for k in 1..=d {
            fact[k] = fact[k - 1] * k as f64;
        }
        let mut phi = vec![0.0; d];
        for (j, slot) in phi.iter_mut().enumerate() {
            let bit = 1usize << j;
            let mut acc = 0.0;
            for mask in 0..(1usize << d) {
                if mask & bit != 0 {
                    continue;
                }
                let s = mask.count_ones() as usize;
                let w = fact[s] * fact[d - s - 1] / fact[d];
                acc += w * (losses[mask] - losses[mask | bit]);
            }
            *slot = acc;
        }
        Ok(phi)
    }

    /// Permutation-sampling estimate: `(value, se)` per variable.
    ///
    /// Each permutation reveals the variables one at a time; a variable's
    /// contribution is the drop in loss at its reveal. The value is the mean
    /// over permutations and `se` the sample standard deviation over √count.
    pub fn estimate(&self, n_permutations: usize, convergence: Option<f64>, min_permutations: usize, seed: u64) -> Vec<(f64, f64)> {
        let d = self.n_players();
        let mut rng = crate::rng_for(seed, 0);
        let null = self.null_loss();
        let full = self.full_loss();
        let base_hidden: Vec<f64> =
            (0..self.n_bg).map(|b| self.bg_contrib[b * d..(b + 1) * d].iter().sum()).collect();
        // Welford accumulators
        let mut count = 0usize;
        let mut mean = vec![0.0; d];
        let mut m2 = vec![0.0; d];
        let mut order: Vec<usize> = (0..d).collect();
        let mut revealed = vec![0.0; self.n_eval];
        let mut hidden = vec![0.0; self.n_bg];
        for _ in 0..n_permutations {
            order.shuffle(&mut rng);
            revealed.iter_mut().for_each(|r| *r = 0.0);
            hidden.copy_from_slice(&base_hidden);
            let mut previous = null;
            count += 1;
            for (step, &v) in order.iter().enumerate() {
                for (i, r) in revealed.iter_mut().enumerate() {
                    *r += self.eval_contrib[i * d + v];
                }
                for (b, h) in hidden.iter_mut().enumerate() {
                    *h -= self.bg_contrib[b * d + v];
                }
                let current = if step + 1 == d { full } else { self.mean_loss(&revealed, &hidden) };
                let delta = previous - current;
                previous = current;
                let diff = delta - mean[v];
                mean[v] += diff / count as f64;
                m2[v] += diff * (delta - mean[v]);
            }
            if let Some(threshold) = convergence {
                if count >= min_permutations.max(2) && count.is_multiple_of(8) {
                    let max_value = mean.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    let max_se = m2.iter().fold(0.0f64, |m, s| m.max(libm::sqrt(s / (count - 1) as f64 / count as f64)));
                    if max_se <= threshold * max_value {
                        break;
                    }
                }
            }
        }
        let n = count as f64;
        mean.into_iter()
            .zip(m2)
            .map(|(m, s)| (m, if count > 1 { libm::sqrt(s / (n - 1.0) / n) } else { 0.0 }))
            .collect()
    }

    fn records(&self, model_index: usize, values: Vec<(f64, f64)>) -> Vec<ImportanceRecord> {
        self.players
            .iter()
            .zip(values)
            .map(|(name, (value, se))| ImportanceRecord {
                model_index,
                variable: name.clone(),
                value,
                se,
                absolute_applied: false,
            })
            .collect()
    }
}

/// SAGE estimate for one model over `variables` of `cohort`.
pub fn sage_estimate(
    model: &CoefficientVector,
    cohort: &Cohort,
    variables: &[usize],
    config: &SageConfig,
) -> Result<Vec<ImportanceRecord>> {
    let data = SageData::from_cohort(cohort, variables, config)?;
    let game = data.game(model)?;
    let est = game.estimate(config.n_permutations, config.convergence, config.min_permutations, config.seed);
    Ok(game.records(0, est))
}

/// Exact Shapley values with the same value function; `se` is zero.
pub fn sage_exact(
    model: &CoefficientVector,
    cohort: &Cohort,
    variables: &[usize],
    config: &SageConfig,
) -> Result<Vec<ImportanceRecord>> {
    if variables.len() > MAX_EXACT_PLAYERS {
        return Err(Error::Importance(format!(
            "exact enumeration is limited to {MAX_EXACT_PLAYERS} variables, got {}",
            variables.len()
        )));
    }
    let data = SageData::from_cohort(cohort, variables, config)?;
    let game = data.game(model)?;
    let exact = game.exact()?;
    Ok(game.records(0, exact.into_iter().map(|v| (v, 0.0)).collect()))
}

/// Importance of every ensemble member, one job per model.
///
/// Model `k` uses the permutation stream `derive_seed(config.seed, k)`, so the
/// records do not depend on scheduling.
pub fn ensemble_importance(
    models: &[CoefficientVector],
    data: &SageData,
    config: &SageConfig,
) -> Result<Vec<ImportanceRecord>> {
    let per_model: Vec<Result<Vec<ImportanceRecord>>> = crate::par::map_range(models.len(), |k| {
        let game = data.game(&models[k])?;
        let seed = crate::derive_seed(config.seed, k as u64 + 1);
        let est = game.estimate(config.n_permutations, config.convergence, config.min_permutations, seed);
        Ok(game.records(k, est))
    });
    let mut out = Vec::with_capacity(models.len() * data.eval.groups().len());
    for r in per_model {
        out.extend(r?);
    }
    Ok(out)
}

/// Replaces values by their absolute value for variables whose GVIF exceeds
/// `threshold`; standard errors are unchanged.
pub fn apply_absolute(
    records: &[ImportanceRecord],
    gvif_by_variable: &BTreeMap<String, f64>,
    threshold: f64,
) -> Result<Vec<ImportanceRecord>> {
    records
        .iter()
        .map(|r| {
            let g = gvif_by_variable
                .get(&r.variable)
                .ok_or_else(|| Error::Invalid(format!("no GVIF for variable `{}`", r.variable)))?;
            let mut out = r.clone();
            if *g > threshold {
                out.value = libm::fabs(r.value);
                out.absolute_applied = true;
            }
            Ok(out)
        })
        .collect()
}
