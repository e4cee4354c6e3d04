//! Variable ranking: ShapleyVIC ensemble ranks from pairwise significance
//! counts, and the random-forest baseline.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::forest::{rf_importance, RfConfig};
use crate::pool::PooledImportance;
use crate::sage::ImportanceRecord;
use crate::stats::normal_quantile;
use crate::tabular::Cohort;

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMethod {
    ShapleyVic,
    RandomForest,
}

impl RankMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            RankMethod::ShapleyVic => "shapleyvic",
            RankMethod::RandomForest => "random_forest",
        }
    }
}

impl fmt::Display for RankMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RankMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shapleyvic" => Ok(RankMethod::ShapleyVic),
            "random_forest" | "rf" => Ok(RankMethod::RandomForest),
            other => Err(Error::Invalid(format!("unknown ranking method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry {
    pub variable: String,
    pub per_model_ranks: Vec<usize>,
    pub mean_rank: f64,
    /// Pooled mean importance (ShapleyVIC) or Gini importance (forest).
    pub score: f64,
    /// 1-based position in the final ordering.
    pub final_order: usize,
}

/// Entries in input (schema) order; `final_order` gives the ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub method: RankMethod,
    pub entries: Vec<RankEntry>,
}

impl RankTable {
    /// Entries sorted by `final_order`.
    pub fn ordered(&self) -> Vec<&RankEntry> {
        let mut out: Vec<&RankEntry> = self.entries.iter().collect();
        out.sort_by_key(|e| e.final_order);
        out
    }

    pub fn ordered_names(&self) -> Vec<String> {
        self.ordered().into_iter().map(|e| e.variable.clone()).collect()
    }
}

/// Tied ranks from scores where larger is better: 1 + number strictly better.
fn min_ranks<T: PartialOrd>(scores: &[T]) -> Vec<usize> {
    scores.iter().map(|s| 1 + scores.iter().filter(|o| *o > s).count()).collect()
}

/// Ranks one model's variables by how many others each significantly exceeds.
pub fn rank_within_model(values: &[(f64, f64)], alpha: f64) -> Vec<usize> {
    let z = normal_quantile(1.0 - alpha / 2.0);
    let wins: Vec<usize> = values
        .iter()
        .enumerate()
        .map(|(j, &(vj, sj))| {
            values
                .iter()
                .enumerate()
                .filter(|&(k, &(vk, sk))| k != j && (vj - vk) / libm::sqrt(sj * sj + sk * sk) > z)
                .count()
        })
        .collect();
    min_ranks(&wins)
}

/// Averages per-model ranks; ties go to the larger score, then input order.
///
/// `per_model[m][j]` is the rank of variable `j` in model `m`.
pub fn ensemble_rank(
    method: RankMethod,
    variables: &[String],
    per_model: &[Vec<usize>],
    scores: &[f64],
) -> Result<RankTable> {
    let d = variables.len();
    if scores.len() != d || per_model.iter().any(|r| r.len() != d) {
        return Err(Error::Shape("rank vectors must cover every variable".into()));
    }
    if per_model.is_empty() {
        return Err(Error::TooFewModels(0));
    }
    let sums: Vec<usize> = (0..d).map(|j| per_model.iter().map(|r| r[j]).sum()).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        sums[a]
            .cmp(&sums[b])
            .then_with(|| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal))
            .then(a.cmp(&b))
    });
    let mut final_order = alloc::vec![0; d];
    for (pos, &j) in order.iter().enumerate() {
        final_order[j] = pos + 1;
    }
    let m = per_model.len() as f64;
    let entries = (0..d)
        .map(|j| RankEntry {
            variable: variables[j].clone(),
            per_model_ranks: per_model.iter().map(|r| r[j]).collect(),
            mean_rank: sums[j] as f64 / m,
            score: scores[j],
            final_order: final_order[j],
        })
        .collect();
    Ok(RankTable { method, entries })
}

/// ShapleyVIC ranking of the pooled variables from their per-model records.
pub fn shapleyvic_rank(records: &[ImportanceRecord], pooled: &[PooledImportance], alpha: f64) -> Result<RankTable> {
    let variables: Vec<String> = pooled.iter().map(|p| p.variable.clone()).collect();
    let mut models: Vec<usize> = records.iter().map(|r| r.model_index).collect();
    models.sort_unstable();
    models.dedup();
    let per_model = models
        .iter()
        .map(|&m| {
            let values = variables
                .iter()
                .map(|v| {
                    records
                        .iter()
                        .find(|r| r.model_index == m && &r.variable == v)
                        .map(|r| (r.value, r.se))
                        .ok_or_else(|| Error::Invalid(format!("model {m} has no record for `{v}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(rank_within_model(&values, alpha))
        })
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<f64> = pooled.iter().map(|p| p.mean).collect();
    ensemble_rank(RankMethod::ShapleyVic, &variables, &per_model, &scores)
}

/// Random-forest ranking by Gini importance.
pub fn rf_rank(cohort: &Cohort, variables: &[usize], config: &RfConfig) -> Result<RankTable> {
    let imp = rf_importance(cohort, variables, config)?;
    let names: Vec<String> = variables.iter().map(|&v| cohort.schema()[v].name.clone()).collect();
    let ranks = min_ranks(&imp.importance);
    ensemble_rank(RankMethod::RandomForest, &names, &[ranks], &imp.importance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use rand::{Rng, SeedableRng};

    #[test]
    fn walk_through() {
        let vals = [(10.0, 1e-9), (5.0, 1e-9), (5.0, 1e-9), (1.0, 1e-9)];
        assert_eq!(rank_within_model(&vals, 0.05), vec![1, 2, 2, 4]);
    }

    #[test]
    fn huge_se_ties_everything() {
        let vals = [(10.0, 1e6), (5.0, 1e6), (1.0, 1e6)];
        assert_eq!(rank_within_model(&vals, 0.05), vec![1, 1, 1]);
    }

    fn oracle(values: &[(f64, f64)]) -> Vec<usize> {
        let z = 1.959963984540054;
        let d = values.len();
        let mut wins = vec![0usize; d];
        for j in 0..d {
            for k in 0..d {
                if j == k {
                    continue;
                }
                let diff = values[j].0 - values[k].0;
                let sd = (values[j].1.powi(2) + values[k].1.powi(2)).sqrt();
                if diff / sd > z {
                    wins[j] += 1;
                }
            }
        }
        let mut sorted = wins.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        // rank = position of the first occurrence in descending order
        wins.iter().map(|w| sorted.iter().position(|s| s == w).unwrap() + 1).collect()
    }

    #[test]
    fn matches_pairwise_oracle() {
        for seed in 0..100 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let vals: Vec<(f64, f64)> = (0..8).map(|_| (rng.gen::<f64>(), 0.01 + 0.2 * rng.gen::<f64>())).collect();
            assert_eq!(rank_within_model(&vals, 0.05), oracle(&vals), "seed {seed}");
        }
    }

    #[test]
    fn symmetric_tie_uses_score() {
        let names = vec!["a".to_string(), "b".to_string()];
        let t = ensemble_rank(RankMethod::ShapleyVic, &names, &[vec![1, 2], vec![2, 1]], &[0.1, 0.3]).unwrap();
        assert_eq!(t.entries[0].mean_rank, 1.5);
        assert_eq!(t.entries[1].mean_rank, 1.5);
        assert_eq!(t.ordered_names(), ["b", "a"]);
        let t = ensemble_rank(RankMethod::ShapleyVic, &names, &[vec![1, 2], vec![2, 1]], &[0.3, 0.3]).unwrap();
        assert_eq!(t.ordered_names(), ["a", "b"]);
    }

    #[test]
    fn unanimous_first() {
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let per_model = vec![vec![2, 1, 3], vec![3, 1, 2], vec![2, 1, 2]];
        let t = ensemble_rank(RankMethod::ShapleyVic, &names, &per_model, &[0.0; 3]).unwrap();
        assert_eq!(t.entries[1].final_order, 1);
    }

    #[test]
    fn ensemble_matches_sort_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let names: Vec<String> = (0..5).map(|i| format!("v{i}")).collect();
        let per_model: Vec<Vec<usize>> = (0..20).map(|_| (0..5).map(|_| rng.gen_range(1..=5)).collect()).collect();
        let scores: Vec<f64> = (0..5).map(|_| rng.gen()).collect();
        let t = ensemble_rank(RankMethod::ShapleyVic, &names, &per_model, &scores).unwrap();
        let mut oracle: Vec<(f64, f64, usize)> = (0..5)
            .map(|j| (per_model.iter().map(|r| r[j] as f64).sum::<f64>() / 20.0, -scores[j], j))
            .collect();
        oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected: Vec<String> = oracle.iter().map(|o| names[o.2].clone()).collect();
        assert_eq!(t.ordered_names(), expected);
    }
}
