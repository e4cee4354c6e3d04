//! Bagged Gini classification trees, used only for their impurity-decrease
//! variable importance.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::tabular::{Cohort, Column, Partition};

#[derive(Debug, Clone, PartialEq)]
pub struct RfConfig {
    pub n_trees: usize,
    /// Variables tried per split; `None` = ⌊√d⌋ (at least 1).
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for RfConfig {
    fn default() -> Self {
        Self { n_trees: 100, mtry: None, min_leaf: 10, max_depth: None, bootstrap: true, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfImportance {
    /// Summed count-weighted Gini decrease per variable.
    pub importance: Vec<f64>,
    /// Root impurity minus leaf impurity, summed over trees.
    pub total_decrease: f64,
}

#[derive(Debug, Clone)]
pub(crate) enum Feature {
    Continuous(Vec<f64>),
    Categorical { codes: Vec<u32>, levels: usize },
}

/// `n·G` for a node with `pos` positives out of `n`.
fn weighted_gini(n: f64, pos: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let neg = n - pos;
    n - (pos * pos + neg * neg) / n
}

struct Split {
    variable: usize,
    decrease: f64,
    /// Continuous: rows with x ≤ `upper` go left.
    upper: f64,
    /// Categorical: membership of each level in the left child.
    left_levels: Vec<bool>,
}

struct Tree<'a> {
    features: &'a [Feature],
    y: &'a [u8],
    config: &'a RfConfig,
    mtry: usize,
}

impl Tree<'_> {
    fn best_for(&self, v: usize, rows: &[usize], pos: usize) -> Option<Split> {
        let n = rows.len();
        let parent = weighted_gini(n as f64, pos as f64);
        let min_leaf = self.config.min_leaf.max(1);
        match &self.features[v] {
            Feature::Continuous(x) => {
                let mut pairs: Vec<(f64, u8)> = rows.iter().map(|&r| (x[r], self.y[r])).collect();
                pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut best: Option<(f64, f64)> = None;
                let mut left_pos = 0usize;
                for i in 1..n {
                    left_pos += pairs[i - 1].1 as usize;
                    if pairs[i - 1].0 == pairs[i].0 || i < min_leaf || n - i < min_leaf {
                        continue;
                    }
                    let dec = parent
                        - weighted_gini(i as f64, left_pos as f64)
                        - weighted_gini((n - i) as f64, (pos - left_pos) as f64);
                    if best.is_none_or(|(d, _)| dec > d) {
                        best = Some((dec, pairs[i - 1].0));
                    }
                }
                best.map(|(decrease, upper)| Split { variable: v, decrease, upper, left_levels: Vec::new() })
            }
            Feature::Categorical { codes, levels } => {
                let mut count = vec![0usize; *levels];
                let mut positive = vec![0usize; *levels];
                for &r in rows {
                    count[codes[r] as usize] += 1;
                    positive[codes[r] as usize] += self.y[r] as usize;
                }
                let mut present: Vec<usize> = (0..*levels).filter(|&c| count[c] > 0).collect();
                // order by positive rate; a/b < c/d  ⇔  a·d < c·b
                present.sort_by(|&a, &b| (positive[a] * count[b]).cmp(&(positive[b] * count[a])).then(a.cmp(&b)));
                let mut best: Option<(f64, usize)> = None;
                let (mut left_n, mut left_pos) = (0usize, 0usize);
                for k in 1..present.len() {
                    left_n += count[present[k - 1]];
                    left_pos += positive[present[k - 1]];
                    if left_n < min_leaf || n - left_n < min_leaf {
                        continue;
                    }
                    let dec = parent
                        - weighted_gini(left_n as f64, left_pos as f64)
                        - weighted_gini((n - left_n) as f64, (pos - left_pos) as f64);
                    if best.is_none_or(|(d, _)| dec > d) {
                        best = Some((dec, k));
                    }
                }
                best.map(|(decrease, k)| {
                    let mut left_levels = vec![false; *levels];
                    for &c in &present[..k] {
                        left_levels[c] = true;
                    }
                    Split { variable: v, decrease, upper: 0.0, left_levels }
                })
            }
        }
    }

    fn goes_left(&self, split: &Split, row: usize) -> bool {
        match &self.features[split.variable] {
            Feature::Continuous(x) => x[row] <= split.upper,
            Feature::Categorical { codes, .. } => split.left_levels[codes[row] as usize],
        }
    }

    fn grow<R: Rng>(&self, mut rows: Vec<usize>, rng: &mut R, importance: &mut [f64]) -> f64 {
        let d = self.features.len();
        let root_pos: usize = rows.iter().map(|&r| self.y[r] as usize).sum();
        let root = weighted_gini(rows.len() as f64, root_pos as f64);
        let mut leaves = 0.0;
        let mut stack = vec![(0usize, rows.len(), 0usize)];
        while let Some((start, end, depth)) = stack.pop() {
            let node = &rows[start..end];
            let n = node.len();
            let pos: usize = node.iter().map(|&r| self.y[r] as usize).sum();
            let impurity = weighted_gini(n as f64, pos as f64);
            let stop = pos == 0
                || pos == n
                || n < 2 * self.config.min_leaf.max(1)
                || self.config.max_depth.is_some_and(|m| depth >= m);
            let mut best: Option<Split> = None;
            if !stop {
                for v in index::sample(rng, d, self.mtry).into_iter() {
                    if let Some(s) = self.best_for(v, node, pos) {
                        if s.decrease > 1e-12 * n as f64 && best.as_ref().is_none_or(|b| s.decrease > b.decrease) {
                            best = Some(s);
                        }
                    }
                }
            }
            let Some(split) = best else {
                leaves += impurity;
                continue;
            };
            importance[split.variable] += split.decrease;
            let slice = &mut rows[start..end];
            let (mut left, mut right): (Vec<usize>, Vec<usize>) = slice.iter().partition(|&&r| self.goes_left(&split, r));
            let mid = start + left.len();
            left.append(&mut right);
            slice.copy_from_slice(&left);
            stack.push((mid, end, depth + 1));
            stack.push((start, mid, depth + 1));
        }
        root - leaves
    }
}

pub(crate) fn features_for(cohort: &Cohort, variables: &[usize], rows: &[usize]) -> Result<Vec<Feature>> {
    variables
        .iter()
        .map(|&v| match cohort.column(v) {
            Column::Continuous(values) => rows
                .iter()
                .map(|&r| {
                    values[r].ok_or_else(|| Error::MissingValue {
                        variable: cohort.schema()[v].name.clone(),
                        row: r,
                    })
                })
                .collect::<Result<Vec<f64>>>()
                .map(Feature::Continuous),
            Column::Categorical(codes) => Ok(Feature::Categorical {
                codes: rows.iter().map(|&r| codes[r]).collect(),
                levels: cohort.schema()[v].categories().map_or(0, |c| c.len()),
            }),
        })
        .collect()
}

pub(crate) fn importance_from_features(features: &[Feature], y: &[u8], config: &RfConfig) -> Result<RfImportance> {
    if config.n_trees == 0 {
        return Err(Error::Invalid("n_trees must be at least 1".into()));
    }
    let d = features.len();
    let n = y.len();
    if d == 0 || n == 0 {
        return Err(Error::Empty);
    }
    let mtry = config.mtry.unwrap_or_else(|| (libm::sqrt(d as f64) as usize).max(1));
    if mtry == 0 || mtry > d {
        return Err(Error::Invalid(format!("mtry must lie in 1..={d}, got {mtry}")));
    }
    let tree = Tree { features, y, config, mtry };
    let base = crate::derive_seed(config.seed, 0xF0E57);
    let per_tree: Vec<(Vec<f64>, f64)> = crate::par::map_range(config.n_trees, |t| {
        let mut rng = crate::rng_for(base, t as u64);
        let rows: Vec<usize> =
            if config.bootstrap { (0..n).map(|_| rng.gen_range(0..n)).collect() } else { (0..n).collect() };
        let mut importance = vec![0.0; d];
        let total = tree.grow(rows, &mut rng, &mut importance);
        (importance, total)
    });
    let mut importance = vec![0.0; d];
    let mut total_decrease = 0.0;
    for (imp, total) in per_tree {
        for (a, b) in importance.iter_mut().zip(imp) {
            *a += b;
        }
        total_decrease += total;
    }
    Ok(RfImportance { importance, total_decrease })
}

/// Gini importance of `variables` from a forest trained on the train partition.
pub fn rf_importance(cohort: &Cohort, variables: &[usize], config: &RfConfig) -> Result<RfImportance> {
    let rows = cohort.rows(Partition::Train);
    if rows.is_empty() {
        return Err(Error::Empty);
    }
    let features = features_for(cohort, variables, &rows)?;
    let y: Vec<u8> = rows.iter().map(|&r| cohort.outcome()[r]).collect();
    importance_from_features(&features, &y, config)
}
