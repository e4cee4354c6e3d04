//! Integer-point risk scores: discretization of continuous variables,
//! point derivation from a categorical logistic fit, the parsimony curve,
//! manual fine-tuning and row scoring.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::glm::{auc, fit_logistic, CoefficientVector};
use crate::stats::quantile_sorted;
use crate::tabular::{Cohort, Column, DesignMatrix, Partition, VariableKind};

/// Percentiles used by the quantile method.
pub const QUANTILE_PROBS: [f64; 4] = [0.05, 0.2, 0.8, 0.95];
pub const DEFAULT_KMEANS_K: usize = 5;
pub const KMEANS_RESTARTS: usize = 10;
/// Cap on the maximum attainable total score.
pub const MAX_TOTAL: u32 = 100;
pub const DEFAULT_MIN_GAIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutMethod {
    Quantile,
    KMeans,
    Manual,
}

impl CutMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CutMethod::Quantile => "quantile",
            CutMethod::KMeans => "kmeans",
            CutMethod::Manual => "manual",
        }
    }
}

impl fmt::Display for CutMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CutMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantile" => Ok(CutMethod::Quantile),
            "kmeans" => Ok(CutMethod::KMeans),
            "manual" => Ok(CutMethod::Manual),
            other => Err(Error::Invalid(format!("unknown cut method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutEntry {
    pub variable: String,
    /// Strictly increasing interior cut points; intervals are `[a, b)`.
    pub cuts: Vec<f64>,
    pub method: CutMethod,
}

impl CutEntry {
    pub fn manual(variable: impl Into<String>, cuts: Vec<f64>) -> Result<Self> {
        let entry = Self { variable: variable.into(), cuts, method: CutMethod::Manual };
        entry.validate()?;
        Ok(entry)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cuts.iter().any(|c| !c.is_finite()) || self.cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Cuts(format!(
                "cuts for `{}` must be finite and strictly increasing",
                self.variable
            )));
        }
        Ok(())
    }

    /// Interval index of `value`: the number of cuts ≤ value.
    pub fn interval(&self, value: f64) -> usize {
        interval_index(&self.cuts, value)
    }
}

fn interval_index(cuts: &[f64], value: f64) -> usize {
    cuts.partition_point(|&c| c <= value)
}

/// Cut points for the continuous variables, in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CutSet {
    pub entries: Vec<CutEntry>,
}

impl CutSet {
    pub fn get(&self, variable: &str) -> Option<&CutEntry> {
        self.entries.iter().find(|e| e.variable == variable)
    }

    /// Inserts or replaces the entry for `entry.variable`.
    pub fn set(&mut self, entry: CutEntry) {
        match self.entries.iter_mut().find(|e| e.variable == entry.variable) {
            Some(slot) => *slot = entry,
            None => self.entries.push(entry),
        }
    }
}

fn train_values(cohort: &Cohort, variable: usize) -> Result<Vec<f64>> {
    let name = &cohort.schema()[variable].name;
    let Column::Continuous(values) = cohort.column(variable) else {
        return Err(Error::Cuts(format!("`{name}` is categorical and takes no cut points")));
    };
    cohort
        .rows(Partition::Train)
        .into_iter()
        .map(|r| values[r].ok_or_else(|| Error::MissingValue { variable: name.clone(), row: r }))
        .collect()
}

/// Automatic cut points from the train partition.
pub fn make_cuts(cohort: &Cohort, variable: usize, method: CutMethod, k: usize, seed: u64) -> Result<CutEntry> {
    let name = cohort.schema()[variable].name.clone();
    let mut values = train_values(cohort, variable)?;
    values.sort_by(f64::total_cmp);
    let cuts = match method {
        CutMethod::Quantile => quantile_cuts(&values),
        CutMethod::KMeans => kmeans_cuts(&values, k, seed),
        CutMethod::Manual => return Err(Error::Cuts("manual cuts are supplied, not computed".into())),
    }
    .map_err(|e| match e {
        Error::Cuts(msg) => Error::Cuts(format!("`{name}`: {msg}")),
        other => other,
    })?;
    Ok(CutEntry { variable: name, cuts, method })
}

fn distinct(sorted: &[f64]) -> Vec<f64> {
    let mut out = sorted.to_vec();
    out.dedup();
    out
}

/// Percentile cuts of sorted values; duplicates and cuts at or below the
/// minimum are dropped, falling back to the second-smallest distinct value.
pub fn quantile_cuts(sorted: &[f64]) -> Result<Vec<f64>> {
    let uniq = distinct(sorted);
    if uniq.len() < 2 {
        return Err(Error::Cuts("fewer than 2 distinct values".into()));
    }
    let mut cuts: Vec<f64> = QUANTILE_PROBS.iter().map(|&p| quantile_sorted(sorted, p)).filter(|&c| c > uniq[0]).collect();
    cuts.dedup();
    if cuts.is_empty() {
        cuts.push(uniq[1]);
    }
    Ok(cuts)
}

fn sse_1d(sorted: &[f64], centers: &[f64]) -> (f64, Vec<usize>) {
    let mut assign = Vec::with_capacity(sorted.len());
    let mut sse = 0.0;
    for &x in sorted {
        let mut best = 0;
        for (c, &m) in centers.iter().enumerate().skip(1) {
            if (x - m).abs() < (x - centers[best]).abs() {
                best = c;
            }
        }
        sse += (x - centers[best]) * (x - centers[best]);
        assign.push(best);
    }
    (sse, assign)
}

/// Lloyd iterations from a k-means++ start; returns (sse, sorted centers).
fn kmeans_once<R: Rng>(sorted: &[f64], k: usize, rng: &mut R) -> (f64, Vec<f64>) {
    let n = sorted.len();
    let mut centers = vec![sorted[rng.gen_range(0..n)]];
    while centers.len() < k {
        let d2: Vec<f64> = sorted
            .iter()
            .map(|&x| centers.iter().map(|&c| (x - c) * (x - c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut target = rng.gen::<f64>() * total;
        let mut pick = n - 1;
        for (i, &w) in d2.iter().enumerate() {
            if target < w {
                pick = i;
                break;
            }
            target -= w;
        }
        centers.push(sorted[pick]);
    }
    let mut previous: Option<Vec<usize>> = None;
    for _ in 0..200 {
        let (_, assign) = sse_1d(sorted, &centers);
        if previous.as_ref() == Some(&assign) {
            break;
        }
        let mut sum = vec![0.0; centers.len()];
        let mut count = vec![0usize; centers.len()];
        for (&x, &a) in sorted.iter().zip(&assign) {
            sum[a] += x;
            count[a] += 1;
        }
        for c in 0..centers.len() {
            if count[c] > 0 {
                centers[c] = sum[c] / count[c] as f64;
            }
        }
        previous = Some(assign);
    }
    centers.sort_by(f64::total_cmp);
    centers.dedup();
    (sse_1d(sorted, &centers).0, centers)
}

/// 1-D k-means cuts: midpoints between adjacent sorted centers.
pub fn kmeans_cuts(sorted: &[f64], k: usize, seed: u64) -> Result<Vec<f64>> {
    let uniq = distinct(sorted);
    if uniq.len() < 2 {
        return Err(Error::Cuts("fewer than 2 distinct values".into()));
    }
    if k < 2 {
        return Err(Error::Cuts(format!("k-means needs k ≥ 2, got {k}")));
    }
    let k = k.min(uniq.len());
    let mut best: Option<(f64, Vec<f64>)> = None;
    for restart in 0..KMEANS_RESTARTS {
        let mut rng = crate::rng_for(crate::derive_seed(seed, 0x4B4D), restart as u64);
        let (sse, centers) = kmeans_once(sorted, k, &mut rng);
        if best.as_ref().is_none_or(|(b, _)| sse < *b) {
            best = Some((sse, centers));
        }
    }
    let centers = best.map(|(_, c)| c).unwrap_or_default();
    let mut cuts: Vec<f64> = centers.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    cuts.dedup();
    Ok(cuts)
}

/// How a variable's values map onto scored bins.
#[derive(Debug, Clone, PartialEq)]
pub enum Bins {
    /// Continuous variable cut into `cuts.len() + 1` intervals.
    Intervals(Vec<f64>),
    /// Categorical variable, one bin per declared category.
    Categories(Vec<String>),
}

impl Bins {
    pub fn len(&self) -> usize {
        match self {
            Bins::Intervals(c) => c.len() + 1,
            Bins::Categories(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Display labels: `<a`, `[a,b)`, `>=b` for intervals; category names otherwise.
    pub fn labels(&self) -> Vec<String> {
        match self {
            Bins::Categories(c) => c.clone(),
            Bins::Intervals(c) if c.is_empty() => vec!["any".into()],
            Bins::Intervals(c) => {
                let mut out = vec![format!("<{}", c[0])];
                out.extend(c.windows(2).map(|w| format!("[{},{})", w[0], w[1])));
                out.push(format!(">={}", c[c.len() - 1]));
                out
            }
        }
    }

    /// Recovers interval cut points from labels produced by [`Bins::labels`].
    pub fn parse_interval_labels(labels: &[String]) -> Result<Vec<f64>> {
        let bad = |l: &str| Error::Scoring(format!("`{l}` is not an interval label"));
        let num = |s: &str, l: &str| s.trim().parse::<f64>().map_err(|_| bad(l));
        if labels.len() == 1 && labels[0] == "any" {
            return Ok(Vec::new());
        }
        if labels.len() < 2 {
            return Err(Error::Scoring("interval variables need at least two labels".into()));
        }
        let first = &labels[0];
        let mut cuts = vec![num(first.strip_prefix('<').ok_or_else(|| bad(first))?, first)?];
        for l in &labels[1..labels.len() - 1] {
            let inner = l.strip_prefix('[').and_then(|s| s.strip_suffix(')')).ok_or_else(|| bad(l))?;
            let (a, b) = inner.split_once(',').ok_or_else(|| bad(l))?;
            if num(a, l)? != cuts[cuts.len() - 1] {
                return Err(Error::Scoring(format!("interval `{l}` does not continue its predecessor")));
            }
            cuts.push(num(b, l)?);
        }
        let last = &labels[labels.len() - 1];
        let tail = num(last.strip_prefix(">=").ok_or_else(|| bad(last))?, last)?;
        if tail != cuts[cuts.len() - 1] {
            return Err(Error::Scoring(format!("interval `{last}` does not continue its predecessor")));
        }
        CutEntry::manual("", cuts.clone()).map_err(|_| Error::Scoring("interval labels are not increasing".into()))?;
        Ok(cuts)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredVariable {
    pub variable: String,
    pub bins: Bins,
    pub points: Vec<u32>,
}

impl ScoredVariable {
    pub fn max_points(&self) -> u32 {
        self.points.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoringTable {
    pub variables: Vec<ScoredVariable>,
    /// The categorical logistic fit the points were derived from.
    pub model: Option<CoefficientVector>,
}

/// One raw cell of a row to score.
#[derive(Debug, Clone, PartialEq)]
pub enum RawValue {
    Number(f64),
    Category(String),
}

impl ScoringTable {
    /// Largest attainable total.
    pub fn max_total(&self) -> u32 {
        self.variables.iter().map(ScoredVariable::max_points).sum()
    }

    pub fn variable_names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.variable.clone()).collect()
    }

    /// Total points of a row given in table variable order.
    pub fn score_row(&self, row: &[RawValue]) -> Result<u32> {
        if row.len() != self.variables.len() {
            return Err(Error::Scoring(format!(
                "row has {} values, table has {} variables",
                row.len(),
                self.variables.len()
            )));
        }
        let mut total = 0;
        for (v, cell) in self.variables.iter().zip(row) {
            let bin = match (&v.bins, cell) {
                (Bins::Intervals(cuts), RawValue::Number(x)) if x.is_finite() => interval_index(cuts, *x),
                (Bins::Categories(cats), RawValue::Category(label)) => cats.iter().position(|c| c == label).ok_or_else(
                    || Error::Scoring(format!("unseen category `{label}` for `{}`", v.variable)),
                )?,
                _ => return Err(Error::Scoring(format!("value for `{}` has the wrong kind", v.variable))),
            };
            total += v.points[bin];
        }
        Ok(total)
    }

    /// Total points of cohort row `row`.
    pub fn score_cohort_row(&self, cohort: &Cohort, row: usize) -> Result<u32> {
        let values = self
            .variables
            .iter()
            .map(|v| {
                let idx = cohort.variable_index(&v.variable)?;
                match cohort.column(idx) {
                    Column::Continuous(x) => x[row]
                        .map(RawValue::Number)
                        .ok_or_else(|| Error::MissingValue { variable: v.variable.clone(), row }),
                    Column::Categorical(codes) => {
                        let cats = cohort.schema()[idx].categories().unwrap_or(&[]);
                        Ok(RawValue::Category(cats[codes[row] as usize].clone()))
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        self.score_row(&values)
    }

    /// Scores every row of `partition`, in row order.
    pub fn score_partition(&self, cohort: &Cohort, partition: Partition) -> Result<Vec<u32>> {
        cohort.rows(partition).into_iter().map(|r| self.score_cohort_row(cohort, r)).collect()
    }
}

/// Bin layout for a variable, taking cut points from `cuts` when continuous.
fn bins_for(cohort: &Cohort, variable: usize, cuts: &CutSet) -> Result<Bins> {
    let schema = &cohort.schema()[variable];
    match &schema.kind {
        VariableKind::Categorical(cats) => Ok(Bins::Categories(cats.clone())),
        VariableKind::Continuous => {
            let entry = cuts
                .get(&schema.name)
                .ok_or_else(|| Error::Cuts(format!("no cut points for continuous `{}`", schema.name)))?;
            entry.validate()?;
            Ok(Bins::Intervals(entry.cuts.clone()))
        }
    }
}

fn bin_of(cohort: &Cohort, variable: usize, bins: &Bins, row: usize) -> Result<usize> {
    match (cohort.column(variable), bins) {
        (Column::Continuous(x), Bins::Intervals(cuts)) => x[row]
            .map(|v| interval_index(cuts, v))
            .ok_or_else(|| Error::MissingValue { variable: cohort.schema()[variable].name.clone(), row }),
        (Column::Categorical(codes), Bins::Categories(_)) => Ok(codes[row] as usize),
        _ => Err(Error::Shape("bin layout does not match variable kind".into())),
    }
}

/// Scales shifted coefficients to integers: divide by the smallest positive
/// value, round half-up, and shrink proportionally while the maximum total exceeds the cap.
pub fn integer_points(shifted: &[Vec<f64>]) -> Result<Vec<Vec<u32>>> {
    let unit = shifted
        .iter()
        .flatten()
        .copied()
        .filter(|&c| c > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !unit.is_finite() {
        return Err(Error::NoDiscrimination);
    }
    let round = |x: f64| libm::floor(x + 0.5) as u32;
    let scaled: Vec<Vec<f64>> = shifted.iter().map(|v| v.iter().map(|c| c / unit).collect()).collect();
    let total = |pts: &[Vec<u32>]| pts.iter().map(|v| v.iter().copied().max().unwrap_or(0)).sum::<u32>();
    let at = |s: f64| -> Vec<Vec<u32>> { scaled.iter().map(|v| v.iter().map(|&c| round(c * s)).collect()).collect() };
    let mut points = at(1.0);
    if total(&points) > MAX_TOTAL {
        let raw_max: f64 = scaled.iter().map(|v| v.iter().copied().fold(0.0, f64::max)).sum();
        let mut s = MAX_TOTAL as f64 / raw_max;
        points = at(s);
        while total(&points) > MAX_TOTAL {
            s *= 0.995;
            points = at(s);
        }
    }
    Ok(points)
}

/// Fits the categorical logistic model on train and converts it to points.
pub fn derive_points(cohort: &Cohort, variables: &[usize], cuts: &CutSet) -> Result<ScoringTable> {
    if variables.is_empty() {
        return Err(Error::Scoring("no variables to score".into()));
    }
    let layouts: Vec<Bins> = variables.iter().map(|&v| bins_for(cohort, v, cuts)).collect::<Result<_>>()?;
    let rows = cohort.rows(Partition::Train);
    let mut bin_rows: Vec<Vec<usize>> = Vec::with_capacity(rows.len());
    for &r in &rows {
        bin_rows.push(variables.iter().zip(&layouts).map(|(&v, b)| bin_of(cohort, v, b, r)).collect::<Result<_>>()?);
    }
    // indicator columns for every non-reference bin that occurs in train
    let mut column_of: Vec<Vec<Option<usize>>> = layouts.iter().map(|b| vec![None; b.len()]).collect();
    let mut n_cols = 0;
    for (k, b) in layouts.iter().enumerate() {
        for level in 1..b.len() {
            if bin_rows.iter().any(|r| r[k] == level) {
                column_of[k][level] = Some(n_cols);
                n_cols += 1;
            }
        }
    }
    let mut data = vec![0.0; rows.len() * n_cols];
    for (i, r) in bin_rows.iter().enumerate() {
        for (k, &level) in r.iter().enumerate() {
            if let Some(j) = column_of[k][level] {
                data[i * n_cols + j] = 1.0;
            }
        }
    }
    let design = DesignMatrix::from_rows(n_cols, data)?;
    let y: Vec<f64> = rows.iter().map(|&r| cohort.outcome()[r] as f64).collect();
    let model = fit_logistic(&design, &y)?;
    let shifted: Vec<Vec<f64>> = column_of
        .iter()
        .map(|cols| {
            let coef: Vec<f64> = cols.iter().map(|c| c.map_or(0.0, |j| model.betas[j])).collect();
            let min = coef.iter().copied().fold(f64::INFINITY, f64::min);
            coef.into_iter().map(|c| c - min).collect()
        })
        .collect();
    let points = integer_points(&shifted)?;
    let table = variables
        .iter()
        .zip(layouts)
        .zip(points)
        .map(|((&v, bins), points)| ScoredVariable { variable: cohort.schema()[v].name.clone(), bins, points })
        .collect();
    Ok(ScoringTable { variables: table, model: Some(model) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsimonyPoint {
    pub m: usize,
    pub variable: String,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsimonyCurve {
    pub points: Vec<ParsimonyPoint>,
}

/// Validation AUC of the score built on the top-`m` variables of `ranking`.
pub fn parsimony_point(cohort: &Cohort, ranking: &[usize], m: usize, cuts: &CutSet) -> Result<f64> {
    let table = derive_points(cohort, &ranking[..m], cuts)?;
    let scores: Vec<f64> = table.score_partition(cohort, Partition::Validation)?.into_iter().map(f64::from).collect();
    let y: Vec<f64> = cohort.rows(Partition::Validation).iter().map(|&r| cohort.outcome()[r] as f64).collect();
    auc(&scores, &y)
}

/// Grows the score one ranked variable at a time, recording validation AUC.
pub fn parsimony(cohort: &Cohort, ranking: &[usize], cuts: &CutSet) -> Result<ParsimonyCurve> {
    if ranking.is_empty() {
        return Err(Error::Scoring("ranking is empty".into()));
    }
    let aucs: Vec<Result<f64>> = crate::par::map_range(ranking.len(), |k| parsimony_point(cohort, ranking, k + 1, cuts));
    let points = aucs
        .into_iter()
        .enumerate()
        .map(|(k, a)| {
            Ok(ParsimonyPoint { m: k + 1, variable: cohort.schema()[ranking[k]].name.clone(), auc: a? })
        })
        .collect::<Result<_>>()?;
    Ok(ParsimonyCurve { points })
}

/// Smallest `m` whose next variable adds less than `min_gain` AUC (or
/// nothing at all); the curve length when every step clears the bar.
pub fn suggest_m(curve: &ParsimonyCurve, min_gain: f64) -> usize {
    curve
        .points
        .windows(2)
        .find(|w| {
            let gain = w[1].auc - w[0].auc;
            gain < min_gain || gain <= 0.0
        })
        .map_or(curve.points.len(), |w| w[0].m)
}

/// Re-derives `table` after replacing cut points with manual overrides.
/// Returns the new table and the updated cut set.
pub fn fine_tune(
    cohort: &Cohort,
    table: &ScoringTable,
    cuts: &CutSet,
    overrides: &[CutEntry],
) -> Result<(ScoringTable, CutSet)> {
    let names = table.variable_names();
    let mut updated = cuts.clone();
    for o in overrides {
        o.validate()?;
        if !names.contains(&o.variable) {
            return Err(Error::Cuts(format!("override for `{}`, which is not in the score", o.variable)));
        }
        let idx = cohort.variable_index(&o.variable)?;
        if !cohort.schema()[idx].is_continuous() {
            return Err(Error::Cuts(format!("`{}` is categorical and takes no cut points", o.variable)));
        }
        updated.set(CutEntry { variable: o.variable.clone(), cuts: o.cuts.clone(), method: CutMethod::Manual });
    }
    let variables = cohort.variable_indices(&names)?;
    Ok((derive_points(cohort, &variables, &updated)?, updated))
}

/// Flat rows `(variable, interval_or_category, points)`.
pub fn table_rows(table: &ScoringTable) -> Vec<(String, String, u32)> {
    let mut out = Vec::new();
    for v in &table.variables {
        for (label, p) in v.bins.labels().into_iter().zip(&v.points) {
            out.push((v.variable.clone(), label, *p));
        }
    }
    out
}

/// Rebuilds a table from flat rows; `is_continuous` decides each variable's bin layout.
pub fn table_from_rows(rows: &[(String, String, u32)], is_continuous: impl Fn(&str) -> Result<bool>) -> Result<ScoringTable> {
    let mut variables: Vec<ScoredVariable> = Vec::new();
    let mut labels: Vec<Vec<String>> = Vec::new();
    for (name, label, points) in rows {
        match variables.iter().position(|v| &v.variable == name) {
            Some(k) if k + 1 == variables.len() => {
                variables[k].points.push(*points);
                labels[k].push(label.clone());
            }
            Some(_) => return Err(Error::Scoring(format!("rows for `{name}` are not contiguous"))),
            None => {
                variables.push(ScoredVariable { variable: name.clone(), bins: Bins::Categories(Vec::new()), points: vec![*points] });
                labels.push(vec![label.clone()]);
            }
        }
    }
    for (v, l) in variables.iter_mut().zip(labels) {
        v.bins = if is_continuous(&v.variable)? {
            Bins::Intervals(Bins::parse_interval_labels(&l)?)
        } else {
            Bins::Categories(l)
        };
        if !v.points.contains(&0) {
            return Err(Error::Scoring(format!("`{}` has no zero-point category", v.variable)));
        }
    }
    Ok(ScoringTable { variables, model: None })
}

impl fmt::Display for ScoringTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (v, label, p) in table_rows(self) {
            writeln!(f, "{v:<24} {label:<20} {p:>4}")?;
        }
        write!(f, "max total {}", self.max_total())
    }
}

impl fmt::Display for CutEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cuts: Vec<String> = self.cuts.iter().map(|c| format!("{c}")).collect();
        write!(f, "{} ({}): {}", self.variable, self.method, cuts.join(", "))
    }
}
