//! Random-effects pooling of per-model importance and the bar/violin plot tables.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sage::ImportanceRecord;
use crate::stats::t_quantile;

/// Standard errors below this are raised to it before weighting.
pub const SE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PooledImportance {
    pub variable: String,
    pub mean: f64,
    /// Between-model variance.
    pub tau2: f64,
    pub se_mean: f64,
    pub pi_low: f64,
    pub pi_high: f64,
    pub significant: bool,
}

/// DerSimonian–Laird pooling of `(value, se)` pairs with a 95% prediction interval.
pub fn pool_values(variable: &str, values: &[(f64, f64)]) -> Result<PooledImportance> {
    let m = values.len();
    if m < 3 {
        return Err(Error::TooFewModels(m));
    }
    if values.iter().any(|(v, s)| !v.is_finite() || !s.is_finite() || *s < 0.0) {
        return Err(Error::Invalid(format!("non-finite importance or se for `{variable}`")));
    }
    let var = |s: f64| {
        let s = s.max(SE_FLOOR);
        s * s
    };
    let w: Vec<f64> = values.iter().map(|(_, s)| 1.0 / var(*s)).collect();
    let sw: f64 = w.iter().sum();
    let sw2: f64 = w.iter().map(|x| x * x).sum();
    let fixed = values.iter().zip(&w).map(|((v, _), w)| w * v).sum::<f64>() / sw;
    let q: f64 = values.iter().zip(&w).map(|((v, _), w)| w * (v - fixed) * (v - fixed)).sum();
    let c = sw - sw2 / sw;
    let tau2 = if c > 0.0 { ((q - (m - 1) as f64) / c).max(0.0) } else { 0.0 };
    let wr: Vec<f64> = values.iter().map(|(_, s)| 1.0 / (var(*s) + tau2)).collect();
    let swr: f64 = wr.iter().sum();
    let mean = values.iter().zip(&wr).map(|((v, _), w)| w * v).sum::<f64>() / swr;
    let se_mean = 1.0 / libm::sqrt(swr);
    let half = t_quantile(0.975, (m - 2) as f64) * libm::sqrt(tau2 + se_mean * se_mean);
    let pi_low = mean - half;
    Ok(PooledImportance {
        variable: variable.into(),
        mean,
        tau2,
        se_mean,
        pi_low,
        pi_high: mean + half,
        significant: pi_low > 0.0,
    })
}

/// Pools the records of a single variable across models.
pub fn pool_importance(records: &[ImportanceRecord]) -> Result<PooledImportance> {
    let first = records.first().ok_or(Error::TooFewModels(0))?;
    if records.iter().any(|r| r.variable != first.variable) {
        return Err(Error::Invalid("records for more than one variable".into()));
    }
    let values: Vec<(f64, f64)> = records.iter().map(|r| (r.value, r.se)).collect();
    pool_values(&first.variable, &values)
}

/// Pools every variable, in order of first appearance.
pub fn pool_all(records: &[ImportanceRecord]) -> Result<Vec<PooledImportance>> {
    let mut names: Vec<&str> = Vec::new();
    for r in records {
        if !names.contains(&r.variable.as_str()) {
            names.push(&r.variable);
        }
    }
    let jobs: Vec<Result<PooledImportance>> = crate::par::map_range(names.len(), |k| {
        let values: Vec<(f64, f64)> =
            records.iter().filter(|r| r.variable == names[k]).map(|r| (r.value, r.se)).collect();
        pool_values(names[k], &values)
    });
    jobs.into_iter().collect()
}

/// Splits into (significant, not significant), preserving order.
pub fn filter_significant(pooled: &[PooledImportance]) -> Result<(Vec<PooledImportance>, Vec<PooledImportance>)> {
    let (kept, dropped): (Vec<_>, Vec<_>) = pooled.iter().cloned().partition(|p| p.significant);
    if kept.is_empty() {
        return Err(Error::NoneSignificant);
    }
    Ok((kept, dropped))
}

/// Bar-chart rows: pooled results sorted by descending mean (stable).
pub fn bar_rows(pooled: &[PooledImportance]) -> Vec<PooledImportance> {
    let mut out = pooled.to_vec();
    out.sort_by(|a, b| b.mean.total_cmp(&a.mean));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolinRow {
    pub variable: String,
    pub model_index: usize,
    pub value: f64,
    pub model_loss: f64,
}

/// Violin rows: variables in bar order, then by model index.
pub fn violin_rows(
    records: &[ImportanceRecord],
    pooled: &[PooledImportance],
    model_losses: &[f64],
) -> Result<Vec<ViolinRow>> {
    let mut out = Vec::with_capacity(records.len());
    for p in bar_rows(pooled) {
        let mut rows: Vec<&ImportanceRecord> = records.iter().filter(|r| r.variable == p.variable).collect();
        if rows.is_empty() {
            return Err(Error::Invalid(format!("no records for pooled variable `{}`", p.variable)));
        }
        rows.sort_by_key(|r| r.model_index);
        for r in rows {
            let model_loss = *model_losses
                .get(r.model_index)
                .ok_or_else(|| Error::Invalid(format!("no loss for model {}", r.model_index)))?;
            out.push(ViolinRow { variable: r.variable.clone(), model_index: r.model_index, value: r.value, model_loss });
        }
    }
    if out.len() != records.len() {
        return Err(Error::Invalid("records cover variables missing from the pooled set".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal, StandardNormal};

    /// Second, plainly written DerSimonian–Laird implementation.
    fn dl_oracle(v: &[f64], se: &[f64]) -> (f64, f64, f64) {
        let k = v.len() as f64;
        let mut w = vec![];
        for s in se {
            w.push(1.0 / (s * s));
        }
        let mut sum_w = 0.0;
        let mut sum_wv = 0.0;
        let mut sum_w2 = 0.0;
        for i in 0..v.len() {
            sum_w += w[i];
            sum_wv += w[i] * v[i];
            sum_w2 += w[i] * w[i];
        }
        let theta = sum_wv / sum_w;
        let mut q = 0.0;
        for i in 0..v.len() {
            q += w[i] * (v[i] - theta).powi(2);
        }
        let tau2 = f64::max(0.0, (q - (k - 1.0)) / (sum_w - sum_w2 / sum_w));
        let mut a = 0.0;
        let mut b = 0.0;
        for i in 0..v.len() {
            let ws = 1.0 / (se[i] * se[i] + tau2);
            a += ws * v[i];
            b += ws;
        }
        (a / b, tau2, (1.0 / b).sqrt())
    }

    #[test]
    fn equal_values_have_no_heterogeneity() {
        let p = pool_values("x", &[(0.04, 0.01); 10]).unwrap();
        assert_eq!(p.tau2, 0.0);
        assert!((p.mean - 0.04).abs() < 1e-15);
        let half = t_quantile(0.975, 8.0) * 0.01 / 10f64.sqrt();
        assert!((p.pi_low - (0.04 - half)).abs() < 1e-14);
        assert!((p.pi_high - (0.04 + half)).abs() < 1e-14);
    }

    #[test]
    fn three_studies_against_oracle() {
        let vals = [(0.10, 0.02), (0.20, 0.02), (0.30, 0.02)];
        let p = pool_values("x", &vals).unwrap();
        assert!((p.tau2 - 48.0 / 5000.0).abs() < 1e-12);
        let (mean, tau2, se) = dl_oracle(&[0.1, 0.2, 0.3], &[0.02; 3]);
        assert!((p.mean - mean).abs() < 1e-10);
        assert!((p.tau2 - tau2).abs() < 1e-10);
        assert!((p.se_mean - se).abs() < 1e-10);
    }

    #[test]
    fn random_sets_match_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for m in [3usize, 5, 12, 40] {
            let v: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
            let se: Vec<f64> = (0..m).map(|_| 0.1 + 0.5 * rand::Rng::gen::<f64>(&mut rng)).collect();
            let pairs: Vec<(f64, f64)> = v.iter().copied().zip(se.iter().copied()).collect();
            let p = pool_values("x", &pairs).unwrap();
            let (mean, tau2, s) = dl_oracle(&v, &se);
            assert!((p.mean - mean).abs() < 1e-10);
            assert!((p.tau2 - tau2).abs() < 1e-10);
            assert!((p.se_mean - s).abs() < 1e-10);
            assert!(p.pi_low <= p.mean && p.mean <= p.pi_high);
        }
    }

    #[test]
    fn too_few_models() {
        assert_eq!(pool_values("x", &[(1.0, 0.1), (2.0, 0.1)]), Err(Error::TooFewModels(2)));
    }

    #[test]
    fn zero_se_uses_floor() {
        let p = pool_values("x", &[(0.1, 0.0), (0.2, 0.0), (0.3, 0.0)]).unwrap();
        assert!(p.mean.is_finite() && p.tau2 > 0.0);
        assert!((p.mean - 0.2).abs() < 1e-12);
    }

    fn pooled(variable: &str, mean: f64, lo: f64, hi: f64) -> PooledImportance {
        PooledImportance {
            variable: variable.into(),
            mean,
            tau2: 0.0,
            se_mean: 0.0,
            pi_low: lo,
            pi_high: hi,
            significant: lo > 0.0,
        }
    }

    #[test]
    fn sign_rule() {
        assert!(!pooled("a", 0.02, -0.01, 0.05).significant);
        assert!(pooled("a", 0.02, 0.002, 0.05).significant);
        assert!(!pooled("a", -0.2, -0.3, -0.1).significant);
    }

    #[test]
    fn filtering() {
        let list: Vec<_> = (0..41).map(|i| pooled(&format!("v{i}"), 0.0, if i < 21 { 0.01 } else { -0.01 }, 1.0)).collect();
        let (kept, dropped) = filter_significant(&list).unwrap();
        assert_eq!(kept.len(), 21);
        assert_eq!(dropped.len(), 20);
        assert_eq!(kept[0].variable, "v0");
        let all: Vec<_> = (0..4).map(|i| pooled(&format!("v{i}"), 0.0, 0.01, 1.0)).collect();
        assert!(filter_significant(&all).unwrap().1.is_empty());
        let none: Vec<_> = (0..4).map(|i| pooled(&format!("v{i}"), 0.0, -0.01, 1.0)).collect();
        assert_eq!(filter_significant(&none), Err(Error::NoneSignificant));
    }

    #[test]
    fn plot_rows() {
        let p = vec![pooled("b", 0.2, 0.1, 0.3), pooled("c", -0.1, -0.2, 0.0), pooled("a", 0.5, 0.4, 0.6)];
        let names: Vec<String> = bar_rows(&p).into_iter().map(|r| r.variable).collect();
        assert_eq!(names, ["a", "b", "c"]);
        let mut records = vec![];
        for m in 0..4 {
            for v in ["a", "b", "c"] {
                records.push(ImportanceRecord { model_index: m, variable: v.into(), value: 0.1, se: 0.01, absolute_applied: false });
            }
        }
        let violin = violin_rows(&records, &p, &[0.5, 0.51, 0.52, 0.53]).unwrap();
        assert_eq!(violin.len(), 12);
        assert_eq!(violin[0].variable, "a");
        assert_eq!((violin[6].variable.as_str(), violin[6].model_loss), ("b", 0.52));
    }

    #[test]
    fn constant_shift_leaves_tau2() {
        let vals = [(0.1, 0.03), (0.25, 0.02), (0.05, 0.04), (0.3, 0.01)];
        let shifted: Vec<(f64, f64)> = vals.iter().map(|(v, s)| (v + 7.0, *s)).collect();
        let a = pool_values("x", &vals).unwrap();
        let b = pool_values("x", &shifted).unwrap();
        assert!((a.tau2 - b.tau2).abs() < 1e-9);
    }

    #[test]
    fn prediction_interval_coverage() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        let (mu, tau) = (0.05, 0.02);
        let effect = Normal::new(mu, tau).unwrap();
        let trials = 2000;
        let mut covered = 0;
        for _ in 0..trials {
            let values: Vec<(f64, f64)> = (0..50)
                .map(|m| {
                    let se = 0.005 + 0.0002 * m as f64;
                    let e: f64 = StandardNormal.sample(&mut rng);
                    (effect.sample(&mut rng) + se * e, se)
                })
                .collect();
            let p = pool_values("x", &values).unwrap();
            let fresh = effect.sample(&mut rng);
            if p.pi_low <= fresh && fresh <= p.pi_high {
                covered += 1;
            }
        }
        let rate = covered as f64 / trials as f64;
        assert!((0.92..=0.98).contains(&rate), "coverage {rate}");
    }
}
