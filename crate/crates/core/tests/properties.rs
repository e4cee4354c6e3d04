use proptest::prelude::*;
use vicscore_core::baseline::{cci, lace_score, Comorbidity, ComorbidityFlags, LaceInput, WeightMap};
use vicscore_core::glm::auc;
use vicscore_core::pool::pool_values;
use vicscore_core::rank::rank_within_model;
use vicscore_core::scorecard::{integer_points, Bins, RawValue, ScoredVariable, ScoringTable};
use vicscore_core::tabular::Column;
use vicscore_core::{Cohort, Error, Partition, VariableSchema};

fn cohort_strategy() -> impl Strategy<Value = Cohort> {
    (20usize..120, 1usize..4, 0usize..3).prop_flat_map(|(n, n_cont, n_cat)| {
        let cont = proptest::collection::vec(proptest::collection::vec(proptest::option::weighted(0.9, -50.0..50.0f64), n), n_cont);
        let cat = proptest::collection::vec((2u32..5).prop_flat_map(move |l| (Just(l), proptest::collection::vec(0..l, n))), n_cat);
        let y = proptest::collection::vec(0u8..2, n);
        (cont, cat, y).prop_map(|(cont, cat, y)| {
            let mut schema = Vec::new();
            let mut cols = Vec::new();
            for (k, c) in cont.into_iter().enumerate() {
                schema.push(VariableSchema::continuous(format!("x{k}")));
                cols.push(Column::Continuous(c));
            }
            for (k, (levels, codes)) in cat.into_iter().enumerate() {
                schema.push(VariableSchema::categorical(format!("k{k}"), (0..levels).map(|l| format!("L{l}"))));
                cols.push(Column::Categorical(codes));
            }
            Cohort::new(schema, cols, y).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_is_a_partition(cohort in cohort_strategy(), seed in any::<u64>()) {
        let s = match cohort.split([0.6, 0.2, 0.2], seed) {
            Ok(s) => s,
            Err(Error::Split(msg)) => {
                prop_assert!(msg.contains("single outcome class"), "{}", msg);
                return Ok(());
            }
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        };
        let counts: Vec<usize> = Partition::ALL.iter().map(|&p| s.rows(p).len()).collect();
        prop_assert_eq!(counts.iter().sum::<usize>(), cohort.n_rows());
        let again = cohort.split([0.6, 0.2, 0.2], seed).unwrap();
        prop_assert_eq!(s.partition(), again.partition());
        let mut all: Vec<usize> = Partition::ALL.iter().flat_map(|&p| s.rows(p)).collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..cohort.n_rows()).collect::<Vec<_>>());
    }

    #[test]
    fn imputation_is_idempotent(cohort in cohort_strategy()) {
        if let Ok(once) = cohort.impute_median(Partition::Train) {
            prop_assert_eq!(once.missing_count(), 0);
            let twice = once.impute_median(Partition::Train).unwrap();
            prop_assert_eq!(once.columns(), twice.columns());
        }
    }

    #[test]
    fn encoded_width_counts_reference_coding(cohort in cohort_strategy()) {
        if let Ok(full) = cohort.impute_median(Partition::Train) {
            let vars: Vec<usize> = (0..full.schema().len()).collect();
            let (x, _) = full.encode(Partition::Train, &vars).unwrap();
            let expected: usize = full
                .schema()
                .iter()
                .map(|v| v.categories().map_or(1, |c| c.len() - 1))
                .sum();
            prop_assert_eq!(x.n_cols(), expected);
        }
    }

    #[test]
    fn auc_invariant_under_increasing_transform(
        scores in proptest::collection::vec(-5i32..5, 4..60),
        labels in proptest::collection::vec(any::<bool>(), 60),
    ) {
        let n = scores.len();
        let mut y: Vec<f64> = labels[..n].iter().map(|&b| f64::from(b)).collect();
        y[0] = 1.0;
        y[1] = 0.0;
        let s: Vec<f64> = scores.iter().map(|&v| f64::from(v)).collect();
        let t: Vec<f64> = s.iter().map(|v| (v / 3.0).exp() * 7.0 - 2.0).collect();
        prop_assert_eq!(auc(&s, &y).unwrap(), auc(&t, &y).unwrap());
    }

    #[test]
    fn tau2_shift_invariant_and_pi_shrinks_with_replication(
        pairs in proptest::collection::vec((-1.0..1.0f64, 0.01..0.5f64), 3..20),
        shift in -5.0..5.0f64,
    ) {
        let base = pool_values("v", &pairs).unwrap();
        let shifted: Vec<(f64, f64)> = pairs.iter().map(|&(v, s)| (v + shift, s)).collect();
        let moved = pool_values("v", &shifted).unwrap();
        prop_assert!((base.tau2 - moved.tau2).abs() <= 1e-9 * base.tau2.max(1.0));
        let mut width = f64::INFINITY;
        for r in 1..=4 {
            let rep: Vec<(f64, f64)> = pairs.iter().cycle().take(pairs.len() * r).copied().collect();
            let p = pool_values("v", &rep).unwrap();
            let w = p.pi_high - p.pi_low;
            prop_assert!(w <= width * (1.0 + 1e-12));
            width = w;
        }
    }

    #[test]
    fn ranking_properties(
        pairs in proptest::collection::vec((-2.0..2.0f64, 0.01..1.0f64), 2..15),
        scale in 0.001..1000.0f64,
    ) {
        let ranks = rank_within_model(&pairs, 0.05);
        let scaled: Vec<(f64, f64)> = pairs.iter().map(|&(v, s)| (v * scale, s * scale)).collect();
        let z = 1.959_963_984_540_054;
        let beats = |j: usize, k: usize| {
            (pairs[j].0 - pairs[k].0) / (pairs[j].1.powi(2) + pairs[k].1.powi(2)).sqrt() > z
        };
        let n = pairs.len();
        for j in 0..n {
            for k in 0..n {
                prop_assert!(!(beats(j, k) && beats(k, j)));
            }
        }
        let mut sorted = ranks.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted[0], 1);
        for &r in &sorted {
            prop_assert_eq!(r, 1 + sorted.iter().filter(|&&o| o < r).count());
        }
        let rescaled = rank_within_model(&scaled, 0.05);
        let boundary = (0..n).any(|j| (0..n).any(|k| {
            let t = (pairs[j].0 - pairs[k].0) / (pairs[j].1.powi(2) + pairs[k].1.powi(2)).sqrt();
            j != k && (t - z).abs() < 1e-9
        }));
        if !boundary {
            prop_assert_eq!(ranks, rescaled);
        }
    }

    #[test]
    fn lace_bounded_and_monotone(los in 0i64..40, acute: bool, c in 0i64..10, ed in 0i64..10) {
        let base = LaceInput { inpatient_los_days: los, acute_admission: acute, cci: c, ed_visits_6m: ed };
        let s = lace_score(&base).unwrap();
        prop_assert!(s <= 19);
        for bumped in [
            LaceInput { inpatient_los_days: los + 1, ..base },
            LaceInput { acute_admission: true, ..base },
            LaceInput { cci: c + 1, ..base },
            LaceInput { ed_visits_6m: ed + 1, ..base },
        ] {
            prop_assert!(lace_score(&bumped).unwrap() >= s);
        }
    }

    #[test]
    fn cci_monotone_in_flags(bits in proptest::collection::vec(any::<bool>(), 17), extra in 0usize..17) {
        let mut flags = ComorbidityFlags::default();
        for (c, &b) in Comorbidity::ALL.iter().zip(&bits) {
            flags.set(*c, b);
        }
        let w = WeightMap::default();
        let before = cci(&flags, &w);
        flags.set(Comorbidity::ALL[extra], true);
        prop_assert!(cci(&flags, &w) >= before);
    }

    #[test]
    fn integer_points_contracts(
        coefs in proptest::collection::vec(proptest::collection::vec(-3.0..3.0f64, 2..6), 1..8),
    ) {
        let shifted: Vec<Vec<f64>> = coefs
            .iter()
            .map(|v| {
                let m = v.iter().copied().fold(f64::INFINITY, f64::min);
                v.iter().map(|c| c - m).collect()
            })
            .collect();
        if let Ok(points) = integer_points(&shifted) {
            let total: u32 = points.iter().map(|v| *v.iter().max().unwrap()).sum();
            prop_assert!(total <= 100);
            for v in &points {
                prop_assert!(v.contains(&0));
            }
        }
    }

    #[test]
    fn score_row_within_table_range(
        points in proptest::collection::vec(proptest::collection::vec(0u32..10, 3), 1..5),
        values in proptest::collection::vec(-10.0..10.0f64, 5),
    ) {
        let variables: Vec<ScoredVariable> = points
            .iter()
            .enumerate()
            .map(|(k, p)| ScoredVariable {
                variable: format!("x{k}"),
                bins: Bins::Intervals(vec![-1.0, 1.0]),
                points: p.clone(),
            })
            .collect();
        let table = ScoringTable { variables, model: None };
        let expected_max: u32 = points.iter().map(|p| *p.iter().max().unwrap()).sum();
        prop_assert_eq!(table.max_total(), expected_max);
        let row: Vec<RawValue> = values[..points.len()].iter().map(|&v| RawValue::Number(v)).collect();
        let s = table.score_row(&row).unwrap();
        prop_assert!(s <= table.max_total());
    }
}
