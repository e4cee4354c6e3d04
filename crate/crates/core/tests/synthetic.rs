use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use vicscore_core::forest::{rf_importance, RfConfig};
use vicscore_core::glm::{auc, auc_ci, fit_logistic, logistic_loss, loss_gradient};
use vicscore_core::rashomon::sample_ensemble;
use vicscore_core::sage::{sage_exact, SageConfig, SageGame};
use vicscore_core::scorecard::{derive_points, fine_tune, make_cuts, parsimony, CutEntry, CutMethod, CutSet, RawValue};
use vicscore_core::stats::normal_cdf;
use vicscore_core::synth::{generate, SynthVariable};
use vicscore_core::tabular::Column;
use vicscore_core::{Cohort, CoefficientVector, DesignMatrix, GeneratorSpec, Partition};

fn small_spec(seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        n: 4000,
        variables: vec![
            SynthVariable::continuous("age", 60.0, 12.0),
            SynthVariable::continuous("lab", 0.0, 1.0),
            SynthVariable::categorical("ward", &["a", "b", "c"], &[0.5, 0.3, 0.2]),
            SynthVariable::categorical("flag", &["no", "yes"], &[0.7, 0.3]),
            SynthVariable::continuous("noise1", 0.0, 1.0),
            SynthVariable::categorical("noise2", &["p", "q"], &[0.5, 0.5]),
        ],
        collinear_pairs: Vec::new(),
        true_betas: vec![0.05, -0.8, 0.6, 1.2, 0.9, 0.0, 0.0],
        intercept: -3.3,
        seed,
    }
}

fn prepared(spec: &GeneratorSpec) -> Cohort {
    generate(spec)
        .unwrap()
        .cohort
        .split([0.6, 0.2, 0.2], spec.seed)
        .unwrap()
        .impute_median(Partition::Train)
        .unwrap()
}

fn all_cuts(cohort: &Cohort, method: CutMethod) -> CutSet {
    let mut cuts = CutSet::default();
    for v in 0..cohort.schema().len() {
        if cohort.schema()[v].is_continuous() {
            cuts.set(make_cuts(cohort, v, method, 5, 3).unwrap());
        }
    }
    cuts
}

fn kendall_tau_b(a: &[f64], b: &[f64]) -> f64 {
    let (mut conc, mut disc, mut tie_a, mut tie_b) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let da = a[i] - a[j];
            let db = b[i] - b[j];
            if da == 0.0 && db == 0.0 {
                continue;
            } else if da == 0.0 {
                tie_a += 1.0;
            } else if db == 0.0 {
                tie_b += 1.0;
            } else if da * db > 0.0 {
                conc += 1.0;
            } else {
                disc += 1.0;
            }
        }
    }
    (conc - disc) / ((conc + disc + tie_a) * (conc + disc + tie_b)).sqrt()
}

#[test]
fn fit_is_stationary_and_beats_perturbations() {
    let cohort = prepared(&small_spec(1));
    let vars: Vec<usize> = (0..cohort.schema().len()).collect();
    let (x, y) = cohort.encode(Partition::Train, &vars).unwrap();
    let fit = fit_logistic(&x, &y).unwrap();
    assert!(fit.converged);
    let grad = loss_gradient(&fit, &x, &y).unwrap();
    assert!(grad.iter().all(|g| g.abs() < 1e-8), "{grad:?}");
    let best = logistic_loss(&fit, &x, &y).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let params: Vec<f64> = fit.to_params().iter().map(|p| p + 0.05 * rng.sample::<f64, _>(StandardNormal)).collect();
        let other = CoefficientVector::from_params(&params);
        assert!(best <= logistic_loss(&other, &x, &y).unwrap() + 1e-8);
    }
}

#[test]
fn auc_interval_covers_population_value() {
    let shift = 1.0;
    let truth = normal_cdf(shift / 2f64.sqrt());
    let mut covered = 0;
    for rep in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + rep);
        let mut scores = Vec::with_capacity(500);
        let mut y = Vec::with_capacity(500);
        for i in 0..500 {
            let pos = i % 2 == 0;
            let z: f64 = rng.sample(StandardNormal);
            scores.push(if pos { z + shift } else { z });
            y.push(f64::from(pos));
        }
        let ci = auc_ci(&scores, &y, 500, rep).unwrap();
        if ci.ci_low <= truth && truth <= ci.ci_high {
            covered += 1;
        }
    }
    assert!(covered >= 90, "covered {covered}/100");
}

#[test]
fn ensemble_stays_above_optimum() {
    let cohort = prepared(&small_spec(3));
    let vars: Vec<usize> = (0..cohort.schema().len()).collect();
    let (x, y) = cohort.encode(Partition::Train, &vars).unwrap();
    let center = fit_logistic(&x, &y).unwrap();
    let l_min = logistic_loss(&center, &x, &y).unwrap();
    let ens = sample_ensemble(&center, &x, &y, 60, 0.05, 4).unwrap();
    for m in &ens.models {
        let l = logistic_loss(m, &x, &y).unwrap();
        assert!(l >= l_min - 1e-10 && l <= 1.05 * l_min);
        assert_ne!(m.to_params(), center.to_params());
    }
}

#[test]
fn noise_variables_have_near_zero_exact_importance() {
    let cohort = prepared(&GeneratorSpec { n: 20_000, ..small_spec(5) });
    let vars: Vec<usize> = (0..cohort.schema().len()).collect();
    let (x, y) = cohort.encode(Partition::Train, &vars).unwrap();
    let fit = fit_logistic(&x, &y).unwrap();
    let config = SageConfig { eval_rows: 4000, background_size: 200, seed: 6, ..SageConfig::default() };
    let records = sage_exact(&fit, &cohort, &vars, &config).unwrap();
    let signal_min = records[..4].iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
    for r in &records[4..] {
        assert!(r.value.abs() < 1e-3 && r.value.abs() < 0.1 * signal_min, "{}: {}", r.variable, r.value);
    }
}

#[test]
fn doubling_permutations_shrinks_se_by_root_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut ratios = Vec::new();
    for seed in 0..10u64 {
        let d = 5;
        let data: Vec<f64> = (0..200 * d).map(|_| rng.sample(StandardNormal)).collect();
        let eval = DesignMatrix::from_rows(d, data).unwrap();
        let bg = DesignMatrix::from_rows(d, (0..30 * d).map(|_| rng.sample(StandardNormal)).collect()).unwrap();
        let model = CoefficientVector::new(0.1, vec![1.0, -0.7, 0.5, 0.3, 0.1]);
        let y: Vec<f64> = (0..200).map(|i| f64::from(rng.gen::<f64>() < model.probability(eval.row(i)))).collect();
        let game = SageGame::new(&model, &eval, &y, &bg).unwrap();
        let mean_se = |n: usize| game.estimate(n, None, 0, seed).iter().map(|p| p.1).sum::<f64>() / d as f64;
        ratios.push(mean_se(400) / mean_se(200));
    }
    let avg = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let target = 1.0 / 2f64.sqrt();
    assert!((avg - target).abs() <= 0.2 * target, "ratio {avg}");
}

#[test]
fn points_track_the_unrounded_predictor() {
    let spec = GeneratorSpec {
        variables: small_spec(8).variables[..4].to_vec(),
        true_betas: vec![0.05, -0.8, 0.6, 1.2, 0.9],
        ..small_spec(8)
    };
    let cohort = prepared(&spec);
    let cuts = all_cuts(&cohort, CutMethod::Quantile);
    let table = derive_points(&cohort, &[0, 1, 2, 3], &cuts).unwrap();
    let model = table.model.clone().unwrap();
    let rows: Vec<usize> = cohort.rows(Partition::Test).into_iter().take(1000).collect();
    let mut points = Vec::new();
    let mut eta = Vec::new();
    for &r in &rows {
        points.push(f64::from(table.score_cohort_row(&cohort, r).unwrap()));
        let mut cols = Vec::new();
        for v in &table.variables {
            let idx = cohort.variable_index(&v.variable).unwrap();
            let bin = match (cohort.column(idx), &v.bins) {
                (Column::Continuous(x), vicscore_core::scorecard::Bins::Intervals(c)) => {
                    c.iter().filter(|&&cut| x[r].unwrap() >= cut).count()
                }
                (Column::Categorical(c), _) => c[r] as usize,
                _ => unreachable!(),
            };
            for level in 1..v.bins.len() {
                cols.push(f64::from(bin == level));
            }
        }
        eta.push(model.linear_predictor(&cols));
    }
    let tau = kendall_tau_b(&points, &eta);
    assert!(tau > 0.95, "tau {tau}");
}

#[test]
fn noise_variable_adds_little_to_the_curve() {
    let cohort = prepared(&GeneratorSpec { n: 20_000, ..small_spec(9) });
    let cuts = all_cuts(&cohort, CutMethod::Quantile);
    let curve = parsimony(&cohort, &[0, 1, 2, 3, 4], &cuts).unwrap();
    let gain = curve.points[4].auc - curve.points[3].auc;
    assert!(gain.abs() < 0.01, "gain {gain}");
    let signal_gain = curve.points[3].auc - curve.points[0].auc;
    assert!(signal_gain > 0.02);
}

#[test]
fn merging_intervals_matches_rederivation() {
    let cohort = prepared(&small_spec(10));
    let cuts = all_cuts(&cohort, CutMethod::Quantile);
    let table = derive_points(&cohort, &[0, 1, 2], &cuts).unwrap();
    let original = cuts.get("lab").unwrap().cuts.clone();
    let mut merged = original.clone();
    merged.remove(1);
    let (tuned, tuned_cuts) = fine_tune(&cohort, &table, &cuts, &[CutEntry::manual("lab", merged.clone()).unwrap()]).unwrap();
    assert_eq!(tuned_cuts.get("lab").unwrap().cuts, merged);
    assert_eq!(tuned_cuts.get("lab").unwrap().method, CutMethod::Manual);
    assert_eq!(tuned.variables[1].points.len(), original.len());
    let again = derive_points(&cohort, &[0, 1, 2], &tuned_cuts).unwrap();
    assert_eq!(tuned.variables, again.variables);
    let lab = &table.variables[1].points;
    let merged_points = tuned.variables[1].points[1];
    let (lo, hi) = (lab[1].min(lab[2]), lab[1].max(lab[2]));
    assert!(merged_points + 1 >= lo && merged_points <= hi + 1, "{merged_points} vs {lo}..{hi}");
}

#[test]
fn single_variable_points_follow_coefficients() {
    let cohort = prepared(&small_spec(11));
    let table = derive_points(&cohort, &[2], &CutSet::default()).unwrap();
    let model = table.model.unwrap();
    let coef = [0.0, model.betas[0], model.betas[1]];
    let pts = &table.variables[0].points;
    for a in 0..3 {
        for b in 0..3 {
            if coef[a] < coef[b] {
                assert!(pts[a] <= pts[b]);
            }
        }
    }
    let row = |label: &str| vec![RawValue::Category(label.into())];
    let t = vicscore_core::ScoringTable { variables: table.variables.clone(), model: None };
    let scores: Vec<u32> = ["a", "b", "c"].iter().map(|l| t.score_row(&row(l)).unwrap()).collect();
    assert_eq!(&scores, pts);
}

#[test]
fn forest_separates_signal_from_noise() {
    let spec = GeneratorSpec::acceptance_default(12);
    let signals = spec.signal_variables();
    let cohort = prepared(&GeneratorSpec { n: 6000, ..spec });
    let vars: Vec<usize> = (0..cohort.schema().len()).collect();
    let config = RfConfig { n_trees: 40, seed: 13, ..RfConfig::default() };
    let imp = rf_importance(&cohort, &vars, &config).unwrap();
    assert!(imp.importance.iter().all(|&v| v >= 0.0));
    let sum: f64 = imp.importance.iter().sum();
    assert!((sum - imp.total_decrease).abs() <= 1e-9 * imp.total_decrease);
    let name = |v: usize| cohort.schema()[v].name.clone();
    let mut order: Vec<usize> = vars.clone();
    order.sort_by(|&a, &b| imp.importance[b].total_cmp(&imp.importance[a]));
    let top4: Vec<String> = order[..4].iter().map(|&v| name(v)).collect();
    for s in ["c1", "c2", "c3", "c4"] {
        assert!(top4.contains(&s.to_string()), "{top4:?}");
    }
    let best_noise_cat = vars
        .iter()
        .filter(|&&v| !cohort.schema()[v].is_continuous() && !signals.contains(&name(v)))
        .map(|&v| imp.importance[v])
        .fold(0.0, f64::max);
    for s in ["k1", "k2"] {
        assert!(imp.importance[cohort.variable_index(s).unwrap()] > best_noise_cat);
    }
}

#[test]
fn scorecard_auc_on_test_matches_direct_auc() {
    let cohort = prepared(&small_spec(14));
    let cuts = all_cuts(&cohort, CutMethod::KMeans);
    let table = derive_points(&cohort, &[0, 1, 2, 3], &cuts).unwrap();
    let scores: Vec<f64> = table.score_partition(&cohort, Partition::Test).unwrap().into_iter().map(f64::from).collect();
    let y: Vec<f64> = cohort.rows(Partition::Test).iter().map(|&r| f64::from(cohort.outcome()[r])).collect();
    let a = auc(&scores, &y).unwrap();
    assert!(a > 0.7, "auc {a}");
    assert!(scores.iter().all(|&s| s <= f64::from(table.max_total())));
}
