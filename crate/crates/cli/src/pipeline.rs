//! The `rank`, `build`, `score` and `synth` commands. Each computes its
//! artifacts in memory and writes them only after every stage succeeded.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use vicscore_core::baseline::{cci, lace_score, Comorbidity, ComorbidityFlags, LaceInput, WeightMap};
use vicscore_core::forest::RfConfig;
use vicscore_core::glm::{auc_ci, fit_logistic, gvif, AucResult};
use vicscore_core::pool::{bar_rows, filter_significant, pool_all, violin_rows};
use vicscore_core::rank::{rf_rank, shapleyvic_rank, RankTable};
use vicscore_core::rashomon::sample_ensemble;
use vicscore_core::sage::{apply_absolute, ensemble_importance, SageData};
use vicscore_core::scorecard::{
    derive_points, fine_tune, make_cuts, parsimony, suggest_m, table_from_rows, table_rows, CutEntry, CutMethod,
    CutSet, RawValue, ScoringTable,
};
use vicscore_core::synth::generate;
use vicscore_core::tabular::Column;
use vicscore_core::{derive_seed, Cohort, GeneratorSpec, Partition};

use crate::config::{CutMethodName, Method, PipelineConfig, SynthSpecFile};
use crate::error::{CliError, CliResult, Stage};
use crate::io::{csv_bytes, load_cohort, num, preflight, read_table, Artifacts, SchemaFile};

const SPLIT_SALT: u64 = 1;
const ENSEMBLE_SALT: u64 = 2;
const SAGE_SALT: u64 = 3;
const FOREST_SALT: u64 = 4;
const KMEANS_SALT: u64 = 5;
const BOOTSTRAP_SALT: u64 = 6;

pub const RANKING_FILE: &str = "ranking.txt";
pub const SCORING_HEADER: [&str; 3] = ["variable", "interval_or_category", "points"];

const SHAPLEYVIC_FILES: [&str; 10] = [
    "ensemble.csv",
    "gvif.csv",
    "importance_records.csv",
    "importance_bar.csv",
    "importance_violin.csv",
    "rank_table.csv",
    RANKING_FILE,
    "kept_variables.txt",
    "dropped_variables.txt",
    "manifest.toml",
];
const FOREST_FILES: [&str; 3] = ["rank_table.csv", RANKING_FILE, "manifest.toml"];
const BUILD_FILES: [&str; 6] =
    ["cuts.csv", "parsimony.csv", "suggested_m.txt", "scoring_table.csv", "evaluation.csv", "manifest.toml"];

pub fn rank_dir(cfg: &PipelineConfig) -> PathBuf {
    cfg.out.join("rank")
}

pub fn build_dir(cfg: &PipelineConfig) -> PathBuf {
    cfg.out.join("build")
}

/// Loaded, split and imputed cohort.
pub struct Prepared {
    pub cohort: Cohort,
    pub outcome: String,
}

pub fn prepare(cfg: &PipelineConfig) -> CliResult<Prepared> {
    let loaded = load_cohort(&cfg.data, &cfg.schema)?;
    let cohort = loaded.cohort.split(cfg.split, derive_seed(cfg.seed, SPLIT_SALT)).stage("split")?;
    let cohort = cohort.impute_median(cfg.impute_source.into()).stage("impute")?;
    Ok(Prepared { cohort, outcome: loaded.outcome })
}

fn manifest(command: &str, cfg: &PipelineConfig, extra: &[(&str, String)]) -> String {
    let mut out = format!("# vicscore {} {command}\n", env!("CARGO_PKG_VERSION"));
    for (k, v) in extra {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    for (stage, salt) in [
        ("split", SPLIT_SALT),
        ("ensemble", ENSEMBLE_SALT),
        ("sage", SAGE_SALT),
        ("forest", FOREST_SALT),
        ("kmeans", KMEANS_SALT),
        ("bootstrap", BOOTSTRAP_SALT),
    ] {
        out.push_str(&format!("# {stage} seed = {}\n", derive_seed(cfg.seed, salt)));
    }
    out.push_str(&cfg.to_toml());
    out
}

fn lines(items: impl IntoIterator<Item = String>) -> String {
    items.into_iter().map(|s| s + "\n").collect()
}

fn rank_table_csv(table: &RankTable) -> Vec<u8> {
    csv_bytes(
        &["variable", "mean_rank", "final_order", "method"],
        table.ordered().into_iter().map(|e| {
            vec![e.variable.clone(), num(e.mean_rank), e.final_order.to_string(), table.method.to_string()]
        }),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankSummary {
    pub ranking: Vec<String>,
    pub dropped: Vec<String>,
    pub warnings: Vec<String>,
}

/// Computes the rank artifacts without touching the filesystem output.
pub fn rank_artifacts(cfg: &PipelineConfig) -> CliResult<(Artifacts, RankSummary)> {
    cfg.validate()?;
    let prepared = prepare(cfg)?;
    let cohort = &prepared.cohort;
    let variables: Vec<usize> = (0..cohort.schema().len()).collect();
    let mut art = Artifacts::new(rank_dir(cfg));
    let mut warnings = Vec::new();
    let summary = match cfg.method {
        Method::RandomForest => {
            let rf = RfConfig {
                n_trees: cfg.forest.trees,
                mtry: (cfg.forest.mtry > 0).then_some(cfg.forest.mtry),
                min_leaf: cfg.forest.min_leaf,
                max_depth: None,
                bootstrap: true,
                seed: derive_seed(cfg.seed, FOREST_SALT),
            };
            let table = rf_rank(cohort, &variables, &rf).stage("random forest")?;
            art.add("rank_table.csv", rank_table_csv(&table));
            art.add(RANKING_FILE, lines(table.ordered_names()));
            RankSummary { ranking: table.ordered_names(), dropped: Vec::new(), warnings }
        }
        Method::Shapleyvic => {
            let (design, y) = cohort.encode(Partition::Train, &variables).stage("encode")?;
            let center = fit_logistic(&design, &y).stage("optimal model")?;
            if let Some(w) = &center.warning {
                warnings.push(format!("optimal model: {w}"));
            }
            let collinearity = gvif(&design).stage("gvif")?;
            let ensemble = sample_ensemble(
                &center,
                &design,
                &y,
                cfg.ensemble.models,
                cfg.ensemble.epsilon,
                derive_seed(cfg.seed, ENSEMBLE_SALT),
            )
            .stage("near-optimal sampling")?;
            let eval_rows = cfg.sage.eval_rows.min(cohort.rows(Partition::Validation).len());
            let sage_cfg = cfg.sage_config(eval_rows, derive_seed(cfg.seed, SAGE_SALT));
            let data = SageData::from_cohort(cohort, &variables, &sage_cfg).stage("importance")?;
            let records = ensemble_importance(&ensemble.models, &data, &sage_cfg).stage("importance")?;
            let gvif_map: BTreeMap<String, f64> =
                collinearity.iter().map(|g| (g.variable.clone(), g.gvif)).collect();
            let records = apply_absolute(&records, &gvif_map, cfg.gvif_threshold).stage("importance")?;
            let pooled = pool_all(&records).stage("pooling")?;
            let (kept, dropped) = filter_significant(&pooled).stage("filter")?;
            let kept_records: Vec<_> =
                records.iter().filter(|r| kept.iter().any(|k| k.variable == r.variable)).cloned().collect();
            let table = shapleyvic_rank(&kept_records, &kept, cfg.alpha).stage("ranking")?;

            let mut header = vec!["model_index".to_string(), "loss".into(), "intercept".into()];
            header.extend(design.column_names().iter().cloned());
            let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
            art.add(
                "ensemble.csv",
                csv_bytes(
                    &header_refs,
                    ensemble.models.iter().enumerate().map(|(k, m)| {
                        let mut row = vec![k.to_string(), num(m.loss), num(m.intercept)];
                        row.extend(m.betas.iter().map(|&b| num(b)));
                        row
                    }),
                ),
            );
            art.add(
                "gvif.csv",
                csv_bytes(
                    &["variable", "gvif", "df", "adjusted"],
                    collinearity.iter().map(|g| vec![g.variable.clone(), num(g.gvif), g.df.to_string(), num(g.adjusted)]),
                ),
            );
            art.add(
                "importance_records.csv",
                csv_bytes(
                    &["model_index", "variable", "value", "se", "flag"],
                    records.iter().map(|r| {
                        vec![
                            r.model_index.to_string(),
                            r.variable.clone(),
                            num(r.value),
                            num(r.se),
                            if r.absolute_applied { "absolute" } else { "" }.to_string(),
                        ]
                    }),
                ),
            );
            art.add(
                "importance_bar.csv",
                csv_bytes(
                    &["variable", "mean", "pi_low", "pi_high", "significant"],
                    bar_rows(&pooled).into_iter().map(|p| {
                        vec![p.variable, num(p.mean), num(p.pi_low), num(p.pi_high), p.significant.to_string()]
                    }),
                ),
            );
            let losses: Vec<f64> = ensemble.models.iter().map(|m| m.loss).collect();
            art.add(
                "importance_violin.csv",
                csv_bytes(
                    &["variable", "model_index", "value", "model_loss"],
                    violin_rows(&records, &pooled, &losses).stage("plot data")?.into_iter().map(|r| {
                        vec![r.variable, r.model_index.to_string(), num(r.value), num(r.model_loss)]
                    }),
                ),
            );
            art.add("rank_table.csv", rank_table_csv(&table));
            art.add(RANKING_FILE, lines(table.ordered_names()));
            art.add("kept_variables.txt", lines(kept.iter().map(|p| p.variable.clone())));
            art.add("dropped_variables.txt", lines(dropped.iter().map(|p| p.variable.clone())));
            RankSummary {
                ranking: table.ordered_names(),
                dropped: dropped.into_iter().map(|p| p.variable).collect(),
                warnings,
            }
        }
    };
    let eval_rows = cfg.sage.eval_rows.min(cohort.rows(Partition::Validation).len());
    art.add("manifest.toml", manifest("rank", cfg, &[("effective sage.eval_rows", eval_rows.to_string())]));
    Ok((art, summary))
}

pub fn cmd_rank(cfg: &PipelineConfig, force: bool) -> CliResult<RankSummary> {
    cfg.validate()?;
    let names: &[&str] = match cfg.method {
        Method::Shapleyvic => &SHAPLEYVIC_FILES,
        Method::RandomForest => &FOREST_FILES,
    };
    preflight(&rank_dir(cfg), names, force)?;
    let (art, summary) = rank_artifacts(cfg)?;
    art.commit(force)?;
    Ok(summary)
}

/// Reads the ordered variable list left by `rank`.
pub fn read_ranking(dir: &Path) -> CliResult<Vec<String>> {
    let path = dir.join(RANKING_FILE);
    let text = fs::read_to_string(&path).map_err(|_| {
        CliError::usage(format!("no ranking at {}; run `vicscore rank` with this config first", path.display()))
    })?;
    let names: Vec<String> = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
    if names.is_empty() {
        return Err(CliError::data(format!("{} lists no variables", path.display())));
    }
    Ok(names)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub model: String,
    pub n_variables: usize,
    pub auc: AucResult,
}

#[derive(Debug, Clone)]
pub struct BuildSummary {
    pub suggested_m: usize,
    pub final_m: usize,
    pub table: ScoringTable,
    pub evaluation: Vec<Evaluation>,
}

fn integer_cell(cohort: &Cohort, variable: usize, row: usize) -> CliResult<i64> {
    let name = &cohort.schema()[variable].name;
    match cohort.column(variable) {
        Column::Continuous(x) => {
            let v = x[row].ok_or_else(|| CliError::data(format!("LACE: `{name}` missing at row {row}")))?;
            if v.fract() != 0.0 {
                return Err(CliError::data(format!("LACE: `{name}` must hold whole numbers, found {v}")));
            }
            Ok(v as i64)
        }
        Column::Categorical(_) => Err(CliError::data(format!("LACE: `{name}` must be a continuous column"))),
    }
}

fn flag_cell(cohort: &Cohort, variable: usize, row: usize) -> CliResult<bool> {
    match cohort.column(variable) {
        Column::Categorical(codes) => Ok(codes[row] != 0),
        Column::Continuous(_) => Ok(integer_cell(cohort, variable, row)? != 0),
    }
}

/// LACE totals over `rows`, with the weight map used when computed from flags.
fn lace_scores(
    cfg: &crate::config::LaceSection,
    cohort: &Cohort,
    rows: &[usize],
) -> CliResult<(Vec<f64>, Option<WeightMap>)> {
    let idx = |name: &str| cohort.variable_index(name).map_err(|e| CliError::usage(format!("lace: {e}")));
    let los = idx(&cfg.los)?;
    let ed = idx(&cfg.ed_visits)?;
    let acute = cfg.acute.as_deref().map(idx).transpose()?;
    let cci_col = cfg.cci.as_deref().map(idx).transpose()?;
    let mut flags: Vec<(Comorbidity, usize)> = Vec::new();
    for (name, column) in &cfg.comorbidities {
        let c: Comorbidity = name.parse().map_err(|e| CliError::usage(format!("lace: {e}")))?;
        flags.push((c, idx(column)?));
    }
    if cci_col.is_none() && flags.is_empty() {
        return Err(CliError::usage("lace: map either `cci` or `comorbidities`"));
    }
    let weights = match &cfg.weights {
        Some(path) => {
            let rows = read_table(path, &["flag_name", "weight"])?;
            let pairs = rows
                .iter()
                .map(|r| {
                    r[1].trim()
                        .parse::<u32>()
                        .map(|w| (r[0].clone(), w))
                        .map_err(|_| CliError::data(format!("{}: bad weight `{}`", path.display(), r[1])))
                })
                .collect::<CliResult<Vec<_>>>()?;
            WeightMap::from_pairs(&pairs).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?
        }
        None => WeightMap::default(),
    };
    let mut scores = Vec::with_capacity(rows.len());
    for &r in rows {
        let index = match cci_col {
            Some(c) => integer_cell(cohort, c, r)?,
            None => {
                let mut f = ComorbidityFlags::default();
                for &(c, col) in &flags {
                    if flag_cell(cohort, col, r)? {
                        f.set(c, true);
                    }
                }
                i64::from(cci(&f, &weights))
            }
        };
        let input = LaceInput {
            inpatient_los_days: integer_cell(cohort, los, r)?,
            acute_admission: acute.map_or(Ok(true), |a| flag_cell(cohort, a, r))?,
            cci: index,
            ed_visits_6m: integer_cell(cohort, ed, r)?,
        };
        scores.push(lace_score(&input).map_err(|e| CliError::data(format!("LACE at row {r}: {e}")))? as f64);
    }
    Ok((scores, cci_col.is_none().then_some(weights)))
}

pub fn build_artifacts(cfg: &PipelineConfig, final_m: Option<usize>) -> CliResult<(Artifacts, BuildSummary)> {
    cfg.validate()?;
    let ranking_names = read_ranking(&rank_dir(cfg))?;
    let prepared = prepare(cfg)?;
    let cohort = &prepared.cohort;
    let ranking = cohort
        .variable_indices(&ranking_names)
        .map_err(|e| CliError::data(format!("ranking does not match the data: {e}")))?;

    let method = match cfg.scorecard.cut_method {
        CutMethodName::Quantile => CutMethod::Quantile,
        CutMethodName::Kmeans => CutMethod::KMeans,
    };
    let mut cuts = CutSet::default();
    for (k, &v) in ranking.iter().enumerate() {
        if cohort.schema()[v].is_continuous() {
            let seed = derive_seed(derive_seed(cfg.seed, KMEANS_SALT), k as u64);
            cuts.set(make_cuts(cohort, v, method, cfg.scorecard.kmeans_k, seed).stage("cuts")?);
        }
    }
    let curve = parsimony(cohort, &ranking, &cuts).stage("parsimony")?;
    let suggested = suggest_m(&curve, cfg.scorecard.min_gain);
    let m = final_m.or((cfg.scorecard.final_m > 0).then_some(cfg.scorecard.final_m)).unwrap_or(suggested);
    if m == 0 || m > ranking.len() {
        return Err(CliError::usage(format!("final m must lie in 1..={}, got {m}", ranking.len())));
    }
    let mut table = derive_points(cohort, &ranking[..m], &cuts).stage("points")?;
    if !cfg.scorecard.overrides.is_empty() {
        let overrides: Vec<CutEntry> = cfg
            .scorecard
            .overrides
            .iter()
            .map(|o| CutEntry::manual(o.variable.clone(), o.cuts.clone()))
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::usage(format!("config: {e}")))?;
        let (tuned, tuned_cuts) = fine_tune(cohort, &table, &cuts, &overrides).map_err(|e| match e {
            vicscore_core::Error::Cuts(msg) => CliError::usage(format!("fine-tune: {msg}")),
            other => CliError::at("fine-tune", other),
        })?;
        table = tuned;
        cuts = tuned_cuts;
    }

    let test_rows = cohort.rows(Partition::Test);
    let y: Vec<f64> = test_rows.iter().map(|&r| cohort.outcome()[r] as f64).collect();
    let boot_seed = derive_seed(cfg.seed, BOOTSTRAP_SALT);
    let n_boot = cfg.scorecard.bootstrap;
    let mut evaluation = Vec::new();
    let scores: Vec<f64> = table.score_partition(cohort, Partition::Test).stage("scoring")?.into_iter().map(f64::from).collect();
    evaluation.push(Evaluation {
        model: "scorecard".into(),
        n_variables: m,
        auc: auc_ci(&scores, &y, n_boot, boot_seed).stage("evaluation")?,
    });
    let all: Vec<usize> = (0..cohort.schema().len()).collect();
    let (train_design, train_y) = cohort.encode(Partition::Train, &all).stage("encode")?;
    let full = fit_logistic(&train_design, &train_y).stage("full model")?;
    let (test_design, _) = cohort.encode(Partition::Test, &all).stage("encode")?;
    evaluation.push(Evaluation {
        model: "full_logistic".into(),
        n_variables: all.len(),
        auc: auc_ci(&full.linear_predictors(&test_design), &y, n_boot, boot_seed).stage("evaluation")?,
    });
    let mut art = Artifacts::new(build_dir(cfg));
    if let Some(lace) = &cfg.lace {
        let (lace_scores, weights) = lace_scores(lace, cohort, &test_rows)?;
        evaluation.push(Evaluation {
            model: "lace".into(),
            n_variables: 4,
            auc: auc_ci(&lace_scores, &y, n_boot, boot_seed).stage("evaluation")?,
        });
        if let Some(w) = weights {
            art.add(
                "weights.csv",
                csv_bytes(&["flag_name", "weight"], w.pairs().into_iter().map(|(n, w)| vec![n, w.to_string()])),
            );
        }
    }

    art.add(
        "cuts.csv",
        csv_bytes(
            &["variable", "method", "cuts"],
            cuts.entries.iter().map(|e| {
                vec![e.variable.clone(), e.method.to_string(), e.cuts.iter().map(|&c| num(c)).collect::<Vec<_>>().join(";")]
            }),
        ),
    );
    art.add(
        "parsimony.csv",
        csv_bytes(
            &["m", "variable", "auc"],
            curve.points.iter().map(|p| vec![p.m.to_string(), p.variable.clone(), num(p.auc)]),
        ),
    );
    art.add("suggested_m.txt", format!("{suggested}\n"));
    art.add(
        "scoring_table.csv",
        csv_bytes(&SCORING_HEADER, table_rows(&table).into_iter().map(|(v, l, p)| vec![v, l, p.to_string()])),
    );
    art.add(
        "evaluation.csv",
        csv_bytes(
            &["model", "n_variables", "auc", "ci_low", "ci_high"],
            evaluation.iter().map(|e| {
                vec![e.model.clone(), e.n_variables.to_string(), num(e.auc.auc), num(e.auc.ci_low), num(e.auc.ci_high)]
            }),
        ),
    );
    art.add(
        "manifest.toml",
        manifest("build", cfg, &[("final_m", m.to_string()), ("suggested_m", suggested.to_string())]),
    );
    Ok((art, BuildSummary { suggested_m: suggested, final_m: m, table, evaluation }))
}

pub fn cmd_build(cfg: &PipelineConfig, final_m: Option<usize>, force: bool) -> CliResult<BuildSummary> {
    cfg.validate()?;
    let mut names = BUILD_FILES.to_vec();
    if cfg.lace.is_some() {
        names.push("weights.csv");
    }
    preflight(&build_dir(cfg), &names, force)?;
    let (art, summary) = build_artifacts(cfg, final_m)?;
    art.commit(force)?;
    Ok(summary)
}

/// Reads a scoring table; variable kinds come from `schema` or, without one,
/// from whether the labels parse as intervals.
pub fn read_scoring_table(path: &Path, schema: Option<&SchemaFile>) -> CliResult<ScoringTable> {
    let rows = read_table(path, &SCORING_HEADER)?;
    let parsed = rows
        .into_iter()
        .enumerate()
        .map(|(k, r)| {
            let points = r[2]
                .trim()
                .parse::<u32>()
                .map_err(|_| CliError::data(format!("{}: row {}: bad points `{}`", path.display(), k + 1, r[2])))?;
            Ok((r[0].clone(), r[1].clone(), points))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let kinds: Option<Vec<(String, bool)>> = schema
        .map(|s| s.predictors().map(|(p, _)| p.iter().map(|v| (v.name.clone(), v.is_continuous())).collect()))
        .transpose()?;
    let labels_of = |name: &str| -> Vec<String> {
        parsed.iter().filter(|(v, _, _)| v == name).map(|(_, l, _)| l.clone()).collect()
    };
    table_from_rows(&parsed, |name| match &kinds {
        Some(k) => k
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| *c)
            .ok_or_else(|| vicscore_core::Error::UnknownVariable(name.into())),
        None => Ok(vicscore_core::scorecard::Bins::parse_interval_labels(&labels_of(name)).is_ok()),
    })
    .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

/// Appends a `score` column to every row of a delimited data file.
pub fn score_file(table: &ScoringTable, data: &Path, delimiter: u8) -> CliResult<Vec<u8>> {
    let bytes = fs::read(data).map_err(|e| CliError::data(format!("cannot read {}: {e}", data.display())))?;
    let mut writer = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    if bytes.iter().all(u8::is_ascii_whitespace) {
        writer.write_record(["score"]).expect("in-memory write");
        return Ok(writer.into_inner().expect("in-memory flush"));
    }
    let mut reader = csv::ReaderBuilder::new().delimiter(delimiter).flexible(true).from_reader(bytes.as_slice());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::data(format!("{}: {e}", data.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let columns: Vec<usize> = table
        .variables
        .iter()
        .map(|v| {
            header
                .iter()
                .position(|h| h == &v.variable)
                .ok_or_else(|| CliError::data(format!("{}: column `{}` is missing", data.display(), v.variable)))
        })
        .collect::<CliResult<_>>()?;
    let mut out_header = header.clone();
    out_header.push("score".into());
    writer.write_record(&out_header).expect("in-memory write");
    let mut problems = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| CliError::data(format!("{}: row {row}: {e}", data.display())))?;
        let values: Result<Vec<RawValue>, String> = table
            .variables
            .iter()
            .zip(&columns)
            .map(|(v, &c)| {
                let cell = record.get(c).unwrap_or("").trim();
                match &v.bins {
                    vicscore_core::scorecard::Bins::Intervals(_) => cell
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .map(RawValue::Number)
                        .ok_or_else(|| format!("column `{}`: `{cell}` is not a number", v.variable)),
                    vicscore_core::scorecard::Bins::Categories(_) => Ok(RawValue::Category(cell.to_string())),
                }
            })
            .collect();
        match values.and_then(|v| table.score_row(&v).map_err(|e| e.to_string())) {
            Ok(score) => {
                let mut out: Vec<String> = record.iter().map(str::to_string).collect();
                out.push(score.to_string());
                writer.write_record(&out).expect("in-memory write");
            }
            Err(msg) => problems.push(format!("row {row}: {msg}")),
        }
    }
    if !problems.is_empty() {
        let shown: Vec<&String> = problems.iter().take(20).collect();
        let more = problems.len().saturating_sub(shown.len());
        let mut msg = format!("{}: {} row(s) could not be scored\n", data.display(), problems.len());
        msg.push_str(&shown.iter().map(|s| format!("  {s}")).collect::<Vec<_>>().join("\n"));
        if more > 0 {
            msg.push_str(&format!("\n  … and {more} more"));
        }
        return Err(CliError::Data(msg));
    }
    Ok(writer.into_inner().expect("in-memory flush"))
}

/// Synthetic cohort files: data, schema, spec and the planted signal list.
pub fn synth_artifacts(spec: &GeneratorSpec, out: &Path) -> CliResult<(Artifacts, Vec<String>)> {
    let generated = generate(spec).map_err(|e| CliError::usage(format!("synthetic spec: {e}")))?;
    let cohort = &generated.cohort;
    let outcome = "outcome";
    let mut header: Vec<String> = cohort.schema().iter().map(|v| v.name.clone()).collect();
    header.push(outcome.into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = (0..cohort.n_rows()).map(|r| {
        let mut row: Vec<String> = cohort
            .columns()
            .iter()
            .zip(cohort.schema())
            .map(|(col, s)| match col {
                Column::Continuous(x) => x[r].map(num).unwrap_or_default(),
                Column::Categorical(c) => s.categories().map(|cats| cats[c[r] as usize].clone()).unwrap_or_default(),
            })
            .collect();
        row.push(cohort.outcome()[r].to_string());
        row
    });
    let mut art = Artifacts::new(out);
    art.add("cohort.csv", csv_bytes(&header_refs, rows));
    art.add("schema.toml", SchemaFile::from_schema(cohort.schema(), outcome).to_toml());
    art.add("spec.toml", SynthSpecFile::from_spec(spec).to_toml());
    art.add("signal_variables.txt", lines(spec.signal_variables()));
    Ok((art, generated.warnings))
}

pub const SYNTH_FILES: [&str; 4] = ["cohort.csv", "schema.toml", "spec.toml", "signal_variables.txt"];

pub fn cmd_synth(spec: &GeneratorSpec, out: &Path, force: bool) -> CliResult<Vec<String>> {
    preflight(out, &SYNTH_FILES, force)?;
    let (art, warnings) = synth_artifacts(spec, out)?;
    art.commit(force)?;
    Ok(warnings)
}

pub fn cmd_score(
    table_path: &Path,
    data: &Path,
    schema: Option<&Path>,
    out: Option<&Path>,
    force: bool,
) -> CliResult<Vec<u8>> {
    if let Some(o) = out {
        if o.exists() && !force {
            return Err(CliError::usage(format!("refusing to overwrite {} (pass --force)", o.display())));
        }
    }
    let schema = schema.map(SchemaFile::read).transpose()?;
    let delimiter = schema.as_ref().map(SchemaFile::delimiter_byte).transpose()?.unwrap_or(b',');
    let table = read_scoring_table(table_path, schema.as_ref())?;
    let bytes = score_file(&table, data, delimiter)?;
    if let Some(o) = out {
        fs::write(o, &bytes).map_err(|e| CliError::usage(format!("cannot write {}: {e}", o.display())))?;
    }
    Ok(bytes)
}
