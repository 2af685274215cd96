//! The experiment pipeline: ingest, feature assembly, chronological
//! split, model selection, training, daily test-set ranking, metrics,
//! and file artifacts.
//!
//! `run` is exactly `train` followed by `evaluate`, sharing nothing but
//! the files on disk, so staged and single-shot executions agree.

use std::path::{Path, PathBuf};

use serde::Serialize;

use hotgrid_core::ensemble::{member_seeds, train_hyper_ensemble};
use hotgrid_core::features::{assemble, prior_crime_counts, StaticAttrs, WeatherTable};
use hotgrid_core::frame::{
    build_frame, chronological_split, class_balance, EventPolicy, SpatioTemporalFrame,
    StudyPeriod,
};
use hotgrid_core::grid::{build_grid, Bounds, CellId, EpochDay, EventRecord, GridSpec, MaskSource};
use hotgrid_core::learners::{cost_weights, cross_validate, fit, CvData, LearnerSpec};
use hotgrid_core::metrics::{compute_report, rank_cells, CoverageSpec, DailyRanking, MetricReport};
use hotgrid_core::resample::{
    near_miss, random_over_sample, smote, under_sample_indices,
};
use hotgrid_core::seed::rng_from_seed;
use hotgrid_core::Matrix;
use rand::seq::SliceRandom;

use crate::config::{ExperimentConfig, Strategy};
use crate::csvio;
use crate::dates::format_date;
use crate::error::{CliError, CliResult};
use crate::model_io::{load_model, save_model, TrainedModel};

/// Everything the training and evaluation stages consume.
pub struct PreparedData {
    pub grid: GridSpec,
    pub statics: StaticAttrs,
    pub train: SpatioTemporalFrame,
    pub test: SpatioTemporalFrame,
    pub boundary_bucket: usize,
    /// The assembled full frame, kept for ranking arbitrary days and for
    /// the crime-feature leakage audit.
    pub full: SpatioTemporalFrame,
}

/// Structural no-leakage record of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunAudit {
    pub boundary_bucket: usize,
    pub train_last_bucket: usize,
    pub test_first_bucket: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    /// Test-period rows visible to any pre-evaluation stage; the split
    /// hands training code a frame that simply does not contain them,
    /// and this asserts that fact.
    pub test_rows_read_before_evaluation: usize,
    pub crime_feature_rows_checked: usize,
    pub crime_feature_mismatches: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpecReport {
    pub strategy: String,
    pub base_learner: String,
    pub chosen: LearnerSpec,
    pub grid_size: usize,
    pub cv_mean_scores: Vec<f64>,
}

pub struct IngestSummary {
    pub width_cells: usize,
    pub height_cells: usize,
    pub eligible_cells: usize,
    pub buckets: usize,
    pub rows: usize,
    pub positives: usize,
    pub ratio: f64,
    pub rejected_events: usize,
}

fn explicit_bounds(config: &ExperimentConfig) -> CliResult<Option<Bounds>> {
    let g = &config.grid;
    match (g.min_x, g.min_y, g.max_x, g.max_y) {
        (Some(min_x), Some(min_y), Some(max_x), Some(max_y)) => Ok(Some(Bounds {
            min_x,
            min_y,
            max_x,
            max_y,
        })),
        (None, None, None, None) => Ok(None),
        _ => Err(CliError::config(
            "config",
            "grid bounds need all of min_x, min_y, max_x, max_y or none",
        )),
    }
}

pub fn study_period(config: &ExperimentConfig) -> CliResult<StudyPeriod> {
    let start = crate::dates::parse_date("config", &config.period.start)?;
    let end = crate::dates::parse_date("config", &config.period.end)?;
    StudyPeriod::new(start, end).map_err(|e| CliError::config("config", e))
}

/// Reads and validates all input files, builds the grid, and applies
/// eligibility and stratification.
pub fn ingest(
    config: &ExperimentConfig,
) -> CliResult<(GridSpec, Vec<EventRecord>, StaticAttrs, WeatherTable)> {
    const STAGE: &str = "ingest";
    let events = csvio::read_events(&config.data.events)?;
    let statics = csvio::read_static_attrs(&config.data.static_attrs)?;
    let mut weather = csvio::read_weather(&config.data.weather)?;
    if let Some(path) = &config.data.public_events {
        csvio::read_public_events(path, &mut weather)?;
    }

    let mut grid = build_grid(
        &events,
        config.grid.cell_size,
        explicit_bounds(config)?,
        MaskSource::AllEligible,
    )
    .map_err(|e| CliError::from_core(STAGE, e))?;

    if let Some(path) = &config.data.eligibility {
        let entries = csvio::read_eligibility(path)?;
        grid.set_eligibility(MaskSource::Cells(&entries))
            .map_err(|e| CliError::from_core(STAGE, e))?;
    }

    if let Some(strat) = &config.stratify {
        if statics.names().iter().all(|n| n != &strat.feature) {
            return Err(CliError::data(
                STAGE,
                format!("stratify feature {:?} not in static attributes", strat.feature),
            ));
        }
        let keep: Vec<CellId> = grid
            .eligible_cells()
            .iter()
            .copied()
            .filter_map(|cell| {
                let v = statics.value(cell, &strat.feature)?;
                let selected = match strat.stratum.as_str() {
                    "low" => v < strat.low,
                    "mid" => v >= strat.low && v <= strat.high,
                    _ => v > strat.high,
                };
                selected.then_some(cell)
            })
            .collect();
        if keep.is_empty() {
            return Err(CliError::data(
                STAGE,
                format!(
                    "stratum {} on {} leaves no eligible cells",
                    strat.stratum, strat.feature
                ),
            ));
        }
        grid.restrict_eligible(&keep)
            .map_err(|e| CliError::from_core(STAGE, e))?;
    }

    Ok((grid, events, statics, weather))
}

/// Full preparation: ingest, frame build, feature assembly, split.
pub fn prepare(config: &ExperimentConfig) -> CliResult<PreparedData> {
    const STAGE: &str = "prepare";
    let (grid, events, statics, weather) = ingest(config)?;
    let statics = match &config.features.spatial {
        Some(columns) => statics
            .select(columns)
            .map_err(|e| CliError::config(STAGE, e))?,
        None => statics,
    };
    let period = study_period(config)?;
    let resolution = config.resolution()?;
    let policy = if config.experiment.strict_events {
        EventPolicy::Strict
    } else {
        EventPolicy::Skip
    };

    let frame = build_frame(&grid, &events, period, resolution, policy)
        .map_err(|e| CliError::from_core(STAGE, e))?;

    let weather = weather
        .covering(period.first_day, period.num_days())
        .imputed()
        .map_err(|e| CliError::from_core(STAGE, e))?;

    let full = assemble(
        &frame,
        &statics,
        &weather,
        config.feature_set()?,
        &config.experiment.prior_windows,
    )
    .map_err(|e| CliError::from_core(STAGE, e))?;

    let split = chronological_split(&full, config.experiment.train_fraction)
        .map_err(|e| CliError::from_core(STAGE, e))?;

    Ok(PreparedData {
        grid,
        statics,
        train: split.train,
        test: split.test,
        boundary_bucket: split.boundary_bucket,
        full,
    })
}

pub fn ingest_summary(config: &ExperimentConfig) -> CliResult<IngestSummary> {
    let prepared = prepare(config)?;
    let balance =
        class_balance(&prepared.full).map_err(|e| CliError::from_core("ingest", e))?;
    Ok(IngestSummary {
        width_cells: prepared.grid.width_cells(),
        height_cells: prepared.grid.height_cells(),
        eligible_cells: prepared.grid.n_eligible(),
        buckets: prepared.full.num_buckets(),
        rows: prepared.full.n_rows(),
        positives: balance.positives,
        ratio: balance.ratio,
        rejected_events: prepared.full.rejected_events(),
    })
}

/// Resamples a fold's training part for cross-validation, per strategy.
fn fold_prep(
    strategy: Strategy,
    k_neighbors: usize,
) -> Option<impl Fn(&Matrix, &[bool], u64) -> hotgrid_core::Result<(Matrix, Vec<bool>, Option<Vec<f64>>)>>
{
    match strategy {
        Strategy::Cost | Strategy::Over | Strategy::Smote | Strategy::NearMiss => {
            Some(move |x: &Matrix, y: &[bool], seed: u64| match strategy {
                Strategy::Cost => Ok((x.clone(), y.to_vec(), Some(cost_weights(y)?))),
                Strategy::Over => {
                    let (xr, yr) = random_over_sample(x, y, seed)?;
                    Ok((xr, yr, None))
                }
                Strategy::Smote => {
                    let (xr, yr) = smote(x, y, k_neighbors, seed, false)?;
                    Ok((xr, yr, None))
                }
                Strategy::NearMiss => {
                    let (xr, yr) = near_miss(x, y, k_neighbors)?;
                    Ok((xr, yr, None))
                }
                _ => unreachable!(),
            })
        }
        _ => None,
    }
}

/// Picks the learner spec: single-point grids skip cross-validation,
/// larger grids run 5-fold CV on the strategy's training view.
pub fn select_spec(
    config: &ExperimentConfig,
    train: &SpatioTemporalFrame,
) -> CliResult<SpecReport> {
    const STAGE: &str = "train";
    let strategy = config.strategy()?;
    let grid = config.learner_grid()?;
    let base = SpecReport {
        strategy: strategy.name().to_string(),
        base_learner: if strategy == Strategy::Majority {
            "none".to_string()
        } else {
            config.learner.kind.clone()
        },
        chosen: grid[0],
        grid_size: grid.len(),
        cv_mean_scores: Vec::new(),
    };
    if strategy == Strategy::Majority || grid.len() == 1 {
        return Ok(base);
    }

    let y = train.labels();
    let buckets = train.row_buckets();
    let seed = config.experiment.seed;

    let outcome = match strategy {
        Strategy::Hyper | Strategy::Under => {
            // tune once on a single balanced draw, reused by every member
            let (sample_seed, _) = member_seeds(seed, 0);
            let keep =
                under_sample_indices(&y, sample_seed).map_err(|e| CliError::from_core(STAGE, e))?;
            let x_sub = train.features().gather(&keep);
            let y_sub: Vec<bool> = keep.iter().map(|&i| y[i]).collect();
            let b_sub: Vec<usize> = keep.iter().map(|&i| buckets[i]).collect();
            cross_validate(
                &grid,
                CvData {
                    x: &x_sub,
                    y: &y_sub,
                    buckets: &b_sub,
                },
                config.learner.folds,
                seed,
                None,
            )
        }
        _ => {
            let prep = fold_prep(strategy, config.experiment.k_neighbors);
            let prep_ref: Option<&dyn Fn(
                &Matrix,
                &[bool],
                u64,
            )
                -> hotgrid_core::Result<(Matrix, Vec<bool>, Option<Vec<f64>>)>> =
                prep.as_ref().map(|f| f as _);
            cross_validate(
                &grid,
                CvData {
                    x: train.features(),
                    y: &y,
                    buckets: &buckets,
                },
                config.learner.folds,
                seed,
                prep_ref,
            )
        }
    }
    .map_err(|e| CliError::from_core(STAGE, e))?;

    Ok(SpecReport {
        chosen: grid[outcome.best],
        cv_mean_scores: outcome.mean_scores,
        ..base
    })
}

/// Trains the configured strategy on the training frame.
pub fn train_model(
    config: &ExperimentConfig,
    train: &SpatioTemporalFrame,
    spec: &LearnerSpec,
) -> CliResult<TrainedModel> {
    const STAGE: &str = "train";
    let strategy = config.strategy()?;
    let master = config.experiment.seed;
    let x = train.features();
    let y = train.labels();

    let core = |r: hotgrid_core::Error| CliError::from_core(STAGE, r);
    Ok(match strategy {
        Strategy::Majority => TrainedModel::Majority,
        Strategy::Naive => TrainedModel::Single(fit(spec, x, &y, None).map_err(core)?),
        Strategy::Cost => {
            let w = cost_weights(&y).map_err(core)?;
            TrainedModel::Single(fit(spec, x, &y, Some(&w)).map_err(core)?)
        }
        Strategy::Under => {
            // mirrors hyper-ensemble member 0 so phi = 1 reproduces this
            let (sample_seed, fit_seed) = member_seeds(master, 0);
            let keep = under_sample_indices(&y, sample_seed).map_err(core)?;
            let x_sub = x.gather(&keep);
            let y_sub: Vec<bool> = keep.iter().map(|&i| y[i]).collect();
            TrainedModel::Single(
                fit(&spec.with_seed(fit_seed), &x_sub, &y_sub, None).map_err(core)?,
            )
        }
        Strategy::Over => {
            let (sample_seed, fit_seed) = member_seeds(master, 0);
            let (x_r, y_r) = random_over_sample(x, &y, sample_seed).map_err(core)?;
            TrainedModel::Single(fit(&spec.with_seed(fit_seed), &x_r, &y_r, None).map_err(core)?)
        }
        Strategy::Smote => {
            let (sample_seed, fit_seed) = member_seeds(master, 0);
            let (x_r, y_r) =
                smote(x, &y, config.experiment.k_neighbors, sample_seed, false).map_err(core)?;
            TrainedModel::Single(fit(&spec.with_seed(fit_seed), &x_r, &y_r, None).map_err(core)?)
        }
        Strategy::NearMiss => {
            let (_, fit_seed) = member_seeds(master, 0);
            let (x_r, y_r) = near_miss(x, &y, config.experiment.k_neighbors).map_err(core)?;
            TrainedModel::Single(fit(&spec.with_seed(fit_seed), &x_r, &y_r, None).map_err(core)?)
        }
        Strategy::Hyper => TrainedModel::Ensemble(
            train_hyper_ensemble(x, &y, config.experiment.phi, spec, master).map_err(core)?,
        ),
    })
}

/// Probability scores for every row of a frame.
pub fn score_frame(model: &TrainedModel, frame: &SpatioTemporalFrame) -> CliResult<Vec<f64>> {
    const STAGE: &str = "evaluate";
    Ok(match model {
        TrainedModel::Majority => vec![0.0; frame.n_rows()],
        TrainedModel::Single(m) => m
            .predict_proba(frame.features())
            .map_err(|e| CliError::from_core(STAGE, e))?,
        TrainedModel::Ensemble(e) => e
            .predict(frame.features())
            .map_err(|e| CliError::from_core(STAGE, e))?,
    })
}

pub struct Evaluation {
    pub report: MetricReport,
    /// (global bucket, first calendar day) per evaluated bucket.
    pub days: Vec<(usize, EpochDay)>,
    pub rankings: Vec<DailyRanking>,
}

/// Ranks each bucket of the frame and computes the metric report.
pub fn evaluate_frame(
    config: &ExperimentConfig,
    frame: &SpatioTemporalFrame,
    scores: &[f64],
) -> CliResult<Evaluation> {
    const STAGE: &str = "evaluate";
    let n = frame.n_cells();
    let cells = frame.cells();
    let mut rankings = Vec::with_capacity(frame.num_buckets());
    let mut actuals = Vec::with_capacity(frame.num_buckets());
    let mut days = Vec::with_capacity(frame.num_buckets());
    for local in 0..frame.num_buckets() {
        let bucket = frame.first_bucket() + local;
        let day_scores = &scores[local * n..(local + 1) * n];
        rankings.push(
            rank_cells(day_scores, cells, bucket).map_err(|e| CliError::from_core(STAGE, e))?,
        );
        actuals.push(frame.positive_cells(bucket));
        days.push((
            bucket,
            frame
                .period()
                .bucket_first_day(bucket, frame.resolution()),
        ));
    }
    let report = compute_report(
        &rankings,
        &actuals,
        &config.experiment.coverage_levels,
        &config.curve_grid(),
        config.averaging()?,
    )
    .map_err(|e| CliError::from_core(STAGE, e))?;
    Ok(Evaluation {
        report,
        days,
        rankings,
    })
}

/// Recomputes sampled crime-history features from raw counts restricted
/// to strictly earlier buckets; any mismatch is feature leakage.
pub fn audit_crime_features(
    config: &ExperimentConfig,
    full: &SpatioTemporalFrame,
    max_rows: usize,
) -> CliResult<(usize, usize)> {
    if !config.feature_set()?.includes_crime() {
        return Ok((0, 0));
    }
    let windows = &config.experiment.prior_windows;
    let mut rows: Vec<usize> = (0..full.n_rows()).collect();
    if rows.len() > max_rows {
        let mut rng = rng_from_seed(config.experiment.seed ^ 0xA0D1_7);
        rows.shuffle(&mut rng);
        rows.truncate(max_rows);
    }
    let mut mismatches = 0usize;
    for &row in &rows {
        let cell = full.cell_of_row(row);
        let bucket = full.bucket_of_row(row);
        let expect = prior_crime_counts(full, cell, bucket, windows)
            .map_err(|e| CliError::from_core("audit", e))?;
        let stored = full.features().row(row);
        for (wi, &count) in expect.iter().enumerate() {
            if stored[wi] != count as f64 {
                mismatches += 1;
            }
        }
    }
    Ok((rows.len(), mismatches))
}

pub fn build_audit(config: &ExperimentConfig, prepared: &PreparedData) -> CliResult<RunAudit> {
    let train_last = prepared.train.first_bucket() + prepared.train.num_buckets() - 1;
    let test_first = prepared.test.first_bucket();
    // the training stage only ever receives `prepared.train`; a boundary
    // violation here would mean the split itself leaked
    let leaked = usize::from(train_last >= test_first)
        * prepared.test.n_rows();
    let (checked, mismatches) = audit_crime_features(config, &prepared.full, 2_000)?;
    Ok(RunAudit {
        boundary_bucket: prepared.boundary_bucket,
        train_last_bucket: train_last,
        test_first_bucket: test_first,
        train_rows: prepared.train.n_rows(),
        test_rows: prepared.test.n_rows(),
        test_rows_read_before_evaluation: leaked,
        crime_feature_rows_checked: checked,
        crime_feature_mismatches: mismatches,
    })
}

fn write_json<T: Serialize>(stage: &str, path: &Path, value: &T) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(stage, parent, e))?;
    }
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::data(stage, format!("serialize: {e}")))?;
    std::fs::write(path, json).map_err(|e| CliError::io(stage, path, e))
}

pub fn model_path(out_dir: &Path) -> PathBuf {
    out_dir.join("model.json")
}

/// Train stage: prepare, select, fit, persist model + spec + audit.
pub fn train_stage(config: &ExperimentConfig) -> CliResult<SpecReport> {
    let out = &config.experiment.out_dir;
    let prepared = prepare(config)?;
    let audit = build_audit(config, &prepared)?;
    if audit.test_rows_read_before_evaluation > 0 || audit.crime_feature_mismatches > 0 {
        return Err(CliError::data(
            "train",
            format!("leakage audit failed: {audit:?}"),
        ));
    }
    let spec_report = select_spec(config, &prepared.train)?;
    let model = train_model(config, &prepared.train, &spec_report.chosen)?;
    save_model(&model_path(out), &model)?;
    write_json("train", &out.join("spec.json"), &spec_report)?;
    write_json("train", &out.join("audit.json"), &audit)?;
    Ok(spec_report)
}

/// Evaluate stage: prepare, load the trained model, rank every test
/// bucket, and write all metric artifacts.
pub fn evaluate_stage(config: &ExperimentConfig, svg: bool) -> CliResult<MetricReport> {
    let out = &config.experiment.out_dir;
    let prepared = prepare(config)?;
    let model = load_model(&model_path(out))?;
    let scores = score_frame(&model, &prepared.test)?;
    let evaluation = evaluate_frame(config, &prepared.test, &scores)?;

    let strategy = config.strategy()?;
    let base_learner = if strategy == Strategy::Majority {
        "none"
    } else {
        &config.learner.kind
    };
    csvio::write_metrics(
        &out.join("metrics.csv"),
        strategy.name(),
        base_learner,
        &config.experiment.feature_set,
        &evaluation.report,
    )?;
    csvio::write_surveillance(&out.join("surveillance.csv"), &evaluation.report.curve)?;
    csvio::write_daily_hits(&out.join("daily_hits.csv"), &evaluation.days, &evaluation.report)?;

    // ranked hotspot file per day at the widest configured coverage;
    // smaller budgets are prefixes of the ranking
    let max_coverage = config
        .experiment
        .coverage_levels
        .iter()
        .cloned()
        .fold(f64::MIN, f64::max);
    let k = CoverageSpec::new(max_coverage, prepared.test.n_cells())
        .map_err(|e| CliError::from_core("evaluate", e))?
        .k_cells;
    for (pos, ranking) in evaluation.rankings.iter().enumerate() {
        let (bucket, _) = evaluation.days[pos];
        let path = out.join("hotspots").join(format!("day_{bucket:05}.csv"));
        csvio::write_hotspots(
            &path,
            &prepared.grid,
            ranking.top(k),
            &ranking.scores()[..k],
        )?;
    }
    if svg {
        crate::svg::write_surveillance_svg(
            &out.join("surveillance.svg"),
            &evaluation.report.curve,
        )?;
    }
    Ok(evaluation.report)
}

/// Single-shot experiment: the train stage then the evaluate stage.
pub fn run_experiment(config: &ExperimentConfig, svg: bool) -> CliResult<MetricReport> {
    train_stage(config)?;
    evaluate_stage(config, svg)
}

pub struct RankOutput {
    pub bucket: usize,
    pub cells: Vec<CellId>,
    pub scores: Vec<f64>,
}

/// Top-k hotspot list for one calendar day at the given coverage.
pub fn rank_day(
    config: &ExperimentConfig,
    date: EpochDay,
    coverage: f64,
) -> CliResult<(PreparedData, RankOutput)> {
    const STAGE: &str = "rank";
    let prepared = prepare(config)?;
    let model = load_model(&model_path(&config.experiment.out_dir))?;
    let bucket = prepared
        .full
        .period()
        .bucket_of(date, prepared.full.resolution())
        .ok_or_else(|| {
            CliError::data(
                STAGE,
                format!("{} is outside the study period", format_date(date)),
            )
        })?;
    let scores = score_frame(&model, &prepared.full)?;
    let n = prepared.full.n_cells();
    let day_scores = &scores[bucket * n..(bucket + 1) * n];
    let ranking = rank_cells(day_scores, prepared.full.cells(), bucket)
        .map_err(|e| CliError::from_core(STAGE, e))?;
    let k = CoverageSpec::new(coverage, n)
        .map_err(|e| CliError::from_core(STAGE, e))?
        .k_cells;
    let out = RankOutput {
        bucket,
        cells: ranking.top(k).to_vec(),
        scores: ranking.scores()[..k].to_vec(),
    };
    Ok((prepared, out))
}
