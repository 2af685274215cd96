//! Daily event-hotspot forecasting on a grid under extreme class
//! imbalance: dataset ingestion, synthetic data, training, evaluation,
//! ranking, and run comparison.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hotgrid_cli::config::{ExperimentConfig, Overrides};
use hotgrid_cli::csvio::fmt_f64;
use hotgrid_cli::dates::parse_date;
use hotgrid_cli::error::{CliError, CliResult};
use hotgrid_cli::{compare, csvio, geojson, runner, synthio};
use hotgrid_core::synth;

#[derive(Parser)]
#[command(
    name = "hotgrid",
    version,
    about = "Imbalance-aware spatio-temporal hotspot forecasting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Experiment config (TOML).
    #[arg(long, short = 'c')]
    config: PathBuf,
    /// Override the strategy (majority|naive|cost|under|over|smote|nearmiss|hyper).
    #[arg(long)]
    strategy: Option<String>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the hyper-ensemble size.
    #[arg(long)]
    phi: Option<usize>,
    /// Override the feature set (crime|spatial|temporal|all).
    #[arg(long)]
    feature_set: Option<String>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the base learner (random-forest|adaboost|logistic-l1|logistic-l2).
    #[arg(long)]
    learner: Option<String>,
    /// Override the temporal resolution (daily|weekly).
    #[arg(long)]
    resolution: Option<String>,
}

impl ConfigArgs {
    fn load(&self) -> CliResult<ExperimentConfig> {
        let overrides = Overrides {
            strategy: self.strategy.clone(),
            seed: self.seed,
            phi: self.phi,
            feature_set: self.feature_set.clone(),
            out_dir: self.out.clone(),
            learner_kind: self.learner.clone(),
            resolution: self.resolution.clone(),
        };
        ExperimentConfig::load(&self.config, &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate the input files and print a dataset summary.
    Ingest(ConfigArgs),
    /// Generate a synthetic dataset with known ground-truth risk.
    Synth(SynthArgs),
    /// Select hyperparameters, train the configured strategy, and save
    /// the model.
    Train(ConfigArgs),
    /// Score the test period with a trained model and write metrics.
    Evaluate(EvaluateArgs),
    /// Train and evaluate in one shot.
    Run(EvaluateArgs),
    /// Emit the top-k hotspot list for one day.
    Rank(RankArgs),
    /// Paired t-tests between two evaluated runs.
    Compare(CompareArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for the generated CSV files.
    #[arg(long, short = 'o')]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid width in cells.
    #[arg(long, default_value_t = 20)]
    width: usize,
    /// Grid height in cells.
    #[arg(long, default_value_t = 20)]
    height: usize,
    #[arg(long, default_value_t = 365)]
    days: usize,
    /// Target positive fraction of the observations.
    #[arg(long, default_value_t = 6e-4)]
    rate: f64,
    /// First simulated day (ISO-8601).
    #[arg(long, default_value = "2020-01-06")]
    start: String,
    /// Informative static features.
    #[arg(long, default_value_t = 4)]
    static_features: usize,
    /// Scale of the static effects on the risk logit.
    #[arg(long, default_value_t = 1.0)]
    effect: f64,
    /// Near-repeat boost on the logit while the cell saw a recent event.
    #[arg(long, default_value_t = 1.5)]
    boost: f64,
    /// Same, for Moore neighbors of a recent event.
    #[arg(long, default_value_t = 0.75)]
    neighbor_boost: f64,
    /// Trailing window (days) of the near-repeat boost.
    #[arg(long, default_value_t = 7)]
    decay: usize,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Also render the surveillance curve as SVG.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct RankArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Day to rank (ISO-8601), within the study period.
    #[arg(long)]
    day: String,
    /// Coverage budget as a fraction of the eligible cells.
    #[arg(long, default_value_t = 0.05)]
    coverage: f64,
    /// Hotspot CSV output path.
    #[arg(long, short = 'o')]
    out_file: PathBuf,
    /// Also write the hotspots as GeoJSON points.
    #[arg(long)]
    geojson: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Directory of the first evaluated run.
    #[arg(long)]
    a: PathBuf,
    /// Directory of the second evaluated run.
    #[arg(long)]
    b: PathBuf,
    /// Comparison table output path.
    #[arg(long, short = 'o')]
    out_file: PathBuf,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Ingest(args) => {
            let config = args.load()?;
            let s = runner::ingest_summary(&config)?;
            println!("grid: {} x {} cells, {} eligible", s.width_cells, s.height_cells, s.eligible_cells);
            println!("buckets: {}", s.buckets);
            println!("rows: {}", s.rows);
            println!(
                "positives: {} ({:.4}%)",
                s.positives,
                100.0 * s.ratio
            );
            println!("rejected events: {}", s.rejected_events);
            Ok(())
        }
        Command::Synth(args) => {
            let config = synth::SynthConfig {
                width: args.width,
                height: args.height,
                days: args.days,
                start_day: parse_date("synth", &args.start)?,
                target_rate: args.rate,
                n_static: args.static_features,
                static_effect: args.effect,
                boost: args.boost,
                neighbor_boost: args.neighbor_boost,
                decay_days: args.decay,
                seed: args.seed,
                ..synth::SynthConfig::default()
            };
            let data = synth::generate(&config)
                .map_err(|e| CliError::from_core("synth", e))?;
            synthio::write_synth_dataset(&args.out, &config, &data)?;
            println!(
                "wrote {} events over {} cells x {} days to {}",
                data.events.len(),
                config.n_cells(),
                config.days,
                args.out.display()
            );
            Ok(())
        }
        Command::Train(args) => {
            let config = args.load()?;
            let report = runner::train_stage(&config)?;
            println!(
                "trained strategy={} learner={} (grid of {}, chosen below)",
                report.strategy, report.base_learner, report.grid_size
            );
            println!("model: {}", runner::model_path(&config.experiment.out_dir).display());
            Ok(())
        }
        Command::Evaluate(args) => {
            let config = args.config.load()?;
            let report = runner::evaluate_stage(&config, args.svg)?;
            print_report(&report);
            Ok(())
        }
        Command::Run(args) => {
            let config = args.config.load()?;
            let report = runner::run_experiment(&config, args.svg)?;
            print_report(&report);
            Ok(())
        }
        Command::Rank(args) => {
            let config = args.config.load()?;
            let day = parse_date("rank", &args.day)?;
            let (prepared, ranked) = runner::rank_day(&config, day, args.coverage)?;
            csvio::write_hotspots(&args.out_file, &prepared.grid, &ranked.cells, &ranked.scores)?;
            if let Some(path) = &args.geojson {
                geojson::write_hotspots_geojson(path, &prepared.grid, &ranked.cells, &ranked.scores)?;
            }
            println!(
                "day {} (bucket {}): {} hotspot cells -> {}",
                args.day,
                ranked.bucket,
                ranked.cells.len(),
                args.out_file.display()
            );
            Ok(())
        }
        Command::Compare(args) => {
            let levels = compare::compare_runs(&args.a, &args.b)?;
            compare::write_comparison(&args.out_file, &levels)?;
            for level in &levels {
                println!(
                    "coverage {:.2}: mean A {:.4} vs B {:.4}, t = {:.3}, p = {}",
                    level.coverage,
                    level.mean_a,
                    level.mean_b,
                    level.test.t,
                    fmt_f64(level.test.p)
                );
            }
            Ok(())
        }
    }
}

fn print_report(report: &hotgrid_core::metrics::MetricReport) {
    for level in &report.levels {
        println!(
            "coverage {:>5.2}%: hit rate {:>6.2}%  PAI {:.3}",
            100.0 * level.coverage,
            100.0 * level.mean_hit_rate,
            level.pai
        );
    }
    println!("AUC {:.3} over {} evaluated days", report.auc, report.days_evaluated);
}
