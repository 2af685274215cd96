//! Writes a generated synthetic dataset as the CSV files the pipeline
//! ingests, plus a ready-to-run experiment config.

use std::path::Path;

use hotgrid_core::synth::{SynthConfig, SynthData};

use crate::csvio;
use crate::dates::format_date;
use crate::error::{CliError, CliResult};

/// Writes events/static/weather/eligibility/truth CSVs and an
/// `experiment.toml` wired to them with explicit grid bounds and period.
pub fn write_synth_dataset(out_dir: &Path, config: &SynthConfig, data: &SynthData) -> CliResult<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io("synth", out_dir, e))?;
    csvio::write_events(&out_dir.join("events.csv"), &data.events)?;
    csvio::write_static_attrs(&out_dir.join("static.csv"), &data.static_attrs)?;
    csvio::write_weather(&out_dir.join("weather.csv"), &data.weather)?;
    csvio::write_public_events(&out_dir.join("public_events.csv"), &data.weather)?;
    csvio::write_eligibility(&out_dir.join("eligibility.csv"), &data.grid)?;
    csvio::write_truth(
        &out_dir.join("truth.csv"),
        data.period.first_day,
        data.grid.n_cells(),
        &data.truth,
    )?;

    let max_x = config.width as f64 * config.cell_size;
    let max_y = config.height as f64 * config.cell_size;
    let template = format!(
        r#"[data]
events = "events.csv"
static_attrs = "static.csv"
weather = "weather.csv"
public_events = "public_events.csv"
eligibility = "eligibility.csv"

[grid]
cell_size = {cell_size}
min_x = 0.0
min_y = 0.0
max_x = {max_x}
max_y = {max_y}

[period]
start = "{start}"
end = "{end}"
resolution = "daily"

[experiment]
strategy = "hyper"
phi = 10
feature_set = "all"
seed = {seed}
out_dir = "runs/hyper"

[learner]
kind = "random-forest"
trees = 50
depth = 8
"#,
        cell_size = config.cell_size,
        start = format_date(data.period.first_day),
        end = format_date(data.period.last_day),
        seed = config.seed,
    );
    let path = out_dir.join("experiment.toml");
    std::fs::write(&path, template).map_err(|e| CliError::io("synth", &path, e))
}
