//! CSV readers and writers for every file format of the pipeline.
//!
//! All files carry a header row, UTF-8 text, and `.` as the decimal
//! separator. Floats are written with 17 significant digits so outputs
//! are byte-stable and parse back to the identical bits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use hotgrid_core::features::{StaticAttrs, WeatherDay, WeatherTable};
use hotgrid_core::grid::{CellId, EpochDay, EventRecord, GridSpec};
use hotgrid_core::metrics::{MetricReport, SurveillanceCurve};

use crate::dates::{format_date, parse_date};
use crate::error::{CliError, CliResult};

/// 17 significant digits; round-trips every finite f64 exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn open_reader(stage: &str, path: &Path) -> CliResult<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io(stage, path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn parse_f64(stage: &str, field: &str, what: &str) -> CliResult<f64> {
    if field.is_empty() {
        return Ok(f64::NAN);
    }
    field
        .parse::<f64>()
        .map_err(|e| CliError::data(stage, format!("bad {what} value {field:?}: {e}")))
}

fn parse_bool(stage: &str, field: &str, what: &str) -> CliResult<bool> {
    match field {
        "" | "0" | "false" => Ok(false),
        "1" | "true" => Ok(true),
        other => Err(CliError::data(
            stage,
            format!("bad {what} value {other:?} (use 0/1/true/false)"),
        )),
    }
}

/// Events CSV: `x,y,date`.
pub fn read_events(path: &Path) -> CliResult<Vec<EventRecord>> {
    const STAGE: &str = "ingest";
    let mut reader = open_reader(STAGE, path)?;
    let mut events = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::io(STAGE, path, e.into()))?;
        if record.len() < 3 {
            return Err(CliError::data(STAGE, "events row needs x,y,date"));
        }
        let x = parse_f64(STAGE, &record[0], "x")?;
        let y = parse_f64(STAGE, &record[1], "y")?;
        if !x.is_finite() || !y.is_finite() {
            return Err(CliError::data(STAGE, "event coordinates must be finite"));
        }
        events.push(EventRecord {
            x,
            y,
            day: parse_date(STAGE, &record[2])?,
        });
    }
    Ok(events)
}

pub fn write_events(path: &Path, events: &[EventRecord]) -> CliResult<()> {
    let mut w = writer(path)?;
    line(&mut w, path, "x,y,date")?;
    for e in events {
        line(
            &mut w,
            path,
            &format!("{},{},{}", fmt_f64(e.x), fmt_f64(e.y), format_date(e.day)),
        )?;
    }
    finish(w, path)
}

/// Cell attributes CSV: `cell_id,<static feature columns...>`.
pub fn read_static_attrs(path: &Path) -> CliResult<StaticAttrs> {
    const STAGE: &str = "ingest";
    let mut reader = open_reader(STAGE, path)?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::io(STAGE, path, e.into()))?
        .clone();
    if headers.is_empty() || &headers[0] != "cell_id" {
        return Err(CliError::data(
            STAGE,
            "static attributes must start with a cell_id column",
        ));
    }
    let names: Vec<String> = headers.iter().skip(1).map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::io(STAGE, path, e.into()))?;
        let cell: u32 = record[0]
            .parse()
            .map_err(|e| CliError::data(STAGE, format!("bad cell_id {:?}: {e}", &record[0])))?;
        let mut values = Vec::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            let v = parse_f64(STAGE, &record[i + 1], name)?;
            if !v.is_finite() {
                return Err(CliError::data(
                    STAGE,
                    format!("missing or non-finite {name} for cell {cell}"),
                ));
            }
            values.push(v);
        }
        rows.push((CellId(cell), values));
    }
    StaticAttrs::new(names, rows).map_err(|e| CliError::from_core(STAGE, e))
}

pub fn write_static_attrs(path: &Path, attrs: &StaticAttrs) -> CliResult<()> {
    let mut w = writer(path)?;
    line(&mut w, path, &format!("cell_id,{}", attrs.names().join(",")))?;
    for &cell in attrs.cells() {
        let row = attrs.row(cell).expect("own cell");
        let values: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        line(&mut w, path, &format!("{},{}", cell.0, values.join(",")))?;
    }
    finish(w, path)
}

/// Eligibility CSV: `cell_id,eligible` with eligible in {0, 1}. Unlisted
/// cells stay eligible.
pub fn read_eligibility(path: &Path) -> CliResult<Vec<(CellId, bool)>> {
    const STAGE: &str = "ingest";
    let mut reader = open_reader(STAGE, path)?;
    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::io(STAGE, path, e.into()))?;
        let cell: u32 = record[0]
            .parse()
            .map_err(|e| CliError::data(STAGE, format!("bad cell_id {:?}: {e}", &record[0])))?;
        entries.push((CellId(cell), parse_bool(STAGE, &record[1], "eligible")?));
    }
    Ok(entries)
}

pub fn write_eligibility(path: &Path, grid: &GridSpec) -> CliResult<()> {
    let mut w = writer(path)?;
    line(&mut w, path, "cell_id,eligible")?;
    for id in 0..grid.n_cells() as u32 {
        let flag = u8::from(grid.is_eligible(CellId(id)));
        line(&mut w, path, &format!("{id},{flag}"))?;
    }
    finish(w, path)
}

/// Weather CSV: `date,temp,humidity,daylight,moon,holiday` plus optional
/// wide per-cell `events_<cell_id>` columns. Empty scalar fields become
/// missing values for imputation.
pub fn read_weather(path: &Path) -> CliResult<WeatherTable> {
    const STAGE: &str = "ingest";
    let mut reader = open_reader(STAGE, path)?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::io(STAGE, path, e.into()))?
        .clone();
    let idx = |name: &str| headers.iter().position(|h| h == name);
    let (Some(i_date), Some(i_temp), Some(i_hum), Some(i_day), Some(i_moon), Some(i_hol)) = (
        idx("date"),
        idx("temp"),
        idx("humidity"),
        idx("daylight"),
        idx("moon"),
        idx("holiday"),
    ) else {
        return Err(CliError::data(
            STAGE,
            "weather needs date,temp,humidity,daylight,moon,holiday columns",
        ));
    };
    let event_cols: Vec<(usize, CellId)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| {
            h.strip_prefix("events_")
                .and_then(|id| id.parse::<u32>().ok())
                .map(|id| (i, CellId(id)))
        })
        .collect();

    let mut days: Vec<(EpochDay, WeatherDay)> = Vec::new();
    let mut events: Vec<(EpochDay, CellId, u32)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::io(STAGE, path, e.into()))?;
        let date = parse_date(STAGE, &record[i_date])?;
        days.push((
            date,
            WeatherDay {
                temp: parse_f64(STAGE, &record[i_temp], "temp")?,
                humidity: parse_f64(STAGE, &record[i_hum], "humidity")?,
                daylight: parse_f64(STAGE, &record[i_day], "daylight")?,
                moon: parse_f64(STAGE, &record[i_moon], "moon")?,
                holiday: parse_bool(STAGE, &record[i_hol], "holiday")?,
            },
        ));
        for &(col, cell) in &event_cols {
            let v = parse_f64(STAGE, &record[col], "events")?;
            if v.is_finite() && v > 0.0 {
                events.push((date, cell, v as u32));
            }
        }
    }
    if days.is_empty() {
        return Err(CliError::data(STAGE, "weather file has no rows"));
    }
    days.sort_by_key(|(d, _)| *d);
    let first = days[0].0;
    let last = days.last().unwrap().0;
    let mut rows = vec![WeatherDay::missing(); (last.0 - first.0 + 1) as usize];
    for (date, day) in days {
        rows[(date.0 - first.0) as usize] = day;
    }
    let mut table = WeatherTable::new(first, rows);
    for (date, cell, count) in events {
        table.add_public_events(date, cell, count);
    }
    Ok(table)
}

/// Long-form public events CSV: `date,cell_id,event_count`.
pub fn read_public_events(path: &Path, table: &mut WeatherTable) -> CliResult<()> {
    const STAGE: &str = "ingest";
    let mut reader = open_reader(STAGE, path)?;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::io(STAGE, path, e.into()))?;
        let date = parse_date(STAGE, &record[0])?;
        let cell: u32 = record[1]
            .parse()
            .map_err(|e| CliError::data(STAGE, format!("bad cell_id {:?}: {e}", &record[1])))?;
        let count: u32 = record[2]
            .parse()
            .map_err(|e| CliError::data(STAGE, format!("bad event_count {:?}: {e}", &record[2])))?;
        table.add_public_events(date, CellId(cell), count);
    }
    Ok(())
}

pub fn write_weather(path: &Path, table: &WeatherTable) -> CliResult<()> {
    let mut w = writer(path)?;
    line(&mut w, path, "date,temp,humidity,daylight,moon,holiday")?;
    for off in 0..table.num_days() as i64 {
        let date = EpochDay(table.first_day().0 + off);
        let d = table.day(date).expect("in range");
        line(
            &mut w,
            path,
            &format!(
                "{},{},{},{},{},{}",
                format_date(date),
                fmt_f64(d.temp),
                fmt_f64(d.humidity),
                fmt_f64(d.daylight),
                fmt_f64(d.moon),
                u8::from(d.holiday)
            ),
        )?;
    }
    finish(w, path)
}

pub fn write_public_events(path: &Path, table: &WeatherTable) -> CliResult<()> {
    let mut w = writer(path)?;
    line(&mut w, path, "date,cell_id,event_count")?;
    for (date, cell, count) in table.public_event_entries() {
        line(
            &mut w,
            path,
            &format!("{},{},{count}", format_date(date), cell.0),
        )?;
    }
    finish(w, path)
}

/// Ground-truth risk CSV: `cell_id,day,risk`.
pub fn write_truth(
    path: &Path,
    start: EpochDay,
    n_cells: usize,
    truth: &[f64],
) -> CliResult<()> {
    let mut w = writer(path)?;
    line(&mut w, path, "cell_id,day,risk")?;
    for (i, &risk) in truth.iter().enumerate() {
        let day = EpochDay(start.0 + (i / n_cells) as i64);
        let cell = i % n_cells;
        line(
            &mut w,
            path,
            &format!("{},{},{}", cell, format_date(day), fmt_f64(risk)),
        )?;
    }
    finish(w, path)
}

/// Metrics CSV: one row per coverage level.
pub fn write_metrics(
    path: &Path,
    strategy: &str,
    base_learner: &str,
    feature_set: &str,
    report: &MetricReport,
) -> CliResult<()> {
    let mut w = writer(path)?;
    line(
        &mut w,
        path,
        "strategy,base_learner,feature_set,coverage,hit_rate,pai,auc",
    )?;
    for level in &report.levels {
        line(
            &mut w,
            path,
            &format!(
                "{strategy},{base_learner},{feature_set},{},{},{},{}",
                fmt_f64(level.coverage),
                fmt_f64(level.mean_hit_rate),
                fmt_f64(level.pai),
                fmt_f64(report.auc)
            ),
        )?;
    }
    finish(w, path)
}

/// Surveillance CSV: `coverage,hit_rate`.
pub fn write_surveillance(path: &Path, curve: &SurveillanceCurve) -> CliResult<()> {
    let mut w = writer(path)?;
    line(&mut w, path, "coverage,hit_rate")?;
    for &(x, y) in &curve.points {
        line(&mut w, path, &format!("{},{}", fmt_f64(x), fmt_f64(y)))?;
    }
    finish(w, path)
}

/// Per-day hit rates for paired comparisons: `day_index,date,coverage,hit_rate`.
/// Days without events are skipped.
pub fn write_daily_hits(
    path: &Path,
    days: &[(usize, EpochDay)],
    report: &MetricReport,
) -> CliResult<()> {
    let mut w = writer(path)?;
    line(&mut w, path, "day_index,date,coverage,hit_rate")?;
    for level in &report.levels {
        for (pos, rate) in level.daily.iter().enumerate() {
            if let Some(rate) = rate {
                let (bucket, date) = days[pos];
                line(
                    &mut w,
                    path,
                    &format!(
                        "{bucket},{},{},{}",
                        format_date(date),
                        fmt_f64(level.coverage),
                        fmt_f64(*rate)
                    ),
                )?;
            }
        }
    }
    finish(w, path)
}

/// One day's ranked hotspots: `rank,cell_id,x,y,score`.
pub fn write_hotspots(
    path: &Path,
    grid: &GridSpec,
    cells: &[CellId],
    scores: &[f64],
) -> CliResult<()> {
    let mut w = writer(path)?;
    line(&mut w, path, "rank,cell_id,x,y,score")?;
    for (rank, (&cell, &score)) in cells.iter().zip(scores).enumerate() {
        let (x, y) = grid.centroid(cell);
        line(
            &mut w,
            path,
            &format!(
                "{},{},{},{},{}",
                rank + 1,
                cell.0,
                fmt_f64(x),
                fmt_f64(y),
                fmt_f64(score)
            ),
        )?;
    }
    finish(w, path)
}

pub struct DailyHitRow {
    pub day_index: usize,
    pub coverage: f64,
    pub hit_rate: f64,
}

pub fn read_daily_hits(path: &Path) -> CliResult<Vec<DailyHitRow>> {
    const STAGE: &str = "compare";
    let mut reader = open_reader(STAGE, path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::io(STAGE, path, e.into()))?;
        rows.push(DailyHitRow {
            day_index: record[0]
                .parse()
                .map_err(|e| CliError::data(STAGE, format!("bad day_index: {e}")))?,
            coverage: parse_f64(STAGE, &record[2], "coverage")?,
            hit_rate: parse_f64(STAGE, &record[3], "hit_rate")?,
        });
    }
    Ok(rows)
}

fn writer(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io("write", parent, e))?;
    }
    Ok(BufWriter::new(
        File::create(path).map_err(|e| CliError::io("write", path, e))?,
    ))
}

fn line(w: &mut BufWriter<File>, path: &Path, s: &str) -> CliResult<()> {
    writeln!(w, "{s}").map_err(|e| CliError::io("write", path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io("write", path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips_exactly() {
        for v in [0.1, 2.0 / 3.0, 1e-300, 123456.789, 5.633e-4] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn events_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.csv");
        let events = vec![
            EventRecord { x: 12.5, y: 700.25, day: EpochDay(18267) },
            EventRecord { x: 0.0, y: 1.0 / 3.0, day: EpochDay(0) },
        ];
        write_events(&path, &events).unwrap();
        let back = read_events(&path).unwrap();
        assert_eq!(back, events);
    }

    #[test]
    fn weather_missing_fields_become_nan() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("weather.csv");
        std::fs::write(
            &path,
            "date,temp,humidity,daylight,moon,holiday\n\
             2020-01-06,10.0,0.5,12.0,0.5,0\n\
             2020-01-07,,0.6,12.0,0.5,1\n",
        )
        .unwrap();
        let table = read_weather(&path).unwrap();
        assert_eq!(table.num_days(), 2);
        assert!(table.day(EpochDay(18268)).unwrap().temp.is_nan());
        assert!(table.day(EpochDay(18268)).unwrap().holiday);
    }

    #[test]
    fn weather_wide_event_columns_are_collected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("weather.csv");
        std::fs::write(
            &path,
            "date,temp,humidity,daylight,moon,holiday,events_3,events_7\n\
             2020-01-06,10.0,0.5,12.0,0.5,0,2,0\n",
        )
        .unwrap();
        let table = read_weather(&path).unwrap();
        assert_eq!(table.public_events(EpochDay(18267), CellId(3)), 2);
        assert_eq!(table.public_events(EpochDay(18267), CellId(7)), 0);
    }

    #[test]
    fn static_attrs_reject_missing_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("static.csv");
        std::fs::write(&path, "cell_id,popdens\n0,5.5\n1,\n").unwrap();
        assert!(read_static_attrs(&path).is_err());
    }
}
