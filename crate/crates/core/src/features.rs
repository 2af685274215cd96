//! Feature engineering: crime-history, locational, and temporal groups.
//!
//! Crime-history columns count recent events in a cell and its Moore
//! neighborhood over trailing windows that exclude the current bucket, so
//! a row's features never see its own or any later bucket. Locational
//! columns are static per-cell attributes. Temporal columns combine
//! calendar and weather information shared by all cells of a bucket, plus
//! a per-cell public-event count.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{SpatioTemporalFrame, TimeResolution};
use crate::grid::{CellId, EpochDay};
use crate::matrix::Matrix;

/// Trailing event-count windows, in buckets; the classic configuration.
pub const DEFAULT_PRIOR_WINDOWS: [usize; 4] = [1, 3, 7, 14];

/// Number of temporal columns: 7 one-hot day-of-week plus 7 scalars
/// (holiday, temperature, humidity, discomfort, daylight, moon, events).
pub const TEMPORAL_WIDTH: usize = 14;

/// Which feature group(s) a frame is assembled with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSet {
    Crime,
    Spatial,
    Temporal,
    All,
}

impl FeatureSet {
    pub fn includes_crime(self) -> bool {
        matches!(self, FeatureSet::Crime | FeatureSet::All)
    }

    pub fn includes_spatial(self) -> bool {
        matches!(self, FeatureSet::Spatial | FeatureSet::All)
    }

    pub fn includes_temporal(self) -> bool {
        matches!(self, FeatureSet::Temporal | FeatureSet::All)
    }
}

/// Calendar and weather attributes of one day.
///
/// Scalar fields may be NaN on construction; [`WeatherTable::imputed`]
/// fills gaps before assembly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherDay {
    /// Temperature at noon, degrees Celsius.
    pub temp: f64,
    /// Relative humidity as a fraction in [0, 1].
    pub humidity: f64,
    /// Hours of daylight, in [0, 24].
    pub daylight: f64,
    /// Moon phase fraction in [0, 1], 1 = full moon.
    pub moon: f64,
    /// Public holiday flag.
    pub holiday: bool,
}

impl WeatherDay {
    pub fn missing() -> Self {
        WeatherDay {
            temp: f64::NAN,
            humidity: f64::NAN,
            daylight: f64::NAN,
            moon: f64::NAN,
            holiday: false,
        }
    }
}

/// Per-day weather plus sparse per-(day, cell) public-event counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherTable {
    first_day: EpochDay,
    days: Vec<WeatherDay>,
    events: BTreeMap<(i64, CellId), u32>,
}

impl WeatherTable {
    pub fn new(first_day: EpochDay, days: Vec<WeatherDay>) -> Self {
        WeatherTable {
            first_day,
            days,
            events: BTreeMap::new(),
        }
    }

    pub fn first_day(&self) -> EpochDay {
        self.first_day
    }

    pub fn num_days(&self) -> usize {
        self.days.len()
    }

    pub fn day(&self, day: EpochDay) -> Option<&WeatherDay> {
        let off = day.0 - self.first_day.0;
        if off < 0 {
            return None;
        }
        self.days.get(off as usize)
    }

    pub fn add_public_events(&mut self, day: EpochDay, cell: CellId, count: u32) {
        *self.events.entry((day.0, cell)).or_insert(0) += count;
    }

    pub fn public_events(&self, day: EpochDay, cell: CellId) -> u32 {
        self.events.get(&(day.0, cell)).copied().unwrap_or(0)
    }

    pub fn public_event_entries(&self) -> impl Iterator<Item = (EpochDay, CellId, u32)> + '_ {
        self.events
            .iter()
            .map(|(&(d, c), &n)| (EpochDay(d), c, n))
    }

    /// Extends the table to cover `[first, first + num_days)`, inserting
    /// all-missing rows for absent days.
    pub fn covering(mut self, first: EpochDay, num_days: usize) -> Self {
        let mut days = Vec::with_capacity(num_days);
        for off in 0..num_days as i64 {
            let d = EpochDay(first.0 + off);
            days.push(self.day(d).copied().unwrap_or_else(WeatherDay::missing));
        }
        self.first_day = first;
        self.days = days;
        self
    }

    /// Fills missing scalar values by previous-day carry-forward, then by
    /// the column mean, and validates ranges.
    ///
    /// Errors if a column has no observed value at all or a value is out
    /// of range (humidity and moon in [0, 1], daylight in [0, 24]).
    pub fn imputed(mut self) -> Result<Self> {
        if self.days.is_empty() {
            return Err(Error::EmptyInput("weather table"));
        }
        for col in 0..4 {
            let get = |d: &WeatherDay| match col {
                0 => d.temp,
                1 => d.humidity,
                2 => d.daylight,
                _ => d.moon,
            };
            let set = |d: &mut WeatherDay, v: f64| match col {
                0 => d.temp = v,
                1 => d.humidity = v,
                2 => d.daylight = v,
                _ => d.moon = v,
            };
            let mut sum = 0.0;
            let mut count = 0usize;
            for d in &self.days {
                let v = get(d);
                if v.is_finite() {
                    sum += v;
                    count += 1;
                }
            }
            if count == 0 {
                return Err(Error::NonFinite("weather column with no observed values"));
            }
            let mean = sum / count as f64;
            let mut last = f64::NAN;
            for d in self.days.iter_mut() {
                let v = get(d);
                if v.is_finite() {
                    last = v;
                } else if last.is_finite() {
                    set(d, last);
                } else {
                    set(d, mean);
                }
            }
        }
        for (i, d) in self.days.iter().enumerate() {
            let ok = (0.0..=1.0).contains(&d.humidity)
                && (0.0..=1.0).contains(&d.moon)
                && (0.0..=24.0).contains(&d.daylight)
                && d.temp.is_finite();
            if !ok {
                return Err(Error::Invalid {
                    what: "weather day",
                    detail: format!("day offset {i} has out-of-range values: {d:?}"),
                });
            }
        }
        Ok(self)
    }
}

/// Static per-cell attribute table, aligned to a frame's eligible cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticAttrs {
    names: Vec<String>,
    cells: Vec<CellId>,
    values: Matrix,
}

impl StaticAttrs {
    /// Builds the table from per-cell rows keyed by cell id.
    pub fn new(names: Vec<String>, rows: Vec<(CellId, Vec<f64>)>) -> Result<Self> {
        let mut rows = rows;
        rows.sort_by_key(|(c, _)| *c);
        let mut values = Matrix::zeros(0, names.len());
        let mut cells = Vec::with_capacity(rows.len());
        for (cell, row) in rows {
            if cells.last() == Some(&cell) {
                return Err(Error::Invalid {
                    what: "static attributes",
                    detail: format!("duplicate cell id {}", cell.0),
                });
            }
            values.push_row(&row)?;
            cells.push(cell);
        }
        Ok(StaticAttrs {
            names,
            cells,
            values,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn cells(&self) -> &[CellId] {
        &self.cells
    }

    pub fn row(&self, cell: CellId) -> Option<&[f64]> {
        self.cells
            .binary_search(&cell)
            .ok()
            .map(|i| self.values.row(i))
    }

    pub fn value(&self, cell: CellId, column: &str) -> Option<f64> {
        let j = self.names.iter().position(|n| n == column)?;
        self.row(cell).map(|r| r[j])
    }

    /// Restricts the table to the named columns, in the given order.
    pub fn select(&self, columns: &[String]) -> Result<StaticAttrs> {
        let mut indices = Vec::with_capacity(columns.len());
        for name in columns {
            let idx = self
                .names
                .iter()
                .position(|n| n == name)
                .ok_or(Error::Invalid {
                    what: "feature schema",
                    detail: alloc::format!("unknown static column {name:?}"),
                })?;
            indices.push(idx);
        }
        let mut values = Matrix::zeros(0, indices.len());
        let mut row = alloc::vec![0.0; indices.len()];
        for i in 0..self.cells.len() {
            let src = self.values.row(i);
            for (o, &idx) in row.iter_mut().zip(&indices) {
                *o = src[idx];
            }
            values.push_row(&row)?;
        }
        Ok(StaticAttrs {
            names: columns.to_vec(),
            cells: self.cells.clone(),
            values,
        })
    }

    /// Errors with the full list of eligible cells absent from the table.
    pub fn check_covers(&self, cells: &[CellId]) -> Result<()> {
        let missing: Vec<CellId> = cells
            .iter()
            .copied()
            .filter(|c| self.cells.binary_search(c).is_err())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::MissingCells(missing))
        }
    }
}

/// Normalized Shannon diversity of a distribution over `proportions.len()`
/// categories.
///
/// Returns `H(p) / log(k)` in [0, 1] with `0 * log 0 = 0`; a single
/// category is perfectly homogeneous, so `k = 1` yields 0. The slice must
/// include every possible category, zeros included, and sum to 1 within
/// 1e-9.
pub fn shannon_diversity(proportions: &[f64]) -> Result<f64> {
    let k = proportions.len();
    if k == 0 {
        return Err(Error::EmptyInput("proportions"));
    }
    let mut sum = 0.0;
    for &p in proportions {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::Invalid {
                what: "proportion",
                detail: format!("must be finite and nonnegative, got {p}"),
            });
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid {
            what: "proportions",
            detail: format!("must sum to 1, got {sum}"),
        });
    }
    if k == 1 {
        return Ok(0.0);
    }
    let mut entropy = 0.0;
    for &p in proportions {
        if p > 0.0 {
            entropy -= p * libm::log(p);
        }
    }
    Ok((entropy / libm::log(k as f64)).clamp(0.0, 1.0))
}

/// Thom's discomfort index from temperature (degrees Celsius) and relative
/// humidity (fraction): `DI = T - 0.55 (1 - H) (T - 14.5)`.
pub fn discomfort_index(temp: f64, humidity: f64) -> f64 {
    temp - 0.55 * (1.0 - humidity) * (temp - 14.5)
}

/// Temporal column names, in assembly order.
pub fn temporal_names() -> Vec<String> {
    let mut names: Vec<String> = (0..7).map(|d| format!("dow{d}")).collect();
    for n in [
        "holiday", "temp", "hum", "discomf", "daylight", "moon", "event",
    ] {
        names.push(n.to_string());
    }
    names
}

/// Writes the 14 temporal columns for one (cell, bucket) row.
///
/// `weekday` uses Monday = 0; `out` must have length [`TEMPORAL_WIDTH`].
pub fn temporal_features(
    weekday: usize,
    weather: &WeatherDay,
    public_events: f64,
    out: &mut [f64],
) -> Result<()> {
    if out.len() != TEMPORAL_WIDTH {
        return Err(Error::ArityMismatch {
            expected: TEMPORAL_WIDTH,
            got: out.len(),
        });
    }
    if weekday > 6 {
        return Err(Error::Invalid {
            what: "weekday",
            detail: format!("must be 0..=6 (Monday = 0), got {weekday}"),
        });
    }
    out[..7].fill(0.0);
    out[weekday] = 1.0;
    out[7] = if weather.holiday { 1.0 } else { 0.0 };
    out[8] = weather.temp;
    out[9] = weather.humidity;
    out[10] = discomfort_index(weather.temp, weather.humidity);
    out[11] = weather.daylight;
    out[12] = weather.moon;
    out[13] = public_events;
    Ok(())
}

/// Event counts in the cell's Moore neighborhood (cell included) over the
/// trailing windows `[bucket - w, bucket - 1]`, truncated at the frame
/// start. The current bucket is always excluded.
pub fn prior_crime_counts(
    frame: &SpatioTemporalFrame,
    cell: CellId,
    bucket: usize,
    windows: &[usize],
) -> Result<Vec<u32>> {
    if windows.iter().any(|&w| w == 0) {
        return Err(Error::Invalid {
            what: "windows",
            detail: "window lengths must be strictly positive".into(),
        });
    }
    let cells = frame.cells();
    let pos = cells
        .binary_search(&cell)
        .map_err(|_| Error::UnknownCell(cell))?;
    let _ = frame.row_index(cell, bucket)?;

    let mut hood: Vec<usize> = vec![pos];
    for n in frame.grid().moore_neighbors(cell) {
        if let Ok(p) = cells.binary_search(&n) {
            hood.push(p);
        }
    }

    let n = frame.n_cells();
    let local = bucket - frame.first_bucket();
    let mut out = Vec::with_capacity(windows.len());
    for &w in windows {
        let lo = local.saturating_sub(w);
        let mut count = 0u32;
        for b in lo..local {
            for &p in &hood {
                count += frame.event_count(b * n + p);
            }
        }
        out.push(count);
    }
    Ok(out)
}

/// Crime column names for a window list at a resolution.
pub fn crime_names(windows: &[usize], resolution: TimeResolution) -> Vec<String> {
    let unit = match resolution {
        TimeResolution::Daily => "d",
        TimeResolution::Weekly => "w",
    };
    windows.iter().map(|w| format!("prior{w}{unit}")).collect()
}

/// Assembles the selected feature group(s) onto a frame.
///
/// Crime columns are computed from strictly earlier buckets of the frame's
/// own event counts. The weather table must cover every day of the frame's
/// period (use [`WeatherTable::covering`] and [`WeatherTable::imputed`]
/// first); the static table must cover every eligible cell.
pub fn assemble(
    frame: &SpatioTemporalFrame,
    statics: &StaticAttrs,
    weather: &WeatherTable,
    set: FeatureSet,
    windows: &[usize],
) -> Result<SpatioTemporalFrame> {
    let cells = frame.cells();
    let n_cells = cells.len();
    let period = frame.period();
    let resolution = frame.resolution();

    let mut names: Vec<String> = Vec::new();
    if set.includes_crime() {
        if windows.is_empty() {
            return Err(Error::EmptyInput("prior windows"));
        }
        names.extend(crime_names(windows, resolution));
    }
    if set.includes_spatial() {
        statics.check_covers(cells)?;
        names.extend(statics.names().iter().cloned());
    }
    if set.includes_temporal() {
        for bucket in 0..frame.num_buckets() {
            for day in period.bucket_days(frame.first_bucket() + bucket, resolution) {
                if weather.day(day).is_none() {
                    return Err(Error::Invalid {
                        what: "weather table",
                        detail: format!("missing day {}", day.0),
                    });
                }
            }
        }
        names.extend(temporal_names());
    }

    let n_cols = names.len();
    let mut out = Matrix::zeros(frame.n_rows(), n_cols);

    // Neighborhood positions (self first) per eligible cell.
    let hoods: Vec<Vec<usize>> = cells
        .iter()
        .map(|&c| {
            let mut h = vec![cells.binary_search(&c).unwrap()];
            for nb in frame.grid().moore_neighbors(c) {
                if let Ok(p) = cells.binary_search(&nb) {
                    h.push(p);
                }
            }
            h
        })
        .collect();

    // Neighborhood counts per (bucket, cell), then prefix sums over buckets
    // so a window sum is two lookups.
    let mut col = 0usize;
    if set.includes_crime() {
        let buckets = frame.num_buckets();
        let mut prefix = vec![0u64; (buckets + 1) * n_cells];
        for b in 0..buckets {
            for (pos, hood) in hoods.iter().enumerate() {
                let mut c = 0u64;
                for &p in hood {
                    c += frame.event_count(b * n_cells + p) as u64;
                }
                prefix[(b + 1) * n_cells + pos] = prefix[b * n_cells + pos] + c;
            }
        }
        for b in 0..buckets {
            for pos in 0..n_cells {
                let row = out.row_mut(b * n_cells + pos);
                for (wi, &w) in windows.iter().enumerate() {
                    let lo = b.saturating_sub(w);
                    let sum = prefix[b * n_cells + pos] - prefix[lo * n_cells + pos];
                    row[col + wi] = sum as f64;
                }
            }
        }
        col += windows.len();
    }

    if set.includes_spatial() {
        let width = statics.names().len();
        for pos in 0..n_cells {
            let src = statics.row(cells[pos]).expect("coverage checked");
            for b in 0..frame.num_buckets() {
                out.row_mut(b * n_cells + pos)[col..col + width].copy_from_slice(src);
            }
        }
        col += width;
    }

    if set.includes_temporal() {
        let mut frag = [0.0; TEMPORAL_WIDTH];
        for b in 0..frame.num_buckets() {
            let global = frame.first_bucket() + b;
            let first = period.bucket_first_day(global, resolution);
            // Weekly buckets aggregate the week: scalar means, holiday OR,
            // event counts summed.
            let mut agg = WeatherDay {
                temp: 0.0,
                humidity: 0.0,
                daylight: 0.0,
                moon: 0.0,
                holiday: false,
            };
            let mut days = 0.0;
            for day in period.bucket_days(global, resolution) {
                let w = weather.day(day).expect("coverage checked");
                agg.temp += w.temp;
                agg.humidity += w.humidity;
                agg.daylight += w.daylight;
                agg.moon += w.moon;
                agg.holiday |= w.holiday;
                days += 1.0;
            }
            agg.temp /= days;
            agg.humidity /= days;
            agg.daylight /= days;
            agg.moon /= days;

            for pos in 0..n_cells {
                let mut public = 0u32;
                for day in period.bucket_days(global, resolution) {
                    public += weather.public_events(day, cells[pos]);
                }
                temporal_features(first.weekday(), &agg, public as f64, &mut frag)?;
                out.row_mut(b * n_cells + pos)[col..col + TEMPORAL_WIDTH]
                    .copy_from_slice(&frag);
            }
        }
    }

    if !out.all_finite() {
        return Err(Error::NonFinite("assembled feature matrix"));
    }
    frame.with_features(names, out)
}
