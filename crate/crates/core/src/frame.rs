//! The (cell, time-bucket) observation frame and leak-free splitting.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellId, EpochDay, EventRecord, GridSpec};
use crate::matrix::Matrix;

/// Temporal bucket width of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeResolution {
    Daily,
    Weekly,
}

impl TimeResolution {
    fn days_per_bucket(self) -> i64 {
        match self {
            TimeResolution::Daily => 1,
            TimeResolution::Weekly => 7,
        }
    }
}

/// Inclusive day range of a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyPeriod {
    pub first_day: EpochDay,
    pub last_day: EpochDay,
}

impl StudyPeriod {
    pub fn new(first_day: EpochDay, last_day: EpochDay) -> Result<Self> {
        if last_day < first_day {
            return Err(Error::Invalid {
                what: "study period",
                detail: format!("last day {} before first day {}", last_day.0, first_day.0),
            });
        }
        Ok(StudyPeriod {
            first_day,
            last_day,
        })
    }

    pub fn num_days(&self) -> usize {
        (self.last_day.0 - self.first_day.0 + 1) as usize
    }

    /// Number of buckets at the given resolution; the final weekly bucket
    /// may be partial.
    pub fn num_buckets(&self, resolution: TimeResolution) -> usize {
        let per = resolution.days_per_bucket() as usize;
        self.num_days().div_ceil(per)
    }

    /// Bucket index of a day, if it lies within the period.
    ///
    /// Buckets are half-open day intervals: a day on a bucket boundary
    /// belongs to the later bucket.
    pub fn bucket_of(&self, day: EpochDay, resolution: TimeResolution) -> Option<usize> {
        if day < self.first_day || day > self.last_day {
            return None;
        }
        Some(((day.0 - self.first_day.0) / resolution.days_per_bucket()) as usize)
    }

    /// First calendar day of a bucket.
    pub fn bucket_first_day(&self, bucket: usize, resolution: TimeResolution) -> EpochDay {
        EpochDay(self.first_day.0 + bucket as i64 * resolution.days_per_bucket())
    }

    /// Days of the period covered by a bucket.
    pub fn bucket_days(
        &self,
        bucket: usize,
        resolution: TimeResolution,
    ) -> impl Iterator<Item = EpochDay> {
        let start = self.bucket_first_day(bucket, resolution);
        let end = EpochDay((start.0 + resolution.days_per_bucket() - 1).min(self.last_day.0));
        (start.0..=end.0).map(EpochDay)
    }
}

/// What to do with events that fall outside the grid, in an ineligible
/// cell, or outside the study period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventPolicy {
    /// Abort with an error.
    Strict,
    /// Drop the event and count it in [`SpatioTemporalFrame::rejected_events`].
    Skip,
}

/// The design matrix: one row per (eligible cell, time bucket).
///
/// Rows are bucket-major: all cells of bucket `b` precede all cells of
/// bucket `b + 1`, and within a bucket cells appear in ascending id order.
/// A frame is immutable after construction; feature assembly produces a
/// new frame rather than mutating in place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatioTemporalFrame {
    grid: GridSpec,
    period: StudyPeriod,
    resolution: TimeResolution,
    /// Global index of the first bucket held by this frame (nonzero for
    /// the test half of a split).
    first_bucket: usize,
    num_buckets: usize,
    feature_names: Vec<String>,
    features: Matrix,
    event_counts: Vec<u32>,
    rejected_events: usize,
}

impl SpatioTemporalFrame {
    pub fn n_cells(&self) -> usize {
        self.grid.n_eligible()
    }

    /// Eligible cells in ascending id order.
    pub fn cells(&self) -> &[CellId] {
        self.grid.eligible_cells()
    }

    /// The grid this frame was built on.
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn period(&self) -> StudyPeriod {
        self.period
    }

    pub fn resolution(&self) -> TimeResolution {
        self.resolution
    }

    pub fn first_bucket(&self) -> usize {
        self.first_bucket
    }

    pub fn num_buckets(&self) -> usize {
        self.num_buckets
    }

    pub fn n_rows(&self) -> usize {
        self.n_cells() * self.num_buckets
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn rejected_events(&self) -> usize {
        self.rejected_events
    }

    /// Row index of a (cell, global bucket) pair.
    pub fn row_index(&self, cell: CellId, bucket: usize) -> Result<usize> {
        if bucket < self.first_bucket || bucket >= self.first_bucket + self.num_buckets {
            return Err(Error::Invalid {
                what: "bucket",
                detail: format!("bucket {bucket} outside frame window"),
            });
        }
        let pos = self
            .cells()
            .binary_search(&cell)
            .map_err(|_| Error::UnknownCell(cell))?;
        Ok((bucket - self.first_bucket) * self.n_cells() + pos)
    }

    #[inline]
    pub fn cell_of_row(&self, row: usize) -> CellId {
        self.cells()[row % self.n_cells()]
    }

    /// Global bucket index of a row.
    #[inline]
    pub fn bucket_of_row(&self, row: usize) -> usize {
        self.first_bucket + row / self.n_cells()
    }

    #[inline]
    pub fn event_count(&self, row: usize) -> u32 {
        self.event_counts[row]
    }

    pub fn event_counts(&self) -> &[u32] {
        &self.event_counts
    }

    /// Binary label of a row: 1 iff at least one event fell in that
    /// (cell, bucket).
    #[inline]
    pub fn label(&self, row: usize) -> bool {
        self.event_counts[row] > 0
    }

    /// Materialized label vector in row order.
    pub fn labels(&self) -> Vec<bool> {
        self.event_counts.iter().map(|&c| c > 0).collect()
    }

    /// Global bucket index per row, aligned with `labels()`.
    pub fn row_buckets(&self) -> Vec<usize> {
        (0..self.n_rows()).map(|r| self.bucket_of_row(r)).collect()
    }

    /// Positive cells of one global bucket, ascending by cell id.
    pub fn positive_cells(&self, bucket: usize) -> Vec<CellId> {
        let n = self.n_cells();
        let base = (bucket - self.first_bucket) * n;
        (0..n)
            .filter(|&i| self.event_counts[base + i] > 0)
            .map(|i| self.cells()[i])
            .collect()
    }

    /// Replaces the feature block; used by feature assembly.
    pub fn with_features(&self, names: Vec<String>, features: Matrix) -> Result<Self> {
        if features.n_rows() != self.n_rows() {
            return Err(Error::ArityMismatch {
                expected: self.n_rows(),
                got: features.n_rows(),
            });
        }
        if features.n_cols() != names.len() {
            return Err(Error::ArityMismatch {
                expected: names.len(),
                got: features.n_cols(),
            });
        }
        Ok(SpatioTemporalFrame {
            feature_names: names,
            features,
            ..self.clone()
        })
    }
}

/// Builds the fully-materialized frame for a grid, event list, and period.
///
/// The label of (cell, bucket) is 1 iff at least one event maps there; the
/// per-row event count is retained for crime-history features. At weekly
/// resolution the count is the sum over the week's days, so the weekly
/// label is the OR of the constituent daily labels.
pub fn build_frame(
    grid: &GridSpec,
    events: &[EventRecord],
    period: StudyPeriod,
    resolution: TimeResolution,
    policy: EventPolicy,
) -> Result<SpatioTemporalFrame> {
    if grid.n_eligible() == 0 {
        return Err(Error::EmptyInput("grid has no eligible cells"));
    }
    let num_buckets = period.num_buckets(resolution);
    let n = grid.n_eligible();
    let mut counts = vec![0u32; n * num_buckets];
    let mut rejected = 0usize;

    for event in events {
        let bucket = period.bucket_of(event.day, resolution);
        let cell = grid
            .cell_of_point(event.x, event.y)
            .filter(|&c| grid.is_eligible(c));
        match (bucket, cell) {
            (Some(b), Some(c)) => {
                let pos = grid
                    .eligible_cells()
                    .binary_search(&c)
                    .expect("eligible cell in list");
                counts[b * n + pos] += 1;
            }
            _ => match policy {
                EventPolicy::Strict => {
                    return Err(Error::Invalid {
                        what: "event",
                        detail: format!(
                            "event at ({}, {}) on day {} falls outside the grid, \
                             in an ineligible cell, or outside the period",
                            event.x, event.y, event.day.0
                        ),
                    });
                }
                EventPolicy::Skip => rejected += 1,
            },
        }
    }

    Ok(SpatioTemporalFrame {
        grid: grid.clone(),
        period,
        resolution,
        first_bucket: 0,
        num_buckets,
        feature_names: Vec::new(),
        features: Matrix::zeros(n * num_buckets, 0),
        event_counts: counts,
        rejected_events: rejected,
    })
}

/// Chronological train/test split of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ChronoSplit {
    pub train: SpatioTemporalFrame,
    pub test: SpatioTemporalFrame,
    /// First global bucket of the test half.
    pub boundary_bucket: usize,
}

/// Splits a frame chronologically; the first `floor(fraction * buckets)`
/// buckets become the training half.
///
/// The floor never leaks a partial future bucket into training. Fractions
/// that would leave either half empty are rejected.
pub fn chronological_split(
    frame: &SpatioTemporalFrame,
    train_fraction: f64,
) -> Result<ChronoSplit> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Invalid {
            what: "train_fraction",
            detail: format!("must lie in (0, 1), got {train_fraction}"),
        });
    }
    let total = frame.num_buckets;
    if total < 2 {
        return Err(Error::Invalid {
            what: "frame",
            detail: "chronological split needs at least 2 time buckets".into(),
        });
    }
    let boundary = libm::floor(train_fraction * total as f64) as usize;
    if boundary == 0 || boundary >= total {
        return Err(Error::Invalid {
            what: "train_fraction",
            detail: format!("fraction {train_fraction} leaves an empty train or test half"),
        });
    }
    let n = frame.n_cells();
    let cut_row = boundary * n;

    let train = SpatioTemporalFrame {
        grid: frame.grid.clone(),
        period: frame.period,
        resolution: frame.resolution,
        first_bucket: frame.first_bucket,
        num_buckets: boundary,
        feature_names: frame.feature_names.clone(),
        features: frame.features.slice_rows(0, cut_row),
        event_counts: frame.event_counts[..cut_row].to_vec(),
        rejected_events: frame.rejected_events,
    };
    let test = SpatioTemporalFrame {
        grid: frame.grid.clone(),
        period: frame.period,
        resolution: frame.resolution,
        first_bucket: frame.first_bucket + boundary,
        num_buckets: total - boundary,
        feature_names: frame.feature_names.clone(),
        features: frame.features.slice_rows(cut_row, frame.n_rows()),
        event_counts: frame.event_counts[cut_row..].to_vec(),
        rejected_events: 0,
    };
    Ok(ChronoSplit {
        train,
        test,
        boundary_bucket: frame.first_bucket + boundary,
    })
}

/// Class counts of a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassBalance {
    pub positives: usize,
    pub negatives: usize,
    /// positives / (positives + negatives)
    pub ratio: f64,
}

pub fn class_balance(frame: &SpatioTemporalFrame) -> Result<ClassBalance> {
    let total = frame.n_rows();
    if total == 0 {
        return Err(Error::EmptyInput("frame"));
    }
    let positives = frame.event_counts.iter().filter(|&&c| c > 0).count();
    Ok(ClassBalance {
        positives,
        negatives: total - positives,
        ratio: positives as f64 / total as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Bounds, MaskSource};

    fn toy_grid(w: usize, h: usize) -> GridSpec {
        GridSpec::new(
            Bounds {
                min_x: 0.0,
                min_y: 0.0,
                max_x: w as f64 * 100.0,
                max_y: h as f64 * 100.0,
            },
            100.0,
            MaskSource::AllEligible,
        )
        .unwrap()
    }

    fn ev(x: f64, y: f64, day: i64) -> EventRecord {
        EventRecord {
            x,
            y,
            day: EpochDay(day),
        }
    }

    #[test]
    fn single_event_labels_exactly_one_row() {
        let grid = toy_grid(2, 1);
        let period = StudyPeriod::new(EpochDay(0), EpochDay(2)).unwrap();
        let events = [ev(50.0, 50.0, 1)];
        let frame = build_frame(
            &grid,
            &events,
            period,
            TimeResolution::Daily,
            EventPolicy::Strict,
        )
        .unwrap();
        assert_eq!(frame.n_rows(), 6);
        let positives: Vec<usize> = (0..6).filter(|&r| frame.label(r)).collect();
        let row = frame.row_index(CellId(0), 1).unwrap();
        assert_eq!(positives, vec![row]);
    }

    #[test]
    fn strict_policy_rejects_out_of_grid_event() {
        let grid = toy_grid(2, 1);
        let period = StudyPeriod::new(EpochDay(0), EpochDay(2)).unwrap();
        let events = [ev(5000.0, 50.0, 0)];
        let err = build_frame(
            &grid,
            &events,
            period,
            TimeResolution::Daily,
            EventPolicy::Strict,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Invalid { what: "event", .. }));
        let frame = build_frame(
            &grid,
            &events,
            period,
            TimeResolution::Daily,
            EventPolicy::Skip,
        )
        .unwrap();
        assert_eq!(frame.rejected_events(), 1);
        assert_eq!(frame.labels().iter().filter(|&&l| l).count(), 0);
    }

    #[test]
    fn ineligible_cell_event_follows_policy() {
        let events = [ev(50.0, 50.0, 0), ev(150.0, 50.0, 0)];
        let mut grid = toy_grid(2, 1);
        grid.set_eligibility(MaskSource::Cells(&[(CellId(0), false)]))
            .unwrap();
        let period = StudyPeriod::new(EpochDay(0), EpochDay(0)).unwrap();
        let frame = build_frame(
            &grid,
            &events,
            period,
            TimeResolution::Daily,
            EventPolicy::Skip,
        )
        .unwrap();
        assert_eq!(frame.rejected_events(), 1);
        assert_eq!(frame.n_rows(), 1);
        assert!(frame.label(0));
    }

    #[test]
    fn no_eligible_cells_errors() {
        let mut grid = toy_grid(2, 1);
        grid.set_eligibility(MaskSource::Full(&[false, false])).unwrap();
        let period = StudyPeriod::new(EpochDay(0), EpochDay(0)).unwrap();
        let err = build_frame(&grid, &[], period, TimeResolution::Daily, EventPolicy::Strict)
            .unwrap_err();
        assert_eq!(err, Error::EmptyInput("grid has no eligible cells"));
    }

    #[test]
    fn weekly_bucket_boundary_day_goes_to_later_bucket() {
        let period = StudyPeriod::new(EpochDay(0), EpochDay(20)).unwrap();
        assert_eq!(period.bucket_of(EpochDay(6), TimeResolution::Weekly), Some(0));
        assert_eq!(period.bucket_of(EpochDay(7), TimeResolution::Weekly), Some(1));
        assert_eq!(period.num_buckets(TimeResolution::Weekly), 3);
    }

    #[test]
    fn weekly_label_is_or_of_daily_labels() {
        let grid = toy_grid(3, 2);
        let period = StudyPeriod::new(EpochDay(0), EpochDay(27)).unwrap();
        let events = [
            ev(50.0, 50.0, 2),
            ev(50.0, 50.0, 4),
            ev(250.0, 150.0, 7),
            ev(150.0, 50.0, 27),
        ];
        let daily = build_frame(&grid, &events, period, TimeResolution::Daily, EventPolicy::Strict)
            .unwrap();
        let weekly =
            build_frame(&grid, &events, period, TimeResolution::Weekly, EventPolicy::Strict)
                .unwrap();
        for (pos, &cell) in weekly.cells().iter().enumerate() {
            for week in 0..weekly.num_buckets() {
                let mut any = false;
                for day in period.bucket_days(week, TimeResolution::Weekly) {
                    let b = period.bucket_of(day, TimeResolution::Daily).unwrap();
                    any |= daily.label(daily.row_index(cell, b).unwrap());
                }
                let row = week * weekly.n_cells() + pos;
                assert_eq!(weekly.label(row), any);
            }
        }
    }

    #[test]
    fn split_9_days_two_thirds_gives_6_train() {
        let grid = toy_grid(2, 1);
        let period = StudyPeriod::new(EpochDay(0), EpochDay(8)).unwrap();
        let frame =
            build_frame(&grid, &[], period, TimeResolution::Daily, EventPolicy::Strict).unwrap();
        let split = chronological_split(&frame, 2.0 / 3.0).unwrap();
        assert_eq!(split.train.num_buckets(), 6);
        assert_eq!(split.test.num_buckets(), 3);
        assert_eq!(split.boundary_bucket, 6);
    }

    #[test]
    fn split_1096_days_two_thirds_gives_730_train() {
        // floor(2/3 * 1096) = 730, leaving 366 test days
        let grid = toy_grid(1, 1);
        let period = StudyPeriod::new(EpochDay(0), EpochDay(1095)).unwrap();
        let frame =
            build_frame(&grid, &[], period, TimeResolution::Daily, EventPolicy::Strict).unwrap();
        let split = chronological_split(&frame, 2.0 / 3.0).unwrap();
        assert_eq!(split.train.num_buckets(), 730);
        assert_eq!(split.test.num_buckets(), 366);
    }

    #[test]
    fn split_two_days_in_half() {
        let grid = toy_grid(1, 1);
        let period = StudyPeriod::new(EpochDay(0), EpochDay(1)).unwrap();
        let frame =
            build_frame(&grid, &[], period, TimeResolution::Daily, EventPolicy::Strict).unwrap();
        let split = chronological_split(&frame, 0.5).unwrap();
        assert_eq!(split.train.num_buckets(), 1);
        assert_eq!(split.test.num_buckets(), 1);
    }

    #[test]
    fn degenerate_fractions_error() {
        let grid = toy_grid(1, 1);
        let period = StudyPeriod::new(EpochDay(0), EpochDay(9)).unwrap();
        let frame =
            build_frame(&grid, &[], period, TimeResolution::Daily, EventPolicy::Strict).unwrap();
        assert!(chronological_split(&frame, 0.01).is_err());
        assert!(chronological_split(&frame, 1.0).is_err());
        assert!(chronological_split(&frame, 0.0).is_err());
        // 0.9999 of 10 buckets floors to 9 and is still a valid 9/1 split
        assert!(chronological_split(&frame, 0.9999).is_ok());
    }

    #[test]
    fn class_balance_counts() {
        let grid = toy_grid(2, 1);
        let period = StudyPeriod::new(EpochDay(0), EpochDay(1)).unwrap();
        let events = [ev(50.0, 50.0, 0)];
        let frame =
            build_frame(&grid, &events, period, TimeResolution::Daily, EventPolicy::Strict)
                .unwrap();
        let b = class_balance(&frame).unwrap();
        assert_eq!(b.positives, 1);
        assert_eq!(b.negatives, 3);
        assert_eq!(b.ratio, 0.25);

        let empty =
            build_frame(&grid, &[], period, TimeResolution::Daily, EventPolicy::Strict).unwrap();
        let b = class_balance(&empty).unwrap();
        assert_eq!(b.positives, 0);
        assert_eq!(b.ratio, 0.0);
    }

    proptest::proptest! {
        /// Labels equal a brute-force recount and the frame is complete:
        /// one row per (cell, bucket).
        #[test]
        fn labels_match_brute_force_recount(
            placements in proptest::collection::vec((0usize..6, 0usize..5, 0i64..7), 0..40),
        ) {
            let grid = toy_grid(3, 2);
            let period = StudyPeriod::new(EpochDay(0), EpochDay(6)).unwrap();
            let events: alloc::vec::Vec<EventRecord> = placements
                .iter()
                .map(|&(cx, cy, day)| ev(cx as f64 * 100.0 + 50.0, cy as f64 * 50.0 + 25.0, day))
                .collect();
            let frame = build_frame(&grid, &events, period, TimeResolution::Daily, EventPolicy::Skip)
                .unwrap();
            proptest::prop_assert_eq!(frame.n_rows(), 6 * 7);
            for &cell in frame.cells() {
                for bucket in 0..7 {
                    let row = frame.row_index(cell, bucket).unwrap();
                    let recount = events
                        .iter()
                        .filter(|e| {
                            grid.cell_of_point(e.x, e.y) == Some(cell) && e.day.0 == bucket as i64
                        })
                        .count() as u32;
                    proptest::prop_assert_eq!(frame.event_count(row), recount);
                    proptest::prop_assert_eq!(frame.label(row), recount > 0);
                }
            }
        }
    }

    #[test]
    fn reference_ratio_matches_documented_counts() {
        // 6,266 positives of 11,123,304 rows is a ratio of about 5.63e-4.
        let ratio: f64 = 6266.0 / 11_123_304.0;
        assert!((ratio - 5.633e-4).abs() < 1e-6);
    }
}
