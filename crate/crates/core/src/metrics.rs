//! Ranking metrics for daily hotspot forecasts: hit rate, coverage, PAI,
//! surveillance curves, and their AUC.
//!
//! A day's scores are turned into a complete ranking of the eligible
//! cells; the hit rate at a coverage budget is the fraction of that day's
//! event cells captured by the top-ranked cells. Days without events have
//! an undefined hit rate and are skipped when averaging.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::CellId;

/// Complete descending ranking of the eligible cells for one bucket.
///
/// Ties break by ascending cell id, so rankings are deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRanking {
    pub day: usize,
    /// Cells from most to least threatened.
    ranked: Vec<CellId>,
    /// Scores aligned with `ranked`.
    scores: Vec<f64>,
}

impl DailyRanking {
    pub fn n_cells(&self) -> usize {
        self.ranked.len()
    }

    pub fn ranked_cells(&self) -> &[CellId] {
        &self.ranked
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn top(&self, k: usize) -> &[CellId] {
        &self.ranked[..k.min(self.ranked.len())]
    }
}

/// Ranks cells by descending score, ties by ascending cell id.
///
/// `scores[i]` belongs to `cells[i]`; every eligible cell needs exactly
/// one finite score.
pub fn rank_cells(scores: &[f64], cells: &[CellId], day: usize) -> Result<DailyRanking> {
    if cells.is_empty() {
        return Err(Error::EmptyInput("cells"));
    }
    if scores.len() != cells.len() {
        return Err(Error::ArityMismatch {
            expected: cells.len(),
            got: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("cell scores"));
    }
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(cells[a].cmp(&cells[b])));
    Ok(DailyRanking {
        day,
        ranked: order.iter().map(|&i| cells[i]).collect(),
        scores: order.iter().map(|&i| scores[i]).collect(),
    })
}

/// A patrol budget: fraction of the area and the cell count it buys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageSpec {
    pub fraction: f64,
    pub k_cells: usize,
}

impl CoverageSpec {
    /// `k_cells = floor(fraction * eligible)`, clamped to at least one
    /// cell so a budget is never empty.
    pub fn new(fraction: f64, n_eligible: usize) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::Invalid {
                what: "coverage fraction",
                detail: format!("must lie in (0, 1], got {fraction}"),
            });
        }
        if n_eligible == 0 {
            return Err(Error::EmptyInput("eligible cells"));
        }
        let k = (libm::floor(fraction * n_eligible as f64) as usize).clamp(1, n_eligible);
        Ok(CoverageSpec {
            fraction,
            k_cells: k,
        })
    }
}

/// Hit rate of one day: the fraction of the day's event cells inside the
/// top `coverage.k_cells` of the ranking.
///
/// `actual` must be sorted ascending. Returns `None` (skip) when the day
/// has no events, since 0/0 is undefined.
pub fn daily_hit_rate(
    ranking: &DailyRanking,
    actual: &[CellId],
    coverage: CoverageSpec,
) -> Result<Option<f64>> {
    if coverage.k_cells > ranking.n_cells() {
        return Err(Error::Invalid {
            what: "coverage",
            detail: format!(
                "budget of {} cells exceeds the {} ranked cells",
                coverage.k_cells,
                ranking.n_cells()
            ),
        });
    }
    if actual.is_empty() {
        return Ok(None);
    }
    let hits = ranking
        .top(coverage.k_cells)
        .iter()
        .filter(|c| actual.binary_search(c).is_ok())
        .count();
    Ok(Some(hits as f64 / actual.len() as f64))
}

/// Prediction accuracy index: mean hit rate over coverage area.
pub fn pai(mean_hit_rate: f64, coverage: f64) -> Result<f64> {
    if !(coverage > 0.0 && coverage <= 1.0) {
        return Err(Error::Invalid {
            what: "coverage",
            detail: format!("must lie in (0, 1], got {coverage}"),
        });
    }
    Ok(mean_hit_rate / coverage)
}

/// Mean hit rate as a function of coverage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveillanceCurve {
    /// (coverage, mean hit rate) points, coverage strictly increasing.
    pub points: Vec<(f64, f64)>,
    /// Days that entered the averages (days without events are skipped).
    pub days_used: usize,
}

/// How daily hit rates aggregate across days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum HitRateAveraging {
    /// Average the per-day ratios over days with events.
    #[default]
    MeanOfRatios,
    /// Pool hit and event counts across days, then divide.
    RatioOfSums,
}

/// Computes the surveillance curve: mean hit rate at each coverage value.
///
/// `actuals[i]` holds the (ascending) event cells of the day ranked by
/// `rankings[i]`. The coverage grid must be strictly increasing within
/// (0, 1].
pub fn surveillance_curve(
    rankings: &[DailyRanking],
    actuals: &[Vec<CellId>],
    coverage_grid: &[f64],
    averaging: HitRateAveraging,
) -> Result<SurveillanceCurve> {
    if coverage_grid.is_empty() {
        return Err(Error::EmptyInput("coverage grid"));
    }
    if rankings.len() != actuals.len() {
        return Err(Error::ArityMismatch {
            expected: rankings.len(),
            got: actuals.len(),
        });
    }
    if rankings.is_empty() {
        return Err(Error::EmptyInput("rankings"));
    }
    let mut prev = 0.0;
    for &c in coverage_grid {
        if !(c > prev && c <= 1.0) {
            return Err(Error::Invalid {
                what: "coverage grid",
                detail: "must be strictly increasing within (0, 1]".into(),
            });
        }
        prev = c;
    }

    let n_cells = rankings[0].n_cells();
    let budgets: Vec<CoverageSpec> = coverage_grid
        .iter()
        .map(|&f| CoverageSpec::new(f, n_cells))
        .collect::<Result<_>>()?;

    // cumulative hits along each day's ranking, so each coverage level is
    // a single lookup
    let mut ratio_sums = vec![0.0f64; budgets.len()];
    let mut hit_sums = vec![0u64; budgets.len()];
    let mut event_total = 0u64;
    let mut days_used = 0usize;
    for (ranking, actual) in rankings.iter().zip(actuals) {
        if ranking.n_cells() != n_cells {
            return Err(Error::ArityMismatch {
                expected: n_cells,
                got: ranking.n_cells(),
            });
        }
        if actual.is_empty() {
            continue;
        }
        days_used += 1;
        event_total += actual.len() as u64;
        let mut cumulative = vec![0u32; n_cells + 1];
        for (i, cell) in ranking.ranked_cells().iter().enumerate() {
            cumulative[i + 1] =
                cumulative[i] + u32::from(actual.binary_search(cell).is_ok());
        }
        for (bi, budget) in budgets.iter().enumerate() {
            let hits = cumulative[budget.k_cells];
            ratio_sums[bi] += hits as f64 / actual.len() as f64;
            hit_sums[bi] += hits as u64;
        }
    }

    let points = budgets
        .iter()
        .enumerate()
        .map(|(bi, budget)| {
            let y = if days_used == 0 {
                0.0
            } else {
                match averaging {
                    HitRateAveraging::MeanOfRatios => ratio_sums[bi] / days_used as f64,
                    HitRateAveraging::RatioOfSums => hit_sums[bi] as f64 / event_total as f64,
                }
            };
            (budget.fraction, y)
        })
        .collect();
    Ok(SurveillanceCurve { points, days_used })
}

/// Area under a surveillance curve by the trapezoid rule over [0, 1],
/// anchored at (0, 0) and (1, 1).
pub fn auc(curve: &SurveillanceCurve) -> Result<f64> {
    if curve.points.is_empty() {
        return Err(Error::EmptyInput("surveillance curve"));
    }
    let mut area = 0.0;
    let mut prev = (0.0, 0.0);
    for &(x, y) in &curve.points {
        area += (x - prev.0) * (y + prev.1) * 0.5;
        prev = (x, y);
    }
    if prev.0 < 1.0 {
        area += (1.0 - prev.0) * (1.0 + prev.1) * 0.5;
    }
    Ok(area)
}

/// Metrics of one experiment at one coverage level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMetrics {
    pub coverage: f64,
    pub k_cells: usize,
    pub mean_hit_rate: f64,
    pub pai: f64,
    /// Per-day hit rates; `None` marks days without events.
    pub daily: Vec<Option<f64>>,
}

/// Metric report over the requested coverage levels plus the curve AUC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub levels: Vec<LevelMetrics>,
    pub auc: f64,
    pub curve: SurveillanceCurve,
    pub days_evaluated: usize,
}

/// The default curve grid: 1% steps from 1% to 100%.
pub fn default_curve_grid() -> Vec<f64> {
    (1..=100).map(|i| i as f64 / 100.0).collect()
}

/// Evaluates rankings against actual event cells at the given coverage
/// levels, with the surveillance curve sampled on `curve_grid`.
pub fn compute_report(
    rankings: &[DailyRanking],
    actuals: &[Vec<CellId>],
    levels: &[f64],
    curve_grid: &[f64],
    averaging: HitRateAveraging,
) -> Result<MetricReport> {
    if levels.is_empty() {
        return Err(Error::EmptyInput("coverage levels"));
    }
    let curve = surveillance_curve(rankings, actuals, curve_grid, averaging)?;
    let total_auc = auc(&curve)?;

    let n_cells = rankings
        .first()
        .map(|r| r.n_cells())
        .ok_or(Error::EmptyInput("rankings"))?;
    let mut out = Vec::with_capacity(levels.len());
    for &fraction in levels {
        let budget = CoverageSpec::new(fraction, n_cells)?;
        let mut daily = Vec::with_capacity(rankings.len());
        let mut ratio_sum = 0.0;
        let mut hits = 0u64;
        let mut events = 0u64;
        let mut used = 0usize;
        for (ranking, actual) in rankings.iter().zip(actuals) {
            let rate = daily_hit_rate(ranking, actual, budget)?;
            if let Some(r) = rate {
                ratio_sum += r;
                hits += libm::round(r * actual.len() as f64) as u64;
                events += actual.len() as u64;
                used += 1;
            }
            daily.push(rate);
        }
        let mean = if used == 0 {
            0.0
        } else {
            match averaging {
                HitRateAveraging::MeanOfRatios => ratio_sum / used as f64,
                HitRateAveraging::RatioOfSums => hits as f64 / events as f64,
            }
        };
        out.push(LevelMetrics {
            coverage: fraction,
            k_cells: budget.k_cells,
            mean_hit_rate: mean,
            pai: pai(mean, fraction)?,
            daily,
        });
    }
    Ok(MetricReport {
        levels: out,
        auc: total_auc,
        curve,
        days_evaluated: rankings.len(),
    })
}

/// Surveillance AUC of scored rows grouped by bucket; the cross-validation
/// selection metric.
///
/// Rows are ranked within their bucket (ties by row position), the hit
/// rate uses per-group budgets `max(1, floor(x * group size))`, and groups
/// without positives are skipped. Returns 0.5 when no group has a
/// positive row.
pub fn grouped_surveillance_auc(
    scores: &[f64],
    labels: &[bool],
    buckets: &[usize],
    coverage_grid: &[f64],
) -> Result<f64> {
    if scores.len() != labels.len() || scores.len() != buckets.len() {
        return Err(Error::ArityMismatch {
            expected: scores.len(),
            got: labels.len().min(buckets.len()),
        });
    }
    if scores.is_empty() {
        return Err(Error::EmptyInput("scores"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by_key(|&i| buckets[i]);

    let mut ratio_sums = vec![0.0f64; coverage_grid.len()];
    let mut groups_used = 0usize;
    let mut start = 0;
    while start < order.len() {
        let bucket = buckets[order[start]];
        let mut end = start;
        while end < order.len() && buckets[order[end]] == bucket {
            end += 1;
        }
        let group = &order[start..end];
        start = end;

        let positives = group.iter().filter(|&&i| labels[i]).count();
        if positives == 0 {
            continue;
        }
        groups_used += 1;
        let mut ranked: Vec<usize> = group.to_vec();
        ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let mut cumulative = 0usize;
        let mut hits_at = vec![0usize; ranked.len() + 1];
        for (i, &row) in ranked.iter().enumerate() {
            cumulative += usize::from(labels[row]);
            hits_at[i + 1] = cumulative;
        }
        for (ci, &x) in coverage_grid.iter().enumerate() {
            let k = ((libm::floor(x * ranked.len() as f64) as usize).max(1)).min(ranked.len());
            ratio_sums[ci] += hits_at[k] as f64 / positives as f64;
        }
    }
    if groups_used == 0 {
        return Ok(0.5);
    }
    let points: Vec<(f64, f64)> = coverage_grid
        .iter()
        .enumerate()
        .map(|(ci, &x)| (x, ratio_sums[ci] / groups_used as f64))
        .collect();
    auc(&SurveillanceCurve {
        points,
        days_used: groups_used,
    })
}
