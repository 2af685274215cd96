//! Paired significance tests between two evaluated runs.

use std::collections::BTreeMap;
use std::path::Path;

use hotgrid_core::stats::{paired_t_test, PairedTestResult};

use crate::csvio::{self, fmt_f64};
use crate::error::{CliError, CliResult};

pub struct ComparedLevel {
    pub coverage: f64,
    pub days: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub test: PairedTestResult,
}

/// Day-aligned hit-rate series per coverage level.
fn series_by_coverage(path: &Path) -> CliResult<BTreeMap<u64, Vec<(usize, f64)>>> {
    let rows = csvio::read_daily_hits(path)?;
    let mut out: BTreeMap<u64, Vec<(usize, f64)>> = BTreeMap::new();
    for row in rows {
        out.entry(row.coverage.to_bits())
            .or_default()
            .push((row.day_index, row.hit_rate));
    }
    Ok(out)
}

/// One-sided paired t-tests (run A > run B) on day-aligned hit rates,
/// per coverage level.
///
/// Both runs must have evaluated the same coverage levels over the same
/// days; misalignment is an error rather than a silent intersection.
pub fn compare_runs(run_a: &Path, run_b: &Path) -> CliResult<Vec<ComparedLevel>> {
    const STAGE: &str = "compare";
    let a = series_by_coverage(&run_a.join("daily_hits.csv"))?;
    let b = series_by_coverage(&run_b.join("daily_hits.csv"))?;
    if a.keys().collect::<Vec<_>>() != b.keys().collect::<Vec<_>>() {
        return Err(CliError::data(
            STAGE,
            "runs evaluated different coverage levels",
        ));
    }
    let mut out = Vec::new();
    for (&bits, series_a) in &a {
        let series_b = &b[&bits];
        let days_a: Vec<usize> = series_a.iter().map(|&(d, _)| d).collect();
        let days_b: Vec<usize> = series_b.iter().map(|&(d, _)| d).collect();
        if days_a != days_b {
            return Err(CliError::data(
                STAGE,
                format!(
                    "misaligned days at coverage {}: {} vs {} entries",
                    f64::from_bits(bits),
                    days_a.len(),
                    days_b.len()
                ),
            ));
        }
        let va: Vec<f64> = series_a.iter().map(|&(_, h)| h).collect();
        let vb: Vec<f64> = series_b.iter().map(|&(_, h)| h).collect();
        let test = paired_t_test(&va, &vb).map_err(|e| CliError::from_core(STAGE, e))?;
        out.push(ComparedLevel {
            coverage: f64::from_bits(bits),
            days: va.len(),
            mean_a: va.iter().sum::<f64>() / va.len() as f64,
            mean_b: vb.iter().sum::<f64>() / vb.len() as f64,
            test,
        });
    }
    Ok(out)
}

pub fn write_comparison(path: &Path, levels: &[ComparedLevel]) -> CliResult<()> {
    let mut text = String::from("coverage,days,mean_hit_a,mean_hit_b,mean_diff,t,df,p\n");
    for level in levels {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt_f64(level.coverage),
            level.days,
            fmt_f64(level.mean_a),
            fmt_f64(level.mean_b),
            fmt_f64(level.test.mean_diff),
            fmt_f64(level.test.t),
            level.test.df,
            fmt_f64(level.test.p),
        ));
    }
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io("compare", parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io("compare", path, e))
}
