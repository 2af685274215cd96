//! ISO-8601 date handling; the core works on epoch day numbers only.

use chrono::NaiveDate;
use hotgrid_core::grid::EpochDay;

use crate::error::{CliError, CliResult};

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("epoch")
}

pub fn parse_date(stage: &str, s: &str) -> CliResult<EpochDay> {
    let date = NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|e| CliError::data(stage, format!("bad date {s:?}: {e}")))?;
    Ok(EpochDay((date - epoch()).num_days()))
}

pub fn format_date(day: EpochDay) -> String {
    (epoch() + chrono::Duration::days(day.0)).format("%Y-%m-%d").to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_weekday() {
        let d = parse_date("test", "2020-01-06").unwrap();
        assert_eq!(d, EpochDay(18267));
        // 2020-01-06 was a Monday
        assert_eq!(d.weekday(), 0);
        assert_eq!(format_date(d), "2020-01-06");
        assert_eq!(parse_date("test", "1970-01-01").unwrap(), EpochDay(0));
        assert!(parse_date("test", "06.01.2020").is_err());
    }
}
