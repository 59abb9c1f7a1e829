//! Local-time helpers for epoch timestamps with per-record UTC offsets.

use chrono::{DateTime, Datelike, NaiveDate, Timelike};
use serde::{Deserialize, Serialize};

/// Day of week with Monday-first ordering, matching weekday/weekend
/// breakdowns in the analytics tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DayOfWeek {
    Mon,
    Tue,
    Wed,
    Thu,
    Fri,
    Sat,
    Sun,
}

impl DayOfWeek {
    pub const ALL: [DayOfWeek; 7] = [
        DayOfWeek::Mon,
        DayOfWeek::Tue,
        DayOfWeek::Wed,
        DayOfWeek::Thu,
        DayOfWeek::Fri,
        DayOfWeek::Sat,
        DayOfWeek::Sun,
    ];

    /// 0 = Monday .. 6 = Sunday.
    pub fn index(self) -> u8 {
        match self {
            DayOfWeek::Mon => 0,
            DayOfWeek::Tue => 1,
            DayOfWeek::Wed => 2,
            DayOfWeek::Thu => 3,
            DayOfWeek::Fri => 4,
            DayOfWeek::Sat => 5,
            DayOfWeek::Sun => 6,
        }
    }

    pub fn from_index(i: u8) -> Option<DayOfWeek> {
        DayOfWeek::ALL.get(usize::from(i)).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            DayOfWeek::Mon => "mon",
            DayOfWeek::Tue => "tue",
            DayOfWeek::Wed => "wed",
            DayOfWeek::Thu => "thu",
            DayOfWeek::Fri => "fri",
            DayOfWeek::Sat => "sat",
            DayOfWeek::Sun => "sun",
        }
    }

    pub fn is_weekend(self) -> bool {
        matches!(self, DayOfWeek::Sat | DayOfWeek::Sun)
    }
}

/// Calendar date, hour of day, and weekday of a UTC timestamp shifted
/// into a local zone given as minutes east of UTC.
pub fn local_parts(timestamp_utc: i64, tz_offset_minutes: i32) -> Option<(NaiveDate, u8, DayOfWeek)> {
    let shifted = timestamp_utc.checked_add(i64::from(tz_offset_minutes) * 60)?;
    let dt = DateTime::from_timestamp(shifted, 0)?;
    let day = match dt.weekday().num_days_from_monday() {
        0 => DayOfWeek::Mon,
        1 => DayOfWeek::Tue,
        2 => DayOfWeek::Wed,
        3 => DayOfWeek::Thu,
        4 => DayOfWeek::Fri,
        5 => DayOfWeek::Sat,
        _ => DayOfWeek::Sun,
    };
    Some((dt.date_naive(), dt.hour() as u8, day))
}

/// Local calendar date only; `None` if the shifted timestamp is not
/// representable.
pub fn local_date(timestamp_utc: i64, tz_offset_minutes: i32) -> Option<NaiveDate> {
    local_parts(timestamp_utc, tz_offset_minutes).map(|(d, _, _)| d)
}

/// True when the timestamp survives a worst-case zone shift, used to
/// reject records that would overflow date math downstream.
pub fn timestamp_in_range(timestamp_utc: i64) -> bool {
    const DAY: i64 = 86_400;
    local_parts(timestamp_utc - DAY, 0).is_some() && local_parts(timestamp_utc + DAY, 0).is_some()
}
