use std::fmt;

use serde::{Deserialize, Serialize};

pub const SLOTS_PER_DAY: usize = 96;
pub const SLOTS_PER_HOUR: usize = 4;
pub const SLOT_HOURS: f64 = 0.25;

/// A 15-minute interval of the study day. Arithmetic wraps at midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeSlot(u32);

impl TimeSlot {
    pub const MIDNIGHT: TimeSlot = TimeSlot(0);

    /// Wraps any integer onto the day.
    pub fn new(index: i64) -> Self {
        TimeSlot(index.rem_euclid(SLOTS_PER_DAY as i64) as u32)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_hm(hours: u32, minutes: u32) -> Self {
        Self::new(i64::from(hours * 60 + minutes) / 15)
    }

    /// Nearest slot to a (possibly out-of-day) time in hours.
    pub fn from_hours(hours: f64) -> Self {
        Self::new((hours * SLOTS_PER_HOUR as f64).round() as i64)
    }

    /// Parses `HH:MM`; `24:00` is midnight. Minutes must fall on a slot boundary.
    pub fn parse(text: &str) -> Option<Self> {
        let (h, m) = text.trim().split_once(':')?;
        let h: u32 = h.parse().ok()?;
        let m: u32 = m.parse().ok()?;
        if h > 24 || m >= 60 || !m.is_multiple_of(15) || (h == 24 && m != 0) {
            return None;
        }
        Some(Self::from_hm(h, m))
    }

    pub fn offset(self, slots: i64) -> Self {
        Self::new(self.0 as i64 + slots)
    }

    /// Forward distance from `self` to `later`, in `0..96`.
    pub fn until(self, later: TimeSlot) -> u32 {
        (later.0 + SLOTS_PER_DAY as u32 - self.0) % SLOTS_PER_DAY as u32
    }

    pub fn hours(self) -> f64 {
        self.0 as f64 * SLOT_HOURS
    }
}

impl fmt::Display for TimeSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let minutes = self.0 * 15;
        write!(f, "{:02}:{:02}", minutes / 60, minutes % 60)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        assert_eq!(TimeSlot::parse("17:00"), Some(TimeSlot(68)));
        assert_eq!(TimeSlot::parse("24:00"), Some(TimeSlot::MIDNIGHT));
        assert_eq!(TimeSlot::parse("05:30").unwrap().to_string(), "05:30");
        assert_eq!(TimeSlot::parse("05:10"), None);
        assert_eq!(TimeSlot::parse("24:15"), None);
        assert_eq!(TimeSlot::parse("noon"), None);
    }

    #[test]
    fn wraps_modulo_day() {
        assert_eq!(TimeSlot::new(-1), TimeSlot(95));
        assert_eq!(TimeSlot::new(96), TimeSlot(0));
        assert_eq!(TimeSlot::from_hours(25.0), TimeSlot::from_hm(1, 0));
        assert_eq!(TimeSlot(90).until(TimeSlot(2)), 8);
        assert_eq!(TimeSlot(5).until(TimeSlot(5)), 0);
    }
}
