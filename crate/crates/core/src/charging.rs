//! Charging strategies: when each EV draws its fixed charging power.
//!
//! Every strategy charges each vehicle for exactly
//! [`charge_duration_slots`] slots at the fleet's charge power; strategies
//! differ only in where the window starts on the 96-slot day. Windows are
//! half-open `[start, start + slots)` and wrap at midnight.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BusId, Phase};
use crate::load::{charge_duration_slots, FleetSpec};
use crate::time::{TimeSlot, SLOTS_PER_DAY, SLOT_HOURS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChargeWindow {
    pub start: TimeSlot,
    pub slots: u32,
}

impl ChargeWindow {
    pub fn end(&self) -> TimeSlot {
        self.start.offset(self.slots as i64)
    }

    pub fn is_empty(&self) -> bool {
        self.slots == 0
    }

    /// Whether `slot` falls inside the window (counting wrap-around).
    pub fn contains(&self, slot: TimeSlot) -> bool {
        self.slots as usize >= SLOTS_PER_DAY || self.start.until(slot) < self.slots
    }

    /// Slots covered, in charging order. Windows longer than a day revisit slots.
    pub fn slots_iter(&self) -> impl Iterator<Item = TimeSlot> + '_ {
        (0..self.slots).map(move |k| self.start.offset(k as i64))
    }
}

impl fmt::Display for ChargeWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            write!(f, "[]")
        } else {
            write!(f, "[{}, {})", self.start, self.end())
        }
    }
}

/// One window per fleet vehicle, in fleet order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeSchedule {
    pub windows: Vec<ChargeWindow>,
    pub power_w: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ChargeSchedule {
    /// Energy drawn by each vehicle, kWh.
    pub fn delivered_kwh(&self) -> Vec<f64> {
        self.windows
            .iter()
            .map(|w| w.slots as f64 * SLOT_HOURS * self.power_w / 1000.0)
            .collect()
    }
}

fn with_starts(fleet: &FleetSpec, start_of: impl Fn(usize, u32) -> TimeSlot) -> ChargeSchedule {
    let windows = fleet
        .vehicles
        .iter()
        .enumerate()
        .map(|(i, ev)| {
            let slots = charge_duration_slots(ev, fleet.charge_power_w);
            ChargeWindow {
                start: start_of(i, slots),
                slots,
            }
        })
        .collect();
    ChargeSchedule {
        windows,
        power_w: fleet.charge_power_w,
        warnings: Vec::new(),
    }
}

/// Every EV charges from the moment it is plugged in.
pub fn schedule_uncontrolled(fleet: &FleetSpec) -> ChargeSchedule {
    with_starts(fleet, |i, _| fleet.vehicles[i].arrival)
}

/// Every EV starts at the same clock time.
pub fn schedule_timer(fleet: &FleetSpec, start: TimeSlot) -> ChargeSchedule {
    with_starts(fleet, |_, _| start)
}

/// Every EV starts at its zone's start time.
pub fn schedule_zoned(fleet: &FleetSpec, plan: &ZonePlan) -> Result<ChargeSchedule> {
    let starts = fleet
        .vehicles
        .iter()
        .map(|ev| plan.start_for(ev.bus))
        .collect::<Result<Vec<_>>>()?;
    Ok(with_starts(fleet, |i, _| starts[i]))
}

/// Semi-smart rule: each EV's window ends exactly at its departure, so
/// charging starts `duration` slots earlier.
///
/// A window longer than a day cannot be placed and is an error. A window that
/// starts before the vehicle arrives is kept as computed and flagged in
/// `warnings`.
pub fn schedule_semi_smart(fleet: &FleetSpec) -> Result<ChargeSchedule> {
    let mut schedule = with_starts(fleet, |i, slots| fleet.vehicles[i].departure.offset(-(slots as i64)));
    let mut too_long = Vec::new();
    for (ev, window) in fleet.vehicles.iter().zip(&schedule.windows) {
        if window.slots as usize > SLOTS_PER_DAY {
            too_long.push((ev.label(), window.slots));
            continue;
        }
        let parked = ev.arrival.until(ev.departure);
        if window.slots > parked {
            let msg = format!(
                "EV {} needs {} slots but is parked for {}; window {} starts before arrival {}",
                ev.label(),
                window.slots,
                parked,
                window,
                ev.arrival
            );
            log::warn!("{msg}");
            schedule.warnings.push(msg);
        }
    }
    if let Some((vehicle, slots)) = too_long.first().cloned() {
        if too_long.len() > 1 {
            log::warn!("{} EVs need more than a day of charging", too_long.len());
        }
        return Err(Error::WindowTooLong { vehicle, slots });
    }
    Ok(schedule)
}

/// Assignment of buses to charging zones and each zone's start time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonePlan {
    pub zones: BTreeMap<BusId, u8>,
    pub start_times: BTreeMap<u8, TimeSlot>,
}

impl ZonePlan {
    /// Three zones of the 19-bus feeder starting at 23:30, 24:00 and 01:00.
    pub fn nineteen_bus() -> Self {
        crate::data::zones()
    }

    pub fn zone_of(&self, bus: BusId) -> Option<u8> {
        self.zones.get(&bus).copied()
    }

    pub fn start_for(&self, bus: BusId) -> Result<TimeSlot> {
        self.zone_of(bus)
            .and_then(|z| self.start_times.get(&z).copied())
            .ok_or(Error::MissingZone(bus))
    }
}

/// Parses rows of `zone start bus,bus,...`:
///
/// ```text
/// 1 23:30 1,2,15,16,17,18,19
/// ```
pub fn parse_zone_plan(text: &str, source_name: &str) -> Result<ZonePlan> {
    let mut plan = ZonePlan {
        zones: BTreeMap::new(),
        start_times: BTreeMap::new(),
    };
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |msg: String| Error::parse(source_name, lineno, msg);
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(format!("zone row needs 'zone start buses', found {} fields", fields.len())));
        }
        let zone: u8 = fields[0]
            .parse()
            .map_err(|_| err(format!("invalid zone number '{}'", fields[0])))?;
        let start = TimeSlot::parse(fields[1]).ok_or_else(|| err(format!("invalid start time '{}'", fields[1])))?;
        if plan.start_times.insert(zone, start).is_some() {
            return Err(err(format!("zone {zone} defined twice")));
        }
        for item in fields[2].split(',').filter(|s| !s.is_empty()) {
            let bus = item
                .parse::<usize>()
                .ok()
                .filter(|b| *b >= 1)
                .map(BusId)
                .ok_or_else(|| err(format!("invalid bus '{item}'")))?;
            if let Some(other) = plan.zones.insert(bus, zone) {
                return Err(err(format!("bus {bus} already belongs to zone {other}")));
            }
        }
    }
    Ok(plan)
}

pub fn load_zone_plan(path: impl AsRef<Path>) -> Result<ZonePlan> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_zone_plan(&text, &path.display().to_string())
}

/// EV active power per (bus, phase, slot), watts. EVs draw no reactive power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFrame {
    bus_count: usize,
    watts: Vec<f64>,
}

impl PowerFrame {
    pub fn zero(bus_count: usize) -> Self {
        PowerFrame {
            bus_count,
            watts: vec![0.0; bus_count * 3 * SLOTS_PER_DAY],
        }
    }

    fn offset(bus: BusId, phase: Phase, slot: usize) -> usize {
        (bus.index() * 3 + phase.index()) * SLOTS_PER_DAY + slot
    }

    pub fn bus_count(&self) -> usize {
        self.bus_count
    }

    pub fn get(&self, bus: BusId, phase: Phase, slot: usize) -> f64 {
        self.watts[Self::offset(bus, phase, slot)]
    }

    pub fn total_at(&self, slot: usize) -> f64 {
        (0..self.bus_count * 3).map(|k| self.watts[k * SLOTS_PER_DAY + slot]).sum()
    }

    /// Total energy over the day, kWh.
    pub fn energy_kwh(&self) -> f64 {
        self.watts.iter().sum::<f64>() * SLOT_HOURS / 1000.0
    }

    pub fn is_zero(&self) -> bool {
        self.watts.iter().all(|w| *w == 0.0)
    }
}

/// Lays each vehicle's window onto the day.
pub fn ev_power_frame(schedule: &ChargeSchedule, fleet: &FleetSpec, bus_count: usize) -> Result<PowerFrame> {
    if schedule.windows.len() != fleet.vehicles.len() {
        return Err(Error::Invalid(format!(
            "schedule has {} windows for {} vehicles",
            schedule.windows.len(),
            fleet.vehicles.len()
        )));
    }
    let mut frame = PowerFrame::zero(bus_count);
    for (ev, window) in fleet.vehicles.iter().zip(&schedule.windows) {
        if ev.bus.0 == 0 || ev.bus.0 > bus_count {
            return Err(Error::UnknownBus(ev.bus));
        }
        for slot in window.slots_iter() {
            frame.watts[PowerFrame::offset(ev.bus, ev.phase, slot.index())] += schedule.power_w;
        }
    }
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::load::{EvSpec, FleetSpec};

    fn hm(text: &str) -> TimeSlot {
        TimeSlot::parse(text).unwrap()
    }

    fn ev(label: (usize, Phase), cap: f64, arr: &str, dep: &str, soc_pct: f64) -> EvSpec {
        EvSpec {
            bus: BusId(label.0),
            phase: label.1,
            capacity_kwh: cap,
            arrival: hm(arr),
            departure: hm(dep),
            initial_soc: soc_pct / 100.0,
        }
    }

    fn sample_fleet() -> FleetSpec {
        FleetSpec::new(
            vec![
                ev((1, Phase::A), 26.0, "17:00", "05:30", 65.0),
                ev((2, Phase::A), 30.0, "18:00", "07:45", 17.0),
                ev((2, Phase::B), 8.0, "16:30", "09:30", 14.0),
                ev((7, Phase::B), 28.0, "16:00", "08:30", 5.0),
                ev((13, Phase::A), 10.0, "16:00", "09:30", 74.0),
            ],
            3500.0,
        )
        .unwrap()
    }

    #[test]
    fn uncontrolled_starts_on_arrival() {
        let s = schedule_uncontrolled(&sample_fleet());
        assert_eq!(s.windows[0].to_string(), "[17:00, 19:15)");
        // 8 * 0.81 / 3.5 = 1.8514 h -> 8 slots
        assert_eq!(s.windows[2].to_string(), "[16:30, 18:30)");
    }

    #[test]
    fn timer_wraps_from_midnight() {
        let s = schedule_timer(&sample_fleet(), hm("24:00"));
        assert_eq!(s.windows[0].to_string(), "[00:00, 02:15)");
        assert_eq!(s.windows[1].to_string(), "[00:00, 06:45)");
        assert!(schedule_timer(&FleetSpec::empty(3500.0), hm("24:00")).windows.is_empty());
    }

    #[test]
    fn zoned_uses_zone_start() {
        let s = schedule_zoned(&sample_fleet(), &ZonePlan::nineteen_bus()).unwrap();
        assert_eq!(s.windows[0].start, hm("23:30"));
        assert_eq!(s.windows[3].start, hm("01:00"));
        assert_eq!(s.windows[4].start, hm("24:00"));
        let mut partial = ZonePlan::nineteen_bus();
        partial.zones.remove(&BusId(13));
        assert!(matches!(
            schedule_zoned(&sample_fleet(), &partial),
            Err(Error::MissingZone(BusId(13)))
        ));
    }

    #[test]
    fn semi_smart_ends_at_departure() {
        let fleet = sample_fleet();
        let s = schedule_semi_smart(&fleet).unwrap();
        assert_eq!(s.windows[0].to_string(), "[03:15, 05:30)");
        assert_eq!(s.windows[1].to_string(), "[01:00, 07:45)");
        for (ev, w) in fleet.vehicles.iter().zip(&s.windows) {
            assert_eq!(w.end(), ev.departure);
        }
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn semi_smart_full_battery_is_empty() {
        let fleet = FleetSpec::new(vec![ev((3, Phase::C), 20.0, "18:00", "07:00", 95.0)], 3500.0).unwrap();
        let s = schedule_semi_smart(&fleet).unwrap();
        assert!(s.windows[0].is_empty());
        assert!(ev_power_frame(&s, &fleet, 19).unwrap().is_zero());
    }

    #[test]
    fn semi_smart_flags_early_start_and_rejects_overlong() {
        // 30 kWh from 0% at 3.5 kW: 32.6 slots, but parked only 04:00-06:00
        let fleet = FleetSpec::new(vec![ev((3, Phase::C), 30.0, "04:00", "06:00", 0.0)], 3500.0).unwrap();
        let s = schedule_semi_smart(&fleet).unwrap();
        assert_eq!(s.windows[0].end(), hm("06:00"));
        assert_eq!(s.warnings.len(), 1);

        let slow = FleetSpec::new(vec![ev((3, Phase::C), 30.0, "18:00", "06:00", 0.0)], 250.0).unwrap();
        assert!(matches!(schedule_semi_smart(&slow), Err(Error::WindowTooLong { .. })));
    }

    #[test]
    fn frame_places_window() {
        let fleet = FleetSpec::new(vec![ev((1, Phase::A), 26.0, "17:00", "05:30", 65.0)], 3500.0).unwrap();
        let s = schedule_uncontrolled(&fleet);
        let frame = ev_power_frame(&s, &fleet, 19).unwrap();
        let on: Vec<usize> = (0..96).filter(|&t| frame.get(BusId(1), Phase::A, t) > 0.0).collect();
        assert_eq!(on, (68..77).collect::<Vec<_>>());
        assert!(on.iter().all(|&t| frame.get(BusId(1), Phase::A, t) == 3500.0));
        assert!((frame.energy_kwh() - 9.0 * 0.875).abs() < 1e-12);
        assert!(ev_power_frame(&s, &fleet, 0).is_err());
    }

    #[test]
    fn window_contains_wraps() {
        let w = ChargeWindow {
            start: hm("23:30"),
            slots: 4,
        };
        assert!(w.contains(hm("23:45")));
        assert!(w.contains(hm("00:15")));
        assert!(!w.contains(hm("00:30")));
        assert!(!w.contains(hm("23:15")));
    }

    #[test]
    fn zone_file_errors() {
        assert!(matches!(parse_zone_plan("1 23:30 1,2\n2 24:00 2\n", "z"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_zone_plan("1 25:00 1\n", "z"), Err(Error::Parse { line: 1, .. })));
    }
}
