//! Browser bindings. Every export takes plain strings and numbers and returns
//! a JSON string, so the page needs no generated glue beyond wasm-bindgen's.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use evfeeder_core::grid::{Phase, Wire};
use evfeeder_core::metrics::{ComparisonRow, Located};
use evfeeder_core::scenario::{simulate_day, simulate_sweep, ScenarioInputs, StrategyConfig};
use evfeeder_core::time::{TimeSlot, SLOTS_PER_DAY};

fn strategy(name: &str, timer_start: &str) -> Result<evfeeder_core::scenario::Strategy, String> {
    let timer_start = TimeSlot::parse(timer_start).ok_or_else(|| format!("bad timer start '{timer_start}'"))?;
    StrategyConfig {
        name: name.to_string(),
        timer_start,
        zones: None,
    }
    .resolve()
    .map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct DayView {
    label: String,
    total_loss_kwh: f64,
    min_voltage_pu: f64,
    max_neutral: Located,
    worst: Located,
    worst_phase: char,
    /// |V_ph - V_n| at the worst bus, one series per phase.
    worst_bus_series: [Vec<f64>; 3],
    neutral_series: Vec<f64>,
    slot_losses_kw: Vec<f64>,
    ev_kw: Vec<f64>,
    /// Per-bus phase voltages at the slot of the overall minimum.
    profile_at_worst: Vec<[f64; 3]>,
}

pub fn simulate_json(name: &str, seed: u64, timer_start: &str) -> Result<String, String> {
    let inputs = ScenarioInputs::nineteen_bus();
    let strategy = strategy(name, timer_start)?;
    let day = simulate_day(&inputs, &strategy, seed).map_err(|e| e.to_string())?;
    let report = &day.report;
    let summary = &report.summary;
    let worst = summary.worst.overall;
    let profiles = &report.profiles;
    let topo = &inputs.topology;
    let view = DayView {
        label: format!("{}-{}", strategy.letter(), strategy.name()),
        total_loss_kwh: summary.total_loss_kwh,
        min_voltage_pu: summary.min_voltage_pu(),
        max_neutral: summary.max_neutral,
        worst,
        worst_phase: summary.worst.overall_phase.label(),
        worst_bus_series: Phase::ALL.map(|p| profiles.series(worst.bus, Wire::Phase(p)).to_vec()),
        neutral_series: profiles.series(worst.bus, Wire::Neutral).to_vec(),
        slot_losses_kw: report.slot_losses_kw.clone(),
        ev_kw: (0..SLOTS_PER_DAY).map(|s| day.ev_frame.total_at(s) / 1000.0).collect(),
        profile_at_worst: topo
            .buses()
            .iter()
            .map(|&bus| Phase::ALL.map(|p| profiles.get(bus, Wire::Phase(p), worst.slot)))
            .collect(),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

pub fn compare_json(seed: u64, timer_start: &str) -> Result<String, String> {
    let inputs = ScenarioInputs::nineteen_bus();
    let start = TimeSlot::parse(timer_start).ok_or_else(|| format!("bad timer start '{timer_start}'"))?;
    let sweep = simulate_sweep(&inputs, start, evfeeder_core::data::zones(), seed, 1).map_err(|e| e.to_string())?;
    let rows: &[ComparisonRow] = &sweep.comparison.rows;
    serde_json::to_string(rows).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct WindowView {
    bus: usize,
    phase: char,
    arrival: String,
    departure: String,
    start: String,
    end: String,
    start_slot: usize,
    slots: u32,
    delivered_kwh: f64,
}

pub fn windows_json(name: &str, timer_start: &str) -> Result<String, String> {
    let fleet = evfeeder_core::data::fleet_34().fleet;
    let schedule = match strategy(name, timer_start)?.schedule(&fleet).map_err(|e| e.to_string())? {
        Some(s) => s,
        None => return Ok("[]".into()),
    };
    let views: Vec<WindowView> = fleet
        .vehicles
        .iter()
        .zip(&schedule.windows)
        .zip(schedule.delivered_kwh())
        .map(|((ev, w), kwh)| WindowView {
            bus: ev.bus.0,
            phase: ev.phase.label(),
            arrival: ev.arrival.to_string(),
            departure: ev.departure.to_string(),
            start: w.start.to_string(),
            end: w.end().to_string(),
            start_slot: w.start.index(),
            slots: w.slots,
            delivered_kwh: kwh,
        })
        .collect();
    serde_json::to_string(&views).map_err(|e| e.to_string())
}

/// One day of the shipped feeder under a strategy.
#[wasm_bindgen]
pub fn simulate(strategy: &str, seed: u32, timer_start: &str) -> Result<String, JsError> {
    simulate_json(strategy, u64::from(seed), timer_start).map_err(|e| JsError::new(&e))
}

/// All five strategies on the same household draws.
#[wasm_bindgen]
pub fn compare(seed: u32, timer_start: &str) -> Result<String, JsError> {
    compare_json(u64::from(seed), timer_start).map_err(|e| JsError::new(&e))
}

/// Charging window of every shipped EV.
#[wasm_bindgen]
pub fn windows(strategy: &str, timer_start: &str) -> Result<String, JsError> {
    windows_json(strategy, timer_start).map_err(|e| JsError::new(&e))
}
