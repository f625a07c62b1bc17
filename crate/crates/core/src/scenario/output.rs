//! Run directories. CSV column orders are part of the interface:
//!
//! * `voltages.csv` — `trial,bus,wire,slot,v_pu` (phase wires are
//!   phase-to-neutral magnitudes, wire `n` is the neutral-point magnitude)
//! * `currents.csv` — `trial,from,to,wire,slot,i_abs_a,i_re_a,i_im_a`
//! * `losses.csv` — `trial,slot,loss_kw`
//! * `schedule.csv` — `trial,ev,start,end,slots` (empty for the baseline)
//!
//! Numbers are written with nine significant digits so identical runs give
//! identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ScenarioConfig, ScenarioRun, SweepRun};
use crate::error::{Error, Result};
use crate::grid::{NetworkTopology, Wire};
use crate::metrics::Comparison;

/// Decimal text with nine significant digits.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (8 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Provenance written next to every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: ScenarioConfig,
    pub trial_seeds: Vec<u64>,
    /// Wall-clock metadata; the only nondeterministic content of a run.
    pub started_unix_s: u64,
    pub elapsed_s: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: &ScenarioConfig) -> Self {
        let started_unix_s = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunManifest {
            tool: "evfeeder".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
            trial_seeds: (0..config.trials).map(|k| super::trial_seed(config.seed, k)).collect(),
            started_unix_s,
            elapsed_s: 0.0,
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct TrialSummary<'a> {
    seed: u64,
    vehicles: usize,
    summary: &'a crate::metrics::ScenarioSummary,
    warnings: &'a [String],
}

#[derive(Serialize)]
struct RunSummary<'a> {
    scenario: String,
    strategy: &'a super::Strategy,
    stats: &'a super::TrialStats,
    trials: Vec<TrialSummary<'a>>,
}

pub fn voltages_csv(run: &ScenarioRun, topology: &NetworkTopology) -> String {
    let mut out = String::from("trial,bus,wire,slot,v_pu\n");
    for (k, trial) in run.trials.iter().enumerate() {
        let profiles = &trial.report.profiles;
        for &bus in topology.buses() {
            for wire in Wire::ALL {
                for (slot, v) in profiles.series(bus, wire).iter().enumerate() {
                    let _ = writeln!(out, "{k},{bus},{wire},{slot},{}", format_sig9(*v));
                }
            }
        }
    }
    out
}

pub fn currents_csv(run: &ScenarioRun, topology: &NetworkTopology) -> String {
    let mut out = String::from("trial,from,to,wire,slot,i_abs_a,i_re_a,i_im_a\n");
    for (k, trial) in run.trials.iter().enumerate() {
        for (idx, line) in topology.lines().iter().enumerate() {
            for wire in Wire::ALL {
                for (slot, state) in trial.states.iter().enumerate() {
                    let i = state.i_line[idx][wire.index()];
                    let _ = writeln!(
                        out,
                        "{k},{},{},{wire},{slot},{},{},{}",
                        line.from,
                        line.to,
                        format_sig9(i.norm()),
                        format_sig9(i.re),
                        format_sig9(i.im)
                    );
                }
            }
        }
    }
    out
}

pub fn losses_csv(run: &ScenarioRun) -> String {
    let mut out = String::from("trial,slot,loss_kw\n");
    for (k, trial) in run.trials.iter().enumerate() {
        for (slot, kw) in trial.report.slot_losses_kw.iter().enumerate() {
            let _ = writeln!(out, "{k},{slot},{}", format_sig9(*kw));
        }
    }
    out
}

pub fn schedule_csv(run: &ScenarioRun) -> String {
    let mut out = String::from("trial,ev,start,end,slots\n");
    for (k, trial) in run.trials.iter().enumerate() {
        let Some(schedule) = &trial.schedule else {
            continue;
        };
        for (ev, w) in trial.fleet.vehicles.iter().zip(&schedule.windows) {
            let _ = writeln!(out, "{k},{},{},{},{}", ev.label(), w.start, w.end(), w.slots);
        }
    }
    out
}

pub fn comparison_csv(cmp: &Comparison) -> String {
    let mut out = format!(
        "scenario,total_loss_kwh,loss_change_pct_vs_{0},min_voltage_pu,min_voltage_change_pp_vs_{0},max_neutral_pu\n",
        cmp.baseline
    );
    for r in &cmp.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.scenario,
            format_sig9(r.total_loss_kwh),
            format_sig9(r.loss_change_pct),
            format_sig9(r.min_voltage_pu),
            format_sig9(r.min_voltage_change_pp),
            format_sig9(r.max_neutral_pu)
        );
    }
    out
}

/// Writes one scenario's files into `dir`.
pub fn write_run(dir: &Path, run: &ScenarioRun, topology: &NetworkTopology, manifest: Option<&RunManifest>) -> Result<()> {
    create_dir(dir)?;
    let summary = RunSummary {
        scenario: run.label(),
        strategy: &run.strategy,
        stats: &run.stats,
        trials: run
            .trials
            .iter()
            .map(|t| TrialSummary {
                seed: t.seed,
                vehicles: t.fleet.len(),
                summary: &t.report.summary,
                warnings: t.schedule.as_ref().map(|s| s.warnings.as_slice()).unwrap_or(&[]),
            })
            .collect(),
    };
    write_file(&dir.join("summary.json"), &serde_json::to_string_pretty(&summary)?)?;
    write_file(&dir.join("voltages.csv"), &voltages_csv(run, topology))?;
    write_file(&dir.join("currents.csv"), &currents_csv(run, topology))?;
    write_file(&dir.join("losses.csv"), &losses_csv(run))?;
    write_file(&dir.join("schedule.csv"), &schedule_csv(run))?;
    if let Some(m) = manifest {
        write_file(&dir.join("manifest.json"), &serde_json::to_string_pretty(m)?)?;
    }
    Ok(())
}

/// Writes every mode into its own subdirectory plus the comparison tables.
pub fn write_sweep(dir: &Path, sweep: &SweepRun, topology: &NetworkTopology, manifest: Option<&RunManifest>) -> Result<()> {
    create_dir(dir)?;
    for run in &sweep.runs {
        write_run(&dir.join(run.label()), run, topology, None)?;
    }
    write_file(&dir.join("comparison.csv"), &comparison_csv(&sweep.comparison))?;
    write_file(
        &dir.join("comparison-vs-baseline.csv"),
        &comparison_csv(&sweep.against_baseline),
    )?;
    write_file(
        &dir.join("comparison.json"),
        &serde_json::to_string_pretty(&[&sweep.comparison, &sweep.against_baseline])?,
    )?;
    if let Some(m) = manifest {
        write_file(&dir.join("manifest.json"), &serde_json::to_string_pretty(m)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(-0.0), "0");
        assert_eq!(format_sig9(1.0), "1.00000000");
        assert_eq!(format_sig9(0.123456789123), "0.123456789");
        assert_eq!(format_sig9(287.2491234567), "287.249123");
        assert_eq!(format_sig9(-12345678912.0), "-12345678912");
        assert_eq!(format_sig9(3.2e-7), "0.000000320000000");
    }
}
