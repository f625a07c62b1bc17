//! Day simulations: household samples plus an EV charging strategy, solved
//! slot by slot and reduced to a report.

mod config;
mod output;
mod validate;

pub use config::{FleetSourceConfig, ScenarioConfig, StrategyConfig};
pub use output::{format_sig9, write_run, write_sweep, RunManifest};
pub use validate::{validate, SnapshotCheck, ValidationReport, ORACLE_TOLERANCE_PU};

use serde::{Deserialize, Serialize};

use crate::charging::{
    ev_power_frame, schedule_semi_smart, schedule_timer, schedule_uncontrolled, schedule_zoned, ChargeSchedule,
    PowerFrame, ZonePlan,
};
use crate::error::{Error, Result};
use crate::grid::NetworkTopology;
use crate::load::{
    consumers, sample_fleet, sample_household_loads, BaseLoadCurve, FleetDistribution, FleetSpec, HouseholdLoad,
    PowerFactor,
};
use crate::metrics::{compare_scenarios, Comparison, ScenarioReport};
use crate::powerflow::{solve_sweep, BusInjection, NetworkState, SolverOptions};
use crate::time::{TimeSlot, SLOTS_PER_DAY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Strategy {
    /// No EVs charge at all.
    Baseline,
    /// Charge on arrival.
    Uncontrolled,
    /// Everyone starts at one clock time.
    Timer { start: TimeSlot },
    /// Start time per zone of buses.
    Zoned { plan: ZonePlan },
    /// Window ends at departure.
    #[serde(rename = "semismart")]
    SemiSmart,
}

impl Strategy {
    pub const NAMES: [&'static str; 5] = ["baseline", "uncontrolled", "timer", "zoned", "semismart"];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Baseline => "baseline",
            Strategy::Uncontrolled => "uncontrolled",
            Strategy::Timer { .. } => "timer",
            Strategy::Zoned { .. } => "zoned",
            Strategy::SemiSmart => "semismart",
        }
    }

    /// Scenario letter used in comparisons (A for the baseline through E).
    pub fn letter(&self) -> char {
        match self {
            Strategy::Baseline => 'A',
            Strategy::Uncontrolled => 'B',
            Strategy::Timer { .. } => 'C',
            Strategy::Zoned { .. } => 'D',
            Strategy::SemiSmart => 'E',
        }
    }

    /// The five strategies in comparison order.
    pub fn all(timer_start: TimeSlot, plan: ZonePlan) -> Vec<Strategy> {
        vec![
            Strategy::Baseline,
            Strategy::Uncontrolled,
            Strategy::Timer { start: timer_start },
            Strategy::Zoned { plan },
            Strategy::SemiSmart,
        ]
    }

    /// Charging windows for `fleet`; `None` for the baseline.
    pub fn schedule(&self, fleet: &FleetSpec) -> Result<Option<ChargeSchedule>> {
        Ok(match self {
            Strategy::Baseline => None,
            Strategy::Uncontrolled => Some(schedule_uncontrolled(fleet)),
            Strategy::Timer { start } => Some(schedule_timer(fleet, *start)),
            Strategy::Zoned { plan } => Some(schedule_zoned(fleet, plan)?),
            Strategy::SemiSmart => Some(schedule_semi_smart(fleet)?),
        })
    }
}

/// Where EVs come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FleetSource {
    /// A fixed fleet, identical in every trial.
    Fixed { fleet: FleetSpec },
    /// Resampled per trial from the trial seed.
    Sampled {
        penetration: f64,
        distribution: FleetDistribution,
        charge_power_w: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HouseholdModel {
    pub sigma_fraction: f64,
    pub power_factor: PowerFactor,
}

impl Default for HouseholdModel {
    fn default() -> Self {
        HouseholdModel {
            sigma_fraction: 0.20,
            power_factor: PowerFactor::default(),
        }
    }
}

/// Everything a day simulation needs, already loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioInputs {
    pub topology: NetworkTopology,
    pub curve: BaseLoadCurve,
    pub fleet: FleetSource,
    pub households: HouseholdModel,
    pub solver: SolverOptions,
}

impl ScenarioInputs {
    /// Shipped 19-bus feeder, residential curve and fixed 34-EV fleet.
    pub fn nineteen_bus() -> Self {
        let topology = crate::data::feeder_19();
        let solver = SolverOptions::for_base(topology.v_base());
        ScenarioInputs {
            topology,
            curve: crate::data::residential_curve(),
            fleet: FleetSource::Fixed {
                fleet: crate::data::fleet_34().fleet,
            },
            households: HouseholdModel::default(),
            solver,
        }
    }

    pub fn households_for(&self, seed: u64) -> Result<Vec<HouseholdLoad>> {
        sample_household_loads(
            &self.curve,
            &consumers(&self.topology),
            self.households.sigma_fraction,
            self.households.power_factor,
            seed,
        )
    }

    pub fn fleet_for(&self, seed: u64) -> Result<FleetSpec> {
        match &self.fleet {
            FleetSource::Fixed { fleet } => Ok(fleet.clone()),
            FleetSource::Sampled {
                penetration,
                distribution,
                charge_power_w,
            } => sample_fleet(
                &consumers(&self.topology),
                *penetration,
                distribution,
                *charge_power_w,
                seed,
            ),
        }
    }
}

/// Per-slot demand: household P and Q plus EV active power.
pub fn slot_injections(households: &[HouseholdLoad], ev: &PowerFrame, slot: usize) -> BusInjection {
    let mut inj = BusInjection::zero(ev.bus_count());
    for h in households {
        inj.add(h.bus, h.phase, h.p[slot] + ev.get(h.bus, h.phase, slot), h.q[slot]);
    }
    inj
}

/// Solves every slot of the day; any failure is tagged with its slot.
pub fn solve_day(
    topology: &NetworkTopology,
    injections: &[BusInjection],
    options: &SolverOptions,
    strategy: &str,
) -> Result<Vec<NetworkState>> {
    let solve = |(slot, inj): (usize, &BusInjection)| -> Result<NetworkState> {
        let state = solve_sweep(topology, inj, options).map_err(|e| Error::SlotFailed {
            slot,
            strategy: strategy.to_string(),
            source: Box::new(e),
        })?;
        if !state.converged {
            return Err(Error::NotConverged {
                slot,
                strategy: strategy.to_string(),
                residual: state.residual,
                iterations: state.iterations,
            });
        }
        Ok(state)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        injections.par_iter().enumerate().map(solve).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        injections.iter().enumerate().map(solve).collect()
    }
}

/// One simulated day.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub seed: u64,
    pub fleet: FleetSpec,
    pub schedule: Option<ChargeSchedule>,
    pub households: Vec<HouseholdLoad>,
    pub ev_frame: PowerFrame,
    pub states: Vec<NetworkState>,
    pub report: ScenarioReport,
}

pub fn simulate_day(inputs: &ScenarioInputs, strategy: &Strategy, seed: u64) -> Result<TrialResult> {
    let households = inputs.households_for(seed)?;
    let fleet = inputs.fleet_for(seed)?;
    let bus_count = inputs.topology.bus_count();
    let schedule = strategy.schedule(&fleet)?;
    let ev_frame = match &schedule {
        Some(s) => ev_power_frame(s, &fleet, bus_count)?,
        None => PowerFrame::zero(bus_count),
    };
    let injections: Vec<BusInjection> = (0..SLOTS_PER_DAY)
        .map(|slot| slot_injections(&households, &ev_frame, slot))
        .collect();
    let states = solve_day(&inputs.topology, &injections, &inputs.solver, strategy.name())?;
    let report = ScenarioReport::from_states(&states, &inputs.topology)?;
    Ok(TrialResult {
        seed,
        fleet,
        schedule,
        households,
        ev_frame,
        states,
        report,
    })
}

/// Seed of trial `k`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_add(trial as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    /// Sample standard deviation; zero for a single trial.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Spread {
            mean,
            sd,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub trials: usize,
    pub total_loss_kwh: Spread,
    pub min_voltage_pu: Spread,
    pub max_neutral_pu: Spread,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub strategy: Strategy,
    pub trials: Vec<TrialResult>,
    pub stats: TrialStats,
}

impl ScenarioRun {
    /// Scenario label such as `B-uncontrolled`.
    pub fn label(&self) -> String {
        format!("{}-{}", self.strategy.letter(), self.strategy.name())
    }
}

pub fn simulate_scenario(inputs: &ScenarioInputs, strategy: &Strategy, seed: u64, trials: usize) -> Result<ScenarioRun> {
    if trials == 0 {
        return Err(Error::Invalid("trials must be at least 1".into()));
    }
    let results = (0..trials)
        .map(|k| simulate_day(inputs, strategy, trial_seed(seed, k)))
        .collect::<Result<Vec<_>>>()?;
    let pick = |f: fn(&TrialResult) -> f64| Spread::of(&results.iter().map(f).collect::<Vec<_>>());
    let stats = TrialStats {
        trials,
        total_loss_kwh: pick(|t| t.report.summary.total_loss_kwh),
        min_voltage_pu: pick(|t| t.report.summary.min_voltage_pu()),
        max_neutral_pu: pick(|t| t.report.summary.max_neutral.value),
    };
    Ok(ScenarioRun {
        strategy: strategy.clone(),
        trials: results,
        stats,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub runs: Vec<ScenarioRun>,
    /// First-trial comparison of every mode against the uncontrolled case.
    pub comparison: Comparison,
    /// Same rows against the no-EV baseline.
    pub against_baseline: Comparison,
}

/// Runs all five strategies on identical household draws.
pub fn simulate_sweep(
    inputs: &ScenarioInputs,
    timer_start: TimeSlot,
    plan: ZonePlan,
    seed: u64,
    trials: usize,
) -> Result<SweepRun> {
    let runs = Strategy::all(timer_start, plan)
        .iter()
        .map(|s| simulate_scenario(inputs, s, seed, trials))
        .collect::<Result<Vec<_>>>()?;
    let summaries: Vec<_> = runs
        .iter()
        .map(|r| (r.label(), r.trials[0].report.summary))
        .collect();
    let comparison = compare_scenarios(&summaries, &runs[1].label())?;
    let against_baseline = compare_scenarios(&summaries, &runs[0].label())?;
    Ok(SweepRun {
        runs,
        comparison,
        against_baseline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_has_no_ev_power() {
        let inputs = ScenarioInputs::nineteen_bus();
        let fleet = inputs.fleet_for(1).unwrap();
        assert!(Strategy::Baseline.schedule(&fleet).unwrap().is_none());
    }

    #[test]
    fn spread_statistics() {
        let s = Spread::of(&[1.0, 2.0, 3.0]);
        assert_eq!((s.mean, s.sd, s.min, s.max), (2.0, 1.0, 1.0, 3.0));
        assert_eq!(Spread::of(&[4.0]).sd, 0.0);
    }

    #[test]
    fn zero_trials_rejected() {
        let inputs = ScenarioInputs::nineteen_bus();
        assert!(simulate_scenario(&inputs, &Strategy::Baseline, 0, 0).is_err());
    }

    #[test]
    fn strategy_names_match_letters() {
        let all = Strategy::all(TimeSlot::MIDNIGHT, crate::data::zones());
        let names: Vec<_> = all.iter().map(|s| s.name()).collect();
        assert_eq!(names, Strategy::NAMES);
        let letters: String = all.iter().map(|s| s.letter()).collect();
        assert_eq!(letters, "ABCDE");
    }
}
