use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{FleetSource, HouseholdModel, ScenarioInputs, Strategy};
use crate::charging::{load_zone_plan, ZonePlan};
use crate::error::{Error, Result};
use crate::grid::load_topology;
use crate::load::{load_curve, load_fleet, FleetDistribution, DEFAULT_CHARGE_POWER_W};
use crate::powerflow::SolverOptions;
use crate::time::TimeSlot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FleetSourceConfig {
    /// The built-in 34-vehicle fleet.
    Shipped,
    File { path: PathBuf },
    Sampled { penetration: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    /// One of `baseline`, `uncontrolled`, `timer`, `zoned`, `semismart`.
    pub name: String,
    pub timer_start: TimeSlot,
    /// Zone plan file; the shipped three-zone plan when absent.
    pub zones: Option<PathBuf>,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            name: "semismart".into(),
            timer_start: TimeSlot::MIDNIGHT,
            zones: None,
        }
    }
}

impl StrategyConfig {
    pub fn zone_plan(&self) -> Result<ZonePlan> {
        match &self.zones {
            Some(path) => load_zone_plan(path),
            None => Ok(crate::data::zones()),
        }
    }

    pub fn resolve(&self) -> Result<Strategy> {
        Ok(match self.name.as_str() {
            "baseline" => Strategy::Baseline,
            "uncontrolled" => Strategy::Uncontrolled,
            "timer" => Strategy::Timer {
                start: self.timer_start,
            },
            "zoned" => Strategy::Zoned {
                plan: self.zone_plan()?,
            },
            "semismart" | "semi-smart" => Strategy::SemiSmart,
            other => {
                return Err(Error::Invalid(format!(
                    "unknown strategy '{other}', expected one of {}",
                    Strategy::NAMES.join(", ")
                )))
            }
        })
    }
}

/// A scenario as described on the command line. Paths are resolved when
/// [`load_inputs`](Self::load_inputs) runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Feeder file; the shipped 19-bus feeder when absent.
    pub feeder: Option<PathBuf>,
    /// Base curve file; the shipped residential curve when absent.
    pub curve: Option<PathBuf>,
    pub fleet: FleetSourceConfig,
    pub strategy: StrategyConfig,
    pub seed: u64,
    pub trials: usize,
    /// Convergence tolerance in volts; `1e-6 * v_base` when absent.
    pub tolerance: Option<f64>,
    pub max_iterations: usize,
    pub sigma_fraction: f64,
    pub power_factor: f64,
    pub leading_power_factor: bool,
    pub charge_power_w: f64,
    pub out: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            feeder: None,
            curve: None,
            fleet: FleetSourceConfig::Shipped,
            strategy: StrategyConfig::default(),
            seed: 1,
            trials: 1,
            tolerance: None,
            max_iterations: SolverOptions::DEFAULT_MAX_ITERATIONS,
            sigma_fraction: 0.20,
            power_factor: 0.91,
            leading_power_factor: false,
            charge_power_w: DEFAULT_CHARGE_POWER_W,
            out: None,
        }
    }
}

impl ScenarioConfig {
    pub fn load_inputs(&self) -> Result<ScenarioInputs> {
        if self.trials == 0 {
            return Err(Error::Invalid("trials must be at least 1".into()));
        }
        let topology = match &self.feeder {
            Some(path) => load_topology(path)?,
            None => crate::data::feeder_19(),
        };
        let curve = match &self.curve {
            Some(path) => load_curve(path)?,
            None => crate::data::residential_curve(),
        };
        let fleet = match &self.fleet {
            FleetSourceConfig::Shipped => FleetSource::Fixed {
                fleet: crate::data::fleet_34().fleet,
            },
            FleetSourceConfig::File { path } => {
                let loaded = load_fleet(path)?;
                for w in &loaded.warnings {
                    log::warn!("{w}");
                }
                FleetSource::Fixed { fleet: loaded.fleet }
            }
            FleetSourceConfig::Sampled { penetration } => FleetSource::Sampled {
                penetration: *penetration,
                distribution: FleetDistribution::default(),
                charge_power_w: self.charge_power_w,
            },
        };
        let solver = SolverOptions {
            tolerance: self
                .tolerance
                .unwrap_or(SolverOptions::DEFAULT_RELATIVE_TOLERANCE * topology.v_base()),
            max_iterations: self.max_iterations,
        };
        Ok(ScenarioInputs {
            topology,
            curve,
            fleet,
            households: HouseholdModel {
                sigma_fraction: self.sigma_fraction,
                power_factor: crate::load::PowerFactor {
                    value: self.power_factor,
                    leading: self.leading_power_factor,
                },
            },
            solver,
        })
    }
}
