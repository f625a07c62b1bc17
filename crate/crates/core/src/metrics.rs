//! Day-level reductions of solved snapshots: losses, worst phase voltages and
//! neutral-point voltage.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BusId, NetworkTopology, Phase, Wire};
use crate::powerflow::{line_losses, NetworkState};
use crate::time::{SLOTS_PER_DAY, SLOT_HOURS};

/// A metric value with the bus and slot where it occurs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Located {
    pub value: f64,
    pub bus: BusId,
    pub slot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstVoltages {
    /// Minimum phase-to-neutral voltage of each phase over all buses and
    /// slots, found independently per phase, pu.
    pub per_phase: [Located; 3],
    pub overall: Located,
    pub overall_phase: Phase,
    /// All three phase voltages at the bus and slot of the overall minimum.
    pub at_overall: [f64; 3],
}

fn ensure_converged(states: &[NetworkState]) -> Result<()> {
    match states.iter().position(|s| !s.converged) {
        Some(slot) => Err(Error::NotConverged {
            slot,
            strategy: "metrics".into(),
            residual: states[slot].residual,
            iterations: states[slot].iterations,
        }),
        None => Ok(()),
    }
}

/// Resistive loss of each slot, kW: phase and neutral conductors, `|I|^2 R`.
pub fn slot_losses_kw(states: &[NetworkState], topology: &NetworkTopology) -> Vec<f64> {
    states
        .iter()
        .map(|s| line_losses(s, topology).re / 1000.0)
        .collect()
}

/// Total resistive loss over the horizon, kWh. Refuses unconverged slots.
pub fn energy_losses(states: &[NetworkState], topology: &NetworkTopology) -> Result<f64> {
    ensure_converged(states)?;
    Ok(slot_losses_kw(states, topology).iter().sum::<f64>() * SLOT_HOURS)
}

/// Loss of one slot as `Re(sum (V_from - V_to) conj(I))`, W. Must agree with
/// the `|I|^2 R` form whenever voltages and currents satisfy the line drops.
pub fn drop_losses_w(state: &NetworkState, topology: &NetworkTopology) -> f64 {
    let mut total = Complex64::new(0.0, 0.0);
    for (idx, line) in topology.lines().iter().enumerate() {
        for wire in Wire::ALL {
            let w = wire.index();
            let drop = state.v[line.from.index()][w] - state.v[line.to.index()][w];
            total += drop * state.i_line[idx][w].conj();
        }
    }
    total.re
}

pub fn worst_bus_voltages(states: &[NetworkState], topology: &NetworkTopology) -> WorstVoltages {
    let v_base = topology.v_base();
    let init = Located {
        value: f64::INFINITY,
        bus: BusId::SLACK,
        slot: 0,
    };
    let mut per_phase = [init; 3];
    for (slot, state) in states.iter().enumerate() {
        for &bus in topology.buses() {
            for phase in Phase::ALL {
                let v = state.phase_voltage_pu(bus, phase, v_base);
                let best = &mut per_phase[phase.index()];
                if v < best.value {
                    *best = Located { value: v, bus, slot };
                }
            }
        }
    }
    let overall_phase = Phase::ALL
        .into_iter()
        .min_by(|a, b| per_phase[a.index()].value.total_cmp(&per_phase[b.index()].value))
        .expect("three phases");
    let overall = per_phase[overall_phase.index()];
    let at_overall = if states.is_empty() {
        [f64::NAN; 3]
    } else {
        Phase::ALL.map(|p| states[overall.slot].phase_voltage_pu(overall.bus, p, v_base))
    };
    WorstVoltages {
        per_phase,
        overall,
        overall_phase,
        at_overall,
    }
}

pub fn max_neutral_voltage(states: &[NetworkState], topology: &NetworkTopology) -> Located {
    let v_base = topology.v_base();
    let mut best = Located {
        value: 0.0,
        bus: BusId::SLACK,
        slot: 0,
    };
    for (slot, state) in states.iter().enumerate() {
        for &bus in topology.buses() {
            let v = state.neutral_voltage_pu(bus, v_base);
            if v > best.value {
                best = Located { value: v, bus, slot };
            }
        }
    }
    best
}

/// Voltage magnitudes per (bus, wire, slot), pu. Phase wires hold
/// `|V_ph - V_n|`, the neutral wire holds `|V_n|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageProfiles {
    pub bus_count: usize,
    pub slots: usize,
    values: Vec<f64>,
}

impl VoltageProfiles {
    pub fn from_states(states: &[NetworkState], topology: &NetworkTopology) -> Self {
        let v_base = topology.v_base();
        let bus_count = topology.bus_count();
        let mut values = vec![0.0; bus_count * 4 * states.len()];
        for (slot, state) in states.iter().enumerate() {
            for &bus in topology.buses() {
                for wire in Wire::ALL {
                    let v = match wire {
                        Wire::Phase(p) => state.phase_voltage_pu(bus, p, v_base),
                        Wire::Neutral => state.neutral_voltage_pu(bus, v_base),
                    };
                    values[(bus.index() * 4 + wire.index()) * states.len() + slot] = v;
                }
            }
        }
        VoltageProfiles {
            bus_count,
            slots: states.len(),
            values,
        }
    }

    pub fn new(bus_count: usize, slots: usize) -> Self {
        VoltageProfiles {
            bus_count,
            slots,
            values: vec![0.0; bus_count * 4 * slots],
        }
    }

    pub fn get(&self, bus: BusId, wire: Wire, slot: usize) -> f64 {
        self.values[(bus.index() * 4 + wire.index()) * self.slots + slot]
    }

    pub fn set(&mut self, bus: BusId, wire: Wire, slot: usize, value: f64) {
        self.values[(bus.index() * 4 + wire.index()) * self.slots + slot] = value;
    }

    /// Day curve of one bus and wire.
    pub fn series(&self, bus: BusId, wire: Wire) -> &[f64] {
        let start = (bus.index() * 4 + wire.index()) * self.slots;
        &self.values[start..start + self.slots]
    }
}

/// Scalar results of one simulated day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub total_loss_kwh: f64,
    pub worst: WorstVoltages,
    pub max_neutral: Located,
}

impl ScenarioSummary {
    pub fn min_voltage_pu(&self) -> f64 {
        self.worst.overall.value
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub summary: ScenarioSummary,
    pub slot_losses_kw: Vec<f64>,
    pub profiles: VoltageProfiles,
}

impl ScenarioReport {
    pub fn from_states(states: &[NetworkState], topology: &NetworkTopology) -> Result<Self> {
        if states.len() != SLOTS_PER_DAY {
            return Err(Error::Invalid(format!(
                "a day has {SLOTS_PER_DAY} slots, got {} states",
                states.len()
            )));
        }
        let total_loss_kwh = energy_losses(states, topology)?;
        Ok(ScenarioReport {
            summary: ScenarioSummary {
                total_loss_kwh,
                worst: worst_bus_voltages(states, topology),
                max_neutral: max_neutral_voltage(states, topology),
            },
            slot_losses_kw: slot_losses_kw(states, topology),
            profiles: VoltageProfiles::from_states(states, topology),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scenario: String,
    pub total_loss_kwh: f64,
    /// `(loss - baseline) / baseline * 100`; negative is a reduction.
    pub loss_change_pct: f64,
    pub min_voltage_pu: f64,
    /// Change of the minimum voltage in percentage points of 1 pu.
    pub min_voltage_change_pp: f64,
    pub max_neutral_pu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: String,
    pub rows: Vec<ComparisonRow>,
}

/// Tabulates every scenario against the named baseline, keeping input order.
pub fn compare_scenarios(reports: &[(String, ScenarioSummary)], baseline: &str) -> Result<Comparison> {
    if reports.len() < 2 {
        return Err(Error::Invalid("comparison needs at least two scenarios".into()));
    }
    let base = reports
        .iter()
        .find(|(name, _)| name == baseline)
        .map(|(_, s)| *s)
        .ok_or_else(|| Error::MissingBaseline(baseline.to_string()))?;
    let rows = reports
        .iter()
        .map(|(name, s)| ComparisonRow {
            scenario: name.clone(),
            total_loss_kwh: s.total_loss_kwh,
            loss_change_pct: if base.total_loss_kwh > 0.0 {
                (s.total_loss_kwh - base.total_loss_kwh) / base.total_loss_kwh * 100.0
            } else {
                0.0
            },
            min_voltage_pu: s.min_voltage_pu(),
            min_voltage_change_pp: (s.min_voltage_pu() - base.min_voltage_pu()) * 100.0,
            max_neutral_pu: s.max_neutral.value,
        })
        .collect();
    Ok(Comparison {
        baseline: baseline.to_string(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::parse_topology;
    use crate::powerflow::{solve_sweep, BusInjection, SolverOptions};

    fn summary(loss: f64, vmin: f64) -> ScenarioSummary {
        let at = Located {
            value: vmin,
            bus: BusId(1),
            slot: 0,
        };
        ScenarioSummary {
            total_loss_kwh: loss,
            worst: WorstVoltages {
                per_phase: [at; 3],
                overall: at,
                overall_phase: Phase::A,
                at_overall: [vmin; 3],
            },
            max_neutral: at,
        }
    }

    #[test]
    fn zero_load_day() {
        let topo = parse_topology("1 2 0.1 0.05\n2 3 0.1 0.05\n", "t").unwrap();
        let state = solve_sweep(&topo, &BusInjection::zero(3), &SolverOptions::default()).unwrap();
        let states = vec![state; 96];
        assert_eq!(energy_losses(&states, &topo).unwrap(), 0.0);
        let worst = worst_bus_voltages(&states, &topo);
        for p in worst.per_phase {
            assert!((p.value - 1.0).abs() < 1e-15);
        }
        assert_eq!(max_neutral_voltage(&states, &topo).value, 0.0);
    }

    #[test]
    fn hand_computed_loss() {
        // 10 A on phase a returning on the neutral, 0.1 ohm each, for 4 slots
        let topo = parse_topology("1 2 0.1 0\n", "t").unwrap();
        let mut state = solve_sweep(&topo, &BusInjection::zero(2), &SolverOptions::default()).unwrap();
        state.i_line[0] = [
            Complex64::new(10.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(-10.0, 0.0),
        ];
        let idle = solve_sweep(&topo, &BusInjection::zero(2), &SolverOptions::default()).unwrap();
        let mut states = vec![idle; 96];
        for s in states.iter_mut().take(4) {
            *s = state.clone();
        }
        let kwh = energy_losses(&states, &topo).unwrap();
        assert!((kwh - 0.02).abs() < 1e-15, "{kwh}");
    }

    #[test]
    fn refuses_unconverged() {
        let topo = parse_topology("1 2 0.1 0\n", "t").unwrap();
        let mut state = solve_sweep(&topo, &BusInjection::zero(2), &SolverOptions::default()).unwrap();
        let good = state.clone();
        state.converged = false;
        let mut states = vec![good; 96];
        states[17] = state;
        assert!(matches!(
            energy_losses(&states, &topo),
            Err(Error::NotConverged { slot: 17, .. })
        ));
    }

    #[test]
    fn single_phase_load_raises_neutral() {
        let topo = parse_topology("1 2 0.1 0.05\n", "t").unwrap();
        let mut inj = BusInjection::zero(2);
        inj.set(BusId(2), Phase::C, 1500.0, 0.0);
        let state = solve_sweep(&topo, &inj, &SolverOptions::default()).unwrap();
        let m = max_neutral_voltage(&[state], &topo);
        assert!(m.value > 0.0);
        assert_eq!(m.bus, BusId(2));
    }

    #[test]
    fn comparison_percentages() {
        let reports = vec![
            ("B".to_string(), summary(287.249, 0.8962)),
            ("C".to_string(), summary(271.949, 0.8829)),
            ("E".to_string(), summary(256.240, 0.9121)),
        ];
        let cmp = compare_scenarios(&reports, "B").unwrap();
        assert_eq!(cmp.rows[0].loss_change_pct, 0.0);
        // (271.949 - 287.249) / 287.249 = -5.3264 %
        assert!((cmp.rows[1].loss_change_pct + 5.32638).abs() < 1e-4);
        // (256.240 - 287.249) / 287.249 = -10.7952 %
        assert!((cmp.rows[2].loss_change_pct + 10.79516).abs() < 1e-4);
        assert!((cmp.rows[2].min_voltage_change_pp - 1.59).abs() < 1e-9);
        assert!(matches!(compare_scenarios(&reports, "Z"), Err(Error::MissingBaseline(_))));

        let same = vec![("x".to_string(), summary(10.0, 0.9)), ("y".to_string(), summary(10.0, 0.9))];
        let cmp = compare_scenarios(&same, "x").unwrap();
        assert!(cmp.rows.iter().all(|r| r.loss_change_pct == 0.0 && r.min_voltage_change_pp == 0.0));
    }
}
