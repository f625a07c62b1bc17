use serde::{Deserialize, Serialize};

use super::{slot_injections, ScenarioInputs};
use crate::charging::PowerFrame;
use crate::error::Result;
use crate::grid::Wire;
use crate::powerflow::{kcl_residual, load_power_mismatch, power_account, solve_direct, solve_sweep};

/// Largest allowed sweep/direct disagreement, pu.
pub const ORACLE_TOLERANCE_PU: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotCheck {
    pub label: String,
    pub slot: usize,
    pub sweep_iterations: usize,
    pub direct_iterations: usize,
    pub converged: bool,
    /// Largest componentwise voltage difference between the two solvers, pu.
    pub oracle_diff_pu: f64,
    /// Largest KCL mismatch of the sweep state, in multiples of the base current.
    pub kcl_residual_pu: f64,
    pub balance_error: f64,
    /// Largest gap between delivered and specified load power, VA.
    pub load_power_mismatch_va: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<SnapshotCheck>,
    pub passed: bool,
}

/// Solves the valley, median and peak slots of the base curve (households
/// only, drawn with `seed`) with both solvers and compares them.
pub fn validate(inputs: &ScenarioInputs, seed: u64) -> Result<ValidationReport> {
    let topology = &inputs.topology;
    let households = inputs.households_for(seed)?;
    let no_ev = PowerFrame::zero(topology.bus_count());
    let v_base = topology.v_base();
    let mut checks = Vec::new();
    for (label, slot) in ["valley", "shoulder", "peak"].into_iter().zip(inputs.curve.snapshot_slots()) {
        let inj = slot_injections(&households, &no_ev, slot);
        let sweep = solve_sweep(topology, &inj, &inputs.solver)?;
        let direct = solve_direct(topology, &inj, &inputs.solver)?;
        let mut diff: f64 = 0.0;
        for &bus in topology.buses() {
            for wire in Wire::ALL {
                diff = diff.max((sweep.voltage(bus, wire) - direct.voltage(bus, wire)).norm() / v_base);
            }
        }
        checks.push(SnapshotCheck {
            label: label.to_string(),
            slot,
            sweep_iterations: sweep.iterations,
            direct_iterations: direct.iterations,
            converged: sweep.converged && direct.converged,
            oracle_diff_pu: diff,
            kcl_residual_pu: kcl_residual(&sweep, topology) / topology.base_current(),
            balance_error: power_account(&sweep, topology, &inj).balance_error(),
            load_power_mismatch_va: load_power_mismatch(&sweep, topology, &inj),
        });
    }
    let passed = checks
        .iter()
        .all(|c| c.converged && c.oracle_diff_pu < ORACLE_TOLERANCE_PU);
    Ok(ValidationReport { checks, passed })
}
