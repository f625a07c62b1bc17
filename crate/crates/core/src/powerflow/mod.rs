//! Single-snapshot load flow of the four-wire feeder.
//!
//! Loads are constant-PQ, connected phase to neutral. Each phase load current
//! returns on the neutral, so a bus injects `-I_ph` into each phase wire and
//! `+sum(I_ph)` into the neutral wire. Line currents are positive from parent
//! to child. Two solvers share the same fixed-point iteration on load
//! currents: [`solve_sweep`] walks the tree, [`solve_direct`] assembles a dense
//! nodal system and serves as the test oracle.

mod direct;
mod sweep;

pub use direct::solve_direct;
pub use sweep::solve_sweep;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BusId, NetworkTopology, Phase, Wire};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Complex power demand per (bus, phase), W + j var. Bus 1 loads are served
/// directly by the source and do not load any line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusInjection {
    power: Vec<[Complex64; 3]>,
}

impl BusInjection {
    pub fn zero(bus_count: usize) -> Self {
        BusInjection {
            power: vec![[ZERO; 3]; bus_count],
        }
    }

    pub fn bus_count(&self) -> usize {
        self.power.len()
    }

    pub fn set(&mut self, bus: BusId, phase: Phase, p: f64, q: f64) {
        self.power[bus.index()][phase.index()] = Complex64::new(p, q);
    }

    pub fn add(&mut self, bus: BusId, phase: Phase, p: f64, q: f64) {
        self.power[bus.index()][phase.index()] += Complex64::new(p, q);
    }

    pub fn get(&self, bus: BusId, phase: Phase) -> Complex64 {
        self.power[bus.index()][phase.index()]
    }

    pub fn bus(&self, bus: BusId) -> &[Complex64; 3] {
        &self.power[bus.index()]
    }

    pub fn total(&self) -> Complex64 {
        self.power.iter().flatten().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.power.iter().flatten().all(|s| s.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop once no bus/wire voltage moves by more than this between sweeps, volts.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl SolverOptions {
    pub const DEFAULT_MAX_ITERATIONS: usize = 100;
    pub const DEFAULT_RELATIVE_TOLERANCE: f64 = 1e-6;

    pub fn for_base(v_base: f64) -> Self {
        SolverOptions {
            tolerance: Self::DEFAULT_RELATIVE_TOLERANCE * v_base,
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self::for_base(220.0)
    }
}

/// Solved voltages and currents of one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    /// Bus voltages, wire order a, b, c, n.
    pub v: Vec<[Complex64; 4]>,
    /// Line currents, wire order a, b, c, n, positive parent to child.
    pub i_line: Vec<[Complex64; 4]>,
    /// Load currents per (bus, phase), phase to neutral.
    pub i_load: Vec<[Complex64; 3]>,
    pub converged: bool,
    pub iterations: usize,
    /// Largest voltage change of the final iteration, volts.
    pub residual: f64,
}

impl NetworkState {
    pub(crate) fn flat_start(topology: &NetworkTopology) -> Self {
        let slack = topology.slack().wires();
        NetworkState {
            v: vec![slack; topology.bus_count()],
            i_line: vec![[ZERO; 4]; topology.lines().len()],
            i_load: vec![[ZERO; 3]; topology.bus_count()],
            converged: false,
            iterations: 0,
            residual: f64::INFINITY,
        }
    }

    pub fn voltage(&self, bus: BusId, wire: Wire) -> Complex64 {
        self.v[bus.index()][wire.index()]
    }

    /// Phase-to-neutral voltage `V_ph - V_n`.
    pub fn phase_to_neutral(&self, bus: BusId, phase: Phase) -> Complex64 {
        let v = &self.v[bus.index()];
        v[phase.index()] - v[Wire::NEUTRAL_INDEX]
    }

    /// `|V_ph - V_n| / v_base`.
    pub fn phase_voltage_pu(&self, bus: BusId, phase: Phase, v_base: f64) -> f64 {
        self.phase_to_neutral(bus, phase).norm() / v_base
    }

    pub fn neutral_voltage_pu(&self, bus: BusId, v_base: f64) -> f64 {
        self.v[bus.index()][Wire::NEUTRAL_INDEX].norm() / v_base
    }
}

/// Load currents `conj(S / (V_ph - V_n))` for one bus. Fails below the
/// voltage floor of half the base.
pub(crate) fn load_currents(
    bus: BusId,
    v: &[Complex64; 4],
    power: &[Complex64; 3],
    v_base: f64,
    iteration: usize,
) -> Result<[Complex64; 3]> {
    let floor = 0.5 * v_base;
    let mut out = [ZERO; 3];
    for phase in Phase::ALL {
        let vpn = v[phase.index()] - v[Wire::NEUTRAL_INDEX];
        let magnitude = vpn.norm();
        if !(magnitude >= floor) {
            return Err(Error::VoltageCollapse {
                bus,
                phase: phase.label(),
                magnitude,
                iteration,
            });
        }
        out[phase.index()] = (power[phase.index()] / vpn).conj();
    }
    Ok(out)
}

pub(crate) fn check_inputs(
    topology: &NetworkTopology,
    injections: &BusInjection,
    options: &SolverOptions,
) -> Result<()> {
    if injections.bus_count() != topology.bus_count() {
        return Err(Error::Invalid(format!(
            "injections cover {} buses, feeder has {}",
            injections.bus_count(),
            topology.bus_count()
        )));
    }
    if !injections.is_finite() {
        return Err(Error::Invalid("injections must be finite".into()));
    }
    if !(options.tolerance > 0.0) {
        return Err(Error::Invalid(format!("tolerance must be positive, got {}", options.tolerance)));
    }
    if options.max_iterations == 0 {
        return Err(Error::Invalid("max_iterations must be at least 1".into()));
    }
    Ok(())
}

/// Largest KCL mismatch over every non-slack bus and wire, amps: current in
/// from the parent line minus currents out to children minus the load draw.
/// Also checks the per-line wire balance (phase currents return on the neutral).
pub fn kcl_residual(state: &NetworkState, topology: &NetworkTopology) -> f64 {
    let mut worst: f64 = 0.0;
    for &bus in topology.buses() {
        let Some(parent) = topology.parent_line(bus) else {
            continue;
        };
        let load = &state.i_load[bus.index()];
        let draw = [load[0], load[1], load[2], -(load[0] + load[1] + load[2])];
        for w in 0..4 {
            let outgoing: Complex64 = topology
                .child_lines(bus)
                .iter()
                .map(|&l| state.i_line[l][w])
                .sum();
            let mismatch = state.i_line[parent][w] - outgoing - draw[w];
            worst = worst.max(mismatch.norm());
        }
    }
    for current in &state.i_line {
        worst = worst.max(current.iter().sum::<Complex64>().norm());
    }
    worst
}

/// Largest `|(V_ph - V_n) conj(I_load) - S|` over all loads, VA. Measures how
/// well the reported voltages reproduce the specified constant-PQ demand.
pub fn load_power_mismatch(state: &NetworkState, topology: &NetworkTopology, injections: &BusInjection) -> f64 {
    let mut worst: f64 = 0.0;
    for &bus in topology.buses() {
        for phase in Phase::ALL {
            let delivered = state.phase_to_neutral(bus, phase) * state.i_load[bus.index()][phase.index()].conj();
            worst = worst.max((delivered - injections.get(bus, phase)).norm());
        }
    }
    worst
}

/// Complex power accounts of a solved snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerAccount {
    /// Power leaving the source: slack-bus loads plus the head of every feeder line.
    pub slack: Complex64,
    /// Power delivered to loads at the reported voltages.
    pub delivered: Complex64,
    /// Specified demand.
    pub specified: Complex64,
    /// `sum Z |I|^2` over all line conductors.
    pub losses: Complex64,
}

impl PowerAccount {
    /// Relative imbalance `|slack - delivered - losses| / |slack|`, worst of Re and Im.
    pub fn balance_error(&self) -> f64 {
        let gap = self.slack - self.delivered - self.losses;
        let scale = self.slack.norm().max(f64::MIN_POSITIVE);
        gap.re.abs().max(gap.im.abs()) / scale
    }

    /// Same as [`balance_error`](Self::balance_error) but against the specified demand.
    pub fn specified_balance_error(&self) -> f64 {
        let gap = self.slack - self.specified - self.losses;
        let scale = self.slack.norm().max(f64::MIN_POSITIVE);
        gap.re.abs().max(gap.im.abs()) / scale
    }
}

pub fn power_account(state: &NetworkState, topology: &NetworkTopology, injections: &BusInjection) -> PowerAccount {
    let slack_bus = BusId::SLACK;
    let mut slack = ZERO;
    let mut delivered = ZERO;
    for &bus in topology.buses() {
        for phase in Phase::ALL {
            let s = state.phase_to_neutral(bus, phase) * state.i_load[bus.index()][phase.index()].conj();
            delivered += s;
            if bus == slack_bus {
                slack += s;
            }
        }
    }
    let v_slack = &state.v[slack_bus.index()];
    for &line in topology.child_lines(slack_bus) {
        for w in 0..4 {
            slack += v_slack[w] * state.i_line[line][w].conj();
        }
    }
    PowerAccount {
        slack,
        delivered,
        specified: injections.total(),
        losses: line_losses(state, topology),
    }
}

/// Complex series losses `sum Z |I|^2` of one snapshot, W + j var.
pub fn line_losses(state: &NetworkState, topology: &NetworkTopology) -> Complex64 {
    let mut total = ZERO;
    for (idx, currents) in state.i_line.iter().enumerate() {
        for wire in Wire::ALL {
            total += topology.series_impedance(idx, wire) * currents[wire.index()].norm_sqr();
        }
    }
    total
}
