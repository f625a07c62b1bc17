use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{check_inputs, load_currents, BusInjection, NetworkState, SolverOptions};
use crate::error::{Error, Result};
use crate::grid::{BusId, NetworkTopology, Wire};

/// Dense nodal solve of the same load-flow equations.
///
/// Unknowns are the four wire voltages of every non-slack bus. The nodal
/// admittance matrix is factored once; each iteration refreshes the load
/// currents from the present voltages and solves `Y V = I_load + Y_s V_slack`.
/// Shares nothing with the sweep beyond the load model.
pub fn solve_direct(
    topology: &NetworkTopology,
    injections: &BusInjection,
    options: &SolverOptions,
) -> Result<NetworkState> {
    check_inputs(topology, injections, options)?;
    let mut state = NetworkState::flat_start(topology);
    let v_base = topology.v_base();
    let slack = topology.slack().wires();

    // node numbering: (bus - 2) * 4 + wire
    let unknowns = 4 * (topology.bus_count() - 1);
    let node = |bus: BusId, wire: usize| (bus.0 - 2) * 4 + wire;

    let mut y = DMatrix::<Complex64>::zeros(unknowns, unknowns);
    let mut source = DVector::<Complex64>::zeros(unknowns);
    for (idx, line) in topology.lines().iter().enumerate() {
        for wire in Wire::ALL {
            let w = wire.index();
            let adm = topology.series_impedance(idx, wire).inv();
            let to = node(line.to, w);
            y[(to, to)] += adm;
            if line.from.is_slack() {
                source[to] += adm * slack[w];
            } else {
                let from = node(line.from, w);
                y[(from, from)] += adm;
                y[(from, to)] -= adm;
                y[(to, from)] -= adm;
            }
        }
    }
    let lu = y.lu();

    for iteration in 1..=options.max_iterations {
        let mut rhs = source.clone();
        for &bus in topology.buses() {
            let currents = load_currents(
                bus,
                &state.v[bus.index()],
                injections.bus(bus),
                v_base,
                iteration,
            )?;
            state.i_load[bus.index()] = currents;
            if bus.is_slack() {
                continue;
            }
            for (w, i) in currents.iter().enumerate() {
                rhs[node(bus, w)] -= *i;
                rhs[node(bus, Wire::NEUTRAL_INDEX)] += *i;
            }
        }
        let solved = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Invalid("singular nodal admittance matrix".into()))?;

        let mut delta: f64 = 0.0;
        for &bus in topology.buses().iter().skip(1) {
            for w in 0..4 {
                let v = solved[node(bus, w)];
                delta = delta.max((v - state.v[bus.index()][w]).norm());
                state.v[bus.index()][w] = v;
            }
        }
        for (idx, line) in topology.lines().iter().enumerate() {
            for wire in Wire::ALL {
                let w = wire.index();
                let drop = state.v[line.from.index()][w] - state.v[line.to.index()][w];
                state.i_line[idx][w] = drop / topology.series_impedance(idx, wire);
            }
        }

        state.iterations = iteration;
        state.residual = delta;
        if delta < options.tolerance {
            state.converged = true;
            break;
        }
    }
    Ok(state)
}
