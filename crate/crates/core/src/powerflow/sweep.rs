use num_complex::Complex64;

use super::{check_inputs, load_currents, BusInjection, NetworkState, SolverOptions};
use crate::error::Result;
use crate::grid::{NetworkTopology, Wire};

/// Backward-forward sweep from a flat start.
///
/// Each iteration computes load currents from the present voltages, sums
/// them leaf to root into line currents, then drops voltages root to leaf
/// along every wire. Stops when the largest voltage change falls under
/// `options.tolerance`; hitting `max_iterations` returns the last state with
/// `converged = false`.
pub fn solve_sweep(
    topology: &NetworkTopology,
    injections: &BusInjection,
    options: &SolverOptions,
) -> Result<NetworkState> {
    check_inputs(topology, injections, options)?;
    let mut state = NetworkState::flat_start(topology);
    let v_base = topology.v_base();

    for iteration in 1..=options.max_iterations {
        for &bus in topology.order() {
            state.i_load[bus.index()] = load_currents(
                bus,
                &state.v[bus.index()],
                injections.bus(bus),
                v_base,
                iteration,
            )?;
        }

        // backward: children are visited before their parent
        for &bus in topology.order().iter().rev() {
            let Some(line) = topology.parent_line(bus) else {
                continue;
            };
            let load = state.i_load[bus.index()];
            let mut current = [load[0], load[1], load[2], -(load[0] + load[1] + load[2])];
            for &child in topology.child_lines(bus) {
                for (acc, c) in current.iter_mut().zip(state.i_line[child]) {
                    *acc += c;
                }
            }
            state.i_line[line] = current;
        }

        // forward
        let mut delta: f64 = 0.0;
        for &bus in topology.order() {
            let Some(line) = topology.parent_line(bus) else {
                continue;
            };
            let upstream = state.v[topology.lines()[line].from.index()];
            let mut next = [Complex64::new(0.0, 0.0); 4];
            for wire in Wire::ALL {
                let w = wire.index();
                next[w] = upstream[w] - topology.series_impedance(line, wire) * state.i_line[line][w];
                delta = delta.max((next[w] - state.v[bus.index()][w]).norm());
            }
            state.v[bus.index()] = next;
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
