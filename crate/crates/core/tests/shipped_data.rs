use evfeeder_core::grid::{load_topology, parse_topology, serialize_topology, BusId, Phase};
use evfeeder_core::load::{load_curve, load_fleet, BaseLoadCurve, PowerFactor};
use evfeeder_core::powerflow::{solve_direct, BusInjection, SolverOptions};
use num_complex::Complex64;

fn workspace_file(rel: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

// published branch rows as printed: from, to, r, x.
const TABLE: [(usize, usize, f64, f64); 18] = [
    (1, 2, 0.0415, 0.0145),
    (2, 3, 0.0424, 0.0189),
    (3, 4, 0.0444, 0.0198),
    (4, 5, 0.0369, 0.0165),
    (5, 6, 0.0520, 0.0232),
    (6, 7, 0.0524, 0.0234),
    (7, 8, 0.0005, 0.0002),
    (7, 9, 0.2002, 0.0199),
    (7, 10, 1.7340, 0.1729),
    (6, 11, 0.2607, 0.0260),
    (6, 12, 1.3605, 0.1357),
    (4, 13, 0.1400, 0.0140),
    (3, 14, 0.7763, 0.0774),
    (2, 15, 0.5977, 0.0596),
    (1, 16, 0.1423, 0.0496),
    (16, 17, 0.0837, 0.0292),
    (17, 18, 0.3123, 0.0311),
    (1, 19, 0.0163, 0.0062),
];

#[test]
fn feeder_file_keeps_the_tabulated_rows() {
    let topo = load_topology(workspace_file("feeders/lv19.txt")).unwrap();
    assert_eq!(topo, evfeeder_core::data::feeder_19());
    assert_eq!(topo.bus_count(), 19);
    assert_eq!(topo.lines().len(), 18);
    for (line, &(from, to, r, x)) in topo.lines().iter().zip(TABLE.iter()) {
        assert_eq!((line.from, line.to), (BusId(from), BusId(to)));
        assert_eq!(line.z_phase, Complex64::new(r, x));
        assert_eq!(line.z_neutral, line.z_phase);
    }
    let r_sum: f64 = topo.lines().iter().map(|l| l.z_phase.re).sum();
    assert!((r_sum - 5.8941).abs() < 1e-12, "{r_sum}");
    assert_eq!(topo.slack_voltage(), 220.0);
    assert_eq!(topo.transformer_reactance(), Some(0.0654));
    assert_eq!(topo.children(BusId(7)).unwrap(), &[BusId(8), BusId(9), BusId(10)]);
    assert_eq!(topo.children(BusId(1)).unwrap(), &[BusId(2), BusId(16), BusId(19)]);
    assert!(topo.children(BusId(10)).unwrap().is_empty());
    assert_eq!(topo.parent(BusId(18)), Some(BusId(17)));

    let reparsed = parse_topology(&serialize_topology(&topo), "round trip").unwrap();
    assert_eq!(reparsed, topo);
}

fn balanced_peak_minimum(scale: f64) -> Option<f64> {
    let topo = evfeeder_core::data::feeder_19().with_impedance_scale(scale).unwrap();
    let q = PowerFactor::default().q_ratio();
    let mut inj = BusInjection::zero(topo.bus_count());
    for &bus in topo.buses() {
        for phase in Phase::ALL {
            inj.set(bus, phase, 2000.0, 2000.0 * q);
        }
    }
    let state = solve_direct(&topo, &inj, &SolverOptions::for_base(220.0)).ok()?;
    topo.buses()
        .iter()
        .flat_map(|&b| Phase::ALL.map(|p| state.phase_voltage_pu(b, p, 220.0)))
        .reduce(f64::min)
}

#[test]
fn impedance_scale_reproduces_the_base_case_minimum() {
    let scale = evfeeder_core::data::feeder_19().impedance_scale();
    let v = balanced_peak_minimum(scale).unwrap();
    assert!((v - 0.9389).abs() < 5e-4, "{v}");
    // literal ohms are far below the published base case
    assert!(balanced_peak_minimum(1.0).unwrap() < 0.8);
}

#[test]
fn curve_file_equals_the_built_in_curve() {
    let file = load_curve(workspace_file("curves/residential.txt")).unwrap();
    assert_eq!(file, BaseLoadCurve::residential());
    assert_eq!(file, evfeeder_core::data::residential_curve());
}

#[test]
fn fleet_file_has_the_tabulated_rows() {
    let loaded = load_fleet(workspace_file("fleets/ev34.txt")).unwrap();
    let fleet = &loaded.fleet;
    assert_eq!(fleet.len(), 34);
    assert_eq!(fleet.charge_power_w, 3500.0);
    let first = &fleet.vehicles[0];
    assert_eq!(first.label(), "1.a");
    assert_eq!((first.capacity_kwh, first.initial_soc), (26.0, 0.65));
    assert_eq!((first.arrival.to_string(), first.departure.to_string()), ("17:00".into(), "05:30".into()));
    // rows below the 25% sampling floor are kept, each with a warning
    let flagged: Vec<&str> = ["2.a", "2.b", "7.b", "8.c", "11.a"].into();
    assert_eq!(loaded.warnings.len(), flagged.len(), "{:?}", loaded.warnings);
    for (w, label) in loaded.warnings.iter().zip(flagged) {
        assert!(w.contains(&format!("EV {label} ")), "{w}");
    }
    assert_eq!(loaded.fleet, evfeeder_core::data::fleet_34().fleet);
}

#[test]
fn zone_files() {
    let plan = evfeeder_core::data::zones();
    assert_eq!(plan.zones.len(), 19);
    assert_eq!(plan.start_for(BusId(10)).unwrap().to_string(), "01:00");
    assert_eq!(plan.start_for(BusId(14)).unwrap().to_string(), "00:00");
    assert_eq!(plan.start_for(BusId(19)).unwrap().to_string(), "23:30");
    let hourly = evfeeder_core::data::zones_hourly();
    assert_eq!(hourly.zones, plan.zones);
    assert_eq!(hourly.start_for(BusId(1)).unwrap().to_string(), "23:00");
}
