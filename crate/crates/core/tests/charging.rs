use evfeeder_core::charging::{
    ev_power_frame, schedule_semi_smart, schedule_timer, schedule_uncontrolled, schedule_zoned, ChargeSchedule,
};
use evfeeder_core::load::FleetSpec;
use evfeeder_core::time::TimeSlot;

fn fleet() -> FleetSpec {
    evfeeder_core::data::fleet_34().fleet
}

fn hm(s: &str) -> TimeSlot {
    TimeSlot::parse(s).unwrap()
}

fn all_schedules(fleet: &FleetSpec) -> Vec<(&'static str, ChargeSchedule)> {
    vec![
        ("uncontrolled", schedule_uncontrolled(fleet)),
        ("timer", schedule_timer(fleet, TimeSlot::MIDNIGHT)),
        ("zoned", schedule_zoned(fleet, &evfeeder_core::data::zones()).unwrap()),
        ("semismart", schedule_semi_smart(fleet).unwrap()),
    ]
}

#[test]
fn every_strategy_reaches_the_target_within_one_slot() {
    let fleet = fleet();
    for (name, schedule) in all_schedules(&fleet) {
        assert_eq!(schedule.windows.len(), 34);
        for (ev, delivered) in fleet.vehicles.iter().zip(schedule.delivered_kwh()) {
            let needed = ev.capacity_kwh * (0.95 - ev.initial_soc);
            let surplus = delivered - needed;
            assert!((-1e-9..0.875).contains(&surplus), "{name} {}: surplus {surplus}", ev.label());
        }
    }
}

#[test]
fn window_anchors() {
    let fleet = fleet();
    let plan = evfeeder_core::data::zones();
    let schedules: Vec<ChargeSchedule> = all_schedules(&fleet).into_iter().map(|(_, s)| s).collect();
    let [uncontrolled, timer, zoned, semi]: [ChargeSchedule; 4] = schedules.try_into().unwrap();
    for (k, ev) in fleet.vehicles.iter().enumerate() {
        assert_eq!(uncontrolled.windows[k].start, ev.arrival);
        assert_eq!(timer.windows[k].start, TimeSlot::MIDNIGHT);
        assert_eq!(zoned.windows[k].start, plan.start_for(ev.bus).unwrap());
        assert_eq!(semi.windows[k].end(), ev.departure, "{}", ev.label());
        assert_eq!(semi.windows[k].slots, uncontrolled.windows[k].slots);
    }
    // every shipped vehicle is parked long enough for its semi-smart window
    assert!(semi.warnings.is_empty(), "{:?}", semi.warnings);
}

#[test]
fn tabulated_windows() {
    let fleet = fleet();
    let find = |s: &ChargeSchedule, label: &str| {
        let k = fleet.vehicles.iter().position(|e| e.label() == label).unwrap();
        s.windows[k].to_string()
    };
    let uncontrolled = schedule_uncontrolled(&fleet);
    let semi = schedule_semi_smart(&fleet).unwrap();
    assert_eq!(find(&uncontrolled, "1.a"), "[17:00, 19:15)");
    assert_eq!(find(&uncontrolled, "2.b"), "[16:30, 18:30)");
    // 9 slots ending at 05:30
    assert_eq!(find(&semi, "1.a"), "[03:15, 05:30)");
    // 27 slots ending at 07:45
    assert_eq!(find(&semi, "2.a"), "[01:00, 07:45)");
    // 26 * 0.61 / 3.5 = 4.53 h -> 19 slots
    assert_eq!(find(&semi, "10.b"), "[03:00, 07:45)");
    assert_eq!(find(&schedule_timer(&fleet, hm("22:00")), "1.a"), "[22:00, 00:15)");
}

#[test]
fn frame_energy_is_the_sum_of_windows() {
    let fleet = fleet();
    for (name, schedule) in all_schedules(&fleet) {
        let frame = ev_power_frame(&schedule, &fleet, 19).unwrap();
        let expected: f64 = schedule.windows.iter().map(|w| w.slots as f64 * 0.25 * 3.5).sum();
        assert!((frame.energy_kwh() - expected).abs() < 1e-9, "{name}");
        for slot in 0..96 {
            let charging = schedule
                .windows
                .iter()
                .filter(|w| w.contains(TimeSlot::new(slot as i64)))
                .count();
            assert!((frame.total_at(slot) - charging as f64 * 3500.0).abs() < 1e-9);
        }
    }
    // timer puts every vehicle on at once
    let timer = ev_power_frame(&schedule_timer(&fleet, TimeSlot::MIDNIGHT), &fleet, 19).unwrap();
    assert_eq!(timer.total_at(0), 34.0 * 3500.0);
}
