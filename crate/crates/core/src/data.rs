//! Input files shipped with the repository, embedded for callers without a
//! filesystem (the browser demo, tests).

use crate::charging::{parse_zone_plan, ZonePlan};
use crate::grid::{parse_topology, NetworkTopology};
use crate::load::{parse_fleet, BaseLoadCurve, LoadedFleet};

pub const FEEDER_19: &str = include_str!("../../../feeders/lv19.txt");
pub const FLEET_34: &str = include_str!("../../../fleets/ev34.txt");
pub const ZONES_TABLE: &str = include_str!("../../../zones/three-zone.txt");
pub const ZONES_HOURLY: &str = include_str!("../../../zones/three-zone-hourly.txt");
pub const RESIDENTIAL_CURVE: &str = include_str!("../../../curves/residential.txt");

pub fn feeder_19() -> NetworkTopology {
    parse_topology(FEEDER_19, "feeders/lv19.txt").expect("shipped feeder parses")
}

pub fn fleet_34() -> LoadedFleet {
    parse_fleet(FLEET_34, "fleets/ev34.txt").expect("shipped fleet parses")
}

pub fn zones() -> ZonePlan {
    parse_zone_plan(ZONES_TABLE, "zones/three-zone.txt").expect("shipped zones parse")
}

pub fn zones_hourly() -> ZonePlan {
    parse_zone_plan(ZONES_HOURLY, "zones/three-zone-hourly.txt").expect("shipped zones parse")
}

pub fn residential_curve() -> BaseLoadCurve {
    crate::load::parse_curve(RESIDENTIAL_CURVE, "curves/residential.txt").expect("shipped curve parses")
}
