//! Household demand and EV fleet models.

mod fleet;
mod household;

pub use fleet::{
    charge_duration_slots, load_fleet, parse_fleet, sample_fleet, serialize_fleet, EvDraw, EvSpec,
    FleetDistribution, FleetSpec, LoadedFleet, TruncatedNormal, DEFAULT_CHARGE_POWER_W, TARGET_SOC,
};
pub use household::{
    load_curve, parse_curve, sample_household_loads, serialize_curve, BaseLoadCurve, HouseholdLoad,
    PowerFactor,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::grid::{NetworkTopology, Phase, BusId};

pub(crate) const STREAM_HOUSEHOLD: u64 = 1;
pub(crate) const STREAM_FLEET: u64 = 2;

/// Independent generator per purpose so household draws do not depend on
/// whether a fleet is sampled.
pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One household consumer on every phase of every bus, bus-major.
pub fn consumers(topology: &NetworkTopology) -> Vec<(BusId, Phase)> {
    topology
        .buses()
        .iter()
        .flat_map(|&bus| Phase::ALL.map(|p| (bus, p)))
        .collect()
}
