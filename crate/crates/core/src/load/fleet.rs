use std::collections::HashSet;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::{rng_for, STREAM_FLEET};
use crate::error::{Error, Result};
use crate::grid::{BusId, Phase};
use crate::time::{TimeSlot, SLOTS_PER_HOUR};

/// State of charge every strategy charges up to.
pub const TARGET_SOC: f64 = 0.95;

pub const DEFAULT_CHARGE_POWER_W: f64 = 3500.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvSpec {
    pub bus: BusId,
    pub phase: Phase,
    pub capacity_kwh: f64,
    pub arrival: TimeSlot,
    pub departure: TimeSlot,
    /// Fraction in `[0, 0.95]`.
    pub initial_soc: f64,
}

impl EvSpec {
    /// `bus.phase` label, e.g. `7.b`.
    pub fn label(&self) -> String {
        format!("{}.{}", self.bus, self.phase)
    }

    /// Energy needed to reach [`TARGET_SOC`], kWh.
    pub fn energy_deficit_kwh(&self) -> f64 {
        (self.capacity_kwh * (TARGET_SOC - self.initial_soc)).max(0.0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.capacity_kwh > 0.0 && self.capacity_kwh.is_finite()) {
            return Err(Error::Invalid(format!("{}: capacity must be positive", self.label())));
        }
        if !(0.0..=TARGET_SOC).contains(&self.initial_soc) {
            return Err(Error::Invalid(format!(
                "{}: initial SOC {} outside [0, {TARGET_SOC}]",
                self.label(),
                self.initial_soc
            )));
        }
        if self.arrival == self.departure {
            return Err(Error::Invalid(format!("{}: arrival equals departure", self.label())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetSpec {
    pub vehicles: Vec<EvSpec>,
    pub charge_power_w: f64,
}

impl FleetSpec {
    /// Checks the per-vehicle invariants and that no (bus, phase) has two EVs.
    pub fn new(vehicles: Vec<EvSpec>, charge_power_w: f64) -> Result<Self> {
        if !(charge_power_w > 0.0 && charge_power_w.is_finite()) {
            return Err(Error::Invalid(format!("charge power must be positive, got {charge_power_w}")));
        }
        let mut seen = HashSet::new();
        for ev in &vehicles {
            ev.validate()?;
            if !seen.insert((ev.bus, ev.phase)) {
                return Err(Error::Invalid(format!("two EVs at {}", ev.label())));
            }
        }
        Ok(FleetSpec {
            vehicles,
            charge_power_w,
        })
    }

    pub fn empty(charge_power_w: f64) -> Self {
        FleetSpec {
            vehicles: Vec::new(),
            charge_power_w,
        }
    }

    pub fn len(&self) -> usize {
        self.vehicles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vehicles.is_empty()
    }
}

/// Slots needed to charge from the initial SOC to 95% at a fixed rate,
/// rounded up so the target is always reached.
pub fn charge_duration_slots(ev: &EvSpec, charge_power_w: f64) -> u32 {
    let hours = ev.energy_deficit_kwh() / (charge_power_w / 1000.0);
    let slots = hours * SLOTS_PER_HOUR as f64;
    // absorb representation noise such as 0.95 - 0.65 = 0.30000000000000004
    (slots - 1e-9).ceil().max(0.0) as u32
}

/// Normal distribution restricted to `[min, max]` by rejection.
///
/// `location` and `scale` are the parameters of the parent normal. Use
/// [`TruncatedNormal::with_mean`] to pick the location that gives the
/// truncated distribution a prescribed mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedNormal {
    pub location: f64,
    pub scale: f64,
    pub min: f64,
    pub max: f64,
}

impl TruncatedNormal {
    pub fn new(location: f64, scale: f64, min: f64, max: f64) -> Self {
        TruncatedNormal {
            location,
            scale,
            min,
            max,
        }
    }

    /// Solves for the parent location so the truncated mean equals `mean`.
    pub fn with_mean(mean: f64, scale: f64, min: f64, max: f64) -> Self {
        assert!(min < mean && mean < max && scale > 0.0, "mean must lie strictly inside the bounds");
        // truncated mean is increasing in the location
        let mut lo = min - 20.0 * scale;
        let mut hi = max + 20.0 * scale;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if Self::new(mid, scale, min, max).mean() < mean {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Self::new(0.5 * (lo + hi), scale, min, max)
    }

    /// Closed-form mean of the truncated distribution.
    pub fn mean(&self) -> f64 {
        let a = (self.min - self.location) / self.scale;
        let b = (self.max - self.location) / self.scale;
        let mass = std_normal_cdf(b) - std_normal_cdf(a);
        if mass < 1e-300 {
            // all mass piles on the nearer bound
            return if a > 0.0 { self.min } else { self.max };
        }
        self.location + self.scale * (std_normal_pdf(a) - std_normal_pdf(b)) / mass
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let normal = Normal::new(self.location, self.scale).expect("finite positive scale");
        loop {
            let x = normal.sample(rng);
            if (self.min..=self.max).contains(&x) {
                return x;
            }
        }
    }
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Distributions of the stochastic EV parameters. Times are in hours;
/// arrival bounds may exceed 24 to wrap past midnight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleetDistribution {
    pub capacity_kwh: (f64, f64),
    pub arrival_h: TruncatedNormal,
    pub departure_h: TruncatedNormal,
    /// Fraction, not percent.
    pub initial_soc: TruncatedNormal,
}

impl Default for FleetDistribution {
    /// Capacity uniform on 6-30 kWh. Arrival averages 19:00 (sd 2 h) within
    /// 16:00-01:00, departure 07:00 (sd 2 h) within 05:00-12:00, initial
    /// charge 75% (sd 25%) within 25-95%.
    fn default() -> Self {
        FleetDistribution {
            capacity_kwh: (6.0, 30.0),
            arrival_h: TruncatedNormal::with_mean(19.0, 2.0, 16.0, 25.0),
            departure_h: TruncatedNormal::with_mean(7.0, 2.0, 5.0, 12.0),
            initial_soc: TruncatedNormal::with_mean(0.75, 0.25, 0.25, 0.95),
        }
    }
}

/// Raw continuous draws for one vehicle, before rounding onto slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvDraw {
    pub capacity_kwh: f64,
    pub arrival_h: f64,
    pub departure_h: f64,
    pub initial_soc: f64,
}

impl FleetDistribution {
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> EvDraw {
        let (lo, hi) = self.capacity_kwh;
        let capacity = Uniform::new_inclusive(lo, hi).expect("capacity bounds ordered");
        EvDraw {
            capacity_kwh: capacity.sample(rng),
            arrival_h: self.arrival_h.sample(rng),
            departure_h: self.departure_h.sample(rng),
            initial_soc: self.initial_soc.sample(rng),
        }
    }

    /// Stream of raw draws for Monte Carlo checks of the parameter laws.
    pub fn draws(&self, seed: u64, count: usize) -> Vec<EvDraw> {
        let mut rng = rng_for(seed, STREAM_FLEET);
        (0..count).map(|_| self.draw(&mut rng)).collect()
    }
}

/// Picks `floor(penetration * consumers)` EV owners uniformly without
/// replacement and draws their parameters.
pub fn sample_fleet(
    consumers: &[(BusId, Phase)],
    penetration: f64,
    dist: &FleetDistribution,
    charge_power_w: f64,
    seed: u64,
) -> Result<FleetSpec> {
    if !(0.0..=1.0).contains(&penetration) {
        return Err(Error::Invalid(format!("penetration must be in [0, 1], got {penetration}")));
    }
    let mut rng = rng_for(seed, STREAM_FLEET);
    // tolerate 0.6 * 57 = 34.199999...
    let count = (penetration * consumers.len() as f64 + 1e-9).floor() as usize;
    let mut owners = rand::seq::index::sample(&mut rng, consumers.len(), count).into_vec();
    owners.sort_unstable();
    let vehicles = owners
        .into_iter()
        .map(|idx| {
            let (bus, phase) = consumers[idx];
            let d = dist.draw(&mut rng);
            let arrival = TimeSlot::from_hours(d.arrival_h);
            let mut departure = TimeSlot::from_hours(d.departure_h);
            if departure == arrival {
                departure = departure.offset(1);
            }
            EvSpec {
                bus,
                phase,
                capacity_kwh: d.capacity_kwh,
                arrival,
                departure,
                initial_soc: d.initial_soc.min(TARGET_SOC),
            }
        })
        .collect();
    FleetSpec::new(vehicles, charge_power_w)
}

/// A parsed fleet file plus non-fatal findings.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedFleet {
    pub fleet: FleetSpec,
    pub warnings: Vec<String>,
}

/// Parses the fleet grammar:
///
/// ```text
/// charge_power_w 3500
/// # bus.phase  capacity_kwh  arrival  departure  initial_soc_percent
/// 1.a 26 17:00 05:30 65
/// ```
pub fn parse_fleet(text: &str, source_name: &str) -> Result<LoadedFleet> {
    let mut charge_power_w = DEFAULT_CHARGE_POWER_W;
    let mut vehicles = Vec::new();
    let mut warnings = Vec::new();
    let mut seen = HashSet::new();

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let err = |msg: String| Error::parse(source_name, lineno, msg);
        let number = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("expected a number, found '{s}'")))
        };
        if fields[0] == "charge_power_w" {
            if fields.len() != 2 {
                return Err(err("charge_power_w takes one value".into()));
            }
            charge_power_w = number(fields[1])?;
            continue;
        }
        if fields.len() != 5 {
            return Err(err(format!(
                "EV row needs 5 fields (bus.phase capacity arrival departure soc%), found {}",
                fields.len()
            )));
        }
        let (bus, phase) = fields[0]
            .split_once('.')
            .and_then(|(b, p)| Some((b.parse::<usize>().ok().filter(|b| *b >= 1)?, Phase::from_label(p)?)))
            .ok_or_else(|| err(format!("expected bus.phase such as 7.b, found '{}'", fields[0])))?;
        let time = |s: &str| TimeSlot::parse(s).ok_or_else(|| err(format!("expected HH:MM on a 15-minute boundary, found '{s}'")));
        let ev = EvSpec {
            bus: BusId(bus),
            phase,
            capacity_kwh: number(fields[1])?,
            arrival: time(fields[2])?,
            departure: time(fields[3])?,
            initial_soc: number(fields[4])? / 100.0,
        };
        ev.validate().map_err(|e| err(e.to_string()))?;
        if !seen.insert((ev.bus, ev.phase)) {
            return Err(err(format!("duplicate EV at {}", ev.label())));
        }
        if !(0.25..=TARGET_SOC).contains(&ev.initial_soc) {
            let msg = format!(
                "{source_name}:{lineno}: EV {} initial charge {}% is outside the 25-95% sampling range; kept as given",
                ev.label(),
                fields[4]
            );
            warnings.push(msg);
        }
        vehicles.push(ev);
    }
    Ok(LoadedFleet {
        fleet: FleetSpec::new(vehicles, charge_power_w)?,
        warnings,
    })
}

pub fn load_fleet(path: impl AsRef<Path>) -> Result<LoadedFleet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fleet(&text, &path.display().to_string())
}

/// Writes a fleet in the file grammar. Sampled capacities and SOCs keep full
/// precision.
pub fn serialize_fleet(fleet: &FleetSpec) -> String {
    let mut out = format!(
        "charge_power_w {}\n# bus.phase capacity_kwh arrival departure initial_soc_percent\n",
        fleet.charge_power_w
    );
    for ev in &fleet.vehicles {
        out.push_str(&format!(
            "{} {} {} {} {}\n",
            ev.label(),
            ev.capacity_kwh,
            ev.arrival,
            ev.departure,
            ev.initial_soc * 100.0
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(capacity_kwh: f64, initial_soc: f64) -> EvSpec {
        EvSpec {
            bus: BusId(1),
            phase: Phase::A,
            capacity_kwh,
            arrival: TimeSlot::from_hm(17, 0),
            departure: TimeSlot::from_hm(5, 30),
            initial_soc,
        }
    }

    fn consumers(n: usize) -> Vec<(BusId, Phase)> {
        (0..n).map(|i| (BusId(i / 3 + 1), Phase::ALL[i % 3])).collect()
    }

    #[test]
    fn duration_examples() {
        // 26 * 0.30 / 3.5 = 2.22857 h -> 8.914 slots
        assert_eq!(charge_duration_slots(&ev(26.0, 0.65), 3500.0), 9);
        assert_eq!(charge_duration_slots(&ev(26.0, 0.95), 3500.0), 0);
        // 30 * 0.78 / 3.5 = 6.68571 h -> 26.74 slots
        assert_eq!(charge_duration_slots(&ev(30.0, 0.17), 3500.0), 27);
        // exact quarter hours must not round up: 3.5 * 0.25 = 0.875 kWh
        assert_eq!(charge_duration_slots(&ev(8.75, 0.85), 3500.0), 1);
    }

    #[test]
    fn penetration_sixty_percent_of_57() {
        let fleet = sample_fleet(&consumers(57), 0.60, &FleetDistribution::default(), 3500.0, 11).unwrap();
        assert_eq!(fleet.len(), 34);
        let empty = sample_fleet(&consumers(57), 0.0, &FleetDistribution::default(), 3500.0, 11).unwrap();
        assert!(empty.is_empty());
        assert!(sample_fleet(&consumers(57), 1.5, &FleetDistribution::default(), 3500.0, 11).is_err());
    }

    #[test]
    fn sampled_fleet_is_deterministic() {
        let d = FleetDistribution::default();
        let a = sample_fleet(&consumers(57), 0.6, &d, 3500.0, 5).unwrap();
        let b = sample_fleet(&consumers(57), 0.6, &d, 3500.0, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truncated_mean_solver() {
        let t = TruncatedNormal::with_mean(19.0, 2.0, 16.0, 25.0);
        assert!((t.mean() - 19.0).abs() < 1e-9);
        // lower cut at -1.5 sd pushes the untruncated location below the target
        assert!(t.location < 19.0);
        let symmetric = TruncatedNormal::new(0.0, 1.0, -2.0, 2.0);
        assert!(symmetric.mean().abs() < 1e-15);
    }

    #[test]
    fn fleet_file_rules() {
        let text = "charge_power_w 7000\n1.a 26 17:00 05:30 65\n7.b 28 16:00 08:30 5\n";
        let loaded = parse_fleet(text, "t").unwrap();
        assert_eq!(loaded.fleet.charge_power_w, 7000.0);
        assert_eq!(loaded.fleet.len(), 2);
        assert_eq!(loaded.warnings.len(), 1);
        assert!(loaded.warnings[0].contains("7.b"));

        let dup = parse_fleet("1.a 26 17:00 05:30 65\n1.a 20 18:00 06:00 50\n", "t").unwrap_err();
        assert!(matches!(dup, Error::Parse { line: 2, .. }));
        let bad_soc = parse_fleet("1.a 26 17:00 05:30 99\n", "t").unwrap_err();
        assert!(matches!(bad_soc, Error::Parse { line: 1, .. }));
        let bad_time = parse_fleet("1.a 26 17:07 05:30 65\n", "t").unwrap_err();
        assert!(matches!(bad_time, Error::Parse { line: 1, .. }));
        assert!(parse_fleet("", "t").unwrap().fleet.is_empty());
    }

    #[test]
    fn fleet_round_trip() {
        let fleet = sample_fleet(&consumers(30), 0.5, &FleetDistribution::default(), 3500.0, 9).unwrap();
        let again = parse_fleet(&serialize_fleet(&fleet), "rt").unwrap().fleet;
        assert_eq!(fleet.len(), again.len());
        for (a, b) in fleet.vehicles.iter().zip(&again.vehicles) {
            assert_eq!((a.bus, a.phase, a.arrival, a.departure), (b.bus, b.phase, b.arrival, b.departure));
            assert!((a.capacity_kwh - b.capacity_kwh).abs() < 1e-12);
            assert!((a.initial_soc - b.initial_soc).abs() < 1e-12);
        }
    }
}
