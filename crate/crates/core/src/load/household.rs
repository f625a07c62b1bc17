use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{rng_for, STREAM_HOUSEHOLD};
use crate::error::{Error, Result};
use crate::grid::{BusId, Phase};
use crate::time::{SLOTS_PER_DAY, SLOTS_PER_HOUR};

/// Mean household active power for each of the 96 slots, watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseLoadCurve {
    p_base: Vec<f64>,
}

/// Anchor points (hour, kW) of the shipped residential curve. Linear in
/// between, wrapping at midnight. The evening tail stays high until
/// midnight and falls to the valley by 02:00.
const RESIDENTIAL_ANCHORS: [(f64, f64); 14] = [
    (0.0, 1.7),
    (1.0, 1.0),
    (2.0, 0.4),
    (5.0, 0.4),
    (7.0, 0.9),
    (9.0, 1.0),
    (12.0, 1.0),
    (14.0, 0.9),
    (16.0, 1.1),
    (18.0, 2.0),
    (21.0, 2.0),
    (22.0, 1.9),
    (23.0, 1.8),
    (24.0, 1.7),
];

impl BaseLoadCurve {
    pub fn new(p_base: Vec<f64>) -> Result<Self> {
        if p_base.len() != SLOTS_PER_DAY {
            return Err(Error::Invalid(format!(
                "base curve needs {SLOTS_PER_DAY} values, got {}",
                p_base.len()
            )));
        }
        if let Some(bad) = p_base.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Invalid(format!("base curve value {bad} is not a nonnegative number")));
        }
        Ok(BaseLoadCurve { p_base })
    }

    /// Default residential profile: night valley of 0.4 kW from 02:00 to 05:00,
    /// a ~1 kW daytime shoulder, a 2 kW evening peak from 18:00 to 21:00 and a
    /// late-evening tail of 1.7 kW at midnight.
    pub fn residential() -> Self {
        let p_base = (0..SLOTS_PER_DAY)
            .map(|slot| {
                let h = slot as f64 / SLOTS_PER_HOUR as f64;
                let k = RESIDENTIAL_ANCHORS
                    .windows(2)
                    .position(|w| h >= w[0].0 && h < w[1].0)
                    .expect("anchors span the day");
                let (h0, p0) = RESIDENTIAL_ANCHORS[k];
                let (h1, p1) = RESIDENTIAL_ANCHORS[k + 1];
                1000.0 * (p0 + (p1 - p0) * (h - h0) / (h1 - h0))
            })
            .collect();
        BaseLoadCurve { p_base }
    }

    pub fn values(&self) -> &[f64] {
        &self.p_base
    }

    pub fn at(&self, slot: usize) -> f64 {
        self.p_base[slot]
    }

    pub fn peak(&self) -> f64 {
        self.p_base.iter().copied().fold(0.0, f64::max)
    }

    /// Rescales the curve so its maximum equals `peak_w`.
    pub fn scaled_to_peak(&self, peak_w: f64) -> Result<Self> {
        let current = self.peak();
        if current <= 0.0 {
            return Err(Error::Invalid("cannot rescale an all-zero curve".into()));
        }
        BaseLoadCurve::new(self.p_base.iter().map(|p| p * peak_w / current).collect())
    }

    /// Slots of the lowest, median and highest demand.
    pub fn snapshot_slots(&self) -> [usize; 3] {
        let mut idx: Vec<usize> = (0..SLOTS_PER_DAY).collect();
        idx.sort_by(|&a, &b| self.p_base[a].total_cmp(&self.p_base[b]).then(a.cmp(&b)));
        [idx[0], idx[SLOTS_PER_DAY / 2], idx[SLOTS_PER_DAY - 1]]
    }
}

/// One value in watts per line; `#` comments and blank lines ignored.
pub fn parse_curve(text: &str, source_name: &str) -> Result<BaseLoadCurve> {
    let mut values = Vec::with_capacity(SLOTS_PER_DAY);
    for (lineno, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let v: f64 = content
            .parse()
            .map_err(|_| Error::parse(source_name, lineno + 1, format!("expected watts, found '{content}'")))?;
        values.push(v);
    }
    BaseLoadCurve::new(values).map_err(|e| match e {
        Error::Invalid(msg) => Error::Invalid(format!("{source_name}: {msg}")),
        other => other,
    })
}

pub fn load_curve(path: impl AsRef<Path>) -> Result<BaseLoadCurve> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_curve(&text, &path.display().to_string())
}

pub fn serialize_curve(curve: &BaseLoadCurve) -> String {
    let mut out = String::from("# household base load, watts, one value per 15-minute slot from 00:00\n");
    for v in curve.values() {
        out.push_str(&format!("{v}\n"));
    }
    out
}

/// Household power factor; lagging loads absorb reactive power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFactor {
    pub value: f64,
    pub leading: bool,
}

impl PowerFactor {
    pub fn lagging(value: f64) -> Self {
        PowerFactor { value, leading: false }
    }

    /// Reactive-to-active ratio, signed: positive when lagging.
    pub fn q_ratio(&self) -> f64 {
        let ratio = self.value.acos().tan();
        if self.leading {
            -ratio
        } else {
            ratio
        }
    }
}

impl Default for PowerFactor {
    fn default() -> Self {
        PowerFactor::lagging(0.91)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseholdLoad {
    pub bus: BusId,
    pub phase: Phase,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

/// Draws every consumer's demand independently per slot from a normal
/// distribution centred on the base curve with standard deviation
/// `sigma_fraction * curve`, rejecting negative draws.
pub fn sample_household_loads(
    curve: &BaseLoadCurve,
    consumers: &[(BusId, Phase)],
    sigma_fraction: f64,
    pf: PowerFactor,
    seed: u64,
) -> Result<Vec<HouseholdLoad>> {
    if !(sigma_fraction >= 0.0 && sigma_fraction.is_finite()) {
        return Err(Error::Invalid(format!("sigma fraction must be >= 0, got {sigma_fraction}")));
    }
    if !(pf.value > 0.0 && pf.value <= 1.0) {
        return Err(Error::Invalid(format!("power factor must be in (0, 1], got {}", pf.value)));
    }
    let mut rng = rng_for(seed, STREAM_HOUSEHOLD);
    let ratio = pf.q_ratio();
    Ok(consumers
        .iter()
        .map(|&(bus, phase)| {
            let p: Vec<f64> = curve
                .values()
                .iter()
                .map(|&mean| draw_nonnegative(&mut rng, mean, sigma_fraction * mean))
                .collect();
            let q = p.iter().map(|p| p * ratio).collect();
            HouseholdLoad { bus, phase, p, q }
        })
        .collect())
}

fn draw_nonnegative(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        return mean;
    }
    let normal = Normal::new(mean, sd).expect("sd is finite and positive");
    loop {
        let x = normal.sample(rng);
        if x >= 0.0 {
            return x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consumers(n: usize) -> Vec<(BusId, Phase)> {
        (0..n).map(|i| (BusId(i / 3 + 1), Phase::ALL[i % 3])).collect()
    }

    #[test]
    fn residential_curve_shape() {
        let c = BaseLoadCurve::residential();
        assert_eq!(c.values().len(), 96);
        assert_eq!(c.peak(), 2000.0);
        for slot in 72..=84 {
            assert_eq!(c.at(slot), 2000.0, "evening peak at slot {slot}");
        }
        for slot in 8..=20 {
            assert!((c.at(slot) - 400.0).abs() < 1e-9, "valley at slot {slot}");
        }
        assert!((c.at(40) - 1000.0).abs() < 1e-9);
        let [valley, _, peak] = c.snapshot_slots();
        assert_eq!(c.at(valley), 400.0);
        assert_eq!(c.at(peak), 2000.0);
    }

    #[test]
    fn zero_sigma_reproduces_curve() {
        let c = BaseLoadCurve::residential();
        let loads = sample_household_loads(&c, &consumers(6), 0.0, PowerFactor::default(), 3).unwrap();
        for load in loads {
            assert_eq!(load.p, c.values());
        }
    }

    #[test]
    fn reactive_power_from_power_factor() {
        let c = BaseLoadCurve::new(vec![1000.0; 96]).unwrap();
        let loads = sample_household_loads(&c, &consumers(1), 0.0, PowerFactor::lagging(0.91), 1).unwrap();
        // tan(acos(0.91)) = 0.4556135
        assert!((loads[0].q[0] - 455.6135).abs() < 1e-3, "{}", loads[0].q[0]);
        let lead = PowerFactor {
            value: 0.91,
            leading: true,
        };
        let loads = sample_household_loads(&c, &consumers(1), 0.0, lead, 1).unwrap();
        assert!(loads[0].q[0] < 0.0);
    }

    #[test]
    fn peak_slot_mean_within_three_standard_errors() {
        let c = BaseLoadCurve::residential();
        let loads = sample_household_loads(&c, &consumers(10_000), 0.20, PowerFactor::default(), 42).unwrap();
        let peak = c.snapshot_slots()[2];
        let mean = loads.iter().map(|l| l.p[peak]).sum::<f64>() / loads.len() as f64;
        let band = 3.0 * 400.0 / (10_000f64).sqrt();
        assert!((mean - 2000.0).abs() < band, "mean {mean}");
    }

    #[test]
    fn seeded_determinism() {
        let c = BaseLoadCurve::residential();
        let a = sample_household_loads(&c, &consumers(9), 0.2, PowerFactor::default(), 7).unwrap();
        let b = sample_household_loads(&c, &consumers(9), 0.2, PowerFactor::default(), 7).unwrap();
        let d = sample_household_loads(&c, &consumers(9), 0.2, PowerFactor::default(), 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, d);
    }

    #[test]
    fn curve_file_round_trip_and_errors() {
        let c = BaseLoadCurve::residential();
        assert_eq!(parse_curve(&serialize_curve(&c), "rt").unwrap(), c);
        assert!(matches!(parse_curve("1\n2\n", "short"), Err(Error::Invalid(_))));
        let err = parse_curve("1\nx\n", "bad").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(matches!(BaseLoadCurve::new(vec![-1.0; 96]), Err(Error::Invalid(_))));
    }

    #[test]
    fn rescale_to_peak() {
        let c = BaseLoadCurve::residential().scaled_to_peak(3000.0).unwrap();
        assert!((c.peak() - 3000.0).abs() < 1e-9);
    }
}
