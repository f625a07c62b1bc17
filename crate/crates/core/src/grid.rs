//! Four-wire radial feeder model and the plain-text feeder description format.
//!
//! A feeder file is line oriented. `#` starts a comment. Directives set the
//! operating point of the head bus:
//!
//! ```text
//! slack_voltage 220          # phase-to-neutral volts at bus 1
//! v_base 220                 # per-unit base, volts
//! impedance_scale 1          # multiplier applied to every series impedance when solving
//! transformer_reactance 0.0654   # recorded only, never solved
//! ```
//!
//! Every other non-empty line is a branch row
//! `from to r_phase x_phase [r_neutral x_neutral]` in ohms. When the neutral
//! pair is omitted the neutral conductor takes the phase impedance.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1-based bus number. Bus 1 is the slack (head) bus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BusId(pub usize);

impl BusId {
    pub const SLACK: BusId = BusId(1);

    pub fn index(self) -> usize {
        self.0 - 1
    }

    pub fn is_slack(self) -> bool {
        self == Self::SLACK
    }
}

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    A,
    B,
    C,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> char {
        match self {
            Phase::A => 'a',
            Phase::B => 'b',
            Phase::C => 'c',
        }
    }

    pub fn from_label(label: &str) -> Option<Phase> {
        match label {
            "a" | "A" => Some(Phase::A),
            "b" | "B" => Some(Phase::B),
            "c" | "C" => Some(Phase::C),
            _ => None,
        }
    }

    /// Nominal angle of the slack phasor in radians (0, -120, +120 degrees).
    pub fn angle(self) -> f64 {
        match self {
            Phase::A => 0.0,
            Phase::B => -2.0 * std::f64::consts::FRAC_PI_3,
            Phase::C => 2.0 * std::f64::consts::FRAC_PI_3,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// A conductor of a four-wire line: one of the phases or the neutral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wire {
    Phase(Phase),
    Neutral,
}

impl Wire {
    pub const ALL: [Wire; 4] = [
        Wire::Phase(Phase::A),
        Wire::Phase(Phase::B),
        Wire::Phase(Phase::C),
        Wire::Neutral,
    ];

    pub const NEUTRAL_INDEX: usize = 3;

    pub fn index(self) -> usize {
        match self {
            Wire::Phase(p) => p.index(),
            Wire::Neutral => Self::NEUTRAL_INDEX,
        }
    }

    pub fn label(self) -> char {
        match self {
            Wire::Phase(p) => p.label(),
            Wire::Neutral => 'n',
        }
    }
}

impl fmt::Display for Wire {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSegment {
    pub from: BusId,
    pub to: BusId,
    /// Series impedance of each phase conductor, ohms.
    pub z_phase: Complex64,
    /// Series impedance of the neutral conductor, ohms.
    pub z_neutral: Complex64,
    /// Whether the neutral impedance was given explicitly in the source file.
    #[serde(default)]
    pub explicit_neutral: bool,
}

impl LineSegment {
    pub fn impedance(&self, wire: Wire) -> Complex64 {
        match wire {
            Wire::Phase(_) => self.z_phase,
            Wire::Neutral => self.z_neutral,
        }
    }
}

/// Fixed head-bus phasors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlackCondition {
    pub v_a: Complex64,
    pub v_b: Complex64,
    pub v_c: Complex64,
    pub v_n: Complex64,
}

impl SlackCondition {
    pub fn balanced(magnitude: f64) -> Self {
        let phasor = |p: Phase| Complex64::from_polar(magnitude, p.angle());
        SlackCondition {
            v_a: phasor(Phase::A),
            v_b: phasor(Phase::B),
            v_c: phasor(Phase::C),
            v_n: Complex64::new(0.0, 0.0),
        }
    }

    /// Voltages in wire order a, b, c, n.
    pub fn wires(&self) -> [Complex64; 4] {
        [self.v_a, self.v_b, self.v_c, self.v_n]
    }
}

/// Validated radial feeder. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    buses: Vec<BusId>,
    lines: Vec<LineSegment>,
    slack_voltage: f64,
    v_base: f64,
    impedance_scale: f64,
    transformer_reactance: Option<f64>,
    // derived
    parent_line: Vec<Option<usize>>,
    children: Vec<Vec<BusId>>,
    child_lines: Vec<Vec<usize>>,
    order: Vec<BusId>,
}

/// Head-bus and per-unit settings of a feeder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeederSettings {
    pub slack_voltage: f64,
    pub v_base: f64,
    pub impedance_scale: f64,
    pub transformer_reactance: Option<f64>,
}

impl Default for FeederSettings {
    fn default() -> Self {
        FeederSettings {
            slack_voltage: 220.0,
            v_base: 220.0,
            impedance_scale: 1.0,
            transformer_reactance: None,
        }
    }
}

impl NetworkTopology {
    /// Builds a topology, checking that the lines form a tree rooted at bus 1
    /// covering buses `1..=bus_count`.
    pub fn new(bus_count: usize, lines: Vec<LineSegment>, settings: FeederSettings) -> Result<Self> {
        if bus_count == 0 {
            return Err(Error::Topology("feeder has no buses".into()));
        }
        if !(settings.slack_voltage > 0.0 && settings.slack_voltage.is_finite()) {
            return Err(Error::Invalid(format!(
                "slack voltage must be positive, got {}",
                settings.slack_voltage
            )));
        }
        if !(settings.v_base > 0.0 && settings.v_base.is_finite()) {
            return Err(Error::Invalid(format!("v_base must be positive, got {}", settings.v_base)));
        }
        if !(settings.impedance_scale > 0.0 && settings.impedance_scale.is_finite()) {
            return Err(Error::Invalid(format!(
                "impedance_scale must be positive, got {}",
                settings.impedance_scale
            )));
        }

        let mut parent_line = vec![None; bus_count];
        let mut children = vec![Vec::new(); bus_count];
        let mut child_lines = vec![Vec::new(); bus_count];
        for (idx, line) in lines.iter().enumerate() {
            for bus in [line.from, line.to] {
                if bus.0 == 0 || bus.0 > bus_count {
                    return Err(Error::Topology(format!(
                        "line {}->{} references bus {} outside 1..={}",
                        line.from, line.to, bus, bus_count
                    )));
                }
            }
            if line.from == line.to {
                return Err(Error::Topology(format!("line {}->{} is a self loop", line.from, line.to)));
            }
            if line.z_phase.re < 0.0 || line.z_neutral.re < 0.0 {
                return Err(Error::Topology(format!(
                    "line {}->{} has negative resistance",
                    line.from, line.to
                )));
            }
            if !(line.z_phase.norm() > 0.0 && line.z_neutral.norm() > 0.0)
                || !line.z_phase.is_finite()
                || !line.z_neutral.is_finite()
            {
                return Err(Error::Topology(format!(
                    "line {}->{} needs finite nonzero impedances",
                    line.from, line.to
                )));
            }
            if line.to.is_slack() {
                return Err(Error::Topology(format!(
                    "line {}->{} feeds the slack bus (cycle through bus 1)",
                    line.from, line.to
                )));
            }
            if let Some(prev) = parent_line[line.to.index()] {
                let prev: &LineSegment = &lines[prev];
                return Err(if prev.from == line.from {
                    Error::Topology(format!("duplicate line {}->{}", line.from, line.to))
                } else {
                    Error::Topology(format!(
                        "bus {} has two parents ({} and {})",
                        line.to, prev.from, line.from
                    ))
                });
            }
            parent_line[line.to.index()] = Some(idx);
            children[line.from.index()].push(line.to);
            child_lines[line.from.index()].push(idx);
        }

        if lines.len() + 1 != bus_count {
            return Err(Error::Topology(format!(
                "a radial feeder with {} buses needs {} lines, found {}",
                bus_count,
                bus_count - 1,
                lines.len()
            )));
        }

        // Breadth-first walk from the slack; anything not reached is either
        // disconnected or sits on a cycle that never touches bus 1.
        let mut order = Vec::with_capacity(bus_count);
        let mut seen = vec![false; bus_count];
        let mut queue = VecDeque::from([BusId::SLACK]);
        seen[0] = true;
        while let Some(bus) = queue.pop_front() {
            order.push(bus);
            for &child in &children[bus.index()] {
                if !seen[child.index()] {
                    seen[child.index()] = true;
                    queue.push_back(child);
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Topology(format!(
                "bus {} is not reachable from bus 1 (disconnected or on a cycle)",
                missing + 1
            )));
        }

        Ok(NetworkTopology {
            buses: (1..=bus_count).map(BusId).collect(),
            lines,
            slack_voltage: settings.slack_voltage,
            v_base: settings.v_base,
            impedance_scale: settings.impedance_scale,
            transformer_reactance: settings.transformer_reactance,
            parent_line,
            children,
            child_lines,
            order,
        })
    }

    pub fn buses(&self) -> &[BusId] {
        &self.buses
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    pub fn lines(&self) -> &[LineSegment] {
        &self.lines
    }

    pub fn slack_voltage(&self) -> f64 {
        self.slack_voltage
    }

    pub fn v_base(&self) -> f64 {
        self.v_base
    }

    pub fn impedance_scale(&self) -> f64 {
        self.impedance_scale
    }

    pub fn transformer_reactance(&self) -> Option<f64> {
        self.transformer_reactance
    }

    pub fn settings(&self) -> FeederSettings {
        FeederSettings {
            slack_voltage: self.slack_voltage,
            v_base: self.v_base,
            impedance_scale: self.impedance_scale,
            transformer_reactance: self.transformer_reactance,
        }
    }

    /// Copy of this feeder with a different impedance scale.
    pub fn with_impedance_scale(&self, scale: f64) -> Result<Self> {
        let settings = FeederSettings {
            impedance_scale: scale,
            ..self.settings()
        };
        NetworkTopology::new(self.bus_count(), self.lines.clone(), settings)
    }

    pub fn slack(&self) -> SlackCondition {
        SlackCondition::balanced(self.slack_voltage)
    }

    /// Impedance used by the solvers: the file value times `impedance_scale`.
    pub fn series_impedance(&self, line: usize, wire: Wire) -> Complex64 {
        self.lines[line].impedance(wire) * self.impedance_scale
    }

    pub fn contains(&self, bus: BusId) -> bool {
        bus.0 >= 1 && bus.0 <= self.buses.len()
    }

    pub fn children(&self, bus: BusId) -> Result<&[BusId]> {
        if !self.contains(bus) {
            return Err(Error::UnknownBus(bus));
        }
        Ok(&self.children[bus.index()])
    }

    /// Indices of the lines leaving `bus` toward its children.
    pub fn child_lines(&self, bus: BusId) -> &[usize] {
        &self.child_lines[bus.index()]
    }

    /// Index of the line feeding `bus`, `None` for the slack.
    pub fn parent_line(&self, bus: BusId) -> Option<usize> {
        self.parent_line[bus.index()]
    }

    pub fn parent(&self, bus: BusId) -> Option<BusId> {
        self.parent_line(bus).map(|l| self.lines[l].from)
    }

    /// Buses in breadth-first order from the slack; parents precede children.
    pub fn order(&self) -> &[BusId] {
        &self.order
    }

    /// Lines on the path from the slack to `bus`, head first.
    pub fn path_lines(&self, bus: BusId) -> Vec<usize> {
        let mut path = Vec::new();
        let mut cur = bus;
        while let Some(line) = self.parent_line(cur) {
            path.push(line);
            cur = self.lines[line].from;
        }
        path.reverse();
        path
    }

    /// Base current for per-unit currents: one kVA per phase at `v_base`.
    pub fn base_current(&self) -> f64 {
        BASE_POWER_VA / self.v_base
    }
}

/// Per-phase base power used for per-unit currents.
pub const BASE_POWER_VA: f64 = 1000.0;

/// Parses a feeder description. `source_name` is used in error messages.
pub fn parse_topology(text: &str, source_name: &str) -> Result<NetworkTopology> {
    let mut settings = FeederSettings::default();
    let mut lines = Vec::new();
    let mut max_bus = 0usize;
    let mut row_of_line = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let number = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(source_name, lineno, format!("expected a number, found '{s}'")))
        };
        let directive_value = || -> Result<f64> {
            if fields.len() != 2 {
                return Err(Error::parse(
                    source_name,
                    lineno,
                    format!("directive '{}' takes exactly one value", fields[0]),
                ));
            }
            number(fields[1])
        };
        match fields[0] {
            "slack_voltage" => settings.slack_voltage = directive_value()?,
            "v_base" => settings.v_base = directive_value()?,
            "impedance_scale" => settings.impedance_scale = directive_value()?,
            "transformer_reactance" => settings.transformer_reactance = Some(directive_value()?),
            _ => {
                if fields.len() != 4 && fields.len() != 6 {
                    return Err(Error::parse(
                        source_name,
                        lineno,
                        format!(
                            "branch row needs 4 or 6 fields (from to r x [r_n x_n]), found {}",
                            fields.len()
                        ),
                    ));
                }
                let bus = |s: &str| -> Result<BusId> {
                    s.parse::<usize>()
                        .ok()
                        .filter(|&b| b >= 1)
                        .map(BusId)
                        .ok_or_else(|| Error::parse(source_name, lineno, format!("invalid bus number '{s}'")))
                };
                let from = bus(fields[0])?;
                let to = bus(fields[1])?;
                let z_phase = Complex64::new(number(fields[2])?, number(fields[3])?);
                let (z_neutral, explicit_neutral) = if fields.len() == 6 {
                    (Complex64::new(number(fields[4])?, number(fields[5])?), true)
                } else {
                    (z_phase, false)
                };
                if z_phase.re < 0.0 || z_neutral.re < 0.0 {
                    return Err(Error::parse(source_name, lineno, "resistance must be nonnegative"));
                }
                max_bus = max_bus.max(from.0).max(to.0);
                row_of_line.push(lineno);
                lines.push(LineSegment {
                    from,
                    to,
                    z_phase,
                    z_neutral,
                    explicit_neutral,
                });
            }
        }
    }

    NetworkTopology::new(max_bus.max(1), lines, settings).map_err(|err| match err {
        Error::Topology(msg) => Error::Topology(format!("{source_name}: {msg}")),
        other => other,
    })
}

pub fn load_topology(path: impl AsRef<Path>) -> Result<NetworkTopology> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_topology(&text, &path.display().to_string())
}

/// Writes a topology back into the feeder file grammar.
pub fn serialize_topology(topology: &NetworkTopology) -> String {
    let mut out = String::new();
    out.push_str(&format!("slack_voltage {}\n", topology.slack_voltage));
    out.push_str(&format!("v_base {}\n", topology.v_base));
    out.push_str(&format!("impedance_scale {}\n", topology.impedance_scale));
    if let Some(x) = topology.transformer_reactance {
        out.push_str(&format!("transformer_reactance {x}\n"));
    }
    for line in &topology.lines {
        out.push_str(&format!(
            "{} {} {} {}",
            line.from, line.to, line.z_phase.re, line.z_phase.im
        ));
        if line.explicit_neutral {
            out.push_str(&format!(" {} {}", line.z_neutral.re, line.z_neutral.im));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "slack_voltage 230\nv_base 230\n1 2 0.1 0.05\n2 3 0.2 0.1 0.3 0.15\n";

    #[test]
    fn parses_directives_and_neutral_override() {
        let topo = parse_topology(SMALL, "small").unwrap();
        assert_eq!(topo.bus_count(), 3);
        assert_eq!(topo.slack_voltage(), 230.0);
        assert_eq!(topo.lines()[0].z_neutral, topo.lines()[0].z_phase);
        assert_eq!(topo.lines()[1].z_neutral, Complex64::new(0.3, 0.15));
        assert_eq!(topo.children(BusId(2)).unwrap(), &[BusId(3)]);
        assert_eq!(topo.parent(BusId(3)), Some(BusId(2)));
        assert_eq!(topo.path_lines(BusId(3)), vec![0, 1]);
    }

    #[test]
    fn two_node_cycle_is_rejected() {
        let err = parse_topology("1 2 0.1 0.1\n2 1 0.1 0.1\n", "cyc").unwrap_err();
        assert!(matches!(err, Error::Topology(ref m) if m.contains("cycle")), "{err}");
    }

    #[test]
    fn duplicate_line_is_rejected() {
        let err = parse_topology("1 2 0.1 0.1\n1 2 0.1 0.1\n1 3 0.1 0.1\n", "dup").unwrap_err();
        assert!(matches!(err, Error::Topology(ref m) if m.contains("duplicate")), "{err}");
    }

    #[test]
    fn disconnected_cycle_is_rejected() {
        // 2 -> 3 -> 2 never reaches the slack.
        let err = parse_topology("1 4 0.1 0.1\n2 3 0.1 0.1\n3 2 0.1 0.1\n", "island").unwrap_err();
        assert!(matches!(err, Error::Topology(_)), "{err}");
    }

    #[test]
    fn missing_bus_is_rejected() {
        let err = parse_topology("1 2 0.1 0.1\n2 4 0.1 0.1\n", "gap").unwrap_err();
        assert!(matches!(err, Error::Topology(_)), "{err}");
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let err = parse_topology("# header\n1 2 0.1 0.1\n2 3 abc 0.1\n", "bad").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_bus_in_children() {
        let topo = parse_topology(SMALL, "small").unwrap();
        assert!(matches!(topo.children(BusId(9)), Err(Error::UnknownBus(BusId(9)))));
        assert!(topo.children(BusId(3)).unwrap().is_empty());
    }

    #[test]
    fn serialize_round_trip() {
        let topo = parse_topology(SMALL, "small").unwrap();
        let again = parse_topology(&serialize_topology(&topo), "again").unwrap();
        assert_eq!(topo, again);
    }
}
