//! Experiment configuration, generated scenarios and sweep grids.
//!
//! Configs are flat `key=value` text with `#` comments; missing keys take the
//! defaults below and unknown keys are rejected.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mobility::{MobilityScenario, RwpParams};
use crate::radio::mac::MacConfig;
use crate::radio::{Energy, RadioConfig};
use crate::rng::{self, RngStream};
use crate::routing::AgentConfig;
use crate::time::SimTime;
use crate::traffic::{self, Connection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Protocol {
    MeaDsr,
    Dsr,
}

impl Protocol {
    pub const ALL: [Protocol; 2] = [Protocol::MeaDsr, Protocol::Dsr];

    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::MeaDsr => "MEA-DSR",
            Protocol::Dsr => "DSR",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('_', "-").as_str() {
            "MEA-DSR" | "MEADSR" => Ok(Protocol::MeaDsr),
            "DSR" => Ok(Protocol::Dsr),
            _ => Err(Error::config("protocol", format!("expected MEA-DSR or DSR, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_nodes: usize,
    pub area_width: f64,
    pub area_height: f64,
    pub range: f64,
    pub bitrate: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub pause: f64,
    pub sim_end: f64,
    pub n_connections: usize,
    pub pkt_rate: f64,
    pub pkt_size: u32,
    pub tx_power: f64,
    pub rx_power: f64,
    pub initial_energy: f64,
    pub wt: f64,
    pub protocol: Protocol,
    pub seed: u64,
    pub ifq_len: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_nodes: 50,
            area_width: 1000.0,
            area_height: 1000.0,
            range: 250.0,
            bitrate: 2e6,
            speed_min: 5.0,
            speed_max: 10.0,
            pause: 100.0,
            sim_end: 600.0,
            n_connections: 10,
            pkt_rate: 4.0,
            pkt_size: 512,
            tx_power: 1.4,
            rx_power: 1.0,
            initial_energy: 1000.0,
            wt: 0.06,
            protocol: Protocol::MeaDsr,
            seed: 1,
            ifq_len: 50,
        }
    }
}

const KEYS: [&str; 19] = [
    "n_nodes",
    "area_width",
    "area_height",
    "range",
    "bitrate",
    "speed_min",
    "speed_max",
    "pause",
    "sim_end",
    "n_connections",
    "pkt_rate",
    "pkt_size",
    "tx_power",
    "rx_power",
    "initial_energy",
    "wt",
    "protocol",
    "seed",
    "ifq_len",
];

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{v}`")))
}

impl ScenarioConfig {
    /// Parses the `key=value` format; later lines override earlier ones.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = ScenarioConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, format!("expected key=value, got `{line}`")))?;
            c.set(k.trim(), v.trim())?;
        }
        c.validate()?;
        Ok(c)
    }

    /// Sets one field from its text form (no validation).
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "n_nodes" => self.n_nodes = num(key, v)?,
            "area_width" => self.area_width = num(key, v)?,
            "area_height" => self.area_height = num(key, v)?,
            "range" => self.range = num(key, v)?,
            "bitrate" => self.bitrate = num(key, v)?,
            "speed_min" => self.speed_min = num(key, v)?,
            "speed_max" => self.speed_max = num(key, v)?,
            "pause" => self.pause = num(key, v)?,
            "sim_end" => self.sim_end = num(key, v)?,
            "n_connections" => self.n_connections = num(key, v)?,
            "pkt_rate" => self.pkt_rate = num(key, v)?,
            "pkt_size" => self.pkt_size = num(key, v)?,
            "tx_power" => self.tx_power = num(key, v)?,
            "rx_power" => self.rx_power = num(key, v)?,
            "initial_energy" => self.initial_energy = num(key, v)?,
            "wt" => self.wt = num(key, v)?,
            "protocol" => self.protocol = v.parse()?,
            "seed" => self.seed = num(key, v)?,
            "ifq_len" => self.ifq_len = num(key, v)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> String {
        match key {
            "n_nodes" => self.n_nodes.to_string(),
            "area_width" => self.area_width.to_string(),
            "area_height" => self.area_height.to_string(),
            "range" => self.range.to_string(),
            "bitrate" => self.bitrate.to_string(),
            "speed_min" => self.speed_min.to_string(),
            "speed_max" => self.speed_max.to_string(),
            "pause" => self.pause.to_string(),
            "sim_end" => self.sim_end.to_string(),
            "n_connections" => self.n_connections.to_string(),
            "pkt_rate" => self.pkt_rate.to_string(),
            "pkt_size" => self.pkt_size.to_string(),
            "tx_power" => self.tx_power.to_string(),
            "rx_power" => self.rx_power.to_string(),
            "initial_energy" => self.initial_energy.to_string(),
            "wt" => self.wt.to_string(),
            "protocol" => self.protocol.to_string(),
            "seed" => self.seed.to_string(),
            "ifq_len" => self.ifq_len.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Canonical text: every key, in a fixed order.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        for k in KEYS {
            writeln!(s, "{k}={}", self.get(k)).unwrap();
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("area_width", self.area_width),
            ("area_height", self.area_height),
            ("range", self.range),
            ("bitrate", self.bitrate),
            ("speed_min", self.speed_min),
            ("speed_max", self.speed_max),
            ("sim_end", self.sim_end),
            ("pkt_rate", self.pkt_rate),
            ("tx_power", self.tx_power),
            ("rx_power", self.rx_power),
            ("initial_energy", self.initial_energy),
            ("wt", self.wt),
        ];
        for (k, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(k, format!("must be > 0, got {v}")));
            }
        }
        if !(self.pause.is_finite() && self.pause >= 0.0) {
            return Err(Error::config("pause", format!("must be >= 0, got {}", self.pause)));
        }
        if self.speed_min > self.speed_max {
            return Err(Error::config(
                "speed_min",
                format!("must be <= speed_max ({}), got {}", self.speed_max, self.speed_min),
            ));
        }
        if self.n_nodes < 2 {
            return Err(Error::config("n_nodes", format!("must be >= 2, got {}", self.n_nodes)));
        }
        let pairs = self.n_nodes * (self.n_nodes - 1);
        if self.n_connections == 0 || self.n_connections > pairs {
            return Err(Error::config(
                "n_connections",
                format!("must be in [1, {pairs}], got {}", self.n_connections),
            ));
        }
        if self.pkt_size == 0 {
            return Err(Error::config("pkt_size", "must be > 0"));
        }
        if self.ifq_len == 0 {
            return Err(Error::config("ifq_len", "must be > 0"));
        }
        if SimTime::from_secs_f64(1.0 / self.pkt_rate) == SimTime::ZERO {
            return Err(Error::config("pkt_rate", format!("must be <= 1e6, got {}", self.pkt_rate)));
        }
        Ok(())
    }

    pub fn sim_end_time(&self) -> SimTime {
        SimTime::from_secs_f64(self.sim_end)
    }

    pub fn radio(&self) -> RadioConfig {
        RadioConfig {
            range: self.range,
            bitrate: self.bitrate,
            tx_power: self.tx_power,
            rx_power: self.rx_power,
            ifq_capacity: self.ifq_len,
        }
    }

    pub fn mac(&self) -> MacConfig {
        MacConfig::default()
    }

    pub fn agent(&self) -> AgentConfig {
        AgentConfig {
            wait_time: SimTime::from_secs_f64(self.wt),
            ..AgentConfig::default()
        }
    }

    pub fn initial_energy(&self) -> Energy {
        Energy::from_joules(self.initial_energy)
    }

    fn rwp(&self) -> RwpParams {
        RwpParams {
            nodes: self.n_nodes,
            width: self.area_width,
            height: self.area_height,
            speed_min: self.speed_min,
            speed_max: self.speed_max,
            pause: self.pause,
            sim_end: self.sim_end_time(),
        }
    }
}

/// Mobility and traffic for one run. Depends only on the seed and the
/// topology/traffic parameters, never on the protocol, so paired runs share it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub mobility: MobilityScenario,
    pub connections: Vec<Connection>,
    /// Emission times per connection.
    pub schedules: Vec<Vec<SimTime>>,
}

impl Scenario {
    pub fn generate(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let mut mob_rng = RngStream::new(cfg.seed, rng::MOBILITY);
        let mobility = MobilityScenario::generate_rwp(&cfg.rwp(), &mut mob_rng)?;
        let mut traffic_rng = RngStream::new(cfg.seed, rng::TRAFFIC);
        let connections = traffic::generate_connections(
            cfg.n_nodes,
            cfg.n_connections,
            cfg.pkt_rate,
            cfg.pkt_size,
            &mut traffic_rng,
        )?;
        Ok(Self::with_stream(mobility, connections, &mut traffic_rng))
    }

    /// Builds a scenario from explicit parts; emission jitter is drawn from
    /// the seed's traffic stream.
    pub fn from_parts(mobility: MobilityScenario, connections: Vec<Connection>, seed: u64) -> Result<Self> {
        let n = mobility.node_count() as u32;
        if let Some(c) = connections.iter().find(|c| c.src.0 >= n || c.dst.0 >= n) {
            return Err(Error::InvalidArgument(format!(
                "connection {} -> {} references a node outside 0..{n}",
                c.src, c.dst
            )));
        }
        let mut traffic_rng = RngStream::new(seed, rng::TRAFFIC);
        Ok(Self::with_stream(mobility, connections, &mut traffic_rng))
    }

    fn with_stream(mobility: MobilityScenario, connections: Vec<Connection>, stream: &mut RngStream) -> Self {
        let end = mobility.sim_end();
        let schedules = connections.iter().map(|c| c.schedule(end, stream)).collect();
        Scenario {
            mobility,
            connections,
            schedules,
        }
    }

    pub fn node_count(&self) -> usize {
        self.mobility.node_count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    Pause,
    SpeedClass,
    Density,
    Rate,
    Sessions,
    Wt,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 6] = [
        SweepAxis::Pause,
        SweepAxis::SpeedClass,
        SweepAxis::Density,
        SweepAxis::Rate,
        SweepAxis::Sessions,
        SweepAxis::Wt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Pause => "pause",
            SweepAxis::SpeedClass => "speed_class",
            SweepAxis::Density => "density",
            SweepAxis::Rate => "rate",
            SweepAxis::Sessions => "sessions",
            SweepAxis::Wt => "wt",
        }
    }

    pub fn default_points(self) -> Vec<String> {
        let v: Vec<&str> = match self {
            SweepAxis::Pause => vec!["0", "100", "200", "300", "400", "500", "600"],
            SweepAxis::SpeedClass => vec!["low", "medium", "high"],
            SweepAxis::Density => vec!["50", "60", "70", "80", "90", "100"],
            SweepAxis::Rate => vec!["2", "4", "6", "8", "10", "12"],
            SweepAxis::Sessions => vec!["10", "15", "20", "25", "30", "35", "40"],
            SweepAxis::Wt => vec!["0.01", "0.03", "0.06", "0.1", "0.2"],
        };
        v.into_iter().map(String::from).collect()
    }

    /// `base` with this axis set to `point`.
    pub fn apply(self, base: &ScenarioConfig, point: &str) -> Result<ScenarioConfig> {
        let mut c = base.clone();
        match self {
            SweepAxis::Pause => c.set("pause", point)?,
            SweepAxis::SpeedClass => {
                let (lo, hi) = speed_class(point)?;
                c.speed_min = lo;
                c.speed_max = hi;
            }
            SweepAxis::Density => c.set("n_nodes", point)?,
            SweepAxis::Rate => c.set("pkt_rate", point)?,
            SweepAxis::Sessions => c.set("n_connections", point)?,
            SweepAxis::Wt => c.set("wt", point)?,
        }
        c.validate()?;
        Ok(c)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown axis `{s}`; expected one of pause, speed_class, density, rate, sessions, wt"
                ))
            })
    }
}

/// Speed range in m/s for a named mobility class.
pub fn speed_class(name: &str) -> Result<(f64, f64)> {
    match name {
        "low" => Ok((0.5, 1.0)),
        "medium" => Ok((5.0, 10.0)),
        "high" => Ok((20.0, 25.0)),
        _ => Err(Error::InvalidArgument(format!(
            "unknown speed class `{name}`; expected low, medium or high"
        ))),
    }
}

pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub axis_value: String,
    pub config: ScenarioConfig,
}

/// One config per (point, protocol, seed), ordered by point, then protocol
/// (MEA-DSR first), then seed.
pub fn sweep_grid(
    base: &ScenarioConfig,
    axis: SweepAxis,
    points: &[String],
    seeds: &[u64],
) -> Result<Vec<GridPoint>> {
    let mut out = Vec::with_capacity(points.len() * seeds.len() * 2);
    for p in points {
        let at_point = axis.apply(base, p)?;
        for proto in Protocol::ALL {
            for &seed in seeds {
                let mut config = at_point.clone();
                config.protocol = proto;
                config.seed = seed;
                out.push(GridPoint {
                    axis_value: p.clone(),
                    config,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_text_gives_defaults() {
        let c = ScenarioConfig::parse("").unwrap();
        assert_eq!(c, ScenarioConfig::default());
        assert_eq!(c.n_nodes, 50);
        assert_eq!((c.area_width, c.area_height), (1000.0, 1000.0));
        assert_eq!((c.speed_min, c.speed_max), (5.0, 10.0));
        assert_eq!((c.pause, c.sim_end, c.wt), (100.0, 600.0, 0.06));
        assert_eq!((c.tx_power, c.rx_power, c.initial_energy), (1.4, 1.0, 1000.0));
        assert_eq!((c.n_connections, c.pkt_rate, c.pkt_size), (10, 4.0, 512));
    }

    #[test]
    fn comments_and_overrides() {
        let c = ScenarioConfig::parse("# stationary\npause = 600  # whole run\nprotocol=DSR\n").unwrap();
        assert_eq!(c.pause, 600.0);
        assert_eq!(c.protocol, Protocol::Dsr);
    }

    #[test]
    fn rejections_name_the_key() {
        let e = ScenarioConfig::parse("speed_min=0").unwrap_err().to_string();
        assert!(e.contains("speed_min"), "{e}");
        let e = ScenarioConfig::parse("colour=blue").unwrap_err().to_string();
        assert!(e.contains("colour"), "{e}");
        let e = ScenarioConfig::parse("n_nodes=3\nn_connections=7").unwrap_err().to_string();
        assert!(e.contains("n_connections") && e.contains('6'), "{e}");
        assert!(ScenarioConfig::parse("pause").is_err());
    }

    #[test]
    fn grid_sizes() {
        let base = ScenarioConfig::default();
        let g = sweep_grid(&base, SweepAxis::Density, &SweepAxis::Density.default_points(), &DEFAULT_SEEDS).unwrap();
        assert_eq!(g.len(), 60);
        assert_eq!(g[0].config.protocol, Protocol::MeaDsr);
        assert_eq!(g[5].config.protocol, Protocol::Dsr);
        assert_eq!(g[59].config.n_nodes, 100);
        let g = sweep_grid(&base, SweepAxis::SpeedClass, &["high".into()], &[1]).unwrap();
        assert_eq!((g[0].config.speed_min, g[0].config.speed_max), (20.0, 25.0));
        let s: Vec<usize> = sweep_grid(&base, SweepAxis::Sessions, &SweepAxis::Sessions.default_points(), &[1])
            .unwrap()
            .iter()
            .map(|g| g.config.n_connections)
            .collect();
        assert_eq!(s, vec![10, 10, 15, 15, 20, 20, 25, 25, 30, 30, 35, 35, 40, 40]);
    }

    #[test]
    fn paired_runs_share_scenario() {
        let mut a = ScenarioConfig {
            n_nodes: 20,
            sim_end: 60.0,
            ..ScenarioConfig::default()
        };
        let mut b = a.clone();
        a.protocol = Protocol::MeaDsr;
        b.protocol = Protocol::Dsr;
        b.wt = 0.2;
        assert_eq!(Scenario::generate(&a).unwrap(), Scenario::generate(&b).unwrap());
    }

    fn arb_config() -> impl Strategy<Value = ScenarioConfig> {
        (
            2usize..120,
            1.0f64..5000.0,
            0.1f64..30.0,
            0.0f64..900.0,
            1.0f64..900.0,
            0.001f64..1.0,
            any::<bool>(),
            any::<u64>(),
        )
            .prop_map(|(n, w, smin, pause, end, wt, dsr, seed)| ScenarioConfig {
                n_nodes: n,
                area_width: w,
                speed_min: smin,
                speed_max: smin * 2.0,
                pause,
                sim_end: end,
                n_connections: 1,
                wt,
                protocol: if dsr { Protocol::Dsr } else { Protocol::MeaDsr },
                seed,
                ..ScenarioConfig::default()
            })
    }

    proptest! {
        #[test]
        fn serialize_round_trips(c in arb_config()) {
            let text = c.serialize();
            let back = ScenarioConfig::parse(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.serialize(), text);
        }
    }
}
