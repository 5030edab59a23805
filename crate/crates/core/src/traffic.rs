//! Constant-bit-rate connections and their emission schedules.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::packet::NodeId;
use crate::rng::RngStream;
use crate::time::SimTime;

pub const DEFAULT_PACKET_SIZE: u32 = 512;
pub const DEFAULT_MAX_PACKETS: u32 = 10_000;
/// Connections start uniformly within this window.
pub const START_WINDOW: SimTime = SimTime::from_secs(120);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connection {
    pub src: NodeId,
    pub dst: NodeId,
    pub start_time: SimTime,
    pub packet_size: u32,
    pub interval: SimTime,
    pub max_packets: u32,
}

impl Connection {
    /// Emission times before `end`: one per interval slot, each at a uniform
    /// offset within its slot.
    pub fn schedule(&self, end: SimTime, stream: &mut RngStream) -> Vec<SimTime> {
        let step = self.interval.as_micros();
        let mut out = Vec::new();
        if step == 0 {
            return out;
        }
        for k in 0..self.max_packets as u64 {
            let slot = self.start_time.as_micros() + k * step;
            if slot >= end.as_micros() {
                break;
            }
            let offset = stream.below(step).expect("non-empty slot");
            let t = slot + offset;
            if t >= end.as_micros() {
                break;
            }
            out.push(SimTime::from_micros(t));
        }
        out
    }
}

/// Draws `n` connections over distinct ordered `(src, dst)` pairs. Sources
/// may repeat.
pub fn generate_connections(
    nodes: usize,
    n: usize,
    rate: f64,
    packet_size: u32,
    stream: &mut RngStream,
) -> Result<Vec<Connection>> {
    if n == 0 {
        return Err(Error::InvalidArgument("at least one connection is required".into()));
    }
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::InvalidArgument(format!("packet rate must be positive, got {rate}")));
    }
    let pairs = nodes.saturating_mul(nodes.saturating_sub(1));
    if n > pairs {
        return Err(Error::InvalidArgument(format!(
            "{n} connections exceed the {pairs} distinct pairs among {nodes} nodes"
        )));
    }
    let interval = SimTime::from_secs_f64(1.0 / rate);
    if interval == SimTime::ZERO {
        return Err(Error::InvalidArgument(format!("packet rate {rate} is too high")));
    }
    let mut used = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let src = stream.below(nodes as u64)? as u32;
        let dst = stream.below(nodes as u64)? as u32;
        if src == dst || !used.insert((src, dst)) {
            continue;
        }
        let start = stream.below(START_WINDOW.as_micros() + 1)?;
        out.push(Connection {
            src: NodeId(src),
            dst: NodeId(dst),
            start_time: SimTime::from_micros(start),
            packet_size,
            interval,
            max_packets: DEFAULT_MAX_PACKETS,
        });
    }
    Ok(out)
}

/// One line per connection: `src dst start_time packet_size interval max_packets`.
pub fn connections_to_text(conns: &[Connection]) -> String {
    let mut s = String::new();
    for c in conns {
        writeln!(
            s,
            "{} {} {} {} {} {}",
            c.src, c.dst, c.start_time, c.packet_size, c.interval, c.max_packets
        )
        .unwrap();
    }
    s
}

pub fn connections_from_text(text: &str) -> Result<Vec<Connection>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return Err(Error::parse(i + 1, format!("expected 6 fields, got {}", f.len())));
        }
        let int = |s: &str| s.parse::<u32>().map_err(|_| Error::parse(i + 1, format!("bad integer `{s}`")));
        let secs = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .map(SimTime::from_secs_f64)
                .ok_or_else(|| Error::parse(i + 1, format!("bad time `{s}`")))
        };
        let c = Connection {
            src: NodeId(int(f[0])?),
            dst: NodeId(int(f[1])?),
            start_time: secs(f[2])?,
            packet_size: int(f[3])?,
            interval: secs(f[4])?,
            max_packets: int(f[5])?,
        };
        if c.src == c.dst {
            return Err(Error::parse(i + 1, "connection from a node to itself"));
        }
        out.push(c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::TRAFFIC;
    use proptest::prelude::*;

    fn conn(start_s: f64, interval_s: f64, max: u32) -> Connection {
        Connection {
            src: NodeId(0),
            dst: NodeId(1),
            start_time: SimTime::from_secs_f64(start_s),
            packet_size: 512,
            interval: SimTime::from_secs_f64(interval_s),
            max_packets: max,
        }
    }

    #[test]
    fn rate_four_gives_quarter_second_interval() {
        let mut s = RngStream::new(1, TRAFFIC);
        let c = generate_connections(50, 10, 4.0, 512, &mut s).unwrap();
        assert_eq!(c.len(), 10);
        assert!(c.iter().all(|c| c.interval == SimTime::from_millis(250)));
        assert!(c.iter().all(|c| c.start_time <= START_WINDOW && c.src != c.dst));
        let pairs: BTreeSet<_> = c.iter().map(|c| (c.src, c.dst)).collect();
        assert_eq!(pairs.len(), 10);
    }

    #[test]
    fn invalid_requests_rejected() {
        let mut s = RngStream::new(1, TRAFFIC);
        assert!(generate_connections(50, 0, 4.0, 512, &mut s).is_err());
        assert!(generate_connections(3, 7, 4.0, 512, &mut s).is_err());
        assert!(generate_connections(3, 6, 4.0, 512, &mut s).is_ok());
        assert!(generate_connections(50, 1, 0.0, 512, &mut s).is_err());
    }

    #[test]
    fn ten_second_window_emits_forty() {
        let mut s = RngStream::new(3, TRAFFIC);
        let t = conn(0.0, 0.25, 10_000).schedule(SimTime::from_secs(10), &mut s);
        assert!((39..=41).contains(&t.len()), "{}", t.len());
    }

    #[test]
    fn emissions_stop_before_end_and_at_cap() {
        let mut s = RngStream::new(3, TRAFFIC);
        let end = SimTime::from_secs(600);
        let t = conn(37.5, 0.25, 10_000).schedule(end, &mut s);
        assert!(*t.last().unwrap() < end);
        assert!(t[0] >= SimTime::from_secs_f64(37.5));
        let t = conn(0.0, 0.25, 3).schedule(end, &mut s);
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn text_round_trip() {
        let mut s = RngStream::new(9, TRAFFIC);
        let c = generate_connections(20, 12, 3.0, 512, &mut s).unwrap();
        assert_eq!(connections_from_text(&connections_to_text(&c)).unwrap(), c);
        assert!(connections_from_text("1 1 0.0 512 0.25 10").is_err());
    }

    proptest! {
        #[test]
        fn count_is_floor_or_ceil(seed in 0u64..1000, start_ms in 0u64..120_000, rate in 1u32..13, end_s in 121u64..400) {
            let c = Connection {
                src: NodeId(0),
                dst: NodeId(1),
                start_time: SimTime::from_millis(start_ms),
                packet_size: 512,
                interval: SimTime::from_secs_f64(1.0 / rate as f64),
                max_packets: 10_000,
            };
            let end = SimTime::from_secs(end_s);
            let mut s = RngStream::new(seed, TRAFFIC);
            let n = c.schedule(end, &mut s).len() as u64;
            let span = end.as_micros() - c.start_time.as_micros();
            let step = c.interval.as_micros();
            prop_assert!(n == span / step || n == span.div_ceil(step));
        }

        #[test]
        fn schedule_is_pure(seed in 0u64..1000) {
            let c = conn(5.0, 0.25, 10_000);
            let a = c.schedule(SimTime::from_secs(100), &mut RngStream::new(seed, TRAFFIC));
            let b = c.schedule(SimTime::from_secs(100), &mut RngStream::new(seed, TRAFFIC));
            prop_assert_eq!(a, b);
        }
    }
}
