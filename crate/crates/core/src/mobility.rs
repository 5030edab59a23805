//! Random waypoint trajectories and position lookup.
//!
//! A scenario is generated up front so both protocols of a paired comparison
//! replay exactly the same movement. All stored coordinates and speeds are
//! quantized to 6 fractional digits, which makes the text form lossless.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::packet::NodeId;
use crate::rng::RngStream;
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// One movement leg followed by a pause.
#[derive(Debug, Clone, PartialEq)]
pub struct Waypoint {
    pub start_time: SimTime,
    pub start_pos: Point,
    pub dest_pos: Point,
    /// m/s; zero only for stationary legs.
    pub speed: f64,
    pub pause_after: f64,
}

impl Waypoint {
    pub fn travel_time(&self) -> SimTime {
        let d = self.start_pos.distance(self.dest_pos);
        if d == 0.0 || self.speed <= 0.0 {
            SimTime::ZERO
        } else {
            SimTime::from_secs_f64(d / self.speed)
        }
    }

    pub fn arrival(&self) -> SimTime {
        self.start_time + self.travel_time()
    }

    pub fn end(&self) -> SimTime {
        self.arrival() + SimTime::from_secs_f64(self.pause_after)
    }

    fn position_at(&self, t: SimTime) -> Point {
        let travel = self.travel_time();
        let elapsed = t.saturating_sub(self.start_time);
        if travel == SimTime::ZERO || elapsed >= travel {
            return self.dest_pos;
        }
        let frac = elapsed.as_micros() as f64 / travel.as_micros() as f64;
        Point {
            x: self.start_pos.x + (self.dest_pos.x - self.start_pos.x) * frac,
            y: self.start_pos.y + (self.dest_pos.y - self.start_pos.y) * frac,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RwpParams {
    pub nodes: usize,
    pub width: f64,
    pub height: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub pause: f64,
    pub sim_end: SimTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityScenario {
    legs: Vec<Vec<Waypoint>>,
    sim_end: SimTime,
}

fn quantize(v: f64) -> f64 {
    format!("{v:.6}").parse().expect("formatted float parses")
}

impl MobilityScenario {
    /// Builds a scenario from explicit legs, checking contiguity.
    pub fn from_legs(legs: Vec<Vec<Waypoint>>, sim_end: SimTime) -> Result<Self> {
        for (n, node_legs) in legs.iter().enumerate() {
            let first = node_legs.first().ok_or_else(|| {
                Error::InvalidArgument(format!("node {n} has no mobility legs"))
            })?;
            if first.start_time != SimTime::ZERO {
                return Err(Error::InvalidArgument(format!(
                    "node {n} first leg starts at {}",
                    first.start_time
                )));
            }
            for w in node_legs {
                if w.speed < 0.0 || (w.speed == 0.0 && w.start_pos != w.dest_pos) {
                    return Err(Error::InvalidArgument(format!(
                        "node {n} leg at {} moves with speed {}",
                        w.start_time, w.speed
                    )));
                }
            }
            for pair in node_legs.windows(2) {
                if pair[1].start_time != pair[0].end() || pair[1].start_pos != pair[0].dest_pos {
                    return Err(Error::InvalidArgument(format!(
                        "node {n} legs not contiguous at {}",
                        pair[1].start_time
                    )));
                }
            }
        }
        Ok(MobilityScenario { legs, sim_end })
    }

    /// Every node parked at its given position for the whole run.
    pub fn stationary(positions: &[Point], sim_end: SimTime) -> Self {
        let legs = positions
            .iter()
            .map(|&p| {
                vec![Waypoint {
                    start_time: SimTime::ZERO,
                    start_pos: p,
                    dest_pos: p,
                    speed: 0.0,
                    pause_after: sim_end.as_secs_f64(),
                }]
            })
            .collect();
        MobilityScenario { legs, sim_end }
    }

    /// Random waypoint generation. Each node starts at a uniform position,
    /// holds it for `pause` seconds, then alternates straight-line legs to
    /// uniform destinations at uniform speeds with `pause`-second stops.
    pub fn generate_rwp(p: &RwpParams, stream: &mut RngStream) -> Result<Self> {
        if !(p.speed_min > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "speed_min must be > 0, got {}",
                p.speed_min
            )));
        }
        if p.speed_min > p.speed_max {
            return Err(Error::InvalidArgument(format!(
                "speed_min {} > speed_max {}",
                p.speed_min, p.speed_max
            )));
        }
        if !(p.width > 0.0 && p.height > 0.0) {
            return Err(Error::InvalidArgument("area dimensions must be > 0".into()));
        }
        if p.pause < 0.0 {
            return Err(Error::InvalidArgument("pause must be >= 0".into()));
        }
        let pause = quantize(p.pause);
        let mut legs = Vec::with_capacity(p.nodes);
        for _ in 0..p.nodes {
            let mut pos = Point::new(
                quantize(stream.uniform(0.0, p.width)?),
                quantize(stream.uniform(0.0, p.height)?),
            );
            let mut node_legs = Vec::new();
            let mut t = SimTime::ZERO;
            if pause > 0.0 {
                let w = Waypoint {
                    start_time: t,
                    start_pos: pos,
                    dest_pos: pos,
                    speed: 0.0,
                    pause_after: pause,
                };
                t = w.end();
                node_legs.push(w);
            }
            while t < p.sim_end {
                let dest = Point::new(
                    quantize(stream.uniform(0.0, p.width)?),
                    quantize(stream.uniform(0.0, p.height)?),
                );
                let speed = quantize(stream.uniform(p.speed_min, p.speed_max)?)
                    .clamp(p.speed_min, p.speed_max);
                let w = Waypoint {
                    start_time: t,
                    start_pos: pos,
                    dest_pos: dest,
                    speed,
                    pause_after: pause,
                };
                t = w.end();
                pos = dest;
                node_legs.push(w);
            }
            legs.push(node_legs);
        }
        Ok(MobilityScenario {
            legs,
            sim_end: p.sim_end,
        })
    }

    pub fn node_count(&self) -> usize {
        self.legs.len()
    }

    pub fn sim_end(&self) -> SimTime {
        self.sim_end
    }

    pub fn legs(&self, node: NodeId) -> &[Waypoint] {
        &self.legs[node.index()]
    }

    pub fn position_at(&self, node: NodeId, t: SimTime) -> Result<Point> {
        if t > self.sim_end {
            return Err(Error::OutOfSpan {
                t: t.as_secs_f64(),
                end: self.sim_end.as_secs_f64(),
            });
        }
        let legs = self
            .legs
            .get(node.index())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown node {node}")))?;
        Ok(Self::lookup(legs, t))
    }

    /// Unchecked lookup used on the simulator's hot path.
    pub(crate) fn position_unchecked(&self, node: usize, t: SimTime) -> Point {
        Self::lookup(&self.legs[node], t)
    }

    fn lookup(legs: &[Waypoint], t: SimTime) -> Point {
        let i = legs.partition_point(|w| w.start_time <= t);
        legs[i.saturating_sub(1)].position_at(t)
    }

    /// Text form: one leg per line, `node_id start_time x0 y0 x1 y1 speed pause`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# sim_end {}", self.sim_end).unwrap();
        for (n, legs) in self.legs.iter().enumerate() {
            for w in legs {
                writeln!(
                    out,
                    "{} {} {:.6} {:.6} {:.6} {:.6} {:.6} {:.6}",
                    n,
                    w.start_time,
                    w.start_pos.x,
                    w.start_pos.y,
                    w.dest_pos.x,
                    w.dest_pos.y,
                    w.speed,
                    w.pause_after
                )
                .unwrap();
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut sim_end = None;
        let mut legs: Vec<Vec<Waypoint>> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("sim_end") {
                    let secs: f64 = v
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse(lineno, "bad sim_end"))?;
                    sim_end = Some(SimTime::from_secs_f64(secs));
                }
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 8 {
                return Err(Error::parse(lineno, format!("expected 8 fields, got {}", f.len())));
            }
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(lineno, format!("bad number `{s}`")))
            };
            let node: usize = f[0]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad node id `{}`", f[0])))?;
            if node != legs.len() && node + 1 != legs.len() {
                return Err(Error::parse(lineno, "node ids must be grouped and ascending"));
            }
            if node == legs.len() {
                legs.push(Vec::new());
            }
            legs[node].push(Waypoint {
                start_time: SimTime::from_secs_f64(num(f[1])?),
                start_pos: Point::new(num(f[2])?, num(f[3])?),
                dest_pos: Point::new(num(f[4])?, num(f[5])?),
                speed: num(f[6])?,
                pause_after: num(f[7])?,
            });
        }
        let sim_end = sim_end.ok_or_else(|| Error::parse(1, "missing `# sim_end` header"))?;
        Self::from_legs(legs, sim_end)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(pause: f64, vmin: f64, vmax: f64) -> RwpParams {
        RwpParams {
            nodes: 50,
            width: 1000.0,
            height: 1000.0,
            speed_min: vmin,
            speed_max: vmax,
            pause,
            sim_end: SimTime::from_secs(600),
        }
    }

    fn single_leg() -> MobilityScenario {
        MobilityScenario::from_legs(
            vec![vec![Waypoint {
                start_time: SimTime::ZERO,
                start_pos: Point::new(0.0, 0.0),
                dest_pos: Point::new(100.0, 0.0),
                speed: 10.0,
                pause_after: 20.0,
            }]],
            SimTime::from_secs(60),
        )
        .unwrap()
    }

    #[test]
    fn interpolates_along_leg() {
        let s = single_leg();
        let p = s.position_at(NodeId(0), SimTime::from_secs(5)).unwrap();
        assert_eq!(p, Point::new(50.0, 0.0));
    }

    #[test]
    fn leg_end_and_pause_hold_destination() {
        let s = single_leg();
        assert_eq!(
            s.position_at(NodeId(0), SimTime::from_secs(10)).unwrap(),
            Point::new(100.0, 0.0)
        );
        assert_eq!(
            s.position_at(NodeId(0), SimTime::from_secs(25)).unwrap(),
            Point::new(100.0, 0.0)
        );
    }

    #[test]
    fn query_outside_span_rejected() {
        let s = single_leg();
        assert!(s.position_at(NodeId(0), SimTime::from_secs(61)).is_err());
    }

    #[test]
    fn pause_equal_to_sim_end_is_stationary() {
        let mut rng = RngStream::new(3, crate::rng::MOBILITY);
        let s = MobilityScenario::generate_rwp(&params(600.0, 5.0, 10.0), &mut rng).unwrap();
        for n in 0..50 {
            let legs = s.legs(NodeId(n));
            assert_eq!(legs.len(), 1);
            assert_eq!(legs[0].start_pos, legs[0].dest_pos);
            let a = s.position_at(NodeId(n), SimTime::ZERO).unwrap();
            let b = s.position_at(NodeId(n), SimTime::from_secs(600)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn leg_speeds_within_range_and_positions_in_area() {
        let mut rng = RngStream::new(11, crate::rng::MOBILITY);
        let mut p = params(0.0, 5.0, 10.0);
        p.sim_end = SimTime::from_secs(20_000);
        let s = MobilityScenario::generate_rwp(&p, &mut rng).unwrap();
        let mut legs = 0;
        for n in 0..50 {
            for w in s.legs(NodeId(n)) {
                legs += 1;
                assert!((5.0..=10.0).contains(&w.speed), "speed {}", w.speed);
                for q in [w.start_pos, w.dest_pos] {
                    assert!((0.0..=1000.0).contains(&q.x) && (0.0..=1000.0).contains(&q.y));
                }
            }
        }
        assert!(legs >= 10_000, "only {legs} legs");
    }

    #[test]
    fn zero_speed_rejected() {
        let mut rng = RngStream::new(1, "m");
        assert!(MobilityScenario::generate_rwp(&params(100.0, 0.0, 10.0), &mut rng).is_err());
    }

    #[test]
    fn text_round_trip_is_lossless() {
        let mut rng = RngStream::new(5, crate::rng::MOBILITY);
        let s = MobilityScenario::generate_rwp(&params(100.0, 5.0, 10.0), &mut rng).unwrap();
        let back = MobilityScenario::from_text(&s.to_text()).unwrap();
        assert_eq!(back, s);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn displacement_bounded_by_vmax(seed in 0u64..1000, pause in 0.0f64..50.0) {
            let mut rng = RngStream::new(seed, crate::rng::MOBILITY);
            let mut p = params(pause, 1.0, 20.0);
            p.nodes = 4;
            p.sim_end = SimTime::from_secs(300);
            let s = MobilityScenario::generate_rwp(&p, &mut rng).unwrap();
            for n in 0..4 {
                let mut prev = s.position_at(NodeId(n), SimTime::ZERO).unwrap();
                for k in 1..=3000u64 {
                    let t = SimTime::from_millis(k * 100);
                    let cur = s.position_at(NodeId(n), t).unwrap();
                    // 1e-3 m slack for microsecond rounding of leg durations
                    prop_assert!(prev.distance(cur) <= 20.0 * 0.1 + 1e-3);
                    prev = cur;
                }
            }
        }

        #[test]
        fn generation_is_pure(seed in 0u64..1000) {
            let p = params(10.0, 5.0, 10.0);
            let a = MobilityScenario::generate_rwp(&p, &mut RngStream::new(seed, "mobility")).unwrap();
            let b = MobilityScenario::generate_rwp(&p, &mut RngStream::new(seed, "mobility")).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
