//! Random waypoint motion for the default scenario: a few node positions
//! over time and how the number of radio neighbors evolves.
//!
//! ```text
//! cargo run --release --example mobility_trace -- [seed] [file]
//! ```
//! With a file argument the scenario is also written in its text form.

use meadsr_sim::mobility::Point;
use meadsr_sim::packet::NodeId;
use meadsr_sim::radio::in_range;
use meadsr_sim::{Scenario, ScenarioConfig, SimTime};

fn main() -> meadsr_sim::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map_or(1, |s| s.parse().expect("seed must be an integer"));
    let cfg = ScenarioConfig {
        seed,
        ..ScenarioConfig::default()
    };
    let scenario = Scenario::generate(&cfg)?;
    let mob = &scenario.mobility;

    println!("{:>6}  {:>20} {:>20} {:>20}  {:>10}", "t (s)", "node 0", "node 1", "node 2", "avg degree");
    for secs in (0..=600).step_by(60) {
        let t = SimTime::from_secs(secs);
        let pos: Vec<Point> = (0..mob.node_count() as u32)
            .map(|i| mob.position_at(NodeId(i), t))
            .collect::<Result<_, _>>()?;
        let links: usize = pos
            .iter()
            .enumerate()
            .map(|(i, a)| pos.iter().enumerate().filter(|&(j, b)| i != j && in_range(*a, *b, cfg.range)).count())
            .sum();
        let show = |p: Point| format!("({:7.1},{:7.1})", p.x, p.y);
        println!(
            "{secs:>6}  {:>20} {:>20} {:>20}  {:>10.2}",
            show(pos[0]),
            show(pos[1]),
            show(pos[2]),
            links as f64 / pos.len() as f64
        );
    }

    if let Some(path) = args.next() {
        std::fs::write(&path, mob.to_text())?;
        println!("\nwrote {path}");
    }
    Ok(())
}
