//! MEA-DSR overhead and delay as the destination wait window grows.
//!
//! ```text
//! cargo run --release --example wt_sensitivity -- [sim_end_secs]
//! ```

use meadsr_sim::scenario::{sweep_grid, DEFAULT_SEEDS};
use meadsr_sim::sweep::{mean_rows, run_grid};
use meadsr_sim::{Protocol, ScenarioConfig, SweepAxis};

fn main() -> meadsr_sim::Result<()> {
    let sim_end = std::env::args().nth(1).map_or(600.0, |s| s.parse().expect("sim_end must be a number"));
    let base = ScenarioConfig {
        protocol: Protocol::MeaDsr,
        sim_end,
        ..ScenarioConfig::default()
    };
    let points = SweepAxis::Wt.default_points();
    let grid: Vec<_> = sweep_grid(&base, SweepAxis::Wt, &points, &DEFAULT_SEEDS)?
        .into_iter()
        .filter(|g| g.config.protocol == Protocol::MeaDsr)
        .collect();
    let results = run_grid(&grid, None)?;

    println!("{:>6} {:>10} {:>10} {:>12}", "wt (s)", "srn", "td", "dm (ms)");
    for m in mean_rows(&results) {
        let v = m.metrics;
        println!(
            "{:>6} {:>10.4} {:>10.4} {:>12.3}",
            m.axis_value,
            v.srn().unwrap_or(f64::NAN),
            v.td().unwrap_or(f64::NAN),
            v.dm().unwrap_or(f64::NAN) * 1e3
        );
    }
    Ok(())
}
