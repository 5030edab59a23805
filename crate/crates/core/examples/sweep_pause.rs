//! The pause-time sweep for both protocols, written as CSV to stdout with
//! a mean row after each group of seeds.
//!
//! ```text
//! cargo run --release --example sweep_pause -- [sim_end_secs] > pause.csv
//! ```

use meadsr_sim::scenario::{sweep_grid, DEFAULT_SEEDS};
use meadsr_sim::sweep::{run_grid, write_sweep_csv};
use meadsr_sim::{ScenarioConfig, SweepAxis};

fn main() -> meadsr_sim::Result<()> {
    let sim_end: f64 = std::env::args().nth(1).map_or(600.0, |s| s.parse().expect("sim_end must be a number"));
    let base = ScenarioConfig {
        sim_end,
        ..ScenarioConfig::default()
    };
    // Pauses beyond the run length all mean "never moves".
    let points: Vec<String> = SweepAxis::Pause
        .default_points()
        .into_iter()
        .filter(|p| p.parse::<f64>().unwrap() <= sim_end)
        .collect();
    let grid = sweep_grid(&base, SweepAxis::Pause, &points, &DEFAULT_SEEDS)?;
    eprintln!("{} runs", grid.len());
    let results = run_grid(&grid, None)?;
    write_sweep_csv(std::io::stdout().lock(), &results)
}
