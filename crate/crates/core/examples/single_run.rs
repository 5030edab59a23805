//! One run of each protocol on the same generated scenario.
//!
//! ```text
//! cargo run --release --example single_run -- [seed] [sim_end_secs]
//! ```

use std::time::Instant;

use meadsr_sim::{simulate, Protocol, RunOptions, ScenarioConfig};

fn main() -> meadsr_sim::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map_or(Ok(1), |s| s.parse()).expect("seed must be an integer");
    let sim_end = args.next().map_or(Ok(600.0), |s| s.parse()).expect("sim_end must be a number");

    for protocol in Protocol::ALL {
        let cfg = ScenarioConfig {
            protocol,
            seed,
            sim_end,
            ..ScenarioConfig::default()
        };
        let started = Instant::now();
        let out = simulate(&cfg, RunOptions::default())?;
        println!("== {protocol} (seed {seed}, {sim_end} s, {:.2?} wall)", started.elapsed());
        print!("{}", out.report);
        println!("in flight at end: {}", out.in_flight);
        println!("accounting balanced: {}\n", out.accounting_balanced());
    }
    Ok(())
}
