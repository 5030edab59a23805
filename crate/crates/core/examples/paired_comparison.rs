//! Both protocols over the same five seeded scenarios, with per-metric seed
//! means side by side. Any `key=value` argument overrides the default
//! configuration.
//!
//! ```text
//! cargo run --release --example paired_comparison -- pause=0 speed_min=20 speed_max=25 sim_end=300
//! ```

use meadsr_sim::scenario::DEFAULT_SEEDS;
use meadsr_sim::sweep::{mean_rows, run_grid, Metrics};
use meadsr_sim::{Protocol, ScenarioConfig, SweepAxis};

fn main() -> meadsr_sim::Result<()> {
    let mut base = ScenarioConfig::default();
    for arg in std::env::args().skip(1) {
        let (k, v) = arg
            .split_once('=')
            .ok_or_else(|| meadsr_sim::Error::InvalidArgument(format!("expected key=value, got `{arg}`")))?;
        base.set(k.trim(), v.trim())?;
    }
    base.validate()?;

    // A single-point sweep on an axis whose value is already in the base.
    let point = base.wt.to_string();
    let grid = meadsr_sim::scenario::sweep_grid(&base, SweepAxis::Wt, &[point], &DEFAULT_SEEDS)?;
    let results = run_grid(&grid, None)?;

    println!("{:>8} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}", "", "srn", "td", "dm", "ecp", "etecn", "term");
    for r in &results {
        if let Ok(rep) = &r.outcome {
            print_row(&format!("{} #{}", short(r.protocol), r.seed), &Metrics::of(rep));
        }
    }
    for m in mean_rows(&results) {
        print_row(&format!("{} avg", short(m.protocol)), &m.metrics);
    }
    Ok(())
}

fn short(p: Protocol) -> &'static str {
    match p {
        Protocol::MeaDsr => "MEA",
        Protocol::Dsr => "DSR",
    }
}

fn print_row(label: &str, m: &Metrics) {
    let f = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.4}"));
    println!(
        "{label:>8} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        f(m.srn()),
        f(m.td()),
        f(m.dm()),
        f(m.ecp()),
        f(m.etecn()),
        f(m.term())
    );
}
