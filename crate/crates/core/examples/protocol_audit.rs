//! Short audited MEA-DSR runs checked against the protocol invariants:
//! request copy caps, loop freedom, bottleneck-energy stamping, replies per
//! round, order-independent selection and cache purity after errors.

use meadsr_sim::audit::check;
use meadsr_sim::{simulate, Protocol, RunOptions, ScenarioConfig};

fn main() -> meadsr_sim::Result<()> {
    for seed in 1..=5 {
        let cfg = ScenarioConfig {
            protocol: Protocol::MeaDsr,
            n_nodes: 20,
            area_width: 600.0,
            area_height: 600.0,
            pause: 0.0,
            sim_end: 60.0,
            seed,
            ..ScenarioConfig::default()
        };
        let out = simulate(&cfg, RunOptions::audited())?;
        let violations = check(&out.audit);
        println!(
            "seed {seed}: {} audit events, {} violations, delivery {:.3}",
            out.audit.len(),
            violations.len(),
            out.report.td
        );
        for v in violations.iter().take(5) {
            println!("  {v}");
        }
    }
    Ok(())
}
