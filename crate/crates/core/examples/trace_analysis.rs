//! Metrics recomputed offline from a trace file agree with those collected
//! while the simulation ran.

use meadsr_sim::metrics::{compute_delivery_metrics, drop_census, energy_by_role, energy_from_trace};
use meadsr_sim::trace::{DropReason, Trace};
use meadsr_sim::{simulate, RunOptions, ScenarioConfig};

fn main() -> meadsr_sim::Result<()> {
    let cfg = ScenarioConfig {
        sim_end: 200.0,
        ..ScenarioConfig::default()
    };
    let out = simulate(&cfg, RunOptions::with_trace())?;
    let text = out.trace.as_ref().expect("trace kept").to_text();
    println!("{} trace lines, first three:", text.lines().count());
    for line in text.lines().take(3) {
        println!("  {line}");
    }

    let trace = Trace::from_text(&text)?;
    let d = compute_delivery_metrics(&trace);
    println!("\n{:<24} {:>14} {:>14}", "", "online", "from file");
    println!("{:<24} {:>14} {:>14}", "data sent", out.report.data_sent, d.data_sent);
    println!("{:<24} {:>14} {:>14}", "data received", out.report.data_received, d.data_received);
    println!("{:<24} {:>14} {:>14}", "routing packets", out.report.routing_packets, d.routing_packets);
    println!("{:<24} {:>14.6} {:>14.6}", "delivery fraction", out.report.td, d.td);

    let drops = drop_census(&trace);
    println!("\ndrops by reason:");
    for r in DropReason::ALL {
        println!("  {:<10} {:>8}", r.as_str(), drops.get(r));
    }

    let (tx, rx) = energy_by_role(&trace);
    let per_node = energy_from_trace(&trace, out.ledger.node_count());
    let traced: f64 = per_node.iter().map(|e| e.as_joules()).sum();
    println!("\nenergy: {:.3} J transmitting, {:.3} J receiving", tx.as_joules(), rx.as_joules());
    println!("traced total {traced:.6} J, ledger total {:.6} J", out.ledger.total_consumed().as_joules());
    Ok(())
}
