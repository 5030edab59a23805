//! How a destination picks its two replies from the request copies it
//! collected during one wait window.

use meadsr_sim::packet::NodeId;
use meadsr_sim::routing::selection::{
    entry, ratio_joules_per_hop, select_alternate_route, select_primary_route, shared_intermediates,
};

fn main() {
    // Source 0, destination 9. Routes list intermediate nodes only.
    let candidates = vec![
        entry(&[1, 2], 610.0, 1_000),
        entry(&[3, 4, 5], 980.0, 1_400),
        entry(&[1, 6, 5], 990.0, 1_900),
        entry(&[7, 8, 2, 5], 995.0, 2_300),
    ];

    println!("{:<16} {:>12} {:>8} {:>14}", "route", "min_bat_lev", "hops", "J per hop");
    for c in &candidates {
        println!(
            "{:<16} {:>12.1} {:>8} {:>14.2}",
            format!("{:?}", c.route.iter().map(|n| n.0).collect::<Vec<_>>()),
            c.min_bat_lev.unwrap().as_joules(),
            c.route_length(),
            ratio_joules_per_hop(c)
        );
    }

    let dest = NodeId(9);
    let primary = select_primary_route(&candidates).expect("non-empty");
    let alternate = select_alternate_route(&candidates, primary).expect("more than one candidate");
    let p = primary.full_path(dest);
    let a = alternate.full_path(dest);
    let show = |r: &[NodeId]| r.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" -> ");
    println!("\nprimary   {}", show(&p));
    println!("alternate {} (shared intermediates: {})", show(&a), shared_intermediates(&p, &a).unwrap());
}
