//! Discrete-event simulation of mobile ad-hoc networks running an
//! energy-aware multipath source-routing protocol (MEA-DSR) or baseline DSR.
//!
//! A run is fully determined by its [`ScenarioConfig`]: node motion, traffic
//! and every random choice derive from the seed through named streams, so
//! the two protocols can be compared on identical scenarios.
//!
//! ```no_run
//! use meadsr_sim::{simulate, Protocol, RunOptions, ScenarioConfig};
//!
//! let cfg = ScenarioConfig { protocol: Protocol::Dsr, sim_end: 120.0, ..Default::default() };
//! let out = simulate(&cfg, RunOptions::default()).unwrap();
//! print!("{}", out.report);
//! ```

pub mod audit;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod mobility;
pub mod packet;
pub mod radio;
pub mod rng;
pub mod routing;
pub mod scenario;
pub mod sweep;
pub mod time;
pub mod trace;
pub mod traffic;
pub mod world;

pub use error::{Error, Result};
pub use metrics::MetricsReport;
pub use packet::NodeId;
pub use scenario::{Protocol, Scenario, ScenarioConfig, SweepAxis};
pub use time::SimTime;
pub use world::{simulate, RunOptions, RunOutput, Simulation};
