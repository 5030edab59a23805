use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use meadsr_sim::scenario::{sweep_grid, DEFAULT_SEEDS};
use meadsr_sim::sweep::{run_grid, write_run_csv, write_sweep_csv};
use meadsr_sim::traffic::connections_to_text;
use meadsr_sim::{Error, Protocol, RunOptions, Scenario, ScenarioConfig, Simulation, SweepAxis};

#[derive(Parser)]
#[command(name = "meadsr", version, about = "MANET simulator for MEA-DSR and DSR")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one simulation and write its trace, metrics row and summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// MEA-DSR or DSR; overrides the config file.
        #[arg(long)]
        protocol: Option<Protocol>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "on")]
        trace: Switch,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run both protocols over every point of one axis and seed.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// pause, speed_class, density, rate, sessions or wt.
        #[arg(long)]
        axis: SweepAxis,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; all cores by default.
        #[arg(long)]
        jobs: Option<usize>,
        /// Comma-separated axis values instead of the axis defaults.
        #[arg(long, value_delimiter = ',')]
        points: Option<Vec<String>>,
        /// Comma-separated seeds instead of 1..5.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
}

fn main() -> ExitCode {
    let result = match Cli::parse().cmd {
        Cmd::Run {
            config,
            protocol,
            seed,
            trace,
            out,
        } => cmd_run(&config, protocol, seed, trace == Switch::On, &out),
        Cmd::Sweep {
            config,
            axis,
            out,
            jobs,
            points,
            seeds,
        } => cmd_sweep(&config, axis, &out, jobs, points, seeds),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("meadsr: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(path: &Path) -> Result<ScenarioConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    ScenarioConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<File, String> {
    File::create(path).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    create(path)?
        .write_all(contents.as_bytes())
        .map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn prepare_dir(out: &Path) -> Result<(), String> {
    fs::create_dir_all(out).map_err(|e| format!("cannot create {}: {e}", out.display()))
}

fn err(e: Error) -> String {
    e.to_string()
}

fn cmd_run(config: &Path, protocol: Option<Protocol>, seed: Option<u64>, trace: bool, out: &Path) -> Result<(), String> {
    let mut cfg = load_config(config)?;
    if let Some(p) = protocol {
        cfg.protocol = p;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(err)?;
    prepare_dir(out)?;

    let stem = format!("{}-seed{}", cfg.protocol, cfg.seed);
    let scenario = Scenario::generate(&cfg).map_err(err)?;
    write_file(&out.join(format!("seed{}.mobility", cfg.seed)), &scenario.mobility.to_text())?;
    write_file(&out.join(format!("seed{}.connections", cfg.seed)), &connections_to_text(&scenario.connections))?;

    let mut opts = RunOptions::default();
    if trace {
        let file = create(&out.join(format!("{stem}.tr")))?;
        opts.trace_sink = Some(Box::new(BufWriter::new(file)));
    }
    let run = Simulation::new(&cfg, &scenario, opts).and_then(|s| s.run()).map_err(err)?;

    if !run.accounting_balanced() {
        return Err(format!(
            "packet accounting does not balance: sent {} != received {} + dropped {} + in flight {}",
            run.report.data_sent,
            run.report.data_received,
            run.report.drops.terminal(),
            run.in_flight
        ));
    }
    if !run.energy_traced_exactly() {
        return Err("per-node energy ledger disagrees with the traced energy records".into());
    }

    let csv = out.join(format!("{stem}.csv"));
    write_run_csv(create(&csv)?, "run", cfg.protocol, cfg.seed, &run.report).map_err(err)?;
    let summary = run.report.summary();
    write_file(&out.join(format!("{stem}.summary")), &summary)?;
    print!("{summary}");
    Ok(())
}

fn cmd_sweep(
    config: &Path,
    axis: SweepAxis,
    out: &Path,
    jobs: Option<usize>,
    points: Option<Vec<String>>,
    seeds: Option<Vec<u64>>,
) -> Result<(), String> {
    let base = load_config(config)?;
    let points = points.unwrap_or_else(|| axis.default_points());
    let seeds = seeds.unwrap_or_else(|| DEFAULT_SEEDS.to_vec());
    let grid = sweep_grid(&base, axis, &points, &seeds).map_err(err)?;
    if jobs == Some(0) {
        return Err("--jobs must be at least 1".into());
    }

    prepare_dir(out)?;
    let path = out.join(format!("{axis}.csv"));
    let file = create(&path)?;
    write_file(&out.join("base.conf"), &base.serialize())?;

    eprintln!("{} runs ({} points x 2 protocols x {} seeds)", grid.len(), points.len(), seeds.len());
    let results = run_grid(&grid, jobs).map_err(err)?;
    let mut failed = 0;
    for r in &results {
        if let Err(e) = &r.outcome {
            failed += 1;
            eprintln!("{axis}={} {} seed {} failed: {e}", r.axis_value, r.protocol, r.seed);
        }
    }
    write_sweep_csv(BufWriter::new(file), &results).map_err(err)?;
    eprintln!("wrote {}", path.display());
    if failed > 0 {
        eprintln!("{failed} of {} runs failed; their points are marked mean(partial)", results.len());
    }
    Ok(())
}
