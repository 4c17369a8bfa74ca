use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use laa_cli::spec::{Engine, ExperimentSpec, Mode};
use laa_cli::{Extras, EXIT_ERROR};
use laa_core::config::parse_kv;

#[derive(Parser)]
#[command(name = "laa", version, about = "LTE-LAA / Wi-Fi hidden-terminal coexistence: analysis and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the joint chain for every cell.
    Analyze(Common),
    /// Run the slot-level simulator for every cell.
    Simulate(Common),
    /// Run both engines and check them against each other.
    Compare(Common),
    /// Run the engines listed in the spec (default: both) over the grid.
    Sweep(Common),
    /// Collided-subframe grid on the 8 ms MCOT.
    Table4(Common),
    /// Simulated overlap fraction on the 8 and 10 ms MCOT.
    Table5(Common),
    /// Data series for one or more figures (fig7, fig8, fig9, fig12, fig13, fig14).
    Figure {
        #[arg(required = true)]
        names: Vec<String>,
        /// Skip the simulator.
        #[arg(long)]
        analytic_only: bool,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment spec file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use seeds 1..=N.
    #[arg(long, conflicts_with = "seed_list")]
    seeds: Option<u64>,
    /// Comma-separated seeds.
    #[arg(long)]
    seed_list: Option<String>,
    /// Measured slots per seed.
    #[arg(long)]
    slots: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// `paper` or `strict`.
    #[arg(long)]
    tol_profile: Option<String>,
    /// Directory for cached analytic results.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Override any spec or system key.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Write per-seed event traces of the simulator.
    #[arg(long)]
    trace: bool,
}

fn build_spec(common: &Common, mode: Option<Mode>) -> laa_core::Result<ExperimentSpec> {
    let mut kv: BTreeMap<String, String> = match &common.config {
        Some(path) => parse_kv(&std::fs::read_to_string(path)?)?,
        None => BTreeMap::new(),
    };
    for item in &common.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| laa_core::Error::InvalidArgument(format!("--set expects key=value, got '{item}'")))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    if let Some(n) = common.seeds {
        kv.insert("seeds".into(), (1..=n).map(|s| s.to_string()).collect::<Vec<_>>().join(","));
    }
    let flags = [
        ("seeds", common.seed_list.clone()),
        ("slots", common.slots.map(|s| s.to_string())),
        ("jobs", common.jobs.map(|j| j.to_string())),
        ("tol_profile", common.tol_profile.clone()),
        ("out", common.out.as_ref().map(|p| p.display().to_string())),
        ("cache", common.cache.as_ref().map(|p| p.display().to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            kv.insert(k.into(), v);
        }
    }
    if common.trace {
        kv.insert("trace".into(), "true".into());
    }
    let mut spec = ExperimentSpec::default();
    spec.apply(&kv)?;
    if let Some(mode) = mode {
        spec.mode = mode;
        spec.engines = match mode {
            Mode::Analyze => vec![Engine::Analytic],
            Mode::Simulate => vec![Engine::Simulation],
            Mode::Compare => vec![Engine::Analytic, Engine::Simulation],
            Mode::Sweep if kv.contains_key("engines") => spec.engines,
            Mode::Sweep => vec![Engine::Analytic, Engine::Simulation],
        };
    }
    Ok(spec)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (name, built, extras) = match &cli.command {
        Command::Analyze(c) => ("analyze", build_spec(c, Some(Mode::Analyze)), Extras::default()),
        Command::Simulate(c) => ("simulate", build_spec(c, Some(Mode::Simulate)), Extras::default()),
        Command::Compare(c) => ("compare", build_spec(c, Some(Mode::Compare)), Extras::default()),
        Command::Sweep(c) => ("sweep", build_spec(c, Some(Mode::Sweep)), Extras::default()),
        Command::Table4(c) => (
            "table4",
            build_spec(c, None).map(laa_cli::table4_spec),
            Extras { table: Some("table4".into()), ..Default::default() },
        ),
        Command::Table5(c) => (
            "table5",
            build_spec(c, None).map(laa_cli::table5_spec),
            Extras { table: Some("table5".into()), ..Default::default() },
        ),
        Command::Figure { names, analytic_only, common } => {
            let engines = if *analytic_only { vec![Engine::Analytic] } else { vec![Engine::Analytic, Engine::Simulation] };
            (
                "figure",
                build_spec(common, None).map(|s| laa_cli::figure_spec(s, engines)),
                Extras { figures: names.clone(), ..Default::default() },
            )
        }
    };
    let code = match built {
        Ok(spec) => laa_cli::run_experiment(name, &spec, &extras),
        Err(e) => {
            log::error!("{e}");
            EXIT_ERROR
        }
    };
    ExitCode::from(code as u8)
}
