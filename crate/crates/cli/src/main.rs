use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use fogcfg_core::harness::{self, ExperimentConfig, Preset, ScenarioBase, Strategy};
use fogcfg_core::scenario::{Scenario, ScenarioSnapshot};
use fogcfg_core::Error;

#[derive(Parser)]
#[command(name = "fogcfg", version, about = "Fog configuration experiments under energy budgets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment preset and write traces, summaries and a manifest.
    Run(RunArgs),
    /// Align trace files into comparison curves and a summary table.
    Summarize {
        /// Trace CSV files written by `run`.
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Write curves.csv and summary.csv here.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Generate or inspect scenario snapshots.
    #[command(subcommand)]
    Scenario(ScenarioCommand),
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Generate a scenario and save it as a JSON snapshot.
    Gen {
        #[command(flatten)]
        source: ConfigSource,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Print a saved scenario snapshot.
    Show { snapshot: PathBuf },
}

#[derive(Args)]
struct ConfigSource {
    /// Experiment config file (TOML).
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Base scenario when no config file sets one: plant or desk.
    #[arg(long, value_parser = parse_base)]
    base: Option<ScenarioBase>,
}

#[derive(Args)]
struct RunArgs {
    /// runtime_comparison, demand_allocation, v_sweep, capacity_sweep or convergence.
    #[arg(short, long, value_parser = parse_preset)]
    preset: Option<Preset>,
    #[command(flatten)]
    source: ConfigSource,
    /// Comma-separated seeds.
    #[arg(short, long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Output directory.
    #[arg(short, long, default_value = "runs")]
    out: PathBuf,
    /// Comma-separated strategies: afc, d_optimal, ncop, ssc.
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy)]
    strategy: Option<Vec<Strategy>>,
    /// Delay weight V.
    #[arg(long)]
    v: Option<f64>,
    /// Services each fog node can host.
    #[arg(long)]
    capacity: Option<usize>,
    /// Horizon T in slots.
    #[arg(long)]
    horizon: Option<usize>,
    /// V values for v_sweep, comma-separated.
    #[arg(long, value_delimiter = ',')]
    sweep_v: Option<Vec<f64>>,
    /// Capacities for capacity_sweep, comma-separated.
    #[arg(long, value_delimiter = ',')]
    sweep_capacity: Option<Vec<usize>>,
    /// Run every seed on this saved scenario.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Print the resolved config and run plan without running.
    #[arg(long)]
    dry_run: bool,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    Preset::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
        format!("unknown preset {s:?}; expected one of {}", names.join(", "))
    })
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    Strategy::from_name(s).ok_or_else(|| format!("unknown strategy {s:?}; expected afc, d_optimal, ncop or ssc"))
}

fn parse_base(s: &str) -> Result<ScenarioBase, String> {
    match s {
        "plant" => Ok(ScenarioBase::Plant),
        "desk" => Ok(ScenarioBase::Desk),
        _ => Err(format!("unknown scenario base {s:?}; expected plant or desk")),
    }
}

impl ConfigSource {
    fn load(&self, preset: Option<Preset>) -> fogcfg_core::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::for_preset(preset.unwrap_or(Preset::RuntimeComparison)),
        };
        if let Some(base) = self.base {
            if self.config.is_some() {
                return Err(Error::Config(vec![
                    "--base cannot be combined with --config; set scenario_base in the file".into(),
                ]));
            }
            cfg.scenario_base = base;
            cfg.scenario = base.config();
        }
        Ok(cfg)
    }
}

fn resolve(args: &RunArgs) -> fogcfg_core::Result<ExperimentConfig> {
    let mut cfg = args.source.load(args.preset)?;
    if let Some(p) = args.preset {
        cfg.preset = p;
    }
    if let Some(s) = &args.seeds {
        cfg.seeds = s.clone();
    }
    if let Some(s) = &args.strategy {
        cfg.strategies = Some(s.clone());
    }
    if let Some(v) = args.v {
        cfg.controller.v = v;
    }
    if let Some(c) = args.capacity {
        cfg.scenario.capacity = c;
    }
    if let Some(t) = args.horizon {
        cfg.controller.horizon = t;
    }
    if let Some(v) = &args.sweep_v {
        cfg.sweep.v = v.clone();
    }
    if let Some(c) = &args.sweep_capacity {
        cfg.sweep.capacity = c.clone();
    }
    if let Some(s) = &args.scenario {
        cfg.scenario_file = Some(s.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(args: &RunArgs) -> anyhow::Result<()> {
    let cfg = resolve(args)?;
    for w in cfg.scenario.warnings() {
        eprintln!("warning: {w}");
    }
    if args.dry_run {
        print!("{}", cfg.to_toml_string());
        println!("# config hash {}", cfg.hash());
        if cfg.preset == Preset::Convergence {
            println!("# {} seeds x 2 samplers", cfg.seeds.len());
        } else {
            for spec in harness::plan(&cfg) {
                println!("# {}", spec.stem());
            }
        }
        return Ok(());
    }
    ensure_dir(&args.out)?;
    let outcome = harness::run(&cfg, &args.out)?;
    if !outcome.summaries.is_empty() {
        print!("{}", harness::runs_table(&outcome.summaries));
    }
    for c in &outcome.convergence {
        println!(
            "{} seed {}: objective {}, plateau after {} rounds ({} sweeps), {} colors for {} nodes",
            c.solver, c.seed, c.objective, c.stats.plateau_round, c.stats.plateau_sweep, c.colors, c.fog_nodes
        );
    }
    eprintln!(
        "wrote {} files to {}",
        outcome.manifest.files.len() + 1,
        args.out.display()
    );
    Ok(())
}

fn cmd_summarize(traces: &[PathBuf], out: Option<&Path>) -> anyhow::Result<()> {
    let cmp = harness::summarize::load(traces)?;
    print!("{}", cmp.table());
    if let Some(dir) = out {
        cmp.write(dir)?;
        eprintln!("wrote curves.csv and summary.csv to {}", dir.display());
    }
    Ok(())
}

fn cmd_scenario(cmd: &ScenarioCommand) -> anyhow::Result<()> {
    match cmd {
        ScenarioCommand::Gen { source, seed, out } => {
            let cfg = source.load(None)?;
            let scenario = Scenario::generate(&cfg.scenario, *seed)?;
            ScenarioSnapshot::new(scenario.clone(), Some(*seed)).save(out)?;
            print!("{}", harness::describe(&scenario));
            eprintln!("wrote {}", out.display());
        }
        ScenarioCommand::Show { snapshot } => {
            let snap = ScenarioSnapshot::load(snapshot)
                .with_context(|| format!("cannot load {}", snapshot.display()))?;
            if let Some(seed) = snap.seed {
                println!("seed {seed}");
            }
            print!("{}", harness::describe(&snap.scenario));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Summarize { traces, out } => cmd_summarize(traces, out.as_deref()),
        Command::Scenario(cmd) => cmd_scenario(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match e.downcast_ref::<Error>() {
                Some(Error::Config(fields)) => {
                    eprintln!("error: invalid configuration");
                    for f in fields {
                        eprintln!("  {f}");
                    }
                    return ExitCode::from(2);
                }
                _ => eprintln!("error: {e:#}"),
            }
            if let Some(Error::Parse { .. }) = e.downcast_ref::<Error>() {
                return ExitCode::from(2);
            }
            ExitCode::FAILURE
        }
    }
}

fn ensure_dir(p: &Path) -> anyhow::Result<()> {
    if p.exists() && !p.is_dir() {
        bail!("{} is not a directory", p.display());
    }
    Ok(())
}
