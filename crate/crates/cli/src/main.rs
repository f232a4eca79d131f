use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use partsim_cli::config::SweepConfig;
use partsim_cli::{
    cmd_census, cmd_simulate, run_eval, run_sweep, write_eval, write_sweep, CensusArgs, CliError, CliResult, RunConfig,
};
use partsim_core::analytics::ReportFormat;

#[derive(Parser)]
#[command(name = "partsim", version, about = "Partitioning-attack simulator and census analytics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `outputs` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report formats, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_format)]
    format: Vec<ReportFormat>,
    /// Replaces the simulation seed from the config.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Worker threads for Monte Carlo repetitions.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Census report (CDFs, covers, version census, lag series) from a snapshot directory.
    Census {
        #[command(flatten)]
        common: Common,
        /// Directory of snap-<unix_ts>.json files; overrides the config input.
        #[arg(long)]
        snapshots: Option<PathBuf>,
        /// Prefix table (`prefix,asn,org`) for addresses without an AS.
        #[arg(long)]
        prefixes: Option<PathBuf>,
        #[arg(long)]
        aliases: Option<PathBuf>,
        #[arg(long)]
        release_dates: Option<PathBuf>,
        /// Cover targets, comma separated.
        #[arg(long, value_delimiter = ',')]
        targets: Vec<f64>,
    },
    /// One simulation run with the configured scenarios.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo grid over scenario parameters.
    AttackSweep {
        #[command(flatten)]
        common: Common,
        /// Overrides `sweep.repetitions`.
        #[arg(long)]
        repetitions: Option<u64>,
    },
    /// False-positive rate of the lag detector by alert threshold.
    BlockawareEval {
        #[command(flatten)]
        common: Common,
    },
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    match s {
        "json" => Ok(ReportFormat::Json),
        "csv" => Ok(ReportFormat::Csv),
        other => Err(format!("unknown format `{other}` (json, csv)")),
    }
}

fn load(common: &Common) -> CliResult<RunConfig> {
    let path = common.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = common.seed_override {
        cfg.sim.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: Option<&RunConfig>) -> CliResult<PathBuf> {
    if let Some(o) = &common.out {
        return Ok(o.clone());
    }
    cfg.and_then(|c| c.outputs.as_ref().map(|o| c.resolve(o)))
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set `outputs`".into()))
}

fn formats(common: &Common, cfg: Option<&RunConfig>) -> BTreeSet<ReportFormat> {
    if !common.format.is_empty() {
        return common.format.iter().copied().collect();
    }
    cfg.map(|c| c.report_formats.clone()).unwrap_or_else(|| [ReportFormat::Json, ReportFormat::Csv].into())
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> CliResult<T> + Send) -> CliResult<T> {
    match jobs {
        None => f(),
        Some(0) => Err(CliError::Config("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?
            .install(f),
    }
}

fn census(
    common: &Common,
    snapshots: Option<PathBuf>,
    prefixes: Option<PathBuf>,
    aliases: Option<PathBuf>,
    release_dates: Option<PathBuf>,
    targets: Vec<f64>,
) -> CliResult<()> {
    let cfg = common.config.as_ref().map(|_| load(common)).transpose()?;
    let mut args = match (&snapshots, &cfg) {
        (Some(dir), _) => CensusArgs::new(dir),
        (None, Some(c)) => CensusArgs::from_config(c)?,
        (None, None) => return Err(CliError::Config("census needs --snapshots or --config".into())),
    };
    args.prefix_table = prefixes.or(args.prefix_table);
    args.aliases = aliases.or(args.aliases);
    args.release_dates = release_dates.or(args.release_dates);
    if !targets.is_empty() {
        if let Some(t) = targets.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(CliError::Config(format!("--targets: {t} not in (0,1]")));
        }
        args.targets = targets;
    }
    let out = out_dir(common, cfg.as_ref())?;
    let bundle = cmd_census(&args, &out, &formats(common, cfg.as_ref()))?;
    for c in &bundle.covers {
        println!("{} cover {:.2}: {} members ({:.4})", c.level, c.target, c.count, c.covered_fraction);
    }
    println!("versions: {} distinct", bundle.version_census.distinct_count);
    println!("report written to {}", out.display());
    Ok(())
}

fn simulate(common: &Common) -> CliResult<()> {
    let cfg = load(common)?;
    let out = out_dir(common, Some(&cfg))?;
    let result = cmd_simulate(&cfg, &out, &formats(common, Some(&cfg)))?;
    let s = &result.summary;
    println!("{} nodes, {} blocks mined, {} reorgs over {} s", s.nodes, s.blocks_mined, s.reorgs, s.horizon);
    for o in &result.bundle.attack_outcomes {
        println!("outcome `{}`: {} nodes affected", o.label(), o.affected_nodes());
    }
    println!("output written to {}", out.display());
    Ok(())
}

fn sweep(common: &Common, repetitions: Option<u64>) -> CliResult<()> {
    let mut cfg = load(common)?;
    if let Some(r) = repetitions {
        if r == 0 {
            return Err(CliError::Config("--repetitions must be at least 1".into()));
        }
        cfg.sweep.get_or_insert_with(|| SweepConfig { repetitions: 1, axes: Vec::new() }).repetitions = r;
    }
    let out = out_dir(common, Some(&cfg))?;
    let rows = with_jobs(common.jobs, || run_sweep(&cfg))?;
    write_sweep(&rows, &out)?;
    println!("{} grid cells written to {}", rows.len(), out.display());
    Ok(())
}

fn blockaware_eval(common: &Common) -> CliResult<()> {
    let cfg = common.config.as_ref().map(|_| load(common)).transpose()?;
    let base = cfg.as_ref().and_then(|c| c.blockaware).unwrap_or_default();
    base.validate().map_err(|e| CliError::at("blockaware", e))?;
    let eval = cfg.as_ref().and_then(|c| c.blockaware_eval.clone()).unwrap_or_default();
    let seed = common.seed_override.or(cfg.as_ref().map(|c| c.sim.seed)).unwrap_or(0);
    let out = out_dir(common, cfg.as_ref())?;
    let rows = with_jobs(common.jobs, || run_eval(&base, &eval, seed))?;
    write_eval(&rows, &out)?;
    for r in &rows {
        println!("threshold {}: false positives {:.4} (Poisson {:.4})", r.threshold, r.false_positive_rate, r.poisson_rate);
    }
    Ok(())
}

fn dispatch(cmd: Cmd) -> CliResult<()> {
    match cmd {
        Cmd::Census { common, snapshots, prefixes, aliases, release_dates, targets } => {
            census(&common, snapshots, prefixes, aliases, release_dates, targets)
        }
        Cmd::Simulate { common } => simulate(&common),
        Cmd::AttackSweep { common, repetitions } => sweep(&common, repetitions),
        Cmd::BlockawareEval { common } => blockaware_eval(&common),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
