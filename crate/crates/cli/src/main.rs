use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hemsim::scenario::DataSet;
use hemsim_cli::campaign::{build_campaign, CampaignFile, CampaignSpec, CliOverrides, ControllerKind, Diagnostics};
use hemsim_cli::runner::{run_campaign, write_summary, ReplayError};

const EXIT_RUN_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "hemsim",
    version,
    about = "Simulate a smart home under baseline and coordinated control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one run or a whole campaign and write ledgers and reports.
    Run(RunArgs),
    /// Check a configuration file without simulating.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Recompute the metrics of a written ledger directory.
    Replay { ledger: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    case: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    days: Option<u32>,
    #[arg(long)]
    start_day: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    controllers: Option<Vec<ControllerKind>>,
    /// Settings file; may also list runs.
    #[arg(long, conflicts_with = "campaign")]
    config: Option<PathBuf>,
    /// Campaign file listing one or more `[[run]]` entries.
    #[arg(long)]
    campaign: Option<PathBuf>,
    #[arg(long, default_value = "runs")]
    out_dir: PathBuf,
    /// Parallel runs; defaults to the file's setting or the number of CPUs.
    #[arg(long)]
    workers: Option<usize>,
    /// Validate the configuration and exit.
    #[arg(long)]
    validate: bool,
}

fn load_spec(path: Option<&Path>, require_runs: bool, cli: &CliOverrides) -> Result<CampaignSpec, Diagnostics> {
    let file = match path {
        Some(p) => CampaignFile::load(p)?,
        None => CampaignFile::default(),
    };
    if require_runs && file.runs.is_empty() {
        return Err(Diagnostics(vec!["campaign file lists no [[run]] entries".into()]));
    }
    build_campaign(&file, cli)
}

fn config_error(d: &Diagnostics) -> ExitCode {
    eprint!("configuration error:\n{d}");
    ExitCode::from(EXIT_CONFIG)
}

fn run(args: RunArgs) -> ExitCode {
    let cli = CliOverrides {
        case: args.case,
        seed: args.seed,
        days: args.days,
        start_day: args.start_day,
        controllers: args.controllers,
    };
    let path = args.campaign.as_deref().or(args.config.as_deref());
    let spec = match load_spec(path, args.campaign.is_some(), &cli) {
        Ok(s) => s,
        Err(d) => return config_error(&d),
    };
    if args.validate {
        println!("ok: {} run(s)", spec.runs.len());
        return ExitCode::SUCCESS;
    }
    let data = match DataSet::load() {
        Ok(d) => d,
        Err(e) => return config_error(&Diagnostics(vec![format!("data files: {e}")])),
    };
    let workers = args
        .workers
        .or(spec.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let results = run_campaign(&spec, &data, &args.out_dir, workers);
    let summary = match write_summary(&args.out_dir, &spec.runs, &results) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: writing the campaign summary: {e:#}");
            return ExitCode::from(EXIT_RUN_FAILURE);
        }
    };
    for r in results.iter().flatten() {
        if let Some(c) = &r.comparison {
            if let Some(row) = c.row("grid_cost") {
                println!(
                    "{}: grid cost baseline ${:.2}, hem ${:.2} ({:+.1} %)",
                    r.label,
                    row.baseline,
                    row.hem,
                    row.delta_pct.unwrap_or(0.0)
                );
            }
        }
    }
    let failed = results.iter().filter(|r| r.is_err()).count();
    println!(
        "{} of {} run(s) succeeded; summary in {}",
        results.len() - failed,
        results.len(),
        summary.display()
    );
    if failed > 0 {
        ExitCode::from(EXIT_RUN_FAILURE)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Validate { config } => match load_spec(Some(&config), false, &CliOverrides::default()) {
            Ok(spec) => {
                println!("ok: {} run(s)", spec.runs.len());
                ExitCode::SUCCESS
            }
            Err(d) => config_error(&d),
        },
        Command::Replay { ledger } => match hemsim_cli::replay(&ledger) {
            Ok(report) => {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
                ExitCode::SUCCESS
            }
            Err(ReplayError::Ledger(e)) => {
                eprintln!("error: {e:#}");
                ExitCode::from(EXIT_RUN_FAILURE)
            }
            Err(ReplayError::Mismatch(m)) => {
                eprintln!("error: {m}");
                ExitCode::from(EXIT_RUN_FAILURE)
            }
        },
    }
}
