use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use fogctl::bench::{run_benchmark, summarize, BenchScenario, ScenarioId};
use fogctl::client::{ApiClient, ClientError};
use fogctl::report::write_report;
use fogctl::server;
use fogpaas::nodesim::SimConfig;

#[derive(Parser)]
#[command(
    name = "fogctl",
    version,
    about = "Orchestrate applications over simulated cloud/fog domains"
)]
struct Cli {
    /// Server base URL (FOGCTL_API overrides).
    #[arg(
        long,
        global = true,
        env = "FOGCTL_API",
        default_value = "http://127.0.0.1:8080"
    )]
    api: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the orchestration service.
    Serve {
        /// Simulation config file (JSON); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: String,
        /// Append-only repository journal, replayed at startup.
        #[arg(long)]
        journal: Option<PathBuf>,
    },
    /// Deploy an application descriptor.
    Deploy {
        #[arg(short, long)]
        file: PathBuf,
    },
    /// Migrate one component of a running application.
    Migrate {
        app: String,
        component: String,
        /// Preferred destination node.
        #[arg(long = "to")]
        to: Option<String>,
    },
    /// Show an application record.
    Status { app: String },
    /// List registered domains.
    Domains,
    /// Run benchmark scenarios and write a CSV plus gnuplot data file.
    Bench {
        /// Scenarios: a comma list, a range like tc1..tc3, or "all".
        #[arg(long, default_value = "all")]
        scenario: String,
        #[arg(long, default_value_t = 15)]
        reps: u32,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_scenarios(selector: &str) -> Result<Vec<ScenarioId>, String> {
    let selector = selector.trim();
    if selector.eq_ignore_ascii_case("all") {
        return Ok(ScenarioId::ALL.to_vec());
    }
    if let Some((lo, hi)) = selector.split_once("..") {
        let lo = ScenarioId::from_str(lo).map_err(|e| e.to_string())?;
        let hi = ScenarioId::from_str(hi).map_err(|e| e.to_string())?;
        return Ok(ScenarioId::ALL
            .iter()
            .copied()
            .filter(|s| *s >= lo && *s <= hi)
            .collect());
    }
    selector
        .split(',')
        .map(|s| ScenarioId::from_str(s).map_err(|e| e.to_string()))
        .collect()
}

fn run_serve(
    config: Option<PathBuf>,
    listen: String,
    journal: Option<PathBuf>,
) -> Result<(), String> {
    let sim_config = match config {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            SimConfig::from_json(&text).map_err(|e| format!("bad config: {e}"))?
        }
        None => SimConfig::default(),
    };
    let state = server::build_state(sim_config, journal).map_err(|e| e.to_string())?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&listen)
            .await
            .map_err(|e| format!("cannot bind {listen}: {e}"))?;
        println!("listening on http://{listen}");
        server::spawn_notification_pump(state.clone(), std::time::Duration::from_millis(200));
        axum::serve(listener, server::router(state))
            .await
            .map_err(|e| e.to_string())
    })
}

fn run_bench(selector: &str, reps: u32, out: PathBuf, seed: u64) -> Result<(), String> {
    let ids = parse_scenarios(selector)?;
    let scenarios: Vec<BenchScenario> = ids
        .into_iter()
        .map(|id| BenchScenario {
            id,
            repetitions: reps,
        })
        .collect();
    let rows = run_benchmark(&scenarios, seed).map_err(|e| e.to_string())?;
    let dat = write_report(&rows, &out).map_err(|e| e.to_string())?;
    for s in summarize(&rows) {
        println!(
            "{:4} {:16} mean {:10.3} ms  min {:6} ms  max {:6} ms",
            s.scenario,
            s.metric.as_str(),
            s.mean_ms,
            s.min_ms,
            s.max_ms
        );
    }
    println!("wrote {} and {}", out.display(), dat.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let client = ApiClient::new(cli.api.clone());

    let result: Result<(), ClientError> = match cli.command {
        Command::Serve {
            config,
            listen,
            journal,
        } => {
            return match run_serve(config, listen, journal) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            };
        }
        Command::Bench {
            scenario,
            reps,
            out,
            seed,
        } => {
            return match run_bench(&scenario, reps, out, seed) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            };
        }
        Command::Deploy { file } => client.deploy_file(&file).map(print_json),
        Command::Migrate { app, component, to } => client
            .migrate(&app, &component, to.as_deref())
            .map(print_json),
        Command::Status { app } => client.status(&app).map(print_json),
        Command::Domains => client.domains().map(print_json),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn print_json(value: serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(&value).unwrap_or_else(|_| value.to_string())
    );
}
