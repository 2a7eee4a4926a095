//! The `cuttlefish` command line.
//!
//! Exit codes: 0 success, 1 solver failure or failed check, 2 usage or
//! validation error.

use std::fs;
use std::io::{self, Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cuttlefish_core::explain::{
    answer_contrastive, ContrastiveQuestion, ExplainError, ExplanationJson,
};
use cuttlefish_core::generate::{random_home, RandomParams};
use cuttlefish_core::ingest::{
    downsample_to_hourly, parse_tariff_csv, synthetic_agile_week, validate_tariff, TariffProfile,
};
use cuttlefish_core::planner::{
    astar_solve, brute_force_solve, OracleConfig, SearchBudget, SolveOutcome, SolveStats,
    SolveStatus,
};
use cuttlefish_core::semantics::validate_plan;
use cuttlefish_core::{scenarios, HomeModel, Money, Plan};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{load_tariff, Service, ServiceConfig, DEFAULT_TARIFF_SEED};

#[derive(Parser, Debug)]
#[command(
    name = "cuttlefish",
    version,
    about = "Optimal home energy scheduling with contrastive explanations"
)]
pub struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct BudgetArgs {
    /// Solver wall-clock budget in seconds.
    #[arg(long, env = "CUTTLEFISH_MAX_RUNTIME_SECS", default_value_t = 180)]
    max_runtime_secs: u64,
    /// Solver visited-state budget.
    #[arg(long, env = "CUTTLEFISH_MAX_STATES", default_value_t = 8_000_000)]
    max_states: u64,
}

impl BudgetArgs {
    fn budget(&self) -> Result<SearchBudget, CliError> {
        if self.max_runtime_secs == 0 || self.max_states == 0 {
            return Err(CliError::Usage("budgets must be positive".into()));
        }
        Ok(SearchBudget {
            max_runtime: Duration::from_secs(self.max_runtime_secs),
            max_visited_states: self.max_states,
        })
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a problem (home model JSON) and print the plan.
    Solve {
        problem: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Answer a contrastive question about a problem's optimal plan.
    Explain {
        problem: PathBuf,
        question: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Validate a plan against a problem.
    Check { plan: PathBuf, problem: PathBuf },
    /// Convert a half-hourly tariff CSV to hourly tariff JSON.
    Ingest {
        csv: PathBuf,
        #[arg(long, value_enum, default_value_t = ProfileArg::None)]
        profile: ProfileArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve a small problem by exhaustive enumeration.
    Oracle {
        problem: PathBuf,
        #[arg(long, default_value_t = OracleConfig::default().max_candidates)]
        max_candidates: u64,
    },
    /// Run the HTTP API and worker pool.
    Serve {
        #[arg(long, env = "CUTTLEFISH_LISTEN", default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[arg(long, env = "CUTTLEFISH_WORKERS", default_value_t = 12)]
        workers: usize,
        /// Job journal; jobs are kept in memory only when omitted.
        #[arg(long, env = "CUTTLEFISH_STORE")]
        store: Option<PathBuf>,
        /// Half-hourly tariff CSV served at /tariff.
        #[arg(long, env = "CUTTLEFISH_TARIFF")]
        tariff: Option<PathBuf>,
        /// Lease length in seconds; defaults to the runtime budget plus 60.
        #[arg(long, env = "CUTTLEFISH_LEASE_TIMEOUT_SECS")]
        lease_timeout_secs: Option<u64>,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Solve random small instances (and optionally the study homes), writing stats as CSV.
    Bench {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also run the brute-force oracle and fail on any cost mismatch.
        #[arg(long)]
        oracle: bool,
        /// Append the Alice and Bob week fixtures.
        #[arg(long)]
        study: bool,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print a fixture problem as JSON.
    Scenario {
        #[arg(value_enum)]
        name: ScenarioArg,
        /// Half-hourly tariff CSV; a synthetic week when omitted.
        #[arg(long)]
        tariff: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print a synthetic half-hourly Agile-like week as CSV (not real market data).
    SynthTariff {
        #[arg(long, default_value_t = DEFAULT_TARIFF_SEED)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ProfileArg {
    None,
    Agile,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ScenarioArg {
    Alice,
    Bob,
    WorkedExample,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input or arguments (exit 2).
    Usage(String),
    /// The command ran but the answer is a failure (exit 1).
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    if path == Path::new("-") {
        let mut buf = Vec::new();
        io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| CliError::Usage(format!("stdin: {e}")))?;
        Ok(buf)
    } else {
        fs::read(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes = read_input(path)?;
    let mut de = serde_json::Deserializer::from_slice(&bytes);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let at = e.path().to_string();
        let at = if at == "." {
            String::new()
        } else {
            format!(" at {at}")
        };
        CliError::Usage(format!("{}{at}: {}", path.display(), e.inner()))
    })
}

fn write_output(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display()))),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Usage(e.to_string()))
        }
    }
}

fn write_json<T: Serialize>(output: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("outputs serialize");
    text.push('\n');
    write_output(output, &text)
}

#[derive(Serialize)]
pub struct SolveReport {
    pub problem_hash: String,
    pub status: SolveStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<Money>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<Plan>,
    pub stats: SolveStats,
}

impl SolveReport {
    fn new(model: &HomeModel, outcome: SolveOutcome) -> Self {
        SolveReport {
            problem_hash: model.content_hash(),
            status: outcome.status,
            cost: outcome.cost(),
            plan: outcome.plan,
            stats: outcome.stats,
        }
    }
}

fn status_result(status: SolveStatus) -> Result<(), CliError> {
    match cuttlefish_core::explain::status_message(status) {
        None => Ok(()),
        Some(msg) => Err(CliError::Failed(msg.to_owned())),
    }
}

fn solve(model: &HomeModel, budget: SearchBudget) -> Result<SolveOutcome, CliError> {
    astar_solve(model, budget).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve {
            problem,
            budget,
            output,
        } => {
            let model: HomeModel = read_json(&problem)?;
            let outcome = solve(&model, budget.budget()?)?;
            let status = outcome.status;
            write_json(output.as_deref(), &SolveReport::new(&model, outcome))?;
            status_result(status)
        }
        Command::Explain {
            problem,
            question,
            budget,
        } => {
            let model: HomeModel = read_json(&problem)?;
            let question: ContrastiveQuestion = read_json(&question)?;
            let hash = model.content_hash();
            if !question.base_problem_hash.is_empty() && question.base_problem_hash != hash {
                return Err(CliError::Usage(format!(
                    "question refers to problem {}, but the given problem is {hash}",
                    question.base_problem_hash
                )));
            }
            let budget = budget.budget()?;
            let base = solve(&model, budget)?;
            let Some(original) = base.plan else {
                let msg = cuttlefish_core::explain::render(base.status, None);
                return Err(CliError::Failed(format!(
                    "the original problem could not be solved: {msg}"
                )));
            };
            let e = answer_contrastive(&model, &original, &question.canonical_additions(), budget)
                .map_err(|e| match e {
                    ExplainError::Question(m) => CliError::Usage(format!("question: {m}")),
                    other => CliError::Usage(other.to_string()),
                })?;
            write_json(None, &ExplanationJson::from(&e))?;
            if e.alternative.status == SolveStatus::Solved {
                Ok(())
            } else {
                Err(CliError::Failed(e.rendered))
            }
        }
        Command::Check { plan, problem } => {
            let plan: Plan = read_json(&plan)?;
            let model: HomeModel = read_json(&problem)?;
            let verdict = validate_plan(&plan, &model);
            write_json(None, &verdict)?;
            if verdict.is_valid() {
                Ok(())
            } else {
                Err(CliError::Failed("plan is invalid".into()))
            }
        }
        Command::Ingest {
            csv,
            profile,
            output,
        } => {
            let series = parse_tariff_csv(&read_input(&csv)?)
                .map_err(|e| CliError::Usage(format!("{}: {e}", csv.display())))?;
            let tariff =
                downsample_to_hourly(&series).map_err(|e| CliError::Usage(e.to_string()))?;
            let profile = match profile {
                ProfileArg::None => TariffProfile::None,
                ProfileArg::Agile => TariffProfile::Agile,
            };
            write_json(output.as_deref(), &tariff)?;
            let violations = validate_tariff(&tariff, profile);
            for v in &violations {
                eprintln!("{v}");
            }
            if violations.is_empty() {
                Ok(())
            } else {
                Err(CliError::Failed(format!(
                    "{} tariff profile violations",
                    violations.len()
                )))
            }
        }
        Command::Oracle {
            problem,
            max_candidates,
        } => {
            let model: HomeModel = read_json(&problem)?;
            let outcome = brute_force_solve(&model, &OracleConfig { max_candidates })
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let status = outcome.status;
            write_json(None, &SolveReport::new(&model, outcome))?;
            status_result(status)
        }
        Command::Serve {
            listen,
            workers,
            store,
            tariff,
            lease_timeout_secs,
            budget,
        } => {
            let config = ServiceConfig {
                worker_count: workers,
                budget: budget.budget()?,
                store_path: store,
                listen_addr: listen,
                lease_timeout: lease_timeout_secs.map(Duration::from_secs),
                tariff_path: tariff,
                ..ServiceConfig::default()
            };
            let service =
                Service::start(&config, true).map_err(|e| CliError::Usage(e.to_string()))?;
            eprintln!("listening on http://{}", service.addr());
            service.wait().map_err(|e| CliError::Failed(e.to_string()))
        }
        Command::Bench {
            instances,
            seed,
            oracle,
            study,
            budget,
            output,
        } => bench(
            instances,
            seed,
            oracle,
            study,
            budget.budget()?,
            output.as_deref(),
        ),
        Command::Scenario {
            name,
            tariff,
            output,
        } => {
            let model = match name {
                ScenarioArg::WorkedExample => scenarios::worked_example(),
                ScenarioArg::Alice | ScenarioArg::Bob => {
                    let tariff = load_tariff(tariff.as_deref())
                        .map_err(|e| CliError::Usage(e.to_string()))?;
                    let built = if name == ScenarioArg::Alice {
                        scenarios::alice(tariff)
                    } else {
                        scenarios::bob(tariff)
                    };
                    built.map_err(|e| CliError::Usage(e.to_string()))?
                }
            };
            write_json(output.as_deref(), &model)
        }
        Command::SynthTariff { seed, output } => {
            write_output(output.as_deref(), &synthetic_agile_week(seed).to_csv())
        }
    }
}

fn bench(
    instances: usize,
    seed: u64,
    oracle: bool,
    study: bool,
    budget: SearchBudget,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = RandomParams::default();
    let cfg = OracleConfig::default();
    let mut models: Vec<(String, HomeModel)> = Vec::with_capacity(instances + 2);
    while models.len() < instances {
        let m = random_home(&mut rng, &params);
        // keep the sweep within what the oracle can check
        if oracle && brute_force_solve(&m, &cfg).is_err() {
            continue;
        }
        models.push((format!("random-{}", models.len()), m));
    }
    if study {
        let tariff = load_tariff(None).map_err(|e| CliError::Usage(e.to_string()))?;
        let alice = scenarios::alice(tariff.clone()).map_err(|e| CliError::Usage(e.to_string()))?;
        let bob = scenarios::bob(tariff).map_err(|e| CliError::Usage(e.to_string()))?;
        models.push(("alice".into(), alice));
        models.push(("bob".into(), bob));
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "instance",
        "problem_hash",
        "horizon",
        "appliances",
        "battery",
        "status",
        "cost_micro_pence",
        "oracle_cost_micro_pence",
        "visited",
        "expanded",
        "elapsed_ms",
    ])
    .expect("in-memory csv");
    let mut mismatches = 0;
    let started = Instant::now();
    for (name, m) in &models {
        let out = solve(m, budget)?;
        let oracle_cost = if oracle && m.horizon() <= params.max_horizon {
            let o = brute_force_solve(m, &cfg).map_err(|e| CliError::Usage(e.to_string()))?;
            if o.cost() != out.cost() {
                mismatches += 1;
            }
            o.cost()
                .map(|c| c.micro_pence().to_string())
                .unwrap_or_default()
        } else {
            String::new()
        };
        w.write_record([
            name.clone(),
            m.content_hash(),
            m.horizon().to_string(),
            m.appliances().len().to_string(),
            m.battery().is_some().to_string(),
            out.status.as_str().to_owned(),
            out.cost()
                .map(|c| c.micro_pence().to_string())
                .unwrap_or_default(),
            oracle_cost,
            out.stats.visited.to_string(),
            out.stats.expanded.to_string(),
            out.stats.elapsed_ms.to_string(),
        ])
        .expect("in-memory csv");
    }
    let text = String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv");
    write_output(output, &text)?;
    eprintln!("{} instances in {:.2?}", models.len(), started.elapsed());
    if mismatches > 0 {
        return Err(CliError::Failed(format!(
            "{mismatches} instances differ from the oracle"
        )));
    }
    Ok(())
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main_exit_code() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let serving = matches!(cli.command, Command::Serve { .. });
    let level = if cli.verbose || serving {
        tracing::Level::INFO
    } else {
        tracing::Level::WARN
    };
    tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_max_level(level)
        .init();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("error: {m}"),
                CliError::Failed(m) => eprintln!("{m}"),
            }
            e.exit_code()
        }
    }
}
