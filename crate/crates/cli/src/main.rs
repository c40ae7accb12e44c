mod render;

use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use pipblock::admissibility::{find_admissible_order, is_admissible_chain};
use pipblock::analysis::{analyze, AnalyzeOptions};
use pipblock::bound::job_bound;
use pipblock::deadlock::{check_deadlock_free, DeadlockVerdict};
use pipblock::oracle::{
    brute_force_with_limit, generate_antidiagonal_family, random_taskset, RandomLimits, DEFAULT_LIMIT,
};
use pipblock::relevance::blocking_scope;
use pipblock::search::{blocking_time_with, SearchOptions};
use pipblock::{parse_taskset, serialize_taskset, Error, TaskSet, Time, ZChain};

const EXIT_USAGE: u8 = 1;
const EXIT_CYCLIC: u8 = 2;
const EXIT_LIMIT: u8 = 3;

/// Blocking-time analysis for jobs sharing resources under priority inheritance.
#[derive(Parser)]
#[command(name = "pipblock", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every step: deadlock check, bound, quick check and exact search.
    Analyze {
        #[command(flatten)]
        input: Input,
        /// Stop after the quick check.
        #[arg(long)]
        bound_only: bool,
        /// Include the search trace.
        #[arg(long)]
        trace: bool,
    },
    /// Check that nesting orders resources acyclically.
    CheckDeadlock {
        #[command(flatten)]
        input: Input,
    },
    /// Resources and jobs that can block a job, with the fixpoint trace.
    Scope {
        #[command(flatten)]
        input: Input,
    },
    /// Blocking-time matrix and assignment bound.
    Bound {
        #[command(flatten)]
        input: Input,
    },
    /// Exact blocking time by A* search.
    BlockingTime {
        #[command(flatten)]
        input: Input,
        /// Print each expansion.
        #[arg(long)]
        trace: bool,
    },
    /// Check a chain of critical sections for admissibility.
    CheckChain {
        #[command(flatten)]
        input: Input,
        /// Sections such as "z4,1 z3,2 z2,1".
        #[arg(long)]
        chain: String,
    },
    /// Exhaustive blocking time, for cross-checking.
    Oracle {
        #[command(flatten)]
        input: Input,
        /// Largest number of section combinations to enumerate.
        #[arg(long, default_value_t = DEFAULT_LIMIT)]
        limit: u128,
    },
    /// Print a generated task set.
    #[command(subcommand)]
    Gen(Gen),
}

#[derive(Args)]
struct Input {
    /// Task-set file, `-` for stdin.
    file: PathBuf,
    /// Restrict to one job (1 is the highest priority).
    #[arg(long)]
    job: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Gen {
    /// Jobs whose long sections lie on the antidiagonal of the resource grid.
    Antidiagonal {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        i: usize,
        #[arg(long)]
        delta: Time,
        #[arg(long)]
        epsilon: Time,
    },
    /// Seeded random task set.
    Random {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = RandomLimits::default().jobs)]
        jobs: usize,
        #[arg(long, default_value_t = RandomLimits::default().resources)]
        resources: u32,
        #[arg(long, default_value_t = RandomLimits::default().sections_per_job)]
        sections: usize,
        #[arg(long, default_value_t = RandomLimits::default().nesting_depth)]
        depth: usize,
    },
}

/// What a command prints and how it exits.
struct Outcome {
    json: Value,
    text: String,
    code: u8,
}

impl Outcome {
    fn ok(json: Value, text: String) -> Self {
        Outcome { json, text, code: 0 }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(ExitCode::SUCCESS) => ExitCode::SUCCESS,
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = match e.downcast_ref::<Error>() {
                Some(Error::Cyclic(_)) => EXIT_CYCLIC,
                Some(Error::LimitExceeded { .. }) => EXIT_LIMIT,
                _ => EXIT_USAGE,
            };
            ExitCode::from(code)
        }
    }
}

fn run(command: Command) -> anyhow::Result<ExitCode> {
    if let Command::Gen(g) = command {
        emit(&serialize_taskset(&generate(g)?))?;
        return Ok(ExitCode::SUCCESS);
    }
    let (input, outcome) = match command {
        Command::Analyze { input, bound_only, trace } => {
            let ts = load(&input)?;
            let options = AnalyzeOptions {
                job: input.job,
                exact: !bound_only,
                trace,
                search: SearchOptions::default(),
            };
            let report = analyze(&ts, &options)?;
            let code = if report.is_deadlock_free() { 0 } else { EXIT_CYCLIC };
            let text = render::report(&report);
            (input, Outcome { json: serde_json::to_value(&report)?, text, code })
        }
        Command::CheckDeadlock { input } => {
            let verdict = check_deadlock_free(&load(&input)?);
            let code = if verdict.is_acyclic() { 0 } else { EXIT_CYCLIC };
            let text = render::deadlock(&verdict);
            (input, Outcome { json: serde_json::to_value(&verdict)?, text, code })
        }
        Command::Scope { input } => {
            let ts = load(&input)?;
            let scopes: Vec<_> = jobs(&ts, &input)?.into_iter().map(|i| blocking_scope(&ts, i)).collect();
            let text = scopes.iter().map(render::scope).collect();
            (input, Outcome::ok(serde_json::to_value(&scopes)?, text))
        }
        Command::Bound { input } => {
            let ts = load(&input)?;
            refuse_cyclic(&ts)?;
            let bounds: Vec<_> = jobs(&ts, &input)?.into_iter().map(|i| job_bound(&ts, i)).collect();
            let text = bounds.iter().map(render::bound).collect();
            (input, Outcome::ok(serde_json::to_value(&bounds)?, text))
        }
        Command::BlockingTime { input, trace } => {
            let ts = load(&input)?;
            let outcome = blocking_times(&ts, &input, trace)?;
            (input, outcome)
        }
        Command::CheckChain { input, chain } => {
            let ts = load(&input)?;
            let i = input.job.context("--job is required")?;
            ts.check_job(i)?;
            let chain = ZChain::parse(&chain)?;
            let verdict = is_admissible_chain(&ts, i, chain.sections())?;
            let reorder = if verdict.admissible || chain.len() > 64 {
                None
            } else {
                find_admissible_order(&ts, i, chain.sections())?
            };
            let json = json!({
                "job": i,
                "chain": chain,
                "duration": chain.duration(&ts),
                "verdict": verdict,
                "admissible_order": reorder,
            });
            let text = render::chain_check(i, &chain, chain.duration(&ts), &verdict, reorder.as_ref());
            (input, Outcome::ok(json, text))
        }
        Command::Oracle { input, limit } => {
            let ts = load(&input)?;
            let i = input.job.context("--job is required")?;
            let result = brute_force_with_limit(&ts, i, limit)?;
            let text = render::oracle(&result);
            (input, Outcome::ok(serde_json::to_value(&result)?, text))
        }
        Command::Gen(_) => unreachable!("handled above"),
    };
    if input.json {
        emit(&(serde_json::to_string_pretty(&outcome.json)? + "\n"))?;
    } else {
        emit(&outcome.text)?;
    }
    Ok(ExitCode::from(outcome.code))
}

fn blocking_times(ts: &TaskSet, input: &Input, trace: bool) -> anyhow::Result<Outcome> {
    let targets = jobs(ts, input)?;
    if let DeadlockVerdict::Cyclic { cycle } = check_deadlock_free(ts) {
        let json = json!(targets
            .iter()
            .map(|&i| json!({"job": i, "blocking": {"kind": "infinite"}, "cycle": cycle}))
            .collect::<Vec<_>>());
        let text = targets.iter().map(|&i| render::infinite(i, &cycle)).collect();
        return Ok(Outcome { json, text, code: EXIT_CYCLIC });
    }
    let options = SearchOptions { trace, ..SearchOptions::default() };
    let results = targets
        .into_iter()
        .map(|i| blocking_time_with(ts, i, &options))
        .collect::<Result<Vec<_>, _>>()?;
    let text = results.iter().map(render::search).collect();
    Ok(Outcome::ok(serde_json::to_value(&results)?, text))
}

/// Writes to stdout; a reader that went away early is not an error.
fn emit(text: &str) -> io::Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => other,
    }
}

fn generate(g: Gen) -> anyhow::Result<TaskSet> {
    Ok(match g {
        Gen::Antidiagonal { n, i, delta, epsilon } => generate_antidiagonal_family(n, i, delta, epsilon)?,
        Gen::Random { seed, jobs, resources, sections, depth } => random_taskset(
            seed,
            RandomLimits { jobs, resources, sections_per_job: sections, nesting_depth: depth },
        )?,
    })
}

fn load(input: &Input) -> anyhow::Result<TaskSet> {
    let text = if input.file.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).context("reading stdin")?;
        s
    } else {
        std::fs::read_to_string(&input.file).with_context(|| format!("reading {}", input.file.display()))?
    };
    parse_taskset(&text).with_context(|| format!("parsing {}", input.file.display()))
}

fn jobs(ts: &TaskSet, input: &Input) -> anyhow::Result<Vec<usize>> {
    match input.job {
        Some(i) => {
            ts.check_job(i)?;
            Ok(vec![i])
        }
        None => Ok((1..=ts.len()).collect()),
    }
}

fn refuse_cyclic(ts: &TaskSet) -> Result<(), Error> {
    match check_deadlock_free(ts) {
        DeadlockVerdict::Cyclic { cycle } => Err(Error::Cyclic(cycle)),
        DeadlockVerdict::Acyclic { .. } => Ok(()),
    }
}
