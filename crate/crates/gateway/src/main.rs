use std::io::{self, BufReader};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use inq_core::interp::{run, ExecConfig, ExecStatus, DEFAULT_STEP_BUDGET};
use inq_core::lang::parse;
use inq_core::session::aggregate;
use inq_gateway::session::MAX_RUN_BUDGET;
use inq_gateway::{Config, Gateway, HttpServer, SystemClock};

const EXIT_PARSE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_FINDINGS: u8 = 3;
const EXIT_RUN_FAILED: u8 = 4;

#[derive(Parser)]
#[command(name = "inq", version, about = "Ask novice programmers about their own code")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Report code smells; exits 3 when any of them deserves a question.
    Analyze {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Run a program with the given input lines.
    Run {
        file: PathBuf,
        #[arg(long = "input", num_args = 1.., allow_hyphen_values = true)]
        inputs: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_STEP_BUDGET, value_parser = clap::value_parser!(u64).range(1..=MAX_RUN_BUDGET))]
        budget: u64,
    },
    /// Serve RPC requests.
    #[command(group(ArgGroup::new("transport").required(true).args(["stdio", "http"])))]
    Serve {
        #[arg(long)]
        stdio: bool,
        /// Port to listen on, on 127.0.0.1.
        #[arg(long, value_name = "PORT")]
        http: Option<u16>,
    },
    /// Aggregate telemetry logs.
    Report {
        logdir: PathBuf,
        #[arg(long)]
        csv: bool,
    },
    /// Print the version.
    Version,
}

fn read(file: &Path) -> Result<String, ExitCode> {
    std::fs::read_to_string(file).map_err(|e| {
        eprintln!("inq: cannot read {}: {e}", file.display());
        ExitCode::from(EXIT_USAGE)
    })
}

fn gateway() -> Result<Gateway, ExitCode> {
    Gateway::new(Config::from_env(), Arc::new(SystemClock)).map_err(|e| {
        eprintln!("inq: cannot open the event log: {e}");
        ExitCode::FAILURE
    })
}

fn analyze(file: &Path, format: Format) -> Result<ExitCode, ExitCode> {
    let source = read(file)?;
    let gw = gateway()?;
    let result = gw.local_session().analyze(source);
    if !result.parse_errors.is_empty() {
        for e in &result.parse_errors {
            eprintln!("{}:{e}", file.display());
        }
        return Ok(ExitCode::from(EXIT_PARSE));
    }
    match format {
        Format::Json => println!("{}", serde_json::to_string(&result).expect("serializable")),
        Format::Text if result.diagnostics.is_empty() => println!("no findings"),
        Format::Text => {
            for d in &result.diagnostics {
                let q = result.annotations.iter().find(|a| a.span == d.span && a.rule_id == d.rule_id);
                let asks = if q.is_some_and(|a| a.question_id.is_some()) { " [question]" } else { "" };
                println!("{}:{}:{}: {} {}{asks}", file.display(), d.span.start_line, d.span.start_col, d.rule_id, d.message);
            }
        }
    }
    let worthy = result.diagnostics.iter().any(|d| d.is_question_worthy());
    Ok(ExitCode::from(if worthy { EXIT_FINDINGS } else { 0 }))
}

fn run_file(file: &Path, inputs: Vec<String>, budget: u64) -> Result<ExitCode, ExitCode> {
    let source = read(file)?;
    let program = match parse(&source) {
        Ok(p) => p,
        Err(errors) => {
            for e in &errors {
                eprintln!("{}:{e}", file.display());
            }
            return Ok(ExitCode::from(EXIT_PARSE));
        }
    };
    let r = run(&program, &ExecConfig::with_inputs(inputs).budget(budget));
    print!("{}", r.stdout);
    let note = match &r.status {
        ExecStatus::Completed => return Ok(ExitCode::SUCCESS),
        ExecStatus::BudgetExhausted => format!("stopped after {budget} steps: still running"),
        ExecStatus::RuntimeError { kind, span, message } => format!("{}:{}: {kind:?}: {message}", span.start_line, span.start_col),
        ExecStatus::InputExhausted { span } => format!("{}:{}: no more input", span.start_line, span.start_col),
        ExecStatus::AssertionFailed { span, message } => format!("{}:{}: assertion failed: {message}", span.start_line, span.start_col),
        ExecStatus::OutputTruncated => "output limit reached".to_string(),
    };
    eprintln!("{}:{note}", file.display());
    Ok(ExitCode::from(EXIT_RUN_FAILED))
}

fn serve(stdio: bool, port: Option<u16>) -> Result<ExitCode, ExitCode> {
    let gw = gateway()?;
    if stdio {
        let stdin = io::stdin();
        return match gw.serve_stdio(BufReader::new(stdin.lock()), io::stdout().lock()) {
            Ok(()) => Ok(ExitCode::SUCCESS),
            Err(e) => {
                eprintln!("inq: {e}");
                Ok(ExitCode::FAILURE)
            }
        };
    }
    let port = port.expect("clap requires a transport");
    match HttpServer::start(Arc::new(gw), &format!("127.0.0.1:{port}")) {
        Ok(server) => {
            eprintln!("inq: listening on http://{}/rpc", server.addr());
            server.join();
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("inq: cannot listen on port {port}: {e}");
            Ok(ExitCode::FAILURE)
        }
    }
}

fn report(logdir: &Path, csv: bool) -> Result<ExitCode, ExitCode> {
    let r = aggregate(logdir).map_err(|e| {
        eprintln!("inq: cannot read {}: {e}", logdir.display());
        ExitCode::from(EXIT_USAGE)
    })?;
    if csv {
        print!("{}", r.to_csv());
    } else {
        println!("{}", serde_json::to_string_pretty(&r).expect("serializable"));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Analyze { file, format } => analyze(&file, format),
        Command::Run { file, inputs, budget } => run_file(&file, inputs, budget),
        Command::Serve { stdio, http } => serve(stdio, http),
        Command::Report { logdir, csv } => report(&logdir, csv),
        Command::Version => {
            println!("inq {}", env!("CARGO_PKG_VERSION"));
            Ok(ExitCode::SUCCESS)
        }
    };
    outcome.unwrap_or_else(|code| code)
}
