//! `qflow` command-line runner.
//!
//! Every subcommand resolves its flags into a [`WorkflowConfig`], runs it
//! through the workflow engine and persists `result.json` plus a
//! `manifest.json` that `qflow workflow run` accepts to repeat the run.

mod render;
mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qflow_core::circuit::{Circuit, CircuitDocument};
use qflow_core::shor::build_period_circuit;
use qflow_core::sim::NoiseModel;
use qflow_core::tsp::{render_svg, Convention};
use qflow_core::workflow::pipelines::{Algorithm, GroverSettings, ShorSettings, TspSettings};
use qflow_core::workflow::{
    build_workflow, execute, BackendSpec, JobEngine, TaskOutput, WorkflowConfig, WorkflowError, WorkflowResult,
};
use serde_json::{json, Value};

pub use render::{render_histogram, MIN_WIDTH};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_PROBLEM: u8 = 3;
pub const EXIT_EXHAUSTED: u8 = 4;

pub const MANIFEST_FORMAT_VERSION: u32 = 1;
const HISTOGRAM_WIDTH: usize = 40;

#[derive(Debug, Parser)]
#[command(
    name = "qflow",
    version,
    about = "Run Grover, Shor and TSP workflows on local simulators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Search for one marked basis state.
    Grover(GroverArgs),
    /// Factor an odd composite by quantum period finding.
    Shor(ShorArgs),
    /// Find the shortest tour of a random four-node map by phase estimation.
    Tsp(TspArgs),
    /// Run a workflow config or repeat a previous run from its manifest.
    #[command(subcommand)]
    Workflow(WorkflowCommand),
}

#[derive(Debug, Subcommand)]
enum WorkflowCommand {
    Run {
        /// Config JSON, or a manifest.json written by an earlier run.
        config: PathBuf,
        #[arg(long, default_value = "qflow-out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BackendChoice {
    Ideal,
    Noisy,
    Both,
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to 1024 for grover and 4000 otherwise.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    shots: Option<u64>,
    #[arg(long, value_enum, default_value_t = BackendChoice::Ideal)]
    backend: BackendChoice,
    /// Depolarizing probability per gate on the noisy backend.
    #[arg(long, default_value_t = 0.02)]
    noise_p: f64,
    /// Readout flip probability per measured bit on the noisy backend.
    #[arg(long, default_value_t = 0.01)]
    readout_p: f64,
    /// Simulated queue wait before each job starts.
    #[arg(long, default_value_t = 0)]
    queue_delay_ms: u64,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    max_parallel: u64,
    #[arg(long, default_value = "qflow-out")]
    out: PathBuf,
    /// Write the circuit JSON here (an array when several circuits run).
    #[arg(long)]
    dump_circuit: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GroverArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 4)]
    n_qubits: usize,
    #[arg(long, conflicts_with = "random_target")]
    target: Option<u64>,
    /// Draw the target from the seed (the default when --target is absent).
    #[arg(long)]
    random_target: bool,
    #[arg(long, conflicts_with = "optimal_iterations")]
    iterations: Option<u32>,
    #[arg(long)]
    optimal_iterations: bool,
    /// Exit with status 4 unless every backend finds the target.
    #[arg(long)]
    require_success: bool,
}

#[derive(Debug, Args)]
struct ShorArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 15)]
    n: u64,
    #[arg(long, default_value_t = 10)]
    max_attempts: u32,
    #[arg(long)]
    counting_bits: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConventionArg {
    Paper,
    Natural,
}

#[derive(Debug, Args)]
struct TspArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 6)]
    unit_bits: usize,
    #[arg(long, value_enum, default_value_t = ConventionArg::Paper)]
    convention: ConventionArg,
    /// Also render the map (best tour highlighted) as SVG.
    #[arg(long)]
    map_svg: Option<PathBuf>,
}

/// An error with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code,
            error: error.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure::new(EXIT_INTERNAL, error)
    }
}

impl From<std::io::Error> for Failure {
    fn from(error: std::io::Error) -> Self {
        Failure::new(EXIT_INTERNAL, error)
    }
}

fn classify(e: WorkflowError) -> Failure {
    let code = match e {
        WorkflowError::Config(_) => EXIT_USAGE,
        WorkflowError::Grover(_) | WorkflowError::Shor(_) | WorkflowError::Tsp(_) => EXIT_PROBLEM,
        _ => EXIT_INTERNAL,
    };
    Failure::new(code, e)
}

/// CLI-only options that do not change any result.
#[derive(Debug, Default)]
struct Extras {
    dump_circuit: Option<PathBuf>,
    map_svg: Option<PathBuf>,
    require_success: bool,
}

/// Parses `args` (program name first), runs the command, and returns the
/// exit status. Normal output goes to `out`, diagnostics to stderr.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let command_line: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(cli.command, &command_line, out) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}

fn dispatch(command: Command, command_line: &[String], out: &mut dyn Write) -> Result<u8, Failure> {
    let (config, dir, extras) = match command {
        Command::Grover(a) => {
            if a.n_qubits < 64 {
                if let Some(t) = a.target.filter(|&t| t >= 1 << a.n_qubits) {
                    return Err(Failure::new(
                        EXIT_USAGE,
                        anyhow!(
                            "--target {t} does not fit in {} qubits (0..={})",
                            a.n_qubits,
                            (1u64 << a.n_qubits) - 1
                        ),
                    ));
                }
            }
            let mut config = base_config(Algorithm::Grover, &a.common)?;
            config.grover = Some(GroverSettings {
                n_qubits: a.n_qubits,
                target: a.target,
                iterations: a.iterations,
                optimal_iterations: a.optimal_iterations,
            });
            let extras = Extras {
                dump_circuit: a.common.dump_circuit,
                map_svg: None,
                require_success: a.require_success,
            };
            (config, a.common.out, extras)
        }
        Command::Shor(a) => {
            let mut config = base_config(Algorithm::Shor, &a.common)?;
            config.shor = Some(ShorSettings {
                n: a.n,
                max_attempts: a.max_attempts,
                counting_bits: a.counting_bits,
            });
            let extras = Extras {
                dump_circuit: a.common.dump_circuit,
                ..Extras::default()
            };
            (config, a.common.out, extras)
        }
        Command::Tsp(a) => {
            let mut config = base_config(Algorithm::Tsp, &a.common)?;
            config.tsp = Some(TspSettings {
                unit_bits: a.unit_bits,
                convention: match a.convention {
                    ConventionArg::Paper => Convention::Paper,
                    ConventionArg::Natural => Convention::Natural,
                },
                ..TspSettings::default()
            });
            let extras = Extras {
                dump_circuit: a.common.dump_circuit,
                map_svg: a.map_svg,
                require_success: false,
            };
            (config, a.common.out, extras)
        }
        Command::Workflow(WorkflowCommand::Run { config, out }) => (load_config(&config)?, out, Extras::default()),
    };
    run_config(&config, &dir, command_line, &extras, out)
}

fn base_config(algorithm: Algorithm, common: &CommonArgs) -> Result<WorkflowConfig, Failure> {
    let noise = || NoiseModel::new(common.noise_p, common.readout_p).map_err(|e| Failure::new(EXIT_USAGE, e));
    let delay = common.queue_delay_ms;
    let backends = match common.backend {
        BackendChoice::Ideal => vec![BackendSpec::ideal("ideal").with_queue_delay(delay)],
        BackendChoice::Noisy => vec![BackendSpec::noisy("noisy", noise()?).with_queue_delay(delay)],
        BackendChoice::Both => vec![
            BackendSpec::ideal("ideal").with_queue_delay(delay),
            BackendSpec::noisy("noisy", noise()?).with_queue_delay(delay),
        ],
    };
    let mut config = WorkflowConfig::new(algorithm, common.seed, backends);
    config.shots = common.shots;
    config.max_parallel = common.max_parallel as usize;
    Ok(config)
}

/// Reads a config document, or the `config` member of a manifest.
fn load_config(path: &Path) -> Result<WorkflowConfig, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|e| Failure::new(EXIT_USAGE, e))?;
    let value: Value = serde_json::from_str(&text)
        .with_context(|| format!("{} is not valid JSON", path.display()))
        .map_err(|e| Failure::new(EXIT_USAGE, e))?;
    let is_manifest = value.get("tool").is_some() && value.get("config").is_some();
    let config = if is_manifest { &value["config"] } else { &value };
    WorkflowConfig::from_value(config).map_err(classify)
}

fn write_json(path: &Path, value: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(anyhow::Error::from)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn run_config(
    config: &WorkflowConfig,
    dir: &Path,
    command_line: &[String],
    extras: &Extras,
    out: &mut dyn Write,
) -> Result<u8, Failure> {
    let graph = build_workflow(config, Arc::new(JobEngine::new())).map_err(classify)?;
    let started = Instant::now();
    let result = execute(&graph, config.max_parallel).map_err(classify)?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;

    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut artifacts = serde_json::Map::new();
    let mut record = |name: &str, path: &Path| {
        artifacts.insert(name.to_string(), json!(path.display().to_string()));
    };

    let result_path = dir.join("result.json");
    write_json(&result_path, &result.to_json())?;
    record("result", &result_path);
    for (name, path, value) in algorithm_artifacts(config, &result, dir) {
        write_json(&path, &value)?;
        record(&name, &path);
    }
    if let Some(path) = &extras.dump_circuit {
        write_json(path, &circuit_dump(config, &result)?)?;
        record("circuit", path);
    }
    if let Some(path) = &extras.map_svg {
        if let Some(TaskOutput::Instance(inst)) = result.output("compute_distances") {
            let best = config
                .backends
                .iter()
                .find_map(|b| match result.output(&format!("decode:{}", b.name)) {
                    Some(TaskOutput::TspDecode(d)) => Some(d.best_tour().clone()),
                    _ => None,
                });
            fs::write(path, render_svg(inst, best.as_ref())).with_context(|| format!("writing {}", path.display()))?;
            record("map_svg", path);
        }
    }

    let manifest = json!({
        "version": MANIFEST_FORMAT_VERSION,
        "tool": "qflow",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command_line": command_line,
        "seed": config.seed,
        "backends": config.backends,
        "config": config,
        "artifacts": artifacts,
        "timings": result.timings_json(),
        "wall_clock_ms": wall_ms,
    });
    let manifest_path = dir.join("manifest.json");
    write_json(&manifest_path, &manifest)?;

    let verdict = report::print(config, &result, extras.require_success, out)?;
    writeln!(out, "wrote {}", manifest_path.display())?;
    for (id, cause) in &result.failures {
        eprintln!("task {id} failed: {cause}");
    }
    Ok(if !result.is_success() {
        EXIT_INTERNAL
    } else if verdict.exhausted {
        EXIT_EXHAUSTED
    } else {
        EXIT_OK
    })
}

/// Per-algorithm files beside `result.json`.
fn algorithm_artifacts(config: &WorkflowConfig, result: &WorkflowResult, dir: &Path) -> Vec<(String, PathBuf, Value)> {
    let mut files = Vec::new();
    match config.algorithm {
        Algorithm::Grover => {}
        Algorithm::Shor => {
            for b in &config.backends {
                if let Some(TaskOutput::Shor { trace, submissions }) = result.output(&format!("factor:{}", b.name)) {
                    files.push((
                        format!("trace:{}", b.name),
                        dir.join(format!("trace-{}.json", b.name)),
                        json!({ "version": 1, "backend": b.name, "trace": trace, "submissions": submissions }),
                    ));
                }
            }
        }
        Algorithm::Tsp => {
            if let Some(inst @ TaskOutput::Instance(_)) = result.output("compute_distances") {
                files.push(("map".into(), dir.join("map.json"), inst.to_json()));
            }
            for b in &config.backends {
                if let Some(d @ TaskOutput::TspDecode(_)) = result.output(&format!("decode:{}", b.name)) {
                    files.push((
                        format!("decode:{}", b.name),
                        dir.join(format!("decode-{}.json", b.name)),
                        json!({ "version": 1, "backend": b.name, "decode": d.to_json() }),
                    ));
                }
            }
        }
    }
    files
}

fn circuit_dump(config: &WorkflowConfig, result: &WorkflowResult) -> Result<Value, Failure> {
    fn doc(c: &Circuit) -> Result<Value, anyhow::Error> {
        Ok(serde_json::to_value(CircuitDocument::from(c))?)
    }
    match config.algorithm {
        Algorithm::Grover => match result.output("build_circuit") {
            Some(TaskOutput::Circuit(c)) => Ok(doc(c)?),
            _ => Err(anyhow!("no circuit was built").into()),
        },
        Algorithm::Tsp => match result.output("build_circuits") {
            Some(TaskOutput::TspCircuits { circuits, .. }) => {
                Ok(Value::Array(circuits.iter().map(doc).collect::<Result<_, _>>()?))
            }
            _ => Err(anyhow!("no circuits were built").into()),
        },
        Algorithm::Shor => {
            let name = &config.backends[0].name;
            let Some(TaskOutput::Shor { trace, .. }) = result.output(&format!("factor:{name}")) else {
                return Err(anyhow!("factoring did not run").into());
            };
            let circuits = trace
                .attempts
                .iter()
                .filter(|a| a.histogram.is_some())
                .map(|a| {
                    let c = build_period_circuit(trace.n, a.a, trace.counting_bits).map_err(anyhow::Error::from)?;
                    doc(&c)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Value::Array(circuits))
        }
    }
}
