//! Task graphs for the three algorithms, and the JSON config that selects
//! one of them.

use std::collections::BTreeSet;
use std::sync::Arc;

use itertools::Itertools;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{
    compare_backends, execute, BackendSpec, JobEngine, TaskGraph, TaskInputs, TaskOutput, WorkflowError, WorkflowResult,
};
use crate::grover::{self, analyze_grover, build_grover_circuit, GroverProblem};
use crate::rng::Seed;
use crate::shor::{self, shor_factor, ShorError, ShorProblem};
use crate::sim::Histogram;
use crate::tsp::{
    self, build_tsp_circuits, decode_tsp, enumerate_tours, generate_coords, tour_eigenstate, Convention, TspEncoding,
    TspError, TspInstance, CIRCUIT_NODES,
};

pub const CONFIG_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_MAX_PARALLEL: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Grover,
    Shor,
    Tsp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroverSettings {
    #[serde(default = "default_grover_qubits")]
    pub n_qubits: usize,
    /// Drawn from the run seed when absent.
    #[serde(default)]
    pub target: Option<u64>,
    #[serde(default)]
    pub iterations: Option<u32>,
    #[serde(default)]
    pub optimal_iterations: bool,
}

fn default_grover_qubits() -> usize {
    grover::DEFAULT_QUBITS
}

impl Default for GroverSettings {
    fn default() -> Self {
        GroverSettings {
            n_qubits: grover::DEFAULT_QUBITS,
            target: None,
            iterations: None,
            optimal_iterations: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShorSettings {
    #[serde(default = "default_shor_n")]
    pub n: u64,
    #[serde(default = "default_shor_attempts")]
    pub max_attempts: u32,
    #[serde(default)]
    pub counting_bits: Option<usize>,
}

fn default_shor_n() -> u64 {
    shor::DEFAULT_N
}

fn default_shor_attempts() -> u32 {
    shor::DEFAULT_MAX_ATTEMPTS
}

impl Default for ShorSettings {
    fn default() -> Self {
        ShorSettings {
            n: shor::DEFAULT_N,
            max_attempts: shor::DEFAULT_MAX_ATTEMPTS,
            counting_bits: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TspSettings {
    #[serde(default = "default_unit_bits")]
    pub unit_bits: usize,
    #[serde(default)]
    pub convention: Convention,
    /// Derived from the longest edge when absent.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Fixed map; generated from the run seed when absent.
    #[serde(default)]
    pub coords: Option<Vec<(f64, f64)>>,
}

fn default_unit_bits() -> usize {
    tsp::DEFAULT_UNIT_BITS
}

impl Default for TspSettings {
    fn default() -> Self {
        TspSettings {
            unit_bits: tsp::DEFAULT_UNIT_BITS,
            convention: Convention::default(),
            lambda: None,
            coords: None,
        }
    }
}

impl TspSettings {
    fn encoding(&self, instance: &TspInstance) -> TspEncoding {
        match self.lambda {
            Some(lambda) => TspEncoding {
                unit_bits: self.unit_bits,
                lambda,
                convention: self.convention,
            },
            None => TspEncoding::auto(instance, self.unit_bits, self.convention),
        }
    }
}

/// Everything needed to rebuild and rerun a workflow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkflowConfig {
    pub version: u32,
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Defaults to 1024 for Grover and 4000 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    pub backends: Vec<BackendSpec>,
    pub max_parallel: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grover: Option<GroverSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shor: Option<ShorSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tsp: Option<TspSettings>,
}

const CONFIG_FIELDS: [&str; 9] = [
    "version",
    "algorithm",
    "seed",
    "shots",
    "backends",
    "max_parallel",
    "grover",
    "shor",
    "tsp",
];

fn field<T: DeserializeOwned>(obj: &Map<String, Value>, name: &str, errs: &mut Vec<String>) -> Option<T> {
    let v = obj.get(name)?;
    match serde_json::from_value(v.clone()) {
        Ok(t) => Some(t),
        Err(e) => {
            errs.push(format!("field '{name}': {e}"));
            None
        }
    }
}

impl WorkflowConfig {
    pub fn new(algorithm: Algorithm, seed: u64, backends: Vec<BackendSpec>) -> Self {
        WorkflowConfig {
            version: CONFIG_FORMAT_VERSION,
            algorithm,
            seed,
            shots: None,
            backends,
            max_parallel: DEFAULT_MAX_PARALLEL,
            grover: None,
            shor: None,
            tsp: None,
        }
    }

    /// Parses and checks a config document, reporting every violation found.
    pub fn from_json(text: &str) -> Result<Self, WorkflowError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| WorkflowError::Config(vec![format!("not valid JSON: {e}")]))?;
        Self::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Result<Self, WorkflowError> {
        let Some(obj) = value.as_object() else {
            return Err(WorkflowError::Config(vec!["config must be a JSON object".into()]));
        };
        let mut errs = Vec::new();
        for key in obj.keys().filter(|k| !CONFIG_FIELDS.contains(&k.as_str())) {
            errs.push(format!("unknown field '{key}'"));
        }
        for key in ["algorithm", "seed", "backends"] {
            if !obj.contains_key(key) {
                errs.push(format!("missing field '{key}'"));
            }
        }
        let version = field::<u32>(obj, "version", &mut errs).unwrap_or(CONFIG_FORMAT_VERSION);
        let algorithm = field::<Algorithm>(obj, "algorithm", &mut errs);
        let seed = field::<u64>(obj, "seed", &mut errs);
        let shots = field::<u64>(obj, "shots", &mut errs);
        let max_parallel = field::<usize>(obj, "max_parallel", &mut errs).unwrap_or(DEFAULT_MAX_PARALLEL);
        let grover = field::<GroverSettings>(obj, "grover", &mut errs);
        let shor = field::<ShorSettings>(obj, "shor", &mut errs);
        let tsp = field::<TspSettings>(obj, "tsp", &mut errs);

        let mut backends = Vec::new();
        match obj.get("backends") {
            Some(Value::Array(items)) => {
                for (i, item) in items.iter().enumerate() {
                    match serde_json::from_value::<BackendSpec>(item.clone()) {
                        Ok(b) => backends.push(b),
                        Err(e) => errs.push(format!("backends[{i}]: {e}")),
                    }
                }
            }
            Some(_) => errs.push("field 'backends': expected an array".into()),
            None => {}
        }

        let config = WorkflowConfig {
            version,
            algorithm: algorithm.unwrap_or(Algorithm::Grover),
            seed: seed.unwrap_or(0),
            shots,
            backends,
            max_parallel,
            grover,
            shor,
            tsp,
        };
        let has_backends = obj.contains_key("backends");
        errs.extend(
            config
                .violations()
                .into_iter()
                .filter(|v| has_backends || !v.starts_with("field 'backends'")),
        );
        if let Some(alg) = algorithm {
            for (key, owner) in [
                ("grover", Algorithm::Grover),
                ("shor", Algorithm::Shor),
                ("tsp", Algorithm::Tsp),
            ] {
                if obj.contains_key(key) && alg != owner {
                    errs.push(format!(
                        "field '{key}' does not apply to algorithm '{}'",
                        json!(alg).as_str().unwrap()
                    ));
                }
            }
        }
        if errs.is_empty() {
            Ok(config)
        } else {
            Err(WorkflowError::Config(errs))
        }
    }

    /// Structural problems: version, budgets and backend list.
    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.version != CONFIG_FORMAT_VERSION {
            errs.push(format!("unsupported version {}", self.version));
        }
        if self.shots == Some(0) {
            errs.push("field 'shots': must be positive".into());
        }
        if self.max_parallel == 0 {
            errs.push("field 'max_parallel': must be at least 1".into());
        }
        if self.backends.is_empty() {
            errs.push("field 'backends': at least one backend is required".into());
        }
        let mut names = BTreeSet::new();
        for b in &self.backends {
            if let Err(v) = b.validate() {
                errs.extend(v);
            }
            if !names.insert(b.name.as_str()) {
                errs.push(format!("duplicate backend name '{}'", b.name));
            }
        }
        errs
    }

    pub fn shots(&self) -> u64 {
        self.shots.unwrap_or(match self.algorithm {
            Algorithm::Grover => grover::DEFAULT_SHOTS,
            Algorithm::Shor => shor::DEFAULT_SHOTS,
            Algorithm::Tsp => tsp::DEFAULT_SHOTS,
        })
    }

    /// The Grover instance this config runs; the target is drawn from the
    /// seed when not given.
    pub fn grover_problem(&self) -> Result<GroverProblem, WorkflowError> {
        let s = self.grover.clone().unwrap_or_default();
        let problem = match s.target {
            Some(t) => GroverProblem::new(s.n_qubits, t)?,
            None => GroverProblem::random_target(s.n_qubits, Seed(self.seed))?,
        };
        let problem = if s.optimal_iterations {
            problem.with_optimal_iterations()
        } else {
            problem.with_iterations(s.iterations.unwrap_or(grover::DEFAULT_ITERATIONS))
        }
        .with_shots(self.shots());
        problem.validate()?;
        Ok(problem)
    }

    pub fn shor_problem(&self) -> Result<ShorProblem, WorkflowError> {
        let s = self.shor.clone().unwrap_or_default();
        let mut problem = ShorProblem::new(s.n);
        problem.max_attempts = s.max_attempts;
        problem.shots = self.shots();
        if let Some(m) = s.counting_bits {
            problem.counting_bits = m;
        }
        problem.validate()?;
        Ok(problem)
    }

    pub fn tsp_settings(&self) -> TspSettings {
        self.tsp.clone().unwrap_or_default()
    }
}

fn check_backends(backends: &[BackendSpec]) -> Result<(), WorkflowError> {
    if backends.is_empty() {
        return Err(WorkflowError::NoBackends);
    }
    let mut names = BTreeSet::new();
    for b in backends {
        b.validate().map_err(|v| WorkflowError::Backend(v.join("; ")))?;
        if !names.insert(&b.name) {
            return Err(WorkflowError::Backend(format!("duplicate backend name '{}'", b.name)));
        }
    }
    Ok(())
}

fn unexpected(id: &str, what: &str) -> String {
    format!("task '{id}' did not produce {what}")
}

fn histogram<'a>(inp: &'a TaskInputs, id: &str) -> Result<&'a Histogram, String> {
    match inp.get(id)? {
        TaskOutput::Histogram(h) => Ok(h),
        _ => Err(unexpected(id, "a histogram")),
    }
}

fn instance<'a>(inp: &'a TaskInputs, id: &str) -> Result<&'a TspInstance, String> {
    match inp.get(id)? {
        TaskOutput::Instance(i) => Ok(i),
        _ => Err(unexpected(id, "an instance")),
    }
}

/// Submits through the engine and blocks on the handle.
fn run_on(
    engine: &JobEngine,
    backend: &BackendSpec,
    circuit: &crate::circuit::Circuit,
    shots: u64,
    seed: Seed,
) -> Result<TaskOutput, String> {
    engine
        .submit(circuit, backend, shots, seed)
        .and_then(|h| h.await_result())
        .map(TaskOutput::Histogram)
        .map_err(|e| e.to_string())
}

/// Pairwise comparisons of `hists[i]` (one list per backend).
fn pairwise(names: &[String], hists: &[Vec<&Histogram>]) -> Result<Value, String> {
    let mut pairs = Vec::new();
    for (i, j) in (0..names.len()).tuple_combinations() {
        let per_circuit = hists[i]
            .iter()
            .zip(&hists[j])
            .map(|(a, b)| compare_backends(a, b).map(|c| json!(c)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        pairs.push(json!({ "a": names[i], "b": names[j], "circuits": per_circuit }));
    }
    Ok(Value::Array(pairs))
}

fn names(backends: &[BackendSpec]) -> Vec<String> {
    backends.iter().map(|b| b.name.clone()).collect()
}

/// `build_circuit → run:<backend> → analyze:<backend>`, then `compare`.
pub fn build_grover_workflow(
    problem: &GroverProblem,
    backends: &[BackendSpec],
    seed: Seed,
    engine: Arc<JobEngine>,
) -> Result<TaskGraph, WorkflowError> {
    check_backends(backends)?;
    let circuit = build_grover_circuit(problem)?;
    let mut g = TaskGraph::new();
    g.add_task("build_circuit", "build_circuit", Vec::<String>::new(), move |_| {
        Ok(TaskOutput::Circuit(circuit.clone()))
    })?;
    for b in backends {
        let (run_id, analyze_id) = (format!("run:{}", b.name), format!("analyze:{}", b.name));
        let (engine, backend, shots) = (Arc::clone(&engine), b.clone(), problem.shots);
        g.add_task(run_id.clone(), "run", ["build_circuit"], move |inp| {
            match inp.get("build_circuit")? {
                TaskOutput::Circuit(c) => run_on(&engine, &backend, c, shots, seed),
                _ => Err(unexpected("build_circuit", "a circuit")),
            }
        })?;
        let (p, rid) = (problem.clone(), run_id.clone());
        g.add_task(analyze_id, "analyze", [run_id], move |inp| {
            analyze_grover(histogram(inp, &rid)?, &p)
                .map(TaskOutput::Grover)
                .map_err(|e| e.to_string())
        })?;
    }
    let names = names(backends);
    let deps: Vec<String> = names
        .iter()
        .flat_map(|n| [format!("run:{n}"), format!("analyze:{n}")])
        .collect();
    g.add_task("compare", "compare", deps, move |inp| {
        let mut found = Map::new();
        let mut hists = Vec::new();
        for n in &names {
            if let TaskOutput::Grover(a) = inp.get(&format!("analyze:{n}"))? {
                found.insert(n.clone(), json!(a.found));
            }
            hists.push(vec![histogram(inp, &format!("run:{n}"))?]);
        }
        Ok(TaskOutput::Json(
            json!({ "found": found, "pairs": pairwise(&names, &hists)? }),
        ))
    })?;
    Ok(g)
}

/// One `factor:<backend>` task per backend, then `compare`.
///
/// Each factor task runs the whole hybrid loop; every attempt that needs
/// the quantum step becomes a fresh submission on the engine.
pub fn build_shor_workflow(
    problem: &ShorProblem,
    backends: &[BackendSpec],
    seed: Seed,
    engine: Arc<JobEngine>,
) -> Result<TaskGraph, WorkflowError> {
    check_backends(backends)?;
    problem.validate()?;
    let mut g = TaskGraph::new();
    for b in backends {
        let (engine, backend, problem) = (Arc::clone(&engine), b.clone(), problem.clone());
        g.add_task(
            format!("factor:{}", b.name),
            "factor",
            Vec::<String>::new(),
            move |_| {
                let mut submissions = 0u64;
                let outcome = shor_factor(&problem, seed, |c, shots, s| {
                    submissions += 1;
                    engine.submit(c, &backend, shots, s)?.await_result()
                });
                match outcome {
                    Ok(trace) => Ok(TaskOutput::Shor { trace, submissions }),
                    Err(ShorError::Exhausted(trace)) => Ok(TaskOutput::Shor {
                        trace: *trace,
                        submissions,
                    }),
                    Err(e) => Err(e.to_string()),
                }
            },
        )?;
    }
    let names = names(backends);
    let deps: Vec<String> = names.iter().map(|n| format!("factor:{n}")).collect();
    g.add_task("compare", "compare", deps, move |inp| {
        let mut factors = Map::new();
        let mut attempts = Map::new();
        for n in &names {
            if let TaskOutput::Shor { trace, .. } = inp.get(&format!("factor:{n}"))? {
                factors.insert(n.clone(), json!(trace.factors));
                attempts.insert(n.clone(), json!(trace.attempts.len()));
            }
        }
        let agree = factors.values().all_equal();
        Ok(TaskOutput::Json(
            json!({ "factors": factors, "attempts": attempts, "agree": agree }),
        ))
    })?;
    Ok(g)
}

/// Task ids of the TSP graph's execution step for one backend.
pub fn tsp_run_ids(backend: &str) -> Vec<String> {
    (0..3).map(|i| format!("run:{backend}:{i}")).collect()
}

/// The map-to-decode pipeline:
///
/// `generate_map → compute_distances → build_circuits`, with
/// `scaffold_circuits` (tours and eigenstates, no distances needed) feeding
/// `build_circuits` independently; one `run:<backend>:<i>` task per circuit
/// and backend; `decode:<backend>`; `compare`.
///
/// Circuit `i` runs with seed `seed.derive(i)` on every backend.
pub fn build_tsp_workflow(
    seed: Seed,
    settings: &TspSettings,
    backends: &[BackendSpec],
    shots: u64,
    engine: Arc<JobEngine>,
) -> Result<TaskGraph, WorkflowError> {
    check_backends(backends)?;
    if shots == 0 {
        return Err(WorkflowError::ZeroShots);
    }
    if !(1..=tsp::MAX_UNIT_BITS).contains(&settings.unit_bits) {
        return Err(TspError::UnitBits(settings.unit_bits).into());
    }
    if let Some(coords) = &settings.coords {
        TspInstance::from_coords(coords.clone())?;
    }
    let mut g = TaskGraph::new();
    let fixed = settings.coords.clone();
    g.add_task("generate_map", "generate_map", Vec::<String>::new(), move |_| {
        let coords = match &fixed {
            Some(c) => c.clone(),
            None => generate_coords(seed, CIRCUIT_NODES).map_err(|e| e.to_string())?,
        };
        Ok(TaskOutput::Coords(coords))
    })?;
    g.add_task(
        "compute_distances",
        "compute_distances",
        ["generate_map"],
        move |inp| match inp.get("generate_map")? {
            TaskOutput::Coords(c) => TspInstance::from_coords(c.clone())
                .map(|i| TaskOutput::Instance(i.with_seed(seed)))
                .map_err(|e| e.to_string()),
            _ => Err(unexpected("generate_map", "coordinates")),
        },
    )?;
    g.add_task("scaffold_circuits", "scaffold_circuits", Vec::<String>::new(), |_| {
        enumerate_tours(CIRCUIT_NODES)
            .and_then(|tours| {
                tours
                    .into_iter()
                    .map(|t| tour_eigenstate(&t).map(|bits| (t, bits)))
                    .collect()
            })
            .map(TaskOutput::Tours)
            .map_err(|e| e.to_string())
    })?;
    let s = settings.clone();
    g.add_task(
        "build_circuits",
        "build_circuits",
        ["compute_distances", "scaffold_circuits"],
        move |inp| {
            let inst = instance(inp, "compute_distances")?;
            let TaskOutput::Tours(tours) = inp.get("scaffold_circuits")? else {
                return Err(unexpected("scaffold_circuits", "tours"));
            };
            let encoding = s.encoding(inst);
            encoding.check(inst).map_err(|e| e.to_string())?;
            let circuits = build_tsp_circuits(inst, &encoding).map_err(|e| e.to_string())?;
            if circuits.len() != tours.len() {
                return Err(format!("{} circuits for {} tours", circuits.len(), tours.len()));
            }
            Ok(TaskOutput::TspCircuits { encoding, circuits })
        },
    )?;
    for b in backends {
        let runs = tsp_run_ids(&b.name);
        for (i, id) in runs.iter().enumerate() {
            let (engine, backend) = (Arc::clone(&engine), b.clone());
            g.add_task(id.clone(), "run", ["build_circuits"], move |inp| {
                match inp.get("build_circuits")? {
                    TaskOutput::TspCircuits { circuits, .. } => {
                        run_on(&engine, &backend, &circuits[i], shots, seed.derive(i as u64))
                    }
                    _ => Err(unexpected("build_circuits", "circuits")),
                }
            })?;
        }
        let mut deps = runs.clone();
        deps.extend(["compute_distances".to_string(), "build_circuits".to_string()]);
        g.add_task(format!("decode:{}", b.name), "decode", deps, move |inp| {
            let inst = instance(inp, "compute_distances")?;
            let TaskOutput::TspCircuits { encoding, .. } = inp.get("build_circuits")? else {
                return Err(unexpected("build_circuits", "circuits"));
            };
            let hists = runs
                .iter()
                .map(|id| histogram(inp, id).cloned())
                .collect::<Result<Vec<_>, _>>()?;
            decode_tsp(&hists, inst, encoding)
                .map(TaskOutput::TspDecode)
                .map_err(|e| e.to_string())
        })?;
    }
    let names = names(backends);
    let deps: Vec<String> = names
        .iter()
        .flat_map(|n| {
            let mut d = vec![format!("decode:{n}")];
            d.extend(tsp_run_ids(n));
            d
        })
        .collect();
    g.add_task("compare", "compare", deps, move |inp| {
        let mut best = Map::new();
        let mut hists = Vec::new();
        for n in &names {
            if let TaskOutput::TspDecode(d) = inp.get(&format!("decode:{n}"))? {
                best.insert(n.clone(), json!(d.best_tour().label()));
            }
            hists.push(
                tsp_run_ids(n)
                    .iter()
                    .map(|id| histogram(inp, id))
                    .collect::<Result<Vec<_>, _>>()?,
            );
        }
        let agree = best.values().all_equal();
        Ok(TaskOutput::Json(json!({
            "best": best,
            "best_agree": agree,
            "pairs": pairwise(&names, &hists)?,
        })))
    })?;
    Ok(g)
}

/// Graph for `config`, submitting through `engine`.
pub fn build_workflow(config: &WorkflowConfig, engine: Arc<JobEngine>) -> Result<TaskGraph, WorkflowError> {
    let violations = config.violations();
    if !violations.is_empty() {
        return Err(WorkflowError::Config(violations));
    }
    let seed = Seed(config.seed);
    match config.algorithm {
        Algorithm::Grover => build_grover_workflow(&config.grover_problem()?, &config.backends, seed, engine),
        Algorithm::Shor => build_shor_workflow(&config.shor_problem()?, &config.backends, seed, engine),
        Algorithm::Tsp => build_tsp_workflow(seed, &config.tsp_settings(), &config.backends, config.shots(), engine),
    }
}

/// Builds and executes `config` on a fresh engine.
pub fn run_workflow(config: &WorkflowConfig) -> Result<WorkflowResult, WorkflowError> {
    let graph = build_workflow(config, Arc::new(JobEngine::new()))?;
    execute(&graph, config.max_parallel)
}
