use std::io::Write;

use qflow_core::workflow::pipelines::Algorithm;
use qflow_core::workflow::{compare_backends, TaskOutput, WorkflowConfig, WorkflowResult};

use crate::{render_histogram, Failure, HISTOGRAM_WIDTH};

pub(crate) struct Verdict {
    /// Shor ran out of attempts, or a required Grover search missed.
    pub exhausted: bool,
}

pub(crate) fn print(
    config: &WorkflowConfig,
    result: &WorkflowResult,
    require_success: bool,
    out: &mut dyn Write,
) -> Result<Verdict, Failure> {
    let mut verdict = Verdict { exhausted: false };
    match config.algorithm {
        Algorithm::Grover => {
            for b in &config.backends {
                writeln!(out, "== {} ==", b.name)?;
                if let Some(TaskOutput::Histogram(h)) = result.output(&format!("run:{}", b.name)) {
                    write!(out, "{}", render_histogram(h, HISTOGRAM_WIDTH))?;
                }
                if let Some(TaskOutput::Grover(a)) = result.output(&format!("analyze:{}", b.name)) {
                    let problem = config
                        .grover_problem()
                        .map_err(|e| Failure::new(crate::EXIT_PROBLEM, e))?;
                    let n = problem.n_qubits;
                    writeln!(
                        out,
                        "target {:0n$b}, found {:0n$b} in {:.1}% of {} shots: {}",
                        problem.target,
                        a.found,
                        100.0 * a.frequency,
                        problem.shots,
                        if a.success { "success" } else { "miss" },
                    )?;
                    if require_success && !a.success {
                        verdict.exhausted = true;
                    }
                }
            }
            compare_pairs(config, result, |name| vec![format!("run:{name}")], out)?;
        }
        Algorithm::Shor => {
            for b in &config.backends {
                writeln!(out, "== {} ==", b.name)?;
                let Some(TaskOutput::Shor { trace, submissions }) = result.output(&format!("factor:{}", b.name)) else {
                    continue;
                };
                for (i, a) in trace.attempts.iter().enumerate() {
                    let show = |v: Option<u64>| v.map_or("-".to_string(), |v| v.to_string());
                    writeln!(
                        out,
                        "attempt {}: a = {}, y = {}, r = {}, {}",
                        i + 1,
                        a.a,
                        show(a.y_used),
                        show(a.r_validated.or(a.r_candidate)),
                        serde_json::to_value(a.disposition)
                            .ok()
                            .and_then(|v| v.as_str().map(str::to_string))
                            .unwrap_or_default(),
                    )?;
                }
                if let Some(h) = trace.attempts.iter().rev().find_map(|a| a.histogram.as_ref()) {
                    write!(out, "{}", render_histogram(h, HISTOGRAM_WIDTH))?;
                }
                writeln!(out, "{} circuit submission(s)", submissions)?;
                match trace.factors {
                    Some((p, q)) => writeln!(out, "{} = {} × {}", trace.n, p, q)?,
                    None => {
                        verdict.exhausted = true;
                        writeln!(
                            out,
                            "no factors of {} found in {} attempts",
                            trace.n,
                            trace.attempts.len()
                        )?;
                    }
                }
            }
        }
        Algorithm::Tsp => {
            if let Some(TaskOutput::Instance(inst)) = result.output("compute_distances") {
                writeln!(out, "map:")?;
                for (i, (x, y)) in inst.coords().iter().enumerate() {
                    writeln!(out, "  node {}: ({x}, {y})", i + 1)?;
                }
            }
            for b in &config.backends {
                writeln!(out, "== {} ==", b.name)?;
                let Some(TaskOutput::TspDecode(d)) = result.output(&format!("decode:{}", b.name)) else {
                    continue;
                };
                for t in &d.tours {
                    writeln!(
                        out,
                        "{}  eigenstate {}  y = {:>3}  estimated {:8.2}  true {:8.2}",
                        t.tour, t.eigenstate, t.y_mode, t.est_distance, t.true_distance
                    )?;
                }
                writeln!(out, "quantization step {:.2}", d.quantization_step)?;
                let tie = if d.is_tie() {
                    " (tie within one quantization step)"
                } else {
                    ""
                };
                writeln!(
                    out,
                    "best tour {}{tie}: {}",
                    d.best_tour(),
                    if d.verified {
                        "verified"
                    } else {
                        "not the shortest tour"
                    }
                )?;
            }
            compare_pairs(
                config,
                result,
                |name| (0..3).map(|i| format!("run:{name}:{i}")).collect(),
                out,
            )?;
        }
    }
    Ok(verdict)
}

/// Mean total-variation distance between backends over matching runs.
fn compare_pairs(
    config: &WorkflowConfig,
    result: &WorkflowResult,
    runs: impl Fn(&str) -> Vec<String>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let names: Vec<&str> = config.backends.iter().map(|b| b.name.as_str()).collect();
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            let mut tvs = Vec::new();
            let mut matches = 0;
            for (ra, rb) in runs(names[i]).iter().zip(runs(names[j])) {
                if let (Some(TaskOutput::Histogram(a)), Some(TaskOutput::Histogram(b))) =
                    (result.output(ra), result.output(&rb))
                {
                    let c = compare_backends(a, b).map_err(|e| Failure::new(crate::EXIT_INTERNAL, e))?;
                    tvs.push(c.total_variation);
                    matches += usize::from(c.top_outcome_match);
                }
            }
            if !tvs.is_empty() {
                writeln!(
                    out,
                    "{} vs {}: total_variation {:.4}, top outcome matches in {}/{}",
                    names[i],
                    names[j],
                    tvs.iter().sum::<f64>() / tvs.len() as f64,
                    matches,
                    tvs.len()
                )?;
            }
        }
    }
    Ok(())
}
