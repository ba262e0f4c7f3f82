//! Run reports: serializable results with recomputed feasibility.

use dccp::ccp::{CcpStatus, IterationRecord, SolveResult};
use dccp::expr::Assignment;
use dccp::transform::Problem;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Duration;

use crate::examples::ExampleSpec;

/// One trace row; `objective` is None when the iterate fell outside the
/// objective's domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub objective: Option<f64>,
    pub penalized_objective: f64,
    pub max_slack: f64,
    pub tau: f64,
    pub damped: bool,
}

impl From<&IterationRecord> for TraceRow {
    fn from(r: &IterationRecord) -> Self {
        TraceRow {
            k: r.k,
            objective: if r.objective.is_nan() { None } else { Some(r.objective) },
            penalized_objective: r.penalized_objective,
            max_slack: r.max_slack,
            tau: r.tau,
            damped: r.damped,
        }
    }
}

/// Full result of one example run. All numbers are recomputed from the final
/// assignment, never taken from solver internals; wall-clock time is kept
/// out of the serialized form so reports are byte-reproducible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub example: String,
    pub spec: ExampleSpec,
    pub status: String,
    pub best_restart: usize,
    pub final_objective: Option<f64>,
    /// Max violation per named constraint family at the final assignment.
    pub feasibility: BTreeMap<String, f64>,
    /// Example-specific derived metrics.
    pub metrics: BTreeMap<String, f64>,
    /// Final values of the original variables, column-major.
    pub variables: BTreeMap<String, Vec<f64>>,
    pub trace: Vec<TraceRow>,
    #[serde(skip)]
    pub wall_time: Duration,
}

pub fn status_name(s: CcpStatus) -> &'static str {
    match s {
        CcpStatus::Converged => "converged",
        CcpStatus::MaxIterations => "max-iterations",
        CcpStatus::InitializationFailed => "initialization-failed",
        CcpStatus::SubproblemFailed => "subproblem-failed",
    }
}

/// Assemble the common parts of a report from a solve result.
pub fn base_report(
    example: &str,
    spec: &ExampleSpec,
    problem: &Problem,
    result: &SolveResult,
    wall_time: Duration,
) -> RunReport {
    let final_objective = dccp::expr::evaluate(problem.objective(), &result.assignment)
        .ok()
        .map(|m| m[(0, 0)]);
    RunReport {
        example: example.to_string(),
        spec: spec.clone(),
        status: status_name(result.status).to_string(),
        best_restart: result.best_restart,
        final_objective,
        feasibility: BTreeMap::new(),
        metrics: BTreeMap::new(),
        variables: variables_of(&result.assignment, problem),
        trace: result.trace.iter().map(TraceRow::from).collect(),
        wall_time,
    }
}

fn variables_of(a: &Assignment, problem: &Problem) -> BTreeMap<String, Vec<f64>> {
    let mut out = BTreeMap::new();
    for var in problem.variables().values() {
        if let Some(m) = a.get(var) {
            out.insert(var.name().to_string(), m.as_slice().to_vec());
        }
    }
    out
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    /// One row per iteration: `k,objective,max_slack,tau`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("k,objective,penalized_objective,max_slack,tau,damped\n");
        for r in &self.trace {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.k,
                r.objective.map_or(String::from(""), |v| format!("{v}")),
                r.penalized_objective,
                r.max_slack,
                r.tau,
                r.damped
            ));
        }
        out
    }

    /// Exit code contract: 0 converged and feasible, 2 heuristic returned
    /// an infeasible or failed result.
    pub fn exit_code(&self) -> u8 {
        if self.status == "converged" {
            0
        } else {
            2
        }
    }
}

/// Write the requested formats to `dir`; returns the created paths.
/// `json` is the full report, `csv` the per-iteration trace, `svg` the
/// example-specific figure (not every example has one for single runs).
pub fn emit(
    output: &crate::examples::RunOutput,
    formats: &[crate::Format],
    dir: &std::path::Path,
) -> Result<Vec<std::path::PathBuf>, crate::examples::ExampleError> {
    use crate::examples::ExampleError;
    use crate::Format;
    std::fs::create_dir_all(dir).map_err(|e| ExampleError::UnsupportedFormat {
        example: output.report.example.clone(),
        format: "any".into(),
        reason: format!("cannot create output directory: {e}"),
    })?;
    let mut written = Vec::new();
    for format in formats {
        let (name, contents) = match format {
            Format::Json => (format!("{}.json", output.report.example), output.report.to_json()),
            Format::Csv => {
                (format!("{}-trace.csv", output.report.example), output.report.trace_csv())
            }
            Format::Svg => match &output.svg {
                Some(svg) => (format!("{}.svg", output.report.example), svg.clone()),
                None => {
                    return Err(ExampleError::UnsupportedFormat {
                        example: output.report.example.clone(),
                        format: "svg".into(),
                        reason: "no single-run figure; sweeps produce curves".into(),
                    })
                }
            },
        };
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| ExampleError::UnsupportedFormat {
            example: output.report.example.clone(),
            format: "io".into(),
            reason: e.to_string(),
        })?;
        written.push(path);
    }
    Ok(written)
}
