//! `softpen solve`: schedule, solve and certify one problem spec.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::time::Instant;

use softpen::{solve_constrained, Norm, PenaltyConfig, SolveOptions, SolverChoice};

use super::{emit, load_spec};
use crate::error::{CliError, CliResult};
use crate::record::RunRecord;

pub struct Args {
    pub spec: PathBuf,
    pub xi: f64,
    pub epsilon: f64,
    pub q: Norm,
    pub solver: SolverChoice,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub u_bound: Option<f64>,
    pub force_general_convex: bool,
    pub max_iterations: usize,
}

fn default_trace_path(out: &std::path::Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".trace.csv");
    out.with_file_name(name)
}

pub fn run(args: Args) -> CliResult<()> {
    let start = Instant::now();
    let (spec, problem) = load_spec(&args.spec)?;
    let mut options = SolveOptions::new(args.xi, args.epsilon, args.q, args.solver);
    options.seed = args.seed;
    options.u_bound = args.u_bound;
    options.force_general_convex = args.force_general_convex;
    options.max_iterations = args.max_iterations;
    let certificate = solve_constrained(&problem, spec.reference.as_ref(), &options)?;

    let trace_path = args
        .trace
        .clone()
        .or_else(|| args.out.as_deref().map(default_trace_path));
    if let Some(path) = &trace_path {
        let file = File::create(path)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        certificate
            .solver_report
            .write_trace_csv(BufWriter::new(file))?;
    }
    let penalty = PenaltyConfig::with_provenance(
        options.xi,
        certificate.schedule.delta,
        certificate.schedule.delta_provenance,
    )?;
    let certified = certificate.certified;
    let termination = certificate.solver_report.termination;
    let record = RunRecord {
        command: "solve".into(),
        spec_path: args.spec.display().to_string(),
        instance_hash: spec.content_hash(),
        config: options,
        penalty,
        certificate,
        trace_path: trace_path.map(|p| p.display().to_string()),
        wall_time_secs: start.elapsed().as_secs_f64(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
    };
    let mut json =
        serde_json::to_string_pretty(&record).map_err(|e| CliError::Runtime(e.to_string()))?;
    json.push('\n');
    emit(args.out.as_deref(), json.as_bytes())?;
    if certified {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!(
            "termination {termination:?}; record written uncertified"
        )))
    }
}
