//! `dccp` command line: run the example gallery, sweep experiment
//! parameters, verify problem structure, or solve raw cone-program files.

use clap::{Args, Parser, Subcommand};
use dccp_cli::examples::{build_problem, default_spec, list_examples, run_example, ExampleSpec};
use dccp_cli::report::emit;
use dccp_cli::sweep::{run_sweep, SweepSpec};
use dccp_cli::Format;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dccp",
    about = "Disciplined convex-concave programming: example gallery and solver front end",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one example and emit its report.
    Run(RunArgs),
    /// Sweep a scale parameter across a range of values.
    Sweep(SweepArgs),
    /// List the examples with their default parameters.
    List {
        /// Emit the default specs as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Check an example problem's structure: DCP and DCCP verdicts.
    Verify(SelectArgs),
    /// Solve a cone program from a triplet-format file.
    SolveCone {
        /// Path to the cone program (see docs/cone-format.md).
        file: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        /// Log interior-point progress to stderr.
        #[arg(long)]
        verbose: bool,
    },
}

#[derive(Args)]
struct SelectArgs {
    /// Example name (see `dccp list`).
    #[arg(long)]
    example: String,
    /// Data seed (also the default initialization seed).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scale-parameter overrides, e.g. `--param n=20`.
    #[arg(long = "param", value_parser = parse_kv)]
    params: Vec<(String, f64)>,
}

#[derive(Args, Default)]
struct CcpArgs {
    #[arg(long)]
    tau0: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    tau_max: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    k_ini: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    tol_obj: Option<f64>,
    #[arg(long)]
    tol_slack: Option<f64>,
    /// TOML file with default CcpParams (flags still take precedence).
    #[arg(long)]
    params_file: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    select: SelectArgs,
    #[command(flatten)]
    ccp: CcpArgs,
    /// Output directory (default: $DCCP_OUT_DIR or the working directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report formats to write.
    #[arg(long, value_enum, default_values_t = [Format::Json])]
    format: Vec<Format>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    select: SelectArgs,
    #[command(flatten)]
    ccp: CcpArgs,
    /// Sweep specification `<param>=<start>:<step>:<stop>`.
    #[arg(long)]
    sweep: String,
    /// Seeded instances per sweep point (metrics are averaged).
    #[arg(long, default_value_t = 10)]
    instances: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_values_t = [Format::Csv])]
    format: Vec<Format>,
}

fn parse_kv(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v: f64 = v.parse().map_err(|_| format!("bad numeric value in `{s}`"))?;
    Ok((k.to_string(), v))
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("DCCP_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn build_spec(select: &SelectArgs, ccp: &CcpArgs) -> Result<ExampleSpec, String> {
    let mut spec = default_spec(&select.example).map_err(|e| e.to_string())?;
    spec.seed = select.seed;
    spec.ccp.rng_seed = select.seed;
    for (k, v) in &select.params {
        if !spec.params.contains_key(k) {
            return Err(format!(
                "example `{}` has no parameter `{k}` (known: {})",
                select.example,
                spec.params.keys().cloned().collect::<Vec<_>>().join(", ")
            ));
        }
        spec.set_param(k, *v);
    }
    if let Some(path) = &ccp.params_file {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let file_params: dccp::ccp::CcpParams =
            toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let seed = spec.ccp.rng_seed;
        spec.ccp = file_params;
        spec.ccp.rng_seed = seed;
    }
    macro_rules! set {
        ($($field:ident),*) => {
            $(if let Some(v) = ccp.$field { spec.ccp.$field = v; })*
        };
    }
    set!(tau0, mu, tau_max, alpha, max_iter, k_ini, restarts, tol_obj, tol_slack);
    Ok(spec)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Run(args) => {
            let spec = build_spec(&args.select, &args.ccp)?;
            let output = run_example(&spec).map_err(|e| e.to_string())?;
            let dir = out_dir(args.out);
            let written = emit(&output, &args.format, &dir).map_err(|e| e.to_string())?;
            let r = &output.report;
            println!(
                "{}: status={} objective={} restarts_used={} iters={} wall={:.2?}",
                r.example,
                r.status,
                r.final_objective.map_or("n/a".into(), |v| format!("{v:.6}")),
                r.best_restart + 1,
                r.trace.len(),
                r.wall_time
            );
            for (family, viol) in &r.feasibility {
                println!("  feasibility {family}: {viol:.3e}");
            }
            for (metric, value) in &r.metrics {
                println!("  metric {metric}: {value:.6}");
            }
            for path in written {
                println!("  wrote {}", path.display());
            }
            Ok(ExitCode::from(output.report.exit_code()))
        }
        Command::Sweep(args) => {
            let spec = build_spec(&args.select, &args.ccp)?;
            let sweep = SweepSpec::parse(&args.sweep).map_err(|e| e.to_string())?;
            let report = run_sweep(&spec, &sweep, args.instances).map_err(|e| e.to_string())?;
            let dir = out_dir(args.out);
            std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
            let stem = format!("{}-sweep-{}", report.example, report.param);
            for format in &args.format {
                let (name, contents) = match format {
                    Format::Json => (format!("{stem}.json"), report.to_json()),
                    Format::Csv => (format!("{stem}.csv"), report.to_csv()),
                    Format::Svg => (format!("{stem}.svg"), report.to_svg()),
                };
                let path = dir.join(name);
                std::fs::write(&path, contents).map_err(|e| e.to_string())?;
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::List { json } => {
            let specs = list_examples();
            if json {
                println!("{}", serde_json::to_string_pretty(&specs).unwrap());
            } else {
                for spec in specs {
                    let params: Vec<String> =
                        spec.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    println!("{:<26} {}", spec.name, params.join(" "));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(select) => {
            let spec = build_spec(&select, &CcpArgs::default())?;
            let problem = build_problem(&spec).map_err(|e| e.to_string())?;
            let dcp = dccp::transform::is_dcp(&problem);
            let dccp_ok = dccp::transform::is_dccp(&problem);
            println!("example: {}", spec.name);
            println!("variables: {}", problem.variables().len());
            println!("constraints: {}", problem.constraints().len());
            println!("is_dcp: {dcp}");
            println!("is_dccp: {dccp_ok}");
            Ok(ExitCode::SUCCESS)
        }
        Command::SolveCone { file, tol, max_iter, verbose } => {
            let text = std::fs::read(&file).map_err(|e| format!("{}: {e}", file.display()))?;
            let cp = dccp::cone::parse_triplets(&mut text.as_slice()).map_err(|e| e.to_string())?;
            let settings = dccp::solver::SolverSettings { tol, max_iter, verbose };
            let sol = dccp::solver::solve_cone_with(&cp, &settings);
            println!("status: {:?}", sol.status);
            println!("objective: {}", sol.objective);
            println!(
                "residuals: primal={:.3e} dual={:.3e} gap={:.3e}",
                sol.residuals.primal, sol.residuals.dual, sol.residuals.gap
            );
            println!("iterations: {}", sol.iterations);
            println!("x: {:?}", sol.x);
            Ok(ExitCode::SUCCESS)
        }
    }
}
