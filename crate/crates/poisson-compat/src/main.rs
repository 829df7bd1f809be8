//! Command-line front end: chart-file checks, catalog runs, geodesic
//! integration and catalog export.
//!
//! Exit codes: 0 compatible, 1 not compatible, 2 not a Poisson structure,
//! 3 input or numeric error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use poisson_compat::catalog::{self, ChartBundle};
use poisson_compat::chartfile::{export_chart_file, parse_chart_file};
use poisson_compat::check::{run_check, CheckOptions};
use poisson_compat::connection::{cotangent_norm, geodesic_run, CotangentState};

#[derive(Parser)]
#[command(
    name = "poisson-compat",
    version,
    about = "Checks whether a Riemannian metric and a Poisson bivector are compatible: \
             flat torsion-free metric contravariant connection, vanishing metacurvature, \
             and the volume divergence condition."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunFlags {
    /// Scale-free residual tolerance for every verdict.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Seeded random sample points drawn from the chart's box.
    #[arg(long, default_value_t = 10)]
    points: usize,
    /// Random seed (a seed declared in the chart file is the default).
    #[arg(long)]
    seed: Option<u64>,
    /// Max jet order the run may use (metacurvature needs >= 3).
    #[arg(long, default_value_t = 4)]
    order: usize,
    /// Emit the machine-readable JSON report instead of the table.
    #[arg(long)]
    json: bool,
    /// Suppress the report; communicate through the exit code only.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full compatibility check on a chart file.
    Check {
        file: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run the full compatibility check on a built-in example.
    Example {
        name: String,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// List the built-in examples.
    ListExamples,
    /// Print a built-in example in the chart file format.
    ExportExample {
        name: String,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate a cotangent geodesic and report the norm drift.
    Geodesic {
        file: PathBuf,
        /// Initial covector components, comma-separated.
        #[arg(long, value_delimiter = ',', required = true)]
        xi: Vec<f64>,
        /// Initial base point (default: the chart's first declared point).
        #[arg(long, value_delimiter = ',')]
        u: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Print every k-th trajectory row (0: only the summary).
        #[arg(long, default_value_t = 100)]
        every: usize,
        #[arg(long)]
        quiet: bool,
    },
}

fn load_bundle(path: &PathBuf) -> Result<(ChartBundle, Option<u64>), String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let parsed = parse_chart_file(&text).map_err(|e| e.to_string())?;
    Ok((parsed.bundle, parsed.seed))
}

fn run_and_report(bundle: &ChartBundle, flags: &RunFlags, file_seed: Option<u64>) -> ExitCode {
    let options = CheckOptions {
        tol: flags.tol,
        random_points: flags.points,
        seed: flags.seed.or(file_seed).unwrap_or(42),
        jet_order: flags.order,
    };
    match run_check(bundle, &options) {
        Ok(report) => {
            if flags.json {
                println!("{}", report.to_json());
            } else if !flags.quiet {
                print!("{}", report.render_table());
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Check { file, flags } => match load_bundle(&file) {
            Ok((bundle, file_seed)) => run_and_report(&bundle, &flags, file_seed),
            Err(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(3)
            }
        },
        Command::Example { name, flags } => match catalog::get_entry(&name) {
            Ok(entry) => run_and_report(&entry.bundle, &flags, None),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(3)
            }
        },
        Command::ListExamples => {
            for name in catalog::entry_names() {
                let entry = catalog::get_entry(name).expect("catalog entry");
                println!("{name:<22} {}", entry.description);
            }
            ExitCode::SUCCESS
        }
        Command::ExportExample { name, out } => match catalog::get_entry(&name) {
            Ok(entry) => {
                let text = export_chart_file(&entry.bundle, None);
                match out {
                    Some(path) => {
                        if let Err(e) = std::fs::write(&path, text) {
                            eprintln!("error: cannot write {}: {e}", path.display());
                            return ExitCode::from(3);
                        }
                    }
                    None => print!("{text}"),
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(3)
            }
        },
        Command::Geodesic {
            file,
            xi,
            u,
            steps,
            dt,
            every,
            quiet,
        } => {
            let (bundle, _) = match load_bundle(&file) {
                Ok(v) => v,
                Err(msg) => {
                    eprintln!("error: {msg}");
                    return ExitCode::from(3);
                }
            };
            let n = bundle.chart.dim();
            let u0 = match u {
                Some(u) => u,
                None => match bundle.chart.declared_points().first() {
                    Some(p) => p.clone(),
                    None => {
                        eprintln!("error: no --u given and the chart declares no points");
                        return ExitCode::from(3);
                    }
                },
            };
            if u0.len() != n || xi.len() != n {
                eprintln!("error: --u and --xi need {n} components");
                return ExitCode::from(3);
            }
            let initial = CotangentState { u: u0, xi };
            let norm0 = match cotangent_norm(&bundle.metric, &initial) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(3);
                }
            };
            match geodesic_run(&bundle.metric, &bundle.poisson, initial, steps, dt) {
                Ok((trajectory, drift)) => {
                    if !quiet {
                        if every > 0 {
                            println!("{:>8}  {:<realm$}  {:<realm$}  |xi|", "t", "u", "xi", realm = 24);
                            for (k, s) in trajectory.iter().enumerate() {
                                if k % every != 0 && k != trajectory.len() - 1 {
                                    continue;
                                }
                                let norm = cotangent_norm(&bundle.metric, s)
                                    .map(|v| format!("{v:.12}"))
                                    .unwrap_or_else(|_| "-".into());
                                println!(
                                    "{:>8.4}  {:<24}  {:<24}  {norm}",
                                    k as f64 * dt,
                                    fmt_vec(&s.u),
                                    fmt_vec(&s.xi),
                                );
                            }
                        }
                        println!("initial |xi| = {norm0:.12}");
                        println!("max relative |xi| drift over {steps} steps: {drift:.3e}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(3)
                }
            }
        }
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}
