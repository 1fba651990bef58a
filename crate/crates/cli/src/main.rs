use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dlw_cli::export::{self, RunSummary};
use dlw_cli::scenario::{ExportFormat, Overrides, Scenario, DEFAULT_MAX_RESIDUAL};
use dlw_cli::{sweep, CliError, CliResult};
use dlw_core::residual::fd_residual_1d;
use dlw_core::transform::{exact_uh_const, ReducedWave};
use dlw_core::{Branch, LineSampler, Point, StencilConfig};
use serde::Serialize;

/// Largest tolerated difference along a line `x + y = const` in `reduce`.
const PLANE_WAVE_TOLERANCE: f64 = 1e-12;

#[derive(Parser)]
#[command(
    name = "dlw",
    version,
    about = "Exact solutions of the (2+1)-dimensional dispersive long wave system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Plus,
    Minus,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Plus => Branch::Plus,
            BranchArg::Minus => Branch::Minus,
        }
    }
}

#[derive(Args)]
struct RunFlags {
    /// Finite-difference step, overriding the scenario.
    #[arg(long)]
    step: Option<f64>,
    /// Maximum allowed residual, overriding the scenario.
    #[arg(long)]
    threshold: Option<f64>,
    /// Branch, overriding the scenario.
    #[arg(long, value_enum)]
    branch: Option<BranchArg>,
    /// Write a JSON summary to this path.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl RunFlags {
    fn overrides(&self) -> Overrides {
        Overrides {
            step: self.step,
            threshold: self.threshold,
            branch: self.branch.map(Branch::from),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the symbolic derivation for both branches.
    Derive {
        /// Write the report as JSON to this path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evaluate a scenario file and verify its residuals.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Check the travelling wave of the (1+1)-dimensional reduction.
    #[command(allow_negative_numbers = true)]
    Reduce {
        a: f64,
        d: f64,
        #[arg(long, value_enum, default_value = "plus")]
        branch: BranchArg,
        #[arg(long, default_value_t = -10.0)]
        z_min: f64,
        #[arg(long, default_value_t = 10.0)]
        z_max: f64,
        #[arg(long, default_value_t = 201)]
        nz: usize,
        #[arg(long, default_value_t = 0.0)]
        t_min: f64,
        #[arg(long, default_value_t = 1.0)]
        t_max: f64,
        #[arg(long, default_value_t = 5)]
        nt: usize,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        threshold: Option<f64>,
        /// Write a JSON summary to this path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run every case of a sweep file.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Derive { output } => derive(output.as_deref()),
        Command::Run { config, flags } => run(&config, &flags),
        Command::Reduce {
            a,
            d,
            branch,
            z_min,
            z_max,
            nz,
            t_min,
            t_max,
            nt,
            step,
            threshold,
            output,
        } => reduce(
            ReduceArgs {
                a,
                d,
                branch: branch.into(),
                z: (z_min, z_max, nz),
                t: (t_min, t_max, nt),
                step,
                threshold,
            },
            output.as_deref(),
        ),
        Command::Sweep { config, flags } => run_sweep(&config, &flags),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn derive(output: Option<&Path>) -> CliResult<()> {
    let report = match dlw_core::derive() {
        Ok(r) => r,
        Err(dlw_core::balance::BalanceError::CheckFailed(check)) => {
            return Err(CliError::Verification(format!(
                "branch {} failed:\n{}",
                check.branch,
                check.failure_summary()
            )))
        }
        Err(e) => return Err(CliError::Verification(e.to_string())),
    };
    println!("{report}");
    if let Some(path) = output {
        export::write_json(path, &report)?;
    }
    if report.passes() {
        Ok(())
    } else {
        Err(CliError::Verification("symbolic checks failed".into()))
    }
}

/// Runs one scenario, writes its outputs and prints the summary.
fn execute(scenario: &Scenario) -> CliResult<RunSummary> {
    let built = scenario.build()?;
    let eval = built.evaluate();
    let report = eval.report;
    let passed = report.evaluated > 0 && report.max_abs() <= built.threshold;
    let summary = RunSummary {
        name: scenario.name.clone(),
        branch: scenario.branch,
        solution_path: scenario.solution_path,
        threshold: built.threshold,
        passed,
        report,
    };
    for out in &scenario.outputs {
        match out.format {
            ExportFormat::Csv => export::write_csv(&out.path, &eval.rows)?,
            ExportFormat::Report => export::write_json(&out.path, &summary)?,
        }
    }
    let r = &summary.report;
    if r.skipped > 0 {
        let first = r.first_skip.unwrap_or(Point::ORIGIN);
        eprintln!(
            "skipped {} of {} grid points near poles (first at x={}, y={}, t={})",
            r.skipped,
            r.total(),
            first.x,
            first.y,
            first.t
        );
    } else {
        eprintln!("skipped 0 of {} grid points", r.total());
    }
    println!("{}", summary.text());
    Ok(summary)
}

fn verdict(summary: &RunSummary) -> CliResult<()> {
    if summary.passed {
        Ok(())
    } else if summary.report.evaluated == 0 {
        Err(CliError::Verification(
            "no grid point could be evaluated".into(),
        ))
    } else {
        Err(CliError::Verification(format!(
            "max residual {:e} exceeds threshold {:e}",
            summary.report.max_abs(),
            summary.threshold
        )))
    }
}

fn run(config: &Path, flags: &RunFlags) -> CliResult<()> {
    let mut scenario = Scenario::load(config)?;
    scenario.apply(&flags.overrides());
    let summary = execute(&scenario)?;
    if let Some(path) = &flags.output {
        export::write_json(path, &summary)?;
    }
    verdict(&summary)
}

fn run_sweep(config: &Path, flags: &RunFlags) -> CliResult<()> {
    let cases = sweep::load(config)?;
    let mut summaries = Vec::with_capacity(cases.len());
    for mut case in cases {
        case.scenario.apply(&flags.overrides());
        println!("== {}", case.label);
        summaries.push(execute(&case.scenario)?);
    }
    if let Some(path) = &flags.output {
        export::write_json(path, &summaries)?;
    }
    let failed: Vec<_> = summaries
        .iter()
        .filter(|s| !s.passed)
        .map(|s| s.name.clone().unwrap_or_default())
        .collect();
    println!(
        "{} of {} cases passed",
        summaries.len() - failed.len(),
        summaries.len()
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "failed cases: {}",
            failed.join(", ")
        )))
    }
}

struct ReduceArgs {
    a: f64,
    d: f64,
    branch: Branch,
    z: (f64, f64, usize),
    t: (f64, f64, usize),
    step: Option<f64>,
    threshold: Option<f64>,
}

#[derive(Serialize)]
struct ReduceSummary {
    a: f64,
    d: f64,
    branch: Branch,
    step: f64,
    threshold: f64,
    points: usize,
    max_r1: f64,
    max_r2: f64,
    plane_wave_deviation: f64,
    passed: bool,
}

fn axis(lo: f64, hi: f64, n: usize, name: &str) -> CliResult<Vec<f64>> {
    if n == 0 || !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(CliError::Input(format!(
            "{name}: need a finite ordered range and at least one point"
        )));
    }
    Ok((0..n)
        .map(|i| {
            if n == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect())
}

fn reduce(args: ReduceArgs, output: Option<&Path>) -> CliResult<()> {
    if !(args.a.is_finite() && args.d.is_finite()) {
        return Err(CliError::Input("a and d must be finite".into()));
    }
    let cfg = StencilConfig::new(args.step.unwrap_or(StencilConfig::default().step))
        .map_err(|e| CliError::Input(e.to_string()))?;
    let threshold = args.threshold.unwrap_or(DEFAULT_MAX_RESIDUAL);
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(CliError::Input(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    let zs = axis(args.z.0, args.z.1, args.z.2, "z")?;
    let ts = axis(args.t.0, args.t.1, args.t.2, "t")?;
    let wave = ReducedWave {
        a: args.a,
        d: args.d,
        branch: args.branch,
    };

    let (mut max_r1, mut max_r2, mut deviation) = (0.0f64, 0.0f64, 0.0f64);
    for &t in &ts {
        for &z in &zs {
            let (r1, r2) = fd_residual_1d(&wave, z, t, &cfg)
                .map_err(|e| CliError::Verification(e.to_string()))?;
            max_r1 = max_r1.max(if r1.is_finite() {
                r1.abs()
            } else {
                f64::INFINITY
            });
            max_r2 = max_r2.max(if r2.is_finite() {
                r2.abs()
            } else {
                f64::INFINITY
            });
            let line = wave
                .sample(z, t)
                .map_err(|e| CliError::Verification(e.to_string()))?;
            for shift in [-1.5, 0.5, 2.0] {
                let p = Point::new(z - shift, shift, t);
                let plane = exact_uh_const(args.a, args.a, args.d, args.branch, p);
                deviation = deviation
                    .max((plane.u - line.u).abs())
                    .max((plane.h - line.h).abs());
            }
        }
    }
    let passed = max_r1.max(max_r2) <= threshold && deviation <= PLANE_WAVE_TOLERANCE;
    let summary = ReduceSummary {
        a: args.a,
        d: args.d,
        branch: args.branch,
        step: cfg.step,
        threshold,
        points: zs.len() * ts.len(),
        max_r1,
        max_r2,
        plane_wave_deviation: deviation,
        passed,
    };
    println!(
        "reduced wave a = {}, d = {}, branch {}",
        args.a, args.d, args.branch
    );
    println!("{} points, step {:e}", summary.points, cfg.step);
    println!("max |r1| = {max_r1:.3e}, max |r2| = {max_r2:.3e}");
    println!("deviation along x + y = const: {deviation:.3e}");
    println!(
        "threshold {threshold:e}: {}",
        if passed { "PASS" } else { "FAIL" }
    );
    if let Some(path) = output {
        export::write_json(path, &summary)?;
    }
    if passed {
        Ok(())
    } else {
        Err(CliError::Verification("reduced wave check failed".into()))
    }
}
