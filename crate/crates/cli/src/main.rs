use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use thiserror::Error;

use uavsec::placement_opt::{self, Region};
use uavsec::planner::{self, PlanError, PlanOptions, PlanResult, Scheme};
use uavsec::{ColludeMode, Scenario, ScenarioError};

#[derive(Parser)]
#[command(name = "uavsec", version, about = "Secrecy-rate-optimal UAV placement and trajectory planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a planner and write CSV results.
    #[command(subcommand)]
    Plan(PlanCommand),
}

#[derive(Subcommand)]
enum PlanCommand {
    /// Optimal quasi-stationary placement.
    Static(StaticArgs),
    /// Trajectory and power schedule for a sweep of slot counts.
    Mobile(MobileArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (key = value format).
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    mode: ModeArg,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct StaticArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Search box `x_min,x_max,y_min,y_max`; defaults to the node bounding
    /// box grown by 200 m.
    #[arg(long, value_parser = parse_region)]
    region: Option<Region>,
    /// Coarse grid step of the horizontal search (m).
    #[arg(long, default_value_t = 5.0)]
    coarse_step: f64,
    /// Also write the per-grid-point solution map.
    #[arg(long)]
    field_map: bool,
    /// Grid step of the field map (m); defaults to the coarse step.
    #[arg(long)]
    field_step: Option<f64>,
}

#[derive(Args)]
struct MobileArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value_t = SchemeArg::All)]
    scheme: SchemeArg,
    /// Comma-separated slot counts; defaults to the scenario's `n_slots`.
    #[arg(long, value_delimiter = ',')]
    n_slots: Vec<usize>,
    /// Write per-round SCA traces.
    #[arg(long)]
    trace: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Noncolluding,
    Colluding,
    Both,
}

impl ModeArg {
    fn modes(self) -> Vec<ColludeMode> {
        match self {
            ModeArg::Noncolluding => vec![ColludeMode::NonColluding],
            ModeArg::Colluding => vec![ColludeMode::Colluding],
            ModeArg::Both => ColludeMode::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Full3d,
    #[value(name = "2d")]
    TwoD,
    FhfAdaptive,
    FhfConstant,
    All,
}

impl SchemeArg {
    fn schemes(self) -> Vec<Scheme> {
        match self {
            SchemeArg::Full3d => vec![Scheme::Full3d],
            SchemeArg::TwoD => vec![Scheme::FixedAlt2D],
            SchemeArg::FhfAdaptive => vec![Scheme::FhfAdaptive],
            SchemeArg::FhfConstant => vec![Scheme::FhfConstant],
            SchemeArg::All => Scheme::ALL.to_vec(),
        }
    }
}

fn parse_region(s: &str) -> Result<Region, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x0, x1, y0, y1] => Ok(Region::new(x0, x1, y0, y1)),
        _ => Err("expected x_min,x_max,y_min,y_max".into()),
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Solver(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Scenario(ScenarioError::Io { .. }) | CliError::Io { .. } => 4,
            CliError::Scenario(_) | CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(contents.as_bytes()).map_err(io_err(path))
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(CliError::Validation("--jobs must be at least 1".into()));
        }
        b = b.num_threads(j);
    }
    b.build().map_err(|e| CliError::Solver(e.to_string()))
}

fn run_static(args: &StaticArgs) -> Result<(), CliError> {
    let s = Scenario::load(&args.common.scenario)?;
    let region = args.region.unwrap_or_else(|| Region::around_nodes(&s, 200.0));
    let pool = thread_pool(args.common.jobs)?;
    let out = &args.common.out;
    fs::create_dir_all(out).map_err(io_err(out))?;

    let mut table = String::from("mode,x,y,z,p_mw,rate_bpshz\n");
    for mode in args.common.mode.modes() {
        let sol = pool
            .install(|| placement_opt::solve_static(&s, mode, region, args.coarse_step))
            .map_err(|e| CliError::Validation(e.to_string()))?;
        let pl = sol.placement;
        table.push_str(&format!(
            "{},{},{},{},{},{}\n",
            mode,
            pl.q.x,
            pl.q.y,
            pl.z,
            pl.p,
            sol.rate
        ));
        if args.field_map {
            let step = args.field_step.unwrap_or(args.coarse_step);
            let samples = pool
                .install(|| placement_opt::field_map(&s, mode, region, step))
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let mut csv = String::from("x,y,z_star,p_star,rate\n");
            for f in samples {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    f.x,
                    f.y,
                    f.z_star,
                    f.p_star,
                    f.rate
                ));
            }
            write_file(&out.join(format!("field_{mode}.csv")), &csv)?;
        }
    }
    write_file(&out.join("static_solution.csv"), &table)
}

struct Job {
    mode: ColludeMode,
    scheme: Scheme,
    n_slots: usize,
}

fn trajectory_csv(s: &Scenario, r: &PlanResult) -> String {
    let mut csv = String::from("n,t_s_elapsed,x,y,z,p_mw,rate_bpshz\n");
    let last = r.trajectory.q.len() - 1;
    for n in 0..=last {
        let (p, rate) = if n == 0 || n == last {
            (0.0, 0.0)
        } else {
            (r.power.p[n - 1], r.per_slot_rate[n - 1])
        };
        let q = r.trajectory.q[n];
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            n,
            n as f64 * s.t_s,
            q.x,
            q.y,
            r.trajectory.z[n],
            p,
            rate
        ));
    }
    csv
}

fn trace_csv(r: &PlanResult) -> String {
    let mut csv = String::from("iter,true_avg_rate,surrogate_value,solver_iters\n");
    let mut iter = 0;
    for outer in &r.history {
        for e in &outer.sca {
            iter += 1;
            csv.push_str(&format!(
                "{},{},{},{}\n",
                iter,
                e.true_avg_rate,
                e.surrogate_value,
                e.solver_iters
            ));
        }
    }
    csv
}

fn run_mobile(args: &MobileArgs) -> Result<(), CliError> {
    let base = Scenario::load(&args.common.scenario)?;
    let slot_counts = if args.n_slots.is_empty() {
        vec![base.n_slots]
    } else {
        args.n_slots.clone()
    };
    let mut scenarios = Vec::new();
    for &n in &slot_counts {
        let s = base.with_slots(n).map_err(|e| match e {
            ScenarioError::Infeasible(msg) => CliError::Validation(format!(
                "n_slots = {n} is infeasible (minimum {}): {msg}",
                base.min_slots()
            )),
            other => CliError::Scenario(other),
        })?;
        scenarios.push(s);
    }
    let modes = args.common.mode.modes();
    let schemes = args.scheme.schemes();
    let out = &args.common.out;
    for mode in &modes {
        let dir = out.join(mode.name());
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    }

    let mut jobs = Vec::new();
    for &mode in &modes {
        for &scheme in &schemes {
            for &n_slots in &slot_counts {
                jobs.push(Job {
                    mode,
                    scheme,
                    n_slots,
                });
            }
        }
    }
    let pool = thread_pool(args.common.jobs)?;
    let opts = PlanOptions::default();
    let results: Vec<Result<(PlanResult, f64), CliError>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let s = scenarios[slot_counts.iter().position(|&n| n == job.n_slots).expect("known N")].clone();
                let start = Instant::now();
                let r = planner::plan(&s, job.mode, job.scheme, &opts).map_err(|e| match e {
                    PlanError::Infeasible(v) => CliError::Validation(format!(
                        "{} {} N={}: {v}",
                        job.scheme, job.mode, job.n_slots
                    )),
                    other => CliError::Solver(format!(
                        "{} {} N={}: {other}",
                        job.scheme, job.mode, job.n_slots
                    )),
                })?;
                let wall = start.elapsed().as_secs_f64();
                let dir = out.join(job.mode.name());
                write_file(
                    &dir.join(format!("traj_{}_{}.csv", job.scheme, job.n_slots)),
                    &trajectory_csv(&s, &r),
                )?;
                if args.trace && !r.history.is_empty() {
                    write_file(
                        &dir.join(format!("trace_{}_{}.csv", job.scheme, job.n_slots)),
                        &trace_csv(&r),
                    )?;
                }
                Ok((r, wall))
            })
            .collect()
    });

    let mut summary = String::from("scheme,mode,n_slots,avg_rate_bpshz,outer_iters,wall_seconds\n");
    for (job, res) in jobs.iter().zip(results) {
        let (r, wall) = res?;
        summary.push_str(&format!(
            "{},{},{},{},{},{:.3}\n",
            job.scheme,
            job.mode,
            job.n_slots,
            r.avg_rate,
            r.outer_iterations,
            wall
        ));
    }
    write_file(&out.join("summary.csv"), &summary)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan(PlanCommand::Static(a)) => run_static(a),
        Command::Plan(PlanCommand::Mobile(a)) => run_mobile(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
