//! Command-line harness around the solver: single solves, random sampling of
//! solution counts, planar slices, timing and path export.

mod report;
mod sampling;

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dubins3d::oracle::fk_geometric;
use dubins3d::{solve, GoalPose, SolutionKind, SolutionSet, Tolerances};
use rayon::prelude::*;

use report::{BenchReport, SampleSummary, SolveReport};
use sampling::cube_goal;

const EXIT_INVALID: u8 = 1;
const EXIT_EMPTY: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(name = "dubins3d", version, about = "CSC paths between a fixed start pose and a 3D goal")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one goal and print every path as JSON.
    Solve(SolveArgs),
    /// Histogram of solution counts over random goals, as CSV.
    Sample(SampleArgs),
    /// Solution counts and shortest lengths over an x-z grid, as CSV.
    Slice(SliceArgs),
    /// Time random solves and print summary statistics as JSON.
    Bench(BenchArgs),
    /// Sample points along every path to a goal, as CSV.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
struct GoalArgs {
    /// Goal position.
    #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], allow_negative_numbers = true)]
    x: Option<Vec<f64>>,
    /// Goal heading; normalized before solving.
    #[arg(long, num_args = 3, value_names = ["VX", "VY", "VZ"], allow_negative_numbers = true)]
    v: Option<Vec<f64>>,
    /// Minimum turning radius.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Forward-kinematics acceptance threshold.
    #[arg(long)]
    tol_fk: Option<f64>,
    /// Read the goal from a JSON file with fields `x`, `v` and `r`.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["x", "v"])]
    json_in: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    goal: GoalArgs,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long, default_value_t = 100_000)]
    n: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Half-width of the cube positions are drawn from.
    #[arg(long, default_value_t = 4.0)]
    cube: f64,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Write the JSON summary here instead of standard error.
    #[arg(long, value_name = "FILE")]
    summary: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    /// Goals `[x, 0, z]` heading `[0, 1, 0]`.
    Fig1a,
    /// Goals `[x, 0.5, z]` heading `[0.5, 1, 0]`.
    Fig1b,
}

#[derive(Debug, Args)]
struct SliceArgs {
    #[arg(long, value_enum, conflicts_with_all = ["y", "v"])]
    preset: Option<Preset>,
    /// Fixed goal y coordinate.
    #[arg(long, allow_negative_numbers = true)]
    y: Option<f64>,
    /// Fixed goal heading.
    #[arg(long, num_args = 3, value_names = ["VX", "VY", "VZ"], allow_negative_numbers = true)]
    v: Option<Vec<f64>>,
    #[arg(long, default_value_t = -4.0, allow_negative_numbers = true)]
    xmin: f64,
    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    xmax: f64,
    #[arg(long, default_value_t = -4.0, allow_negative_numbers = true)]
    zmin: f64,
    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    zmax: f64,
    /// Grid points per axis.
    #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u32).range(1..))]
    steps: u32,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 1000)]
    n: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 4.0)]
    cube: f64,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[command(flatten)]
    goal: GoalArgs,
    /// Points per path, endpoints included.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(2..))]
    samples_per_path: u32,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Invalid(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Invalid(_) => EXIT_INVALID,
        }
    }
}

impl From<dubins3d::Error> for Failure {
    fn from(e: dubins3d::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Sample(a) => run_sample(a),
        Command::Slice(a) => run_slice(a),
        Command::Bench(a) => run_bench(a),
        Command::Export(a) => run_export(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Invalid(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn triple(v: &[f64]) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        if k == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(k);
    }
    builder.build().map_err(|e| Failure::Invalid(e.to_string()))
}

fn tolerances(tol_fk: Option<f64>) -> Result<Tolerances, Failure> {
    let mut tol = Tolerances::default();
    if let Some(t) = tol_fk {
        tol.fk_residual = t;
    }
    tol.validate()?;
    Ok(tol)
}

fn read_goal(args: &GoalArgs) -> Result<GoalPose, Failure> {
    if let Some(path) = &args.json_in {
        let text = fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
        let raw: GoalPose = serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
        return Ok(GoalPose::new(raw.x, raw.v, raw.r)?);
    }
    match (&args.x, &args.v) {
        (Some(x), Some(v)) => Ok(GoalPose::new(triple(x), triple(v), args.r)?),
        _ => Err(Failure::Usage("a goal needs both --x and --v, or --json-in".into())),
    }
}

fn outcome(set: &SolutionSet) -> u8 {
    if set.is_empty() {
        EXIT_EMPTY
    } else {
        0
    }
}

fn run_solve(args: SolveArgs) -> Result<u8, Failure> {
    let tol = tolerances(args.goal.tol_fk)?;
    let goal = read_goal(&args.goal)?;
    let set = solve(&goal, &tol)?;
    let mut text = serde_json::to_string_pretty(&SolveReport::new(&set)).expect("report serializes");
    text.push('\n');
    emit(args.out.as_ref(), &text)?;
    Ok(outcome(&set))
}

fn run_export(args: ExportArgs) -> Result<u8, Failure> {
    let tol = tolerances(args.goal.tol_fk)?;
    let goal = read_goal(&args.goal)?;
    let set = solve(&goal, &tol)?;
    let n = args.samples_per_path as usize;
    let mut text = String::from("solution_index,t,x,y,z\n");
    for (i, path) in set.paths.iter().enumerate() {
        for (k, p) in fk_geometric(path, goal.r, n).iter().enumerate() {
            let t = k as f64 / (n - 1) as f64;
            writeln!(text, "{i},{t},{},{},{}", p[0], p[1], p[2]).unwrap();
        }
    }
    emit(args.out.as_ref(), &text)?;
    Ok(outcome(&set))
}

struct SampleOutcome {
    count: usize,
    family: bool,
    error: bool,
    wall_ms: f64,
}

fn run_sample(args: SampleArgs) -> Result<u8, Failure> {
    if !(args.cube.is_finite() && args.cube > 0.0) {
        return Err(Failure::Usage("--cube must be positive".into()));
    }
    if !(args.r.is_finite() && args.r > 0.0) {
        return Err(Failure::Usage("--r must be positive".into()));
    }
    let pool = thread_pool(args.threads)?;
    let tol = Tolerances::default();
    let outcomes: Vec<SampleOutcome> = pool.install(|| {
        (0..args.n)
            .into_par_iter()
            .map(|i| {
                let goal = cube_goal(args.seed, i, args.cube, args.r);
                match solve(&goal, &tol) {
                    Ok(set) => SampleOutcome {
                        count: set.paths.len(),
                        family: set.kind == SolutionKind::InfiniteFamily,
                        error: false,
                        wall_ms: set.diagnostics.wall_ms,
                    },
                    Err(_) => SampleOutcome { count: 0, family: false, error: true, wall_ms: 0.0 },
                }
            })
            .collect()
    });

    let max = outcomes.iter().map(|o| o.count).max().unwrap_or(0);
    let mut histogram = vec![0u64; max + 1];
    for o in &outcomes {
        histogram[o.count] += 1;
    }
    let mut csv = String::from("solution_count,frequency,percent\n");
    for (count, &freq) in histogram.iter().enumerate().filter(|(_, &f)| f > 0) {
        writeln!(csv, "{count},{freq},{:.4}", 100.0 * freq as f64 / args.n as f64).unwrap();
    }
    emit(args.out.as_ref(), &csv)?;

    let summary = SampleSummary {
        n: args.n,
        seed: args.seed,
        cube: args.cube,
        r: args.r,
        min_count: outcomes.iter().map(|o| o.count).min().unwrap_or(0),
        max_count: max,
        families: outcomes.iter().filter(|o| o.family).count() as u64,
        errors: outcomes.iter().filter(|o| o.error).count() as u64,
        mean_wall_ms: if outcomes.is_empty() {
            0.0
        } else {
            outcomes.iter().map(|o| o.wall_ms).sum::<f64>() / outcomes.len() as f64
        },
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    match &args.summary {
        Some(path) => fs::write(path, text)?,
        None => eprint!("{text}"),
    }
    Ok(0)
}

fn grid(lo: f64, hi: f64, steps: u32) -> Vec<f64> {
    if steps == 1 {
        return vec![lo];
    }
    (0..steps).map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64).collect()
}

fn run_slice(args: SliceArgs) -> Result<u8, Failure> {
    let (y, v) = match (args.preset, args.y, &args.v) {
        (Some(Preset::Fig1a), _, _) => (0.0, [0.0, 1.0, 0.0]),
        (Some(Preset::Fig1b), _, _) => (0.5, [0.5, 1.0, 0.0]),
        (None, Some(y), Some(v)) => (y, triple(v)),
        _ => return Err(Failure::Usage("slice needs --preset, or both --y and --v".into())),
    };
    if !(args.r.is_finite() && args.r > 0.0) {
        return Err(Failure::Usage("--r must be positive".into()));
    }
    // reject a bad heading before the scan
    GoalPose::new([0.0, y, 0.0], v, args.r)?;

    let xs = grid(args.xmin, args.xmax, args.steps);
    let zs = grid(args.zmin, args.zmax, args.steps);
    let cells: Vec<(f64, f64)> = zs.iter().flat_map(|&z| xs.iter().map(move |&x| (x, z))).collect();
    let pool = thread_pool(args.threads)?;
    let tol = Tolerances::default();
    let rows: Vec<String> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(x, z)| {
                let solved = GoalPose::new([x, y, z], v, args.r).and_then(|g| solve(&g, &tol));
                let (count, shortest) = match &solved {
                    Ok(set) if set.kind == SolutionKind::InfiniteFamily => {
                        ("inf".to_string(), set.shortest().map(|p| p.length(args.r)))
                    }
                    Ok(set) => (set.paths.len().to_string(), set.shortest().map(|p| p.length(args.r))),
                    Err(_) => ("0".to_string(), None),
                };
                let shortest = shortest.map_or_else(|| "inf".to_string(), |l| l.to_string());
                format!("{x},{z},{count},{shortest}\n")
            })
            .collect()
    });

    let mut text = format!(
        "# goal [x, {y}, z] heading [{}, {}, {}] r {}; rows scan z ascending (outer) then x ascending (inner)\n",
        v[0], v[1], v[2], args.r
    );
    text.push_str("x,z,n_solutions,shortest_length\n");
    for row in rows {
        text.push_str(&row);
    }
    emit(args.out.as_ref(), &text)?;
    Ok(0)
}

fn run_bench(args: BenchArgs) -> Result<u8, Failure> {
    if !(args.cube.is_finite() && args.cube > 0.0) {
        return Err(Failure::Usage("--cube must be positive".into()));
    }
    let tol = Tolerances::default();
    let times: Vec<f64> = (0..args.n)
        .map(|i| {
            let goal = cube_goal(args.seed, i, args.cube, 1.0);
            let start = Instant::now();
            let _ = solve(&goal, &tol);
            start.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    let report = BenchReport::from_times(args.n, args.seed, times);
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    emit(args.out.as_ref(), &text)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn grid_includes_both_ends() {
        assert_eq!(grid(-1.0, 1.0, 3), vec![-1.0, 0.0, 1.0]);
        assert_eq!(grid(2.0, 5.0, 1), vec![2.0]);
    }

    #[test]
    fn negative_coordinates_parse() {
        let cli = Cli::try_parse_from(["dubins3d", "solve", "--x", "-1", "2", "-3", "--v", "0", "-1", "0"]).unwrap();
        let Command::Solve(a) = cli.command else { panic!("wrong subcommand") };
        assert_eq!(a.goal.x.unwrap(), vec![-1.0, 2.0, -3.0]);
        assert_eq!(a.goal.v.unwrap(), vec![0.0, -1.0, 0.0]);
    }

    #[test]
    fn export_needs_two_samples() {
        let args = ["dubins3d", "export", "--x", "1", "1", "1", "--v", "0", "0", "1", "--samples-per-path", "1"];
        assert!(Cli::try_parse_from(args).is_err());
    }
}
