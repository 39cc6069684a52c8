use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use nrrt_core::bench::{self, ExperimentSpec, ExportFormat};
use nrrt_core::dataset::{self, DatasetOptions};
use nrrt_core::grid::{self, Density, Point2};
use nrrt_core::planner::{self, PlannerConfig, PlannerKind};
use nrrt_core::prior::{self, InformedEllipse};
use nrrt_core::render::{self, SceneSpec};
use nrrt_core::{Error, PlanningProblem};

#[derive(Parser)]
#[command(name = "nrrt", version, about = "Sampling-based planners with learned priors on occupancy grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate procedural maps as JSON files.
    GenMaps {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum)]
        density: Density,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = grid::DEFAULT_SIZE)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plan once on a map.
    Plan {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        start: Point2,
        #[arg(long)]
        goal: Point2,
        #[arg(long, value_enum, default_value = "rrtstar")]
        planner: PlannerKind,
        /// `oracle` or an NPRI file.
        #[arg(long)]
        prior: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run a benchmark experiment described by a JSON config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[arg(long)]
        out_json: Option<PathBuf>,
        /// Also write the generated maps and their problems here.
        #[arg(long)]
        maps_out: Option<PathBuf>,
    },
    /// Generate a labelled training set.
    GenDataset {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = dataset::DEFAULT_COUNT)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = grid::DEFAULT_SIZE)]
        size: usize,
    },
    /// Check an NPRI prior against a map.
    ValidatePrior {
        #[arg(long)]
        prior: PathBuf,
        #[arg(long)]
        map: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenMaps { seed, density, count, size, out } => gen_maps(seed, density, count, size, out),
        Command::Plan { map, start, goal, planner, prior, seed, iterations, step, radius, alpha, svg, json } => {
            let mut config = PlannerConfig { seed, record_trace: svg.is_some(), ..Default::default() };
            if let Some(v) = iterations {
                config.iterations = v;
            }
            if let Some(v) = step {
                config.step = v;
                config.goal_tolerance = v;
            }
            if let Some(v) = radius {
                config.rewire_radius = v;
            }
            if let Some(v) = alpha {
                config.alpha = v;
            }
            plan(PlanArgs { map, start, goal, planner, prior, config, svg, json })
        }
        Command::Bench { config, out_csv, out_json, maps_out } => run_bench(config, out_csv, out_json, maps_out),
        Command::GenDataset { seed, count, out, size } => gen_dataset(seed, count, out, size),
        Command::ValidatePrior { prior, map } => validate_prior(prior, map),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn gen_maps(seed: u64, density: Density, count: usize, size: usize, out: PathBuf) -> CmdResult {
    std::fs::create_dir_all(&out).map_err(Error::from)?;
    for map in 1..=count {
        let g = grid::generate_map(bench::map_seed(seed, density, map), density, size, size)?;
        let path = out.join(bench::map_file_name(density, map));
        grid::save_map(&g, &path)?;
        println!("{} occupied={:.3}", path.display(), g.occupied_fraction());
    }
    Ok(())
}

struct PlanArgs {
    map: PathBuf,
    start: Point2,
    goal: Point2,
    planner: PlannerKind,
    prior: Option<String>,
    config: PlannerConfig,
    svg: Option<PathBuf>,
    json: Option<PathBuf>,
}

fn plan(args: PlanArgs) -> CmdResult {
    if args.planner.needs_prior() && args.prior.is_none() {
        return Err(Failure::Usage(format!("planner `{}` requires --prior", args.planner)));
    }
    args.config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let g = grid::load_map(&args.map)?;
    let problem = PlanningProblem::new(g, args.start, args.goal)?;
    let prior = match (args.planner.needs_prior(), args.prior.as_deref()) {
        (false, _) | (true, None) => None,
        (true, Some("oracle")) => Some(prior::oracle_prior(&problem)?),
        (true, Some(file)) => Some(prior::load_prior(file, &problem.grid)?),
    };
    let outcome = planner::plan(args.planner, &problem, &args.config, prior.as_ref())?;
    println!(
        "planner={} success={} cost={} iterations={} first_solution={} nodes={} time={:.4}s",
        outcome.planner,
        outcome.success,
        if outcome.success { format!("{:.3}", outcome.cost) } else { "inf".into() },
        outcome.iterations_used,
        outcome.first_solution_iteration.map_or_else(|| "none".into(), |i| i.to_string()),
        outcome.tree.len(),
        outcome.wall_time
    );
    if let Some(path) = &args.json {
        std::fs::write(path, outcome.to_json()).map_err(Error::from)?;
    }
    if let Some(path) = &args.svg {
        let samples: Vec<Point2> = outcome.sample_trace.iter().flatten().filter_map(|t| t.sample).collect();
        let ellipse = (outcome.success && args.planner == PlannerKind::NeuralInformed)
            .then(|| InformedEllipse::new(problem.start, problem.goal, outcome.cost))
            .transpose()?;
        let scene = SceneSpec {
            prior: prior.as_ref(),
            tree: Some(&outcome.tree),
            samples: if args.planner.needs_prior() { &samples } else { &[] },
            ellipse,
            path: &outcome.path,
            start: Some(problem.start),
            goal: Some(problem.goal),
            ..SceneSpec::new(&problem.grid)
        };
        render::write_scene(&scene, path)?;
    }
    Ok(())
}

fn run_bench(
    config: PathBuf,
    out_csv: Option<PathBuf>,
    out_json: Option<PathBuf>,
    maps_out: Option<PathBuf>,
) -> CmdResult {
    let text = std::fs::read_to_string(&config)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", config.display())))?;
    let spec = ExperimentSpec::from_json(&text).map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(dir) = &maps_out {
        bench::write_maps(&bench::build_maps(&spec)?, dir)?;
    }
    let clock = Instant::now();
    let table = bench::run_experiment(&spec)?;
    eprintln!("{} runs in {:.1}s", table.records.len(), clock.elapsed().as_secs_f64());
    if let Some(path) = &out_csv {
        bench::export_results(&table, ExportFormat::Csv, path)?;
    }
    if let Some(path) = &out_json {
        bench::export_results(&table, ExportFormat::Json, path)?;
    }
    match bench::summarize_improvements(&table) {
        Ok(report) => print!("{report}"),
        Err(e) => println!("no improvement summary: {e}"),
    }
    Ok(())
}

fn gen_dataset(seed: u64, count: usize, out: PathBuf, size: usize) -> CmdResult {
    let opts = DatasetOptions::sized(size);
    let manifest = dataset::generate_dataset_with(seed, count, &Density::ALL, &out, &opts)?;
    println!("{} samples written to {}", manifest.samples.len(), out.join(dataset::MANIFEST_FILE).display());
    Ok(())
}

fn validate_prior(prior_path: PathBuf, map: PathBuf) -> CmdResult {
    let g = grid::load_map(&map)?;
    let p = prior::load_prior(&prior_path, &g)?;
    println!(
        "ok: {}x{} prior, {} cells with weight, max weight {:.6}",
        p.width(),
        p.height(),
        p.support().count(),
        p.max_weight()
    );
    Ok(())
}
