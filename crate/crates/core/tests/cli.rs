use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nrrt_core::grid::{self, Density};
use nrrt_core::planner::PlanOutcome;
use nrrt_core::{prior, PlanningProblem};

fn nrrt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nrrt")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a generated map and returns its path plus a solvable problem on it.
fn map_fixture(dir: &Path) -> (PathBuf, PlanningProblem) {
    let g = grid::generate_map(4, Density::Sparse, 96, 96).unwrap();
    let problem = grid::sample_problem(&g, 4, 40.0).unwrap();
    let path = dir.join("map.json");
    grid::save_map(&g, &path).unwrap();
    (path, problem)
}

fn xy(p: nrrt_core::Point2) -> String {
    format!("{},{}", p.x, p.y)
}

#[test]
fn gen_maps_writes_requested_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = nrrt(&[
        "gen-maps",
        "--seed",
        "3",
        "--density",
        "medium",
        "--count",
        "2",
        "--size",
        "64",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for m in 1..=2 {
        let g = grid::load_map(dir.path().join(format!("medium-{m}.json"))).unwrap();
        assert_eq!((g.width(), g.height()), (64, 64));
    }
}

#[test]
fn invalid_density_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = nrrt(&["gen-maps", "--density", "extreme", "--out", s(dir.path())]);
    assert_eq!(code(&out), 2);
}

#[test]
fn plan_writes_json_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let (map, problem) = map_fixture(dir.path());
    let (json, svg) = (dir.path().join("out.json"), dir.path().join("out.svg"));
    let out = nrrt(&[
        "plan",
        "--map",
        s(&map),
        "--start",
        &xy(problem.start),
        "--goal",
        &xy(problem.goal),
        "--planner",
        "neural-informed",
        "--prior",
        "oracle",
        "--seed",
        "2",
        "--iterations",
        "600",
        "--json",
        s(&json),
        "--svg",
        s(&svg),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("planner=neural-informed success="));

    let outcome = PlanOutcome::from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(outcome.tree.nodes()[0], problem.start);
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(roxmltree::Document::parse(&text).is_ok());
    assert!(text.contains("id=\"samples\""));
}

#[test]
fn plan_with_prior_file_and_validate_prior() {
    let dir = tempfile::tempdir().unwrap();
    let (map, problem) = map_fixture(dir.path());
    let file = dir.path().join("p.npri");
    prior::save_prior(&prior::oracle_prior(&problem).unwrap(), &file).unwrap();

    let out = nrrt(&["validate-prior", "--prior", s(&file), "--map", s(&map)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let out = nrrt(&[
        "plan",
        "--map",
        s(&map),
        "--start",
        &xy(problem.start),
        "--goal",
        &xy(problem.goal),
        "--planner",
        "neural",
        "--prior",
        s(&file),
        "--iterations",
        "200",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    // A prior for a different map size fails validation.
    let other = dir.path().join("other.json");
    grid::save_map(&grid::OccupancyGrid::empty(40, 40).unwrap(), &other).unwrap();
    let out = nrrt(&["validate-prior", "--prior", s(&file), "--map", s(&other)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("40x40"));
}

#[test]
fn neural_planner_without_prior_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (map, problem) = map_fixture(dir.path());
    let out = nrrt(&[
        "plan",
        "--map",
        s(&map),
        "--start",
        &xy(problem.start),
        "--goal",
        &xy(problem.goal),
        "--planner",
        "neural",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn failed_plan_still_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = grid::OccupancyGrid::empty(40, 40).unwrap();
    for r in 0..40 {
        g.set(nrrt_core::CellIdx::new(20, r), nrrt_core::Cell::Occupied);
    }
    let map = dir.path().join("wall.json");
    grid::save_map(&g, &map).unwrap();
    let out = nrrt(&["plan", "--map", s(&map), "--start", "2.5,2.5", "--goal", "37.5,37.5", "--iterations", "200"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("success=false"));
}

#[test]
fn plan_start_in_obstacle_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = grid::OccupancyGrid::empty(40, 40).unwrap();
    g.set(nrrt_core::CellIdx::new(2, 2), nrrt_core::Cell::Occupied);
    let map = dir.path().join("m.json");
    grid::save_map(&g, &map).unwrap();
    let out = nrrt(&["plan", "--map", s(&map), "--start", "2.5,2.5", "--goal", "37.5,37.5"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn bench_missing_config_is_a_usage_error() {
    let out = nrrt(&["bench", "--config", "/nonexistent/bench.json"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bench_writes_csv_json_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    std::fs::write(
        &config,
        r#"{"densities": ["sparse"], "maps_per_density": 2, "runs_per_map": 2, "map_size": 96,
            "min_separation": 40, "planner": {"iterations": 300}}"#,
    )
    .unwrap();
    let (csv, json) = (dir.path().join("r.csv"), dir.path().join("r.json"));
    let out = nrrt(&["bench", "--config", s(&config), "--out-csv", s(&csv), "--out-json", s(&json)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("neural-informed"));

    let mut reader = csv::ReaderBuilder::new().flexible(false).from_path(&csv).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), nrrt_core::bench::CSV_HEADER);
    assert_eq!(reader.records().count(), 6);
    let table = nrrt_core::bench::ResultTable::from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(table.records.len(), 12);
}

#[test]
fn bench_with_missing_prior_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    let priors = dir.path().join("priors");
    std::fs::create_dir(&priors).unwrap();
    std::fs::write(
        &config,
        format!(
            r#"{{"densities": ["sparse"], "maps_per_density": 1, "runs_per_map": 1, "map_size": 64,
                "min_separation": 20, "prior": {{"directory": {:?}}}}}"#,
            s(&priors)
        ),
    )
    .unwrap();
    let out = nrrt(&["bench", "--config", s(&config)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("sparse map 1"));
}

#[test]
fn gen_dataset_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = nrrt(&["gen-dataset", "--seed", "1", "--count", "3", "--size", "48", "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m = nrrt_core::dataset::Manifest::load(dir.path().join("manifest.json")).unwrap();
    assert_eq!(m.samples.len(), 3);
}
