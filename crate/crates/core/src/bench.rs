//! Seeded benchmark harness: densities x maps x planners x runs.
//!
//! Map seeds are derived from `(master_seed, density, map)` and run seeds
//! from `(map_seed, planner, run)`, so each run can be reproduced on its own
//! and changing `runs_per_map` never changes the maps.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, Density, DensityBands, PlanningProblem};
use crate::metrics::{self, AggregateRow, RunRecord};
use crate::planner::{self, PlannerConfig, PlannerKind};
use crate::prior::{self, ProbabilityMap};
use crate::seed;

/// Caps the number of worker threads used by [`run_experiment`].
pub const THREADS_ENV: &str = "SAMPLER_BENCH_THREADS";

/// Map generations tried per (density, map) before giving up on finding a
/// connected start/goal pair.
const MAP_ATTEMPTS: u64 = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorSource {
    Oracle,
    /// One `<density>-<map>.npri` file per map.
    Directory(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub densities: Vec<Density>,
    pub maps_per_density: usize,
    pub runs_per_map: usize,
    pub planners: Vec<PlannerKind>,
    /// Shared planner settings; `seed` is replaced per run.
    pub planner: PlannerConfig,
    pub master_seed: u64,
    pub prior: PriorSource,
    pub map_size: usize,
    pub min_separation: f64,
    pub bands: DensityBands,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            densities: Density::ALL.to_vec(),
            maps_per_density: 5,
            runs_per_map: 10,
            planners: PlannerKind::ALL.to_vec(),
            planner: PlannerConfig::default(),
            master_seed: 2025,
            prior: PriorSource::Oracle,
            map_size: grid::DEFAULT_SIZE,
            min_separation: 100.0,
            bands: DensityBands::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.densities.is_empty() || self.maps_per_density == 0 || self.runs_per_map == 0 {
            return Err(Error::Configuration("densities, maps and runs must all be non-empty".into()));
        }
        if self.planners.is_empty() {
            return Err(Error::Configuration("planner list is empty".into()));
        }
        self.planner.validate().map_err(|e| Error::Configuration(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(Error::from_json)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// One generated map with its problem.
#[derive(Debug, Clone)]
pub struct MapCase {
    pub density: Density,
    /// 1-based, as in the result tables.
    pub map: usize,
    pub seed: u64,
    pub problem: PlanningProblem,
}

pub fn map_seed(master_seed: u64, density: Density, map: usize) -> u64 {
    seed::derive(master_seed, &[seed::label_hash(density.name()), map as u64])
}

pub fn run_seed(map_seed: u64, planner: PlannerKind, run: usize) -> u64 {
    seed::derive(map_seed, &[seed::label_hash(planner.id()), run as u64])
}

pub fn prior_file_name(density: Density, map: usize) -> String {
    format!("{density}-{map}.npri")
}

pub fn map_file_name(density: Density, map: usize) -> String {
    format!("{density}-{map}.json")
}

/// Generates every map and problem of the experiment.
pub fn build_maps(spec: &ExperimentSpec) -> Result<Vec<MapCase>> {
    let mut cases = Vec::new();
    for &density in &spec.densities {
        for map in 1..=spec.maps_per_density {
            let base = map_seed(spec.master_seed, density, map);
            let mut found = None;
            for attempt in 0..MAP_ATTEMPTS {
                let s = if attempt == 0 { base } else { seed::derive(base, &[attempt]) };
                let g = grid::generate_map_with(&spec.bands, s, density, spec.map_size, spec.map_size)?;
                match grid::sample_problem(&g, s, spec.min_separation) {
                    Ok(problem) => {
                        found = Some(MapCase { density, map, seed: s, problem });
                        break;
                    }
                    Err(Error::InfeasibleProblem(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
            cases.push(
                found.ok_or_else(|| {
                    Error::InfeasibleProblem(format!("{density} map {map}: no feasible problem found"))
                })?,
            );
        }
    }
    Ok(cases)
}

/// Writes each case's map JSON and a `problems.json` listing start/goal, for
/// producing external priors.
pub fn write_maps(cases: &[MapCase], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut listing = Vec::new();
    for case in cases {
        let name = map_file_name(case.density, case.map);
        grid::save_map(&case.problem.grid, dir.join(&name))?;
        listing.push(serde_json::json!({
            "density": case.density,
            "map": case.map,
            "file": name,
            "prior": prior_file_name(case.density, case.map),
            "start": [case.problem.start.x, case.problem.start.y],
            "goal": [case.problem.goal.x, case.problem.goal.y],
        }));
    }
    let text = serde_json::to_string_pretty(&serde_json::json!({ "maps": listing })).expect("json");
    std::fs::write(dir.join("problems.json"), text)?;
    Ok(())
}

fn prepare_prior(spec: &ExperimentSpec, case: &MapCase) -> Result<(ProbabilityMap, f64)> {
    let clock = Instant::now();
    let prior = match &spec.prior {
        PriorSource::Oracle => prior::oracle_prior(&case.problem)?,
        PriorSource::Directory(dir) => {
            let path = dir.join(prior_file_name(case.density, case.map));
            if !path.exists() {
                return Err(Error::Configuration(format!(
                    "missing prior for {} map {}: {}",
                    case.density,
                    case.map,
                    path.display()
                )));
            }
            prior::load_prior(&path, &case.problem.grid)?
        }
    };
    Ok((prior, clock.elapsed().as_secs_f64()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub density: Density,
    pub map: usize,
    pub planner: PlannerKind,
    pub aggregate: AggregateRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub spec: ExperimentSpec,
    pub rows: Vec<TableRow>,
    pub records: Vec<RunRecord>,
}

impl ResultTable {
    pub fn row(&self, density: Density, map: usize, planner: PlannerKind) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.density == density && r.map == map && r.planner == planner)
    }

    /// Copy with every timing zeroed, for determinism comparisons.
    pub fn without_times(&self) -> Self {
        let mut t = self.clone();
        for r in &mut t.records {
            r.wall_time = 0.0;
            r.prior_time = r.prior_time.map(|_| 0.0);
        }
        for r in &mut t.rows {
            r.aggregate.time = metrics::MeanStd { mean: 0.0, std: 0.0 };
            r.aggregate.time_with_prior = r.aggregate.time;
        }
        t
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(Error::from_json)
    }
}

fn thread_count() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs every planner `runs_per_map` times on every map and aggregates.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let cases = build_maps(spec)?;
    let needs_prior = spec.planners.iter().any(|p| p.needs_prior());
    let priors: Vec<Option<(ProbabilityMap, f64)>> =
        cases.iter().map(|c| needs_prior.then(|| prepare_prior(spec, c)).transpose()).collect::<Result<_>>()?;

    let jobs: Vec<(usize, PlannerKind, usize)> = (0..cases.len())
        .flat_map(|c| spec.planners.iter().flat_map(move |&p| (0..spec.runs_per_map).map(move |r| (c, p, r))))
        .collect();

    let execute = |&(c, kind, run): &(usize, PlannerKind, usize)| -> Result<RunRecord> {
        let case = &cases[c];
        let seed = run_seed(case.seed, kind, run);
        let config = PlannerConfig { seed, record_trace: false, ..spec.planner };
        let (prior, prior_time) = match (&priors[c], kind.needs_prior()) {
            (Some((p, t)), true) => (Some(p), Some(*t)),
            _ => (None, None),
        };
        let outcome = planner::plan(kind, &case.problem, &config, prior)?;
        Ok(RunRecord::from_outcome(&outcome, case.density, case.map, run, seed, prior_time))
    };

    let records: Vec<RunRecord> = match thread_count() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Configuration(e.to_string()))?
            .install(|| jobs.par_iter().map(execute).collect::<Result<_>>())?,
        None => jobs.par_iter().map(execute).collect::<Result<_>>()?,
    };

    let rows = aggregate_rows(spec, &cases, &records)?;
    Ok(ResultTable { spec: spec.clone(), rows, records })
}

fn aggregate_rows(spec: &ExperimentSpec, cases: &[MapCase], records: &[RunRecord]) -> Result<Vec<TableRow>> {
    let mut groups: BTreeMap<(Density, usize, PlannerKind), Vec<RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.density, r.map, r.planner)).or_default().push(r.clone());
    }
    let mut rows = Vec::new();
    for case in cases {
        for &planner in &spec.planners {
            let group = groups.get(&(case.density, case.map, planner)).map(Vec::as_slice).unwrap_or(&[]);
            rows.push(TableRow {
                density: case.density,
                map: case.map,
                planner,
                aggregate: metrics::aggregate(group)?,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapImprovement {
    pub density: Density,
    pub map: usize,
    pub planner: PlannerKind,
    /// Percent reduction of mean path length relative to RRT*.
    pub shorter_pct: Option<f64>,
    /// Percent reduction of mean smoothness relative to RRT*.
    pub smoother_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerSummary {
    pub planner: PlannerKind,
    pub max_shorter_pct: Option<f64>,
    pub min_shorter_pct: Option<f64>,
    pub max_smoother_pct: Option<f64>,
    pub min_smoother_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementReport {
    pub maps: Vec<MapImprovement>,
    pub summary: Vec<PlannerSummary>,
}

/// `100 * (baseline - value) / baseline`.
pub fn reduction_pct(baseline: f64, value: f64) -> Option<f64> {
    (baseline > 0.0 && baseline.is_finite() && value.is_finite()).then(|| 100.0 * (baseline - value) / baseline)
}

/// Per-map percent reductions of each neural planner against RRT*, plus the
/// suite-level maximum and minimum.
pub fn summarize_improvements(table: &ResultTable) -> Result<ImprovementReport> {
    let baselines: Vec<&TableRow> = table.rows.iter().filter(|r| r.planner == PlannerKind::RrtStar).collect();
    if baselines.is_empty() {
        return Err(Error::invalid("table has no rrtstar rows to compare against"));
    }
    let neural: Vec<PlannerKind> = PlannerKind::ALL
        .into_iter()
        .filter(|k| *k != PlannerKind::RrtStar && table.rows.iter().any(|r| r.planner == *k))
        .collect();
    if neural.is_empty() {
        return Err(Error::invalid("table has no neural planner rows"));
    }
    let mut maps = Vec::new();
    for base in &baselines {
        for &kind in &neural {
            let Some(row) = table.row(base.density, base.map, kind) else { continue };
            let pct = |b: Option<metrics::MeanStd>, v: Option<metrics::MeanStd>| reduction_pct(b?.mean, v?.mean);
            maps.push(MapImprovement {
                density: base.density,
                map: base.map,
                planner: kind,
                shorter_pct: pct(base.aggregate.length, row.aggregate.length),
                smoother_pct: pct(base.aggregate.smoothness, row.aggregate.smoothness),
            });
        }
    }
    let extreme = |vals: Vec<f64>, max: bool| vals.into_iter().reduce(|a, b| if (b > a) == max { b } else { a });
    let summary = neural
        .iter()
        .map(|&kind| {
            let mine = maps.iter().filter(|m| m.planner == kind);
            let shorter: Vec<f64> = mine.clone().filter_map(|m| m.shorter_pct).collect();
            let smoother: Vec<f64> = mine.filter_map(|m| m.smoother_pct).collect();
            PlannerSummary {
                planner: kind,
                max_shorter_pct: extreme(shorter.clone(), true),
                min_shorter_pct: extreme(shorter, false),
                max_smoother_pct: extreme(smoother.clone(), true),
                min_smoother_pct: extreme(smoother, false),
            }
        })
        .collect();
    Ok(ImprovementReport { maps, summary })
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.1}%"))
}

impl fmt::Display for ImprovementReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8} {:>4} {:<16} {:>9} {:>9}", "density", "map", "planner", "shorter", "smoother")?;
        for m in &self.maps {
            writeln!(
                f,
                "{:<8} {:>4} {:<16} {:>9} {:>9}",
                m.density.name(),
                m.map,
                m.planner.id(),
                pct(m.shorter_pct),
                pct(m.smoother_pct)
            )?;
        }
        for s in &self.summary {
            writeln!(
                f,
                "{}: up to {} shorter (min {}), {} to {} smoother",
                s.planner,
                pct(s.max_shorter_pct),
                pct(s.min_shorter_pct),
                pct(s.min_smoother_pct),
                pct(s.max_smoother_pct)
            )?;
        }
        Ok(())
    }
}

pub const CSV_HEADER: [&str; 11] = [
    "density",
    "map",
    "planner",
    "runs",
    "success_rate",
    "len_mean",
    "len_std",
    "time_mean",
    "time_std",
    "smooth_mean",
    "smooth_std",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

fn fixed(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v:.2}"))
}

pub fn to_csv(table: &ResultTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in &table.rows {
        let a = &r.aggregate;
        w.write_record([
            r.density.name().to_string(),
            r.map.to_string(),
            r.planner.id().to_string(),
            a.runs.to_string(),
            format!("{:.2}", a.success_rate),
            fixed(a.length.map(|m| m.mean)),
            fixed(a.length.map(|m| m.std)),
            fixed(Some(a.time.mean)),
            fixed(Some(a.time.std)),
            fixed(a.smoothness.map(|m| m.mean)),
            fixed(a.smoothness.map(|m| m.std)),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

pub fn export_results(table: &ResultTable, format: ExportFormat, path: impl AsRef<Path>) -> Result<()> {
    let text = match format {
        ExportFormat::Csv => to_csv(table)?,
        ExportFormat::Json => table.to_json(),
    };
    std::fs::write(path, text)?;
    Ok(())
}
