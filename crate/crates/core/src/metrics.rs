//! Path metrics and their aggregation across runs.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Density, Point2};
use crate::planner::{PlanOutcome, PlannerKind};

/// Total Euclidean length of the polyline.
pub fn path_length(path: &[Point2]) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::invalid("path_length of an empty path"));
    }
    Ok(path.windows(2).map(|w| w[0].dist(w[1])).sum())
}

/// Absolute difference of two headings, wrapped into `[0, pi]`.
fn turn(a: f64, b: f64) -> f64 {
    let d = (b - a).rem_euclid(TAU);
    if d > PI {
        TAU - d
    } else {
        d
    }
}

/// Total absolute turning angle along the path, in radians. Lower is
/// smoother. Zero-length segments carry no heading and are skipped.
pub fn smoothness(path: &[Point2]) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::invalid("smoothness needs at least two points"));
    }
    let headings: Vec<f64> =
        path.windows(2).filter(|w| w[0] != w[1]).map(|w| (w[1].y - w[0].y).atan2(w[1].x - w[0].x)).collect();
    Ok(headings.windows(2).map(|h| turn(h[0], h[1])).sum())
}

/// Metrics of one planner execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub planner: PlannerKind,
    pub density: Density,
    pub map: usize,
    pub run: usize,
    pub seed: u64,
    pub success: bool,
    pub path_length: Option<f64>,
    pub smoothness: Option<f64>,
    /// Seconds inside the planner only.
    pub wall_time: f64,
    /// Seconds spent producing the prior (building or loading), if any.
    pub prior_time: Option<f64>,
}

impl RunRecord {
    pub fn from_outcome(
        outcome: &PlanOutcome,
        density: Density,
        map: usize,
        run: usize,
        seed: u64,
        prior_time: Option<f64>,
    ) -> Self {
        let (path_length, smoothness) = if outcome.success {
            (path_length(&outcome.path).ok(), smoothness(&outcome.path).ok())
        } else {
            (None, None)
        };
        RunRecord {
            planner: outcome.planner,
            density,
            map,
            run,
            seed,
            success: outcome.success,
            path_length,
            smoothness,
            wall_time: outcome.wall_time,
            prior_time,
        }
    }

    /// Planner time plus prior time.
    pub fn total_time(&self) -> f64 {
        self.wall_time + self.prior_time.unwrap_or(0.0)
    }
}

/// Sample mean and standard deviation (`n - 1` denominator, zero for one
/// value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(MeanStd { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub runs: usize,
    pub success_rate: f64,
    /// Over successful runs; `None` when every run failed.
    pub length: Option<MeanStd>,
    pub smoothness: Option<MeanStd>,
    /// Planner-only time over all runs.
    pub time: MeanStd,
    /// Planner plus prior time over all runs.
    pub time_with_prior: MeanStd,
}

pub fn aggregate(records: &[RunRecord]) -> Result<AggregateRow> {
    if records.is_empty() {
        return Err(Error::invalid("aggregate of no records"));
    }
    let ok: Vec<&RunRecord> = records.iter().filter(|r| r.success).collect();
    let lengths: Vec<f64> = ok.iter().filter_map(|r| r.path_length).collect();
    let smooth: Vec<f64> = ok.iter().filter_map(|r| r.smoothness).collect();
    let times: Vec<f64> = records.iter().map(|r| r.wall_time).collect();
    let totals: Vec<f64> = records.iter().map(|r| r.total_time()).collect();
    Ok(AggregateRow {
        runs: records.len(),
        success_rate: 100.0 * ok.len() as f64 / records.len() as f64,
        length: MeanStd::of(&lengths),
        smoothness: MeanStd::of(&smooth),
        time: MeanStd::of(&times).expect("non-empty"),
        time_with_prior: MeanStd::of(&totals).expect("non-empty"),
    })
}
