//! Sampling priors and the samplers built on them.
//!
//! A [`ProbabilityMap`] is a per-cell distribution over the free cells of a
//! grid. Samples are drawn from the mixture `alpha * P + (1 - alpha) * U`,
//! where `U` is uniform over free space, and a continuous point is taken
//! uniformly inside the chosen cell. Once a solution of cost `c_best` exists,
//! the informed sampler restricts draws to the [`InformedEllipse`].

use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Location, Result};
use crate::grid::{Cell, OccupancyGrid, PlanningProblem, Point2};
use crate::search::{self, PathMask};

/// Accepted deviation of a constructed map's weight sum from 1.
pub const SUM_TOLERANCE: f64 = 1e-6;
/// Accepted deviation of a prior file's weight sum from 1.
pub const FILE_SUM_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    width: usize,
    height: usize,
    weights: Vec<f64>,
    cdf: Vec<f64>,
}

impl ProbabilityMap {
    /// Zeroes `weights` on occupied cells and rescales them to sum to one.
    pub fn normalize(weights: &[f64], grid: &OccupancyGrid) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::invalid(format!(
                "weights have {} entries, grid has {} cells",
                weights.len(),
                grid.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid(format!("weight {i} is negative or not finite")));
        }
        let mut masked: Vec<f64> =
            weights.iter().zip(grid.cells()).map(|(&w, &c)| if c == Cell::Free { w } else { 0.0 }).collect();
        let total: f64 = masked.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::EmptyPrior);
        }
        masked.iter_mut().for_each(|w| *w /= total);
        Ok(Self::from_parts(grid.width(), grid.height(), masked))
    }

    fn from_parts(width: usize, height: usize, weights: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let cdf = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        ProbabilityMap { width, height, weights, cdf }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// Row-major indices of cells with positive weight.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights.iter().enumerate().filter(|(_, w)| **w > 0.0).map(|(i, _)| i)
    }

    /// Checks every distribution invariant against `grid`.
    pub fn check(&self, grid: &OccupancyGrid) -> Result<()> {
        if self.width != grid.width() || self.height != grid.height() {
            return Err(Error::invalid(format!(
                "prior is {}x{}, grid is {}x{}",
                self.width,
                self.height,
                grid.width(),
                grid.height()
            )));
        }
        for (i, (&w, &c)) in self.weights.iter().zip(grid.cells()).enumerate() {
            if w.is_nan() || w < 0.0 {
                return Err(Error::invalid(format!("weight {i} is negative")));
            }
            if c == Cell::Occupied && w != 0.0 {
                let cell = grid.cell_at(i);
                return Err(Error::invalid(format!("occupied cell ({}, {}) has weight {w}", cell.col, cell.row)));
            }
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::invalid(format!("weights sum to {sum}")));
        }
        Ok(())
    }

    /// Draws a cell index with probability proportional to its weight.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().expect("non-empty map");
        let u = rng.gen::<f64>() * total;
        let i = self.cdf.partition_point(|&c| c <= u);
        // Guard against `u` landing on the final plateau through rounding.
        if i < self.weights.len() {
            i
        } else {
            self.weights.iter().rposition(|w| *w > 0.0).expect("non-empty support")
        }
    }
}

/// The label construction reused as a perfect-prediction prior: the A* path
/// between start and goal cells, dilated and normalized.
pub fn oracle_prior(problem: &PlanningProblem) -> Result<ProbabilityMap> {
    oracle_prior_with_radius(problem, search::DEFAULT_DILATION)
}

pub fn oracle_prior_with_radius(problem: &PlanningProblem, radius: f64) -> Result<ProbabilityMap> {
    let path = search::astar(&problem.grid, problem.start_cell(), problem.goal_cell())?
        .ok_or_else(|| Error::InfeasibleProblem("no grid path between start and goal".into()))?;
    let mask = search::dilate_mask(&path, &problem.grid, radius)?;
    ProbabilityMap::normalize(&mask.to_weights(), &problem.grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Probability of drawing from the prior instead of uniformly.
    pub alpha: f64,
    pub max_rejections: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { alpha: 0.5, max_rejections: 100 }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("alpha must be in [0, 1], got {}", self.alpha)));
        }
        if self.max_rejections == 0 {
            return Err(Error::invalid("max_rejections must be positive"));
        }
        Ok(())
    }
}

/// The set of points whose summed distance to start and goal is at most
/// `c_best`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "EllipseParams", try_from = "EllipseParams")]
pub struct InformedEllipse {
    start: Point2,
    goal: Point2,
    c_best: f64,
    c_min: f64,
    center: Point2,
    semi_major: f64,
    semi_minor: f64,
    cos: f64,
    sin: f64,
}

#[derive(Serialize, Deserialize)]
struct EllipseParams {
    start: Point2,
    goal: Point2,
    c_best: f64,
}

impl From<InformedEllipse> for EllipseParams {
    fn from(e: InformedEllipse) -> Self {
        EllipseParams { start: e.start, goal: e.goal, c_best: e.c_best }
    }
}

impl TryFrom<EllipseParams> for InformedEllipse {
    type Error = Error;

    fn try_from(p: EllipseParams) -> Result<Self> {
        InformedEllipse::new(p.start, p.goal, p.c_best)
    }
}

/// Slack on the ellipse inequality for points on the boundary.
const CONTAINS_SLACK: f64 = 1e-9;

impl InformedEllipse {
    /// `c_best` below the straight-line distance (beyond rounding) is rejected.
    pub fn new(start: Point2, goal: Point2, c_best: f64) -> Result<Self> {
        if !start.is_finite() || !goal.is_finite() || !c_best.is_finite() {
            return Err(Error::invalid("ellipse parameters must be finite"));
        }
        let c_min = start.dist(goal);
        if c_best < c_min - 1e-9 * c_min.max(1.0) {
            return Err(Error::invalid(format!("c_best {c_best} is below c_min {c_min}")));
        }
        let c_best = c_best.max(c_min);
        let (cos, sin) =
            if c_min > 0.0 { ((goal.x - start.x) / c_min, (goal.y - start.y) / c_min) } else { (1.0, 0.0) };
        Ok(InformedEllipse {
            start,
            goal,
            c_best,
            c_min,
            center: start.lerp(goal, 0.5),
            semi_major: c_best / 2.0,
            semi_minor: (c_best * c_best - c_min * c_min).max(0.0).sqrt() / 2.0,
            cos,
            sin,
        })
    }

    pub fn start(&self) -> Point2 {
        self.start
    }

    pub fn goal(&self) -> Point2 {
        self.goal
    }

    pub fn c_best(&self) -> f64 {
        self.c_best
    }

    pub fn c_min(&self) -> f64 {
        self.c_min
    }

    pub fn center(&self) -> Point2 {
        self.center
    }

    pub fn semi_major(&self) -> f64 {
        self.semi_major
    }

    pub fn semi_minor(&self) -> f64 {
        self.semi_minor
    }

    /// Heading of the major axis, radians.
    pub fn rotation(&self) -> f64 {
        self.sin.atan2(self.cos)
    }

    fn local(&self, p: Point2) -> (f64, f64) {
        let (dx, dy) = (p.x - self.center.x, p.y - self.center.y);
        (dx * self.cos + dy * self.sin, -dx * self.sin + dy * self.cos)
    }

    fn world(&self, u: f64, v: f64) -> Point2 {
        Point2::new(self.center.x + u * self.cos - v * self.sin, self.center.y + u * self.sin + v * self.cos)
    }

    pub fn contains(&self, p: Point2) -> bool {
        let (u, v) = self.local(p);
        if self.semi_minor <= 0.0 {
            // Degenerate: the start-goal segment.
            return v.abs() <= 1e-9 && u.abs() <= self.semi_major + 1e-9;
        }
        let q = (u / self.semi_major).powi(2) + (v / self.semi_minor).powi(2);
        q <= 1.0 + CONTAINS_SLACK
    }

    /// Uniform point inside the ellipse: a unit-disk sample stretched by the
    /// semi-axes, rotated and translated.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R) -> Point2 {
        let r = rng.gen::<f64>().sqrt();
        let theta = rng.gen::<f64>() * TAU;
        self.world(self.semi_major * r * theta.cos(), self.semi_minor * r * theta.sin())
    }
}

/// Mixture and informed sampling over one grid, with the free-cell index
/// precomputed. Owns no rng; every call takes the caller's.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    grid: &'a OccupancyGrid,
    prior: Option<&'a ProbabilityMap>,
    free: Vec<u32>,
    cfg: SamplerConfig,
}

impl<'a> Sampler<'a> {
    /// Without a prior every draw is uniform over free space.
    pub fn new(grid: &'a OccupancyGrid, prior: Option<&'a ProbabilityMap>, cfg: SamplerConfig) -> Result<Self> {
        cfg.validate()?;
        if let Some(p) = prior {
            p.check(grid)?;
        }
        let free = grid.free_indices();
        if free.is_empty() {
            return Err(Error::EmptyFreeSpace);
        }
        Ok(Sampler { grid, prior, free, cfg })
    }

    pub fn uniform_only(grid: &'a OccupancyGrid) -> Result<Self> {
        Self::new(grid, None, SamplerConfig { alpha: 0.0, ..SamplerConfig::default() })
    }

    pub fn config(&self) -> SamplerConfig {
        self.cfg
    }

    fn point_in_cell<R: Rng + ?Sized>(&self, index: usize, rng: &mut R) -> Point2 {
        let c = self.grid.cell_at(index);
        let inside = |lo: usize, u: f64| (lo as f64 + u).min((lo as f64 + 1.0).next_down());
        let x = inside(c.col, rng.gen::<f64>());
        let y = inside(c.row, rng.gen::<f64>());
        Point2::new(x, y)
    }

    /// Draws a uniform free-space point. Consumes the rng exactly like
    /// [`Sampler::sample_mixture`] with `alpha = 0`.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point2 {
        let i = self.free[rng.gen_range(0..self.free.len())] as usize;
        self.point_in_cell(i, rng)
    }

    /// Draws from `alpha * P + (1 - alpha) * U`. The coin is only flipped for
    /// `0 < alpha < 1`, so the extreme settings consume no extra randomness.
    pub fn sample_mixture<R: Rng + ?Sized>(&self, rng: &mut R) -> Point2 {
        let prior = match self.prior {
            Some(p) if self.cfg.alpha > 0.0 => p,
            _ => return self.sample_uniform(rng),
        };
        let from_prior = self.cfg.alpha >= 1.0 || rng.gen::<f64>() < self.cfg.alpha;
        if from_prior {
            let i = prior.sample_index(rng);
            self.point_in_cell(i, rng)
        } else {
            self.sample_uniform(rng)
        }
    }

    /// Rejection-samples the mixture until a draw lands inside `ellipse`;
    /// after `max_rejections` misses, falls back to uniform draws inside the
    /// ellipse filtered to free space.
    pub fn sample_informed<R: Rng + ?Sized>(&self, ellipse: &InformedEllipse, rng: &mut R) -> Result<Point2> {
        for _ in 0..self.cfg.max_rejections {
            let p = self.sample_mixture(rng);
            if ellipse.contains(p) {
                return Ok(p);
            }
        }
        for _ in 0..self.cfg.max_rejections {
            let p = ellipse.sample_interior(rng);
            if self.grid.is_free(p) && ellipse.contains(p) {
                return Ok(p);
            }
        }
        Err(Error::EllipseExhausted)
    }
}

pub fn sample_mixture<R: Rng + ?Sized>(
    prior: &ProbabilityMap,
    grid: &OccupancyGrid,
    cfg: SamplerConfig,
    rng: &mut R,
) -> Result<Point2> {
    Ok(Sampler::new(grid, Some(prior), cfg)?.sample_mixture(rng))
}

pub fn sample_informed<R: Rng + ?Sized>(
    prior: &ProbabilityMap,
    ellipse: &InformedEllipse,
    grid: &OccupancyGrid,
    cfg: SamplerConfig,
    rng: &mut R,
) -> Result<Point2> {
    Sampler::new(grid, Some(prior), cfg)?.sample_informed(ellipse, rng)
}

// NPRI binary format: b"NPRI", version, [flags], u32 width, u32 height,
// width*height f32 weights; all little-endian, row-major. Version 1 has no
// flags byte and always carries a normalized prior. Version 2 adds a flags
// byte whose low bit marks an unnormalized 0/1 label mask.

const MAGIC: &[u8; 4] = b"NPRI";
const VERSION_PRIOR: u8 = 0x01;
const VERSION_FLAGGED: u8 = 0x02;
const FLAG_MASK: u8 = 0x01;

/// Raw contents of an NPRI file.
#[derive(Debug, Clone, PartialEq)]
pub struct NpriFile {
    pub width: usize,
    pub height: usize,
    pub is_mask: bool,
    pub weights: Vec<f32>,
}

impl NpriFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(14 + 4 * self.weights.len());
        out.extend_from_slice(MAGIC);
        if self.is_mask {
            out.push(VERSION_FLAGGED);
            out.push(FLAG_MASK);
        } else {
            out.push(VERSION_PRIOR);
        }
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        for w in &self.weights {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let mut take = |n: usize, what: &str| -> Result<(usize, &[u8])> {
            if bytes.len() < pos + n {
                return Err(Error::format(format!("truncated while reading {what}"), Location::Offset(pos)));
            }
            let at = pos;
            pos += n;
            Ok((at, &bytes[at..at + n]))
        };
        let (_, magic) = take(4, "magic")?;
        if magic != MAGIC {
            return Err(Error::format("bad magic, expected \"NPRI\"", Location::Offset(0)));
        }
        let (at, version) = take(1, "version")?;
        let is_mask = match version[0] {
            VERSION_PRIOR => false,
            VERSION_FLAGGED => {
                let (_, flags) = take(1, "flags")?;
                flags[0] & FLAG_MASK != 0
            }
            v => return Err(Error::format(format!("unsupported version {v:#04x}"), Location::Offset(at))),
        };
        let (_, w) = take(4, "width")?;
        let width = u32::from_le_bytes(w.try_into().unwrap()) as usize;
        let (at, h) = take(4, "height")?;
        let height = u32::from_le_bytes(h.try_into().unwrap()) as usize;
        if width == 0 || height == 0 {
            return Err(Error::format(format!("dimensions {width}x{height} must be positive"), Location::Offset(at)));
        }
        let (at, body) = take(width * height * 4, "weights")?;
        if bytes.len() != at + body.len() {
            return Err(Error::format("trailing bytes after weights", Location::Offset(at + body.len())));
        }
        let weights = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(NpriFile { width, height, is_mask, weights })
    }

    fn weight_offset(&self, i: usize) -> usize {
        let header = if self.is_mask { 14 } else { 13 };
        header + 4 * i
    }
}

pub fn save_prior(prior: &ProbabilityMap, path: impl AsRef<Path>) -> Result<()> {
    let file = NpriFile {
        width: prior.width,
        height: prior.height,
        is_mask: false,
        weights: prior.weights.iter().map(|&w| w as f32).collect(),
    };
    write_file(path.as_ref(), &file.to_bytes())
}

pub fn save_mask(mask: &PathMask, path: impl AsRef<Path>) -> Result<()> {
    let file = NpriFile {
        width: mask.width(),
        height: mask.height(),
        is_mask: true,
        weights: mask.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
    };
    write_file(path.as_ref(), &file.to_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

/// Decodes and validates a prior against `grid`. Sums within
/// [`FILE_SUM_TOLERANCE`] of one are renormalized; anything else is rejected.
pub fn prior_from_bytes(bytes: &[u8], grid: &OccupancyGrid) -> Result<ProbabilityMap> {
    let file = NpriFile::parse(bytes)?;
    if file.is_mask {
        return Err(Error::format("file holds a label mask, not a prior", Location::Offset(5)));
    }
    if file.width != grid.width() || file.height != grid.height() {
        return Err(Error::format(
            format!("prior is {}x{} but the map is {}x{}", file.width, file.height, grid.width(), grid.height()),
            Location::Offset(5),
        ));
    }
    for (i, (&w, &c)) in file.weights.iter().zip(grid.cells()).enumerate() {
        let at = Location::Offset(file.weight_offset(i));
        if !w.is_finite() || w < 0.0 {
            return Err(Error::format(format!("weight {i} is {w}"), at));
        }
        if c == Cell::Occupied && w != 0.0 {
            let cell = grid.cell_at(i);
            return Err(Error::format(format!("occupied cell ({}, {}) has weight {w}", cell.col, cell.row), at));
        }
    }
    let sum: f64 = file.weights.iter().map(|&w| w as f64).sum();
    if (sum - 1.0).abs() > FILE_SUM_TOLERANCE {
        return Err(Error::format(
            format!("weights sum to {sum}, expected 1 +/- {FILE_SUM_TOLERANCE}"),
            Location::Unknown,
        ));
    }
    let weights: Vec<f64> = file.weights.iter().map(|&w| w as f64).collect();
    ProbabilityMap::normalize(&weights, grid)
}

pub fn load_prior(path: impl AsRef<Path>, grid: &OccupancyGrid) -> Result<ProbabilityMap> {
    prior_from_bytes(&std::fs::read(path)?, grid)
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<PathMask> {
    let file = NpriFile::parse(&std::fs::read(path)?)?;
    if !file.is_mask {
        return Err(Error::format("file holds a prior, not a label mask", Location::Offset(4)));
    }
    let mut bits = Vec::with_capacity(file.weights.len());
    for (i, &w) in file.weights.iter().enumerate() {
        bits.push(match w {
            0.0 => false,
            1.0 => true,
            _ => {
                return Err(Error::format(
                    format!("mask value {w} is not 0 or 1"),
                    Location::Offset(file.weight_offset(i)),
                ))
            }
        });
    }
    PathMask::new(file.width, file.height, bits)
}
