//! Occupancy grids, procedural obstacle maps and collision queries.
//!
//! World coordinates are measured in cells: the point `(x, y)` lies in cell
//! `(floor(x), floor(y))`, and cell `(col, row)` covers `[col, col+1) x [row, row+1)`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Location, Result};
use crate::search;
use crate::seed;

/// Smallest edge length accepted by [`generate_map`].
pub const MIN_GENERATED_SIZE: usize = 32;
/// Default map edge, chosen to match the prior network's input resolution.
pub const DEFAULT_SIZE: usize = 224;
/// Spacing between collision samples along a segment, in cells.
pub const COLLISION_STEP: f64 = 0.25;
/// Attempts made by [`sample_problem`] before giving up.
pub const PROBLEM_RETRIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist(&self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn dist_sq(&self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn lerp(&self, other: Point2, t: f64) -> Point2 {
        Point2::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl FromStr for Point2 {
    type Err = Error;

    /// Parses `"x,y"`.
    fn from_str(s: &str) -> Result<Self> {
        let (x, y) = s.split_once(',').ok_or_else(|| Error::invalid(format!("expected `x,y`, got `{s}`")))?;
        let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| Error::invalid(format!("bad coordinate `{v}`: {e}")));
        let p = Point2::new(parse(x)?, parse(y)?);
        if !p.is_finite() {
            return Err(Error::invalid(format!("non-finite point `{s}`")));
        }
        Ok(p)
    }
}

/// Integer cell coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIdx {
    pub col: usize,
    pub row: usize,
}

impl CellIdx {
    pub const fn new(col: usize, row: usize) -> Self {
        CellIdx { col, row }
    }

    pub fn center(&self) -> Point2 {
        Point2::new(self.col as f64 + 0.5, self.row as f64 + 0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Cell {
    Free = 0,
    Occupied = 1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Density {
    Sparse,
    Medium,
    Dense,
}

impl Density {
    pub const ALL: [Density; 3] = [Density::Sparse, Density::Medium, Density::Dense];

    pub fn name(&self) -> &'static str {
        match self {
            Density::Sparse => "sparse",
            Density::Medium => "medium",
            Density::Dense => "dense",
        }
    }
}

impl fmt::Display for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Density {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sparse" => Ok(Density::Sparse),
            "medium" => Ok(Density::Medium),
            "dense" => Ok(Density::Dense),
            _ => Err(Error::invalid(format!("unknown density `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize, cells: Vec<Cell>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!("grid dimensions must be positive, got {width}x{height}")));
        }
        if cells.len() != width * height {
            return Err(Error::invalid(format!(
                "expected {} cells for a {width}x{height} grid, got {}",
                width * height,
                cells.len()
            )));
        }
        Ok(OccupancyGrid { width, height, cells })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![Cell::Free; width * height])
    }

    pub fn filled(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![Cell::Occupied; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    #[inline]
    pub fn index(&self, c: CellIdx) -> usize {
        c.row * self.width + c.col
    }

    #[inline]
    pub fn cell_at(&self, index: usize) -> CellIdx {
        CellIdx::new(index % self.width, index / self.width)
    }

    pub fn contains_cell(&self, c: CellIdx) -> bool {
        c.col < self.width && c.row < self.height
    }

    pub fn get(&self, c: CellIdx) -> Option<Cell> {
        self.contains_cell(c).then(|| self.cells[self.index(c)])
    }

    pub fn is_free_cell(&self, c: CellIdx) -> bool {
        self.get(c) == Some(Cell::Free)
    }

    pub fn set(&mut self, c: CellIdx, value: Cell) {
        let i = self.index(c);
        self.cells[i] = value;
    }

    /// Cell containing `p`, if `p` is inside the grid.
    pub fn cell_of(&self, p: Point2) -> Option<CellIdx> {
        if !(p.x >= 0.0 && p.y >= 0.0) {
            return None;
        }
        let (col, row) = (p.x.floor(), p.y.floor());
        if col < self.width as f64 && row < self.height as f64 {
            Some(CellIdx::new(col as usize, row as usize))
        } else {
            None
        }
    }

    /// `true` iff `p` is inside the grid and its cell is free.
    #[inline]
    pub fn is_free(&self, p: Point2) -> bool {
        self.cell_of(p).is_some_and(|c| self.cells[self.index(c)] == Cell::Free)
    }

    /// Checks every point along `a -> b` at spacing at most [`COLLISION_STEP`],
    /// endpoints included. The endpoints are put in a canonical order first so
    /// the result is exactly symmetric.
    pub fn segment_collision_free(&self, a: Point2, b: Point2) -> bool {
        let (a, b) = if (a.x, a.y) <= (b.x, b.y) { (a, b) } else { (b, a) };
        let len = a.dist(b);
        if !len.is_finite() {
            return false;
        }
        let n = (len / COLLISION_STEP).ceil().max(1.0) as usize;
        (0..=n).all(|i| {
            let p = if i == n { b } else { a.lerp(b, i as f64 / n as f64) };
            self.is_free(p)
        })
    }

    pub fn free_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c == Cell::Free).count()
    }

    pub fn occupied_fraction(&self) -> f64 {
        1.0 - self.free_count() as f64 / self.len() as f64
    }

    /// Row-major indices of all free cells.
    pub fn free_indices(&self) -> Vec<u32> {
        self.cells.iter().enumerate().filter(|(_, &c)| c == Cell::Free).map(|(i, _)| i as u32).collect()
    }
}

/// Occupied-fraction bands per density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DensityBands {
    pub sparse: (f64, f64),
    pub medium: (f64, f64),
    pub dense: (f64, f64),
    /// Minimum free gap between separate obstacles per density (sparse,
    /// medium, dense), in cells of a 224-cell map; scaled with map size.
    pub clearance: (f64, f64, f64),
}

impl Default for DensityBands {
    fn default() -> Self {
        DensityBands { sparse: (0.02, 0.08), medium: (0.10, 0.18), dense: (0.22, 0.32), clearance: (8.0, 8.0, 3.0) }
    }
}

impl DensityBands {
    pub fn band(&self, density: Density) -> (f64, f64) {
        match density {
            Density::Sparse => self.sparse,
            Density::Medium => self.medium,
            Density::Dense => self.dense,
        }
    }

    pub fn clearance(&self, density: Density) -> f64 {
        match density {
            Density::Sparse => self.clearance.0,
            Density::Medium => self.clearance.1,
            Density::Dense => self.clearance.2,
        }
    }

    fn validate(&self) -> Result<()> {
        for d in Density::ALL {
            let (lo, hi) = self.band(d);
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return Err(Error::invalid(format!("bad {d} density band ({lo}, {hi})")));
            }
            let c = self.clearance(d);
            if !c.is_finite() || c < 0.0 {
                return Err(Error::invalid(format!("bad {d} clearance {c}")));
            }
        }
        Ok(())
    }
}

/// Axis-aligned rectangle in cells, half-open on the far side.
#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: i64,
    y0: i64,
    x1: i64,
    y1: i64,
}

#[derive(Debug, Clone)]
enum Shape {
    Rects(Vec<Rect>),
    Disk { cx: f64, cy: f64, r: f64 },
}

impl Shape {
    fn for_each_cell(&self, width: usize, height: usize, mut f: impl FnMut(CellIdx)) {
        let clip_x = |v: i64| v.clamp(0, width as i64) as usize;
        let clip_y = |v: i64| v.clamp(0, height as i64) as usize;
        match self {
            Shape::Rects(rects) => {
                for r in rects {
                    for row in clip_y(r.y0)..clip_y(r.y1) {
                        for col in clip_x(r.x0)..clip_x(r.x1) {
                            f(CellIdx::new(col, row));
                        }
                    }
                }
            }
            Shape::Disk { cx, cy, r } => {
                let (x0, x1) = (clip_x((cx - r).floor() as i64), clip_x((cx + r).ceil() as i64));
                let (y0, y1) = (clip_y((cy - r).floor() as i64), clip_y((cy + r).ceil() as i64));
                for row in y0..y1 {
                    for col in x0..x1 {
                        let c = CellIdx::new(col, row).center();
                        if c.dist_sq(Point2::new(*cx, *cy)) <= r * r {
                            f(CellIdx::new(col, row));
                        }
                    }
                }
            }
        }
    }
}

/// Places local rectangles (in a `w x h` box) at `(ox, oy)` after an optional
/// transpose and flips. Used to orient the concave polyominoes.
fn orient(rects: &[Rect], w: i64, h: i64, ox: i64, oy: i64, orientation: u8) -> Vec<Rect> {
    let transpose = orientation & 1 != 0;
    let flip = orientation & 2 != 0;
    rects
        .iter()
        .map(|r| {
            let mut r = *r;
            if flip {
                r = Rect { x0: w - r.x1, y0: h - r.y1, x1: w - r.x0, y1: h - r.y0 };
            }
            if transpose {
                r = Rect { x0: r.y0, y0: r.x0, x1: r.y1, y1: r.x1 };
            }
            Rect { x0: r.x0 + ox, y0: r.y0 + oy, x1: r.x1 + ox, y1: r.y1 + oy }
        })
        .collect()
}

fn scaled(rng: &mut impl Rng, scale: f64, lo: f64, hi: f64, min: i64) -> i64 {
    let lo = ((lo * scale).round() as i64).max(min);
    let hi = ((hi * scale).round() as i64).max(lo);
    rng.gen_range(lo..=hi)
}

fn random_shape(rng: &mut impl Rng, width: usize, height: usize, concave_only: bool) -> (Shape, bool) {
    let scale = width.min(height) as f64 / DEFAULT_SIZE as f64;
    let ox = rng.gen_range(-4..width as i64);
    let oy = rng.gen_range(-4..height as i64);
    let kind = if concave_only { rng.gen_range(2..4) } else { rng.gen_range(0..4) };
    match kind {
        0 => {
            let w = scaled(rng, scale, 6.0, 30.0, 2);
            let h = scaled(rng, scale, 6.0, 30.0, 2);
            (Shape::Rects(vec![Rect { x0: ox, y0: oy, x1: ox + w, y1: oy + h }]), false)
        }
        1 => {
            let r_hi = (14.0 * scale).max(2.5);
            let r = rng.gen_range((3.0 * scale).max(1.5)..=r_hi);
            (Shape::Disk { cx: ox as f64 + 0.5, cy: oy as f64 + 0.5, r }, false)
        }
        2 => {
            // L: a horizontal arm and a vertical arm sharing a corner.
            let len_a = scaled(rng, scale, 12.0, 40.0, 5);
            let len_b = scaled(rng, scale, 12.0, 40.0, 5);
            let t = scaled(rng, scale, 3.0, 7.0, 2).min(len_a - 2).min(len_b - 2);
            let local = [Rect { x0: 0, y0: 0, x1: len_a, y1: t }, Rect { x0: 0, y0: 0, x1: t, y1: len_b }];
            let o = rng.gen_range(0..4u8);
            (Shape::Rects(orient(&local, len_a, len_b, ox, oy, o)), true)
        }
        _ => {
            // U: a base with two arms.
            let w = scaled(rng, scale, 14.0, 40.0, 7);
            let d = scaled(rng, scale, 10.0, 32.0, 5);
            let t = scaled(rng, scale, 3.0, 6.0, 2).min((w - 1) / 3).min(d - 2);
            let local = [
                Rect { x0: 0, y0: d - t, x1: w, y1: d },
                Rect { x0: 0, y0: 0, x1: t, y1: d },
                Rect { x0: w - t, y0: 0, x1: w, y1: d },
            ];
            let o = rng.gen_range(0..4u8);
            (Shape::Rects(orient(&local, w, d, ox, oy, o)), true)
        }
    }
}

/// Generates a map with the default density bands.
pub fn generate_map(seed: u64, density: Density, width: usize, height: usize) -> Result<OccupancyGrid> {
    generate_map_with(&DensityBands::default(), seed, density, width, height)
}

/// Scatters rectangles, disks and L/U polyominoes until the occupied fraction
/// reaches a target drawn from the middle of the density band. Obstacles that
/// would overshoot the band, or come closer than the density's clearance to
/// an earlier obstacle, are discarded. Medium and Dense maps always get at
/// least one concave obstacle.
pub fn generate_map_with(
    bands: &DensityBands,
    seed: u64,
    density: Density,
    width: usize,
    height: usize,
) -> Result<OccupancyGrid> {
    if width < MIN_GENERATED_SIZE || height < MIN_GENERATED_SIZE {
        return Err(Error::invalid(format!(
            "generated maps must be at least {MIN_GENERATED_SIZE}x{MIN_GENERATED_SIZE}, got {width}x{height}"
        )));
    }
    bands.validate()?;
    let (lo, hi) = bands.band(density);
    let total = width * height;
    let min_occupied = (lo * total as f64).ceil() as usize;
    let max_occupied = ((hi * total as f64).floor() as usize).max(min_occupied);

    let mut rng =
        seed::rng(seed::derive(seed, &[seed::label_hash("map"), density as u64, width as u64, height as u64]));
    let target = lo + (hi - lo) * rng.gen_range(0.25..0.75);
    let target_cells = ((target * total as f64).round() as usize).clamp(min_occupied, max_occupied);

    let scale = width.min(height) as f64 / DEFAULT_SIZE as f64;
    let clearance = (bands.clearance(density) * scale).round() as i64;
    // Cells within `clearance` (Chebyshev) of a placed obstacle.
    let mut halo = vec![false; total];
    let mark_halo = |halo: &mut Vec<bool>, c: CellIdx| {
        let (col, row) = (c.col as i64, c.row as i64);
        for r in (row - clearance).max(0)..=(row + clearance).min(height as i64 - 1) {
            for q in (col - clearance).max(0)..=(col + clearance).min(width as i64 - 1) {
                halo[r as usize * width + q as usize] = true;
            }
        }
    };

    let mut grid = OccupancyGrid::empty(width, height)?;
    let mut occupied = 0usize;
    let mut need_concave = density != Density::Sparse;
    let mut fresh = Vec::new();

    for _ in 0..20_000 {
        if occupied >= target_cells && !need_concave {
            break;
        }
        let (shape, concave) = random_shape(&mut rng, width, height, need_concave);
        fresh.clear();
        shape.for_each_cell(width, height, |c| fresh.push(c));
        fresh.sort_unstable();
        fresh.dedup();
        if fresh.is_empty() || occupied + fresh.len() > max_occupied || fresh.iter().any(|&c| halo[grid.index(c)]) {
            continue;
        }
        for &c in &fresh {
            grid.set(c, Cell::Occupied);
            mark_halo(&mut halo, c);
        }
        occupied += fresh.len();
        if concave {
            need_concave = false;
        }
    }

    // Top up with single cells if the shapes could not reach the band,
    // honouring the clearance while that is still possible.
    let mut tries = 0usize;
    while occupied < min_occupied {
        let c = CellIdx::new(rng.gen_range(0..width), rng.gen_range(0..height));
        tries += 1;
        let spaced = tries > 50 * total || !halo[grid.index(c)];
        if grid.get(c) == Some(Cell::Free) && spaced {
            mark_halo(&mut halo, c);
            grid.set(c, Cell::Occupied);
            occupied += 1;
        }
    }
    Ok(grid)
}

/// A grid with a start and a goal, both in free cells.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanningProblem {
    pub grid: OccupancyGrid,
    pub start: Point2,
    pub goal: Point2,
}

impl PlanningProblem {
    pub fn new(grid: OccupancyGrid, start: Point2, goal: Point2) -> Result<Self> {
        if !start.is_finite() || !goal.is_finite() {
            return Err(Error::invalid("start and goal must be finite"));
        }
        if !grid.is_free(start) {
            return Err(Error::invalid(format!("start {start} is not in free space")));
        }
        if !grid.is_free(goal) {
            return Err(Error::invalid(format!("goal {goal} is not in free space")));
        }
        if start == goal {
            return Err(Error::invalid("start and goal coincide"));
        }
        Ok(PlanningProblem { grid, start, goal })
    }

    pub fn start_cell(&self) -> CellIdx {
        self.grid.cell_of(self.start).expect("start is inside the grid")
    }

    pub fn goal_cell(&self) -> CellIdx {
        self.grid.cell_of(self.goal).expect("goal is inside the grid")
    }
}

/// Draws a start/goal pair of free cell centers at least `min_separation`
/// apart that A* can connect.
pub fn sample_problem(grid: &OccupancyGrid, seed: u64, min_separation: f64) -> Result<PlanningProblem> {
    let free = grid.free_indices();
    if free.len() < 2 {
        return Err(Error::InfeasibleProblem("grid has fewer than two free cells".into()));
    }
    let mut rng = seed::rng(seed::derive(seed, &[seed::label_hash("problem")]));
    for _ in 0..PROBLEM_RETRIES {
        let s = grid.cell_at(free[rng.gen_range(0..free.len())] as usize);
        let g = grid.cell_at(free[rng.gen_range(0..free.len())] as usize);
        if s == g || s.center().dist(g.center()) < min_separation {
            continue;
        }
        if search::astar(grid, s, g)?.is_some() {
            return PlanningProblem::new(grid.clone(), s.center(), g.center());
        }
    }
    Err(Error::InfeasibleProblem(format!(
        "no connected start/goal pair at separation >= {min_separation} within {PROBLEM_RETRIES} attempts"
    )))
}

#[derive(Serialize, Deserialize)]
struct MapFile {
    format: String,
    width: usize,
    height: usize,
    rows: Vec<String>,
}

const MAP_FORMAT: &str = "gridmap/1";

impl OccupancyGrid {
    pub fn to_json(&self) -> String {
        let rows = self
            .cells
            .chunks(self.width)
            .map(|row| row.iter().map(|c| if *c == Cell::Occupied { '1' } else { '0' }).collect())
            .collect();
        let file = MapFile { format: MAP_FORMAT.into(), width: self.width, height: self.height, rows };
        serde_json::to_string(&file).expect("map serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MapFile = serde_json::from_str(text).map_err(Error::from_json)?;
        if file.format != MAP_FORMAT {
            return Err(Error::format(
                format!("expected format `{MAP_FORMAT}`, got `{}`", file.format),
                Location::Unknown,
            ));
        }
        if file.width == 0 || file.height == 0 {
            return Err(Error::format(
                format!("dimensions must be positive, got {}x{}", file.width, file.height),
                Location::Unknown,
            ));
        }
        if file.rows.len() != file.height {
            return Err(Error::format(
                format!("expected {} rows, got {}", file.height, file.rows.len()),
                Location::Unknown,
            ));
        }
        let mut cells = Vec::with_capacity(file.width * file.height);
        for (r, row) in file.rows.iter().enumerate() {
            if row.len() != file.width {
                return Err(Error::format(
                    format!("row {r} has length {}, expected {}", row.len(), file.width),
                    Location::Unknown,
                ));
            }
            for (c, ch) in row.bytes().enumerate() {
                cells.push(match ch {
                    b'0' => Cell::Free,
                    b'1' => Cell::Occupied,
                    other => {
                        return Err(Error::format(
                            format!("row {r} column {c}: unexpected character {:?}", other as char),
                            Location::Unknown,
                        ))
                    }
                });
            }
        }
        OccupancyGrid::new(file.width, file.height, cells)
    }
}

pub fn save_map(grid: &OccupancyGrid, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, grid.to_json())?;
    Ok(())
}

pub fn load_map(path: impl AsRef<Path>) -> Result<OccupancyGrid> {
    OccupancyGrid::from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid_with(width: usize, height: usize, occupied: &[(usize, usize)]) -> OccupancyGrid {
        let mut g = OccupancyGrid::empty(width, height).unwrap();
        for &(c, r) in occupied {
            g.set(CellIdx::new(c, r), Cell::Occupied);
        }
        g
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_map(7, Density::Sparse, 224, 224).unwrap();
        let b = generate_map(7, Density::Sparse, 224, 224).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_map(8, Density::Sparse, 224, 224).unwrap());
    }

    #[test]
    fn generated_fractions_stay_in_band() {
        let bands = DensityBands::default();
        for density in Density::ALL {
            let (lo, hi) = bands.band(density);
            for seed in 0..8 {
                for size in [32, 64, 224] {
                    let g = generate_map(seed, density, size, size).unwrap();
                    let f = g.occupied_fraction();
                    assert!(f >= lo && f <= hi, "{density} seed {seed} size {size}: {f}");
                }
            }
        }
        let dense = generate_map(7, Density::Dense, 224, 224).unwrap();
        let f = dense.occupied_fraction();
        assert!((0.22..=0.32).contains(&f), "{f}");
    }

    #[test]
    fn rejects_small_maps() {
        assert!(matches!(generate_map(1, Density::Sparse, 16, 16), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn orient_covers_all_quadrants() {
        let l = [Rect { x0: 0, y0: 0, x1: 4, y1: 1 }, Rect { x0: 0, y0: 0, x1: 1, y1: 3 }];
        for o in 0..4 {
            let rects = orient(&l, 4, 3, 0, 0, o);
            let mut cells = std::collections::BTreeSet::new();
            Shape::Rects(rects).for_each_cell(10, 10, |c| {
                cells.insert(c);
            });
            // Two arms sharing one corner cell.
            assert_eq!(cells.len(), 4 + 3 - 1);
        }
    }

    #[test]
    fn is_free_examples() {
        let g = grid_with(10, 10, &[(3, 4)]);
        assert!(g.is_free(Point2::new(5.5, 5.5)));
        assert!(!g.is_free(Point2::new(-1.0, 0.0)));
        assert!(!g.is_free(Point2::new(3.2, 4.9)));
        assert!(!g.is_free(Point2::new(10.0, 5.0)));
        assert!(!g.is_free(Point2::new(f64::NAN, 5.0)));
    }

    #[test]
    fn segment_examples() {
        let empty = OccupancyGrid::empty(20, 20).unwrap();
        assert!(empty.segment_collision_free(Point2::new(1.0, 1.0), Point2::new(10.0, 10.0)));
        let a = Point2::new(2.5, 2.5);
        assert!(empty.segment_collision_free(a, a));

        let wall: Vec<_> = (0..20).map(|r| (8, r)).collect();
        let walled = grid_with(20, 20, &wall);
        assert!(!walled.segment_collision_free(Point2::new(1.0, 1.0), Point2::new(15.0, 12.0)));
    }

    #[test]
    fn sample_problem_respects_separation() {
        let g = OccupancyGrid::empty(224, 224).unwrap();
        let p = sample_problem(&g, 11, 100.0).unwrap();
        assert!(p.start.dist(p.goal) >= 100.0);
        assert_eq!(p, sample_problem(&g, 11, 100.0).unwrap());
    }

    #[test]
    fn sample_problem_on_full_grid_is_infeasible() {
        let g = OccupancyGrid::filled(64, 64).unwrap();
        assert!(matches!(sample_problem(&g, 0, 10.0), Err(Error::InfeasibleProblem(_))));
    }

    #[test]
    fn sample_problem_on_split_grid_only_returns_connected_pairs() {
        let wall: Vec<_> = (0..64).map(|r| (32, r)).collect();
        let g = grid_with(64, 64, &wall);
        for seed in 0..10 {
            if let Ok(p) = sample_problem(&g, seed, 5.0) {
                assert_eq!(p.start.x < 32.0, p.goal.x < 32.0);
            }
        }
    }

    #[test]
    fn generated_problems_are_feasible() {
        for density in Density::ALL {
            for seed in 0..4 {
                let g = generate_map(seed, density, 224, 224).unwrap();
                let p = sample_problem(&g, seed, 100.0).unwrap();
                assert!(search::astar(&p.grid, p.start_cell(), p.goal_cell()).unwrap().is_some());
            }
        }
    }

    #[test]
    fn map_json_round_trip_and_errors() {
        let g = generate_map(3, Density::Medium, 48, 40).unwrap();
        let text = g.to_json();
        assert_eq!(OccupancyGrid::from_json(&text).unwrap(), g);

        let truncated = &text[..text.len() / 2];
        match OccupancyGrid::from_json(truncated) {
            Err(Error::Format { at: Location::Line { line, .. }, .. }) => assert!(line >= 1),
            other => panic!("expected format error, got {other:?}"),
        }
        let zero = r#"{"format":"gridmap/1","width":0,"height":1,"rows":[""]}"#;
        assert!(matches!(OccupancyGrid::from_json(zero), Err(Error::Format { .. })));
        let bad_char = r#"{"format":"gridmap/1","width":2,"height":1,"rows":["0x"]}"#;
        assert!(matches!(OccupancyGrid::from_json(bad_char), Err(Error::Format { .. })));
    }

    #[test]
    fn map_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let g = generate_map(9, Density::Dense, 64, 64).unwrap();
        save_map(&g, &path).unwrap();
        assert_eq!(load_map(&path).unwrap(), g);
    }

    #[test]
    fn point_parsing() {
        assert_eq!("3,4.5".parse::<Point2>().unwrap(), Point2::new(3.0, 4.5));
        assert!("3".parse::<Point2>().is_err());
        assert!("inf,1".parse::<Point2>().is_err());
    }

    fn arb_grid() -> impl Strategy<Value = OccupancyGrid> {
        (4usize..16, 4usize..16).prop_flat_map(|(w, h)| {
            proptest::collection::vec(prop::bool::weighted(0.25), w * h).prop_map(move |bits| {
                let cells = bits.into_iter().map(|b| if b { Cell::Occupied } else { Cell::Free }).collect();
                OccupancyGrid::new(w, h, cells).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn segment_check_is_symmetric_and_implies_free_endpoints(
            g in arb_grid(),
            ax in -1.0f64..17.0, ay in -1.0f64..17.0,
            bx in -1.0f64..17.0, by in -1.0f64..17.0,
        ) {
            let (a, b) = (Point2::new(ax, ay), Point2::new(bx, by));
            let fwd = g.segment_collision_free(a, b);
            prop_assert_eq!(fwd, g.segment_collision_free(b, a));
            if fwd {
                prop_assert!(g.is_free(a) && g.is_free(b));
            }
        }

        #[test]
        fn map_json_round_trips(g in arb_grid()) {
            prop_assert_eq!(OccupancyGrid::from_json(&g.to_json()).unwrap(), g);
        }
    }
}
