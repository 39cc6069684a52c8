//! Grid search: 8-connected A*, an exhaustive Dijkstra oracle and the dilated
//! path masks used as sampling-prior labels.
//!
//! Moves cost 1 (straight) or sqrt(2) (diagonal). A diagonal move is only
//! allowed when both orthogonally adjacent cells are free, so a path never
//! squeezes between two obstacles touching at a corner.
//!
//! Path costs are carried as move counts rather than running float sums.
//! The value `straight + diagonal * sqrt(2)` is then a pure function of the
//! counts, which lets A* and Dijkstra agree bit-exactly on optimal costs.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::grid::{CellIdx, OccupancyGrid};

/// Move counts of a grid path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MoveCost {
    pub straight: u32,
    pub diagonal: u32,
}

impl MoveCost {
    pub fn value(&self) -> f64 {
        self.straight as f64 + self.diagonal as f64 * SQRT_2
    }

    fn step(self, diagonal: bool) -> Self {
        if diagonal {
            MoveCost { diagonal: self.diagonal + 1, ..self }
        } else {
            MoveCost { straight: self.straight + 1, ..self }
        }
    }
}

/// Ordered cells of an 8-connected path, start first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellPath {
    cells: Vec<CellIdx>,
}

impl CellPath {
    pub fn cells(&self) -> &[CellIdx] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn moves(&self) -> MoveCost {
        self.cells.windows(2).fold(MoveCost::default(), |acc, w| acc.step(w[0].col != w[1].col && w[0].row != w[1].row))
    }

    pub fn cost(&self) -> f64 {
        self.moves().value()
    }
}

const NEIGHBORS: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// Calls `f(neighbor, is_diagonal)` for every legal move out of `c`.
fn for_each_move(grid: &OccupancyGrid, c: CellIdx, mut f: impl FnMut(CellIdx, bool)) {
    let free = |col: i64, row: i64| col >= 0 && row >= 0 && grid.is_free_cell(CellIdx::new(col as usize, row as usize));
    let (col, row) = (c.col as i64, c.row as i64);
    for (dc, dr) in NEIGHBORS {
        let (nc, nr) = (col + dc, row + dr);
        if !free(nc, nr) {
            continue;
        }
        let diagonal = dc != 0 && dr != 0;
        if diagonal && !(free(col + dc, row) && free(col, row + dr)) {
            continue;
        }
        f(CellIdx::new(nc as usize, nr as usize), diagonal);
    }
}

fn octile(a: CellIdx, b: CellIdx) -> f64 {
    let dx = a.col.abs_diff(b.col) as f64;
    let dy = a.row.abs_diff(b.row) as f64;
    let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
    (hi - lo) + lo * SQRT_2
}

/// Min-heap entry keyed on `(priority, cell index)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Open {
    priority: f64,
    index: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        other.priority.total_cmp(&self.priority).then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn require_free(grid: &OccupancyGrid, c: CellIdx, what: &str) -> Result<()> {
    if grid.is_free_cell(c) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} cell ({}, {}) is not free", c.col, c.row)))
    }
}

/// Minimal-cost 8-connected path with the octile heuristic, or `None` when the
/// goal is unreachable. Among equal priorities the lower row-major index is
/// expanded first.
pub fn astar(grid: &OccupancyGrid, start: CellIdx, goal: CellIdx) -> Result<Option<CellPath>> {
    require_free(grid, start, "start")?;
    require_free(grid, goal, "goal")?;
    let n = grid.len();
    let mut g: Vec<Option<MoveCost>> = vec![None; n];
    let mut came_from = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();

    let s = grid.index(start);
    let goal_index = grid.index(goal);
    g[s] = Some(MoveCost::default());
    open.push(Open { priority: octile(start, goal), index: s });

    while let Some(Open { index, .. }) = open.pop() {
        if closed[index] {
            continue;
        }
        closed[index] = true;
        if index == goal_index {
            let mut cells = vec![grid.cell_at(index)];
            let mut cur = index;
            while cur != s {
                cur = came_from[cur];
                cells.push(grid.cell_at(cur));
            }
            cells.reverse();
            return Ok(Some(CellPath { cells }));
        }
        let here = g[index].expect("expanded cells have a cost");
        for_each_move(grid, grid.cell_at(index), |next, diagonal| {
            let ni = grid.index(next);
            if closed[ni] {
                return;
            }
            let cand = here.step(diagonal);
            if g[ni].is_none_or(|old| cand.value() < old.value()) {
                g[ni] = Some(cand);
                came_from[ni] = index;
                open.push(Open { priority: cand.value() + octile(next, goal), index: ni });
            }
        });
    }
    Ok(None)
}

/// Exact single-source shortest-path costs over the free-cell move graph.
/// Unreachable cells are absent.
pub fn dijkstra_oracle(grid: &OccupancyGrid, start: CellIdx) -> Result<HashMap<CellIdx, f64>> {
    require_free(grid, start, "start")?;
    let mut dist: Vec<Option<MoveCost>> = vec![None; grid.len()];
    let mut done = vec![false; grid.len()];
    let mut heap = BinaryHeap::new();
    let s = grid.index(start);
    dist[s] = Some(MoveCost::default());
    heap.push(Open { priority: 0.0, index: s });
    while let Some(Open { index, .. }) = heap.pop() {
        if done[index] {
            continue;
        }
        done[index] = true;
        let here = dist[index].unwrap();
        for_each_move(grid, grid.cell_at(index), |next, diagonal| {
            let ni = grid.index(next);
            let cand = here.step(diagonal);
            if !done[ni] && dist[ni].is_none_or(|old| cand.value() < old.value()) {
                dist[ni] = Some(cand);
                heap.push(Open { priority: cand.value(), index: ni });
            }
        });
    }
    Ok(dist.iter().enumerate().filter_map(|(i, d)| d.map(|d| (grid.cell_at(i), d.value()))).collect())
}

/// Binary mask over a grid, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathMask {
    width: usize,
    height: usize,
    on: Vec<bool>,
}

impl PathMask {
    pub fn new(width: usize, height: usize, on: Vec<bool>) -> Result<Self> {
        if on.len() != width * height {
            return Err(Error::invalid("mask length does not match its dimensions"));
        }
        Ok(PathMask { width, height, on })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.on
    }

    pub fn is_on(&self, c: CellIdx) -> bool {
        c.col < self.width && c.row < self.height && self.on[c.row * self.width + c.col]
    }

    pub fn count(&self) -> usize {
        self.on.iter().filter(|&&b| b).count()
    }

    pub fn on_cells(&self) -> impl Iterator<Item = CellIdx> + '_ {
        let w = self.width;
        self.on.iter().enumerate().filter(|(_, &b)| b).map(move |(i, _)| CellIdx::new(i % w, i / w))
    }

    /// 1.0 for on-cells, 0.0 elsewhere.
    pub fn to_weights(&self) -> Vec<f64> {
        self.on.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }
}

/// Default label dilation radius in cells.
pub const DEFAULT_DILATION: f64 = 3.0;

/// Marks every free cell whose center lies within `radius` (Euclidean,
/// center to center) of some path cell.
pub fn dilate_mask(path: &CellPath, grid: &OccupancyGrid, radius: f64) -> Result<PathMask> {
    if !radius.is_finite() || radius < 0.0 {
        return Err(Error::invalid(format!("dilation radius must be >= 0, got {radius}")));
    }
    let (w, h) = (grid.width(), grid.height());
    let mut on = vec![false; w * h];
    let reach = radius.floor() as i64;
    let r2 = radius * radius;
    for c in path.cells() {
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                if ((dc * dc + dr * dr) as f64) > r2 {
                    continue;
                }
                let (col, row) = (c.col as i64 + dc, c.row as i64 + dr);
                if col < 0 || row < 0 || col >= w as i64 || row >= h as i64 {
                    continue;
                }
                let cell = CellIdx::new(col as usize, row as usize);
                if grid.is_free_cell(cell) {
                    on[grid.index(cell)] = true;
                }
            }
        }
    }
    PathMask::new(w, h, on)
}
