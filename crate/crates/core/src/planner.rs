//! RRT*, Neural RRT* and Neural Informed RRT* on one tree engine.
//!
//! The three planners differ only in where `x_rand` comes from:
//!
//! * RRT* draws uniformly from free space.
//! * Neural RRT* draws from `alpha * P + (1 - alpha) * U`.
//! * Neural Informed RRT* draws from the same mixture until a solution
//!   exists, then only from the part of the mixture inside the informed
//!   ellipse of the current best cost.
//!
//! Everything after sampling (nearest, steer, collision check, choose-parent,
//! rewire, goal connection) is shared.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid::{OccupancyGrid, PlanningProblem, Point2};
use crate::prior::{InformedEllipse, ProbabilityMap, Sampler, SamplerConfig};
use crate::seed::{self, PlanRng};

/// Minimum cost decrease for a rewire to happen.
pub const REWIRE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
pub enum PlannerKind {
    #[serde(rename = "rrtstar")]
    #[value(name = "rrtstar")]
    RrtStar,
    #[serde(rename = "neural")]
    #[value(name = "neural")]
    NeuralRrtStar,
    #[serde(rename = "neural-informed")]
    #[value(name = "neural-informed")]
    NeuralInformed,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 3] = [PlannerKind::RrtStar, PlannerKind::NeuralRrtStar, PlannerKind::NeuralInformed];

    pub fn id(&self) -> &'static str {
        match self {
            PlannerKind::RrtStar => "rrtstar",
            PlannerKind::NeuralRrtStar => "neural",
            PlannerKind::NeuralInformed => "neural-informed",
        }
    }

    pub fn needs_prior(&self) -> bool {
        !matches!(self, PlannerKind::RrtStar)
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlannerKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::invalid(format!("unknown planner `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub iterations: usize,
    /// Steering step, cells.
    pub step: f64,
    pub rewire_radius: f64,
    pub alpha: f64,
    /// A node this close to the goal may connect to it directly.
    pub goal_tolerance: f64,
    pub seed: u64,
    pub max_rejections: usize,
    /// Record every iteration's sample and best cost in the outcome.
    pub record_trace: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            iterations: 1000,
            step: 10.0,
            rewire_radius: 10.0,
            alpha: 0.5,
            goal_tolerance: 10.0,
            seed: 0,
            max_rejections: 100,
            record_trace: false,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be at least 1"));
        }
        positive(self.step, "step")?;
        positive(self.rewire_radius, "rewire_radius")?;
        positive(self.goal_tolerance, "goal_tolerance")?;
        self.sampler().validate()
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig { alpha: self.alpha, max_rejections: self.max_rejections }
    }
}

/// Search tree rooted at node 0. `parent[0] == 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "TreeData", into = "TreeData")]
pub struct Tree {
    nodes: Vec<Point2>,
    parent: Vec<usize>,
    cost: Vec<f64>,
    children: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct TreeData {
    nodes: Vec<Point2>,
    parent: Vec<usize>,
    cost: Vec<f64>,
}

impl From<TreeData> for Tree {
    fn from(d: TreeData) -> Self {
        let mut children = vec![Vec::new(); d.nodes.len()];
        for (i, &p) in d.parent.iter().enumerate() {
            if i != p && p < children.len() {
                children[p].push(i);
            }
        }
        Tree { nodes: d.nodes, parent: d.parent, cost: d.cost, children }
    }
}

impl From<Tree> for TreeData {
    fn from(t: Tree) -> Self {
        TreeData { nodes: t.nodes, parent: t.parent, cost: t.cost }
    }
}

impl PartialEq for Tree {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.parent == other.parent && self.cost == other.cost
    }
}

impl Tree {
    pub fn new(root: Point2) -> Self {
        Tree { nodes: vec![root], parent: vec![0], cost: vec![0.0], children: vec![Vec::new()] }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point2] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Point2 {
        self.nodes[i]
    }

    pub fn parents(&self) -> &[usize] {
        &self.parent
    }

    pub fn costs(&self) -> &[f64] {
        &self.cost
    }

    pub fn cost(&self, i: usize) -> f64 {
        self.cost[i]
    }

    /// `(child, parent)` pairs for every non-root node.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parent.iter().enumerate().skip(1).map(|(i, &p)| (i, p))
    }

    pub fn add(&mut self, p: Point2, parent: usize) -> usize {
        let i = self.nodes.len();
        self.nodes.push(p);
        self.parent.push(parent);
        self.cost.push(self.cost[parent] + self.nodes[parent].dist(p));
        self.children.push(Vec::new());
        self.children[parent].push(i);
        i
    }

    /// Moves `child` under `new_parent` and refreshes the costs of its whole
    /// subtree.
    pub fn reparent(&mut self, child: usize, new_parent: usize) {
        let old = self.parent[child];
        self.children[old].retain(|&c| c != child);
        self.children[new_parent].push(child);
        self.parent[child] = new_parent;
        let mut stack = vec![child];
        while let Some(n) = stack.pop() {
            let p = self.parent[n];
            self.cost[n] = self.cost[p] + self.nodes[p].dist(self.nodes[n]);
            stack.extend_from_slice(&self.children[n]);
        }
    }

    /// Index of the node closest to `q`; ties go to the lowest index.
    pub fn nearest(&self, q: Point2) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, n) in self.nodes.iter().enumerate() {
            let d = n.dist_sq(q);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// Indices of all nodes within `radius` of `q`, ascending.
    pub fn near(&self, q: Point2, radius: f64) -> Vec<usize> {
        let r2 = radius * radius;
        (0..self.nodes.len()).filter(|&i| self.nodes[i].dist_sq(q) <= r2).collect()
    }

    /// Node sequence from the root to `i`.
    pub fn path_to(&self, i: usize) -> Vec<Point2> {
        let mut out = vec![self.nodes[i]];
        let mut cur = i;
        while cur != 0 {
            cur = self.parent[cur];
            out.push(self.nodes[cur]);
        }
        out.reverse();
        out
    }

    /// Single root, acyclic parent links and cost-to-come consistent to `tol`.
    pub fn check_structure(&self, tol: f64) -> std::result::Result<(), String> {
        let n = self.nodes.len();
        if n == 0 || self.parent.len() != n || self.cost.len() != n {
            return Err("tree arrays are empty or of unequal length".into());
        }
        if self.parent[0] != 0 || self.cost[0] != 0.0 {
            return Err("root must be its own parent with zero cost".into());
        }
        // 0 = unknown, 1 = on the current walk, 2 = reaches the root.
        let mut state = vec![0u8; n];
        state[0] = 2;
        let mut walk = Vec::new();
        for start in 1..n {
            let mut cur = start;
            while state[cur] == 0 {
                state[cur] = 1;
                walk.push(cur);
                let p = self.parent[cur];
                if p >= n {
                    return Err(format!("node {cur} has out-of-range parent {p}"));
                }
                if p == cur {
                    return Err(format!("node {cur} is a second root"));
                }
                cur = p;
            }
            if state[cur] == 1 {
                return Err(format!("cycle through node {cur}"));
            }
            for &w in &walk {
                state[w] = 2;
            }
            walk.clear();
        }
        for i in 1..n {
            let p = self.parent[i];
            let expected = self.cost[p] + self.nodes[p].dist(self.nodes[i]);
            if (self.cost[i] - expected).abs() > tol {
                return Err(format!("node {i}: cost {} but parent gives {expected}", self.cost[i]));
            }
        }
        Ok(())
    }

    pub fn check_edges(&self, grid: &OccupancyGrid) -> std::result::Result<(), String> {
        for (i, p) in self.edges() {
            if !grid.segment_collision_free(self.nodes[p], self.nodes[i]) {
                return Err(format!("edge {p} -> {i} collides"));
            }
        }
        Ok(())
    }
}

/// Uniform bucket grid over the tree's nodes. Answers the same queries as
/// [`Tree::nearest`] and [`Tree::near`] with identical tie-breaking.
#[derive(Debug, Clone)]
pub struct SpatialHash {
    bucket: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<u32>>,
}

impl SpatialHash {
    pub fn new(width: f64, height: f64, bucket: f64) -> Self {
        let cols = ((width / bucket).ceil() as usize).max(1);
        let rows = ((height / bucket).ceil() as usize).max(1);
        SpatialHash { bucket, cols, rows, buckets: vec![Vec::new(); cols * rows] }
    }

    fn key(&self, p: Point2) -> (usize, usize) {
        let clamp = |v: f64, n: usize| ((v / self.bucket).floor().max(0.0) as usize).min(n - 1);
        (clamp(p.x, self.cols), clamp(p.y, self.rows))
    }

    pub fn insert(&mut self, index: usize, p: Point2) {
        let (c, r) = self.key(p);
        self.buckets[r * self.cols + c].push(index as u32);
    }

    pub fn near(&self, nodes: &[Point2], q: Point2, radius: f64) -> Vec<usize> {
        let r2 = radius * radius;
        let (c0, r0) = self.key(Point2::new(q.x - radius, q.y - radius));
        let (c1, r1) = self.key(Point2::new(q.x + radius, q.y + radius));
        let mut out = Vec::new();
        for r in r0..=r1 {
            for c in c0..=c1 {
                out.extend(
                    self.buckets[r * self.cols + c].iter().map(|&i| i as usize).filter(|&i| nodes[i].dist_sq(q) <= r2),
                );
            }
        }
        out.sort_unstable();
        out
    }

    pub fn nearest(&self, nodes: &[Point2], q: Point2) -> usize {
        let (qc, qr) = self.key(q);
        let mut best = (f64::INFINITY, usize::MAX);
        let max_ring = self.cols.max(self.rows);
        for ring in 0..=max_ring {
            // Nodes in ring k or beyond are at least (k - 1) buckets from q.
            let bound = ring.saturating_sub(1) as f64 * self.bucket;
            if best.1 != usize::MAX && best.0 < bound * bound {
                break;
            }
            let (lo_c, hi_c) = (qc as i64 - ring as i64, qc as i64 + ring as i64);
            let (lo_r, hi_r) = (qr as i64 - ring as i64, qr as i64 + ring as i64);
            for r in lo_r..=hi_r {
                if r < 0 || r >= self.rows as i64 {
                    continue;
                }
                let on_edge_row = r == lo_r || r == hi_r;
                let mut c = lo_c;
                while c <= hi_c {
                    if c >= 0 && c < self.cols as i64 {
                        for &i in &self.buckets[r as usize * self.cols + c as usize] {
                            let i = i as usize;
                            let d = nodes[i].dist_sq(q);
                            if d < best.0 || (d == best.0 && i < best.1) {
                                best = (d, i);
                            }
                        }
                    }
                    // Interior rows only contribute their two edge columns.
                    c = if on_edge_row || c == hi_c { c + 1 } else { hi_c };
                }
            }
        }
        best.1
    }
}

/// Moves from `from` toward `to` by at most `step`.
pub fn steer(from: Point2, to: Point2, step: f64) -> Point2 {
    let d = from.dist(to);
    if d <= step {
        return to;
    }
    let k = step / d;
    Point2::new(from.x + (to.x - from.x) * k, from.y + (to.y - from.y) * k)
}

/// Choose-parent and rewire around `x_new`, with `neighbors` the ascending
/// indices of nodes within the rewire radius. The parent minimizes
/// cost-to-come through a collision-free edge (lowest index on ties), falling
/// back to `fallback` when no neighbor works. Neighbors whose cost drops by
/// more than [`REWIRE_EPS`] through `x_new` are re-parented onto it.
fn extend_with_neighbors(
    tree: &mut Tree,
    x_new: Point2,
    neighbors: &[usize],
    fallback: Option<usize>,
    grid: &OccupancyGrid,
) -> Option<usize> {
    let mut candidates: Vec<(f64, usize)> =
        neighbors.iter().map(|&n| (tree.cost[n] + tree.nodes[n].dist(x_new), n)).collect();
    if let Some(f) = fallback.filter(|f| !neighbors.contains(f)) {
        candidates.push((tree.cost[f] + tree.nodes[f].dist(x_new), f));
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let parent =
        candidates.iter().find(|(_, n)| grid.segment_collision_free(tree.nodes[*n], x_new)).map(|&(_, n)| n)?;
    let new = tree.add(x_new, parent);

    for &n in neighbors {
        if n == parent {
            continue;
        }
        let via = tree.cost[new] + x_new.dist(tree.nodes[n]);
        if via < tree.cost[n] - REWIRE_EPS && grid.segment_collision_free(x_new, tree.nodes[n]) {
            tree.reparent(n, new);
        }
    }
    Some(new)
}

/// Inserts `x_new` with choose-parent among nodes within `rewire_radius`,
/// then rewires those nodes through it. `fallback` (normally the node
/// `x_new` was steered from) is tried as a parent when no neighbor has a
/// collision-free edge. Returns the new node's index, or `None` when no
/// parent could be connected.
pub fn extend_and_rewire(
    tree: &mut Tree,
    x_new: Point2,
    grid: &OccupancyGrid,
    rewire_radius: f64,
    fallback: Option<usize>,
) -> Option<usize> {
    if !grid.is_free(x_new) {
        return None;
    }
    let neighbors = tree.near(x_new, rewire_radius);
    extend_with_neighbors(tree, x_new, &neighbors, fallback, grid)
}

/// One iteration of a recorded run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// `None` when the informed sampler found no admissible point.
    pub sample: Option<Point2>,
    /// Whether the sample was drawn from the informed ellipse.
    pub informed: bool,
    #[serde(with = "finite_or_null")]
    pub c_best_before: f64,
    #[serde(with = "finite_or_null")]
    pub c_best_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanOutcome {
    pub planner: PlannerKind,
    pub success: bool,
    /// Start to goal; empty on failure.
    pub path: Vec<Point2>,
    /// Best solution cost, `+inf` (`null` in JSON) on failure.
    #[serde(with = "finite_or_null")]
    pub cost: f64,
    pub iterations_used: usize,
    pub first_solution_iteration: Option<usize>,
    /// Seconds spent inside the planner.
    pub wall_time: f64,
    pub tree: Tree,
    pub sample_trace: Option<Vec<TraceEntry>>,
}

impl PlanOutcome {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("outcome serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(Error::from_json)
    }

    /// Copy with `wall_time` zeroed, for run-to-run comparisons.
    pub fn without_time(&self) -> Self {
        PlanOutcome { wall_time: 0.0, ..self.clone() }
    }
}

mod finite_or_null {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// What a single iteration did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepResult {
    /// A node was added at this index.
    Added(usize),
    /// The sample, steering or collision check produced nothing to add.
    Skipped,
}

/// Step-by-step planner state. [`plan`] drives it to completion; tests and
/// tools can also advance it manually and inspect the tree in between.
pub struct Planner<'a> {
    problem: &'a PlanningProblem,
    kind: PlannerKind,
    config: PlannerConfig,
    sampler: Sampler<'a>,
    rng: PlanRng,
    tree: Tree,
    index: SpatialHash,
    goal_nodes: Vec<usize>,
    best: Option<(usize, f64)>,
    iteration: usize,
    first_solution: Option<usize>,
    trace: Option<Vec<TraceEntry>>,
}

impl<'a> Planner<'a> {
    pub fn new(
        kind: PlannerKind,
        problem: &'a PlanningProblem,
        config: PlannerConfig,
        prior: Option<&'a ProbabilityMap>,
    ) -> Result<Self> {
        config.validate()?;
        let sampler = match kind {
            PlannerKind::RrtStar => Sampler::uniform_only(&problem.grid)?,
            _ => {
                let prior = prior.ok_or_else(|| Error::invalid(format!("planner `{kind}` needs a prior")))?;
                Sampler::new(&problem.grid, Some(prior), config.sampler())?
            }
        };
        let grid = &problem.grid;
        let mut index = SpatialHash::new(grid.width() as f64, grid.height() as f64, config.rewire_radius.max(1.0));
        index.insert(0, problem.start);
        let mut planner = Planner {
            problem,
            kind,
            config,
            sampler,
            rng: seed::rng(config.seed),
            tree: Tree::new(problem.start),
            index,
            goal_nodes: Vec::new(),
            best: None,
            iteration: 0,
            first_solution: None,
            trace: config.record_trace.then(Vec::new),
        };
        planner.consider_goal(0);
        planner.refresh_best();
        Ok(planner)
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn is_done(&self) -> bool {
        self.iteration >= self.config.iterations
    }

    /// Current best solution cost, `+inf` before the first solution.
    pub fn c_best(&self) -> f64 {
        self.best.map_or(f64::INFINITY, |(_, c)| c)
    }

    fn consider_goal(&mut self, i: usize) {
        let p = self.tree.nodes[i];
        if p.dist(self.problem.goal) <= self.config.goal_tolerance
            && self.problem.grid.segment_collision_free(p, self.problem.goal)
        {
            self.goal_nodes.push(i);
        }
    }

    fn refresh_best(&mut self) {
        let goal = self.problem.goal;
        let mut best: Option<(usize, f64)> = None;
        for &i in &self.goal_nodes {
            let c = self.tree.cost[i] + self.tree.nodes[i].dist(goal);
            if best.is_none_or(|(bi, bc)| c < bc || (c == bc && i < bi)) {
                best = Some((i, c));
            }
        }
        if best.is_some() && self.first_solution.is_none() {
            self.first_solution = Some(self.iteration);
        }
        self.best = best;
    }

    fn draw(&mut self) -> (Option<Point2>, bool) {
        match (self.kind, self.best) {
            (PlannerKind::RrtStar, _) => (Some(self.sampler.sample_uniform(&mut self.rng)), false),
            (PlannerKind::NeuralInformed, Some((_, c_best))) => {
                let ellipse = InformedEllipse::new(self.problem.start, self.problem.goal, c_best)
                    .expect("solution cost is at least the straight-line distance");
                (self.sampler.sample_informed(&ellipse, &mut self.rng).ok(), true)
            }
            _ => (Some(self.sampler.sample_mixture(&mut self.rng)), false),
        }
    }

    /// Runs one sample / nearest / steer / check / extend iteration.
    pub fn step(&mut self) -> StepResult {
        let before = self.c_best();
        let (sample, informed) = self.draw();
        let result = match sample {
            Some(x_rand) => self.grow(x_rand),
            None => StepResult::Skipped,
        };
        self.iteration += 1;
        if let StepResult::Added(_) = result {
            self.refresh_best();
        }
        let after = self.c_best();
        if let Some(trace) = &mut self.trace {
            trace.push(TraceEntry { sample, informed, c_best_before: before, c_best_after: after });
        }
        result
    }

    fn grow(&mut self, x_rand: Point2) -> StepResult {
        let grid = &self.problem.grid;
        let nearest = self.index.nearest(&self.tree.nodes, x_rand);
        let from = self.tree.nodes[nearest];
        let x_new = steer(from, x_rand, self.config.step);
        if from.dist_sq(x_new) < 1e-18 || !grid.is_free(x_new) || !grid.segment_collision_free(from, x_new) {
            return StepResult::Skipped;
        }
        let neighbors = self.index.near(&self.tree.nodes, x_new, self.config.rewire_radius);
        match extend_with_neighbors(&mut self.tree, x_new, &neighbors, Some(nearest), grid) {
            Some(i) => {
                self.index.insert(i, x_new);
                self.consider_goal(i);
                StepResult::Added(i)
            }
            None => StepResult::Skipped,
        }
    }

    pub fn run(&mut self) {
        while !self.is_done() {
            self.step();
        }
    }

    pub fn into_outcome(self, wall_time: f64) -> PlanOutcome {
        let (success, path, cost) = match self.best {
            Some((i, c)) => {
                let mut path = self.tree.path_to(i);
                if path.last().is_some_and(|p| p.dist(self.problem.goal) > 0.0) {
                    path.push(self.problem.goal);
                }
                (true, path, c)
            }
            None => (false, Vec::new(), f64::INFINITY),
        };
        PlanOutcome {
            planner: self.kind,
            success,
            path,
            cost,
            iterations_used: self.iteration,
            first_solution_iteration: self.first_solution,
            wall_time,
            tree: self.tree,
            sample_trace: self.trace,
        }
    }
}

/// Runs `kind` for `config.iterations` iterations. Neural planners require
/// a prior paired with the problem's grid.
pub fn plan(
    kind: PlannerKind,
    problem: &PlanningProblem,
    config: &PlannerConfig,
    prior: Option<&ProbabilityMap>,
) -> Result<PlanOutcome> {
    let clock = Instant::now();
    let mut planner = Planner::new(kind, problem, *config, prior)?;
    planner.run();
    let elapsed = clock.elapsed().as_secs_f64();
    Ok(planner.into_outcome(elapsed))
}

pub fn plan_rrt_star(problem: &PlanningProblem, config: &PlannerConfig) -> Result<PlanOutcome> {
    plan(PlannerKind::RrtStar, problem, config, None)
}

pub fn plan_neural_rrt_star(
    problem: &PlanningProblem,
    config: &PlannerConfig,
    prior: &ProbabilityMap,
) -> Result<PlanOutcome> {
    plan(PlannerKind::NeuralRrtStar, problem, config, Some(prior))
}

pub fn plan_neural_informed(
    problem: &PlanningProblem,
    config: &PlannerConfig,
    prior: &ProbabilityMap,
) -> Result<PlanOutcome> {
    plan(PlannerKind::NeuralInformed, problem, config, Some(prior))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{generate_map, sample_problem, Cell, CellIdx, Density};
    use crate::metrics;
    use crate::prior::oracle_prior;
    use proptest::prelude::*;
    use rand::Rng;

    fn empty_problem() -> PlanningProblem {
        PlanningProblem::new(
            OccupancyGrid::empty(224, 224).unwrap(),
            Point2::new(20.0, 20.0),
            Point2::new(200.0, 200.0),
        )
        .unwrap()
    }

    #[test]
    fn nearest_examples() {
        let mut t = Tree::new(Point2::new(0.0, 0.0));
        t.add(Point2::new(10.0, 10.0), 0);
        assert_eq!(t.nearest(Point2::new(1.0, 1.0)), 0);
        assert_eq!(t.nearest(Point2::new(10.0, 10.0)), 1);
        // Equidistant: lowest index.
        assert_eq!(t.nearest(Point2::new(5.0, 5.0)), 0);
    }

    #[test]
    fn spatial_hash_matches_linear_scan() {
        let mut rng = seed::rng(42);
        let mut t = Tree::new(Point2::new(50.0, 50.0));
        let mut h = SpatialHash::new(224.0, 224.0, 10.0);
        h.insert(0, t.node(0));
        for _ in 0..500 {
            // Snap to a coarse lattice so distance ties actually occur.
            let p = Point2::new(rng.gen_range(0..224) as f64, rng.gen_range(0..224) as f64);
            let i = t.add(p, 0);
            h.insert(i, p);
        }
        for _ in 0..100 {
            let q = Point2::new(rng.gen_range(-5.0..230.0), rng.gen_range(-5.0..230.0));
            assert_eq!(h.nearest(t.nodes(), q), t.nearest(q));
            assert_eq!(h.near(t.nodes(), q, 10.0), t.near(q, 10.0));
            let q = Point2::new(rng.gen_range(0..224) as f64, rng.gen_range(0..224) as f64);
            assert_eq!(h.nearest(t.nodes(), q), t.nearest(q));
        }
    }

    #[test]
    fn steer_examples() {
        let o = Point2::new(0.0, 0.0);
        assert_eq!(steer(o, Point2::new(3.0, 4.0), 10.0), Point2::new(3.0, 4.0));
        assert_eq!(steer(o, Point2::new(30.0, 40.0), 10.0), Point2::new(6.0, 8.0));
        assert_eq!(steer(o, o, 10.0), o);
    }

    #[test]
    fn choose_parent_prefers_cheaper_route() {
        let g = OccupancyGrid::empty(32, 32).unwrap();
        let mut t = Tree::new(Point2::new(0.5, 0.5));
        let b = t.add(Point2::new(10.5, 0.5), 0);
        assert_eq!(t.cost(b), 10.0);
        let x_new = Point2::new(5.5, 4.5);
        let i = extend_and_rewire(&mut t, x_new, &g, 10.0, Some(b)).unwrap();
        assert_eq!(t.parents()[i], 0);
        // sqrt(25 + 16) = 6.40 via the root, 16.40 via B.
        assert!((t.cost(i) - 41f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rewire_lowers_neighbor_cost() {
        let g = OccupancyGrid::empty(64, 64).unwrap();
        let mut t = Tree::new(Point2::new(1.0, 1.0));
        let a = t.add(Point2::new(1.0, 9.0), 0);
        let b = t.add(Point2::new(9.0, 9.0), a);
        let c = t.add(Point2::new(15.0, 9.0), b);
        let before = t.costs().to_vec();
        let n = extend_and_rewire(&mut t, Point2::new(7.0, 3.0), &g, 10.0, Some(0)).unwrap();
        assert_eq!(t.parents()[n], 0);
        assert_eq!(t.parents()[b], n);
        // Subtree cost followed the move.
        assert!(t.cost(c) < before[c]);
        t.check_structure(1e-9).unwrap();
        for (i, &old) in before.iter().enumerate() {
            assert!(t.cost(i) <= old);
        }
    }

    #[test]
    fn blocked_extension_returns_none() {
        let mut g = OccupancyGrid::empty(32, 32).unwrap();
        for r in 0..32 {
            g.set(CellIdx::new(10, r), Cell::Occupied);
        }
        let mut t = Tree::new(Point2::new(5.5, 5.5));
        assert_eq!(extend_and_rewire(&mut t, Point2::new(14.5, 5.5), &g, 10.0, Some(0)), None);
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn rrt_star_on_empty_map_is_deterministic_and_consistent() {
        let problem = empty_problem();
        let cfg = PlannerConfig { seed: 3, ..Default::default() };
        let a = plan_rrt_star(&problem, &cfg).unwrap();
        let b = plan_rrt_star(&problem, &cfg).unwrap();
        assert_eq!(a.without_time(), b.without_time());
        assert!(a.success);
        assert_eq!(a.path[0], problem.start);
        assert_eq!(*a.path.last().unwrap(), problem.goal);
        assert!((metrics::path_length(&a.path).unwrap() - a.cost).abs() < 1e-6);
        for w in a.path.windows(2) {
            assert!(problem.grid.segment_collision_free(w[0], w[1]));
        }
        a.tree.check_structure(1e-9).unwrap();
        a.tree.check_edges(&problem.grid).unwrap();
    }

    #[test]
    fn walled_map_fails() {
        let mut g = OccupancyGrid::empty(64, 64).unwrap();
        for r in 0..64 {
            g.set(CellIdx::new(32, r), Cell::Occupied);
        }
        let problem = PlanningProblem::new(g, Point2::new(5.5, 5.5), Point2::new(60.5, 60.5)).unwrap();
        let out = plan_rrt_star(&problem, &PlannerConfig { iterations: 300, ..Default::default() }).unwrap();
        assert!(!out.success);
        assert!(out.path.is_empty() && out.cost.is_infinite());
    }

    #[test]
    fn neural_with_alpha_zero_equals_rrt_star() {
        let g = generate_map(2, Density::Medium, 224, 224).unwrap();
        let problem = sample_problem(&g, 2, 100.0).unwrap();
        let prior = oracle_prior(&problem).unwrap();
        let cfg = PlannerConfig { alpha: 0.0, seed: 17, ..Default::default() };
        let plain = plan_rrt_star(&problem, &cfg).unwrap();
        let neural = plan_neural_rrt_star(&problem, &cfg, &prior).unwrap();
        assert_eq!(plain.tree, neural.tree);
        assert_eq!(plain.path, neural.path);
        assert_eq!(plain.cost, neural.cost);
    }

    #[test]
    fn misleading_prior_still_succeeds() {
        let problem = empty_problem();
        let mut w = vec![0.0; problem.grid.len()];
        w[problem.grid.index(CellIdx::new(5, 210))] = 1.0;
        let prior = ProbabilityMap::normalize(&w, &problem.grid).unwrap();
        for seed in 0..5 {
            let cfg = PlannerConfig { seed, ..Default::default() };
            assert!(plan_neural_rrt_star(&problem, &cfg, &prior).unwrap().success);
        }
    }

    #[test]
    fn neural_planners_need_a_prior() {
        let problem = empty_problem();
        let cfg = PlannerConfig::default();
        assert!(plan(PlannerKind::NeuralRrtStar, &problem, &cfg, None).is_err());
        assert!(plan(PlannerKind::NeuralInformed, &problem, &cfg, None).is_err());
        assert!(plan(PlannerKind::RrtStar, &problem, &PlannerConfig { step: 0.0, ..cfg }, None).is_err());
    }

    #[test]
    fn informed_trace_stays_in_ellipse() {
        let g = generate_map(6, Density::Dense, 224, 224).unwrap();
        let problem = sample_problem(&g, 6, 100.0).unwrap();
        let prior = oracle_prior(&problem).unwrap();
        let cfg = PlannerConfig { seed: 1, record_trace: true, ..Default::default() };
        let out = plan_neural_informed(&problem, &cfg, &prior).unwrap();
        assert!(out.success);
        let trace = out.sample_trace.as_ref().unwrap();
        assert_eq!(trace.len(), cfg.iterations);
        let mut last = f64::INFINITY;
        for e in trace {
            assert!(e.c_best_after <= last);
            last = e.c_best_after;
            assert_eq!(e.informed, e.c_best_before.is_finite());
            if let (true, Some(p)) = (e.informed, e.sample) {
                let ell = InformedEllipse::new(problem.start, problem.goal, e.c_best_before).unwrap();
                assert!(ell.contains(p));
            }
        }
        assert_eq!(last, out.cost);
    }

    #[test]
    fn outcome_json_round_trip() {
        let problem = empty_problem();
        let cfg = PlannerConfig { seed: 9, iterations: 200, record_trace: true, ..Default::default() };
        let out = plan_rrt_star(&problem, &cfg).unwrap();
        assert_eq!(PlanOutcome::from_json(&out.to_json()).unwrap(), out);

        let mut g = OccupancyGrid::empty(64, 64).unwrap();
        for r in 0..64 {
            g.set(CellIdx::new(32, r), Cell::Occupied);
        }
        let walled = PlanningProblem::new(g, Point2::new(5.5, 5.5), Point2::new(60.5, 60.5)).unwrap();
        let failed = plan_rrt_star(&walled, &PlannerConfig { iterations: 50, ..Default::default() }).unwrap();
        let back = PlanOutcome::from_json(&failed.to_json()).unwrap();
        assert!(back.cost.is_infinite());
        assert_eq!(back, failed);
    }

    #[test]
    fn structure_check_catches_corruption() {
        let mut t = Tree::new(Point2::new(0.0, 0.0));
        let a = t.add(Point2::new(3.0, 4.0), 0);
        let b = t.add(Point2::new(6.0, 8.0), a);
        t.check_structure(1e-9).unwrap();
        let mut bad = t.clone();
        bad.cost[b] += 1.0;
        assert!(bad.check_structure(1e-9).is_err());
        let mut cyc = t.clone();
        cyc.parent[a] = b;
        assert!(cyc.check_structure(1e-9).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn every_iteration_keeps_tree_sound(seed in any::<u64>(), density in 0usize..3) {
            let g = generate_map(seed, Density::ALL[density], 64, 64).unwrap();
            let problem = match sample_problem(&g, seed, 25.0) { Ok(p) => p, Err(_) => return Ok(()) };
            let cfg = PlannerConfig { seed, iterations: 150, step: 6.0, rewire_radius: 8.0, ..Default::default() };
            let mut planner = Planner::new(PlannerKind::RrtStar, &problem, cfg, None).unwrap();
            let mut costs = planner.tree().costs().to_vec();
            while !planner.is_done() {
                planner.step();
                let t = planner.tree();
                prop_assert!(t.check_structure(1e-9).is_ok());
                for (i, old) in costs.iter().enumerate() {
                    prop_assert!(t.cost(i) <= *old);
                }
                costs = t.costs().to_vec();
            }
            prop_assert!(planner.tree().check_edges(&problem.grid).is_ok());
        }
    }
}
