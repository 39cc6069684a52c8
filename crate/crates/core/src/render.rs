//! SVG rendering of a planning scene.
//!
//! The viewBox is in grid units, one unit per cell, with `y` growing
//! downward like row indices. Output depends only on the inputs, so equal
//! scenes give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Cell, OccupancyGrid, Point2};
use crate::planner::Tree;
use crate::prior::{InformedEllipse, ProbabilityMap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Style {
    /// Output pixels per cell.
    pub scale: f64,
    pub tree_width: f64,
    pub path_width: f64,
    pub sample_radius: f64,
    /// Opacity of the heaviest prior cell.
    pub prior_opacity: f64,
}

impl Default for Style {
    fn default() -> Self {
        Style { scale: 3.0, tree_width: 0.15, path_width: 0.8, sample_radius: 0.5, prior_opacity: 0.6 }
    }
}

/// Everything that may be drawn; only `grid` is required.
#[derive(Debug, Clone, Default)]
pub struct SceneSpec<'a> {
    pub grid: Option<&'a OccupancyGrid>,
    pub prior: Option<&'a ProbabilityMap>,
    pub tree: Option<&'a Tree>,
    pub samples: &'a [Point2],
    pub ellipse: Option<InformedEllipse>,
    pub path: &'a [Point2],
    pub start: Option<Point2>,
    pub goal: Option<Point2>,
    pub style: Style,
}

impl<'a> SceneSpec<'a> {
    pub fn new(grid: &'a OccupancyGrid) -> Self {
        SceneSpec { grid: Some(grid), ..Default::default() }
    }
}

/// Compact fixed-precision number: at most four decimals, no trailing zeros.
fn num(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn check_point(p: Point2, w: f64, h: f64, what: &str) -> Result<()> {
    if p.is_finite() && (0.0..=w).contains(&p.x) && (0.0..=h).contains(&p.y) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} point {p} lies outside the {w}x{h} grid")))
    }
}

pub fn render_scene(scene: &SceneSpec<'_>) -> Result<String> {
    let grid = scene.grid.ok_or_else(|| Error::invalid("scene has no grid"))?;
    let (gw, gh) = (grid.width(), grid.height());
    let (w, h) = (gw as f64, gh as f64);
    let style = &scene.style;
    if style.scale.is_nan() || style.scale <= 0.0 {
        return Err(Error::invalid("style scale must be positive"));
    }
    if let Some(p) = scene.prior {
        if (p.width(), p.height()) != (gw, gh) {
            return Err(Error::invalid(format!("prior is {}x{} but the grid is {gw}x{gh}", p.width(), p.height())));
        }
    }
    if let Some(t) = scene.tree {
        for &n in t.nodes() {
            check_point(n, w, h, "tree")?;
        }
    }
    for &p in scene.path {
        check_point(p, w, h, "path")?;
    }
    for &p in scene.samples {
        check_point(p, w, h, "sample")?;
    }
    for p in scene.start.iter().chain(&scene.goal) {
        check_point(*p, w, h, "endpoint")?;
    }

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {gw} {gh}\">",
        num(w * style.scale),
        num(h * style.scale)
    );
    let _ = writeln!(out, "<rect id=\"background\" x=\"0\" y=\"0\" width=\"{gw}\" height=\"{gh}\" fill=\"#ffffff\"/>");

    if let Some(p) = scene.prior {
        let max = p.max_weight();
        out.push_str("<g id=\"prior\" fill=\"#2e7d32\">\n");
        for i in p.support() {
            let opacity = style.prior_opacity * p.weights()[i] / max;
            let _ = writeln!(
                out,
                "<rect x=\"{}\" y=\"{}\" width=\"1\" height=\"1\" fill-opacity=\"{}\"/>",
                i % gw,
                i / gw,
                num(opacity)
            );
        }
        out.push_str("</g>\n");
    }

    // Horizontal runs of occupied cells, one rect per run.
    out.push_str("<g id=\"obstacles\" fill=\"#303030\">\n");
    for row in 0..gh {
        let cells = &grid.cells()[row * gw..(row + 1) * gw];
        let mut col = 0;
        while col < gw {
            if cells[col] == Cell::Occupied {
                let begin = col;
                while col < gw && cells[col] == Cell::Occupied {
                    col += 1;
                }
                let _ = writeln!(out, "<rect x=\"{begin}\" y=\"{row}\" width=\"{}\" height=\"1\"/>", col - begin);
            } else {
                col += 1;
            }
        }
    }
    out.push_str("</g>\n");

    if let Some(t) = scene.tree {
        let _ = writeln!(out, "<g id=\"tree\" stroke=\"#8a8a8a\" stroke-width=\"{}\">", num(style.tree_width));
        for (child, parent) in t.edges() {
            let (a, b) = (t.node(parent), t.node(child));
            let _ = writeln!(
                out,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
                num(a.x),
                num(a.y),
                num(b.x),
                num(b.y)
            );
        }
        out.push_str("</g>\n");
    }

    if !scene.samples.is_empty() {
        out.push_str("<g id=\"samples\" fill=\"#ff8c00\">\n");
        for s in scene.samples {
            let _ =
                writeln!(out, "<circle cx=\"{}\" cy=\"{}\" r=\"{}\"/>", num(s.x), num(s.y), num(style.sample_radius));
        }
        out.push_str("</g>\n");
    }

    if let Some(e) = &scene.ellipse {
        // Exact shortest round-trip formatting so readers recover the fields.
        let c = e.center();
        let _ = writeln!(
            out,
            "<ellipse id=\"informed\" cx=\"{}\" cy=\"{}\" rx=\"{}\" ry=\"{}\" transform=\"rotate({} {} {})\" fill=\"none\" stroke=\"#ff00ff\" stroke-width=\"{}\" stroke-dasharray=\"2 1.5\"/>",
            c.x,
            c.y,
            e.semi_major(),
            e.semi_minor(),
            e.rotation().to_degrees(),
            c.x,
            c.y,
            num(style.tree_width * 3.0)
        );
    }

    if !scene.path.is_empty() {
        let points: Vec<String> = scene.path.iter().map(|p| format!("{},{}", num(p.x), num(p.y))).collect();
        let _ = writeln!(
            out,
            "<polyline id=\"path\" points=\"{}\" fill=\"none\" stroke=\"#1565c0\" stroke-width=\"{}\" stroke-linejoin=\"round\"/>",
            points.join(" "),
            num(style.path_width)
        );
    }

    for (id, p, color) in [("start", scene.start, "#d32f2f"), ("goal", scene.goal, "#2e7d32")] {
        if let Some(p) = p {
            let _ = writeln!(
                out,
                "<circle id=\"{id}\" cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{color}\"/>",
                num(p.x),
                num(p.y),
                num(style.path_width * 1.5)
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn write_scene(scene: &SceneSpec<'_>, path: impl AsRef<Path>) -> Result<()> {
    let svg = render_scene(scene)?;
    std::fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{generate_map, sample_problem, Density};
    use crate::planner::{plan_neural_informed, PlannerConfig};
    use crate::prior::oracle_prior;

    fn scene_inputs() -> (crate::grid::PlanningProblem, ProbabilityMap, crate::planner::PlanOutcome) {
        let g = generate_map(11, Density::Medium, 64, 64).unwrap();
        let problem = sample_problem(&g, 11, 30.0).unwrap();
        let prior = oracle_prior(&problem).unwrap();
        let cfg = PlannerConfig { iterations: 300, seed: 4, record_trace: true, ..Default::default() };
        let out = plan_neural_informed(&problem, &cfg, &prior).unwrap();
        (problem, prior, out)
    }

    fn attr(node: roxmltree::Node<'_, '_>, name: &str) -> f64 {
        node.attribute(name).unwrap().parse().unwrap()
    }

    #[test]
    fn full_scene_is_well_formed_and_deterministic() {
        let (problem, prior, out) = scene_inputs();
        let samples: Vec<Point2> = out.sample_trace.as_ref().unwrap().iter().filter_map(|t| t.sample).collect();
        let ellipse = out.success.then(|| InformedEllipse::new(problem.start, problem.goal, out.cost).unwrap());
        let scene = SceneSpec {
            prior: Some(&prior),
            tree: Some(&out.tree),
            samples: &samples,
            ellipse,
            path: &out.path,
            start: Some(problem.start),
            goal: Some(problem.goal),
            ..SceneSpec::new(&problem.grid)
        };
        let a = render_scene(&scene).unwrap();
        assert_eq!(a, render_scene(&scene).unwrap());

        let doc = roxmltree::Document::parse(&a).unwrap();
        let root = doc.root_element();
        assert_eq!(root.attribute("viewBox"), Some("0 0 64 64"));
        let lines = doc.descendants().filter(|n| n.has_tag_name("line")).count();
        assert_eq!(lines, out.tree.len() - 1);
        if out.success {
            let poly = doc.descendants().find(|n| n.attribute("id") == Some("path")).unwrap();
            for pair in poly.attribute("points").unwrap().split(' ') {
                let (x, y) = pair.split_once(',').unwrap();
                let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
                assert!((0.0..=64.0).contains(&x) && (0.0..=64.0).contains(&y));
            }
            let e = ellipse.unwrap();
            let node = doc.descendants().find(|n| n.has_tag_name("ellipse")).unwrap();
            assert_eq!(attr(node, "cx"), e.center().x);
            assert_eq!(attr(node, "cy"), e.center().y);
            assert_eq!(attr(node, "rx"), e.semi_major());
            assert_eq!(attr(node, "ry"), e.semi_minor());
            assert_eq!(node.attribute("stroke"), Some("#ff00ff"));
            assert!(node.attribute("stroke-dasharray").is_some());
        }
    }

    #[test]
    fn mismatched_prior_is_rejected() {
        let (problem, _, _) = scene_inputs();
        let other = OccupancyGrid::empty(32, 32).unwrap();
        let small = crate::prior::ProbabilityMap::normalize(&vec![1.0; 32 * 32], &other).unwrap();
        let scene = SceneSpec { prior: Some(&small), ..SceneSpec::new(&problem.grid) };
        assert!(matches!(render_scene(&scene), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn out_of_bounds_path_is_rejected() {
        let g = OccupancyGrid::empty(10, 10).unwrap();
        let path = [Point2::new(1.0, 1.0), Point2::new(11.0, 1.0)];
        let scene = SceneSpec { path: &path, ..SceneSpec::new(&g) };
        assert!(render_scene(&scene).is_err());
        assert!(render_scene(&SceneSpec::default()).is_err());
    }

    #[test]
    fn obstacle_runs_cover_occupied_cells() {
        let mut g = OccupancyGrid::empty(6, 2).unwrap();
        for c in 1..4 {
            g.set(crate::grid::CellIdx::new(c, 0), Cell::Occupied);
        }
        g.set(crate::grid::CellIdx::new(5, 1), Cell::Occupied);
        let svg = render_scene(&SceneSpec::new(&g)).unwrap();
        assert!(svg.contains("<rect x=\"1\" y=\"0\" width=\"3\" height=\"1\"/>"));
        assert!(svg.contains("<rect x=\"5\" y=\"1\" width=\"1\" height=\"1\"/>"));
    }

    #[test]
    fn number_formatting() {
        assert_eq!(num(1.0), "1");
        assert_eq!(num(0.25), "0.25");
        assert_eq!(num(-0.00001), "0");
        assert_eq!(num(2.123456), "2.1235");
    }
}
