//! SVG rendering of attractor grids, orbit sets and the Hutchinson measure.

use std::fmt::Write as _;

use selfsim::attractor::{hutchinson_on_grid, AttractorGrid};
use selfsim::ifs::MultiIndex;
use selfsim::report::sci;
use selfsim::{Point, SelfSimilarSystem};

const SIZE: f64 = 600.0;
const MARGIN: f64 = 30.0;
const LEVEL_COLORS: [&str; 6] = ["#d62728", "#ff7f0e", "#2ca02c", "#1f77b4", "#9467bd", "#8c564b"];

/// Maps attractor coordinates into the drawing square, y pointing up.
struct Frame {
    lo: [f64; 2],
    scale: f64,
}

impl Frame {
    fn fit(coords: &[Vec<f64>]) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for c in coords {
            for k in 0..2 {
                let v = c.get(k).copied().unwrap_or(0.0);
                lo[k] = lo[k].min(v);
                hi[k] = hi[k].max(v);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
        Frame { lo, scale: (SIZE - 2.0 * MARGIN) / span }
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.lo[0]) * self.scale
    }

    fn y(&self, v: f64) -> f64 {
        SIZE - MARGIN - (v - self.lo[1]) * self.scale
    }
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n\
         <title>{title}</title>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn dot(out: &mut String, class: &str, x: f64, y: f64, r: f64, fill: &str) {
    writeln!(out, "<circle class=\"{class}\" cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{r}\" fill=\"{fill}\"/>").unwrap();
}

/// Histogram of the Hutchinson weights of a one-dimensional grid.
fn histogram(out: &mut String, system: &SelfSimilarSystem, grid: &AttractorGrid, frame: &Frame, bins: usize) {
    let mu = hutchinson_on_grid(system, grid);
    let w = mu.weights_f64();
    let xs: Vec<f64> = mu.support.iter().map(|p| p.to_f64()[0]).collect();
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let width = ((hi - lo) / bins as f64).max(1e-12);
    let mut mass = vec![0.0; bins];
    for (x, w) in xs.iter().zip(&w) {
        mass[(((x - lo) / width) as usize).min(bins - 1)] += w;
    }
    let top = mass.iter().cloned().fold(0.0, f64::max).max(1e-12);
    let base = SIZE - MARGIN;
    for (k, m) in mass.iter().enumerate() {
        let h = m / top * (SIZE - 3.0 * MARGIN);
        writeln!(
            out,
            "<rect class=\"bin\" x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{h:.3}\" fill=\"#aec7e8\"/>",
            frame.x(lo + k as f64 * width),
            base - h,
            width * frame.scale
        )
        .unwrap();
    }
}

/// Grid points (2-D) or a measure histogram (1-D), with optional highlighted orbit points.
pub fn svg(system: &SelfSimilarSystem, grid: &AttractorGrid, highlight: Option<(usize, &[Point])>) -> String {
    let frame = Frame::fit(grid.coords());
    let mut out = header(&format!("{} at depth {}", system.name(), grid.depth()));
    if system.dimension() == 1 {
        histogram(&mut out, system, grid, &frame, 64);
        for c in grid.coords() {
            dot(&mut out, "grid-point", frame.x(c[0]), SIZE - MARGIN + 8.0, 1.0, "#555555");
        }
    } else {
        for c in grid.coords() {
            dot(&mut out, "grid-point", frame.x(c[0]), frame.y(c[1]), 1.0, "#555555");
        }
    }
    if let Some((level, points)) = highlight {
        let color = LEVEL_COLORS[level % LEVEL_COLORS.len()];
        for p in points {
            let c = p.to_f64();
            let y = if c.len() > 1 { frame.y(c[1]) } else { SIZE - MARGIN + 8.0 };
            dot(&mut out, &format!("orbit-point level-{level}"), frame.x(c[0]), y, 5.0, color);
        }
    }
    out.push_str("</svg>\n");
    out
}

/// `word,point,weight` rows for every word of the grid; weights are the uniform Hutchinson weights.
pub fn csv(system: &SelfSimilarSystem, grid: &AttractorGrid) -> anyhow::Result<String> {
    let n = system.n_branches();
    let weight = sci((n as f64).powi(-(grid.depth() as i32)));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["word", "point", "weight"])?;
    for (flat, &idx) in grid.word_points().iter().enumerate() {
        let word = MultiIndex::from_flat(flat, grid.depth(), n);
        w.write_record([word.to_string(), grid.points()[idx as usize].to_string(), weight.clone()])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}
