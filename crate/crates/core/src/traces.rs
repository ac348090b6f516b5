//! Discrete traces at branch points, the Hutchinson trace, trace-kernel ideal membership and
//! kernel-separating witnesses.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::attractor::{hutchinson_on_grid, AttractorGrid};
use crate::core_rep::{GradedCoreElement, OpExpr};
use crate::error::{Error, Result};
use crate::field::{EvalSet, ImageTree, Node, ScalarFn};
use crate::ideals::{IdealDescriptor, Tag};
use crate::ifs::SelfSimilarSystem;
use crate::random::{squared_distance, Generator};
use crate::scalar::Point;
use crate::singularity::{orbit_points, Singularity};

#[derive(Clone, Debug, PartialEq)]
pub enum TraceSpec {
    /// `tau^(b,n)`.
    Discrete { base: Point, level: usize },
    /// The depth-`depth` approximation of `tau^infinity`.
    Hutchinson { depth: usize },
}

impl TraceSpec {
    /// `discrete:<point>,<n>` or `hutchinson:<m>`; the point may be a named point of the system.
    pub fn parse(s: &str, system: &SelfSimilarSystem) -> Result<Self> {
        let (kind, rest) = s.split_once(':').ok_or_else(|| Error::Parse(format!("trace kind `{s}` lacks `:`")))?;
        match kind.trim() {
            "discrete" => {
                let (p, n) = rest.rsplit_once(',').ok_or_else(|| Error::Parse(format!("expected `point,level` in `{rest}`")))?;
                let level = n.trim().parse().map_err(|_| Error::Parse(format!("bad level `{n}`")))?;
                let p = p.trim();
                let base = match system.named_point(p) {
                    Some(q) => q.clone(),
                    None => Point::parse(p)?,
                };
                Ok(TraceSpec::Discrete { base, level })
            }
            "hutchinson" => {
                let depth = rest.trim().parse().map_err(|_| Error::Parse(format!("bad depth `{rest}`")))?;
                Ok(TraceSpec::Hutchinson { depth })
            }
            other => Err(Error::Parse(format!("unknown trace kind `{other}`"))),
        }
    }
}

/// `(1/N^n) Tr(pi_n(T_{<=n})(b))`; components above level `n` contribute nothing.
pub fn discrete_trace(system: &SelfSimilarSystem, sing: &Singularity, base: &Point, n: usize, t: &GradedCoreElement) -> Result<Complex64> {
    if !sing.is_branch_point(base) {
        return Err(Error::NotBranchPoint(base.to_string()));
    }
    Ok(discrete_trace_at(system, base, n, t))
}

fn discrete_trace_at(system: &SelfSimilarSystem, base: &Point, n: usize, t: &GradedCoreElement) -> Complex64 {
    let cut = t.truncated(n.min(t.level())).padded(n);
    let tree = ImageTree::build(system, base, cut.tree_depth());
    let m = cut.pi_at(&tree, Node::ROOT);
    m.trace() / system.n_branches().pow(n as u32) as f64
}

struct LevelGrid {
    set: EvalSet,
    weights: Vec<f64>,
}

/// `tau^infinity` at total depth `M`: a level-`l` element is integrated against the
/// depth-`(M - l)` Hutchinson measure.
pub struct HutchinsonTrace<'a> {
    system: &'a SelfSimilarSystem,
    depth: usize,
    grids: Vec<OnceLock<LevelGrid>>,
}

impl<'a> HutchinsonTrace<'a> {
    pub fn new(system: &'a SelfSimilarSystem, depth: usize) -> Self {
        HutchinsonTrace { system, depth, grids: (0..=depth).map(|_| OnceLock::new()).collect() }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    fn grid(&self, level: usize) -> &LevelGrid {
        self.grids[level].get_or_init(|| {
            let grid = AttractorGrid::generate(self.system, self.depth - level);
            let mu = hutchinson_on_grid(self.system, &grid);
            let set = EvalSet::new(self.system, mu.support.clone(), level);
            debug_assert_eq!(set.points(), &mu.support[..]);
            LevelGrid { set, weights: mu.weights_f64() }
        })
    }

    pub fn eval(&self, t: &GradedCoreElement) -> Result<Complex64> {
        let level = t.level();
        if level > self.depth {
            return Err(Error::LevelMismatch(level, self.depth));
        }
        let g = self.grid(level);
        let scale = 1.0 / self.system.n_branches().pow(level as u32) as f64;
        let trace_at = |tree: &ImageTree| t.pi_at(tree, Node::ROOT).trace() * scale;
        let values: Vec<Complex64> = if t.tree_depth() <= g.set.depth() {
            g.set.trees().par_iter().map(trace_at).collect()
        } else {
            g.set
                .points()
                .par_iter()
                .map(|p| trace_at(&ImageTree::build(self.system, p, t.tree_depth())))
                .collect()
        };
        Ok(values.iter().zip(&g.weights).map(|(v, w)| v * *w).sum())
    }
}

pub fn trace_eval(system: &SelfSimilarSystem, sing: &Singularity, spec: &TraceSpec, t: &GradedCoreElement) -> Result<Complex64> {
    match spec {
        TraceSpec::Discrete { base, level } => discrete_trace(system, sing, base, *level, t),
        TraceSpec::Hutchinson { depth } => HutchinsonTrace::new(system, *depth).eval(t),
    }
}

/// Membership in an ideal via trace kernels: `tau^(b,n)(T* T) <= tol` for every tag. The zero
/// ideal is tested by the sup norm of `pi(T)` on `grid(grid_depth)` and the branch set.
pub fn ideal_membership(
    system: &SelfSimilarSystem,
    sing: &Singularity,
    d: &IdealDescriptor,
    t: &GradedCoreElement,
    tol: f64,
    grid_depth: usize,
) -> Result<bool> {
    match d {
        IdealDescriptor::Full => Ok(true),
        IdealDescriptor::Zero => {
            let mut pts = AttractorGrid::generate(system, grid_depth).points().to_vec();
            pts.extend(sing.branch_set());
            let set = EvalSet::new(system, pts, t.tree_depth());
            Ok(t.pi(&set).sup_norm() <= tol)
        }
        IdealDescriptor::OrbitUnion(tags) => {
            let tt = t.adjoint().multiply(t)?;
            for tag in tags {
                if discrete_trace(system, sing, &tag.base, tag.level, &tt)?.re > tol {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// A scalar field vanishing on `O_{b,n}` and of maximum modulus one on `O_{b',n'}`.
pub fn kernel_witness(system: &SelfSimilarSystem, sing: &Singularity, tag: &Tag, other: &Tag) -> Result<GradedCoreElement> {
    for t in [tag, other] {
        if !sing.is_branch_point(&t.base) {
            return Err(Error::NotBranchPoint(t.base.to_string()));
        }
    }
    let zeros: Vec<Vec<f64>> = orbit_points(system, &tag.base, tag.level).iter().map(Point::to_f64).collect();
    let a = ScalarFn::Product(zeros.iter().map(|z| squared_distance(z)).collect());
    let peak = orbit_points(system, &other.base, other.level)
        .iter()
        .map(|p| a.eval(&p.to_f64()).norm())
        .fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::InvalidElement(format!("orbit sets of {tag} and {other} cannot be separated")));
    }
    let a = ScalarFn::Scaled(Complex64::new(1.0 / peak, 0.0), Box::new(a));
    GradedCoreElement::single(OpExpr::Scalar(a), 0)
}

/// Numerical rank of `T -> (pi_n(T_{<=n})(b))_{(b,n)}` over `samples` random elements.
pub fn joint_evaluation_rank(
    system: &SelfSimilarSystem,
    sing: &Singularity,
    tags: &[Tag],
    samples: usize,
    seed: u64,
) -> Result<usize> {
    for t in tags {
        if !sing.is_branch_point(&t.base) {
            return Err(Error::NotBranchPoint(t.base.to_string()));
        }
    }
    let top = tags.iter().map(|t| t.level).max().unwrap_or(0);
    let mut gen = Generator::new(system, sing, top, seed)?;
    let mut rows: Vec<Vec<Complex64>> = Vec::with_capacity(samples);
    for _ in 0..samples {
        let e = gen.element(top);
        let mut row = Vec::new();
        for t in tags {
            let cut = e.truncated(t.level).padded(t.level);
            let tree = ImageTree::build(system, &t.base, cut.tree_depth());
            row.extend(cut.pi_at(&tree, Node::ROOT).iter().cloned());
        }
        rows.push(row);
    }
    let width = rows.first().map_or(0, Vec::len);
    let m = DMatrix::from_fn(rows.len(), width, |i, j| rows[i][j]);
    let sv = m.singular_values();
    let top_sv = sv.iter().cloned().fold(0.0, f64::max);
    Ok(sv.iter().filter(|&&s| s > 1e-8 * top_sv.max(1.0)).count())
}
