//! Closed-form scalar and vector fields on the attractor and the image trees they are
//! evaluated on.
//!
//! Fields are never resampled: a pullback along a component map is an evaluation at the
//! exact image point, so every level of the filtration sees the same numbers.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ifs::SelfSimilarSystem;
use crate::scalar::Point;

/// Position `(depth, flat index)` in an [`ImageTree`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Node {
    pub depth: usize,
    pub index: usize,
}

impl Node {
    pub const ROOT: Node = Node { depth: 0, index: 0 };
}

/// All images `g_t(x)` of a root point for level indices `t` up to a fixed depth, where
/// `g_t = gamma_{t_1} o ... o gamma_{t_d}`.
///
/// Images are computed exactly and only then rounded, so a point reached along two
/// routes has bit-identical coordinates.
#[derive(Clone, Debug)]
pub struct ImageTree {
    n_branches: usize,
    dim: usize,
    levels: Vec<Vec<f64>>,
}

impl ImageTree {
    pub fn build(system: &SelfSimilarSystem, root: &Point, depth: usize) -> Self {
        let n = system.n_branches();
        let dim = system.dimension();
        let mut exact = vec![root.clone()];
        let mut levels = vec![root.to_f64()];
        for _ in 0..depth {
            // index v + N t holds gamma_v applied to node t
            let mut next = Vec::with_capacity(exact.len() * n);
            for p in &exact {
                for b in system.branches() {
                    next.push(b.apply(p));
                }
            }
            levels.push(next.iter().flat_map(Point::to_f64).collect());
            exact = next;
        }
        ImageTree { n_branches: n, dim, levels }
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn n_branches(&self) -> usize {
        self.n_branches
    }

    pub fn coords(&self, node: Node) -> &[f64] {
        &self.levels[node.depth][node.index * self.dim..(node.index + 1) * self.dim]
    }

    /// `g_u` applied at `node`, for a level-`k` index `u`.
    pub fn child(&self, node: Node, k: usize, u: usize) -> Node {
        Node { depth: node.depth + k, index: u + self.n_branches.pow(k as u32) * node.index }
    }
}

/// Complex polynomial in the coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    pub terms: Vec<(Complex64, Vec<u32>)>,
}

impl Polynomial {
    pub fn new(terms: Vec<(Complex64, Vec<u32>)>) -> Self {
        Polynomial { terms }
    }

    pub fn constant(c: Complex64, dim: usize) -> Self {
        Polynomial { terms: vec![(c, vec![0; dim])] }
    }

    /// `scale * x_k + shift`.
    pub fn affine_coordinate(k: usize, dim: usize, scale: f64, shift: f64) -> Self {
        let mut powers = vec![0; dim];
        powers[k] = 1;
        Polynomial { terms: vec![(Complex64::new(scale, 0.0), powers), (Complex64::new(shift, 0.0), vec![0; dim])] }
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(c, powers)| c * powers.iter().zip(x).map(|(&p, xi)| xi.powi(p as i32)).product::<f64>())
            .sum()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(_, p)| p.iter().sum()).max().unwrap_or(0)
    }
}

/// A continuous function `K -> C` in closed form.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarFn {
    Poly(Polynomial),
    /// `prod_{o} |x - o|^2 / |center - o|^2`: one at `center`, zero at each `o`.
    Bump { center: Vec<f64>, others: Vec<Vec<f64>> },
    Sum(Vec<ScalarFn>),
    Product(Vec<ScalarFn>),
    Scaled(Complex64, Box<ScalarFn>),
    Conj(Box<ScalarFn>),
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl ScalarFn {
    pub fn constant(c: Complex64, dim: usize) -> Self {
        ScalarFn::Poly(Polynomial::constant(c, dim))
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        match self {
            ScalarFn::Poly(p) => p.eval(x),
            ScalarFn::Bump { center, others } => {
                Complex64::new(others.iter().map(|o| dist2(x, o) / dist2(center, o)).product(), 0.0)
            }
            ScalarFn::Sum(fs) => fs.iter().map(|f| f.eval(x)).sum(),
            ScalarFn::Product(fs) => fs.iter().map(|f| f.eval(x)).product(),
            ScalarFn::Scaled(c, f) => c * f.eval(x),
            ScalarFn::Conj(f) => f.eval(x).conj(),
        }
    }
}

/// A closed-form element of `C(K, C^{N^n})`, indexed by flat level-n multi-indices.
#[derive(Clone, Debug, PartialEq)]
pub enum VectorFn {
    Components { level: usize, comps: Vec<ScalarFn> },
    /// Interior tensor product: `(f (x) g)_{(i, j)}(y) = f_i(g_j(y)) * g_j(y)` with `f` of level
    /// `m`, `g` of level `k`, and flat index `i + N^m j`.
    Lift { level: usize, outer: Box<VectorFn>, inner: Box<VectorFn> },
    /// `(a . f . a')_i(y) = a(g_i(y)) f_i(y) a'(y)`.
    Action { left: ScalarFn, field: Box<VectorFn>, right: ScalarFn },
    Sum(Box<VectorFn>, Box<VectorFn>),
    Scaled(Complex64, Box<VectorFn>),
}

impl VectorFn {
    pub fn components(level: usize, comps: Vec<ScalarFn>) -> Self {
        VectorFn::Components { level, comps }
    }

    pub fn lift(outer: VectorFn, inner: VectorFn) -> Self {
        let level = outer.level() + inner.level();
        VectorFn::Lift { level, outer: Box::new(outer), inner: Box::new(inner) }
    }

    pub fn action(left: ScalarFn, field: VectorFn, right: ScalarFn) -> Self {
        VectorFn::Action { left, field: Box::new(field), right }
    }

    pub fn level(&self) -> usize {
        match self {
            VectorFn::Components { level, .. } | VectorFn::Lift { level, .. } => *level,
            VectorFn::Action { field, .. } => field.level(),
            VectorFn::Sum(a, _) => a.level(),
            VectorFn::Scaled(_, f) => f.level(),
        }
    }

    /// Depth of image tree needed below the evaluation node.
    pub fn tree_depth(&self) -> usize {
        match self {
            VectorFn::Components { .. } => 0,
            VectorFn::Lift { outer, inner, .. } => (outer.tree_depth() + inner.level()).max(inner.tree_depth()),
            VectorFn::Action { field, .. } => field.level().max(field.tree_depth()),
            VectorFn::Sum(a, b) => a.tree_depth().max(b.tree_depth()),
            VectorFn::Scaled(_, f) => f.tree_depth(),
        }
    }

    /// Checks that component counts match the levels, for `N` branches.
    pub fn validate(&self, n_branches: usize) -> Result<()> {
        match self {
            VectorFn::Components { level, comps } => {
                let want = n_branches.pow(*level as u32);
                if comps.len() != want {
                    return Err(Error::InvalidElement(format!(
                        "level {level} field needs {want} components, got {}",
                        comps.len()
                    )));
                }
                Ok(())
            }
            VectorFn::Lift { outer, inner, .. } => {
                outer.validate(n_branches)?;
                inner.validate(n_branches)
            }
            VectorFn::Action { field, .. } | VectorFn::Scaled(_, field) => field.validate(n_branches),
            VectorFn::Sum(a, b) => {
                if a.level() != b.level() {
                    return Err(Error::LevelMismatch(a.level(), b.level()));
                }
                a.validate(n_branches)?;
                b.validate(n_branches)
            }
        }
    }

    pub fn eval(&self, tree: &ImageTree, node: Node) -> Vec<Complex64> {
        match self {
            VectorFn::Components { comps, .. } => {
                let x = tree.coords(node);
                comps.iter().map(|c| c.eval(x)).collect()
            }
            VectorFn::Lift { level, outer, inner } => {
                let k = inner.level();
                let m = level - k;
                let size_m = tree.n_branches().pow(m as u32);
                let g = inner.eval(tree, node);
                let mut out = vec![Complex64::new(0.0, 0.0); size_m * g.len()];
                for (j, gj) in g.iter().enumerate() {
                    let f = outer.eval(tree, tree.child(node, k, j));
                    for (i, fi) in f.iter().enumerate() {
                        out[i + size_m * j] = fi * gj;
                    }
                }
                out
            }
            VectorFn::Action { left, field, right } => {
                let n = field.level();
                let r = right.eval(tree.coords(node));
                let mut v = field.eval(tree, node);
                for (i, vi) in v.iter_mut().enumerate() {
                    *vi *= left.eval(tree.coords(tree.child(node, n, i))) * r;
                }
                v
            }
            VectorFn::Sum(a, b) => a.eval(tree, node).into_iter().zip(b.eval(tree, node)).map(|(x, y)| x + y).collect(),
            VectorFn::Scaled(c, f) => f.eval(tree, node).into_iter().map(|x| c * x).collect(),
        }
    }
}

/// Exact evaluation points with their image trees, sorted and deduplicated.
#[derive(Clone, Debug)]
pub struct EvalSet {
    points: Vec<Point>,
    trees: Vec<ImageTree>,
    depth: usize,
}

impl EvalSet {
    pub fn new(system: &SelfSimilarSystem, mut points: Vec<Point>, depth: usize) -> Self {
        points.sort();
        points.dedup();
        let trees = points.par_iter().map(|p| ImageTree::build(system, p, depth)).collect();
        EvalSet { points, trees, depth }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn trees(&self) -> &[ImageTree] {
        &self.trees
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, p: &Point) -> Option<usize> {
        self.points.binary_search(p).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{sierpinski, tent};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn x_fn() -> ScalarFn {
        ScalarFn::Poly(Polynomial::affine_coordinate(0, 1, 1.0, 0.0))
    }

    #[test]
    fn tree_nodes_are_component_images() {
        let s = sierpinski();
        let root = s.named_point("Q").unwrap().clone();
        let tree = ImageTree::build(&s, &root, 3);
        for t in 0..27 {
            let idx = crate::ifs::MultiIndex::from_flat(t, 3, 3);
            let exact = s.component_map_apply(&idx, &root).to_f64();
            assert_eq!(tree.coords(Node { depth: 3, index: t }), exact.as_slice());
        }
        // child of child is the deeper node
        let a = tree.child(tree.child(Node::ROOT, 1, 2), 2, 5);
        assert_eq!(a, Node { depth: 3, index: 5 + 9 * 2 });
    }

    #[test]
    fn lift_matches_hand_evaluation() {
        let t = tent();
        let tree = ImageTree::build(&t, &Point::parse("0").unwrap(), 2);
        let f = VectorFn::components(1, vec![x_fn(), x_fn()]);
        let e1 = VectorFn::components(1, vec![ScalarFn::constant(c(1.0), 1), ScalarFn::constant(c(0.0), 1)]);
        let v = VectorFn::lift(f, e1).eval(&tree, Node::ROOT);
        // (f (x) e1)_{(i,j)}(0) = f_i(gamma_j(0)) e1_j(0): gamma_1(0) = 0, gamma_2(0) = 1
        assert_eq!(v, vec![c(0.0), c(0.0), c(0.0), c(0.0)]);
        let e2 = VectorFn::components(1, vec![ScalarFn::constant(c(0.0), 1), ScalarFn::constant(c(1.0), 1)]);
        let f = VectorFn::components(1, vec![x_fn(), x_fn()]);
        let v = VectorFn::lift(f, e2).eval(&tree, Node::ROOT);
        assert_eq!(v, vec![c(0.0), c(0.0), c(1.0), c(1.0)]);
    }

    #[test]
    fn lift_is_associative() {
        let t = tent();
        let tree = ImageTree::build(&t, &Point::parse("1/3").unwrap(), 3);
        let mk = |a: f64, b: f64| {
            VectorFn::components(
                1,
                vec![
                    ScalarFn::Poly(Polynomial::affine_coordinate(0, 1, a, b)),
                    ScalarFn::Poly(Polynomial::affine_coordinate(0, 1, b, a)),
                ],
            )
        };
        let left = VectorFn::lift(VectorFn::lift(mk(1.0, 2.0), mk(0.5, -1.0)), mk(3.0, 0.25));
        let right = VectorFn::lift(mk(1.0, 2.0), VectorFn::lift(mk(0.5, -1.0), mk(3.0, 0.25)));
        let a = left.eval(&tree, Node::ROOT);
        let b = right.eval(&tree, Node::ROOT);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn bump_interpolates() {
        let b = ScalarFn::Bump { center: vec![0.5], others: vec![vec![0.0], vec![1.0]] };
        assert_eq!(b.eval(&[0.5]), c(1.0));
        assert_eq!(b.eval(&[1.0]), c(0.0));
        assert_eq!(b.eval(&[0.0]), c(0.0));
    }
}
