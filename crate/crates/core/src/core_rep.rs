//! Matrix representation of the core: operator expressions per level, graded elements,
//! block-diagonal embeddings and the representation `pi` on sampled points.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bimodule::POINTWISE_TOLERANCE;
use crate::error::{Error, Result};
use crate::field::{EvalSet, ImageTree, Node, ScalarFn, VectorFn};
use crate::ifs::SelfSimilarSystem;
use crate::scalar::Point;
use crate::singularity::{FiberPartition, LevelData, Singularity};

pub type CMatrix = DMatrix<Complex64>;

/// A closed-form element of `M_{N^r}(C(K))`.
#[derive(Clone, Debug, PartialEq)]
pub enum OpExpr {
    /// A scalar function as a level-0 element.
    Scalar(ScalarFn),
    Constant { level: usize, value: CMatrix },
    /// `[f_i conj(g_j)]`.
    RankOne { f: VectorFn, g: VectorFn },
    Sum(Vec<OpExpr>),
    Product(Vec<OpExpr>),
    Scaled(Complex64, Box<OpExpr>),
    /// `v(x) T(x)`: right multiplication by a function, `phi_r(alpha_r(v))`.
    Pointwise(ScalarFn, Box<OpExpr>),
    Adjoint(Box<OpExpr>),
    /// Block diagonal `diag_t T(g_t(x))` over level-`(level - r)` indices `t`.
    Embed { inner: Box<OpExpr>, level: usize },
}

impl OpExpr {
    pub fn rank_one(f: VectorFn, g: VectorFn) -> Result<Self> {
        if f.level() != g.level() {
            return Err(Error::LevelMismatch(f.level(), g.level()));
        }
        Ok(OpExpr::RankOne { f, g })
    }

    pub fn embed(self, level: usize) -> Result<Self> {
        let r = self.level();
        if r > level {
            return Err(Error::LevelMismatch(r, level));
        }
        Ok(if r == level { self } else { OpExpr::Embed { inner: Box::new(self), level } })
    }

    pub fn level(&self) -> usize {
        match self {
            OpExpr::Scalar(_) => 0,
            OpExpr::Constant { level, .. } | OpExpr::Embed { level, .. } => *level,
            OpExpr::RankOne { f, .. } => f.level(),
            OpExpr::Sum(xs) | OpExpr::Product(xs) => xs.first().map_or(0, OpExpr::level),
            OpExpr::Scaled(_, x) | OpExpr::Pointwise(_, x) | OpExpr::Adjoint(x) => x.level(),
        }
    }

    pub fn tree_depth(&self) -> usize {
        match self {
            OpExpr::Scalar(_) | OpExpr::Constant { .. } => 0,
            OpExpr::RankOne { f, g } => f.tree_depth().max(g.tree_depth()),
            OpExpr::Sum(xs) | OpExpr::Product(xs) => xs.iter().map(OpExpr::tree_depth).max().unwrap_or(0),
            OpExpr::Scaled(_, x) | OpExpr::Pointwise(_, x) | OpExpr::Adjoint(x) => x.tree_depth(),
            OpExpr::Embed { inner, level } => level - inner.level() + inner.tree_depth(),
        }
    }

    /// Checks shapes and level consistency for `N` branches and returns the level.
    pub fn validate(&self, n_branches: usize) -> Result<usize> {
        match self {
            OpExpr::Scalar(_) => Ok(0),
            OpExpr::Constant { level, value } => {
                let size = n_branches.pow(*level as u32);
                if value.nrows() != size || value.ncols() != size {
                    return Err(Error::InvalidElement(format!("constant of level {level} must be {size}x{size}")));
                }
                Ok(*level)
            }
            OpExpr::RankOne { f, g } => {
                f.validate(n_branches)?;
                g.validate(n_branches)?;
                if f.level() != g.level() {
                    return Err(Error::LevelMismatch(f.level(), g.level()));
                }
                Ok(f.level())
            }
            OpExpr::Sum(xs) | OpExpr::Product(xs) => {
                let first = xs.first().ok_or_else(|| Error::InvalidElement("empty sum or product".into()))?;
                let level = first.validate(n_branches)?;
                for x in &xs[1..] {
                    let l = x.validate(n_branches)?;
                    if l != level {
                        return Err(Error::LevelMismatch(level, l));
                    }
                }
                Ok(level)
            }
            OpExpr::Scaled(_, x) | OpExpr::Pointwise(_, x) | OpExpr::Adjoint(x) => x.validate(n_branches),
            OpExpr::Embed { inner, level } => {
                let r = inner.validate(n_branches)?;
                if r > *level {
                    return Err(Error::LevelMismatch(r, *level));
                }
                Ok(*level)
            }
        }
    }

    /// Value at a node of an image tree.
    pub fn eval(&self, tree: &ImageTree, node: Node) -> CMatrix {
        match self {
            OpExpr::Scalar(f) => CMatrix::from_element(1, 1, f.eval(tree.coords(node))),
            OpExpr::Constant { value, .. } => value.clone(),
            OpExpr::RankOne { f, g } => {
                let fv = f.eval(tree, node);
                let gv = g.eval(tree, node);
                CMatrix::from_fn(fv.len(), gv.len(), |i, j| fv[i] * gv[j].conj())
            }
            OpExpr::Sum(xs) => {
                let mut it = xs.iter();
                let first = it.next().expect("validated").eval(tree, node);
                it.fold(first, |acc, x| acc + x.eval(tree, node))
            }
            OpExpr::Product(xs) => {
                let mut it = xs.iter();
                let first = it.next().expect("validated").eval(tree, node);
                it.fold(first, |acc, x| acc * x.eval(tree, node))
            }
            OpExpr::Scaled(c, x) => x.eval(tree, node) * *c,
            OpExpr::Pointwise(v, x) => x.eval(tree, node) * v.eval(tree.coords(node)),
            OpExpr::Adjoint(x) => x.eval(tree, node).adjoint(),
            OpExpr::Embed { inner, level } => inner.eval_embedded(*level, tree, node),
        }
    }

    /// Value of the embedding of `self` at `level`, without building the embedded expression.
    pub fn eval_embedded(&self, level: usize, tree: &ImageTree, node: Node) -> CMatrix {
        let n = tree.n_branches();
        let r = self.level();
        if r == level {
            return self.eval(tree, node);
        }
        let k = level - r;
        let block = n.pow(r as u32);
        let size = n.pow(level as u32);
        let mut out = CMatrix::zeros(size, size);
        for t in 0..n.pow(k as u32) {
            let b = self.eval(tree, tree.child(node, k, t));
            out.view_mut((t * block, t * block), (block, block)).copy_from(&b);
        }
        out
    }
}

/// `T = sum_r T_r (x) I` with `T_r` of level `r`, for `r = 0..=level`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedCoreElement {
    level: usize,
    components: Vec<Option<OpExpr>>,
}

impl GradedCoreElement {
    pub fn new(level: usize, components: Vec<Option<OpExpr>>) -> Result<Self> {
        if components.len() != level + 1 {
            return Err(Error::InvalidElement(format!(
                "level {level} element needs {} components, got {}",
                level + 1,
                components.len()
            )));
        }
        for (r, c) in components.iter().enumerate() {
            if let Some(c) = c {
                if c.level() != r {
                    return Err(Error::LevelMismatch(r, c.level()));
                }
            }
        }
        Ok(GradedCoreElement { level, components })
    }

    /// Validates every component against the number of branches.
    pub fn validate(&self, n_branches: usize) -> Result<()> {
        for (r, c) in self.components.iter().enumerate() {
            if let Some(c) = c {
                let l = c.validate(n_branches)?;
                if l != r {
                    return Err(Error::LevelMismatch(r, l));
                }
            }
        }
        Ok(())
    }

    pub fn zero(level: usize) -> Self {
        GradedCoreElement { level, components: vec![None; level + 1] }
    }

    /// The unit, held at level 0 and padded to `level`.
    pub fn one(level: usize, dim: usize) -> Self {
        let mut e = Self::zero(level);
        e.components[0] = Some(OpExpr::Scalar(ScalarFn::constant(Complex64::new(1.0, 0.0), dim)));
        e
    }

    /// A single component at its own level, padded with zeros up to `level`.
    pub fn single(component: OpExpr, level: usize) -> Result<Self> {
        let r = component.level();
        if r > level {
            return Err(Error::LevelMismatch(r, level));
        }
        let mut e = Self::zero(level);
        e.components[r] = Some(component);
        Ok(e)
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn components(&self) -> &[Option<OpExpr>] {
        &self.components
    }

    pub fn component(&self, r: usize) -> Option<&OpExpr> {
        self.components.get(r).and_then(Option::as_ref)
    }

    /// Appends zero components up to `level`.
    pub fn padded(&self, level: usize) -> Self {
        let mut components = self.components.clone();
        components.resize(level.max(self.level) + 1, None);
        GradedCoreElement { level: level.max(self.level), components }
    }

    /// Keeps components of level at most `n`.
    pub fn truncated(&self, n: usize) -> Self {
        let level = n.min(self.level);
        GradedCoreElement { level, components: self.components[..=level].to_vec() }
    }

    pub fn tree_depth(&self) -> usize {
        self.components
            .iter()
            .enumerate()
            .filter_map(|(r, c)| c.as_ref().map(|c| self.level - r + c.tree_depth()))
            .max()
            .unwrap_or(0)
    }

    fn check_level(&self, other: &Self) -> Result<()> {
        if self.level != other.level {
            return Err(Error::LevelMismatch(self.level, other.level));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_level(other)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| match (a, b) {
                (None, None) => None,
                (Some(x), None) | (None, Some(x)) => Some(x.clone()),
                (Some(x), Some(y)) => Some(OpExpr::Sum(vec![x.clone(), y.clone()])),
            })
            .collect();
        Ok(GradedCoreElement { level: self.level, components })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let components = self.components.iter().map(|x| x.as_ref().map(|x| OpExpr::Scaled(c, Box::new(x.clone())))).collect();
        GradedCoreElement { level: self.level, components }
    }

    pub fn adjoint(&self) -> Self {
        let components = self.components.iter().map(|x| x.as_ref().map(|x| OpExpr::Adjoint(Box::new(x.clone())))).collect();
        GradedCoreElement { level: self.level, components }
    }

    /// Graded product: `(TS)_l = (sum_{r<=l} T_r^(l)) S_l + T_l (sum_{s<l} S_s^(l))`,
    /// where `X^(l)` is the embedding of `X` at level `l`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_level(other)?;
        let up = |x: &OpExpr, l: usize| x.clone().embed(l).expect("level below target");
        let mut components = Vec::with_capacity(self.level + 1);
        for l in 0..=self.level {
            let mut terms = Vec::new();
            if let Some(s) = &other.components[l] {
                let left: Vec<OpExpr> = self.components[..=l].iter().flatten().map(|t| up(t, l)).collect();
                if !left.is_empty() {
                    terms.push(OpExpr::Product(vec![sum_of(left), s.clone()]));
                }
            }
            if let Some(t) = &self.components[l] {
                let right: Vec<OpExpr> = other.components[..l].iter().flatten().map(|s| up(s, l)).collect();
                if !right.is_empty() {
                    terms.push(OpExpr::Product(vec![t.clone(), sum_of(right)]));
                }
            }
            components.push(if terms.is_empty() { None } else { Some(sum_of(terms)) });
        }
        Ok(GradedCoreElement { level: self.level, components })
    }

    /// `pi(T)` at a node: `sum_r` of the level-`level` embeddings of `T_r`.
    pub fn pi_at(&self, tree: &ImageTree, node: Node) -> CMatrix {
        let size = tree.n_branches().pow(self.level as u32);
        let mut out = CMatrix::zeros(size, size);
        for c in self.components.iter().flatten() {
            out += c.eval_embedded(self.level, tree, node);
        }
        out
    }

    pub fn pi(&self, set: &EvalSet) -> MatrixField {
        assert!(set.depth() >= self.tree_depth(), "evaluation trees too shallow");
        let values = set.trees().par_iter().map(|t| self.pi_at(t, Node::ROOT)).collect();
        MatrixField::new(self.level, set.points().to_vec(), values)
    }
}

fn sum_of(mut xs: Vec<OpExpr>) -> OpExpr {
    if xs.len() == 1 {
        xs.pop().expect("nonempty")
    } else {
        OpExpr::Sum(xs)
    }
}

/// Sampled level-n matrix field.
#[derive(Clone, Debug)]
pub struct MatrixField {
    level: usize,
    points: Vec<Point>,
    values: Vec<CMatrix>,
}

impl MatrixField {
    pub fn new(level: usize, points: Vec<Point>, values: Vec<CMatrix>) -> Self {
        MatrixField { level, points, values }
    }

    pub fn sample(expr: &OpExpr, set: &EvalSet) -> Self {
        assert!(set.depth() >= expr.tree_depth(), "evaluation trees too shallow");
        let values = set.trees().par_iter().map(|t| expr.eval(t, Node::ROOT)).collect();
        MatrixField { level: expr.level(), points: set.points().to_vec(), values }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn values(&self) -> &[CMatrix] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [CMatrix] {
        &mut self.values
    }

    pub fn value_at(&self, p: &Point) -> Option<&CMatrix> {
        crate::scalar::locate(&self.points, p).map(|i| &self.values[i])
    }

    pub fn value_at_mut(&mut self, p: &Point) -> Option<&mut CMatrix> {
        crate::scalar::locate(&self.points, p).map(move |i| &mut self.values[i])
    }

    /// Largest violation of the row and column identifications at the level's branch values.
    pub fn identification_defect(&self, data: &LevelData) -> Result<f64> {
        if data.level != self.level {
            return Err(Error::LevelMismatch(data.level, self.level));
        }
        let mut worst: f64 = 0.0;
        for part in &data.partitions {
            let m = self
                .value_at(&part.value)
                .ok_or_else(|| Error::InvalidElement(format!("no sample at branch value {}", part.value)))?;
            worst = worst.max(matrix_defect(m, part));
        }
        Ok(worst)
    }

    /// Membership in `D` at this level, to the pointwise tolerance.
    pub fn d_membership(&self, data: &LevelData) -> bool {
        self.identification_defect(data).map_or(false, |d| d <= POINTWISE_TOLERANCE * (1.0 + self.max_abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|m| m.iter().map(|z| z.norm()).fold(0.0, f64::max)).fold(0.0, f64::max)
    }

    /// Largest spectral norm over the samples.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(spectral_norm).fold(0.0, f64::max)
    }

    /// Block-diagonal embedding at `target`, reading `T(g_t(x))` from this field's samples.
    pub fn embed_sampled(&self, system: &SelfSimilarSystem, target: usize, at: &[Point]) -> Result<MatrixField> {
        if target < self.level {
            return Err(Error::LevelMismatch(self.level, target));
        }
        let n = system.n_branches();
        let k = target - self.level;
        let block = n.pow(self.level as u32);
        let size = n.pow(target as u32);
        let mut values = Vec::with_capacity(at.len());
        for x in at {
            let mut out = CMatrix::zeros(size, size);
            for t in 0..n.pow(k as u32) {
                let idx = crate::ifs::MultiIndex::from_flat(t, k, n);
                let y = system.component_map_apply(&idx, x);
                let b = self
                    .value_at(&y)
                    .ok_or_else(|| Error::InvalidElement(format!("no sample at mapped point {y}")))?;
                out.view_mut((t * block, t * block), (block, block)).copy_from(b);
            }
            values.push(out);
        }
        Ok(MatrixField { level: target, points: at.to_vec(), values })
    }
}

fn matrix_defect(m: &CMatrix, part: &FiberPartition) -> f64 {
    let mut worst: f64 = 0.0;
    for g in part.constraints() {
        let a = g.labels[0];
        for &b in &g.labels[1..] {
            for i in 0..m.nrows() {
                worst = worst.max((m[(a, i)] - m[(b, i)]).norm());
                worst = worst.max((m[(i, a)] - m[(i, b)]).norm());
            }
        }
    }
    worst
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Moves `T` times `v` up one level: `A_{r+1}` is the embedding of `v T_r` at level `r+1`.
///
/// `v` must vanish at every branch point, so each `v T_r` is a compact one level up.
pub fn compact_absorption(sing: &Singularity, element: &GradedCoreElement, v: &ScalarFn) -> Result<GradedCoreElement> {
    for b in sing.branch_points() {
        let value = v.eval(&b.point.to_f64());
        if value.norm() > POINTWISE_TOLERANCE {
            return Err(Error::NotVanishing(format!("v({}) = {value}", b.point)));
        }
    }
    let mut components = vec![None];
    for c in element.components() {
        components.push(match c {
            Some(t) => Some(OpExpr::Pointwise(v.clone(), Box::new(t.clone())).embed(t.level() + 1)?),
            None => None,
        });
    }
    GradedCoreElement::new(element.level() + 1, components)
}

/// The same operator before absorption: `T` with each component multiplied by `v`, at level `n`.
pub fn pointwise_product(element: &GradedCoreElement, v: &ScalarFn) -> GradedCoreElement {
    let components = element
        .components()
        .iter()
        .map(|c| c.as_ref().map(|t| OpExpr::Pointwise(v.clone(), Box::new(t.clone()))))
        .collect();
    GradedCoreElement { level: element.level(), components }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Polynomial;
    use crate::ifs::tent;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn x_fn() -> ScalarFn {
        ScalarFn::Poly(Polynomial::affine_coordinate(0, 1, 1.0, 0.0))
    }

    fn tent_setup(n: usize) -> (SelfSimilarSystem, Singularity, LevelData) {
        let t = tent();
        let s = Singularity::compute(&t).unwrap();
        let d = s.level_data(&t, n).unwrap();
        (t, s, d)
    }

    #[test]
    fn embedding_of_a_scalar() {
        let (t, _, _) = tent_setup(1);
        let set = EvalSet::new(&t, vec![Point::parse("1/3").unwrap()], 1);
        let m = MatrixField::sample(&OpExpr::Scalar(x_fn()).embed(1).unwrap(), &set);
        let v = &m.values()[0];
        assert!((v[(0, 0)] - c(1.0 / 6.0)).norm() < 1e-15);
        assert!((v[(1, 1)] - c(1.0 - 1.0 / 6.0)).norm() < 1e-15);
        assert_eq!(v[(0, 1)], c(0.0));
    }

    #[test]
    fn constant_diagonal_norm_and_membership() {
        let (t, _, d) = tent_setup(1);
        let set = EvalSet::new(&t, vec![Point::parse("1").unwrap(), Point::parse("0").unwrap()], 1);
        let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(2.0), c(1.0)]));
        let m = MatrixField::sample(&OpExpr::Constant { level: 1, value: diag }, &set);
        assert!((m.sup_norm() - 2.0).abs() < 1e-12);
        let e11 = CMatrix::from_fn(2, 2, |i, j| if i == 0 && j == 0 { c(1.0) } else { c(0.0) });
        let m = MatrixField::sample(&OpExpr::Constant { level: 1, value: e11 }, &set);
        assert!(!m.d_membership(&d));
        let zero = MatrixField::sample(&OpExpr::Constant { level: 1, value: CMatrix::zeros(2, 2) }, &set);
        assert!(zero.d_membership(&d));
    }

    #[test]
    fn pi_of_scalar_plus_rank_one() {
        let (t, _, _) = tent_setup(1);
        let set = EvalSet::new(&t, vec![Point::parse("1/4").unwrap()], 1);
        let f = VectorFn::components(1, vec![x_fn(), ScalarFn::constant(c(2.0), 1)]);
        let g = VectorFn::components(1, vec![ScalarFn::constant(Complex64::new(0.0, 1.0), 1), x_fn()]);
        let e = GradedCoreElement::new(1, vec![Some(OpExpr::Scalar(x_fn())), Some(OpExpr::rank_one(f, g).unwrap())]).unwrap();
        let pi = e.pi(&set);
        let v = &pi.values()[0];
        let x = 0.25;
        let fv = [c(x), c(2.0)];
        let gv = [Complex64::new(0.0, 1.0), c(x)];
        let diag = [x / 2.0, 1.0 - x / 2.0];
        for i in 0..2 {
            for j in 0..2 {
                let mut want = fv[i] * gv[j].conj();
                if i == j {
                    want += diag[i];
                }
                assert!((v[(i, j)] - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn absorption_requires_vanishing() {
        let (t, s, d1) = tent_setup(1);
        let e = GradedCoreElement::single(OpExpr::Scalar(x_fn()), 0).unwrap();
        let bad = ScalarFn::Poly(Polynomial::affine_coordinate(0, 1, 1.0, 0.0));
        assert!(compact_absorption(&s, &e, &bad).is_err());
        let v = ScalarFn::Poly(Polynomial::affine_coordinate(0, 1, 1.0, -0.5));
        let up = compact_absorption(&s, &e, &v).unwrap();
        assert_eq!(up.level(), 1);
        assert!(up.component(0).is_none());
        let set = EvalSet::new(&t, vec![Point::parse("1").unwrap(), Point::parse("1/3").unwrap()], 2);
        let m = MatrixField::sample(up.component(1).unwrap(), &set);
        assert!(m.d_membership(&d1));
        let before = pointwise_product(&e, &v).padded(1).pi(&set);
        let after = up.pi(&set);
        for (a, b) in before.values().iter().zip(after.values()) {
            assert!((a - b).norm() <= 1e-12);
        }
    }
}
