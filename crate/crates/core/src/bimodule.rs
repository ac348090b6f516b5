//! The module `Z` of vector fields satisfying the identification equations at branch values,
//! its inner product, bimodule actions, fiber bases and rank-one operators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{EvalSet, ImageTree, Node, ScalarFn, VectorFn};
use crate::ifs::SelfSimilarSystem;
use crate::scalar::Point;
use crate::singularity::{fiber_partition, FiberPartition, LevelData};

/// Pointwise tolerance for identification equations on float values.
pub const POINTWISE_TOLERANCE: f64 = 1e-12;

/// Sampled level-n vector field.
#[derive(Clone, Debug)]
pub struct VectorField {
    level: usize,
    points: Vec<Point>,
    values: Vec<DVector<Complex64>>,
    member: bool,
}

/// Sampled scalar field.
#[derive(Clone, Debug)]
pub struct ScalarField {
    pub points: Vec<Point>,
    pub values: Vec<Complex64>,
}

impl VectorField {
    pub fn sample(f: &VectorFn, set: &EvalSet) -> Self {
        assert!(set.depth() >= f.tree_depth(), "evaluation trees too shallow");
        let values = set.trees().iter().map(|t| DVector::from_vec(f.eval(t, Node::ROOT))).collect();
        VectorField { level: f.level(), points: set.points().to_vec(), values, member: false }
    }

    pub fn from_values(level: usize, points: Vec<Point>, values: Vec<DVector<Complex64>>) -> Self {
        VectorField { level, points, values, member: false }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn values(&self) -> &[DVector<Complex64>] {
        &self.values
    }

    pub fn value_at(&self, p: &Point) -> Option<&DVector<Complex64>> {
        crate::scalar::locate(&self.points, p).map(|i| &self.values[i])
    }

    pub fn is_member(&self) -> bool {
        self.member
    }

    /// Largest violation of `f_i(c) = f_j(c)` over label sets at the level's branch values.
    pub fn identification_defect(&self, data: &LevelData) -> Result<f64> {
        if data.level != self.level {
            return Err(Error::LevelMismatch(data.level, self.level));
        }
        let mut worst: f64 = 0.0;
        for part in &data.partitions {
            let v = self
                .value_at(&part.value)
                .ok_or_else(|| Error::NotInModule(format!("no sample at branch value {}", part.value)))?;
            worst = worst.max(vector_defect(v.as_slice(), part));
        }
        Ok(worst)
    }

    /// True iff all identification equations hold to the pointwise tolerance.
    pub fn check_membership(&self, data: &LevelData) -> bool {
        self.identification_defect(data).map_or(false, |d| d <= POINTWISE_TOLERANCE * (1.0 + self.max_abs()))
    }

    /// Flags the field as a module member after checking it.
    pub fn into_member(mut self, data: &LevelData) -> Result<Self> {
        let defect = self.identification_defect(data)?;
        if defect > POINTWISE_TOLERANCE * (1.0 + self.max_abs()) {
            return Err(Error::NotInModule(format!("identification defect {defect:.3e}")));
        }
        self.member = true;
        Ok(self)
    }

    fn max_abs(&self) -> f64 {
        self.values.iter().flat_map(|v| v.iter().map(|z| z.norm())).fold(0.0, f64::max)
    }
}

fn vector_defect(v: &[Complex64], part: &FiberPartition) -> f64 {
    let mut worst: f64 = 0.0;
    for g in part.constraints() {
        let first = v[g.labels[0]];
        for &l in &g.labels[1..] {
            worst = worst.max((v[l] - first).norm());
        }
    }
    worst
}

/// Identification defect of a closed-form field at the exact branch values of its level.
pub fn closed_form_defect(system: &SelfSimilarSystem, f: &VectorFn, data: &LevelData) -> f64 {
    let mut worst: f64 = 0.0;
    for part in &data.partitions {
        let tree = ImageTree::build(system, &part.value, f.tree_depth());
        worst = worst.max(vector_defect(&f.eval(&tree, Node::ROOT), part));
    }
    worst
}

/// `(f | g)_A(y) = sum_i conj(f_i(y)) g_i(y)`.
pub fn inner_product(f: &VectorField, g: &VectorField) -> Result<ScalarField> {
    if f.level != g.level {
        return Err(Error::LevelMismatch(f.level, g.level));
    }
    if f.points != g.points {
        return Err(Error::InvalidElement("fields are sampled on different point sets".into()));
    }
    let values = f.values.iter().zip(&g.values).map(|(a, b)| a.dotc(b)).collect();
    Ok(ScalarField { points: f.points.clone(), values })
}

/// `(a . f . a')_i(y) = a(g_i(y)) f_i(y) a'(y)`.
pub fn module_actions(a: &ScalarFn, f: &VectorFn, a_right: &ScalarFn) -> VectorFn {
    VectorFn::action(a.clone(), f.clone(), a_right.clone())
}

/// Pointwise matrix `[f_i conj(g_j)]`; both fields must be flagged members.
pub fn rank_one(f: &VectorField, g: &VectorField) -> Result<crate::core_rep::MatrixField> {
    if !f.member || !g.member {
        return Err(Error::NotInModule("rank-one operators need flagged module members".into()));
    }
    if f.level != g.level {
        return Err(Error::LevelMismatch(f.level, g.level));
    }
    if f.points != g.points {
        return Err(Error::InvalidElement("fields are sampled on different point sets".into()));
    }
    let values = f.values.iter().zip(&g.values).map(|(a, b)| a * b.adjoint()).collect();
    Ok(crate::core_rep::MatrixField::new(f.level, f.points.clone(), values))
}

/// Orthonormal basis of the fiber of `Z` at a point.
#[derive(Clone, Debug)]
pub struct FiberBasis {
    pub point: Point,
    pub dimension: usize,
    pub vectors: Vec<DVector<f64>>,
}

/// One basis vector per preimage group, `1/sqrt(e_b)` on the group's labels.
pub fn fiber_basis_from_partition(part: &FiberPartition, size: usize) -> FiberBasis {
    let vectors: Vec<DVector<f64>> = part
        .groups
        .iter()
        .map(|g| {
            let w = 1.0 / (g.labels.len() as f64).sqrt();
            let mut v = DVector::zeros(size);
            for &l in &g.labels {
                v[l] = w;
            }
            v
        })
        .collect();
    FiberBasis { point: part.value.clone(), dimension: vectors.len(), vectors }
}

pub fn fiber_basis(system: &SelfSimilarSystem, c: &Point, n: usize) -> FiberBasis {
    fiber_basis_from_partition(&fiber_partition(system, c, n), system.n_branches().pow(n as u32))
}

/// Matrix units `theta_{u_i, u_j}` of the fiber algebra, which is a full matrix algebra of
/// size `w_c`.
#[derive(Clone, Debug)]
pub struct FiberAlgebra {
    pub width: usize,
    pub dimension: usize,
    pub units: Vec<Vec<DMatrix<f64>>>,
}

pub fn fiber_algebra(basis: &FiberBasis) -> FiberAlgebra {
    let units = basis
        .vectors
        .iter()
        .map(|u| basis.vectors.iter().map(|v| u * v.transpose()).collect())
        .collect();
    FiberAlgebra { width: basis.dimension, dimension: basis.dimension * basis.dimension, units }
}

impl FiberAlgebra {
    /// Largest deviation from `E_ij E_kl = delta_jk E_il` and `E_ij^T = E_ji`.
    pub fn matrix_unit_defect(&self) -> f64 {
        let w = self.width;
        let mut worst: f64 = 0.0;
        for i in 0..w {
            for j in 0..w {
                worst = worst.max((self.units[i][j].transpose() - &self.units[j][i]).abs().max());
                for k in 0..w {
                    for l in 0..w {
                        let prod = &self.units[i][j] * &self.units[k][l];
                        let want = if j == k { self.units[i][l].clone() } else { DMatrix::zeros(prod.nrows(), prod.ncols()) };
                        worst = worst.max((prod - want).abs().max());
                    }
                }
            }
        }
        worst
    }
}
