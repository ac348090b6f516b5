//! Seeded generators for test fields, module members and graded core elements.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::core_rep::{GradedCoreElement, OpExpr};
use crate::error::Result;
use crate::field::{Polynomial, ScalarFn, VectorFn};
use crate::ifs::SelfSimilarSystem;
use crate::scalar::Point;
use crate::singularity::{LevelData, Singularity};

pub const MAX_DEGREE: u32 = 2;

/// Produces random closed-form objects for one system.
pub struct Generator {
    dim: usize,
    n_branches: usize,
    levels: Vec<LevelData>,
    branch_points: Vec<Vec<f64>>,
    rng: ChaCha8Rng,
}

impl Generator {
    pub fn new(system: &SelfSimilarSystem, sing: &Singularity, max_level: usize, seed: u64) -> Result<Self> {
        let levels = (0..=max_level).map(|n| sing.level_data(system, n)).collect::<Result<Vec<_>>>()?;
        Ok(Generator {
            dim: system.dimension(),
            n_branches: system.n_branches(),
            levels,
            branch_points: sing.branch_points().iter().map(|b| b.point.to_f64()).collect(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn level_data(&self, n: usize) -> &LevelData {
        &self.levels[n]
    }

    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn complex(&mut self) -> Complex64 {
        Complex64::new(self.rng.gen_range(-1.0..1.0), self.rng.gen_range(-1.0..1.0))
    }

    /// All monomials of total degree at most [`MAX_DEGREE`] with random coefficients.
    pub fn polynomial(&mut self) -> Polynomial {
        let mut terms = Vec::new();
        for powers in monomials(self.dim, MAX_DEGREE) {
            let c = self.complex();
            terms.push((c, powers));
        }
        Polynomial::new(terms)
    }

    pub fn scalar(&mut self) -> ScalarFn {
        ScalarFn::Poly(self.polynomial())
    }

    /// A random scalar field vanishing on the branch set.
    pub fn vanishing_scalar(&mut self) -> ScalarFn {
        let mut factors = vec![self.scalar()];
        for b in &self.branch_points {
            factors.push(squared_distance(b));
        }
        ScalarFn::Product(factors)
    }

    /// Polynomial components corrected at each branch value so that the components in every
    /// label set agree there.
    pub fn z_member(&mut self, level: usize) -> VectorFn {
        let size = self.n_branches.pow(level as u32);
        let polys: Vec<Polynomial> = (0..size).map(|_| self.polynomial()).collect();
        let data = &self.levels[level];
        let values: Vec<Vec<f64>> = data.partitions.iter().map(|p| p.value.to_f64()).collect();
        let mut comps: Vec<Vec<ScalarFn>> = polys.iter().map(|p| vec![ScalarFn::Poly(p.clone())]).collect();
        for (k, part) in data.partitions.iter().enumerate() {
            let c = &values[k];
            let others: Vec<Vec<f64>> = values.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, v)| v.clone()).collect();
            for g in part.constraints() {
                let avg = g.labels.iter().map(|&l| polys[l].eval(c)).sum::<Complex64>() / g.labels.len() as f64;
                for &l in &g.labels {
                    let shift = avg - polys[l].eval(c);
                    let bump = ScalarFn::Bump { center: c.clone(), others: others.clone() };
                    comps[l].push(ScalarFn::Scaled(shift, Box::new(bump)));
                }
            }
        }
        let comps = comps.into_iter().map(|mut parts| if parts.len() == 1 { parts.pop().unwrap() } else { ScalarFn::Sum(parts) }).collect();
        VectorFn::components(level, comps)
    }

    /// Either a corrected polynomial field or, above level 1, an interior tensor product of
    /// lower-level members.
    pub fn z_member_any(&mut self, level: usize) -> VectorFn {
        if level >= 2 && self.rng.gen_bool(0.5) {
            let m = self.rng.gen_range(1..level);
            let outer = self.z_member_any(m);
            let inner = self.z_member_any(level - m);
            VectorFn::lift(outer, inner)
        } else {
            self.z_member(level)
        }
    }

    /// Level 0: a scalar field; higher levels: a sum of two rank-one operators.
    pub fn component(&mut self, level: usize) -> OpExpr {
        if level == 0 {
            return OpExpr::Scalar(self.scalar());
        }
        let terms = (0..2)
            .map(|_| {
                let f = self.z_member_any(level);
                let g = self.z_member_any(level);
                OpExpr::RankOne { f, g }
            })
            .collect();
        OpExpr::Sum(terms)
    }

    /// A level-`level` graded element with every component present.
    pub fn element(&mut self, level: usize) -> GradedCoreElement {
        let components = (0..=level).map(|r| Some(self.component(r))).collect();
        GradedCoreElement::new(level, components).expect("levels match by construction")
    }

    /// A graded element whose only component sits at `level`.
    pub fn pure_compact(&mut self, level: usize) -> GradedCoreElement {
        let c = self.component(level);
        GradedCoreElement::single(c, level).expect("levels match by construction")
    }

    /// A random point of the attractor: the image of `seed` under a random word.
    pub fn attractor_point(&mut self, system: &SelfSimilarSystem, word_len: usize) -> Point {
        let mut p = system.seed().clone();
        for _ in 0..word_len {
            let j = self.rng.gen_range(0..system.n_branches());
            p = system.branch(j).apply(&p);
        }
        p
    }
}

/// `|x - p|^2` as a polynomial.
pub fn squared_distance(p: &[f64]) -> ScalarFn {
    let dim = p.len();
    let mut terms = Vec::new();
    let mut constant = 0.0;
    for (k, &pk) in p.iter().enumerate() {
        let mut sq = vec![0; dim];
        sq[k] = 2;
        let mut lin = vec![0; dim];
        lin[k] = 1;
        terms.push((Complex64::new(1.0, 0.0), sq));
        terms.push((Complex64::new(-2.0 * pk, 0.0), lin));
        constant += pk * pk;
    }
    terms.push((Complex64::new(constant, 0.0), vec![0; dim]));
    ScalarFn::Poly(Polynomial::new(terms))
}

fn monomials(dim: usize, max_degree: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        let mut next = Vec::new();
        for m in &out {
            let used: u32 = m.iter().sum();
            for p in 0..=max_degree - used {
                let mut m2 = m.clone();
                m2.push(p);
                next.push(m2);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bimodule::closed_form_defect;
    use crate::ifs::{sierpinski, tent};

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials(1, 2).len(), 3);
        assert_eq!(monomials(2, 2).len(), 6);
    }

    #[test]
    fn generated_members_satisfy_identifications() {
        for sys in [tent(), sierpinski()] {
            let sing = Singularity::compute(&sys).unwrap();
            let mut g = Generator::new(&sys, &sing, 3, 7).unwrap();
            for level in 1..=3 {
                for _ in 0..4 {
                    let f = g.z_member_any(level);
                    let d = closed_form_defect(&sys, &f, g.level_data(level));
                    assert!(d < 1e-12, "{} level {level}: {d}", sys.name());
                }
            }
        }
    }

    #[test]
    fn vanishing_scalar_vanishes_on_branch_points() {
        let sys = sierpinski();
        let sing = Singularity::compute(&sys).unwrap();
        let mut g = Generator::new(&sys, &sing, 1, 3).unwrap();
        let v = g.vanishing_scalar();
        for b in sing.branch_points() {
            assert!(v.eval(&b.point.to_f64()).norm() < 1e-14);
        }
    }
}
