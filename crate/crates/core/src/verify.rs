//! Property batteries over one system, grouped into suites.

use std::collections::BTreeSet;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::One;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::attractor::{hutchinson_measure, invariance_defect, AttractorGrid};
use crate::bimodule::{fiber_basis, inner_product, rank_one, VectorField, POINTWISE_TOLERANCE};
use crate::core_rep::{compact_absorption, pointwise_product, spectral_norm, CMatrix, GradedCoreElement, MatrixField, OpExpr};
use crate::error::{Error, Result};
use crate::field::{EvalSet, Node, ScalarFn, VectorFn};
use crate::ideals::{
    closed_set, descent_levels, descent_violations, ideal_meet, jacobson_closure, orbit_overlaps, primitive_ideals,
    quotient_dimension, ClosedSet, IdealDescriptor, Tag,
};
use crate::ifs::{MultiIndex, SelfSimilarSystem};
use crate::random::{squared_distance, Generator};
use crate::report::serialize_sci;
use crate::scalar::{locate, Point};
use crate::singularity::{
    check_assumption_b, iterated_branch_points_direct, orbit_points, AssumptionBVerdict, LevelData, Singularity,
};
use crate::traces::{discrete_trace, ideal_membership, joint_evaluation_rank, kernel_witness, HutchinsonTrace};

/// Relative tolerance for algebraic identities between float matrices.
pub const ALGEBRAIC_TOLERANCE: f64 = 1e-9;
/// Tolerance for `tau(1) = 1` and for linearity of traces.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;
/// Lower bound for the trace of a separating witness.
pub const SEPARATION_MARGIN: f64 = 1e-3;
/// Size of the entry perturbation that membership checks must detect.
pub const PERTURBATION: f64 = 1e-3;
/// Allowed relative change of sup norms from grid depth `m` to `m + 2`.
pub const STABILIZATION_TOLERANCE: f64 = 1e-3;
/// Number of perturbed fields in the violation battery.
pub const VIOLATION_TRIALS: usize = 20;
/// Largest quotient dimension checked by the rank oracle.
pub const RANK_ORACLE_LIMIT: u64 = 256;

#[derive(Clone, Debug, Serialize)]
pub struct PropertyResult {
    pub property: String,
    #[serde(serialize_with = "serialize_sci")]
    pub max_defect: f64,
    #[serde(serialize_with = "serialize_sci")]
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl PropertyResult {
    pub fn within(property: &str, max_defect: f64, tolerance: f64) -> Self {
        PropertyResult { property: property.to_string(), max_defect, tolerance, pass: max_defect <= tolerance, detail: None }
    }

    /// A count of failures, which must be zero.
    pub fn count(property: &str, failures: usize) -> Self {
        Self::within(property, failures as f64, 0.0)
    }

    pub fn failed(property: &str, why: impl Into<String>) -> Self {
        PropertyResult { property: property.to_string(), max_defect: f64::INFINITY, tolerance: 0.0, pass: false, detail: Some(why.into()) }
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }

    /// Marks the result failed when `ok` is false, keeping the defect.
    pub fn require(mut self, ok: bool) -> Self {
        self.pass &= ok;
        self
    }
}

pub fn all_pass(results: &[PropertyResult]) -> bool {
    results.iter().all(|r| r.pass)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    All,
    Singularity,
    Bimodule,
    CoreRep,
    Ideals,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Singularity => "singularity",
            Suite::Bimodule => "bimodule",
            Suite::CoreRep => "core-rep",
            Suite::Ideals => "ideals",
        }
    }

    fn parts(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::Singularity, Suite::Bimodule, Suite::CoreRep, Suite::Ideals],
            s => vec![s],
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Suite::All),
            "singularity" => Ok(Suite::Singularity),
            "bimodule" => Ok(Suite::Bimodule),
            "core-rep" | "core_rep" => Ok(Suite::CoreRep),
            "ideals" => Ok(Suite::Ideals),
            other => Err(Error::Parse(format!("unknown suite `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    /// Total grid depth `m`; level-n fields are sampled on `grid(m - n)`.
    pub grid_depth: usize,
    pub max_level: usize,
    pub max_ideal_level: usize,
    pub postcritical_depth: usize,
    /// Total depth of the Hutchinson trace approximation.
    pub hutchinson_depth: usize,
    /// Random pairs for the homomorphism battery.
    pub samples: usize,
    /// Random elements for the trace batteries.
    pub trace_samples: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            grid_depth: 10,
            max_level: 3,
            max_ideal_level: 3,
            postcritical_depth: crate::singularity::DEFAULT_POSTCRITICAL_DEPTH,
            hutchinson_depth: 8,
            samples: 50,
            trace_samples: 20,
            seed: 0x5e1f_51a1,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_depth < self.max_level {
            return Err(Error::InvalidElement(format!(
                "grid depth {} is below max level {}",
                self.grid_depth, self.max_level
            )));
        }
        if self.hutchinson_depth < self.max_level {
            return Err(Error::InvalidElement(format!(
                "Hutchinson depth {} is below max level {}",
                self.hutchinson_depth, self.max_level
            )));
        }
        Ok(())
    }
}

/// Shared state for the property batteries of one system.
pub struct Verifier<'a> {
    system: &'a SelfSimilarSystem,
    sing: Singularity,
    verdict: AssumptionBVerdict,
    cfg: VerifyConfig,
    levels: Vec<LevelData>,
    sets: Vec<OnceLock<EvalSet>>,
}

fn rel(defect: f64, scale: f64) -> f64 {
    defect / (1.0 + scale)
}

fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest column length: a lower bound for the spectral norm.
fn column_norm(m: &CMatrix) -> f64 {
    m.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn max_entry(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn vec_max(v: &DVector<Complex64>) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn field_max(f: &VectorField) -> f64 {
    f.values().iter().map(vec_max).fold(0.0, f64::max)
}

fn components_of(f: &VectorFn) -> &[ScalarFn] {
    match f {
        VectorFn::Components { comps, .. } => comps,
        _ => panic!("expected an explicit component field"),
    }
}

impl<'a> Verifier<'a> {
    pub fn new(system: &'a SelfSimilarSystem, cfg: VerifyConfig) -> Result<Self> {
        cfg.validate()?;
        let sing = Singularity::compute(system)?;
        let verdict = check_assumption_b(system, cfg.postcritical_depth);
        let top = cfg.max_level.max(cfg.max_ideal_level) + 1;
        let levels = (0..=top).map(|n| sing.level_data(system, n)).collect::<Result<Vec<_>>>()?;
        let sets = (0..=cfg.max_level).map(|_| OnceLock::new()).collect();
        Ok(Verifier { system, sing, verdict, cfg, levels, sets })
    }

    pub fn singularity(&self) -> &Singularity {
        &self.sing
    }

    pub fn verdict(&self) -> &AssumptionBVerdict {
        &self.verdict
    }

    pub fn config(&self) -> &VerifyConfig {
        &self.cfg
    }

    pub fn run(&self, suite: Suite) -> Vec<PropertyResult> {
        let mut out = Vec::new();
        for s in suite.parts() {
            let part = match s {
                Suite::Singularity => self.singularity_suite(),
                Suite::Bimodule => self.bimodule_suite(),
                Suite::CoreRep => self.core_rep_suite(),
                Suite::Ideals => self.ideals_suite(),
                Suite::All => unreachable!(),
            };
            out.extend(part.into_iter().map(|mut r| {
                r.property = format!("{}/{}", s.name(), r.property);
                r
            }));
        }
        out
    }

    fn generator(&self, salt: u64) -> Generator {
        let top = self.levels.len() - 1;
        Generator::new(self.system, &self.sing, top, self.cfg.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
            .expect("level data computed in the constructor")
    }

    /// `grid(depth)` together with the branch set and the level-n branch points and values.
    pub fn sample_points(&self, n: usize, depth: usize) -> Vec<Point> {
        let mut pts: BTreeSet<Point> = AttractorGrid::generate(self.system, depth).points().iter().cloned().collect();
        pts.extend(self.distinguished(n));
        pts.into_iter().collect()
    }

    fn distinguished(&self, n: usize) -> Vec<Point> {
        let mut pts: BTreeSet<Point> = self.sing.branch_set().into_iter().collect();
        pts.extend(self.levels[n].branch_values());
        pts.extend(self.sing.iterated_branch_points(self.system, n));
        pts.into_iter().collect()
    }

    /// Evaluation set for level-n elements: `grid(m - n)` plus distinguished points.
    fn level_set(&self, n: usize) -> &EvalSet {
        self.sets[n].get_or_init(|| EvalSet::new(self.system, self.sample_points(n, self.cfg.grid_depth - n), n))
    }

    fn value_set(&self, n: usize, depth: usize) -> EvalSet {
        EvalSet::new(self.system, self.levels[n].branch_values(), depth)
    }

    /// Relative identification defect of a closed-form field at the level's branch values.
    fn member_defect(&self, f: &VectorFn) -> f64 {
        let n = f.level();
        if self.levels[n].partitions.is_empty() {
            return 0.0;
        }
        let field = VectorField::sample(f, &self.value_set(n, f.tree_depth()));
        let d = field.identification_defect(&self.levels[n]).expect("level data matches");
        rel(d, field_max(&field))
    }

    // ---------------------------------------------------------------- singularity

    pub fn singularity_suite(&self) -> Vec<PropertyResult> {
        let sys = self.system;
        let mut out = Vec::new();
        let mut gen = self.generator(1);

        let grid = AttractorGrid::generate(sys, self.cfg.grid_depth.min(5));
        let bad = grid
            .points()
            .par_iter()
            .map(|x| sys.branches().iter().filter(|g| sys.left_inverse(&g.apply(x)).ok().as_ref() != Some(x)).count())
            .sum();
        out.push(PropertyResult::count("left_inverse_identity", bad).detail(format!("{} grid points", grid.len())));

        let mut bad = 0;
        for _ in 0..20 {
            let len_u = gen.rng().gen_range(1..4);
            let len_v = gen.rng().gen_range(1..4);
            let n = sys.n_branches();
            let u = MultiIndex::new((0..len_u).map(|_| gen.rng().gen_range(0..n)).collect(), n).expect("letters in range");
            let v = MultiIndex::new((0..len_v).map(|_| gen.rng().gen_range(0..n)).collect(), n).expect("letters in range");
            let uv = sys.compose(&u.concat(&v)).expect("nonempty");
            let cu = sys.compose(&u).expect("nonempty");
            let cv = sys.compose(&v).expect("nonempty");
            if uv != cu.then(&cv) || uv.apply(sys.seed()) != sys.apply_word(&u.concat(&v), sys.seed()) {
                bad += 1;
            }
        }
        out.push(PropertyResult::count("compose_concatenation", bad));

        let (c, c_low) = (sys.contraction_constant(), sys.lower_contraction_constant());
        let coords = grid.coords();
        let mut worst: f64 = 0.0;
        let d = sys.dimension();
        for _ in 0..200 {
            let x = &coords[gen.rng().gen_range(0..coords.len())];
            let y = &coords[gen.rng().gen_range(0..coords.len())];
            let dxy = dist(x, y);
            if dxy == 0.0 {
                continue;
            }
            for g in sys.branches() {
                let (mut gx, mut gy) = (vec![0.0; d], vec![0.0; d]);
                g.apply_f64(x, &mut gx);
                g.apply_f64(y, &mut gy);
                let r = dist(&gx, &gy) / dxy;
                worst = worst.max(r - c).max(c_low - r);
            }
        }
        out.push(PropertyResult::within("contraction_bounds", worst.max(0.0), 1e-12).detail(format!("c = {c:.6}, c' = {c_low:.6}")));

        let mut bad = 0;
        for b in self.sing.branch_points() {
            for n in 0..5 {
                let upper: BTreeSet<Point> = orbit_points(sys, &b.point, n + 1).into_iter().collect();
                let lower: BTreeSet<Point> = orbit_points(sys, &b.point, n).into_iter().collect();
                let mapped: Option<BTreeSet<Point>> = upper.iter().map(|x| sys.left_inverse(x).ok()).collect();
                if mapped.as_ref() != Some(&lower) {
                    bad += 1;
                }
            }
        }
        out.push(PropertyResult::count("orbit_descent", bad));

        let mut bad = 0;
        for n in 1..=3 {
            match iterated_branch_points_direct(sys, n) {
                Ok(direct) if direct == self.sing.iterated_branch_points(sys, n) => {}
                _ => bad += 1,
            }
        }
        out.push(PropertyResult::count("branch_lemma_oracle", bad).detail("levels 1..=3"));

        let mut bad = 0;
        for n in 1..=2 {
            let lo: BTreeSet<Point> = self.levels[n].branch_values().into_iter().collect();
            let hi: BTreeSet<Point> = self.levels[n + 1].branch_values().into_iter().collect();
            if !lo.is_subset(&hi) {
                bad += 1;
            }
        }
        out.push(PropertyResult::count("branch_value_nesting", bad));

        let mut bad = self.sing.branch_points().iter().filter(|b| b.labels.len() < 2).count();
        for part in &self.levels[1].partitions {
            let mut labels: Vec<usize> = part.groups.iter().flat_map(|g| g.labels.iter().cloned()).collect();
            labels.sort_unstable();
            if labels != (0..sys.n_branches()).collect::<Vec<_>>() {
                bad += 1;
            }
        }
        out.push(PropertyResult::count("label_partition", bad));

        let mu = hutchinson_measure(sys, self.cfg.grid_depth.min(8));
        out.push(PropertyResult::count("hutchinson_mass", usize::from(!mu.total().is_one())));

        let a = |x: &[f64]| x.iter().map(|t| t * t + t).sum::<f64>();
        let defects: Vec<f64> = (1..=6).map(|k| invariance_defect(sys, k, a)).collect();
        let rise = defects.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        out.push(PropertyResult::within("invariance_defect_monotone", rise, 1e-15).detail(format!("depth 6 defect {:.3e}", defects[5])));

        let mut bad = 0;
        for k in 0..5 {
            let lo = AttractorGrid::generate(sys, k);
            let hi = AttractorGrid::generate(sys, k + 1);
            bad += lo.points().iter().filter(|p| !hi.contains(p)).count();
        }
        out.push(PropertyResult::count("grid_nesting", bad));

        let v = &self.verdict;
        let detail = format!(
            "left inverse: {}; finite branch set: {}; postcritical disjoint to depth {}: {}; unique collision slot: {}",
            v.left_inverse.pass, v.finite_branch_set.pass, v.postcritical_checked_depth, v.postcritical_disjoint.pass, v.unique_collision_slot.pass
        );
        out.push(PropertyResult::count("assumption_b", usize::from(!v.pass)).detail(detail));
        out
    }

    // ---------------------------------------------------------------- bimodule

    pub fn bimodule_suite(&self) -> Vec<PropertyResult> {
        let sys = self.system;
        let mut gen = self.generator(2);
        let top = self.cfg.max_level.clamp(1, 2);
        let mut pos: f64 = 0.0;
        let mut sesq: f64 = 0.0;
        let mut right: f64 = 0.0;
        let mut unital: f64 = 0.0;
        let mut action_member: f64 = 0.0;
        let mut adj: f64 = 0.0;
        let mut calculus: f64 = 0.0;
        let mut d_member: f64 = 0.0;
        let mut norm_identity: f64 = 0.0;
        let mut not_members = 0;
        for n in 1..=top {
            let depth = (self.cfg.grid_depth - n).min(6);
            let set = EvalSet::new(sys, self.sample_points(n, depth), n);
            let data = &self.levels[n];
            for _ in 0..6 {
                let fs: Vec<VectorFn> = (0..4).map(|_| gen.z_member_any(n)).collect();
                let fields: Vec<VectorField> = fs.iter().map(|f| VectorField::sample(f, &set)).collect();
                let members: Vec<VectorField> = fields
                    .iter()
                    .filter_map(|f| match f.clone().into_member(data) {
                        Ok(m) => Some(m),
                        Err(_) => {
                            not_members += 1;
                            None
                        }
                    })
                    .collect();
                if members.len() < 4 {
                    continue;
                }
                let (f, g, h, u) = (&members[0], &members[1], &members[2], &members[3]);
                let scale = fields.iter().map(field_max).fold(0.0, f64::max).powi(2);

                let ff = inner_product(f, f).expect("same level");
                for z in &ff.values {
                    pos = pos.max(-z.re).max(z.im.abs() / (1.0 + z.re.abs()));
                }

                let (al, be) = (gen.complex(), gen.complex());
                let comb: Vec<DVector<Complex64>> = g.values().iter().zip(h.values()).map(|(x, y)| x * al + y * be).collect();
                let comb = VectorField::from_values(n, set.points().to_vec(), comb);
                let lhs = inner_product(f, &comb).expect("same level");
                let fg = inner_product(f, g).expect("same level");
                let fh = inner_product(f, h).expect("same level");
                let scaled_f = VectorField::from_values(n, set.points().to_vec(), f.values().iter().map(|x| x * al).collect());
                let afg = inner_product(&scaled_f, g).expect("same level");
                for i in 0..set.len() {
                    sesq = sesq.max(rel((lhs.values[i] - al * fg.values[i] - be * fh.values[i]).norm(), 3.0 * scale));
                    sesq = sesq.max(rel((afg.values[i] - al.conj() * fg.values[i]).norm(), 3.0 * scale));
                }

                let ar = gen.scalar();
                let one = ScalarFn::constant(Complex64::new(1.0, 0.0), sys.dimension());
                let fa = VectorField::sample(&VectorFn::action(one.clone(), fs[0].clone(), ar.clone()), &set);
                let ga = VectorField::sample(&VectorFn::action(one.clone(), fs[1].clone(), ar.clone()), &set);
                let lhs = inner_product(&fa, &ga).expect("same level");
                for (i, p) in set.points().iter().enumerate() {
                    let a = ar.eval(&p.to_f64());
                    right = right.max(rel((lhs.values[i] - a.conj() * fg.values[i] * a).norm(), scale * (1.0 + a.norm_sqr())));
                }

                let same = VectorField::sample(&VectorFn::action(one.clone(), fs[0].clone(), one.clone()), &set);
                for (x, y) in same.values().iter().zip(f.values()) {
                    unital = unital.max(vec_max(&(x - y)));
                }

                let al_fn = gen.scalar();
                action_member = action_member.max(self.member_defect(&VectorFn::action(al_fn, fs[2].clone(), ar.clone())));

                let fg_op = rank_one(f, g).expect("members");
                let gf_op = rank_one(g, f).expect("members");
                for (x, y) in fg_op.values().iter().zip(gf_op.values()) {
                    adj = adj.max(max_entry(&(x.adjoint() - y)));
                }

                let hu_op = rank_one(h, u).expect("members");
                let gh = inner_product(g, h).expect("same level");
                let f_gh: Vec<DVector<Complex64>> = f.values().iter().zip(&gh.values).map(|(x, s)| x * *s).collect();
                let f_gh = VectorField::from_values(n, set.points().to_vec(), f_gh).into_member(data);
                match f_gh {
                    Ok(f_gh) => {
                        let rhs = rank_one(&f_gh, u).expect("members");
                        for (i, r) in rhs.values().iter().enumerate() {
                            let prod = &fg_op.values()[i] * &hu_op.values()[i];
                            calculus = calculus.max(rel(max_entry(&(prod - r)), scale * scale));
                        }
                    }
                    Err(_) => calculus = f64::INFINITY,
                }

                d_member = d_member.max(rel(fg_op.identification_defect(data).expect("level"), fg_op.max_abs()));

                let ff_op = rank_one(f, f).expect("members");
                for (m, z) in ff_op.values().iter().zip(&ff.values) {
                    norm_identity = norm_identity.max(rel((spectral_norm(m) - z.re).abs(), z.re));
                }
            }
        }
        let mut out = vec![
            PropertyResult::count("generated_fields_are_members", not_members),
            PropertyResult::within("inner_product_positivity", pos, POINTWISE_TOLERANCE),
            PropertyResult::within("sesquilinearity", sesq, POINTWISE_TOLERANCE),
            PropertyResult::within("right_action_identity", right, POINTWISE_TOLERANCE),
            PropertyResult::within("unital_action", unital, 0.0),
            PropertyResult::within("actions_preserve_membership", action_member, POINTWISE_TOLERANCE),
            PropertyResult::within("rank_one_adjoint", adj, 0.0),
            PropertyResult::within("rank_one_calculus", calculus, ALGEBRAIC_TOLERANCE),
            PropertyResult::within("rank_one_membership", d_member, POINTWISE_TOLERANCE),
            PropertyResult::within("rank_one_norm", norm_identity, POINTWISE_TOLERANCE),
        ];
        out.extend(self.fiber_properties(top));
        out.extend(self.lift_properties(&mut gen));
        out
    }

    fn fiber_properties(&self, top: usize) -> Vec<PropertyResult> {
        let sys = self.system;
        let mut gram: f64 = 0.0;
        let mut law = 0;
        for n in 1..=top {
            let size = sys.n_branches().pow(n as u32);
            let values: BTreeSet<Point> = self.levels[n].branch_values().into_iter().collect();
            let generic: Vec<Point> = AttractorGrid::generate(sys, 3).points().iter().filter(|p| !values.contains(p)).take(12).cloned().collect();
            for c in values.iter().chain(&generic) {
                let basis = fiber_basis(sys, c, n);
                let k = basis.vectors.len();
                let g = DMatrix::from_fn(k, k, |i, j| basis.vectors[i].dot(&basis.vectors[j]));
                gram = gram.max((g - DMatrix::identity(k, k)).abs().max());
                let at_value = values.contains(c);
                if at_value != (basis.dimension < size) {
                    law += 1;
                }
                let part = crate::singularity::fiber_partition(sys, c, n);
                let mut labels: Vec<usize> = part.groups.iter().flat_map(|g| g.labels.iter().cloned()).collect();
                labels.sort_unstable();
                if labels != (0..size).collect::<Vec<_>>() || part.groups.len() != basis.dimension {
                    law += 1;
                }
            }
        }
        vec![
            PropertyResult::within("fiber_basis_orthonormal", gram, 1e-15),
            PropertyResult::count("fiber_dimension_law", law),
        ]
    }

    fn lift_properties(&self, gen: &mut Generator) -> Vec<PropertyResult> {
        let sys = self.system;
        let depth = self.cfg.grid_depth.saturating_sub(2).min(5);
        let set2 = EvalSet::new(sys, self.sample_points(2, depth), 2);
        let mut ip: f64 = 0.0;
        let mut member: f64 = 0.0;
        let mut constants: f64 = 0.0;
        let mut assoc: f64 = 0.0;
        for _ in 0..6 {
            let (f, f2) = (gen.z_member(1), gen.z_member(1));
            let (g, g2) = (gen.z_member_any(1), gen.z_member_any(1));
            let lhs = inner_product(
                &VectorField::sample(&VectorFn::lift(f.clone(), g.clone()), &set2),
                &VectorField::sample(&VectorFn::lift(f2.clone(), g2.clone()), &set2),
            )
            .expect("same level");
            let ff: Vec<ScalarFn> = components_of(&f)
                .iter()
                .zip(components_of(&f2))
                .map(|(a, b)| ScalarFn::Product(vec![ScalarFn::Conj(Box::new(a.clone())), b.clone()]))
                .collect();
            let one = ScalarFn::constant(Complex64::new(1.0, 0.0), sys.dimension());
            let acted = VectorFn::action(ScalarFn::Sum(ff), g2.clone(), one);
            let rhs = inner_product(&VectorField::sample(&g, &set2), &VectorField::sample(&acted, &set2)).expect("same level");
            for (x, y) in lhs.values.iter().zip(&rhs.values) {
                ip = ip.max(rel((x - y).norm(), x.norm()));
            }
            member = member.max(self.member_defect(&VectorFn::lift(f.clone(), g.clone())));
            if self.cfg.max_level >= 3 {
                member = member.max(self.member_defect(&VectorFn::lift(gen.z_member_any(2), g.clone())));
                member = member.max(self.member_defect(&VectorFn::lift(f.clone(), gen.z_member_any(2))));
            }

            let h = gen.z_member_any(1);
            let tree_pts: Vec<Point> = set2.points().iter().take(40).cloned().collect();
            let set3 = EvalSet::new(sys, tree_pts, 3);
            let a = VectorField::sample(&VectorFn::lift(VectorFn::lift(f.clone(), g.clone()), h.clone()), &set3);
            let b = VectorField::sample(&VectorFn::lift(f.clone(), VectorFn::lift(g.clone(), h.clone())), &set3);
            for (x, y) in a.values().iter().zip(b.values()) {
                assoc = assoc.max(rel(vec_max(&(x - y)), vec_max(x)));
            }

            let n = sys.n_branches();
            let (c1, c2) = (gen.complex(), gen.complex());
            let k1 = VectorFn::components(1, (0..n).map(|i| ScalarFn::constant(c1 * (i + 1) as f64, sys.dimension())).collect());
            let k2 = VectorFn::components(1, (0..n).map(|j| ScalarFn::constant(c2 * (j + 2) as f64, sys.dimension())).collect());
            let lifted = VectorField::sample(&VectorFn::lift(k1, k2), &set2);
            for v in lifted.values() {
                for i in 0..n {
                    for j in 0..n {
                        let want = c1 * (i + 1) as f64 * c2 * (j + 2) as f64;
                        constants = constants.max(rel((v[i + n * j] - want).norm(), want.norm()));
                    }
                }
            }
        }
        vec![
            PropertyResult::within("tensor_lift_inner_product", ip, POINTWISE_TOLERANCE),
            PropertyResult::within("tensor_lift_membership", member, POINTWISE_TOLERANCE),
            PropertyResult::within("tensor_lift_associativity", assoc, POINTWISE_TOLERANCE),
            PropertyResult::within("tensor_lift_constants", constants, POINTWISE_TOLERANCE),
        ]
    }

    // ---------------------------------------------------------------- core representation

    pub fn core_rep_suite(&self) -> Vec<PropertyResult> {
        let mut out = self.homomorphism_properties();
        out.extend(self.graded_identities());
        out.extend(self.commuting_diagram());
        out.extend(self.d_membership_properties());
        out.extend(self.e_preservation());
        out.extend(self.absorption_properties());
        out.extend(self.isometry_proxy());
        out
    }

    /// `pi(ST) = pi(S) pi(T)` (relative to `1 + |S||T|`) and `pi(S*) = pi(S)*` on random pairs.
    ///
    /// The defect is measured in the Frobenius norm and the norms of `S`, `T` by column lengths,
    /// which bound the spectral quantities from above and below respectively.
    pub fn homomorphism_properties(&self) -> Vec<PropertyResult> {
        let mut gen = self.generator(3);
        let mut hom: f64 = 0.0;
        let mut adj: f64 = 0.0;
        let levels = self.cfg.max_level + 1;
        for i in 0..self.cfg.samples {
            let n = i % levels;
            let s = gen.element(n);
            let t = gen.element(n);
            let st = s.multiply(&t).expect("same level");
            let s_adj = s.adjoint();
            let set = self.level_set(n);
            let (d, ns, nt, a) = set
                .trees()
                .par_iter()
                .map(|tree| {
                    let ps = s.pi_at(tree, Node::ROOT);
                    let pt = t.pi_at(tree, Node::ROOT);
                    let pst = st.pi_at(tree, Node::ROOT);
                    let pa = s_adj.pi_at(tree, Node::ROOT);
                    let d = frobenius(&(pst - &ps * &pt));
                    let a = max_entry(&(pa - ps.adjoint()));
                    (d, column_norm(&ps), column_norm(&pt), a)
                })
                .reduce(|| (0.0, 0.0, 0.0, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1), x.2.max(y.2), x.3.max(y.3)));
            hom = hom.max(d / (1.0 + ns * nt));
            adj = adj.max(a);
        }
        let detail = format!("{} pairs, levels 0..={}, grid depth {}", self.cfg.samples, self.cfg.max_level, self.cfg.grid_depth);
        vec![
            PropertyResult::within("homomorphism", hom, ALGEBRAIC_TOLERANCE).detail(detail),
            PropertyResult::within("adjoint_exact", adj, 0.0),
        ]
    }

    fn graded_identities(&self) -> Vec<PropertyResult> {
        let mut gen = self.generator(4);
        let mut unit: f64 = 0.0;
        let mut star: f64 = 0.0;
        let dim = self.system.dimension();
        for i in 0..6 {
            let n = i % self.cfg.max_level.min(2).max(1);
            let s = gen.element(n);
            let t = gen.element(n);
            let set = EvalSet::new(self.system, self.sample_points(n, 3), n);
            let one = GradedCoreElement::one(n, dim);
            let t1 = t.multiply(&one).expect("same level");
            let lhs = t.multiply(&s).expect("same level").adjoint();
            let rhs = s.adjoint().multiply(&t.adjoint()).expect("same level");
            for tree in set.trees() {
                let pt = t.pi_at(tree, Node::ROOT);
                unit = unit.max(max_entry(&(t1.pi_at(tree, Node::ROOT) - &pt)));
                let l = lhs.pi_at(tree, Node::ROOT);
                star = star.max(rel(max_entry(&(&l - rhs.pi_at(tree, Node::ROOT))), max_entry(&l)));
            }
        }
        vec![
            PropertyResult::within("unit_law", unit, POINTWISE_TOLERANCE),
            PropertyResult::within("product_adjoint", star, ALGEBRAIC_TOLERANCE),
        ]
    }

    /// `pi_{n+1}(T + 0)` against the block-diagonal embedding of the sampled `pi_n(T)`.
    pub fn commuting_diagram(&self) -> Vec<PropertyResult> {
        let mut gen = self.generator(5);
        let mut worst: f64 = 0.0;
        let mut compared = 0;
        for n in 0..self.cfg.max_level {
            for _ in 0..3 {
                let t = gen.element(n);
                let low = t.pi(self.level_set(n));
                let high_set = self.level_set(n + 1);
                let at: Vec<Point> = high_set
                    .points()
                    .iter()
                    .filter(|x| self.system.branches().iter().all(|g| locate(low.points(), &g.apply(x)).is_some()))
                    .cloned()
                    .collect();
                let embedded = low.embed_sampled(self.system, n + 1, &at).expect("images sampled");
                let padded = t.padded(n + 1);
                for (x, e) in at.iter().zip(embedded.values()) {
                    let i = high_set.index_of(x).expect("point in set");
                    let direct = padded.pi_at(&high_set.trees()[i], Node::ROOT);
                    worst = worst.max(max_entry(&(direct - e)));
                    compared += 1;
                }
            }
        }
        vec![PropertyResult::within("commuting_diagram", worst, 0.0)
            .detail(format!("{compared} mapped points"))
            .require(compared > 0 || self.cfg.max_level == 0)]
    }

    /// Rank-one operators pass the identification equations; perturbed ones fail.
    pub fn d_membership_properties(&self) -> Vec<PropertyResult> {
        let mut gen = self.generator(6);
        let mut worst: f64 = 0.0;
        let top = self.cfg.max_level.max(1);
        for i in 0..self.cfg.samples.max(top) {
            let n = 1 + i % top;
            let op = gen.component(n);
            let set = EvalSet::new(self.system, self.distinguished(n), op.tree_depth());
            let m = MatrixField::sample(&op, &set);
            worst = worst.max(rel(m.identification_defect(&self.levels[n]).expect("level"), m.max_abs()));
        }
        let mut out = vec![PropertyResult::within("rank_one_d_membership", worst, POINTWISE_TOLERANCE)];

        let constrained: Vec<usize> = (1..=top)
            .filter(|&n| self.levels[n].partitions.iter().any(|p| p.constraints().next().is_some()))
            .collect();
        if constrained.is_empty() {
            out.push(PropertyResult::count("perturbation_detected", 0).detail("no identification equations"));
            return out;
        }
        let mut missed = 0;
        for k in 0..VIOLATION_TRIALS {
            let n = constrained[k % constrained.len()];
            let data = &self.levels[n];
            let op = gen.component(n);
            let set = EvalSet::new(self.system, self.distinguished(n), op.tree_depth());
            let mut m = MatrixField::sample(&op, &set);
            let parts: Vec<_> = data.partitions.iter().filter(|p| p.constraints().next().is_some()).collect();
            let part = parts[gen.rng().gen_range(0..parts.len())];
            let groups: Vec<_> = part.constraints().collect();
            let group = groups[gen.rng().gen_range(0..groups.len())];
            let row = group.labels[gen.rng().gen_range(0..group.labels.len())];
            let col = gen.rng().gen_range(0..data.size());
            let value = m.value_at_mut(&part.value).expect("branch value sampled");
            if gen.rng().gen_bool(0.5) {
                value[(row, col)] += Complex64::new(PERTURBATION, 0.0);
            } else {
                value[(col, row)] += Complex64::new(0.0, PERTURBATION);
            }
            if m.d_membership(data) {
                missed += 1;
            }
        }
        out.push(PropertyResult::count("perturbation_detected", missed).detail(format!("{VIOLATION_TRIALS} perturbations of size {PERTURBATION:e}")));
        out
    }

    /// `pi_n(T)` maps module members to module members.
    pub fn e_preservation(&self) -> Vec<PropertyResult> {
        let mut gen = self.generator(7);
        let mut worst: f64 = 0.0;
        for n in 1..=self.cfg.max_level {
            if self.levels[n].partitions.is_empty() {
                continue;
            }
            for _ in 0..5 {
                let t = gen.element(n);
                let f = gen.z_member_any(n);
                let set = self.value_set(n, n);
                let pt = t.pi(&set);
                let fv = VectorField::sample(&f, &set);
                let values: Vec<DVector<Complex64>> = pt.values().iter().zip(fv.values()).map(|(m, v)| m * v).collect();
                let scale = pt.sup_norm() * field_max(&fv);
                let image = VectorField::from_values(n, set.points().to_vec(), values);
                worst = worst.max(rel(image.identification_defect(&self.levels[n]).expect("level"), scale));
            }
        }
        vec![PropertyResult::within("e_preservation", worst, ALGEBRAIC_TOLERANCE)]
    }

    /// Compacts multiplied by fields vanishing on the branch set: vanishing at branch points,
    /// membership one level up, and an unchanged image.
    pub fn absorption_properties(&self) -> Vec<PropertyResult> {
        let mut gen = self.generator(8);
        let mut vanish: f64 = 0.0;
        let mut member: f64 = 0.0;
        let mut invariance: f64 = 0.0;
        let branch = self.sing.branch_set();
        for n in 0..self.cfg.max_level {
            for _ in 0..3 {
                let v = gen.vanishing_scalar();
                let t = gen.pure_compact(n);
                let tn = t.component(n).expect("pure compact").clone();
                let tv = OpExpr::Pointwise(v.clone(), Box::new(tn.clone()));
                if !branch.is_empty() {
                    let set = EvalSet::new(self.system, branch.clone(), tv.tree_depth());
                    let m = MatrixField::sample(&tv, &set);
                    vanish = vanish.max(m.max_abs());
                }
                let up = tv.clone().embed(n + 1).expect("higher level");
                let set = EvalSet::new(self.system, self.distinguished(n + 1), up.tree_depth());
                let m = MatrixField::sample(&up, &set);
                member = member.max(rel(m.identification_defect(&self.levels[n + 1]).expect("level"), m.max_abs()));

                let e = gen.element(n);
                let absorbed = match compact_absorption(&self.sing, &e, &v) {
                    Ok(a) => a,
                    Err(_) => {
                        invariance = f64::INFINITY;
                        continue;
                    }
                };
                let before = pointwise_product(&e, &v).padded(n + 1);
                let set = self.level_set(n + 1);
                let d = set
                    .trees()
                    .par_iter()
                    .map(|tree| {
                        let a = before.pi_at(tree, Node::ROOT);
                        let b = absorbed.pi_at(tree, Node::ROOT);
                        rel(frobenius(&(&a - b)), frobenius(&a))
                    })
                    .reduce(|| 0.0, f64::max);
                invariance = invariance.max(d);
            }
        }
        vec![
            PropertyResult::within("intersection_vanishing", vanish, ALGEBRAIC_TOLERANCE),
            PropertyResult::within("absorbed_d_membership", member, POINTWISE_TOLERANCE),
            PropertyResult::within("absorption_invariance", invariance, ALGEBRAIC_TOLERANCE),
        ]
    }

    /// Sup norms grow under grid refinement and settle from depth `m - n - 2` to `m - n`.
    pub fn isometry_proxy(&self) -> Vec<PropertyResult> {
        let mut gen = self.generator(9);
        let mut change: f64 = 0.0;
        let mut worst_level = 0;
        let mut drop: f64 = 0.0;
        for n in 0..=self.cfg.max_level {
            let top = self.cfg.grid_depth - n;
            if top < 2 {
                continue;
            }
            let sets: Vec<EvalSet> = (top - 2..top).map(|m| EvalSet::new(self.system, self.sample_points(n, m), n)).collect();
            for _ in 0..2 {
                let t = gen.element(n);
                let mut norms: Vec<f64> = sets.iter().map(|s| t.pi(s).sup_norm()).collect();
                norms.push(t.pi(self.level_set(n)).sup_norm());
                for w in norms.windows(2) {
                    drop = drop.max(w[0] - w[1]);
                }
                let c = (norms[2] - norms[0]) / norms[2].max(f64::MIN_POSITIVE);
                if c > change {
                    change = c;
                    worst_level = n;
                }
            }
        }
        vec![
            PropertyResult::within("sup_norm_monotone", drop.max(0.0), 0.0),
            PropertyResult::within("sup_norm_stabilization", change, STABILIZATION_TOLERANCE)
                .detail(format!("largest change at level {worst_level}, grid depth {}", self.cfg.grid_depth)),
        ]
    }

    // ---------------------------------------------------------------- ideals and traces

    fn tags(&self) -> Vec<Tag> {
        let mut out = Vec::new();
        for b in self.sing.branch_points() {
            for n in 0..=self.cfg.max_ideal_level {
                out.push(Tag::new(b.point.clone(), n));
            }
        }
        out
    }

    pub fn ideals_suite(&self) -> Vec<PropertyResult> {
        if !self.verdict.pass {
            return vec![PropertyResult::failed("assumption_b", "classification requires Assumption B")];
        }
        let mut out = self.trace_axioms();
        out.extend(self.hutchinson_properties());
        out.extend(self.quotient_properties());
        out.extend(self.kernel_separation());
        out.extend(self.lattice_properties());
        out
    }

    /// Linearity, positivity, traciality and normalization of every discrete trace and of the
    /// Hutchinson trace; vanishing of discrete traces above their level.
    pub fn trace_axioms(&self) -> Vec<PropertyResult> {
        let sys = self.system;
        let tags = self.tags();
        let hutch = HutchinsonTrace::new(sys, self.cfg.hutchinson_depth);
        let mut gen = self.generator(10);
        let top = self.cfg.max_level.min(3);
        let (mut lin, mut pos, mut trac, mut norm, mut high, mut functional) = (0f64, 0f64, 0f64, 0f64, 0f64, 0f64);
        let dim = sys.dimension();
        for n in 0..=top {
            let one = GradedCoreElement::one(n, dim);
            for t in &tags {
                norm = norm.max((discrete_trace(sys, &self.sing, &t.base, t.level, &one).expect("tag") - 1.0).norm());
            }
            norm = norm.max((hutch.eval(&one).expect("depth") - 1.0).norm());
        }
        for i in 0..self.cfg.trace_samples {
            let n = i % (top + 1);
            let s = gen.element(n);
            let t = gen.element(n);
            let (al, be) = (gen.complex(), gen.complex());
            let comb = s.scale(al).add(&t.scale(be)).expect("same level");
            let ts = t.multiply(&s).expect("same level");
            let st = s.multiply(&t).expect("same level");
            let tt = t.adjoint().multiply(&t).expect("same level");
            let mut traces: Vec<Box<dyn Fn(&GradedCoreElement) -> Complex64 + Sync + '_>> = Vec::new();
            for tag in &tags {
                traces.push(Box::new(move |e: &GradedCoreElement| discrete_trace(sys, &self.sing, &tag.base, tag.level, e).expect("tag")));
            }
            traces.push(Box::new(|e: &GradedCoreElement| hutch.eval(e).expect("depth")));
            for tau in &traces {
                let (ts_, tt_) = (tau(&s), tau(&t));
                lin = lin.max(rel((tau(&comb) - al * ts_ - be * tt_).norm(), (al * ts_).norm() + (be * tt_).norm()));
                let p = tau(&tt);
                pos = pos.max(-p.re).max(p.im.abs() / (1.0 + p.re.abs()));
                let a = tau(&st);
                trac = trac.max(rel((a - tau(&ts)).norm(), a.norm()));
            }
            for tag in &tags {
                let cut = s.truncated(tag.level.min(n)).padded(tag.level);
                let set = EvalSet::new(sys, vec![tag.base.clone()], cut.tree_depth());
                let direct = cut.pi(&set).values()[0].trace() / sys.n_branches().pow(tag.level as u32) as f64;
                let via = discrete_trace(sys, &self.sing, &tag.base, tag.level, &s).expect("tag");
                functional = functional.max((direct - via).norm());
                if tag.level < self.cfg.max_level {
                    let level = gen.rng().gen_range(tag.level + 1..=self.cfg.max_level);
                    let compact = gen.pure_compact(level);
                    high = high.max(discrete_trace(sys, &self.sing, &tag.base, tag.level, &compact).expect("tag").norm());
                }
            }
        }
        let detail = format!("{} discrete traces and the depth-{} Hutchinson trace", tags.len(), self.cfg.hutchinson_depth);
        vec![
            PropertyResult::within("trace_normalization", norm, NORMALIZATION_TOLERANCE).detail(detail),
            PropertyResult::within("trace_linearity", lin, NORMALIZATION_TOLERANCE),
            PropertyResult::within("trace_positivity", pos, ALGEBRAIC_TOLERANCE),
            PropertyResult::within("trace_traciality", trac, ALGEBRAIC_TOLERANCE),
            PropertyResult::within("trace_vanishes_above_level", high, 0.0),
            PropertyResult::within("trace_matches_quotient_functional", functional, 0.0),
        ]
    }

    /// Level consistency and block-permutation invariance of the Hutchinson trace.
    pub fn hutchinson_properties(&self) -> Vec<PropertyResult> {
        let sys = self.system;
        let hutch = HutchinsonTrace::new(sys, self.cfg.hutchinson_depth);
        let mut gen = self.generator(11);
        let top = self.cfg.max_level.min(self.cfg.hutchinson_depth - 1);
        let mut consistency: f64 = 0.0;
        for i in 0..self.cfg.trace_samples {
            let n = i % (top + 1);
            let t = gen.element(n);
            let a = hutch.eval(&t).expect("depth");
            let b = hutch.eval(&t.padded(n + 1)).expect("depth");
            consistency = consistency.max((a - b).norm());
        }
        let mut perm: f64 = 0.0;
        let n_br = sys.n_branches();
        let shift = CMatrix::from_fn(n_br, n_br, |i, j| if (j + 1) % n_br == i { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
        let u = GradedCoreElement::single(OpExpr::Constant { level: 1, value: shift }, 1).expect("level 1");
        for _ in 0..5 {
            let t = gen.element(1);
            let conj = u.multiply(&t).and_then(|x| x.multiply(&u.adjoint())).expect("same level");
            let a = hutch.eval(&t).expect("depth");
            perm = perm.max(rel((hutch.eval(&conj).expect("depth") - a).norm(), a.norm()));
        }
        vec![
            PropertyResult::within("hutchinson_level_consistency", consistency, ALGEBRAIC_TOLERANCE)
                .detail(format!("{} elements, depth {}", self.cfg.trace_samples, self.cfg.hutchinson_depth)),
            PropertyResult::within("hutchinson_permutation_invariance", perm, ALGEBRAIC_TOLERANCE),
        ]
    }

    /// Quotient dimensions against the numerical rank of joint evaluation at the tags.
    pub fn quotient_properties(&self) -> Vec<PropertyResult> {
        let sys = self.system;
        let mut bad = 0;
        let mut checked = Vec::new();
        let mut tags = self.tags();
        let pair: Vec<Tag> = tags.iter().filter(|t| t.level <= 1).take(2).cloned().collect();
        tags.retain(|t| (sys.n_branches() as u64).pow(2 * t.level as u32) <= RANK_ORACLE_LIMIT);
        let mut sets: Vec<Vec<Tag>> = tags.into_iter().map(|t| vec![t]).collect();
        if pair.len() == 2 {
            sets.push(pair);
        }
        for (k, set) in sets.iter().enumerate() {
            let d = quotient_dimension(sys, &IdealDescriptor::from_tags(set.iter().cloned())).expect("orbit union");
            let rank = joint_evaluation_rank(sys, &self.sing, set, d as usize + 8, self.cfg.seed ^ k as u64);
            if rank.ok() != Some(d as usize) {
                bad += 1;
            }
            checked.push(format!("{}:{d}", set.iter().map(Tag::to_string).collect::<Vec<_>>().join("+")));
        }
        vec![PropertyResult::count("quotient_dimension_rank", bad).detail(checked.join(" "))]
    }

    /// For every ordered pair of distinct tags, a witness in one trace kernel but not the other.
    pub fn kernel_separation(&self) -> Vec<PropertyResult> {
        let sys = self.system;
        let tags = self.tags();
        let mut own: f64 = 0.0;
        let mut margin = f64::INFINITY;
        let mut failures = 0;
        for a in &tags {
            for b in &tags {
                if a == b {
                    continue;
                }
                let Ok(w) = kernel_witness(sys, &self.sing, a, b) else {
                    failures += 1;
                    continue;
                };
                let ww = w.adjoint().multiply(&w).expect("same level");
                own = own.max(discrete_trace(sys, &self.sing, &a.base, a.level, &ww).expect("tag").norm());
                margin = margin.min(discrete_trace(sys, &self.sing, &b.base, b.level, &ww).expect("tag").re);
            }
        }
        let ok = failures == 0 && (tags.len() < 2 || margin > SEPARATION_MARGIN);
        vec![PropertyResult::within("kernel_separation", own, NORMALIZATION_TOLERANCE)
            .require(ok)
            .detail(format!("{} ordered pairs, smallest separating trace {margin:.6e}", tags.len() * tags.len().saturating_sub(1)))]
    }

    /// Descent, classification soundness, closure, membership sanity and tag disjointness.
    pub fn lattice_properties(&self) -> Vec<PropertyResult> {
        let sys = self.system;
        let sing = &self.sing;
        let prims = match primitive_ideals(sing, &self.verdict, self.cfg.max_ideal_level) {
            Ok(p) => p,
            Err(e) => return vec![PropertyResult::failed("primitive_ideals", e.to_string())],
        };
        let mut out = Vec::new();
        let expected = 1 + sing.branch_points().len() * (self.cfg.max_ideal_level + 1);
        out.push(PropertyResult::count("primitive_count", prims.len().abs_diff(expected)));

        let mut bad = 0;
        for t in self.tags() {
            match descent_levels(sys, sing, &t).and_then(|lv| descent_violations(sys, sing, &lv)) {
                Ok(v) => bad += v.len(),
                Err(_) => bad += 1,
            }
        }
        out.push(PropertyResult::count("descent_consistency", bad));

        let mut bad = 0;
        let mut seen: Vec<ClosedSet> = Vec::new();
        for p in &prims {
            let Ok(cs) = closed_set(sys, sing, p) else {
                bad += 1;
                continue;
            };
            let sound = match (p, &cs) {
                (IdealDescriptor::Zero, ClosedSet::Whole) => true,
                (IdealDescriptor::OrbitUnion(tags), ClosedSet::Points(pts)) => {
                    let union: BTreeSet<Point> = tags.iter().flat_map(|t| orbit_points(sys, &t.base, t.level)).collect();
                    &union == pts && !pts.is_empty()
                }
                _ => false,
            };
            if !sound || seen.contains(&cs) {
                bad += 1;
            }
            seen.push(cs);
        }
        out.push(PropertyResult::count("classification_soundness", bad));

        let mut bad = 0;
        match jacobson_closure(sys, sing, &prims, &[IdealDescriptor::Zero]) {
            Ok(c) if c == prims => {}
            _ => bad += 1,
        }
        for p in &prims[1..] {
            match jacobson_closure(sys, sing, &prims, std::slice::from_ref(p)) {
                Ok(c) if c == vec![p.clone()] => {}
                _ => bad += 1,
            }
        }
        if jacobson_closure(sys, sing, &prims, &prims).ok().as_ref() != Some(&prims) {
            bad += 1;
        }
        out.push(PropertyResult::count("jacobson_closure", bad));

        let mut bad = 0;
        let dim = sys.dimension();
        let zero = GradedCoreElement::zero(1);
        let one = GradedCoreElement::one(1, dim);
        for p in &prims {
            if !matches!(ideal_membership(sys, sing, p, &zero, NORMALIZATION_TOLERANCE, 4), Ok(true)) {
                bad += 1;
            }
            if !matches!(ideal_membership(sys, sing, p, &one, NORMALIZATION_TOLERANCE, 4), Ok(false)) {
                bad += 1;
            }
        }
        for b in sing.branch_points() {
            let d = IdealDescriptor::orbit(b.point.clone(), 0);
            let a = GradedCoreElement::single(OpExpr::Scalar(squared_distance(&b.point.to_f64())), 0).expect("level 0");
            if !matches!(ideal_membership(sys, sing, &d, &a, NORMALIZATION_TOLERANCE, 4), Ok(true)) {
                bad += 1;
            }
        }
        out.push(PropertyResult::count("ideal_membership_sanity", bad));

        let all = ideal_meet(&prims[1..]);
        let overlaps = all.tags().map_or(0, |t| orbit_overlaps(sys, t).len());
        out.push(PropertyResult::count("orbit_tags_disjoint", overlaps));
        out
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Runs `suite` with `cfg`; systems without a finite branch set fail a single property.
pub fn verify(system: &SelfSimilarSystem, suite: Suite, cfg: VerifyConfig) -> Result<Vec<PropertyResult>> {
    cfg.validate()?;
    match Verifier::new(system, cfg) {
        Ok(v) => Ok(v.run(suite)),
        Err(e) => Ok(vec![PropertyResult::failed("singularity/branch_set", e.to_string())]),
    }
}
