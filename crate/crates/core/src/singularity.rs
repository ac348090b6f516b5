//! Branch values, branch points, label sets, orbit sets and the Assumption B check.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::attractor::AttractorGrid;
use crate::error::{Error, Result};
use crate::ifs::{AffineMap, MultiIndex, SelfSimilarSystem};
use crate::linsolve::{self, Solution};
use crate::scalar::{Point, Scalar};

pub const DEFAULT_POSTCRITICAL_DEPTH: usize = 8;
const LEFT_INVERSE_GRID_DEPTH: usize = 4;
const SLOT_CHECK_LEVEL: usize = 2;

/// One branch point `b` with `c = h(b)`, its index `e_b` and sorted 0-based labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchPoint {
    pub point: Point,
    pub value: Point,
    pub labels: Vec<usize>,
}

impl BranchPoint {
    pub fn index(&self) -> usize {
        self.labels.len()
    }
}

/// The preimages of `value` under the level-n component maps, grouped by image point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberPartition {
    pub value: Point,
    pub groups: Vec<PreimageGroup>,
}

/// Flat level-n indices `i` with `g_i(value) = point`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreimageGroup {
    pub point: Point,
    pub labels: Vec<usize>,
}

impl FiberPartition {
    /// Groups with at least two labels: the identification constraints at `value`.
    pub fn constraints(&self) -> impl Iterator<Item = &PreimageGroup> {
        self.groups.iter().filter(|g| g.labels.len() >= 2)
    }
}

/// Branch structure of a system: exact sets `B`, `C` and label data.
#[derive(Clone, Debug)]
pub struct Singularity {
    n_branches: usize,
    branch_values: Vec<Point>,
    branch_points: Vec<BranchPoint>,
}

fn subtract_maps(a: &AffineMap, b: &AffineMap) -> (Vec<Vec<Scalar>>, Vec<Scalar>) {
    let lhs = a
        .matrix()
        .iter()
        .zip(b.matrix())
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect())
        .collect();
    let rhs = b.offset().iter().zip(a.offset()).map(|(x, y)| x - y).collect();
    (lhs, rhs)
}

/// Points `c` in `K` with `f(c) = g(c)`; `Err` when the solution set is not a single point.
fn collision(system: &SelfSimilarSystem, f: &AffineMap, g: &AffineMap, label: &str) -> Result<Option<Point>> {
    let (lhs, rhs) = subtract_maps(f, g);
    match linsolve::solve(&lhs, &rhs) {
        Solution::Unique(c) => {
            let c = Point(c);
            Ok(system.contains(&c).then_some(c))
        }
        Solution::Inconsistent => Ok(None),
        Solution::Family(_) if f == g => Err(Error::InvalidSystem(format!("{label} are identical"))),
        Solution::Family(dim) => Err(Error::AssumptionB(format!(
            "{label} collide along an affine subspace of dimension {dim}"
        ))),
    }
}

/// The set `C` of points where two distinct branches agree, sorted.
pub fn branch_values(system: &SelfSimilarSystem) -> Result<Vec<Point>> {
    Ok(Singularity::compute(system)?.branch_values)
}

/// Computes `B`, `C`, branch indices and labels.
pub fn branch_points(system: &SelfSimilarSystem) -> Result<Singularity> {
    Singularity::compute(system)
}

impl Singularity {
    pub fn compute(system: &SelfSimilarSystem) -> Result<Self> {
        let n = system.n_branches();
        let mut values = BTreeSet::new();
        for i in 0..n {
            for j in i + 1..n {
                let label = format!("branches {} and {}", i + 1, j + 1);
                if let Some(c) = collision(system, system.branch(i), system.branch(j), &label)? {
                    values.insert(c);
                }
            }
        }
        let branch_values: Vec<Point> = values.into_iter().collect();
        let mut points: BTreeMap<Point, BranchPoint> = BTreeMap::new();
        for c in &branch_values {
            for group in fiber_partition(system, c, 1).groups {
                if group.labels.len() >= 2 {
                    let bp = BranchPoint { point: group.point.clone(), value: c.clone(), labels: group.labels };
                    points.insert(group.point, bp);
                }
            }
        }
        Ok(Singularity { n_branches: n, branch_values, branch_points: points.into_values().collect() })
    }

    pub fn n_branches(&self) -> usize {
        self.n_branches
    }

    pub fn branch_values(&self) -> &[Point] {
        &self.branch_values
    }

    pub fn branch_points(&self) -> &[BranchPoint] {
        &self.branch_points
    }

    pub fn branch_set(&self) -> Vec<Point> {
        self.branch_points.iter().map(|b| b.point.clone()).collect()
    }

    pub fn is_branch_point(&self, p: &Point) -> bool {
        self.branch_points.iter().any(|b| &b.point == p)
    }

    pub fn branch_point(&self, p: &Point) -> Option<&BranchPoint> {
        self.branch_points.iter().find(|b| &b.point == p)
    }

    /// `O_{b,n}` for a branch point `b`.
    pub fn orbit_set(&self, system: &SelfSimilarSystem, b: &Point, n: usize) -> Result<OrbitSet> {
        if !self.is_branch_point(b) {
            return Err(Error::NotBranchPoint(b.to_string()));
        }
        Ok(OrbitSet { base: b.clone(), level: n, points: orbit_points(system, b, n) })
    }

    /// `B` of the n-th iterate, from the union `O_{b,k}` over `b` in `B` and `k < n`.
    pub fn iterated_branch_points(&self, system: &SelfSimilarSystem, n: usize) -> Vec<Point> {
        let mut out = BTreeSet::new();
        for b in &self.branch_points {
            let mut layer = BTreeSet::from([b.point.clone()]);
            for _ in 0..n {
                out.extend(layer.iter().cloned());
                layer = images(system, &layer);
            }
        }
        out.into_iter().collect()
    }

    /// `C` of the n-th iterate, as the union of `h^t(C)` for `t < n`.
    pub fn iterated_branch_values(&self, system: &SelfSimilarSystem, n: usize) -> Result<Vec<Point>> {
        let mut out = BTreeSet::new();
        for c in &self.branch_values {
            let mut x = c.clone();
            for t in 0..n {
                if t > 0 {
                    x = system.left_inverse(&x)?;
                }
                out.insert(x.clone());
            }
        }
        Ok(out.into_iter().collect())
    }

    /// Branch values and identification groups for the level-n component maps.
    pub fn level_data(&self, system: &SelfSimilarSystem, n: usize) -> Result<LevelData> {
        let values = if n == 0 { Vec::new() } else { self.iterated_branch_values(system, n)? };
        let partitions: Vec<FiberPartition> = values.iter().map(|c| fiber_partition(system, c, n)).collect();
        Ok(LevelData { level: n, n_branches: system.n_branches(), partitions })
    }
}

/// Identification data of one level: for each branch value of the iterate, the partition of
/// the flat level-n indices into label sets.
#[derive(Clone, Debug)]
pub struct LevelData {
    pub level: usize,
    pub n_branches: usize,
    pub partitions: Vec<FiberPartition>,
}

impl LevelData {
    pub fn size(&self) -> usize {
        self.n_branches.pow(self.level as u32)
    }

    pub fn branch_values(&self) -> Vec<Point> {
        self.partitions.iter().map(|p| p.value.clone()).collect()
    }

    pub fn partition_at(&self, c: &Point) -> Option<&FiberPartition> {
        self.partitions.iter().find(|p| &p.value == c)
    }

    pub fn branch_points(&self) -> Vec<Point> {
        let set: BTreeSet<Point> =
            self.partitions.iter().flat_map(|p| p.constraints().map(|g| g.point.clone())).collect();
        set.into_iter().collect()
    }
}

/// Groups the flat level-n indices `i` by the value of `gamma_{i_1} o ... o gamma_{i_n}` at `c`.
pub fn fiber_partition(system: &SelfSimilarSystem, c: &Point, n: usize) -> FiberPartition {
    let nb = system.n_branches();
    let size = nb.pow(n as u32);
    let mut groups: BTreeMap<Point, Vec<usize>> = BTreeMap::new();
    for flat in 0..size {
        let idx = MultiIndex::from_flat(flat, n, nb);
        groups.entry(system.component_map_apply(&idx, c)).or_default().push(flat);
    }
    FiberPartition {
        value: c.clone(),
        groups: groups.into_iter().map(|(point, labels)| PreimageGroup { point, labels }).collect(),
    }
}

fn images(system: &SelfSimilarSystem, layer: &BTreeSet<Point>) -> BTreeSet<Point> {
    let next: Vec<Point> = layer
        .par_iter()
        .flat_map_iter(|p| system.branches().iter().map(move |g| g.apply(p)))
        .collect();
    next.into_iter().collect()
}

/// `{gamma_w(x) : |w| = n}`, sorted and deduplicated.
pub fn orbit_points(system: &SelfSimilarSystem, x: &Point, n: usize) -> Vec<Point> {
    let mut layer = BTreeSet::from([x.clone()]);
    for _ in 0..n {
        layer = images(system, &layer);
    }
    layer.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitSet {
    pub base: Point,
    pub level: usize,
    pub points: Vec<Point>,
}

/// Result of the brute-force collision search over pairs of level-n multi-indices.
#[derive(Clone, Debug)]
pub struct DirectBranchSets {
    pub branch_points: Vec<Point>,
    pub branch_values: Vec<Point>,
    /// Every colliding pair differed in exactly one slot.
    pub unique_slot: bool,
    pub colliding_pairs: usize,
}

/// Solves `g_i(c) = g_j(c)` for all pairs of distinct level-n multi-indices.
pub fn iterated_branch_sets_direct(system: &SelfSimilarSystem, n: usize) -> Result<DirectBranchSets> {
    let nb = system.n_branches();
    let size = nb.pow(n as u32);
    let words: Vec<MultiIndex> = (0..size).map(|f| MultiIndex::from_flat(f, n, nb)).collect();
    let maps: Vec<AffineMap> = if n == 0 {
        Vec::new()
    } else {
        words.iter().map(|w| system.compose(&w.reversed())).collect::<Result<_>>()?
    };
    let pairs: Vec<(usize, usize)> = (0..size).flat_map(|i| (i + 1..size).map(move |j| (i, j))).collect();
    let found: Vec<Option<(Point, Point, bool)>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let label = format!("multi-indices {} and {}", words[i], words[j]);
            let c = collision(system, &maps[i], &maps[j], &label)?;
            Ok(c.map(|c| {
                let b = maps[i].apply(&c);
                let differing = words[i].letters().iter().zip(words[j].letters()).filter(|(a, b)| a != b).count();
                (b, c, differing == 1)
            }))
        })
        .collect::<Result<_>>()?;
    let mut bs = BTreeSet::new();
    let mut cs = BTreeSet::new();
    let mut unique_slot = true;
    let mut colliding_pairs = 0;
    for (b, c, slot) in found.into_iter().flatten() {
        bs.insert(b);
        cs.insert(c);
        unique_slot &= slot;
        colliding_pairs += 1;
    }
    Ok(DirectBranchSets {
        branch_points: bs.into_iter().collect(),
        branch_values: cs.into_iter().collect(),
        unique_slot,
        colliding_pairs,
    })
}

pub fn iterated_branch_points_direct(system: &SelfSimilarSystem, n: usize) -> Result<Vec<Point>> {
    Ok(iterated_branch_sets_direct(system, n)?.branch_points)
}

#[derive(Clone, Debug, Serialize)]
pub struct ClauseCheck {
    pub pass: bool,
    pub detail: String,
}

impl ClauseCheck {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        ClauseCheck { pass, detail: detail.into() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionBVerdict {
    pub pass: bool,
    pub left_inverse: ClauseCheck,
    pub finite_branch_set: ClauseCheck,
    pub postcritical_disjoint: ClauseCheck,
    pub unique_collision_slot: ClauseCheck,
    pub postcritical_checked_depth: usize,
    pub postcritical_evidence: Vec<Point>,
}

/// `h^k(B)` for `1 <= k <= depth`, sorted.
pub fn postcritical_points(system: &SelfSimilarSystem, sing: &Singularity, depth: usize) -> Result<Vec<Point>> {
    let mut out = BTreeSet::new();
    for b in sing.branch_points() {
        let mut x = b.point.clone();
        for _ in 0..depth {
            x = system.left_inverse(&x)?;
            out.insert(x.clone());
        }
    }
    Ok(out.into_iter().collect())
}

fn check_left_inverse(system: &SelfSimilarSystem) -> ClauseCheck {
    let grid = AttractorGrid::generate(system, LEFT_INVERSE_GRID_DEPTH);
    let failures: Vec<String> = grid
        .points()
        .par_iter()
        .flat_map_iter(|y| {
            (0..system.n_branches()).filter_map(move |j| {
                let x = system.branch(j).apply(y);
                match system.left_inverse(&x) {
                    Ok(back) if &back == y => None,
                    Ok(back) => Some(format!("h(gamma_{}({})) = {} != {}", j + 1, y, back, y)),
                    Err(e) => Some(e.to_string()),
                }
            })
        })
        .collect();
    match failures.first() {
        None => ClauseCheck::new(
            true,
            format!("h(gamma_j(y)) = y for all {} branches on {} grid points of depth {}", system.n_branches(), grid.len(), LEFT_INVERSE_GRID_DEPTH),
        ),
        Some(first) => ClauseCheck::new(false, format!("{} failures, first: {}", failures.len(), first)),
    }
}

/// Checks the three clauses of Assumption B plus the single-slot collision property.
pub fn check_assumption_b(system: &SelfSimilarSystem, postcritical_depth: usize) -> AssumptionBVerdict {
    let left_inverse = check_left_inverse(system);
    let sing = match Singularity::compute(system) {
        Ok(s) => s,
        Err(e) => {
            let skipped = ClauseCheck::new(false, "not checked: branch set is not finite");
            return AssumptionBVerdict {
                pass: false,
                left_inverse,
                finite_branch_set: ClauseCheck::new(false, e.to_string()),
                postcritical_disjoint: skipped.clone(),
                unique_collision_slot: skipped,
                postcritical_checked_depth: 0,
                postcritical_evidence: Vec::new(),
            };
        }
    };
    verdict_for(system, &sing, left_inverse, postcritical_depth)
}

fn verdict_for(
    system: &SelfSimilarSystem,
    sing: &Singularity,
    left_inverse: ClauseCheck,
    depth: usize,
) -> AssumptionBVerdict {
    let finite = ClauseCheck::new(
        true,
        format!("{} branch points from {} branch values", sing.branch_points().len(), sing.branch_values().len()),
    );
    let (postcritical_disjoint, evidence) = match postcritical_points(system, sing, depth) {
        Ok(p) => {
            let hits: Vec<&Point> = p.iter().filter(|x| sing.is_branch_point(x)).collect();
            // cross-check from the other side: no orbit O_{b,k}, 1 <= k <= depth, meets B
            let orbit_hit = sing.branch_points().iter().any(|b| {
                let mut layer = BTreeSet::from([b.point.clone()]);
                (1..=depth).any(|_| {
                    layer = images(system, &layer);
                    layer.iter().any(|x| sing.is_branch_point(x))
                })
            });
            let pass = hits.is_empty() && !orbit_hit;
            let detail = if pass {
                format!("B and h^k(B) are disjoint for 1 <= k <= {depth}")
            } else {
                format!("branch point in the postcritical set: {:?}", hits.iter().map(|p| p.to_string()).collect::<Vec<_>>())
            };
            (ClauseCheck::new(pass, detail), p)
        }
        Err(e) => (ClauseCheck::new(false, e.to_string()), Vec::new()),
    };
    let unique_collision_slot = match (1..=SLOT_CHECK_LEVEL).try_fold(0usize, |acc, n| {
        let d = iterated_branch_sets_direct(system, n)?;
        if d.unique_slot {
            Ok(acc + d.colliding_pairs)
        } else {
            Err(Error::AssumptionB(format!("a colliding pair at level {n} differs in more than one slot")))
        }
    }) {
        Ok(pairs) => ClauseCheck::new(
            true,
            format!("{pairs} colliding multi-index pairs up to level {SLOT_CHECK_LEVEL}, each differing in one slot"),
        ),
        Err(e) => ClauseCheck::new(false, e.to_string()),
    };
    let pass = left_inverse.pass && finite.pass && postcritical_disjoint.pass && unique_collision_slot.pass;
    AssumptionBVerdict {
        pass,
        left_inverse,
        finite_branch_set: finite,
        postcritical_disjoint,
        unique_collision_slot,
        postcritical_checked_depth: depth,
        postcritical_evidence: evidence,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NamedPoint {
    pub point: Point,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchPointEntry {
    pub point: Point,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub value: Point,
    pub index: usize,
    pub labels: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SingularityReport {
    pub system: String,
    pub dimension: usize,
    pub branches: usize,
    pub scalar: &'static str,
    pub branch_values: Vec<NamedPoint>,
    pub branch_points: Vec<BranchPointEntry>,
    pub postcritical_checked_depth: usize,
    pub assumption_b: AssumptionBVerdict,
}

impl SingularityReport {
    pub fn branch_point_set(&self) -> Vec<Point> {
        self.branch_points.iter().map(|b| b.point.clone()).collect()
    }

    pub fn branch_value_set(&self) -> Vec<Point> {
        self.branch_values.iter().map(|c| c.point.clone()).collect()
    }
}

/// Full report; never fails, a non-finite branch set shows up as a failed clause.
pub fn analyze(system: &SelfSimilarSystem, postcritical_depth: usize) -> SingularityReport {
    let named = |p: &Point| NamedPoint { point: p.clone(), name: system.point_name(p).map(str::to_string) };
    let left_inverse = check_left_inverse(system);
    let (values, points, verdict) = match Singularity::compute(system) {
        Ok(sing) => {
            let values = sing.branch_values().iter().map(named).collect();
            let points = sing
                .branch_points()
                .iter()
                .map(|b| BranchPointEntry {
                    point: b.point.clone(),
                    name: system.point_name(&b.point).map(str::to_string),
                    value: b.value.clone(),
                    index: b.index(),
                    labels: b.labels.iter().map(|l| l + 1).collect(),
                })
                .collect();
            (values, points, verdict_for(system, &sing, left_inverse, postcritical_depth))
        }
        Err(_) => (Vec::new(), Vec::new(), check_assumption_b(system, postcritical_depth)),
    };
    SingularityReport {
        system: system.name().to_string(),
        dimension: system.dimension(),
        branches: system.n_branches(),
        scalar: system.scalar_kind().name(),
        branch_values: values,
        branch_points: points,
        postcritical_checked_depth: verdict.postcritical_checked_depth,
        assumption_b: verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{cantor, sierpinski, tent};

    fn pts(xs: &[&str]) -> Vec<Point> {
        let mut v: Vec<Point> = xs.iter().map(|x| Point::parse(x).unwrap()).collect();
        v.sort();
        v
    }

    #[test]
    fn tent_structure() {
        let t = tent();
        let s = Singularity::compute(&t).unwrap();
        assert_eq!(s.branch_values(), pts(&["1"]).as_slice());
        assert_eq!(s.branch_set(), pts(&["1/2"]));
        assert_eq!(s.branch_points()[0].labels, vec![0, 1]);
        let o = s.orbit_set(&t, &Point::parse("1/2").unwrap(), 2).unwrap();
        assert_eq!(o.points, pts(&["1/8", "3/8", "5/8", "7/8"]));
        assert!(s.orbit_set(&t, &Point::parse("1/4").unwrap(), 1).is_err());
        assert_eq!(s.iterated_branch_points(&t, 2), pts(&["1/2", "1/4", "3/4"]));
        assert_eq!(s.iterated_branch_values(&t, 2).unwrap(), pts(&["0", "1"]));
    }

    #[test]
    fn tent_direct_level_two() {
        let d = iterated_branch_sets_direct(&tent(), 2).unwrap();
        assert_eq!(d.branch_points, pts(&["1/2", "1/4", "3/4"]));
        assert_eq!(d.branch_values, pts(&["0", "1"]));
        assert!(d.unique_slot);
    }

    #[test]
    fn cantor_has_no_branches() {
        let s = Singularity::compute(&cantor()).unwrap();
        assert!(s.branch_values().is_empty() && s.branch_points().is_empty());
        assert!(iterated_branch_points_direct(&cantor(), 3).unwrap().is_empty());
    }

    #[test]
    fn sierpinski_structure() {
        let sys = sierpinski();
        let s = Singularity::compute(&sys).unwrap();
        let named = |ns: &[&str]| {
            let mut v: Vec<Point> = ns.iter().map(|n| sys.named_point(n).unwrap().clone()).collect();
            v.sort();
            v
        };
        assert_eq!(s.branch_values(), named(&["P", "Q", "R"]).as_slice());
        assert_eq!(s.branch_set(), named(&["S", "T", "U"]));
        let post = postcritical_points(&sys, &s, 8).unwrap();
        assert_eq!(post, named(&["P", "Q", "R"]));
    }

    #[test]
    fn identical_branches_fail_clause_two() {
        let t = tent();
        let sys = SelfSimilarSystem::new("twin", vec![t.branch(0).clone(), t.branch(0).clone()], None).unwrap();
        assert!(matches!(branch_values(&sys), Err(Error::InvalidSystem(_))));
        let v = check_assumption_b(&sys, 4);
        assert!(!v.pass && !v.finite_branch_set.pass);
    }

    #[test]
    fn label_sets_partition_the_alphabet() {
        for sys in [tent(), sierpinski()] {
            let s = Singularity::compute(&sys).unwrap();
            for n in 1..=3 {
                let data = s.level_data(&sys, n).unwrap();
                for p in &data.partitions {
                    let mut all: Vec<usize> = p.groups.iter().flat_map(|g| g.labels.clone()).collect();
                    all.sort();
                    assert_eq!(all, (0..data.size()).collect::<Vec<_>>());
                    for g in &p.groups {
                        assert!(sys.left_inverse(&g.point).is_ok());
                    }
                }
            }
        }
    }
}
