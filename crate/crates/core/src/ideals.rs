//! Ideal descriptors of the core, their closed sets, descent through the levels, primitive
//! ideals and the hull-kernel closure.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ifs::SelfSimilarSystem;
use crate::scalar::Point;
use crate::singularity::{orbit_points, AssumptionBVerdict, Singularity};

/// A branch point together with a level: the index of a model primitive ideal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Tag {
    pub base: Point,
    pub level: usize,
}

impl Tag {
    pub fn new(base: Point, level: usize) -> Self {
        Tag { base, level }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.base, self.level)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IdealDescriptor {
    Zero,
    Full,
    /// Intersection of the model primitive ideals of the tags.
    OrbitUnion(BTreeSet<Tag>),
}

impl IdealDescriptor {
    pub fn orbit(base: Point, level: usize) -> Self {
        IdealDescriptor::OrbitUnion(BTreeSet::from([Tag::new(base, level)]))
    }

    pub fn from_tags(tags: impl IntoIterator<Item = Tag>) -> Self {
        IdealDescriptor::OrbitUnion(tags.into_iter().collect())
    }

    pub fn tags(&self) -> Option<&BTreeSet<Tag>> {
        match self {
            IdealDescriptor::OrbitUnion(t) => Some(t),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for IdealDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdealDescriptor::Zero => write!(f, "0"),
            IdealDescriptor::Full => write!(f, "F"),
            IdealDescriptor::OrbitUnion(tags) => {
                let parts: Vec<String> = tags.iter().map(Tag::to_string).collect();
                write!(f, "J{{{}}}", parts.join(", "))
            }
        }
    }
}

/// `K`, the empty set, or a finite exact point set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClosedSet {
    Whole,
    Points(BTreeSet<Point>),
}

impl ClosedSet {
    pub fn empty() -> Self {
        ClosedSet::Points(BTreeSet::new())
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, ClosedSet::Points(p) if p.is_empty())
    }

    pub fn is_subset(&self, other: &ClosedSet) -> bool {
        match (self, other) {
            (_, ClosedSet::Whole) => true,
            (ClosedSet::Whole, ClosedSet::Points(_)) => false,
            (ClosedSet::Points(a), ClosedSet::Points(b)) => a.is_subset(b),
        }
    }

    pub fn points(&self) -> Option<&BTreeSet<Point>> {
        match self {
            ClosedSet::Points(p) => Some(p),
            ClosedSet::Whole => None,
        }
    }
}

impl fmt::Display for ClosedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClosedSet::Whole => write!(f, "K"),
            ClosedSet::Points(p) if p.is_empty() => write!(f, "{{}}"),
            ClosedSet::Points(p) => {
                let parts: Vec<String> = p.iter().map(Point::to_string).collect();
                write!(f, "{{{}}}", parts.join(", "))
            }
        }
    }
}

fn check_tag(sing: &Singularity, tag: &Tag) -> Result<()> {
    if sing.is_branch_point(&tag.base) {
        Ok(())
    } else {
        Err(Error::NotBranchPoint(tag.base.to_string()))
    }
}

/// The closed subset of `K` attached to an ideal by the Rieffel correspondence.
pub fn closed_set(system: &SelfSimilarSystem, sing: &Singularity, d: &IdealDescriptor) -> Result<ClosedSet> {
    match d {
        IdealDescriptor::Zero => Ok(ClosedSet::Whole),
        IdealDescriptor::Full => Ok(ClosedSet::empty()),
        IdealDescriptor::OrbitUnion(tags) => {
            let mut out = BTreeSet::new();
            for t in tags {
                check_tag(sing, t)?;
                out.extend(orbit_points(system, &t.base, t.level));
            }
            Ok(ClosedSet::Points(out))
        }
    }
}

/// `F_0, ..., F_n` followed by one empty set, where `F_k = O_{b, n-k}`.
pub fn descent_levels(system: &SelfSimilarSystem, sing: &Singularity, tag: &Tag) -> Result<Vec<BTreeSet<Point>>> {
    check_tag(sing, tag)?;
    let mut out: Vec<BTreeSet<Point>> =
        (0..=tag.level).map(|k| orbit_points(system, &tag.base, tag.level - k).into_iter().collect()).collect();
    out.push(BTreeSet::new());
    Ok(out)
}

/// Violations of `h(F_k \ B) ⊆ F_{k+1}` and of `gamma_j(F_{k+1}) ⊆ F_k`, as messages.
pub fn descent_violations(system: &SelfSimilarSystem, sing: &Singularity, levels: &[BTreeSet<Point>]) -> Result<Vec<String>> {
    let branch: BTreeSet<Point> = sing.branch_set().into_iter().collect();
    let mut out = Vec::new();
    for k in 0..levels.len().saturating_sub(1) {
        for x in levels[k].difference(&branch) {
            let y = system.left_inverse(x)?;
            if !levels[k + 1].contains(&y) {
                out.push(format!("h({x}) = {y} is not in F_{}", k + 1));
            }
        }
        for y in &levels[k + 1] {
            for (j, g) in system.branches().iter().enumerate() {
                let x = g.apply(y);
                if !levels[k].contains(&x) {
                    out.push(format!("gamma_{}({y}) = {x} is not in F_{k}", j + 1));
                }
            }
        }
    }
    Ok(out)
}

/// Zero together with every `(b, n)` for `b` in `B` and `n <= max_level`.
pub fn primitive_ideals(sing: &Singularity, verdict: &AssumptionBVerdict, max_level: usize) -> Result<Vec<IdealDescriptor>> {
    if !verdict.pass {
        return Err(Error::AssumptionB("primitive ideals need Assumption B".into()));
    }
    let mut out = vec![IdealDescriptor::Zero];
    for b in sing.branch_points() {
        for n in 0..=max_level {
            out.push(IdealDescriptor::orbit(b.point.clone(), n));
        }
    }
    Ok(out)
}

/// Intersection of ideals: union of tag sets, with Zero absorbing and Full neutral.
pub fn ideal_meet(ds: &[IdealDescriptor]) -> IdealDescriptor {
    let mut tags = BTreeSet::new();
    let mut any_proper = false;
    for d in ds {
        match d {
            IdealDescriptor::Zero => return IdealDescriptor::Zero,
            IdealDescriptor::Full => {}
            IdealDescriptor::OrbitUnion(t) => {
                any_proper = true;
                tags.extend(t.iter().cloned());
            }
        }
    }
    if any_proper {
        IdealDescriptor::OrbitUnion(tags)
    } else {
        IdealDescriptor::Full
    }
}

/// `sum N^{2n}` over the tags: the dimension of the finite-dimensional quotient.
pub fn quotient_dimension(system: &SelfSimilarSystem, d: &IdealDescriptor) -> Result<u64> {
    match d {
        IdealDescriptor::Full => Ok(0),
        IdealDescriptor::Zero => Err(Error::InvalidElement("the quotient by zero is infinite dimensional".into())),
        IdealDescriptor::OrbitUnion(tags) => {
            let n = system.n_branches() as u64;
            Ok(tags.iter().map(|t| n.pow(2 * t.level as u32)).sum())
        }
    }
}

/// `P ⊇ I` read off the closed sets: the hull of `P` lies inside the hull of `I`.
pub fn contains(system: &SelfSimilarSystem, sing: &Singularity, p: &IdealDescriptor, i: &IdealDescriptor) -> Result<bool> {
    Ok(closed_set(system, sing, p)?.is_subset(&closed_set(system, sing, i)?))
}

/// Hull-kernel closure of `subset` inside `primitives`.
pub fn jacobson_closure(
    system: &SelfSimilarSystem,
    sing: &Singularity,
    primitives: &[IdealDescriptor],
    subset: &[IdealDescriptor],
) -> Result<Vec<IdealDescriptor>> {
    let kernel = ideal_meet(subset);
    let mut out = Vec::new();
    for p in primitives {
        if contains(system, sing, p, &kernel)? {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Pairs of distinct tags whose orbit sets meet. Tags are kept regardless.
pub fn orbit_overlaps(system: &SelfSimilarSystem, tags: &BTreeSet<Tag>) -> Vec<String> {
    let orbits: Vec<(&Tag, BTreeSet<Point>)> =
        tags.iter().map(|t| (t, orbit_points(system, &t.base, t.level).into_iter().collect())).collect();
    let mut out = Vec::new();
    for (i, (a, oa)) in orbits.iter().enumerate() {
        for (b, ob) in &orbits[i + 1..] {
            if let Some(p) = oa.intersection(ob).next() {
                out.push(format!("orbit sets of {a} and {b} share {p}"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{cantor, sierpinski, tent};
    use crate::singularity::check_assumption_b;

    fn p(s: &str) -> Point {
        Point::parse(s).unwrap()
    }

    fn set(xs: &[&str]) -> BTreeSet<Point> {
        xs.iter().map(|s| p(s)).collect()
    }

    #[test]
    fn tent_closed_sets() {
        let t = tent();
        let s = Singularity::compute(&t).unwrap();
        let d = IdealDescriptor::orbit(p("1/2"), 2);
        assert_eq!(closed_set(&t, &s, &d).unwrap(), ClosedSet::Points(set(&["1/8", "3/8", "5/8", "7/8"])));
        assert_eq!(closed_set(&t, &s, &IdealDescriptor::Zero).unwrap(), ClosedSet::Whole);
        assert!(closed_set(&t, &s, &IdealDescriptor::Full).unwrap().is_empty());
        assert!(closed_set(&t, &s, &IdealDescriptor::orbit(p("1/3"), 0)).is_err());
    }

    #[test]
    fn tent_descent() {
        let t = tent();
        let s = Singularity::compute(&t).unwrap();
        let lv = descent_levels(&t, &s, &Tag::new(p("1/2"), 1)).unwrap();
        assert_eq!(lv, vec![set(&["1/4", "3/4"]), set(&["1/2"]), BTreeSet::new()]);
        assert!(descent_violations(&t, &s, &lv).unwrap().is_empty());
    }

    #[test]
    fn sierpinski_descent_and_primitives() {
        let sys = sierpinski();
        let s = Singularity::compute(&sys).unwrap();
        let sp = sys.named_point("S").unwrap().clone();
        let lv = descent_levels(&sys, &s, &Tag::new(sp.clone(), 1)).unwrap();
        assert_eq!(lv[0].len(), 3);
        assert_eq!(lv[1], BTreeSet::from([sp]));
        assert!(lv[2].is_empty());
        assert!(descent_violations(&sys, &s, &lv).unwrap().is_empty());
        let v = check_assumption_b(&sys, 8);
        assert_eq!(primitive_ideals(&s, &v, 1).unwrap().len(), 7);
    }

    #[test]
    fn cantor_is_simple() {
        let c = cantor();
        let s = Singularity::compute(&c).unwrap();
        let v = check_assumption_b(&c, 8);
        assert_eq!(primitive_ideals(&s, &v, 3).unwrap(), vec![IdealDescriptor::Zero]);
    }

    #[test]
    fn meets_and_closure() {
        let t = tent();
        let s = Singularity::compute(&t).unwrap();
        let a = IdealDescriptor::orbit(p("1/2"), 1);
        let b = IdealDescriptor::orbit(p("1/2"), 2);
        let m = ideal_meet(&[a.clone(), b.clone()]);
        assert_eq!(closed_set(&t, &s, &m).unwrap().points().unwrap().len(), 6);
        assert_eq!(ideal_meet(&[a.clone(), IdealDescriptor::Zero]), IdealDescriptor::Zero);
        assert_eq!(ideal_meet(&[a.clone(), IdealDescriptor::Full]), a);
        let v = check_assumption_b(&t, 8);
        let prims = primitive_ideals(&s, &v, 2).unwrap();
        assert_eq!(jacobson_closure(&t, &s, &prims, &[IdealDescriptor::Zero]).unwrap(), prims);
        assert_eq!(jacobson_closure(&t, &s, &prims, &[b.clone()]).unwrap(), vec![b]);
        assert_eq!(quotient_dimension(&t, &a).unwrap(), 4);
        assert!(orbit_overlaps(&t, m.tags().unwrap()).is_empty());
    }
}
