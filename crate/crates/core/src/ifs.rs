//! Affine contractions, multi-indices and self-similar systems with their left inverse.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linsolve::{self, Solution};
use crate::scalar::{Point, Scalar};

/// `x -> A x + b` with exact coefficients and a cached floating-point copy.
#[derive(Clone, Debug)]
pub struct AffineMap {
    matrix: Vec<Vec<Scalar>>,
    offset: Vec<Scalar>,
    fmatrix: Vec<f64>,
    foffset: Vec<f64>,
}

impl PartialEq for AffineMap {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix && self.offset == other.offset
    }
}

impl Eq for AffineMap {}

impl AffineMap {
    pub fn new(matrix: Vec<Vec<Scalar>>, offset: Vec<Scalar>) -> Result<Self> {
        let d = offset.len();
        if matrix.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: matrix.len() });
        }
        if let Some(row) = matrix.iter().find(|row| row.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: row.len() });
        }
        let fmatrix = matrix.iter().flatten().map(Scalar::to_f64).collect();
        let foffset = offset.iter().map(Scalar::to_f64).collect();
        Ok(AffineMap { matrix, offset, fmatrix, foffset })
    }

    pub fn identity(d: usize) -> Self {
        let matrix = (0..d)
            .map(|i| (0..d).map(|j| if i == j { Scalar::one() } else { Scalar::zero() }).collect())
            .collect();
        AffineMap::new(matrix, vec![Scalar::zero(); d]).expect("square by construction")
    }

    pub fn dimension(&self) -> usize {
        self.offset.len()
    }

    pub fn matrix(&self) -> &[Vec<Scalar>] {
        &self.matrix
    }

    pub fn offset(&self) -> &[Scalar] {
        &self.offset
    }

    pub fn is_rational(&self) -> bool {
        self.matrix.iter().flatten().chain(&self.offset).all(Scalar::is_rational)
    }

    /// `A x + b`, exactly.
    pub fn evaluate(&self, x: &Point) -> Result<Point> {
        if x.dimension() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), found: x.dimension() });
        }
        Ok(self.apply(x))
    }

    /// As [`evaluate`](Self::evaluate) for a point already known to have the right dimension.
    pub fn apply(&self, x: &Point) -> Point {
        let coords = self
            .matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, b)| row.iter().zip(x.coords()).fold(b.clone(), |acc, (a, xi)| &acc + &(a * xi)))
            .collect();
        Point(coords)
    }

    pub fn apply_f64(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dimension();
        for i in 0..d {
            let row = &self.fmatrix[i * d..(i + 1) * d];
            out[i] = self.foffset[i] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    /// The map `x -> outer(self(x))`.
    pub fn then(&self, outer: &AffineMap) -> AffineMap {
        let d = self.dimension();
        let matrix = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| (0..d).fold(Scalar::zero(), |acc, k| &acc + &(&outer.matrix[i][k] * &self.matrix[k][j])))
                    .collect()
            })
            .collect();
        let offset = outer.apply(&Point(self.offset.clone())).0;
        AffineMap::new(matrix, offset).expect("dimensions agree")
    }

    pub fn determinant(&self) -> Scalar {
        linsolve::determinant(&self.matrix)
    }

    pub fn inverse(&self) -> Option<AffineMap> {
        let inv = linsolve::inverse(&self.matrix)?;
        let neg_offset = Point(self.offset.iter().map(|b| -b).collect());
        let lin = AffineMap::new(inv, vec![Scalar::zero(); self.dimension()]).ok()?;
        let offset = lin.apply(&neg_offset).0;
        AffineMap::new(lin.matrix, offset).ok()
    }

    /// `|A|_1 * |A|_inf`, an exact upper bound for the squared spectral norm.
    pub fn norm_bound_squared(&self) -> Scalar {
        let d = self.dimension();
        let max = |it: &mut dyn Iterator<Item = Scalar>| it.fold(Scalar::zero(), |m, x| if x > m { x } else { m });
        let r = max(&mut (0..d).map(|i| self.matrix[i].iter().fold(Scalar::zero(), |s, a| &s + &a.abs())));
        let c = max(&mut (0..d).map(|j| self.matrix.iter().fold(Scalar::zero(), |s, row| &s + &row[j].abs())));
        &r * &c
    }

    /// Certified upper contraction constant `c`.
    pub fn contraction_upper(&self) -> f64 {
        self.norm_bound_squared().to_f64().sqrt()
    }

    /// Certified lower constant `c'`, from the same bound applied to the inverse matrix.
    pub fn contraction_lower(&self) -> f64 {
        match self.inverse() {
            Some(inv) => 1.0 / inv.norm_bound_squared().to_f64().sqrt(),
            None => 0.0,
        }
    }

    /// The unique fixed point, if `I - A` is invertible.
    pub fn fixed_point(&self) -> Option<Point> {
        let d = self.dimension();
        let lhs: Vec<Vec<Scalar>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        let id = if i == j { Scalar::one() } else { Scalar::zero() };
                        &id - &self.matrix[i][j]
                    })
                    .collect()
            })
            .collect();
        match linsolve::solve(&lhs, &self.offset) {
            Solution::Unique(x) => Some(Point(x)),
            _ => None,
        }
    }
}

/// A word over the branch alphabet, stored with 0-based letters and printed 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(letters: Vec<usize>, n_branches: usize) -> Result<Self> {
        if let Some(&bad) = letters.iter().find(|&&l| l >= n_branches) {
            return Err(Error::Parse(format!("letter {} out of range 1..{}", bad + 1, n_branches)));
        }
        Ok(MultiIndex(letters))
    }

    /// Parses 1-based letters such as `(2,1)` or `2,1`.
    pub fn parse(s: &str, n_branches: usize) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        if inner.trim().is_empty() {
            return Ok(MultiIndex(Vec::new()));
        }
        let letters = inner
            .split(',')
            .map(|t| match t.trim().parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(Error::Parse(format!("bad letter {t:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        MultiIndex::new(letters, n_branches)
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Flat position with the first letter varying fastest: `sum i_k N^(k-1)`.
    pub fn flat(&self, n_branches: usize) -> usize {
        self.0.iter().rev().fold(0, |acc, &l| acc * n_branches + l)
    }

    pub fn from_flat(mut flat: usize, len: usize, n_branches: usize) -> Self {
        let mut letters = Vec::with_capacity(len);
        for _ in 0..len {
            letters.push(flat % n_branches);
            flat /= n_branches;
        }
        MultiIndex(letters)
    }

    pub fn concat(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().chain(&other.0).copied().collect())
    }

    pub fn reversed(&self) -> MultiIndex {
        MultiIndex(self.0.iter().rev().copied().collect())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|l| (l + 1).to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl Serialize for MultiIndex {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.0.iter().map(|l| l + 1))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalarKind {
    Rational,
    QuadraticSqrt3,
}

impl ScalarKind {
    pub fn name(self) -> &'static str {
        match self {
            ScalarKind::Rational => "rational",
            ScalarKind::QuadraticSqrt3 => "quadratic-sqrt3",
        }
    }
}

/// Recursive exact test for membership in the attractor.
///
/// The ball `|x - center| <= radius` is mapped into itself by every branch, so it
/// contains `K`. A point is rejected as soon as some pull-back path leaves the ball
/// at every branch; depth bounds the recursion.
#[derive(Clone, Debug)]
struct Enclosure {
    center: Vec<f64>,
    radius: f64,
}

#[derive(Clone, Debug)]
pub struct SelfSimilarSystem {
    name: String,
    kind: ScalarKind,
    branches: Vec<AffineMap>,
    inverses: Vec<AffineMap>,
    seed: Point,
    named_points: Vec<(String, Point)>,
    enclosure: Enclosure,
    membership_depth: usize,
}

pub const DEFAULT_MEMBERSHIP_DEPTH: usize = 12;

impl SelfSimilarSystem {
    /// Validates the branches and takes the fixed point of the first branch as seed when none is given.
    pub fn new(name: impl Into<String>, branches: Vec<AffineMap>, seed: Option<Point>) -> Result<Self> {
        if branches.len() < 2 {
            return Err(Error::InvalidSystem(format!("need at least 2 branches, got {}", branches.len())));
        }
        let d = branches[0].dimension();
        if d == 0 {
            return Err(Error::InvalidSystem("dimension must be positive".into()));
        }
        let mut inverses = Vec::with_capacity(branches.len());
        for (j, map) in branches.iter().enumerate() {
            if map.dimension() != d {
                return Err(Error::DimensionMismatch { expected: d, found: map.dimension() });
            }
            if map.norm_bound_squared() >= Scalar::one() {
                return Err(Error::InvalidSystem(format!(
                    "branch {} is not a certified contraction (bound {:.6})",
                    j + 1,
                    map.contraction_upper()
                )));
            }
            let inv = map
                .inverse()
                .ok_or_else(|| Error::InvalidSystem(format!("branch {} is not injective", j + 1)))?;
            inverses.push(inv);
        }
        let seed = match seed {
            Some(p) if p.dimension() != d => return Err(Error::DimensionMismatch { expected: d, found: p.dimension() }),
            Some(p) => p,
            None => branches[0].fixed_point().expect("a contraction has a fixed point"),
        };
        let kind = if branches.iter().all(AffineMap::is_rational) && seed.is_rational() {
            ScalarKind::Rational
        } else {
            ScalarKind::QuadraticSqrt3
        };
        let enclosure = enclosure(&branches);
        Ok(SelfSimilarSystem {
            name: name.into(),
            kind,
            branches,
            inverses,
            seed,
            named_points: Vec::new(),
            enclosure,
            membership_depth: DEFAULT_MEMBERSHIP_DEPTH,
        })
    }

    pub fn with_named_points(mut self, points: Vec<(String, Point)>) -> Self {
        self.named_points = points;
        self
    }

    pub fn with_membership_depth(mut self, depth: usize) -> Self {
        self.membership_depth = depth;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn scalar_kind(&self) -> ScalarKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.seed.dimension()
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn branches(&self) -> &[AffineMap] {
        &self.branches
    }

    pub fn branch(&self, j: usize) -> &AffineMap {
        &self.branches[j]
    }

    pub fn seed(&self) -> &Point {
        &self.seed
    }

    pub fn named_points(&self) -> &[(String, Point)] {
        &self.named_points
    }

    pub fn point_name(&self, p: &Point) -> Option<&str> {
        self.named_points.iter().find(|(_, q)| q == p).map(|(n, _)| n.as_str())
    }

    pub fn named_point(&self, name: &str) -> Option<&Point> {
        self.named_points.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }

    /// Largest certified contraction constant over the branches.
    pub fn contraction_constant(&self) -> f64 {
        self.branches.iter().map(AffineMap::contraction_upper).fold(0.0, f64::max)
    }

    /// Smallest certified lower constant over the branches.
    pub fn lower_contraction_constant(&self) -> f64 {
        self.branches.iter().map(AffineMap::contraction_lower).fold(f64::INFINITY, f64::min)
    }

    /// `gamma_{w_n} o ... o gamma_{w_1}`: the first letter is applied first.
    pub fn compose(&self, w: &MultiIndex) -> Result<AffineMap> {
        let (first, rest) = w.letters().split_first().ok_or(Error::EmptyWord)?;
        Ok(rest.iter().fold(self.branches[*first].clone(), |acc, &l| acc.then(&self.branches[l])))
    }

    /// Applies the letters of `w` in order, the first letter first.
    pub fn apply_word(&self, w: &MultiIndex, x: &Point) -> Point {
        w.letters().iter().fold(x.clone(), |p, &l| self.branches[l].apply(&p))
    }

    /// Component map of a level-n index `(i_1, ..., i_n)`: `gamma_{i_1} o ... o gamma_{i_n}`.
    pub fn component_map_apply(&self, index: &MultiIndex, x: &Point) -> Point {
        self.apply_word(&index.reversed(), x)
    }

    pub fn apply_inverse(&self, j: usize, x: &Point) -> Point {
        self.inverses[j].apply(x)
    }

    /// Exact test of `x in K`, up to the recursion depth; never rejects a point of `K`.
    pub fn contains(&self, x: &Point) -> bool {
        self.contains_to_depth(x, self.membership_depth)
    }

    pub fn contains_to_depth(&self, x: &Point, depth: usize) -> bool {
        let xf = x.to_f64();
        let dist = xf.iter().zip(&self.enclosure.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if dist > self.enclosure.radius {
            return false;
        }
        if depth == 0 {
            return true;
        }
        (0..self.n_branches()).any(|j| self.contains_to_depth(&self.inverses[j].apply(x), depth - 1))
    }

    /// `h(x)`: every branch whose inverse image lies in `K` must give the same preimage.
    pub fn left_inverse(&self, x: &Point) -> Result<Point> {
        if x.dimension() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), found: x.dimension() });
        }
        let mut witness: Option<Point> = None;
        for j in 0..self.n_branches() {
            let y = self.inverses[j].apply(x);
            if !self.contains(&y) {
                continue;
            }
            match &witness {
                None => witness = Some(y),
                Some(w) if *w == y => {}
                Some(w) => {
                    return Err(Error::InvalidSystem(format!(
                        "no common left inverse at {x}: preimages {w} and {y} differ"
                    )))
                }
            }
        }
        witness.ok_or_else(|| Error::NotResolvable(x.to_string()))
    }

    /// Floating-point left inverse for plotting: picks the branch whose preimage is deepest
    /// inside the enclosing ball, accepting it within `eps` times the ball diameter.
    pub fn left_inverse_approx(&self, x: &[f64], eps: f64) -> Option<Vec<f64>> {
        let d = self.dimension();
        let diam = 2.0 * self.enclosure.radius;
        let mut best: Option<(f64, Vec<f64>)> = None;
        for inv in &self.inverses {
            let mut y = vec![0.0; d];
            inv.apply_f64(x, &mut y);
            let score = self.approx_distance_to_k(&y, 8);
            if best.as_ref().map_or(true, |(s, _)| score < *s) {
                best = Some((score, y));
            }
        }
        best.filter(|(s, _)| *s <= eps * diam).map(|(_, y)| y)
    }

    /// Upper estimate of the distance from `y` to `K` via the nearest depth-`k` cell.
    fn approx_distance_to_k(&self, y: &[f64], k: usize) -> f64 {
        let d = self.dimension();
        let mut frontier = vec![self.enclosure.center.clone()];
        let mut radius = self.enclosure.radius;
        let c = self.contraction_constant();
        for _ in 0..k {
            radius *= c;
            let mut next = Vec::new();
            for p in &frontier {
                for b in &self.branches {
                    let mut q = vec![0.0; d];
                    b.apply_f64(p, &mut q);
                    if dist(&q, y) <= 2.0 * radius + 1e-15 {
                        next.push(q);
                    }
                }
            }
            if next.is_empty() {
                return frontier.iter().map(|p| dist(p, y)).fold(f64::INFINITY, f64::min);
            }
            frontier = next;
        }
        frontier.iter().map(|p| (dist(p, y) - radius).max(0.0)).fold(f64::INFINITY, f64::min)
    }

    /// Radius of a ball around the enclosure center that contains `K`.
    pub fn enclosing_radius(&self) -> f64 {
        self.enclosure.radius
    }

    pub fn enclosing_center(&self) -> &[f64] {
        &self.enclosure.center
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn enclosure(branches: &[AffineMap]) -> Enclosure {
    let d = branches[0].dimension();
    let fixed: Vec<Vec<f64>> = branches.iter().map(|b| b.fixed_point().expect("contraction").to_f64()).collect();
    let center: Vec<f64> = (0..d).map(|i| fixed.iter().map(|p| p[i]).sum::<f64>() / fixed.len() as f64).collect();
    let c = branches.iter().map(AffineMap::contraction_upper).fold(0.0, f64::max);
    let mut shift: f64 = 0.0;
    for b in branches {
        let mut img = vec![0.0; d];
        b.apply_f64(&center, &mut img);
        shift = shift.max(dist(&img, &center));
    }
    let radius = shift / (1.0 - c);
    Enclosure { center, radius: radius * (1.0 + 1e-9) + 1e-12 }
}

fn q(s: &str) -> Scalar {
    s.parse().expect("built-in constant")
}

fn affine(rows: &[&[&str]], offset: &[&str]) -> AffineMap {
    AffineMap::new(rows.iter().map(|r| r.iter().map(|x| q(x)).collect()).collect(), offset.iter().map(|x| q(x)).collect())
        .expect("built-in map")
}

fn point(coords: &[&str]) -> Point {
    Point(coords.iter().map(|x| q(x)).collect())
}

/// `gamma_1 = x/2`, `gamma_2 = 1 - x/2` on `[0, 1]`.
pub fn tent() -> SelfSimilarSystem {
    let branches = vec![affine(&[&["1/2"]], &["0"]), affine(&[&["-1/2"]], &["1"])];
    SelfSimilarSystem::new("tent", branches, Some(point(&["0"]))).expect("valid built-in")
}

/// `x/3` and `x/3 + 2/3`.
pub fn cantor() -> SelfSimilarSystem {
    let branches = vec![affine(&[&["1/3"]], &["0"]), affine(&[&["1/3"]], &["2/3"])];
    SelfSimilarSystem::new("cantor", branches, Some(point(&["0"]))).expect("valid built-in")
}

/// The gasket on the triangle `P Q R` with the two lower maps rotated by `-2pi/3` and `2pi/3`
/// about the centroids of their sub-triangles.
pub fn sierpinski() -> SelfSimilarSystem {
    let branches = vec![
        affine(&[&["1/2", "0"], &["0", "1/2"]], &["1/4", "1/4*sqrt3"]),
        affine(&[&["-1/4", "1/4*sqrt3"], &["-1/4*sqrt3", "-1/4"]], &["1/4", "1/4*sqrt3"]),
        affine(&[&["-1/4", "-1/4*sqrt3"], &["1/4*sqrt3", "-1/4"]], &["1", "0"]),
    ];
    let named = [
        ("P", ["1/2", "1/2*sqrt3"]),
        ("Q", ["0", "0"]),
        ("R", ["1", "0"]),
        ("S", ["1/4", "1/4*sqrt3"]),
        ("T", ["1/2", "0"]),
        ("U", ["3/4", "1/4*sqrt3"]),
    ];
    let named_points = named.iter().map(|(n, c)| (n.to_string(), point(c))).collect();
    SelfSimilarSystem::new("sierpinski", branches, Some(point(&["1/2", "1/2*sqrt3"])))
        .expect("valid built-in")
        .with_named_points(named_points)
}

pub fn builtin(name: &str) -> Option<SelfSimilarSystem> {
    match name {
        "tent" => Some(tent()),
        "cantor" => Some(cantor()),
        "sierpinski" => Some(sierpinski()),
        _ => None,
    }
}

pub const BUILTIN_NAMES: [&str; 3] = ["tent", "sierpinski", "cantor"];

fn toml_scalar(v: &toml::Value) -> Result<Scalar> {
    match v {
        toml::Value::String(s) => s.parse(),
        toml::Value::Integer(i) => Ok(Scalar::from_int(*i)),
        toml::Value::Float(f) => format!("{f:?}").parse(),
        other => Err(Error::Parse(format!("expected a scalar, found {other}"))),
    }
}

fn toml_vector(v: &toml::Value) -> Result<Vec<Scalar>> {
    match v {
        toml::Value::Array(items) => items.iter().map(toml_scalar).collect(),
        other => Ok(vec![toml_scalar(other)?]),
    }
}

fn toml_branch(v: &toml::Value) -> Result<AffineMap> {
    let (matrix, offset) = match v {
        toml::Value::Table(t) => (
            t.get("matrix").ok_or_else(|| Error::Parse("branch without `matrix`".into()))?,
            t.get("offset").ok_or_else(|| Error::Parse("branch without `offset`".into()))?,
        ),
        toml::Value::Array(parts) if parts.len() == 2 => (&parts[0], &parts[1]),
        _ => return Err(Error::Parse("branch must be {matrix, offset} or [matrix, offset]".into())),
    };
    let rows = match matrix {
        toml::Value::Array(rows) => rows.iter().map(toml_vector).collect::<Result<Vec<_>>>()?,
        other => vec![vec![toml_scalar(other)?]],
    };
    AffineMap::new(rows, toml_vector(offset)?)
}

impl SelfSimilarSystem {
    /// Reads a system definition:
    ///
    /// ```toml
    /// name = "tent"
    /// dimension = 1
    /// scalar = "rational"
    /// seed = ["0"]
    /// branches = [
    ///   { matrix = [["1/2"]], offset = ["0"] },
    ///   { matrix = [["-1/2"]], offset = ["1"] },
    /// ]
    /// [points]
    /// half = ["1/2"]
    /// ```
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.message().to_string()))?;
        let name = doc.get("name").and_then(|v| v.as_str()).unwrap_or("custom").to_string();
        let branches = doc
            .get("branches")
            .and_then(|v| v.as_array())
            .ok_or_else(|| Error::Parse("missing `branches` array".into()))?
            .iter()
            .map(toml_branch)
            .collect::<Result<Vec<_>>>()?;
        let seed = doc.get("seed").map(toml_vector).transpose()?.map(Point);
        let system = SelfSimilarSystem::new(name, branches, seed)?;
        if let Some(dim) = doc.get("dimension") {
            let dim = dim.as_integer().ok_or_else(|| Error::Parse("`dimension` must be an integer".into()))?;
            if dim as usize != system.dimension() {
                return Err(Error::DimensionMismatch { expected: dim as usize, found: system.dimension() });
            }
        }
        match doc.get("scalar").map(|v| v.as_str()) {
            None | Some(Some("quadratic-sqrt3")) => {}
            Some(Some("rational")) => {
                if system.kind != ScalarKind::Rational {
                    return Err(Error::InvalidSystem("scalar = \"rational\" but coefficients involve sqrt3".into()));
                }
            }
            Some(other) => return Err(Error::Parse(format!("unknown scalar kind {other:?}"))),
        }
        let mut named = Vec::new();
        if let Some(points) = doc.get("points").and_then(|v| v.as_table()) {
            for (k, v) in points {
                let p = Point(toml_vector(v)?);
                if p.dimension() != system.dimension() {
                    return Err(Error::DimensionMismatch { expected: system.dimension(), found: p.dimension() });
                }
                named.push((k.clone(), p));
            }
        }
        Ok(system.with_named_points(named))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Point {
        Point::parse(s).unwrap()
    }

    fn word(s: &str, n: usize) -> MultiIndex {
        MultiIndex::parse(s, n).unwrap()
    }

    #[test]
    fn tent_branches_evaluate() {
        let t = tent();
        assert_eq!(t.branch(0).evaluate(&p("1")).unwrap(), p("1/2"));
        assert_eq!(t.branch(1).evaluate(&p("0")).unwrap(), p("1"));
        assert!(t.branch(0).evaluate(&p("(1,2)")).is_err());
        let fp = t.branch(1).fixed_point().unwrap();
        assert_eq!(fp, p("2/3"));
        assert_eq!(t.branch(1).apply(&fp), fp);
    }

    #[test]
    fn compose_order() {
        let t = tent();
        let m = t.compose(&word("2,1", 2)).unwrap();
        assert_eq!(m.matrix()[0][0], Scalar::from_ratio(-1, 4));
        assert_eq!(m.offset()[0], Scalar::from_ratio(1, 2));
        let c = cantor();
        let m = c.compose(&word("1,2", 2)).unwrap();
        assert_eq!(m.matrix()[0][0], Scalar::from_ratio(1, 9));
        assert_eq!(m.offset()[0], Scalar::from_ratio(2, 3));
        assert_eq!(t.compose(&word("2", 2)).unwrap(), *t.branch(1));
        assert!(matches!(t.compose(&word("", 2)), Err(Error::EmptyWord)));
    }

    #[test]
    fn flat_indices_round_trip() {
        for f in 0..27 {
            let w = MultiIndex::from_flat(f, 3, 3);
            assert_eq!(w.flat(3), f);
        }
        assert_eq!(word("2,1", 2).flat(2), 1);
        assert_eq!(word("1,2", 2).to_string(), "(1,2)");
    }

    #[test]
    fn sierpinski_vertex_images() {
        let s = sierpinski();
        let get = |n: &str| s.named_point(n).unwrap().clone();
        let img = |j: usize, n: &str| s.branch(j).apply(&get(n));
        assert_eq!(img(0, "P"), get("P"));
        assert_eq!(img(0, "Q"), get("S"));
        assert_eq!(img(0, "R"), get("U"));
        assert_eq!(img(1, "P"), get("T"));
        assert_eq!(img(1, "Q"), get("S"));
        assert_eq!(img(1, "R"), get("Q"));
        assert_eq!(img(2, "P"), get("T"));
        assert_eq!(img(2, "Q"), get("R"));
        assert_eq!(img(2, "R"), get("U"));
        assert_eq!(s.scalar_kind(), ScalarKind::QuadraticSqrt3);
    }

    #[test]
    fn left_inverse_on_built_ins() {
        let t = tent();
        assert_eq!(t.left_inverse(&p("1/2")).unwrap(), p("1"));
        assert_eq!(t.left_inverse(&p("1")).unwrap(), p("0"));
        assert_eq!(t.left_inverse(&p("0")).unwrap(), p("0"));
        assert_eq!(t.left_inverse(&p("1/4")).unwrap(), p("1/2"));
        assert!(t.left_inverse(&p("3")).is_err());
        let s = sierpinski();
        let x = s.branch(0).apply(&s.branch(2).apply(s.seed()));
        assert_eq!(s.left_inverse(&x).unwrap(), s.branch(2).apply(s.seed()));
        let c = cantor();
        assert!(c.left_inverse(&p("1/2")).is_err());
    }

    #[test]
    fn contraction_constants() {
        let s = sierpinski();
        let c = s.contraction_constant();
        let cl = s.lower_contraction_constant();
        assert!(c < 1.0 && cl > 0.0 && cl <= 0.5 + 1e-12 && c >= 0.5 - 1e-12);
        let bad = AffineMap::new(vec![vec![Scalar::from_int(2)]], vec![Scalar::zero()]).unwrap();
        let ok = tent().branch(0).clone();
        assert!(SelfSimilarSystem::new("bad", vec![bad, ok.clone()], None).is_err());
        assert!(SelfSimilarSystem::new("one", vec![ok], None).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
            name = "tent-file"
            dimension = 1
            scalar = "rational"
            branches = [
              { matrix = [["1/2"]], offset = ["0"] },
              [[[-0.5]], [1]],
            ]
            [points]
            half = ["1/2"]
        "#;
        let sys = SelfSimilarSystem::from_toml_str(text).unwrap();
        assert_eq!(sys.name(), "tent-file");
        assert_eq!(sys.branches(), tent().branches());
        assert_eq!(sys.seed(), &p("0"));
        assert_eq!(sys.named_point("half"), Some(&p("1/2")));
        assert!(SelfSimilarSystem::from_toml_str("branches = 3").is_err());
        assert!(SelfSimilarSystem::from_toml_str("name = [").is_err());
    }
}
