//! Finite word-image grids of the attractor and the discrete Hutchinson measures on them.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::ifs::{MultiIndex, SelfSimilarSystem};
use crate::scalar::Point;

/// All images `gamma_w(seed)` for words of length `depth`, deduplicated and sorted.
///
/// Words are stored by flat index with the first-applied letter varying fastest, so the
/// word `w` extended by a last letter `j` sits at `flat(w) + N^depth * j` one level up.
#[derive(Clone, Debug)]
pub struct AttractorGrid {
    depth: usize,
    n_branches: usize,
    points: Vec<Point>,
    coords: Vec<Vec<f64>>,
    word_point: Vec<u32>,
}

impl AttractorGrid {
    pub fn generate(system: &SelfSimilarSystem, depth: usize) -> Self {
        let n = system.n_branches();
        let mut points = vec![system.seed().clone()];
        let mut word_point: Vec<u32> = vec![0];
        for level in 0..depth {
            let images: Vec<Vec<Point>> = points
                .par_iter()
                .map(|p| system.branches().iter().map(|b| b.apply(p)).collect())
                .collect();
            let mut index: HashMap<Point, u32> = HashMap::new();
            let mut next_points = Vec::new();
            let mut image_index = vec![vec![0u32; n]; points.len()];
            // insertion in (point, branch) order keeps the result independent of thread timing
            for (q, imgs) in images.into_iter().enumerate() {
                for (j, img) in imgs.into_iter().enumerate() {
                    let id = *index.entry(img.clone()).or_insert_with(|| {
                        next_points.push(img);
                        (next_points.len() - 1) as u32
                    });
                    image_index[q][j] = id;
                }
            }
            let block = n.pow(level as u32);
            let mut next_words = vec![0u32; block * n];
            for j in 0..n {
                for (w, &q) in word_point.iter().enumerate() {
                    next_words[w + block * j] = image_index[q as usize][j];
                }
            }
            points = next_points;
            word_point = next_words;
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a].cmp(&points[b]));
        let mut rank = vec![0u32; points.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r as u32;
        }
        let sorted: Vec<Point> = order.iter().map(|&i| points[i].clone()).collect();
        let word_point = word_point.into_iter().map(|q| rank[q as usize]).collect();
        let coords = sorted.iter().map(Point::to_f64).collect();
        AttractorGrid { depth, n_branches: n, points: sorted, coords, word_point }
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

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn coords(&self) -> &[Vec<f64>] {
        &self.coords
    }

    pub fn index_of(&self, p: &Point) -> Option<usize> {
        self.points.binary_search(p).ok()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.index_of(p).is_some()
    }

    /// Index of the point reached by a word of length `depth`.
    pub fn word_point(&self, w: &MultiIndex) -> Option<usize> {
        if w.len() != self.depth {
            return None;
        }
        Some(self.word_point[w.flat(self.n_branches)] as usize)
    }

    /// Point indices for all words in flat order.
    pub fn word_points(&self) -> &[u32] {
        &self.word_point
    }

    /// Number of words landing on each point.
    pub fn multiplicities(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.points.len()];
        for &q in &self.word_point {
            counts[q as usize] += 1;
        }
        counts
    }

    /// Largest coordinate extent of the grid.
    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for a in &self.coords {
            for b in &self.coords {
                let d = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
                best = best.max(d);
            }
        }
        best
    }
}

/// Finitely supported probability measure with exact rational weights.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    pub support: Vec<Point>,
    pub weights: Vec<BigRational>,
}

impl DiscreteMeasure {
    pub fn total(&self) -> BigRational {
        self.weights.iter().fold(BigRational::zero(), |acc, w| acc + w)
    }

    pub fn weight_of(&self, p: &Point) -> BigRational {
        match self.support.binary_search(p) {
            Ok(i) => self.weights[i].clone(),
            Err(_) => BigRational::zero(),
        }
    }

    pub fn weights_f64(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.support.iter().zip(self.weights_f64()).map(|(p, w)| w * f(&p.to_f64())).sum()
    }
}

/// Uniform-weight `depth`-step approximation of the self-similar measure.
pub fn hutchinson_measure(system: &SelfSimilarSystem, depth: usize) -> DiscreteMeasure {
    let grid = AttractorGrid::generate(system, depth);
    hutchinson_on_grid(system, &grid)
}

pub fn hutchinson_on_grid(system: &SelfSimilarSystem, grid: &AttractorGrid) -> DiscreteMeasure {
    let total = BigInt::from(system.n_branches()).pow(grid.depth() as u32);
    let weights = grid
        .multiplicities()
        .into_iter()
        .map(|c| BigRational::new(BigInt::from(c), total.clone()))
        .collect();
    DiscreteMeasure { support: grid.points().to_vec(), weights }
}

/// `|int a dmu - (1/N) sum_j int a o gamma_j dmu|` for the depth-`depth` measure.
pub fn invariance_defect(system: &SelfSimilarSystem, depth: usize, a: impl Fn(&[f64]) -> f64) -> f64 {
    let mu = hutchinson_measure(system, depth);
    let n = system.n_branches() as f64;
    let d = system.dimension();
    let direct = mu.integrate(&a);
    let pushed: f64 = system
        .branches()
        .iter()
        .map(|b| {
            mu.integrate(|x| {
                let mut y = vec![0.0; d];
                b.apply_f64(x, &mut y);
                a(&y)
            })
        })
        .sum::<f64>()
        / n;
    (direct - pushed).abs()
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
    fn tent_grids() {
        let t = tent();
        assert_eq!(AttractorGrid::generate(&t, 0).points(), pts(&["0"]).as_slice());
        assert_eq!(AttractorGrid::generate(&t, 1).points(), pts(&["0", "1"]).as_slice());
        assert_eq!(AttractorGrid::generate(&t, 2).points(), pts(&["0", "1", "1/2"]).as_slice());
    }

    #[test]
    fn tent_hutchinson_weights() {
        let t = tent();
        let mu = hutchinson_measure(&t, 1);
        assert_eq!(mu.weight_of(&Point::parse("0").unwrap()), BigRational::new(1.into(), 2.into()));
        assert_eq!(mu.weight_of(&Point::parse("1").unwrap()), BigRational::new(1.into(), 2.into()));
        // the four words land on 0, 1, 1/2, 1/2
        let mu = hutchinson_measure(&t, 2);
        let w = |x: &str| mu.weight_of(&Point::parse(x).unwrap());
        assert_eq!(w("0"), BigRational::new(1.into(), 4.into()));
        assert_eq!(w("1"), BigRational::new(1.into(), 4.into()));
        assert_eq!(w("1/2"), BigRational::new(1.into(), 2.into()));
        assert_eq!(mu.total(), BigRational::from_integer(1.into()));
    }

    #[test]
    fn words_map_to_their_images() {
        let s = sierpinski();
        let g = AttractorGrid::generate(&s, 3);
        for f in 0..27 {
            let w = MultiIndex::from_flat(f, 3, 3);
            let expected = s.compose(&w).unwrap().apply(s.seed());
            assert_eq!(g.points()[g.word_point(&w).unwrap()], expected);
        }
    }

    #[test]
    fn grids_are_nested() {
        for sys in [tent(), cantor(), sierpinski()] {
            let small = AttractorGrid::generate(&sys, 3);
            let big = AttractorGrid::generate(&sys, 4);
            assert!(big.len() >= small.len());
            assert!(small.points().iter().all(|p| big.contains(p)));
            for p in small.points() {
                let img = sys.branch(1).apply(p);
                assert!(big.contains(&img));
                assert_eq!(&sys.left_inverse(&img).unwrap(), p);
            }
        }
    }

    #[test]
    fn pushforward_identity_holds_exactly() {
        let s = sierpinski();
        let m2 = hutchinson_measure(&s, 2);
        let m3 = hutchinson_measure(&s, 3);
        let a = |x: &[f64]| x[0] * x[0] + 0.5 * x[1];
        let lhs = m3.integrate(a);
        let rhs: f64 = s
            .branches()
            .iter()
            .map(|b| {
                m2.integrate(|x| {
                    let mut y = vec![0.0; 2];
                    b.apply_f64(x, &mut y);
                    a(&y)
                })
            })
            .sum::<f64>()
            / 3.0;
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn invariance_defect_decreases() {
        for sys in [tent(), cantor(), sierpinski()] {
            for a in [|x: &[f64]| x[0], |x: &[f64]| x[0] * x[0], |x: &[f64]| x[x.len() - 1] * x[0]] {
                let defects: Vec<f64> = (2..=6).map(|m| invariance_defect(&sys, m, a)).collect();
                for w in defects.windows(2) {
                    assert!(w[1] <= w[0] + 1e-15, "{} {:?}", sys.name(), defects);
                }
            }
        }
    }
}
