//! Gaussian elimination over exact scalars.

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solution {
    Unique(Vec<Scalar>),
    /// Solution set is an affine subspace of the given dimension (at least 1).
    Family(usize),
    Inconsistent,
}

/// Solves `matrix * x = rhs` where `matrix` is given by rows.
pub fn solve(matrix: &[Vec<Scalar>], rhs: &[Scalar]) -> Solution {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    let mut aug: Vec<Vec<Scalar>> = matrix
        .iter()
        .zip(rhs)
        .map(|(row, b)| row.iter().cloned().chain(std::iter::once(b.clone())).collect())
        .collect();

    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !aug[i][c].is_zero()) else {
            continue;
        };
        aug.swap(r, p);
        let inv = aug[r][c].inverse().expect("pivot is nonzero");
        for k in c..=cols {
            aug[r][k] = &aug[r][k] * &inv;
        }
        for i in 0..rows {
            if i != r && !aug[i][c].is_zero() {
                let factor = aug[i][c].clone();
                for k in c..=cols {
                    let delta = &factor * &aug[r][k];
                    aug[i][k] = &aug[i][k] - &delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }

    if aug[r..].iter().any(|row| !row[cols].is_zero()) {
        return Solution::Inconsistent;
    }
    if pivots.len() < cols {
        return Solution::Family(cols - pivots.len());
    }
    let mut x = vec![Scalar::zero(); cols];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = aug[i][cols].clone();
    }
    Solution::Unique(x)
}

/// Exact determinant by elimination.
pub fn determinant(matrix: &[Vec<Scalar>]) -> Scalar {
    let n = matrix.len();
    let mut a: Vec<Vec<Scalar>> = matrix.to_vec();
    let mut det = Scalar::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return Scalar::zero();
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det = &det * &a[c][c];
        let inv = a[c][c].inverse().expect("pivot is nonzero");
        for i in c + 1..n {
            if a[i][c].is_zero() {
                continue;
            }
            let factor = &a[i][c] * &inv;
            for k in c..n {
                let delta = &factor * &a[c][k];
                a[i][k] = &a[i][k] - &delta;
            }
        }
    }
    det
}

/// Exact inverse, `None` when singular.
pub fn inverse(matrix: &[Vec<Scalar>]) -> Option<Vec<Vec<Scalar>>> {
    let n = matrix.len();
    let mut columns = Vec::with_capacity(n);
    for j in 0..n {
        let e: Vec<Scalar> = (0..n).map(|i| if i == j { Scalar::one() } else { Scalar::zero() }).collect();
        match solve(matrix, &e) {
            Solution::Unique(x) => columns.push(x),
            _ => return None,
        }
    }
    Some((0..n).map(|i| columns.iter().map(|col| col[i].clone()).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> Vec<Vec<Scalar>> {
        rows.iter().map(|r| r.iter().map(|&x| Scalar::from_int(x)).collect()).collect()
    }

    fn v(xs: &[i64]) -> Vec<Scalar> {
        xs.iter().map(|&x| Scalar::from_int(x)).collect()
    }

    #[test]
    fn unique_solution() {
        let a = m(&[&[2, 1], &[1, 3]]);
        let sol = solve(&a, &v(&[3, 5]));
        assert_eq!(sol, Solution::Unique(vec![Scalar::from_ratio(4, 5), Scalar::from_ratio(7, 5)]));
    }

    #[test]
    fn degenerate_systems() {
        let a = m(&[&[1, 2], &[2, 4]]);
        assert_eq!(solve(&a, &v(&[1, 2])), Solution::Family(1));
        assert_eq!(solve(&a, &v(&[1, 3])), Solution::Inconsistent);
        assert_eq!(solve(&m(&[&[0]]), &v(&[0])), Solution::Family(1));
        assert_eq!(solve(&m(&[&[0]]), &v(&[1])), Solution::Inconsistent);
    }

    #[test]
    fn determinant_and_inverse() {
        let a = m(&[&[0, 1], &[1, 1]]);
        assert_eq!(determinant(&a), Scalar::from_int(-1));
        let inv = inverse(&a).unwrap();
        assert_eq!(inv, m(&[&[-1, 1], &[1, 0]]));
        assert!(inverse(&m(&[&[1, 2], &[2, 4]])).is_none());
    }
}
