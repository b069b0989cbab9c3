//! Exact linear algebra over the integers and rationals.
//!
//! Everything that feeds the structural report (rank, left null space,
//! row and column bases of the stoichiometric matrix) goes through here so
//! that dimension and deficiency never depend on floating-point tolerances.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Rank of an integer matrix via fraction-free (Bareiss) elimination.
///
/// Pivots are chosen as the lowest-index row with a nonzero entry in the
/// current column.
pub fn rank(rows: &[Vec<i64>], cols: usize) -> usize {
    let mut a: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
        .collect();
    let n = a.len();
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..cols {
        if r == n {
            break;
        }
        let Some(p) = (r..n).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        for i in (r + 1)..n {
            for j in (c + 1)..cols {
                let v = &a[i][j] * &a[r][c] - &a[i][c] * &a[r][j];
                a[i][j] = v / &prev;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        r += 1;
    }
    r
}

/// Reduced row echelon form over the rationals. Returns the reduced matrix
/// and the pivot column of each nonzero row.
pub fn rref(mut a: Vec<Vec<BigRational>>, cols: usize) -> (Vec<Vec<BigRational>>, Vec<usize>) {
    let n = a.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == n {
            break;
        }
        let Some(p) = (r..n).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for v in a[r].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..n {
            if i == r || a[i][c].is_zero() {
                continue;
            }
            let f = a[i][c].clone();
            for j in 0..cols {
                let sub = &f * &a[r][j];
                a[i][j] = &a[i][j] - sub;
            }
        }
        pivots.push(c);
        r += 1;
    }
    a.truncate(r);
    (a, pivots)
}

fn to_rational(rows: &[Vec<i64>]) -> Vec<Vec<BigRational>> {
    rows.iter()
        .map(|r| r.iter().map(|&v| BigRational::from_integer(v.into())).collect())
        .collect()
}

fn transpose(rows: &[Vec<i64>], cols: usize) -> Vec<Vec<i64>> {
    (0..cols).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}

/// Basis of `{ w : wᵀ A = 0 }` for an `n × cols` integer matrix `A`,
/// returned in reduced row echelon form (the canonical basis of that space).
pub fn left_null_space(rows: &[Vec<i64>], cols: usize) -> Vec<Vec<BigRational>> {
    let n = rows.len();
    let at = to_rational(&transpose(rows, cols));
    let (red, pivots) = rref(at, n);
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let basis: Vec<Vec<BigRational>> = free
        .iter()
        .map(|&f| {
            let mut w = vec![BigRational::zero(); n];
            w[f] = BigRational::one();
            for (row, &p) in red.iter().zip(&pivots) {
                w[p] = -row[f].clone();
            }
            w
        })
        .collect();
    rref(basis, n).0
}

/// Indices of a maximal set of linearly independent rows, greedily chosen
/// from the lowest index upward.
pub fn independent_rows(rows: &[Vec<i64>], cols: usize) -> Vec<usize> {
    let mut chosen = Vec::new();
    let mut acc: Vec<Vec<i64>> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        acc.push(row.clone());
        if rank(&acc, cols) == chosen.len() + 1 {
            chosen.push(i);
        } else {
            acc.pop();
        }
    }
    chosen
}

/// Indices of the pivot columns (lowest index first) of an integer matrix.
pub fn independent_columns(rows: &[Vec<i64>], cols: usize) -> Vec<usize> {
    rref(to_rational(rows), cols).1
}

/// Divides an integer vector by the gcd of its entries and flips its sign so
/// that the first nonzero entry is positive. The zero vector is returned
/// unchanged.
pub fn primitive_canonical(v: &[i64]) -> Vec<i64> {
    let g = v.iter().fold(0i64, |g, &x| num_integer::gcd(g, x));
    if g == 0 {
        return v.to_vec();
    }
    let sign = v.iter().find(|&&x| x != 0).map_or(1, |&x| x.signum());
    v.iter().map(|&x| sign * x / g).collect()
}

/// Sign-canonical form only (first nonzero entry positive), keeping the
/// magnitude. Returns the canonical vector and the sign that was applied.
pub fn sign_canonical(v: &[i64]) -> (Vec<i64>, i64) {
    let sign = v.iter().find(|&&x| x != 0).map_or(1, |&x| x.signum());
    (v.iter().map(|&x| sign * x).collect(), sign)
}

/// Renders a rational as `p` or `p/q`.
pub fn rational_string(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Converts a rational to the nearest double.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or_else(|| {
        // Huge numerators or denominators: go through the ratio of magnitudes.
        let n = q.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = q.denom().to_f64().unwrap_or(f64::INFINITY);
        if q.is_negative() { -(n.abs() / d) } else { n / d }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn rank_of_small_matrices() {
        assert_eq!(rank(&[vec![1, 2], vec![2, 4]], 2), 1);
        assert_eq!(rank(&[vec![1, 0], vec![0, 1]], 2), 2);
        assert_eq!(rank(&[vec![0, 0], vec![0, 0]], 2), 0);
        assert_eq!(rank(&[vec![0, 3, 1], vec![0, 6, 2], vec![1, 0, 0]], 3), 2);
        assert_eq!(rank(&[], 3), 0);
    }

    #[test]
    fn left_null_space_of_isomerization() {
        // S1 <-> S2
        let g = vec![vec![-1, 1], vec![1, -1]];
        assert_eq!(left_null_space(&g, 2), vec![vec![q(1), q(1)]]);
    }

    #[test]
    fn left_null_space_is_reduced() {
        // 2 S1 -> S2 conserves x1 + 2 x2
        let g = vec![vec![-2], vec![1]];
        let basis = left_null_space(&g, 1);
        assert_eq!(basis, vec![vec![q(1), q(2)]]);
    }

    #[test]
    fn primitive_vectors() {
        assert_eq!(primitive_canonical(&[0, -3, 3]), vec![0, 1, -1]);
        assert_eq!(primitive_canonical(&[2, 4]), vec![1, 2]);
        assert_eq!(primitive_canonical(&[0, 0]), vec![0, 0]);
        assert_eq!(sign_canonical(&[-2, 1]), (vec![2, -1], -1));
    }

    #[test]
    fn independent_rows_and_columns() {
        let g = vec![vec![-1, 1, -1], vec![1, -1, 1]];
        assert_eq!(independent_rows(&g, 3), vec![0]);
        assert_eq!(independent_columns(&g, 3), vec![0]);
    }
}
