//! Numerical building blocks: quadrature, scalar root finding, explicit
//! Runge–Kutta integration and small dense helpers.

pub mod quadrature;
pub mod rk45;
pub mod root;
pub mod sampling;

/// Orthonormal basis of the span of `vectors` by modified Gram–Schmidt with
/// one reorthogonalization pass. Vectors that are (numerically) dependent on
/// earlier ones are dropped.
pub fn orthonormal_basis(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let scale = norm(v);
        if scale == 0.0 {
            continue;
        }
        let mut u = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let d = dot(&u, b);
                for (ui, bi) in u.iter_mut().zip(b) {
                    *ui -= d * bi;
                }
            }
        }
        let len = norm(&u);
        if len > 1e-10 * scale {
            basis.push(u.iter().map(|x| x / len).collect());
        }
    }
    basis
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Relative agreement test used for flux sums and rate constants:
/// `|a - b| <= abs + rel * max(|a|, |b|)`.
pub fn close(a: f64, b: f64, abs: f64, rel: f64) -> bool {
    (a - b).abs() <= abs + rel * a.abs().max(b.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_schmidt_drops_dependent_vectors() {
        let b = orthonormal_basis(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0], vec![0.0, 1.0, 1.0]]);
        assert_eq!(b.len(), 2);
        assert!(dot(&b[0], &b[1]).abs() < 1e-15);
        for v in &b {
            assert!((norm(v) - 1.0).abs() < 1e-15);
        }
    }
}
