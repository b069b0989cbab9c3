//! Seeded low-discrepancy sampling of balls inside an affine subspace.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u32; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107,
    109, 113, 127, 131,
];

/// Radical inverse of `index` in base `base`.
pub fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % b) as f64 * f;
        index /= b;
        f *= inv;
    }
    out
}

/// `count` points of a Halton sequence in `[0,1)^dim` with a seeded
/// Cranley–Patterson rotation. Dimensions beyond the built-in prime table
/// fall back to seeded uniform draws.
pub fn shifted_halton(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    (0..count)
        .map(|k| {
            (0..dim)
                .map(|d| {
                    let raw = match PRIMES.get(d) {
                        Some(&p) => radical_inverse(k as u64 + 1, p),
                        None => rng.gen::<f64>(),
                    };
                    (raw + shift[d]).fract()
                })
                .collect()
        })
        .collect()
}

/// Points `center + ρ Σ c_k v_k` where `{v_k}` is the given orthonormal
/// basis, `c` a unit direction and `ρ ∈ [radius/2, radius)`. Every point
/// lies within Euclidean distance `radius` of `center`.
pub fn ball_samples(center: &[f64], basis: &[Vec<f64>], radius: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let d = basis.len();
    if d == 0 || radius == 0.0 {
        return vec![center.to_vec(); count];
    }
    shifted_halton(d + 1, count, seed)
        .into_iter()
        .map(|u| {
            let mut dir: Vec<f64> = u[..d].iter().map(|v| 2.0 * v - 1.0).collect();
            let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if len < 1e-12 {
                dir = vec![0.0; d];
                dir[0] = 1.0;
            } else {
                dir.iter_mut().for_each(|v| *v /= len);
            }
            let rho = radius * (0.5 + 0.5 * u[d]);
            let mut x = center.to_vec();
            for (c, v) in dir.iter().zip(basis) {
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi += rho * c * vi;
                }
            }
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert_eq!(radical_inverse(4, 2), 0.125);
    }

    #[test]
    fn ball_samples_stay_in_ball() {
        let basis = vec![vec![std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2]];
        let pts = ball_samples(&[1.0, 1.0], &basis, 0.1, 50, 7);
        for p in &pts {
            let d = ((p[0] - 1.0).powi(2) + (p[1] - 1.0).powi(2)).sqrt();
            assert!(d < 0.1 + 1e-15 && d >= 0.05 - 1e-15);
            assert!((p[0] + p[1] - 2.0).abs() < 1e-14);
        }
        assert_eq!(pts, ball_samples(&[1.0, 1.0], &basis, 0.1, 50, 7));
        assert_ne!(pts, ball_samples(&[1.0, 1.0], &basis, 0.1, 50, 8));
    }
}
