//! Lyapunov functions of 1-dimensional networks built from the auxiliary
//! polynomial `h(x, u)` and its positive root `ũ(x)`.

use serde::{Deserialize, Serialize};

use super::{check_positive, LyapunovError};
use crate::exact;
use crate::model::MassActionSystem;
use crate::numeric::{quadrature, root};

/// The line structure of a 1-dimensional network: every reaction vector is
/// `β_i ω`, and states split as `x = y†(x) + γ(x) ω` with `γ` measured
/// orthogonally from the anchor `x_ref`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneDimGeometry {
    pub omega: Vec<i64>,
    pub betas: Vec<i64>,
    pub x_ref: Vec<f64>,
}

impl OneDimGeometry {
    /// `ω` is the primitive, sign-canonical generator of the stoichiometric
    /// subspace.
    pub fn new(mas: &MassActionSystem, x_ref: &[f64]) -> Result<Self, LyapunovError> {
        if x_ref.len() != mas.num_species() {
            return Err(LyapunovError::Dimension { got: x_ref.len(), expected: mas.num_species() });
        }
        let vectors: Vec<Vec<i64>> = mas.reactions().iter().map(|r| r.reaction_vector()).collect();
        let omega = exact::primitive_canonical(&vectors[0]);
        let p = omega.iter().position(|&w| w != 0).ok_or(LyapunovError::NotOneDimensional)?;
        let mut betas = Vec::with_capacity(vectors.len());
        for v in &vectors {
            let beta = v[p] / omega[p];
            if v.iter().zip(&omega).any(|(&a, &w)| a != beta * w) {
                return Err(LyapunovError::NotOneDimensional);
            }
            betas.push(beta);
        }
        Ok(OneDimGeometry { omega, betas, x_ref: x_ref.to_vec() })
    }

    /// Same geometry with `ω` replaced by `−ω`.
    pub fn flipped(&self) -> Self {
        OneDimGeometry {
            omega: self.omega.iter().map(|w| -w).collect(),
            betas: self.betas.iter().map(|b| -b).collect(),
            x_ref: self.x_ref.clone(),
        }
    }

    pub fn omega_f64(&self) -> Vec<f64> {
        self.omega.iter().map(|&w| w as f64).collect()
    }

    fn omega_sq(&self) -> f64 {
        self.omega.iter().map(|&w| (w * w) as f64).sum()
    }

    pub fn gamma(&self, x: &[f64]) -> f64 {
        let num: f64 = self.omega.iter().zip(x.iter().zip(&self.x_ref)).map(|(&w, (a, b))| w as f64 * (a - b)).sum();
        num / self.omega_sq()
    }

    pub fn y_dagger(&self, x: &[f64]) -> Vec<f64> {
        let g = self.gamma(x);
        x.iter().zip(&self.omega).map(|(a, &w)| a - g * w as f64).collect()
    }
}

fn powi(u: f64, j: i64) -> f64 {
    u.powi(j as i32)
}

/// `h(x, u) = Σ_{β>0} k x^v Σ_{j=0}^{β−1} u^j − Σ_{β<0} k x^v Σ_{j=β}^{−1} u^j`.
pub fn h_poly(mas: &MassActionSystem, geom: &OneDimGeometry, x: &[f64], u: f64) -> f64 {
    mas.reactions()
        .iter()
        .zip(&geom.betas)
        .map(|(r, &beta)| {
            let flux = r.flux(x);
            if beta > 0 {
                flux * (0..beta).map(|j| powi(u, j)).sum::<f64>()
            } else {
                -flux * (beta..0).map(|j| powi(u, j)).sum::<f64>()
            }
        })
        .sum()
}

/// `∂h/∂u`, positive for `u > 0` and `x > 0`.
pub fn h_du(mas: &MassActionSystem, geom: &OneDimGeometry, x: &[f64], u: f64) -> f64 {
    mas.reactions()
        .iter()
        .zip(&geom.betas)
        .map(|(r, &beta)| {
            let flux = r.flux(x);
            if beta > 0 {
                flux * (1..beta).map(|j| j as f64 * powi(u, j - 1)).sum::<f64>()
            } else {
                -flux * (beta..0).map(|j| j as f64 * powi(u, j - 1)).sum::<f64>()
            }
        })
        .sum()
}

/// `∂h/∂x` at `(x, u)`, for `x > 0`.
pub fn h_dx(mas: &MassActionSystem, geom: &OneDimGeometry, x: &[f64], u: f64) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    for (r, &beta) in mas.reactions().iter().zip(&geom.betas) {
        let flux = r.flux(x);
        let poly = if beta > 0 {
            (0..beta).map(|j| powi(u, j)).sum::<f64>()
        } else {
            -(beta..0).map(|j| powi(u, j)).sum::<f64>()
        };
        for (m, g) in grad.iter_mut().enumerate() {
            let v = r.reactant.coeff(m);
            if v > 0 {
                *g += poly * flux * v as f64 / x[m];
            }
        }
    }
    grad
}

/// The unique positive root of `h(x, ·)`.
pub fn solve_u_tilde(mas: &MassActionSystem, geom: &OneDimGeometry, x: &[f64]) -> Result<f64, LyapunovError> {
    check_positive(x)?;
    if !(geom.betas.iter().any(|&b| b > 0) && geom.betas.iter().any(|&b| b < 0)) {
        return Err(LyapunovError::OneSided);
    }
    let mut f = |u: f64| h_poly(mas, geom, x, u);
    let (lo, hi) = root::bracket_positive(&mut f, 1.0).map_err(|_| LyapunovError::OneSided)?;
    root::bisect_newton(f, |u| h_du(mas, geom, x, u), lo, hi, 1e-14, 3).map_err(|_| LyapunovError::OneSided)
}

/// `∇ũ(x) = −∂h/∂x / ∂h/∂u` at the root.
pub fn u_tilde_gradient(mas: &MassActionSystem, geom: &OneDimGeometry, x: &[f64]) -> Result<(f64, Vec<f64>), LyapunovError> {
    let u = solve_u_tilde(mas, geom, x)?;
    let du = h_du(mas, geom, x, u);
    Ok((u, h_dx(mas, geom, x, u).into_iter().map(|g| -g / du).collect()))
}

/// `f(x) = ∫₀^{γ(x)} ln ũ(y†(x) + α ω) dα`.
pub fn one_dim_lyapunov(mas: &MassActionSystem, geom: &OneDimGeometry, x: &[f64]) -> Result<f64, LyapunovError> {
    check_positive(x)?;
    let gamma = geom.gamma(x);
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let base = geom.y_dagger(x);
    check_positive(&base)?;
    let omega = geom.omega_f64();
    let point = |alpha: f64| -> Vec<f64> { base.iter().zip(&omega).map(|(b, w)| b + alpha * w).collect() };
    let q = quadrature::integrate(
        |alpha| solve_u_tilde(mas, geom, &point(alpha)).map(f64::ln),
        0.0,
        gamma,
        quadrature::DEFAULT_ABS_TOL,
        quadrature::DEFAULT_MAX_INTERVALS,
    )?;
    Ok(q.value)
}

/// Derivative of [`one_dim_lyapunov`] at `x` in direction `v`. The part of
/// `v` along `ω` contributes `ln ũ(x)`; the orthogonal part differentiates
/// under the integral.
pub fn one_dim_directional(mas: &MassActionSystem, geom: &OneDimGeometry, x: &[f64], v: &[f64]) -> Result<f64, LyapunovError> {
    check_positive(x)?;
    let omega = geom.omega_f64();
    let ww = geom.omega_sq();
    let along = omega.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / ww;
    let perp: Vec<f64> = v.iter().zip(&omega).map(|(a, w)| a - along * w).collect();
    let mut out = along * solve_u_tilde(mas, geom, x)?.ln();
    let gamma = geom.gamma(x);
    if gamma != 0.0 && perp.iter().any(|&p| p != 0.0) {
        let base = geom.y_dagger(x);
        check_positive(&base)?;
        let q = quadrature::integrate(
            |alpha| {
                let p: Vec<f64> = base.iter().zip(&omega).map(|(b, w)| b + alpha * w).collect();
                let (u, g) = u_tilde_gradient(mas, geom, &p)?;
                Ok::<_, LyapunovError>(g.iter().zip(&perp).map(|(a, b)| a * b).sum::<f64>() / u)
            },
            0.0,
            gamma,
            quadrature::DEFAULT_ABS_TOL,
            quadrature::DEFAULT_MAX_INTERVALS,
        )?;
        out += q.value;
    }
    Ok(out)
}

/// `ωᵀ ∂h/∂x (x*, 1) = Σ_i β_i k_i x*^{v_i} Σ_m ω_m v_{mi} / x*_m`; the
/// stability condition asks for a negative value.
pub fn one_dim_condition_thm33(mas: &MassActionSystem, geom: &OneDimGeometry, x_star: &[f64]) -> Result<f64, LyapunovError> {
    check_positive(x_star)?;
    Ok(mas
        .reactions()
        .iter()
        .zip(&geom.betas)
        .map(|(r, &beta)| {
            let s: f64 = geom
                .omega
                .iter()
                .enumerate()
                .map(|(m, &w)| w as f64 * r.reactant.coeff(m) as f64 / x_star[m])
                .sum();
            beta as f64 * r.flux(x_star) * s
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iso() -> MassActionSystem {
        MassActionSystem::from_triples(&["S1", "S2"], &[(&[1, 0], &[0, 1], 1.0), (&[0, 1], &[1, 0], 2.0)]).unwrap()
    }

    #[test]
    fn canonical_geometry() {
        let g = OneDimGeometry::new(&iso(), &[2.0, 1.0]).unwrap();
        assert_eq!(g.omega, vec![1, -1]);
        assert_eq!(g.betas, vec![-1, 1]);
        assert_eq!(g.gamma(&[3.0, 0.0]), 1.0);
        assert_eq!(g.y_dagger(&[3.0, 0.0]), vec![2.0, 1.0]);
    }

    #[test]
    fn multiples_are_one_dimensional() {
        let m = MassActionSystem::from_triples(&["A", "B"], &[(&[2, 0], &[0, 2], 1.0), (&[0, 1], &[1, 0], 1.0)]).unwrap();
        let g = OneDimGeometry::new(&m, &[1.0, 1.0]).unwrap();
        assert_eq!(g.betas, vec![-2, 1]);
        let cycle = MassActionSystem::from_triples(
            &["A", "B", "C"],
            &[(&[1, 0, 0], &[0, 1, 0], 1.0), (&[0, 1, 0], &[0, 0, 1], 1.0)],
        )
        .unwrap();
        assert_eq!(OneDimGeometry::new(&cycle, &[1.0; 3]), Err(LyapunovError::NotOneDimensional));
    }

    #[test]
    fn u_tilde_closed_form() {
        let m = iso();
        let g = OneDimGeometry::new(&m, &[2.0, 1.0]).unwrap().flipped();
        assert_eq!(g.omega, vec![-1, 1]);
        // h = x1 - 2 x2 / u
        assert!((h_poly(&m, &g, &[1.0, 2.0], 3.0) - (1.0 - 4.0 / 3.0)).abs() < 1e-15);
        assert!((solve_u_tilde(&m, &g, &[1.0, 2.0]).unwrap() - 4.0).abs() < 1e-13);
        assert!((solve_u_tilde(&m, &g, &[2.0, 1.0]).unwrap() - 1.0).abs() < 1e-14);
        let canonical = OneDimGeometry::new(&m, &[2.0, 1.0]).unwrap();
        assert!((solve_u_tilde(&m, &canonical, &[1.0, 2.0]).unwrap() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn condition_sign() {
        let m = iso();
        let g = OneDimGeometry::new(&m, &[2.0, 1.0]).unwrap();
        assert!((one_dim_condition_thm33(&m, &g, &[2.0, 1.0]).unwrap() + 3.0).abs() < 1e-14);
        assert!((one_dim_condition_thm33(&m, &g.flipped(), &[2.0, 1.0]).unwrap() + 3.0).abs() < 1e-14);
    }

    #[test]
    fn one_sided_has_no_root() {
        let m = MassActionSystem::from_triples(&["S1", "S2"], &[(&[1, 0], &[0, 1], 1.0)]).unwrap();
        let g = OneDimGeometry::new(&m, &[1.0, 1.0]).unwrap();
        assert_eq!(solve_u_tilde(&m, &g, &[1.0, 1.0]), Err(LyapunovError::OneSided));
    }

    #[test]
    fn directional_matches_differences() {
        let m = MassActionSystem::from_triples(
            &["A", "B"],
            &[(&[2, 0], &[0, 2], 1.0), (&[0, 1], &[1, 0], 2.0), (&[1, 1], &[0, 2], 0.5)],
        )
        .unwrap();
        let g = OneDimGeometry::new(&m, &[1.0, 1.0]).unwrap();
        let x = [1.1, 0.8];
        for v in [[1.0, 0.0], [0.0, 1.0], [0.3, -0.7]] {
            let h = 1e-5;
            let xp = [x[0] + h * v[0], x[1] + h * v[1]];
            let xm = [x[0] - h * v[0], x[1] - h * v[1]];
            let fd = (one_dim_lyapunov(&m, &g, &xp).unwrap() - one_dim_lyapunov(&m, &g, &xm).unwrap()) / (2.0 * h);
            let an = one_dim_directional(&m, &g, &x, &v).unwrap();
            assert!((fd - an).abs() < 1e-7, "{v:?}: {fd} vs {an}");
        }
    }
}
