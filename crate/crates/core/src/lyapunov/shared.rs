//! 1-dimensional parts that share species with the complex-balanced part:
//! the closed-form `ũ_p` on the non-shared coordinates.

use serde::{Deserialize, Serialize};

use super::LyapunovError;
use crate::model::MassActionSystem;
use crate::numeric::quadrature;

/// A rate constant times a monomial over a fixed species list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub rate: f64,
    pub exponents: Vec<u32>,
}

impl Monomial {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.exponents.iter().zip(x).fold(self.rate, |acc, (&e, &v)| if e == 0 { acc } else { acc * v.powi(e as i32) })
    }

    /// Partial derivative with respect to coordinate `m`, for `x > 0`.
    pub fn d(&self, x: &[f64], m: usize) -> f64 {
        let e = self.exponents[m];
        if e == 0 { 0.0 } else { self.eval(x) * e as f64 / x[m] }
    }
}

/// `ũ_p(x̃) = (∏_{E_p} x*_i) Σ_R k x̃^v / Σ_L k x̃^v` on the free (non-shared)
/// coordinates `x̃`, with `L` the reactions that raise every shared species
/// by one and `R` those that lower every shared species by one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedLine {
    /// Shared species, as indices into the part's species list.
    pub shared: Vec<usize>,
    /// Free species, as indices into the part's species list.
    pub free: Vec<usize>,
    /// Direction of the free coordinates for reactions in `L`.
    pub omega: Vec<i64>,
    pub shared_product: f64,
    pub left_reactions: Vec<usize>,
    pub right_reactions: Vec<usize>,
    pub left: Vec<Monomial>,
    pub right: Vec<Monomial>,
    /// Free coordinates of the equilibrium.
    pub x_ref: Vec<f64>,
}

impl SharedLine {
    pub fn new(part: &MassActionSystem, shared: &[usize], x_star: &[f64]) -> Result<Self, LyapunovError> {
        let n = part.num_species();
        if x_star.len() != n {
            return Err(LyapunovError::Dimension { got: x_star.len(), expected: n });
        }
        if shared.is_empty() {
            return Err(LyapunovError::NoSharedSpecies);
        }
        let free: Vec<usize> = (0..n).filter(|s| !shared.contains(s)).collect();
        if free.is_empty() {
            return Err(LyapunovError::NoFreeSpecies);
        }
        let mut omega: Option<Vec<i64>> = None;
        let (mut left_reactions, mut right_reactions, mut left, mut right) = (vec![], vec![], vec![], vec![]);
        for (l, r) in part.reactions().iter().enumerate() {
            let v = r.reaction_vector();
            let shift = v[shared[0]];
            if !(shift == 1 || shift == -1) || shared.iter().any(|&s| v[s] != shift) {
                return Err(LyapunovError::ShiftNotUnit { reaction: l });
            }
            let w: Vec<i64> = free.iter().map(|&s| shift * v[s]).collect();
            match &omega {
                None => omega = Some(w),
                Some(o) if *o != w => return Err(LyapunovError::NotOneDimensional),
                _ => {}
            }
            let mono = Monomial { rate: r.rate, exponents: free.iter().map(|&s| r.reactant.coeff(s)).collect() };
            if shift > 0 {
                left_reactions.push(l);
                left.push(mono);
            } else {
                right_reactions.push(l);
                right.push(mono);
            }
        }
        let omega = omega.ok_or(LyapunovError::NotOneDimensional)?;
        if omega.iter().all(|&w| w == 0) {
            return Err(LyapunovError::DegenerateOmega);
        }
        if left.is_empty() || right.is_empty() {
            return Err(LyapunovError::OneSided);
        }
        Ok(SharedLine {
            shared_product: shared.iter().map(|&s| x_star[s]).product(),
            x_ref: free.iter().map(|&s| x_star[s]).collect(),
            shared: shared.to_vec(),
            free,
            omega,
            left_reactions,
            right_reactions,
            left,
            right,
        })
    }

    pub fn u_tilde(&self, xt: &[f64]) -> f64 {
        let r: f64 = self.right.iter().map(|m| m.eval(xt)).sum();
        let l: f64 = self.left.iter().map(|m| m.eval(xt)).sum();
        self.shared_product * r / l
    }

    pub fn u_tilde_gradient(&self, xt: &[f64]) -> Vec<f64> {
        let r: f64 = self.right.iter().map(|m| m.eval(xt)).sum();
        let l: f64 = self.left.iter().map(|m| m.eval(xt)).sum();
        (0..xt.len())
            .map(|k| {
                let dr: f64 = self.right.iter().map(|m| m.d(xt, k)).sum();
                let dl: f64 = self.left.iter().map(|m| m.d(xt, k)).sum();
                self.shared_product * (dr * l - r * dl) / (l * l)
            })
            .collect()
    }

    /// `ω_pᵀ ∇ũ_p(x̃*)`; positive when the part satisfies the condition.
    pub fn condition(&self) -> f64 {
        self.u_tilde_gradient(&self.x_ref).iter().zip(&self.omega).map(|(g, &w)| g * w as f64).sum()
    }

    fn omega_sq(&self) -> f64 {
        self.omega.iter().map(|&w| (w * w) as f64).sum()
    }

    fn gamma(&self, xt: &[f64]) -> f64 {
        self.omega.iter().zip(xt.iter().zip(&self.x_ref)).map(|(&w, (a, b))| w as f64 * (a - b)).sum::<f64>() / self.omega_sq()
    }

    fn base(&self, xt: &[f64]) -> Result<(f64, Vec<f64>), LyapunovError> {
        let g = self.gamma(xt);
        let base: Vec<f64> = xt.iter().zip(&self.omega).map(|(a, &w)| a - g * w as f64).collect();
        if let Some(i) = base.iter().position(|&v| v <= 0.0) {
            return Err(LyapunovError::Domain { index: self.free[i], value: base[i] });
        }
        Ok((g, base))
    }

    /// `∫₀^{γ(x̃)} ln ũ_p(ỹ†(x̃) + α ω_p) dα`.
    pub fn value(&self, xt: &[f64]) -> Result<f64, LyapunovError> {
        let (gamma, base) = self.base(xt)?;
        let q = quadrature::integrate(
            |a| {
                let p: Vec<f64> = base.iter().zip(&self.omega).map(|(b, &w)| b + a * w as f64).collect();
                Ok::<_, LyapunovError>(self.u_tilde(&p).ln())
            },
            0.0,
            gamma,
            quadrature::DEFAULT_ABS_TOL,
            quadrature::DEFAULT_MAX_INTERVALS,
        )?;
        Ok(q.value)
    }

    /// Derivative of [`SharedLine::value`] at `x̃` in direction `v`.
    pub fn directional(&self, xt: &[f64], v: &[f64]) -> Result<f64, LyapunovError> {
        let ww = self.omega_sq();
        let along = self.omega.iter().zip(v).map(|(&w, b)| w as f64 * b).sum::<f64>() / ww;
        let perp: Vec<f64> = v.iter().zip(&self.omega).map(|(a, &w)| a - along * w as f64).collect();
        let mut out = along * self.u_tilde(xt).ln();
        if perp.iter().any(|&p| p != 0.0) {
            let (gamma, base) = self.base(xt)?;
            let q = quadrature::integrate(
                |a| {
                    let p: Vec<f64> = base.iter().zip(&self.omega).map(|(b, &w)| b + a * w as f64).collect();
                    let g = self.u_tilde_gradient(&p);
                    Ok::<_, LyapunovError>(g.iter().zip(&perp).map(|(x, y)| x * y).sum::<f64>() / self.u_tilde(&p))
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
}

/// Builds `ũ_p` for a 1-dimensional part whose species `shared` (indices
/// into the part) also belong to the complex-balanced part. Returns the line
/// and the condition value `ω_pᵀ∇ũ_p(x̃*)`.
pub fn u_tilde_shared(part: &MassActionSystem, shared: &[usize], x_star: &[f64]) -> Result<(SharedLine, f64), LyapunovError> {
    let line = SharedLine::new(part, shared, x_star)?;
    let c = line.condition();
    Ok((line, c))
}

/// Reactions that have no mirror partner for some shared species: a
/// reaction consuming one unit of `S_j` must be matched one-to-one by a
/// reaction producing one unit with the coefficients of `S_j` swapped.
/// Returns the unmatched `(reaction, shared species)` pairs.
pub fn unmatched_mirrors(part: &MassActionSystem, shared: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for &s in shared {
        let mut producers: Vec<(usize, (u32, u32))> = Vec::new();
        let mut consumers: Vec<(usize, (u32, u32))> = Vec::new();
        for (l, r) in part.reactions().iter().enumerate() {
            let (v, vp) = (r.reactant.coeff(s), r.product.coeff(s));
            if vp == v + 1 {
                producers.push((l, (vp, v)));
            } else if v == vp + 1 {
                consumers.push((l, (v, vp)));
            } else {
                out.push((l, s));
            }
        }
        let mut used = vec![false; producers.len()];
        for (l, key) in consumers {
            match producers.iter().enumerate().position(|(k, (_, pk))| !used[k] && *pk == key) {
                Some(k) => used[k] = true,
                None => out.push((l, s)),
            }
        }
        out.extend(producers.iter().zip(&used).filter(|(_, &u)| !u).map(|((l, _), _)| (*l, s)));
    }
    out.sort_unstable();
    out
}
