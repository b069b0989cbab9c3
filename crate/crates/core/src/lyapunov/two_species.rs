//! Two-species 1-dimensional networks with a constant reactant coefficient
//! on each side, and their separable Lyapunov functions.

use serde::{Deserialize, Serialize};

use super::{LyapunovError, SideCondition, SpeciesIntegral};
use crate::model::MassActionSystem;

/// Orientation of a two-species network on `{S_i, S_j}`: reactions in
/// `left` have vector `ω = (w_i, w_j)` and share the `S_i` reactant
/// coefficient `a`; reactions in `right` have vector `−ω` and share the
/// `S_j` reactant coefficient `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSpeciesShape {
    pub i: usize,
    pub j: usize,
    pub w: [i64; 2],
    pub a: u32,
    pub b: u32,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub c_ij: f64,
}

const C_REL_TOL: f64 = 1e-9;

impl TwoSpeciesShape {
    /// Tries the orientation with `S_i = i`, `S_j = j` and `ω = w`.
    pub fn extract(mas: &MassActionSystem, i: usize, j: usize, w: [i64; 2], x_star: &[f64]) -> Result<Self, LyapunovError> {
        let bad = |msg: &str| LyapunovError::InvalidShape(msg.to_string());
        if mas.num_species() != 2 || i == j || i > 1 || j > 1 {
            return Err(bad("network must have exactly two species"));
        }
        if w[0] == 0 || w[1] == 0 {
            return Err(bad("both species must change in every reaction"));
        }
        if x_star.len() != 2 || x_star.iter().any(|&v| !(v > 0.0)) {
            return Err(LyapunovError::Dimension { got: x_star.len(), expected: 2 });
        }
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for (l, r) in mas.reactions().iter().enumerate() {
            let v = r.reaction_vector();
            let (vi, vj) = (v[i], v[j]);
            if [vi, vj] == w {
                left.push(l);
            } else if [vi, vj] == [-w[0], -w[1]] {
                right.push(l);
            } else {
                return Err(bad("reaction vectors are not ±ω"));
            }
        }
        if left.is_empty() || right.is_empty() {
            return Err(LyapunovError::OneSided);
        }
        let rs = mas.reactions();
        let a = rs[left[0]].reactant.coeff(i);
        if left.iter().any(|&l| rs[l].reactant.coeff(i) != a) {
            return Err(bad("reactant coefficient of S_i varies over L"));
        }
        let b = rs[right[0]].reactant.coeff(j);
        if right.iter().any(|&l| rs[l].reactant.coeff(j) != b) {
            return Err(bad("reactant coefficient of S_j varies over R"));
        }
        let mut shape = TwoSpeciesShape { i, j, w, a, b, left, right, c_ij: 0.0 };
        let (xi, xj) = (x_star[i], x_star[j]);
        let c1 = xi.powi(a as i32) / shape.sum_right(mas, xi);
        let c2 = xj.powi(b as i32) / shape.sum_left(mas, xj);
        if (c1 - c2).abs() > C_REL_TOL * c1.abs().max(c2.abs()) {
            return Err(LyapunovError::NotBalanced { c_from_i: c1, c_from_j: c2 });
        }
        shape.c_ij = c1;
        Ok(shape)
    }

    /// Every valid orientation, in a fixed order.
    pub fn all(mas: &MassActionSystem, x_star: &[f64]) -> Vec<Self> {
        let Some(r) = mas.reactions().first() else { return Vec::new() };
        let v = r.reaction_vector();
        if v.len() != 2 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for (i, j) in [(0, 1), (1, 0)] {
            for s in [1, -1] {
                if let Ok(shape) = Self::extract(mas, i, j, [s * v[i], s * v[j]], x_star) {
                    out.push(shape);
                }
            }
        }
        out
    }

    /// `Σ_R k t^{v_il}`.
    pub fn sum_right(&self, mas: &MassActionSystem, t: f64) -> f64 {
        self.right.iter().map(|&l| mas.reactions()[l].rate * t.powi(mas.reactions()[l].reactant.coeff(self.i) as i32)).sum()
    }

    /// `Σ_L k t^{v_jl}`.
    pub fn sum_left(&self, mas: &MassActionSystem, t: f64) -> f64 {
        self.left.iter().map(|&l| mas.reactions()[l].rate * t.powi(mas.reactions()[l].reactant.coeff(self.j) as i32)).sum()
    }

    /// `w_i⁻¹ Σ_R k (a − v_il) x_i^{v_il − 1}`, required negative.
    pub fn con1(&self, mas: &MassActionSystem, x_i: f64) -> f64 {
        let s: f64 = self
            .right
            .iter()
            .map(|&l| {
                let r = &mas.reactions()[l];
                let v = r.reactant.coeff(self.i) as i32;
                r.rate * (self.a as i32 - v) as f64 * x_i.powi(v - 1)
            })
            .sum();
        s / self.w[0] as f64
    }

    /// `w_j⁻¹ Σ_L k (b − v_jl) x_j^{v_jl − 1}`, required positive.
    pub fn con2(&self, mas: &MassActionSystem, x_j: f64) -> f64 {
        let s: f64 = self
            .left
            .iter()
            .map(|&l| {
                let r = &mas.reactions()[l];
                let v = r.reactant.coeff(self.j) as i32;
                r.rate * (self.b as i32 - v) as f64 * x_j.powi(v - 1)
            })
            .sum();
        s / self.w[1] as f64
    }

    /// The `S_i` term `−w_i⁻¹ ∫ ln(t^a / (c Σ_R k t^{v_il}))`, on parent
    /// species `species`.
    pub fn piece_i(&self, mas: &MassActionSystem, species: usize, x_ref: f64) -> SpeciesIntegral {
        SpeciesIntegral {
            species,
            scale: -1.0 / self.w[0] as f64,
            power: self.a,
            c: self.c_ij,
            terms: self.right.iter().map(|&l| (mas.reactions()[l].rate, mas.reactions()[l].reactant.coeff(self.i))).collect(),
            x_ref,
        }
    }

    /// The `S_j` term `w_j⁻¹ ∫ ln(t^b / (c Σ_L k t^{v_jl}))`.
    pub fn piece_j(&self, mas: &MassActionSystem, species: usize, x_ref: f64) -> SpeciesIntegral {
        SpeciesIntegral {
            species,
            scale: 1.0 / self.w[1] as f64,
            power: self.b,
            c: self.c_ij,
            terms: self.left.iter().map(|&l| (mas.reactions()[l].rate, mas.reactions()[l].reactant.coeff(self.j))).collect(),
            x_ref,
        }
    }

    pub fn side_conditions(&self, mas: &MassActionSystem, x_star: &[f64]) -> Vec<SideCondition> {
        vec![
            SideCondition::negative("con1", self.con1(mas, x_star[self.i])),
            SideCondition::positive("con2", self.con2(mas, x_star[self.j])),
        ]
    }
}

/// Value of the separable two-species function at `x` together with its
/// side conditions at `x_star`.
pub fn two_species_lyapunov(
    shape: &TwoSpeciesShape,
    mas: &MassActionSystem,
    x: &[f64],
    x_star: &[f64],
) -> Result<(f64, Vec<SideCondition>), LyapunovError> {
    let fi = shape.piece_i(mas, shape.i, x_star[shape.i]).value(x)?;
    let fj = shape.piece_j(mas, shape.j, x_star[shape.j]).value(x)?;
    Ok((fi + fj, shape.side_conditions(mas, x_star)))
}

/// The two autocatalytic sums and the at-most-bimolecular shortcut.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocatConditions {
    /// `Σ_{R_{i,j}} k (2 − α_j) x_j*^{α_j − 1}`.
    pub forward: f64,
    /// `Σ_{R_{j,i}} k (2 − α_i) x_i*^{α_i − 1}`.
    pub backward: f64,
    pub at_most_bimolecular: bool,
    pub shortcut_pass: bool,
    pub explicit_pass: bool,
    pub pass: bool,
}

/// `α` of a reaction `S_from + (α−1) S_to → α S_to`, if it has that form.
fn alpha(mas: &MassActionSystem, l: usize, from: usize, to: usize) -> Option<u32> {
    let r = &mas.reactions()[l];
    let a = r.product.coeff(to);
    (a >= 1
        && r.reactant.coeff(from) == 1
        && r.product.coeff(from) == 0
        && r.reactant.coeff(to) == a - 1
        && r.reactant.molecularity() == a
        && r.product.molecularity() == a)
        .then_some(a)
}

/// Conditions of an autocatalytic pair whose shape has `L = R_{i,j}`,
/// `R = R_{j,i}` and `ω = (−1, 1)`.
pub fn autocat_two_species_conditions(
    shape: &TwoSpeciesShape,
    mas: &MassActionSystem,
    x_star: &[f64],
) -> Result<AutocatConditions, LyapunovError> {
    let not = |m: &str| LyapunovError::NotAutocatalytic(m.to_string());
    if shape.w != [-1, 1] || shape.a != 1 || shape.b != 1 {
        return Err(not("shape is not oriented as an autocatalytic pair"));
    }
    let (i, j) = (shape.i, shape.j);
    let fwd: Vec<(f64, u32)> = shape
        .left
        .iter()
        .map(|&l| alpha(mas, l, i, j).map(|a| (mas.reactions()[l].rate, a)))
        .collect::<Option<_>>()
        .ok_or_else(|| not("a reaction in R_{i,j} is not of the form S_i + (α−1) S_j → α S_j"))?;
    let bwd: Vec<(f64, u32)> = shape
        .right
        .iter()
        .map(|&l| alpha(mas, l, j, i).map(|a| (mas.reactions()[l].rate, a)))
        .collect::<Option<_>>()
        .ok_or_else(|| not("a reaction in R_{j,i} is not of the form S_j + (α−1) S_i → α S_i"))?;
    let sum = |terms: &[(f64, u32)], x: f64| terms.iter().map(|&(k, a)| k * (2.0 - a as f64) * x.powi(a as i32 - 1)).sum::<f64>();
    let forward = sum(&fwd, x_star[j]);
    let backward = sum(&bwd, x_star[i]);
    let at_most_bimolecular = fwd.iter().chain(&bwd).all(|&(_, a)| a <= 2);
    let shortcut_pass =
        at_most_bimolecular && fwd.iter().any(|&(_, a)| a == 1) && bwd.iter().any(|&(_, a)| a == 1);
    let explicit_pass = forward > 0.0 && backward > 0.0;
    Ok(AutocatConditions {
        forward,
        backward,
        at_most_bimolecular,
        shortcut_pass,
        explicit_pass,
        pass: shortcut_pass || explicit_pass,
    })
}
