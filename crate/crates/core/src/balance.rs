//! Positive equilibria and the balance hierarchy (detailed, complex,
//! reaction-vector, generalized) at a given state.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact;
use crate::model::{self, Complex, MassActionSystem, ModelError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BalanceError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("initial guess must be strictly positive (entry {0})")]
    NonPositiveGuess(usize),
    #[error("expected {expected} class levels, got {got}")]
    LevelCount { expected: usize, got: usize },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("damping floor reached at iteration {0}: no positive step decreases the residual")]
    DampingFloor(usize),
    #[error("partition does not cover reaction {0} on the {1} side")]
    Cover(usize, &'static str),
    #[error("partition references reaction {0}, out of range")]
    PartitionIndex(usize),
}

/// Absolute and relative tolerance on flux sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxTolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for FluxTolerance {
    fn default() -> Self {
        FluxTolerance { abs: 1e-12, rel: 1e-9 }
    }
}

impl FluxTolerance {
    pub fn close(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.abs + self.rel * a.abs().max(b.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPoint {
    pub x_star: Vec<f64>,
    pub residual_inf: f64,
    /// `wᵀx*` for each vector of the canonical conservation basis.
    pub compatibility_levels: Vec<f64>,
    pub iterations: usize,
}

impl EquilibriumPoint {
    /// Describes `x` without solving anything.
    pub fn at(mas: &MassActionSystem, x: &[f64]) -> Result<Self, ModelError> {
        let rhs = model::ode_rhs(mas, x)?;
        Ok(EquilibriumPoint {
            x_star: x.to_vec(),
            residual_inf: rhs.iter().fold(0.0, |m, v| m.max(v.abs())),
            compatibility_levels: levels(mas, x),
            iterations: 0,
        })
    }
}

fn levels(mas: &MassActionSystem, x: &[f64]) -> Vec<f64> {
    model::conservation_laws_f64(mas)
        .iter()
        .map(|w| w.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// `ΓΞ(x) = 0` up to the flux tolerance, measured per species against the
/// gross flux through that species.
pub fn is_equilibrium(mas: &MassActionSystem, x: &[f64], tol: FluxTolerance) -> Result<bool, ModelError> {
    let rates = model::reaction_rates(mas, x)?;
    let n = mas.num_species();
    let mut net = vec![0.0; n];
    let mut gross = vec![0.0; n];
    for (r, rate) in mas.reactions().iter().zip(&rates) {
        for (s, v) in r.reaction_vector().into_iter().enumerate() {
            net[s] += v as f64 * rate;
            gross[s] += (v as f64 * rate).abs();
        }
    }
    Ok(net.iter().zip(&gross).all(|(a, g)| a.abs() <= tol.abs + tol.rel * g))
}

pub const MAX_NEWTON_ITERATIONS: usize = 200;
pub const NEWTON_TOLERANCE: f64 = 1e-10;
const DAMPING_FLOOR: f64 = 1.0 / (1u64 << 40) as f64;

/// Damped Newton (Gauss–Newton when the system is overdetermined) for a
/// positive equilibrium. The equations are the independent rows of `ΓΞ(x)`
/// plus one linear constraint per conservation hint of `mas`, or, without
/// hints, one per canonical conservation law with level taken from
/// `class_levels` or else from the guess.
pub fn find_equilibrium(
    mas: &MassActionSystem,
    guess: &[f64],
    class_levels: Option<&[f64]>,
) -> Result<EquilibriumPoint, BalanceError> {
    let n = mas.num_species();
    if guess.len() != n {
        return Err(ModelError::StateLength { got: guess.len(), expected: n }.into());
    }
    if let Some(i) = guess.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(BalanceError::NonPositiveGuess(i));
    }
    let gamma = model::stoichiometric_matrix(mas);
    let rows = exact::independent_rows(&gamma, mas.num_reactions());
    let constraints: Vec<(Vec<f64>, f64)> = if mas.conservation_hints().is_empty() {
        let basis = model::conservation_laws_f64(mas);
        let given = match class_levels {
            Some(l) if l.len() != basis.len() => {
                return Err(BalanceError::LevelCount { expected: basis.len(), got: l.len() })
            }
            Some(l) => l.to_vec(),
            None => basis.iter().map(|w| w.iter().zip(guess).map(|(a, b)| a * b).sum()).collect(),
        };
        basis.into_iter().zip(given).collect()
    } else {
        let hints = mas.conservation_hints();
        let given = match class_levels {
            Some(l) if l.len() != hints.len() => {
                return Err(BalanceError::LevelCount { expected: hints.len(), got: l.len() })
            }
            Some(l) => l.to_vec(),
            None => hints.iter().map(|h| h.level).collect(),
        };
        hints.iter().map(|h| h.weights.clone()).zip(given).collect()
    };

    let residual = |x: &[f64]| -> Result<DVector<f64>, ModelError> {
        let rhs = model::ode_rhs(mas, x)?;
        let mut f: Vec<f64> = rows.iter().map(|&i| rhs[i]).collect();
        for (w, level) in &constraints {
            f.push(w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - level);
        }
        Ok(DVector::from_vec(f))
    };
    let jacobian = |x: &[f64]| -> Result<DMatrix<f64>, ModelError> {
        let jac = model::ode_jacobian(mas, x)?;
        let m = rows.len() + constraints.len();
        Ok(DMatrix::from_fn(m, n, |i, j| if i < rows.len() { jac[rows[i]][j] } else { constraints[i - rows.len()].0[j] }))
    };

    let mut x = guess.to_vec();
    let mut f = residual(&x)?;
    for iter in 0..=MAX_NEWTON_ITERATIONS {
        let norm_inf = f.amax();
        if norm_inf <= NEWTON_TOLERANCE {
            let rhs = model::ode_rhs(mas, &x)?;
            return Ok(EquilibriumPoint {
                residual_inf: rhs.iter().fold(0.0, |m, v| m.max(v.abs())),
                compatibility_levels: levels(mas, &x),
                x_star: x,
                iterations: iter,
            });
        }
        if iter == MAX_NEWTON_ITERATIONS {
            break;
        }
        let j = jacobian(&x)?;
        let svd = j.svd(true, true);
        let eps = svd.singular_values.max() * 1e-13;
        let step = svd.solve(&(-&f), eps).map_err(|_| BalanceError::NoConvergence { iterations: iter, residual: norm_inf })?;
        let mut lambda = 1.0;
        let current = f.norm();
        loop {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + lambda * d).collect();
            if trial.iter().all(|&v| v > 0.0) {
                let ft = residual(&trial)?;
                if ft.norm() < current {
                    x = trial;
                    f = ft;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < DAMPING_FLOOR {
                return Err(BalanceError::DampingFloor(iter));
            }
        }
    }
    Err(BalanceError::NoConvergence { iterations: MAX_NEWTON_ITERATIONS, residual: f.amax() })
}

/// Left and right flux sums of one balance group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupResidual {
    pub label: String,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub left_flux: f64,
    pub right_flux: f64,
    pub residual: f64,
    pub balanced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceCheck {
    pub holds: bool,
    pub groups: Vec<GroupResidual>,
}

impl BalanceCheck {
    fn from_groups(groups: Vec<GroupResidual>) -> Self {
        BalanceCheck { holds: !groups.is_empty() && groups.iter().all(|g| g.balanced), groups }
    }
}

/// Reaction-index pairs `(L_i, R_i)` of a generalized balance partition.
pub type Partition = Vec<(Vec<usize>, Vec<usize>)>;

fn group(mas: &MassActionSystem, x: &[f64], label: String, left: Vec<usize>, right: Vec<usize>, tol: FluxTolerance) -> GroupResidual {
    let sum = |idx: &[usize]| idx.iter().map(|&i| mas.reactions()[i].flux(x)).sum::<f64>();
    let (l, r) = (sum(&left), sum(&right));
    GroupResidual { label, balanced: tol.close(l, r), left, right, left_flux: l, right_flux: r, residual: l - r }
}

/// Per complex: reactions leaving it and reactions entering it.
pub fn complex_partition(mas: &MassActionSystem) -> Vec<(Complex, Vec<usize>, Vec<usize>)> {
    mas.complexes()
        .into_iter()
        .map(|c| {
            let out = (0..mas.num_reactions()).filter(|&i| mas.reactions()[i].reactant == c).collect();
            let inn = (0..mas.num_reactions()).filter(|&i| mas.reactions()[i].product == c).collect();
            (c, out, inn)
        })
        .collect()
}

/// Reactions grouped by reaction vector up to sign. Each entry is the
/// sign-canonical vector `η`, the reactions with vector `η`, and those with
/// vector `−η`.
pub fn reaction_vector_groups(mas: &MassActionSystem) -> Vec<(Vec<i64>, Vec<usize>, Vec<usize>)> {
    let mut groups: BTreeMap<Vec<i64>, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    let mut order = Vec::new();
    for (i, r) in mas.reactions().iter().enumerate() {
        let (eta, sign) = exact::sign_canonical(&r.reaction_vector());
        let e = groups.entry(eta.clone()).or_insert_with(|| {
            order.push(eta.clone());
            Default::default()
        });
        if sign > 0 { e.0.push(i) } else { e.1.push(i) }
    }
    order
        .into_iter()
        .map(|eta| {
            let (l, r) = groups.remove(&eta).unwrap_or_default();
            (eta, l, r)
        })
        .collect()
}

/// Pairs `(i, j)` with reaction `j` the reverse of reaction `i`, `i < j`;
/// `None` if some reaction has no reverse.
pub fn reversible_pairs(mas: &MassActionSystem) -> Option<Vec<(usize, usize)>> {
    let rs = mas.reactions();
    let mut pairs = Vec::new();
    for (i, r) in rs.iter().enumerate() {
        let j = rs.iter().position(|s| s.reactant == r.product && s.product == r.reactant)?;
        if i < j {
            pairs.push((i, j));
        }
    }
    Some(pairs)
}

pub fn check_complex_balanced(mas: &MassActionSystem, x: &[f64], tol: FluxTolerance) -> Result<BalanceCheck, ModelError> {
    mas.check_state(x)?;
    let names = mas.species_names();
    let groups = complex_partition(mas)
        .into_iter()
        .map(|(c, out, inn)| group(mas, x, c.display(&names).to_string(), out, inn, tol))
        .collect();
    Ok(BalanceCheck::from_groups(groups))
}

pub fn check_detailed_balanced(mas: &MassActionSystem, x: &[f64], tol: FluxTolerance) -> Result<BalanceCheck, ModelError> {
    mas.check_state(x)?;
    let Some(pairs) = reversible_pairs(mas) else {
        return Ok(BalanceCheck { holds: false, groups: Vec::new() });
    };
    let groups = pairs
        .into_iter()
        .map(|(i, j)| group(mas, x, format!("R{i}<->R{j}"), vec![i], vec![j], tol))
        .collect();
    Ok(BalanceCheck::from_groups(groups))
}

pub fn check_reaction_vector_balanced(mas: &MassActionSystem, x: &[f64], tol: FluxTolerance) -> Result<BalanceCheck, ModelError> {
    mas.check_state(x)?;
    let groups = reaction_vector_groups(mas)
        .into_iter()
        .map(|(eta, l, r)| {
            let label = format!("{eta:?}");
            let mut g = group(mas, x, label, l, r, tol);
            // A one-sided group can only balance if nothing flows through it.
            if g.right.is_empty() || g.left.is_empty() {
                g.balanced = g.left_flux == 0.0 && g.right_flux == 0.0;
            }
            g
        })
        .collect();
    Ok(BalanceCheck::from_groups(groups))
}

pub fn check_generalized_balanced(
    mas: &MassActionSystem,
    x: &[f64],
    partition: &[(Vec<usize>, Vec<usize>)],
    tol: FluxTolerance,
) -> Result<BalanceCheck, BalanceError> {
    mas.check_state(x)?;
    let r = mas.num_reactions();
    let mut left = vec![false; r];
    let mut right = vec![false; r];
    for (l, rr) in partition {
        for (idx, side) in [(l, &mut left), (rr, &mut right)] {
            for &i in idx {
                if i >= r {
                    return Err(BalanceError::PartitionIndex(i));
                }
                side[i] = true;
            }
        }
    }
    if let Some(i) = left.iter().position(|&b| !b) {
        return Err(BalanceError::Cover(i, "left"));
    }
    if let Some(i) = right.iter().position(|&b| !b) {
        return Err(BalanceError::Cover(i, "right"));
    }
    let groups = partition
        .iter()
        .enumerate()
        .map(|(k, (l, rr))| group(mas, x, format!("T{k}"), l.clone(), rr.clone(), tol))
        .collect();
    Ok(BalanceCheck::from_groups(groups))
}

/// The `(L_i, R_i)` tuples of a check's groups. Detailed and reaction-vector
/// groups are indexed by direction, so each also appears mirrored.
pub fn induced_partition(check: &BalanceCheck, mirrored: bool) -> Partition {
    let mut out: Partition = check.groups.iter().map(|g| (g.left.clone(), g.right.clone())).collect();
    if mirrored {
        out.extend(check.groups.iter().map(|g| (g.right.clone(), g.left.clone())));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceCertificate {
    pub point: EquilibriumPoint,
    pub equilibrium: bool,
    pub detailed: bool,
    pub complex_balanced: bool,
    pub reaction_vector_balanced: bool,
    /// Partition of the strongest balance notion that holds.
    pub generalized_partition: Option<Partition>,
    pub per_group_residuals: Vec<GroupResidual>,
}

/// Runs every balance check at `x`.
pub fn certify_balance(mas: &MassActionSystem, x: &[f64], tol: FluxTolerance) -> Result<BalanceCertificate, ModelError> {
    let point = EquilibriumPoint::at(mas, x)?;
    let equilibrium = is_equilibrium(mas, x, tol)?;
    let detailed = check_detailed_balanced(mas, x, tol)?;
    let complex = check_complex_balanced(mas, x, tol)?;
    let rv = check_reaction_vector_balanced(mas, x, tol)?;
    let chosen = [(&detailed, true), (&complex, false), (&rv, true)].into_iter().find(|(c, _)| c.holds);
    let generalized_partition = chosen.map(|(c, mirrored)| induced_partition(c, mirrored));
    let chosen = chosen.map(|(c, _)| c);
    let per_group_residuals = chosen.unwrap_or(&rv).groups.clone();
    Ok(BalanceCertificate {
        point,
        equilibrium,
        detailed: detailed.holds,
        complex_balanced: complex.holds,
        reaction_vector_balanced: rv.holds,
        generalized_partition,
        per_group_residuals,
    })
}
