//! Lyapunov functions for the network classes covered by the stability
//! theorems, assembled into certificates that can be evaluated,
//! differentiated and spot-checked around the equilibrium.

mod one_dim;
mod shared;
mod two_species;

pub use one_dim::{
    h_du, h_dx, h_poly, one_dim_condition_thm33, one_dim_directional, one_dim_lyapunov, solve_u_tilde, u_tilde_gradient,
    OneDimGeometry,
};
pub use shared::{u_tilde_shared, unmatched_mirrors, Monomial, SharedLine};
pub use two_species::{autocat_two_species_conditions, two_species_lyapunov, AutocatConditions, TwoSpeciesShape};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{self, MassActionSystem, ModelError};
use crate::numeric::{quadrature, sampling};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LyapunovError {
    #[error("network is not 1-dimensional")]
    NotOneDimensional,
    #[error("all reactions push in the same direction; no positive root")]
    OneSided,
    #[error("state leaves the positive orthant at species {index} (value {value})")]
    Domain { index: usize, value: f64 },
    #[error("state has length {got}, expected {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("part shares no species with the complex-balanced part")]
    NoSharedSpecies,
    #[error("part has no species outside the complex-balanced part")]
    NoFreeSpecies,
    #[error("reaction {reaction} does not shift every shared species by exactly one")]
    ShiftNotUnit { reaction: usize },
    #[error("reaction direction vanishes on the free species")]
    DegenerateOmega,
    #[error("not a two-species shape: {0}")]
    InvalidShape(String),
    #[error("normalization constants disagree ({c_from_i} vs {c_from_j})")]
    NotBalanced { c_from_i: f64, c_from_j: f64 },
    #[error("not an autocatalytic pair: {0}")]
    NotAutocatalytic(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl From<quadrature::QuadratureError<LyapunovError>> for LyapunovError {
    fn from(e: quadrature::QuadratureError<LyapunovError>) -> Self {
        match e {
            quadrature::QuadratureError::Integrand(inner) => inner,
            other => LyapunovError::Quadrature(other.to_string()),
        }
    }
}

pub(crate) fn check_positive(x: &[f64]) -> Result<(), LyapunovError> {
    match x.iter().position(|&v| !(v > 0.0)) {
        Some(i) => Err(LyapunovError::Domain { index: i, value: x[i] }),
        None => Ok(()),
    }
}

/// `Σ_j (x*_j − x_j − x_j ln(x*_j / x_j))`.
pub fn pseudo_helmholtz(x: &[f64], x_star: &[f64]) -> Result<f64, LyapunovError> {
    if x.len() != x_star.len() {
        return Err(LyapunovError::Dimension { got: x.len(), expected: x_star.len() });
    }
    check_positive(x)?;
    check_positive(x_star)?;
    Ok(x.iter().zip(x_star).map(|(&a, &s)| s - a - a * (s / a).ln()).sum())
}

/// `scale · ∫_{x_ref}^{x_s} ln(t^power / (c Σ k t^e)) dt` on a single species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesIntegral {
    pub species: usize,
    pub scale: f64,
    pub power: u32,
    pub c: f64,
    /// `(rate, exponent)` terms of the denominator sum.
    pub terms: Vec<(f64, u32)>,
    pub x_ref: f64,
}

impl SpeciesIntegral {
    pub fn integrand(&self, t: f64) -> f64 {
        let sum: f64 = self.terms.iter().map(|&(k, e)| k * t.powi(e as i32)).sum();
        self.scale * (t.powi(self.power as i32) / (self.c * sum)).ln()
    }

    pub fn value(&self, x: &[f64]) -> Result<f64, LyapunovError> {
        let t = x[self.species];
        if !(t > 0.0) {
            return Err(LyapunovError::Domain { index: self.species, value: t });
        }
        let q = quadrature::integrate(
            |s| Ok::<_, LyapunovError>(self.integrand(s)),
            self.x_ref,
            t,
            quadrature::DEFAULT_ABS_TOL,
            quadrature::DEFAULT_MAX_INTERVALS,
        )?;
        Ok(q.value)
    }
}

/// One additive term of a certificate. Species indices refer to the full
/// network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Piece {
    /// Pseudo-Helmholtz free energy on the listed species.
    PseudoHelmholtz { species: Vec<usize>, x_ref: Vec<f64> },
    /// Line integral of `ln ũ` for a 1-dimensional part on its own species.
    OneDimLine { species: Vec<usize>, network: MassActionSystem, geometry: OneDimGeometry },
    /// Line integral of `ln ũ_p` over the part's non-shared species.
    SharedLine { species: Vec<usize>, line: SharedLine },
    /// Single-species integral term.
    SpeciesIntegral(SpeciesIntegral),
}

fn gather(x: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| x[i]).collect()
}

impl Piece {
    /// Species of the full network the piece depends on.
    pub fn species(&self) -> Vec<usize> {
        match self {
            Piece::PseudoHelmholtz { species, .. }
            | Piece::OneDimLine { species, .. }
            | Piece::SharedLine { species, .. } => species.clone(),
            Piece::SpeciesIntegral(s) => vec![s.species],
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64, LyapunovError> {
        match self {
            Piece::PseudoHelmholtz { species, x_ref } => pseudo_helmholtz(&gather(x, species), x_ref),
            Piece::OneDimLine { species, network, geometry } => one_dim_lyapunov(network, geometry, &gather(x, species)),
            Piece::SharedLine { species, line } => {
                let xt = gather(x, species);
                check_positive(&xt).map_err(|e| remap_domain(e, species))?;
                line.value(&xt)
            }
            Piece::SpeciesIntegral(p) => p.value(x),
        }
    }

    /// Derivative of [`Piece::value`] at `x` in direction `v`.
    pub fn directional(&self, x: &[f64], v: &[f64]) -> Result<f64, LyapunovError> {
        match self {
            Piece::PseudoHelmholtz { species, x_ref } => {
                let xs = gather(x, species);
                check_positive(&xs).map_err(|e| remap_domain(e, species))?;
                Ok(species.iter().zip(xs.iter().zip(x_ref)).map(|(&s, (a, b))| (a / b).ln() * v[s]).sum())
            }
            Piece::OneDimLine { species, network, geometry } => {
                one_dim_directional(network, geometry, &gather(x, species), &gather(v, species))
            }
            Piece::SharedLine { species, line } => {
                let xt = gather(x, species);
                check_positive(&xt).map_err(|e| remap_domain(e, species))?;
                line.directional(&xt, &gather(v, species))
            }
            Piece::SpeciesIntegral(p) => {
                let t = x[p.species];
                if !(t > 0.0) {
                    return Err(LyapunovError::Domain { index: p.species, value: t });
                }
                Ok(p.integrand(t) * v[p.species])
            }
        }
    }
}

fn remap_domain(e: LyapunovError, species: &[usize]) -> LyapunovError {
    match e {
        LyapunovError::Domain { index, value } => LyapunovError::Domain { index: species[index], value },
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    PseudoHelmholtz,
    OneDim,
    TwoSpecies,
    AutocatTwoSpecies,
    CompositeThm33,
    CompositeThm34,
    CompositeThm46,
    CompositeCor47,
    CompositeThm52,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequiredSign {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideCondition {
    pub name: String,
    pub value: f64,
    pub required_sign: RequiredSign,
    pub pass: bool,
}

impl SideCondition {
    pub fn positive(name: impl Into<String>, value: f64) -> Self {
        SideCondition { name: name.into(), value, required_sign: RequiredSign::Positive, pass: value > 0.0 }
    }

    pub fn negative(name: impl Into<String>, value: f64) -> Self {
        SideCondition { name: name.into(), value, required_sign: RequiredSign::Negative, pass: value < 0.0 }
    }
}

/// Sampled behaviour of a certificate on a ball around the equilibrium
/// inside its compatibility class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodReport {
    pub radius_rel: f64,
    pub radius_abs: f64,
    pub samples: usize,
    pub seed: u64,
    pub max_f_dot: f64,
    pub min_f: f64,
    pub evaluation_failures: usize,
    pub pass: bool,
}

/// Upper bound on `ḟ` accepted at sampled points.
pub const DISSIPATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovCertificate {
    pub kind: CertificateKind,
    pub species: Vec<String>,
    pub x_star: Vec<f64>,
    pub pieces: Vec<Piece>,
    pub side_conditions: Vec<SideCondition>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub neighborhood: Option<NeighborhoodReport>,
}

impl LyapunovCertificate {
    pub fn evaluate(&self, x: &[f64]) -> Result<f64, LyapunovError> {
        self.check_len(x)?;
        self.pieces.iter().map(|p| p.value(x)).sum()
    }

    pub fn directional(&self, x: &[f64], v: &[f64]) -> Result<f64, LyapunovError> {
        self.check_len(x)?;
        self.check_len(v)?;
        self.pieces.iter().map(|p| p.directional(x, v)).sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, LyapunovError> {
        let n = self.x_star.len();
        (0..n)
            .map(|k| {
                let mut e = vec![0.0; n];
                e[k] = 1.0;
                self.directional(x, &e)
            })
            .collect()
    }

    pub fn conditions_pass(&self) -> bool {
        self.side_conditions.iter().all(|c| c.pass)
    }

    fn check_len(&self, x: &[f64]) -> Result<(), LyapunovError> {
        if x.len() != self.x_star.len() {
            return Err(LyapunovError::Dimension { got: x.len(), expected: self.x_star.len() });
        }
        Ok(())
    }
}

/// How one part of a decomposition contributes to a composite function.
/// Reaction indices refer to the full network; shapes are expressed in the
/// species order of the part's own subsystem.
#[derive(Debug, Clone, PartialEq)]
pub enum PartPlan {
    /// Pseudo-Helmholtz energy on every species of the part.
    ComplexBalanced { reactions: Vec<usize> },
    /// Line integral of `ln ũ` over the part's species.
    OneDim { reactions: Vec<usize> },
    /// `ln ũ_p` line over the species not in `shared` (full-network indices).
    Shared { reactions: Vec<usize>, shared: Vec<usize> },
    /// Only the `S_j` term of a two-species shape. Parts with the same `S_j`
    /// contribute a single term.
    SpeciesTerm { reactions: Vec<usize>, shape: TwoSpeciesShape },
    /// Both terms of a two-species shape.
    Pair { reactions: Vec<usize>, shape: TwoSpeciesShape },
}

/// Assembles the pieces of a certificate. Side conditions are left empty for
/// the caller to fill in.
pub fn composite_lyapunov(
    kind: CertificateKind,
    mas: &MassActionSystem,
    plans: &[PartPlan],
    x_star: &[f64],
) -> Result<LyapunovCertificate, LyapunovError> {
    mas.check_state(x_star)?;
    let mut pieces = Vec::new();
    let mut helmholtz: Vec<usize> = Vec::new();
    let mut single_terms: Vec<usize> = Vec::new();
    for plan in plans {
        match plan {
            PartPlan::ComplexBalanced { reactions } => {
                let (_, map) = mas.subsystem(reactions)?;
                for s in map {
                    if !helmholtz.contains(&s) {
                        helmholtz.push(s);
                    }
                }
            }
            PartPlan::OneDim { reactions } => {
                let (sub, map) = mas.subsystem(reactions)?;
                let geometry = OneDimGeometry::new(&sub, &gather(x_star, &map))?;
                pieces.push(Piece::OneDimLine { species: map, network: sub, geometry });
            }
            PartPlan::Shared { reactions, shared } => {
                let (sub, map) = mas.subsystem(reactions)?;
                let local: Vec<usize> =
                    shared.iter().filter_map(|s| map.iter().position(|m| m == s)).collect();
                let line = SharedLine::new(&sub, &local, &gather(x_star, &map))?;
                let species = line.free.iter().map(|&f| map[f]).collect();
                pieces.push(Piece::SharedLine { species, line });
            }
            PartPlan::SpeciesTerm { reactions, shape } => {
                let (sub, map) = mas.subsystem(reactions)?;
                let j = map[shape.j];
                if !single_terms.contains(&j) {
                    single_terms.push(j);
                    pieces.push(Piece::SpeciesIntegral(shape.piece_j(&sub, j, x_star[j])));
                }
            }
            PartPlan::Pair { reactions, shape } => {
                let (sub, map) = mas.subsystem(reactions)?;
                let (i, j) = (map[shape.i], map[shape.j]);
                pieces.push(Piece::SpeciesIntegral(shape.piece_i(&sub, i, x_star[i])));
                pieces.push(Piece::SpeciesIntegral(shape.piece_j(&sub, j, x_star[j])));
            }
        }
    }
    if !helmholtz.is_empty() {
        helmholtz.sort_unstable();
        let x_ref = gather(x_star, &helmholtz);
        pieces.insert(0, Piece::PseudoHelmholtz { species: helmholtz, x_ref });
    }
    Ok(LyapunovCertificate {
        kind,
        species: mas.species_names(),
        x_star: x_star.to_vec(),
        pieces,
        side_conditions: Vec::new(),
        neighborhood: None,
    })
}

/// `ḟ(x) = ∇f(x)ᵀ ẋ` along the mass-action vector field.
pub fn dissipation_check(cert: &LyapunovCertificate, mas: &MassActionSystem, x: &[f64]) -> Result<f64, LyapunovError> {
    let rhs = model::ode_rhs(mas, x)?;
    cert.directional(x, &rhs)
}

/// Samples `count` points of the compatibility class within relative radius
/// `radius_rel` (scaled by the smallest equilibrium coordinate) and records
/// the largest `ḟ` and smallest `f`.
pub fn neighborhood_check(
    cert: &LyapunovCertificate,
    mas: &MassActionSystem,
    radius_rel: f64,
    count: usize,
    seed: u64,
) -> NeighborhoodReport {
    let basis = model::stoichiometric_basis(mas);
    let min_x = cert.x_star.iter().cloned().fold(f64::INFINITY, f64::min);
    let radius_abs = radius_rel * min_x;
    let points = sampling::ball_samples(&cert.x_star, &basis, radius_abs, count, seed);
    let (mut max_f_dot, mut min_f, mut failures) = (f64::NEG_INFINITY, f64::INFINITY, 0);
    for p in &points {
        match (cert.evaluate(p), dissipation_check(cert, mas, p)) {
            (Ok(f), Ok(fd)) => {
                min_f = min_f.min(f);
                max_f_dot = max_f_dot.max(fd);
            }
            _ => failures += 1,
        }
    }
    let sampled = !points.is_empty() && failures == 0 && !basis.is_empty();
    NeighborhoodReport {
        radius_rel,
        radius_abs,
        samples: points.len(),
        seed,
        max_f_dot,
        min_f,
        evaluation_failures: failures,
        pass: sampled && max_f_dot <= DISSIPATION_TOL && min_f > 0.0,
    }
}

/// Central-difference gradient, used to cross-check analytic derivatives.
pub fn numeric_gradient(cert: &LyapunovCertificate, x: &[f64], h: f64) -> Result<Vec<f64>, LyapunovError> {
    (0..x.len())
        .map(|k| {
            let (mut a, mut b) = (x.to_vec(), x.to_vec());
            a[k] += h;
            b[k] -= h;
            Ok((cert.evaluate(&a)? - cert.evaluate(&b)?) / (2.0 * h))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn helmholtz_values() {
        assert_eq!(pseudo_helmholtz(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 0.0);
        let v = pseudo_helmholtz(&[2.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!((v - (-1.0 + 2.0 * 2f64.ln())).abs() < 1e-15);
        assert!(pseudo_helmholtz(&[0.0, 1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn one_dim_certificate_matches_closed_form() {
        // S1 <-> S2 with kf = 1, kr = 2; x* = (2, 1) on the class x1 + x2 = 3
        let m = MassActionSystem::from_triples(&["S1", "S2"], &[(&[1, 0], &[0, 1], 1.0), (&[0, 1], &[1, 0], 2.0)]).unwrap();
        let cert = composite_lyapunov(CertificateKind::OneDim, &m, &[PartPlan::OneDim { reactions: vec![0, 1] }], &[2.0, 1.0])
            .unwrap();
        assert_eq!(cert.evaluate(&[2.0, 1.0]).unwrap(), 0.0);
        // along the class ũ = 2 x2 / x1; f = ∫ ln(2 t / (3 − t)) dt over x2 from 1
        let oracle = quadrature::integrate_default(|t| (2.0 * t / (3.0 - t)).ln(), 1.0, 2.0).unwrap();
        assert!((cert.evaluate(&[1.0, 2.0]).unwrap() - oracle).abs() < 1e-9);
        let fd = dissipation_check(&cert, &m, &[1.0, 2.0]).unwrap();
        assert!(fd < 0.0);
        let g = cert.gradient(&[2.0, 1.0]).unwrap();
        assert!(crate::numeric::inf_norm(&g) < 1e-12);
    }

    #[test]
    fn neighborhood_of_isomerization() {
        let m = MassActionSystem::from_triples(&["S1", "S2"], &[(&[1, 0], &[0, 1], 1.0), (&[0, 1], &[1, 0], 2.0)]).unwrap();
        let cert = composite_lyapunov(CertificateKind::OneDim, &m, &[PartPlan::OneDim { reactions: vec![0, 1] }], &[2.0, 1.0])
            .unwrap();
        let r = neighborhood_check(&cert, &m, 0.1, 50, 7);
        assert!(r.pass, "{r:?}");
        assert_eq!(r.samples, 50);
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let m = MassActionSystem::from_triples(
            &["S1", "S2", "S3"],
            &[(&[1, 0, 0], &[0, 1, 0], 1.0), (&[0, 1, 0], &[1, 0, 0], 1.0), (&[0, 1, 0], &[0, 0, 1], 1.0), (&[0, 0, 1], &[0, 1, 0], 1.0)],
        )
        .unwrap();
        let cert = composite_lyapunov(
            CertificateKind::CompositeThm34,
            &m,
            &[PartPlan::ComplexBalanced { reactions: vec![0, 1] }, PartPlan::Shared { reactions: vec![2, 3], shared: vec![1] }],
            &[1.0, 1.0, 1.0],
        )
        .unwrap();
        let x = [1.1, 0.95, 0.9];
        let g = cert.gradient(&x).unwrap();
        let n = numeric_gradient(&cert, &x, 1e-5).unwrap();
        for (a, b) in g.iter().zip(&n) {
            assert!((a - b).abs() < 1e-6, "{g:?} vs {n:?}");
        }
    }

    #[test]
    fn certificate_serializes_with_tagged_pieces() {
        let m = MassActionSystem::from_triples(&["S1", "S2"], &[(&[1, 0], &[0, 1], 1.0), (&[0, 1], &[1, 0], 1.0)]).unwrap();
        let cert =
            composite_lyapunov(CertificateKind::PseudoHelmholtz, &m, &[PartPlan::ComplexBalanced { reactions: vec![0, 1] }], &[1.0, 1.0])
                .unwrap();
        let json = serde_json::to_string(&cert).unwrap();
        assert!(json.contains("\"type\":\"pseudo_helmholtz\""));
        let back: LyapunovCertificate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cert);
    }
}
