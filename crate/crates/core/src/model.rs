//! Core reaction-network types and their structural analysis.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("network has no reactions")]
    NoReactions,
    #[error("duplicate species name `{0}`")]
    DuplicateSpecies(String),
    #[error("species `{0}` does not appear in any complex")]
    UnusedSpecies(String),
    #[error("reaction {index}: complex has {got} entries, expected {expected}")]
    ComplexLength { index: usize, got: usize, expected: usize },
    #[error("reaction {0} is a self-loop")]
    SelfLoop(usize),
    #[error("reaction {index} has non-positive rate constant {rate}")]
    BadRate { index: usize, rate: f64 },
    #[error("conservation hint has {got} weights, expected {expected}")]
    HintLength { got: usize, expected: usize },
    #[error("state entry {index} is {value}; concentrations must be non-negative and finite")]
    Domain { index: usize, value: f64 },
    #[error("state has {got} entries, expected {expected}")]
    StateLength { got: usize, expected: usize },
    #[error("reaction index {0} out of range")]
    ReactionIndex(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Species {
    pub id: usize,
    pub name: String,
}

/// A complex as its vector of stoichiometric coefficients, one per species.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Complex(Vec<u32>);

impl Complex {
    pub fn new(stoich: Vec<u32>) -> Self {
        Complex(stoich)
    }

    pub fn zero(n: usize) -> Self {
        Complex(vec![0; n])
    }

    pub fn coeff(&self, species: usize) -> u32 {
        self.0[species]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// Sum of the coefficients.
    pub fn molecularity(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `x^v` with the convention `0^0 = 1`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .filter(|(&c, _)| c > 0)
            .map(|(&c, &xi)| xi.powi(c as i32))
            .product()
    }

    /// Restriction to a subset of species, in the order given.
    pub fn restrict(&self, species: &[usize]) -> Complex {
        Complex(species.iter().map(|&s| self.0[s]).collect())
    }

    /// Human-readable form using the given species names, e.g. `S1 + 2 S2`.
    pub fn display<'a>(&'a self, names: &'a [String]) -> ComplexDisplay<'a> {
        ComplexDisplay { complex: self, names }
    }
}

pub struct ComplexDisplay<'a> {
    complex: &'a Complex,
    names: &'a [String],
}

impl fmt::Display for ComplexDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.complex.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.complex.0.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if c == 1 {
                write!(f, "{}", self.names[i])?;
            } else {
                write!(f, "{} {}", c, self.names[i])?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reaction {
    pub reactant: Complex,
    pub product: Complex,
    pub rate: f64,
}

impl Reaction {
    pub fn new(reactant: Vec<u32>, product: Vec<u32>, rate: f64) -> Self {
        Reaction { reactant: Complex(reactant), product: Complex(product), rate }
    }

    /// Product minus reactant.
    pub fn reaction_vector(&self) -> Vec<i64> {
        self.product
            .0
            .iter()
            .zip(&self.reactant.0)
            .map(|(&p, &r)| p as i64 - r as i64)
            .collect()
    }

    /// Mass-action flux `k x^v`.
    pub fn flux(&self, x: &[f64]) -> f64 {
        self.rate * self.reactant.monomial(x)
    }
}

/// A user-declared linear constraint `weightsᵀ x = level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationHint {
    pub weights: Vec<f64>,
    pub level: f64,
}

/// A chemical reaction network with mass-action kinetics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassActionSystem {
    species: Vec<Species>,
    reactions: Vec<Reaction>,
    #[serde(default)]
    conservation_hints: Vec<ConservationHint>,
}

impl MassActionSystem {
    pub fn new<S: Into<String>>(
        species_names: impl IntoIterator<Item = S>,
        reactions: Vec<Reaction>,
    ) -> Result<Self, ModelError> {
        let species: Vec<Species> = species_names
            .into_iter()
            .enumerate()
            .map(|(id, name)| Species { id, name: name.into() })
            .collect();
        let mas = MassActionSystem { species, reactions, conservation_hints: Vec::new() };
        mas.validate()?;
        Ok(mas)
    }

    /// Convenience constructor from `(reactant, product, rate)` triples.
    pub fn from_triples(
        names: &[&str],
        triples: &[(&[u32], &[u32], f64)],
    ) -> Result<Self, ModelError> {
        let reactions = triples
            .iter()
            .map(|(r, p, k)| Reaction::new(r.to_vec(), p.to_vec(), *k))
            .collect();
        Self::new(names.iter().copied(), reactions)
    }

    pub fn with_hints(mut self, hints: Vec<ConservationHint>) -> Result<Self, ModelError> {
        let n = self.num_species();
        if let Some(h) = hints.iter().find(|h| h.weights.len() != n) {
            return Err(ModelError::HintLength { got: h.weights.len(), expected: n });
        }
        self.conservation_hints = hints;
        Ok(self)
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.reactions.is_empty() {
            return Err(ModelError::NoReactions);
        }
        let n = self.species.len();
        let mut seen = HashSet::new();
        for s in &self.species {
            if !seen.insert(s.name.as_str()) {
                return Err(ModelError::DuplicateSpecies(s.name.clone()));
            }
        }
        let mut used = vec![false; n];
        for (index, r) in self.reactions.iter().enumerate() {
            for c in [&r.reactant, &r.product] {
                if c.len() != n {
                    return Err(ModelError::ComplexLength { index, got: c.len(), expected: n });
                }
                for (u, &v) in used.iter_mut().zip(c.as_slice()) {
                    *u |= v > 0;
                }
            }
            if r.reactant == r.product {
                return Err(ModelError::SelfLoop(index));
            }
            if !(r.rate > 0.0 && r.rate.is_finite()) {
                return Err(ModelError::BadRate { index, rate: r.rate });
            }
        }
        if let Some(i) = used.iter().position(|&u| !u) {
            return Err(ModelError::UnusedSpecies(self.species[i].name.clone()));
        }
        Ok(())
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn species_names(&self) -> Vec<String> {
        self.species.iter().map(|s| s.name.clone()).collect()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn conservation_hints(&self) -> &[ConservationHint] {
        &self.conservation_hints
    }

    pub fn num_species(&self) -> usize {
        self.species.len()
    }

    pub fn num_reactions(&self) -> usize {
        self.reactions.len()
    }

    /// The subnetwork formed by the given reactions, over the species that
    /// appear in them (kept in parent order). Returns the subsystem and the
    /// map from its species indices to parent species indices.
    pub fn subsystem(&self, reaction_indices: &[usize]) -> Result<(MassActionSystem, Vec<usize>), ModelError> {
        if let Some(&bad) = reaction_indices.iter().find(|&&i| i >= self.reactions.len()) {
            return Err(ModelError::ReactionIndex(bad));
        }
        let n = self.num_species();
        let species: Vec<usize> = (0..n)
            .filter(|&s| {
                reaction_indices.iter().any(|&i| {
                    let r = &self.reactions[i];
                    r.reactant.coeff(s) > 0 || r.product.coeff(s) > 0
                })
            })
            .collect();
        let reactions = reaction_indices
            .iter()
            .map(|&i| {
                let r = &self.reactions[i];
                Reaction {
                    reactant: r.reactant.restrict(&species),
                    product: r.product.restrict(&species),
                    rate: r.rate,
                }
            })
            .collect();
        let names = species.iter().map(|&s| self.species[s].name.clone());
        Ok((MassActionSystem::new(names, reactions)?, species))
    }

    /// Same network with reactions listed in a different order.
    pub fn with_reaction_order(&self, order: &[usize]) -> Result<Self, ModelError> {
        let reactions = order
            .iter()
            .map(|&i| self.reactions.get(i).cloned().ok_or(ModelError::ReactionIndex(i)))
            .collect::<Result<_, _>>()?;
        let mut out = MassActionSystem::new(self.species_names(), reactions)?;
        out.conservation_hints = self.conservation_hints.clone();
        Ok(out)
    }

    /// Same network with species relabelled: species `i` of `self` becomes
    /// species `perm[i]` of the result.
    pub fn with_species_permutation(&self, perm: &[usize]) -> Result<Self, ModelError> {
        let n = self.num_species();
        let mut names = vec![String::new(); n];
        for (i, &p) in perm.iter().enumerate() {
            names[p] = self.species[i].name.clone();
        }
        let permute = |c: &Complex| {
            let mut v = vec![0; n];
            for (i, &p) in perm.iter().enumerate() {
                v[p] = c.coeff(i);
            }
            Complex(v)
        };
        let reactions = self
            .reactions
            .iter()
            .map(|r| Reaction { reactant: permute(&r.reactant), product: permute(&r.product), rate: r.rate })
            .collect();
        MassActionSystem::new(names, reactions)
    }

    /// Distinct complexes in order of first appearance (reactant before
    /// product within a reaction).
    pub fn complexes(&self) -> Vec<Complex> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for r in &self.reactions {
            for c in [&r.reactant, &r.product] {
                if seen.insert(c.clone()) {
                    out.push(c.clone());
                }
            }
        }
        out
    }

    pub(crate) fn check_state(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.num_species() {
            return Err(ModelError::StateLength { got: x.len(), expected: self.num_species() });
        }
        match x.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            Some(index) => Err(ModelError::Domain { index, value: x[index] }),
            None => Ok(()),
        }
    }
}

/// `n × r` integer matrix stored row-major, one row per species.
pub type IntMatrix = Vec<Vec<i64>>;

/// The stoichiometric matrix Γ: column `i` is the reaction vector of reaction `i`.
pub fn stoichiometric_matrix(mas: &MassActionSystem) -> IntMatrix {
    let n = mas.num_species();
    let mut gamma = vec![vec![0i64; mas.num_reactions()]; n];
    for (j, r) in mas.reactions().iter().enumerate() {
        for (i, v) in r.reaction_vector().into_iter().enumerate() {
            gamma[i][j] = v;
        }
    }
    gamma
}

/// Rational vectors serialize as `"p/q"` strings.
fn serialize_rational_basis<S: serde::Serializer>(
    basis: &[Vec<BigRational>],
    s: S,
) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(basis.len()))?;
    for v in basis {
        let row: Vec<String> = v.iter().map(exact::rational_string).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

fn deserialize_rational_basis<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<Vec<BigRational>>, D::Error> {
    let rows: Vec<Vec<String>> = Deserialize::deserialize(d)?;
    rows.into_iter()
        .map(|row| {
            row.into_iter()
                .map(|s| s.parse::<BigRational>().map_err(serde::de::Error::custom))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub species: Vec<String>,
    pub complexes: Vec<String>,
    pub num_reactions: usize,
    pub gamma: IntMatrix,
    pub dim_s: usize,
    pub num_complexes: usize,
    pub num_linkage_classes: usize,
    pub deficiency: i64,
    pub weakly_reversible: bool,
    pub reversible: bool,
    #[serde(serialize_with = "serialize_rational_basis", deserialize_with = "deserialize_rational_basis")]
    pub conservation_basis: Vec<Vec<BigRational>>,
}

/// Linkage classes as lists of indices into `mas.complexes()`.
pub fn linkage_classes(mas: &MassActionSystem) -> Vec<Vec<usize>> {
    let complexes = mas.complexes();
    let index: BTreeMap<&Complex, usize> = complexes.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let mut parent: Vec<usize> = (0..complexes.len()).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for r in mas.reactions() {
        let a = find(&mut parent, index[&r.reactant]);
        let b = find(&mut parent, index[&r.product]);
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..complexes.len() {
        let root = find(&mut parent, i);
        classes.entry(root).or_default().push(i);
    }
    classes.into_values().collect()
}

/// Every reaction `y -> y'` has a directed path back from `y'` to `y`.
pub fn is_weakly_reversible(mas: &MassActionSystem) -> bool {
    let complexes = mas.complexes();
    let index: BTreeMap<&Complex, usize> = complexes.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let mut adj = vec![Vec::new(); complexes.len()];
    for r in mas.reactions() {
        adj[index[&r.reactant]].push(index[&r.product]);
    }
    mas.reactions().iter().all(|r| {
        let (from, to) = (index[&r.product], index[&r.reactant]);
        let mut seen = vec![false; complexes.len()];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(u) = queue.pop_front() {
            if u == to {
                return true;
            }
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        false
    })
}

pub fn is_reversible(mas: &MassActionSystem) -> bool {
    let edges: HashSet<(&Complex, &Complex)> =
        mas.reactions().iter().map(|r| (&r.reactant, &r.product)).collect();
    mas.reactions().iter().all(|r| edges.contains(&(&r.product, &r.reactant)))
}

/// Dimension of the stoichiometric subspace.
pub fn dimension(mas: &MassActionSystem) -> usize {
    exact::rank(&stoichiometric_matrix(mas), mas.num_reactions())
}

pub fn structure_report(mas: &MassActionSystem) -> StructureReport {
    let gamma = stoichiometric_matrix(mas);
    let dim_s = exact::rank(&gamma, mas.num_reactions());
    let complexes = mas.complexes();
    let num_linkage_classes = linkage_classes(mas).len();
    let names = mas.species_names();
    StructureReport {
        species: names.clone(),
        complexes: complexes.iter().map(|c| c.display(&names).to_string()).collect(),
        num_reactions: mas.num_reactions(),
        dim_s,
        num_complexes: complexes.len(),
        num_linkage_classes,
        deficiency: complexes.len() as i64 - num_linkage_classes as i64 - dim_s as i64,
        weakly_reversible: is_weakly_reversible(mas),
        reversible: is_reversible(mas),
        conservation_basis: exact::left_null_space(&gamma, mas.num_reactions()),
        gamma,
    }
}

/// Orthonormal basis of the stoichiometric subspace, built from the
/// independent columns of Γ.
pub fn stoichiometric_basis(mas: &MassActionSystem) -> Vec<Vec<f64>> {
    let gamma = stoichiometric_matrix(mas);
    let cols = exact::independent_columns(&gamma, mas.num_reactions());
    let vectors: Vec<Vec<f64>> = cols.iter().map(|&c| gamma.iter().map(|row| row[c] as f64).collect()).collect();
    crate::numeric::orthonormal_basis(&vectors)
}

/// Canonical basis of the left null space of Γ.
pub fn conservation_laws(mas: &MassActionSystem) -> Vec<Vec<BigRational>> {
    exact::left_null_space(&stoichiometric_matrix(mas), mas.num_reactions())
}

/// Conservation laws as doubles.
pub fn conservation_laws_f64(mas: &MassActionSystem) -> Vec<Vec<f64>> {
    conservation_laws(mas)
        .iter()
        .map(|w| w.iter().map(exact::rational_to_f64).collect())
        .collect()
}

/// Reaction rates `Ξ_i(x) = k_i x^{v_i}`.
pub fn reaction_rates(mas: &MassActionSystem, x: &[f64]) -> Result<Vec<f64>, ModelError> {
    mas.check_state(x)?;
    Ok(mas.reactions().iter().map(|r| r.flux(x)).collect())
}

/// `Γ Ξ(x)`.
pub fn ode_rhs(mas: &MassActionSystem, x: &[f64]) -> Result<Vec<f64>, ModelError> {
    let rates = reaction_rates(mas, x)?;
    let mut dx = vec![0.0; mas.num_species()];
    for (r, rate) in mas.reactions().iter().zip(rates) {
        for (d, v) in dx.iter_mut().zip(r.reaction_vector()) {
            if v != 0 {
                *d += v as f64 * rate;
            }
        }
    }
    Ok(dx)
}

/// Jacobian of `Γ Ξ(x)` with respect to `x`, computed analytically.
pub fn ode_jacobian(mas: &MassActionSystem, x: &[f64]) -> Result<Vec<Vec<f64>>, ModelError> {
    mas.check_state(x)?;
    let n = mas.num_species();
    let mut jac = vec![vec![0.0; n]; n];
    for r in mas.reactions() {
        let dv = r.reaction_vector();
        for m in 0..n {
            let e = r.reactant.coeff(m);
            if e == 0 {
                continue;
            }
            let mut d = r.rate * e as f64 * x[m].powi(e as i32 - 1);
            for (s, &c) in r.reactant.as_slice().iter().enumerate() {
                if s != m && c > 0 {
                    d *= x[s].powi(c as i32);
                }
            }
            for (row, &v) in jac.iter_mut().zip(&dv) {
                if v != 0 {
                    row[m] += v as f64 * d;
                }
            }
        }
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iso(kf: f64, kr: f64) -> MassActionSystem {
        MassActionSystem::from_triples(&["S1", "S2"], &[(&[1, 0], &[0, 1], kf), (&[0, 1], &[1, 0], kr)]).unwrap()
    }

    fn aurora(k: [f64; 3]) -> MassActionSystem {
        MassActionSystem::from_triples(
            &["E", "EP"],
            &[(&[1, 0], &[0, 1], k[0]), (&[0, 1], &[1, 0], k[1]), (&[1, 1], &[0, 2], k[2])],
        )
        .unwrap()
    }

    #[test]
    fn gamma_columns() {
        let m = MassActionSystem::from_triples(&["S1", "S2"], &[(&[1, 0], &[0, 1], 1.0)]).unwrap();
        assert_eq!(stoichiometric_matrix(&m), vec![vec![-1], vec![1]]);
        let a = aurora([1.0, 1.0, 1.0]);
        assert_eq!(stoichiometric_matrix(&a), vec![vec![-1, 1, -1], vec![1, -1, 1]]);
    }

    #[test]
    fn aurora_structure() {
        let rep = structure_report(&aurora([1.0, 2.0, 1.0]));
        assert_eq!(rep.num_complexes, 4);
        assert_eq!(rep.num_linkage_classes, 2);
        assert_eq!(rep.dim_s, 1);
        assert_eq!(rep.deficiency, 1);
        assert!(!rep.weakly_reversible);
        assert!(!rep.reversible);
    }

    #[test]
    fn isomerization_structure() {
        let rep = structure_report(&iso(1.0, 2.0));
        assert_eq!((rep.num_complexes, rep.num_linkage_classes, rep.dim_s, rep.deficiency), (2, 1, 1, 0));
        assert!(rep.reversible && rep.weakly_reversible);
        assert_eq!(rep.conservation_basis.len(), 1);
    }

    #[test]
    fn weak_reversibility_of_cycle() {
        let m = MassActionSystem::from_triples(
            &["A", "B", "C"],
            &[(&[1, 0, 0], &[0, 1, 0], 1.0), (&[0, 1, 0], &[0, 0, 1], 1.0), (&[0, 0, 1], &[1, 0, 0], 1.0)],
        )
        .unwrap();
        assert!(is_weakly_reversible(&m));
        assert!(!is_reversible(&m));
    }

    #[test]
    fn rates_and_rhs() {
        let m = MassActionSystem::from_triples(&["S1", "S2"], &[(&[1, 1], &[0, 2], 1.0)]).unwrap();
        assert_eq!(reaction_rates(&m, &[2.0, 3.0]).unwrap(), vec![6.0]);
        assert_eq!(reaction_rates(&m, &[0.0, 3.0]).unwrap(), vec![0.0]);
        assert_eq!(reaction_rates(&aurora([1.0; 3]), &[1.0, 1.0]).unwrap(), vec![1.0, 1.0, 1.0]);
        assert_eq!(ode_rhs(&iso(1.0, 2.0), &[2.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(reaction_rates(&m, &[-1.0, 1.0]), Err(ModelError::Domain { index: 0, .. })));
    }

    #[test]
    fn zero_power_convention() {
        // 0^0 = 1: a reaction whose reactant does not involve a species at zero concentration
        let m = MassActionSystem::from_triples(&["S1", "S2"], &[(&[1, 0], &[0, 1], 3.0)]).unwrap();
        assert_eq!(reaction_rates(&m, &[2.0, 0.0]).unwrap(), vec![6.0]);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            MassActionSystem::from_triples(&["S1"], &[(&[1], &[1], 1.0)]),
            Err(ModelError::SelfLoop(0))
        ));
        assert!(matches!(
            MassActionSystem::from_triples(&["S1", "S2"], &[(&[1, 0], &[0, 1], 0.0)]),
            Err(ModelError::BadRate { .. })
        ));
        assert!(matches!(
            MassActionSystem::from_triples(&["S1", "S2", "S3"], &[(&[1, 0, 0], &[0, 1, 0], 1.0)]),
            Err(ModelError::UnusedSpecies(_))
        ));
        assert!(matches!(MassActionSystem::from_triples(&["S1"], &[]), Err(ModelError::NoReactions)));
    }

    #[test]
    fn subsystem_keeps_parent_order() {
        let a = aurora([1.0, 2.0, 3.0]);
        let (sub, map) = a.subsystem(&[2]).unwrap();
        assert_eq!(map, vec![0, 1]);
        assert_eq!(sub.reactions()[0].rate, 3.0);
        assert!(a.subsystem(&[7]).is_err());
    }

    #[test]
    fn analytic_jacobian_matches_differences() {
        let a = aurora([1.0, 2.0, 1.5]);
        let x = [0.7, 1.3];
        let j = ode_jacobian(&a, &x).unwrap();
        let h = 1e-6;
        for m in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[m] += h;
            xm[m] -= h;
            let fp = ode_rhs(&a, &xp).unwrap();
            let fm = ode_rhs(&a, &xm).unwrap();
            for i in 0..2 {
                assert!((j[i][m] - (fp[i] - fm[i]) / (2.0 * h)).abs() < 1e-7);
            }
        }
    }
}
