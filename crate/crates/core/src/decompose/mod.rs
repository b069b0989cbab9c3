//! Decompositions of a network into complex-balanced, 1-dimensional and
//! two-species parts, the stability checks built on them, and a budgeted
//! search for candidate decompositions.

mod autocat;
mod certify;
mod search;
mod theorems;

pub use autocat::{check_thm_auto, is_autocatalytic, pairwise_balance_equivalence, AutocatPair, AutocatalyticStructure};
pub use certify::{certify, CertifyError, CertifyOptions, CertifyReport, THEOREM_ORDER};
pub use search::{search_decomposition, DEFAULT_BUDGET};
pub use theorems::{
    check_corollary_mixed, check_thm_disjoint, check_thm_shared_1d, check_thm_shared_two_species, Condition, Overall,
    TheoremOutcome, TheoremVerdict,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::balance::{self, FluxTolerance};
use crate::lyapunov::TwoSpeciesShape;
use crate::model::{self, MassActionSystem, ModelError};
use crate::netparse::{self, DecompositionDocError, DecompositionDocument, PartDeclaration, PartTag};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecomposeError {
    #[error(transparent)]
    Document(#[from] DecompositionDocError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("part {part}: restriction of x* is not an equilibrium of the part")]
    NotEquilibrium { part: usize },
    #[error("part {part} is tagged {tag} but {reason}")]
    Tag { part: usize, tag: &'static str, reason: String },
    #[error("parts {first} and {second} are both tagged complex_balanced")]
    MultipleComplexBalanced { first: usize, second: usize },
}

/// One validated part: its reactions, its species (parent indices), the
/// subnetwork over those species and the restriction of `x*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub tag: PartTag,
    pub reactions: Vec<usize>,
    pub species: Vec<usize>,
    pub subsystem: MassActionSystem,
    pub x_star: Vec<f64>,
}

impl Part {
    /// Local index of a parent species in this part.
    pub fn local(&self, parent_species: usize) -> Option<usize> {
        self.species.iter().position(|&s| s == parent_species)
    }

    pub fn contains(&self, parent_species: usize) -> bool {
        self.species.contains(&parent_species)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub parent: MassActionSystem,
    pub x_star: Vec<f64>,
    pub parts: Vec<Part>,
    /// Index of the complex-balanced part, if any.
    pub base: Option<usize>,
    /// `E_p`: species each part shares with the complex-balanced part
    /// (empty for the base itself).
    pub shared: Vec<Vec<usize>>,
}

impl Decomposition {
    pub fn document(&self) -> DecompositionDocument {
        DecompositionDocument::new(
            self.parts.iter().map(|p| PartDeclaration { tag: p.tag, reactions: p.reactions.clone() }).collect(),
        )
    }

    pub fn base_species(&self) -> &[usize] {
        self.base.map_or(&[], |b| &self.parts[b].species)
    }

    /// Indices of the parts other than the complex-balanced one.
    pub fn others(&self) -> Vec<usize> {
        (0..self.parts.len()).filter(|&p| Some(p) != self.base).collect()
    }

    /// `E = ∪ E_p`.
    pub fn shared_union(&self) -> Vec<usize> {
        let mut e: Vec<usize> = self.shared.iter().flatten().copied().collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Number of species that belong to more than one part.
    pub fn shared_species_count(&self) -> usize {
        (0..self.parent.num_species())
            .filter(|&s| self.parts.iter().filter(|p| p.contains(s)).count() > 1)
            .count()
    }
}

/// Checks a decomposition document against the parent network and `x*`:
/// the parts partition the reactions, every part is at equilibrium at the
/// restriction of `x*`, and every tag is borne out by the part's structure.
pub fn validate_decomposition(
    parent: &MassActionSystem,
    x_star: &[f64],
    doc: &DecompositionDocument,
    tol: FluxTolerance,
) -> Result<Decomposition, DecomposeError> {
    parent.check_state(x_star)?;
    netparse::check_decomposition(doc, parent, true)?;
    let mut parts = Vec::with_capacity(doc.parts.len());
    let mut base = None;
    for (p, decl) in doc.parts.iter().enumerate() {
        let (subsystem, species) = parent.subsystem(&decl.reactions)?;
        let xp: Vec<f64> = species.iter().map(|&s| x_star[s]).collect();
        if !balance::is_equilibrium(&subsystem, &xp, tol)? {
            return Err(DecomposeError::NotEquilibrium { part: p });
        }
        let tag_err = |reason: &str| DecomposeError::Tag { part: p, tag: decl.tag.as_str(), reason: reason.to_string() };
        match decl.tag {
            PartTag::ComplexBalanced => {
                if !balance::check_complex_balanced(&subsystem, &xp, tol)?.holds {
                    return Err(tag_err("it is not complex balanced at x*"));
                }
                if let Some(first) = base {
                    return Err(DecomposeError::MultipleComplexBalanced { first, second: p });
                }
                base = Some(p);
            }
            PartTag::OneDim => {
                if model::dimension(&subsystem) != 1 {
                    return Err(tag_err("its stoichiometric subspace is not 1-dimensional"));
                }
            }
            PartTag::TwoSpecies => {
                if subsystem.num_species() != 2 {
                    return Err(tag_err("it does not have exactly two species"));
                }
                if TwoSpeciesShape::all(&subsystem, &xp).is_empty() {
                    return Err(tag_err("no orientation has constant reactant coefficients"));
                }
            }
            PartTag::AutocatalyticPair => {
                if subsystem.num_species() != 2 {
                    return Err(tag_err("it does not have exactly two species"));
                }
                if !is_autocatalytic(&subsystem).autocatalytic {
                    return Err(tag_err("it is not autocatalytic"));
                }
            }
        }
        parts.push(Part { tag: decl.tag, reactions: decl.reactions.clone(), species, subsystem, x_star: xp });
    }
    let base_species: Vec<usize> = base.map_or_else(Vec::new, |b| parts[b].species.clone());
    let shared = (0..parts.len())
        .map(|p| {
            if Some(p) == base {
                Vec::new()
            } else {
                parts[p].species.iter().copied().filter(|s| base_species.contains(s)).collect()
            }
        })
        .collect();
    Ok(Decomposition { parent: parent.clone(), x_star: x_star.to_vec(), parts, base, shared })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netparse::PartDeclaration;

    pub(crate) fn eg7() -> MassActionSystem {
        MassActionSystem::from_triples(
            &["S1", "S2", "S3", "S4", "S5"],
            &[
                (&[0, 0, 3, 0, 0], &[0, 0, 0, 0, 3], 1.0),
                (&[0, 0, 0, 0, 3], &[0, 0, 3, 0, 0], 1.0),
                (&[2, 0, 0, 0, 0], &[0, 0, 2, 0, 0], 1.0),
                (&[0, 0, 2, 0, 0], &[1, 0, 1, 0, 0], 1.0),
                (&[1, 0, 1, 0, 0], &[2, 0, 0, 0, 0], 1.0),
                (&[1, 0, 0, 0, 0], &[0, 1, 0, 0, 0], 1.0),
                (&[0, 1, 0, 0, 0], &[1, 0, 0, 0, 0], 2.0),
                (&[1, 1, 0, 0, 0], &[0, 2, 0, 0, 0], 1.0),
                (&[0, 1, 0, 0, 0], &[0, 0, 1, 0, 0], 2.0),
                (&[0, 0, 1, 0, 0], &[0, 1, 0, 0, 0], 1.0),
                (&[0, 1, 1, 0, 0], &[0, 2, 0, 0, 0], 1.0),
                (&[0, 0, 1, 0, 0], &[0, 0, 0, 1, 0], 2.0),
                (&[0, 0, 0, 1, 0], &[0, 0, 1, 0, 0], 3.0),
                (&[0, 0, 0, 2, 0], &[0, 0, 1, 1, 0], 1.0),
                (&[0, 0, 1, 1, 0], &[0, 0, 0, 2, 0], 2.0),
            ],
        )
        .unwrap()
    }

    pub(crate) fn eg7_doc() -> DecompositionDocument {
        DecompositionDocument::new(vec![
            PartDeclaration { tag: PartTag::ComplexBalanced, reactions: vec![0, 1, 2, 3, 4] },
            PartDeclaration { tag: PartTag::AutocatalyticPair, reactions: vec![5, 6, 7] },
            PartDeclaration { tag: PartTag::AutocatalyticPair, reactions: vec![8, 9, 10] },
            PartDeclaration { tag: PartTag::OneDim, reactions: vec![11, 12, 13, 14] },
        ])
    }

    #[test]
    fn eg7_split_validates() {
        let d = validate_decomposition(&eg7(), &[1.0; 5], &eg7_doc(), FluxTolerance::default()).unwrap();
        assert_eq!(d.base, Some(0));
        assert_eq!(d.parts[0].species, vec![0, 2, 4]);
        assert_eq!(d.shared, vec![vec![], vec![0], vec![2], vec![2]]);
        assert_eq!(d.shared_union(), vec![0, 2]);
        assert_eq!(d.shared_species_count(), 3);
    }

    #[test]
    fn perturbed_base_fails_its_tag() {
        let m = eg7();
        let mut triples: Vec<(Vec<u32>, Vec<u32>, f64)> = m
            .reactions()
            .iter()
            .map(|r| (r.reactant.as_slice().to_vec(), r.product.as_slice().to_vec(), r.rate))
            .collect();
        triples[2].2 = 2.0;
        let refs: Vec<(&[u32], &[u32], f64)> = triples.iter().map(|(a, b, k)| (a.as_slice(), b.as_slice(), *k)).collect();
        let m2 = MassActionSystem::from_triples(&["S1", "S2", "S3", "S4", "S5"], &refs).unwrap();
        let err = validate_decomposition(&m2, &[1.0; 5], &eg7_doc(), FluxTolerance::default()).unwrap_err();
        assert!(matches!(err, DecomposeError::NotEquilibrium { part: 0 } | DecomposeError::Tag { part: 0, .. }), "{err}");
    }

    #[test]
    fn overlapping_parts_are_rejected() {
        let mut doc = eg7_doc();
        doc.parts[1].reactions.push(8);
        let err = validate_decomposition(&eg7(), &[1.0; 5], &doc, FluxTolerance::default()).unwrap_err();
        assert!(matches!(err, DecomposeError::Document(DecompositionDocError::Overlap { .. })));
    }

    #[test]
    fn wrong_one_dim_tag() {
        let mut doc = eg7_doc();
        doc.parts[0].tag = PartTag::OneDim;
        let err = validate_decomposition(&eg7(), &[1.0; 5], &doc, FluxTolerance::default()).unwrap_err();
        assert!(matches!(err, DecomposeError::Tag { part: 0, .. }));
    }
}
