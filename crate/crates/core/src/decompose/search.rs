//! Budgeted search for decompositions.

use super::{is_autocatalytic, validate_decomposition, Decomposition};
use crate::balance::{self, FluxTolerance};
use crate::exact;
use crate::lyapunov::TwoSpeciesShape;
use crate::model::MassActionSystem;
use crate::netparse::{DecompositionDocument, PartDeclaration, PartTag};

/// Default number of part assignments tried.
pub const DEFAULT_BUDGET: usize = 512;

fn tag_for(sub: &MassActionSystem, x: &[f64]) -> PartTag {
    if sub.num_species() == 2 {
        if is_autocatalytic(sub).autocatalytic {
            return PartTag::AutocatalyticPair;
        }
        if !TwoSpeciesShape::all(sub, x).is_empty() {
            return PartTag::TwoSpecies;
        }
    }
    PartTag::OneDim
}

/// Reactions are clustered by the primitive direction of their reaction
/// vectors. Clusters that are at equilibrium on their own are candidate
/// 1-dimensional parts; every subset of them is tried as the set of
/// 1-dimensional parts, with everything else forming a complex-balanced
/// part. Returns every candidate that validates, ordered by number of parts
/// and then by number of species shared between parts.
pub fn search_decomposition(parent: &MassActionSystem, x_star: &[f64], tol: FluxTolerance, budget: usize) -> Vec<Decomposition> {
    if parent.check_state(x_star).is_err() {
        return Vec::new();
    }
    let mut clusters: Vec<(Vec<i64>, Vec<usize>)> = Vec::new();
    for (l, r) in parent.reactions().iter().enumerate() {
        let dir = exact::primitive_canonical(&r.reaction_vector());
        match clusters.iter_mut().find(|(d, _)| *d == dir) {
            Some((_, v)) => v.push(l),
            None => clusters.push((dir, vec![l])),
        }
    }
    let mut atoms: Vec<(Vec<usize>, PartTag)> = Vec::new();
    let mut forced: Vec<usize> = Vec::new();
    for (_, reactions) in clusters {
        let accepted = parent.subsystem(&reactions).ok().and_then(|(sub, map)| {
            let xp: Vec<f64> = map.iter().map(|&s| x_star[s]).collect();
            balance::is_equilibrium(&sub, &xp, tol).ok().filter(|&eq| eq).map(|_| tag_for(&sub, &xp))
        });
        match accepted {
            Some(tag) => atoms.push((reactions, tag)),
            None => forced.extend(reactions),
        }
    }
    let k = atoms.len();
    // Subsets by descending size so that the full split is tried first,
    // then the whole network as a single part.
    let mut masks: Vec<u64> = if k < 63 { (0..(1u64 << k)).collect() } else { Vec::new() };
    masks.sort_by_key(|m| (std::cmp::Reverse(m.count_ones()), *m));
    if k >= 63 {
        masks.push(u64::MAX >> 1);
    }
    if let Some(pos) = masks.iter().position(|&m| m == 0) {
        let zero = masks.remove(pos);
        masks.insert(masks.len().min(1), zero);
    }
    let mut out = Vec::new();
    for mask in masks.into_iter().take(budget) {
        let mut base: Vec<usize> = forced.clone();
        let mut parts = Vec::new();
        for (a, (reactions, tag)) in atoms.iter().enumerate() {
            if a < 63 && mask & (1 << a) != 0 {
                parts.push(PartDeclaration { tag: *tag, reactions: reactions.clone() });
            } else {
                base.extend(reactions);
            }
        }
        if !base.is_empty() {
            base.sort_unstable();
            parts.insert(0, PartDeclaration { tag: PartTag::ComplexBalanced, reactions: base });
        }
        if let Ok(d) = validate_decomposition(parent, x_star, &DecompositionDocument::new(parts), tol) {
            out.push(d);
        }
    }
    out.sort_by_key(|d| (d.parts.len(), d.shared_species_count()));
    out
}
