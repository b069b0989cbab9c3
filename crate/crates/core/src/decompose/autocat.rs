//! Autocatalytic networks: every reaction turns one `S_i` into one `S_j`
//! catalysed by `S_j`, and the network splits into two-species pairs.

use serde::{Deserialize, Serialize};

use super::theorems::{Condition, TheoremOutcome, TheoremVerdict};
use crate::balance::{self, FluxTolerance};
use crate::lyapunov::{
    autocat_two_species_conditions, composite_lyapunov, CertificateKind, PartPlan, SideCondition, TwoSpeciesShape,
};
use crate::model::MassActionSystem;

/// Reactions between `S_i` and `S_j` (`i < j`): `forward` is `R_{i,j}`
/// (consumes `S_i`, produces `S_j`) and `backward` is `R_{j,i}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutocatPair {
    pub i: usize,
    pub j: usize,
    pub forward: Vec<usize>,
    pub backward: Vec<usize>,
}

impl AutocatPair {
    pub fn reactions(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.forward.iter().chain(&self.backward).copied().collect();
        r.sort_unstable();
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocatalyticStructure {
    pub autocatalytic: bool,
    /// Every reaction has the form `S_i + (α−1) S_j → α S_j`.
    pub reaction_form: bool,
    /// Some `S_i → S_j` and `S_j → S_i` are both present.
    pub monomolecular_reversible_pair: bool,
    /// Sources feeding a common target monomolecularly have proportional
    /// rates over their common molecularities.
    pub proportional_sources: bool,
    pub pairs: Vec<AutocatPair>,
    pub issues: Vec<String>,
}

/// `(source, target, α)` of a reaction `S_i + (α−1) S_j → α S_j`.
fn autocat_form(mas: &MassActionSystem, l: usize) -> Option<(usize, usize, u32)> {
    let r = &mas.reactions()[l];
    let v = r.reaction_vector();
    let i = v.iter().position(|&x| x == -1)?;
    let j = v.iter().position(|&x| x == 1)?;
    if v.iter().enumerate().any(|(s, &x)| s != i && s != j && x != 0) {
        return None;
    }
    let alpha = r.product.coeff(j);
    let ok = alpha >= 1
        && r.reactant.coeff(i) == 1
        && r.reactant.coeff(j) == alpha - 1
        && r.product.coeff(i) == 0
        && r.reactant.molecularity() == alpha
        && r.product.molecularity() == alpha;
    ok.then_some((i, j, alpha))
}

pub fn is_autocatalytic(mas: &MassActionSystem) -> AutocatalyticStructure {
    let mut issues = Vec::new();
    let mut forms = Vec::with_capacity(mas.num_reactions());
    for l in 0..mas.num_reactions() {
        match autocat_form(mas, l) {
            Some(f) => forms.push(f),
            None => issues.push(format!("reaction {l} is not of the form S_i + (α−1) S_j → α S_j")),
        }
    }
    let reaction_form = issues.is_empty();
    if !reaction_form {
        return AutocatalyticStructure {
            autocatalytic: false,
            reaction_form,
            monomolecular_reversible_pair: false,
            proportional_sources: false,
            pairs: Vec::new(),
            issues,
        };
    }
    let mono = |i: usize, j: usize| forms.iter().any(|&(a, b, alpha)| a == i && b == j && alpha == 1);
    let monomolecular_reversible_pair = forms.iter().any(|&(i, j, alpha)| alpha == 1 && mono(j, i));
    if !monomolecular_reversible_pair {
        issues.push("no pair of monomolecular reversible reactions".to_string());
    }

    // Summed rate per (source, target, α).
    let rate = |i: usize, j: usize, alpha: u32| -> Option<f64> {
        let v: Vec<f64> = forms
            .iter()
            .zip(mas.reactions())
            .filter(|((a, b, al), _)| *a == i && *b == j && *al == alpha)
            .map(|(_, r)| r.rate)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum())
    };
    let n = mas.num_species();
    let mut proportional_sources = true;
    for j in 0..n {
        let sources: Vec<usize> = (0..n).filter(|&i| i != j && mono(i, j)).collect();
        for (k, &i) in sources.iter().enumerate() {
            for &l in &sources[k + 1..] {
                let max_alpha = forms.iter().map(|f| f.2).max().unwrap_or(1);
                let common: Vec<(f64, f64)> =
                    (1..=max_alpha).filter_map(|a| Some((rate(i, j, a)?, rate(l, j, a)?))).collect();
                let c = common[0].1 / common[0].0;
                if common.iter().any(|(ki, kl)| (kl - c * ki).abs() > 1e-9 * kl.abs().max((c * ki).abs())) {
                    proportional_sources = false;
                    let names = mas.species_names();
                    issues.push(format!("rates into {} from {} and {} are not proportional", names[j], names[i], names[l]));
                }
            }
        }
    }

    let mut pairs: Vec<AutocatPair> = Vec::new();
    for (l, &(i, j, _)) in forms.iter().enumerate() {
        let (lo, hi) = (i.min(j), i.max(j));
        let pos = match pairs.iter().position(|p| p.i == lo && p.j == hi) {
            Some(p) => p,
            None => {
                pairs.push(AutocatPair { i: lo, j: hi, forward: Vec::new(), backward: Vec::new() });
                pairs.len() - 1
            }
        };
        if i == lo { pairs[pos].forward.push(l) } else { pairs[pos].backward.push(l) }
    }
    pairs.sort_by_key(|p| (p.i, p.j));
    AutocatalyticStructure {
        autocatalytic: monomolecular_reversible_pair && proportional_sources,
        reaction_form,
        monomolecular_reversible_pair,
        proportional_sources,
        pairs,
        issues,
    }
}

/// Reaction-vector balance of the whole network at `x` and of every pair at
/// its restriction. For autocatalytic networks the two always agree.
pub fn pairwise_balance_equivalence(
    mas: &MassActionSystem,
    x: &[f64],
    tol: FluxTolerance,
) -> Result<(bool, bool), crate::model::ModelError> {
    let full = balance::check_reaction_vector_balanced(mas, x, tol)?.holds;
    let mut pairs_ok = true;
    for pair in is_autocatalytic(mas).pairs {
        let (sub, map) = mas.subsystem(&pair.reactions())?;
        let xp: Vec<f64> = map.iter().map(|&s| x[s]).collect();
        pairs_ok &= balance::check_reaction_vector_balanced(&sub, &xp, tol)?.holds;
    }
    Ok((full, pairs_ok))
}

/// Autocatalytic network split into its two-species pairs; each pair must
/// be reaction-vector balanced and satisfy the autocatalytic curvature
/// conditions.
pub fn check_thm_auto(mas: &MassActionSystem, x_star: &[f64], tol: FluxTolerance) -> TheoremOutcome {
    let st = is_autocatalytic(mas);
    let mut hypotheses = vec![
        Condition::structural("reaction_form", "every reaction has the form S_i + (α−1) S_j → α S_j", st.reaction_form),
        Condition::structural(
            "monomolecular_reversible_pair",
            "a pair of monomolecular reversible reactions exists",
            st.monomolecular_reversible_pair,
        ),
        Condition::structural(
            "proportional_sources",
            if st.proportional_sources {
                "sources sharing a target have proportional rates".to_string()
            } else {
                st.issues.join("; ")
            },
            st.proportional_sources,
        ),
    ];
    if let Err(e) = mas.check_state(x_star) {
        hypotheses.push(Condition::structural("state", e.to_string(), false));
    }
    let mut conditions = Vec::new();
    let mut plans = Vec::new();
    let mut notes = Vec::new();
    if hypotheses.iter().all(|h| h.pass) {
        let names = mas.species_names();
        for pair in &st.pairs {
            let label = format!("pair_{}_{}", names[pair.i], names[pair.j]);
            let (sub, map) = match mas.subsystem(&pair.reactions()) {
                Ok(v) => v,
                Err(e) => {
                    conditions.push(Condition::structural(format!("{label}.subsystem"), e.to_string(), false));
                    continue;
                }
            };
            let xp: Vec<f64> = map.iter().map(|&s| x_star[s]).collect();
            let check = balance::check_reaction_vector_balanced(&sub, &xp, tol);
            let (balanced, residual) = match &check {
                Ok(c) => (c.holds, c.groups.iter().map(|g| g.residual.abs()).fold(0.0, f64::max)),
                Err(_) => (false, f64::NAN),
            };
            conditions.push(Condition::structural(
                format!("{label}.balanced"),
                format!("reaction-vector balanced at the restriction of x* (residual {residual:e})"),
                balanced,
            ));
            if !balanced {
                continue;
            }
            let shape = match TwoSpeciesShape::extract(&sub, 0, 1, [-1, 1], &xp) {
                Ok(s) => s,
                Err(e) => {
                    conditions.push(Condition::structural(format!("{label}.shape"), e.to_string(), false));
                    continue;
                }
            };
            match autocat_two_species_conditions(&shape, &sub, &xp) {
                Ok(c) => {
                    let mut fwd = Condition::positive(format!("{label}.forward"), format!("forward curvature sum {:e}", c.forward), c.forward);
                    let mut bwd = Condition::positive(format!("{label}.backward"), format!("backward curvature sum {:e}", c.backward), c.backward);
                    fwd.pass |= c.shortcut_pass;
                    bwd.pass |= c.shortcut_pass;
                    if c.shortcut_pass {
                        notes.push(format!("{label}: at most bimolecular with a monomolecular step each way"));
                    }
                    if c.shortcut_pass && !c.explicit_pass {
                        notes.push(format!("{label}: shortcut passes but the explicit sums do not"));
                    }
                    conditions.push(fwd);
                    conditions.push(bwd);
                }
                Err(e) => conditions.push(Condition::structural(format!("{label}.shape"), e.to_string(), false)),
            }
            plans.push(PartPlan::Pair { reactions: pair.reactions(), shape });
        }
        match pairwise_balance_equivalence(mas, x_star, tol) {
            Ok((full, pairs)) => conditions.push(Condition::structural(
                "pair_balance_equivalence",
                format!("whole network balanced: {full}; every pair balanced: {pairs}"),
                full == pairs,
            )),
            Err(e) => conditions.push(Condition::structural("pair_balance_equivalence", e.to_string(), false)),
        }
    }
    let verdict = TheoremVerdict::new("thm_auto", hypotheses, conditions, notes);
    if !verdict.passed() {
        return TheoremOutcome { verdict, certificate: None };
    }
    let kind = if st.pairs.len() == 1 && mas.num_species() == 2 {
        CertificateKind::AutocatTwoSpecies
    } else {
        CertificateKind::CompositeThm52
    };
    match composite_lyapunov(kind, mas, &plans, x_star) {
        Ok(mut cert) => {
            cert.side_conditions = verdict
                .conditions
                .iter()
                .filter_map(|c| c.margin.map(|m| SideCondition { pass: c.pass, ..SideCondition::positive(c.id.clone(), m) }))
                .collect();
            TheoremOutcome { verdict, certificate: Some(cert) }
        }
        Err(e) => {
            let mut verdict = verdict;
            verdict.overall = super::theorems::Overall::Fail;
            verdict.notes.push(format!("could not assemble the Lyapunov function: {e}"));
            TheoremOutcome { verdict, certificate: None }
        }
    }
}
