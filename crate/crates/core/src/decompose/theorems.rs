//! Theorem-level checks on a validated decomposition.

use serde::{Deserialize, Serialize};

use super::{Decomposition, Part};
use crate::balance::{self, FluxTolerance};
use crate::lyapunov::{
    composite_lyapunov, one_dim_condition_thm33, unmatched_mirrors, CertificateKind, LyapunovCertificate, OneDimGeometry,
    PartPlan, SharedLine, SideCondition, TwoSpeciesShape,
};
use crate::model;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub id: String,
    pub description: String,
    /// Signed distance from failure (positive when satisfied); `None` for
    /// structural checks.
    pub margin: Option<f64>,
    pub pass: bool,
}

impl Condition {
    pub fn structural(id: impl Into<String>, description: impl Into<String>, pass: bool) -> Self {
        Condition { id: id.into(), description: description.into(), margin: None, pass }
    }

    /// Passes when `margin > 0`.
    pub fn positive(id: impl Into<String>, description: impl Into<String>, margin: f64) -> Self {
        Condition { id: id.into(), description: description.into(), margin: Some(margin), pass: margin > 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Overall {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremVerdict {
    pub theorem_id: String,
    /// Index of the decomposition candidate the verdict refers to.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub candidate: Option<usize>,
    pub applicable: bool,
    pub hypotheses: Vec<Condition>,
    pub conditions: Vec<Condition>,
    pub overall: Overall,
    pub notes: Vec<String>,
}

impl TheoremVerdict {
    pub fn new(theorem_id: &str, hypotheses: Vec<Condition>, conditions: Vec<Condition>, notes: Vec<String>) -> Self {
        let applicable = hypotheses.iter().all(|h| h.pass);
        let overall = if !applicable {
            Overall::NotApplicable
        } else if conditions.iter().all(|c| c.pass) {
            Overall::Pass
        } else {
            Overall::Fail
        };
        TheoremVerdict { theorem_id: theorem_id.to_string(), candidate: None, applicable, hypotheses, conditions, overall, notes }
    }

    pub fn passed(&self) -> bool {
        self.overall == Overall::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremOutcome {
    pub verdict: TheoremVerdict,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<LyapunovCertificate>,
}

impl TheoremOutcome {
    fn without_certificate(verdict: TheoremVerdict) -> Self {
        TheoremOutcome { verdict, certificate: None }
    }
}

/// Side conditions of a certificate: every condition that carries a margin.
fn side_conditions(conditions: &[Condition]) -> Vec<SideCondition> {
    conditions.iter().filter_map(|c| c.margin.map(|m| SideCondition::positive(c.id.clone(), m))).collect()
}

/// Builds the certificate for a passing verdict and attaches its side
/// conditions. A failure to assemble the function turns the verdict into a
/// failure with an explanatory note.
fn finish(
    mut verdict: TheoremVerdict,
    dec: &Decomposition,
    kind: CertificateKind,
    plans: &[PartPlan],
) -> TheoremOutcome {
    if !verdict.passed() {
        return TheoremOutcome::without_certificate(verdict);
    }
    let kind = single_part_kind(dec).unwrap_or(kind);
    match composite_lyapunov(kind, &dec.parent, plans, &dec.x_star) {
        Ok(mut cert) => {
            cert.side_conditions = side_conditions(&verdict.conditions);
            TheoremOutcome { verdict, certificate: Some(cert) }
        }
        Err(e) => {
            verdict.overall = Overall::Fail;
            verdict.notes.push(format!("could not assemble the Lyapunov function: {e}"));
            TheoremOutcome::without_certificate(verdict)
        }
    }
}

/// Whole-network kinds for single-part decompositions.
fn single_part_kind(dec: &Decomposition) -> Option<CertificateKind> {
    if dec.parts.len() != 1 {
        return None;
    }
    if dec.base == Some(0) {
        Some(CertificateKind::PseudoHelmholtz)
    } else if model::dimension(&dec.parts[0].subsystem) == 1 {
        Some(CertificateKind::OneDim)
    } else {
        None
    }
}

fn names(dec: &Decomposition, species: &[usize]) -> String {
    let all = dec.parent.species_names();
    let v: Vec<&str> = species.iter().map(|&s| all[s].as_str()).collect();
    format!("{{{}}}", v.join(", "))
}

fn is_one_dim(part: &Part) -> bool {
    model::dimension(&part.subsystem) == 1
}

fn is_rv_balanced(part: &Part, tol: FluxTolerance) -> bool {
    balance::check_reaction_vector_balanced(&part.subsystem, &part.x_star, tol).map(|c| c.holds).unwrap_or(false)
}

fn hypothesis_base_exists(dec: &Decomposition) -> Condition {
    Condition::structural("complex_balanced_part", "a complex-balanced part is present", dec.base.is_some())
}

fn hypothesis_all_one_dim(dec: &Decomposition) -> Condition {
    let bad: Vec<usize> = dec.others().into_iter().filter(|&p| !is_one_dim(&dec.parts[p])).collect();
    Condition::structural(
        "one_dimensional_parts",
        if bad.is_empty() {
            "every other part is 1-dimensional".to_string()
        } else {
            format!("parts {bad:?} are not 1-dimensional")
        },
        bad.is_empty(),
    )
}

fn hypothesis_shared_nonempty(dec: &Decomposition) -> Condition {
    let bad: Vec<usize> = dec.others().into_iter().filter(|&p| dec.shared[p].is_empty()).collect();
    Condition::structural(
        "shares_with_complex_balanced",
        if bad.is_empty() {
            "every other part shares a species with the complex-balanced part".to_string()
        } else {
            format!("parts {bad:?} share no species with the complex-balanced part")
        },
        bad.is_empty(),
    )
}

fn hypothesis_rv_balanced(dec: &Decomposition, tol: FluxTolerance) -> Condition {
    let bad: Vec<usize> = dec.others().into_iter().filter(|&p| !is_rv_balanced(&dec.parts[p], tol)).collect();
    Condition::structural(
        "reaction_vector_balanced",
        if bad.is_empty() {
            "every other part is reaction-vector balanced at x*".to_string()
        } else {
            format!("parts {bad:?} are not reaction-vector balanced at x*")
        },
        bad.is_empty(),
    )
}

/// Pairs of non-base parts whose common species are not all in `E`.
fn intersection_violations(dec: &Decomposition, skip: impl Fn(usize, usize) -> bool) -> Vec<(usize, usize, Vec<usize>)> {
    let e = dec.shared_union();
    let others = dec.others();
    let mut out = Vec::new();
    for (k, &p) in others.iter().enumerate() {
        for &q in &others[k + 1..] {
            if skip(p, q) {
                continue;
            }
            let outside: Vec<usize> =
                dec.parts[p].species.iter().copied().filter(|s| dec.parts[q].contains(*s) && !e.contains(s)).collect();
            if !outside.is_empty() {
                out.push((p, q, outside));
            }
        }
    }
    out
}

fn hypothesis_intersections(dec: &Decomposition, skip: impl Fn(usize, usize) -> bool) -> Condition {
    let bad = intersection_violations(dec, skip);
    let description = if bad.is_empty() {
        "species shared between 1-dimensional parts all belong to E".to_string()
    } else {
        bad.iter()
            .map(|(p, q, s)| format!("parts {p} and {q} share {} outside E", names(dec, s)))
            .collect::<Vec<_>>()
            .join("; ")
    };
    Condition::structural("intersections_within_e", description, bad.is_empty())
}

/// Parts pairwise disjoint in species, 1-dimensional parts with
/// `ωᵀ ∂h/∂x(x*, 1) < 0`.
pub fn check_thm_disjoint(dec: &Decomposition) -> TheoremOutcome {
    let mut overlaps = Vec::new();
    for p in 0..dec.parts.len() {
        for q in p + 1..dec.parts.len() {
            if dec.parts[p].species.iter().any(|s| dec.parts[q].contains(*s)) {
                overlaps.push((p, q));
            }
        }
    }
    let hypotheses = vec![
        hypothesis_all_one_dim(dec),
        Condition::structural(
            "disjoint_species",
            if overlaps.is_empty() {
                "parts have pairwise disjoint species sets".to_string()
            } else {
                format!("parts share species: {overlaps:?}")
            },
            overlaps.is_empty(),
        ),
    ];
    let applicable = hypotheses.iter().all(|h| h.pass);
    let mut conditions = Vec::new();
    let mut plans = Vec::new();
    if let Some(b) = dec.base {
        plans.push(PartPlan::ComplexBalanced { reactions: dec.parts[b].reactions.clone() });
    }
    if applicable {
        for p in dec.others() {
            let part = &dec.parts[p];
            let id = format!("part{p}.line_condition");
            let c = OneDimGeometry::new(&part.subsystem, &part.x_star)
                .and_then(|g| one_dim_condition_thm33(&part.subsystem, &g, &part.x_star));
            match c {
                Ok(v) => conditions.push(Condition::positive(id, format!("ωᵀ∂h/∂x(x*,1) = {v:e} must be negative"), -v)),
                Err(e) => conditions.push(Condition::structural(id, e.to_string(), false)),
            }
            plans.push(PartPlan::OneDim { reactions: part.reactions.clone() });
        }
    }
    let verdict = TheoremVerdict::new("thm_disjoint", hypotheses, conditions, Vec::new());
    finish(verdict, dec, CertificateKind::CompositeThm33, &plans)
}

/// Conditions of a 1-dimensional part sharing species with the base:
/// mirrored unit shifts, `ω_pᵀ∇ũ_p(x̃*) > 0` and `ũ_p(x̃*) = 1`.
fn shared_line_conditions(dec: &Decomposition, p: usize, line: &SharedLine, conditions: &mut Vec<Condition>) {
    let part = &dec.parts[p];
    let local: Vec<usize> = dec.shared[p].iter().filter_map(|&s| part.local(s)).collect();
    let unmatched = unmatched_mirrors(&part.subsystem, &local);
    let description = if unmatched.is_empty() {
        "every unit change of a shared species has a mirrored reaction".to_string()
    } else {
        let all = part.subsystem.species_names();
        unmatched
            .iter()
            .map(|(l, s)| format!("reaction {} has no mirror for {}", part.reactions[*l], all[*s]))
            .collect::<Vec<_>>()
            .join("; ")
    };
    conditions.push(Condition::structural(format!("part{p}.mirrored_reactions"), description, unmatched.is_empty()));
    let c = line.condition();
    conditions.push(Condition::positive(format!("part{p}.u_tilde_slope"), format!("ω_pᵀ∇ũ_p(x̃*) = {c:e} must be positive"), c));
    let u = line.u_tilde(&line.x_ref);
    conditions.push(Condition::structural(
        format!("part{p}.u_tilde_at_equilibrium"),
        format!("ũ_p(x̃*) = {u:e} must equal 1"),
        (u - 1.0).abs() <= 1e-9,
    ));
}

fn shared_line(dec: &Decomposition, p: usize) -> Result<SharedLine, String> {
    let part = &dec.parts[p];
    let local: Vec<usize> = dec.shared[p].iter().filter_map(|&s| part.local(s)).collect();
    SharedLine::new(&part.subsystem, &local, &part.x_star).map_err(|e| e.to_string())
}

/// 1-dimensional parts sharing species with the complex-balanced part.
pub fn check_thm_shared_1d(dec: &Decomposition, tol: FluxTolerance) -> TheoremOutcome {
    let mut hypotheses = vec![
        hypothesis_base_exists(dec),
        hypothesis_all_one_dim(dec),
        hypothesis_shared_nonempty(dec),
        hypothesis_intersections(dec, |_, _| false),
        hypothesis_rv_balanced(dec, tol),
    ];
    let mut lines = Vec::new();
    if hypotheses.iter().all(|h| h.pass) {
        for p in dec.others() {
            match shared_line(dec, p) {
                Ok(l) => lines.push((p, l)),
                Err(e) => hypotheses.push(Condition::structural(format!("part{p}.unit_shifts"), e, false)),
            }
        }
    }
    let mut conditions = Vec::new();
    let mut plans = Vec::new();
    if hypotheses.iter().all(|h| h.pass) {
        plans.push(PartPlan::ComplexBalanced { reactions: dec.parts[dec.base.expect("checked")].reactions.clone() });
        for (p, line) in &lines {
            shared_line_conditions(dec, *p, line, &mut conditions);
            plans.push(PartPlan::Shared { reactions: dec.parts[*p].reactions.clone(), shared: dec.shared[*p].clone() });
        }
    }
    let verdict = TheoremVerdict::new("thm_com_1", hypotheses, conditions, Vec::new());
    finish(verdict, dec, CertificateKind::CompositeThm34, &plans)
}

/// Orientation of a two-species part with `S_i` its shared species: the
/// first shape whose `R` reactions satisfy `v_il − a = w_i` and whose
/// `S_j` term has the right curvature, else the first satisfying the former,
/// else the first at all.
fn choose_shape(part: &Part, shared_parent: usize) -> Option<(TwoSpeciesShape, bool)> {
    let i = part.local(shared_parent)?;
    let shapes: Vec<TwoSpeciesShape> =
        TwoSpeciesShape::all(&part.subsystem, &part.x_star).into_iter().filter(|s| s.i == i).collect();
    let cond1 = |s: &TwoSpeciesShape| {
        s.right.iter().all(|&l| part.subsystem.reactions()[l].reactant.coeff(s.i) as i64 - s.a as i64 == s.w[0])
    };
    let cond3 = |s: &TwoSpeciesShape| s.con2(&part.subsystem, part.x_star[s.j]) > 0.0;
    shapes
        .iter()
        .find(|s| cond1(s) && cond3(s))
        .or_else(|| shapes.iter().find(|s| cond1(s)))
        .or_else(|| shapes.first())
        .map(|s| (s.clone(), cond1(s)))
}

/// Proportionality constant `c` with `k^(q) = c k^(p)` after matching the
/// reactions of the two parts by their stoichiometric coefficients of the
/// parent species `s`.
pub(crate) fn proportionality(a: &Part, b: &Part, s: usize) -> Option<f64> {
    let keyed = |part: &Part| {
        let l = part.local(s)?;
        let mut v: Vec<((u32, u32), f64)> = part
            .subsystem
            .reactions()
            .iter()
            .map(|r| ((r.reactant.coeff(l), r.product.coeff(l)), r.rate))
            .collect();
        v.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
        Some(v)
    };
    let (ka, kb) = (keyed(a)?, keyed(b)?);
    if ka.len() != kb.len() || ka.iter().zip(&kb).any(|(x, y)| x.0 != y.0) {
        return None;
    }
    let c = kb[0].1 / ka[0].1;
    ka.iter().zip(&kb).all(|(x, y)| (y.1 - c * x.1).abs() <= 1e-9 * y.1.abs().max((c * x.1).abs())).then_some(c)
}

/// Everything needed to judge a two-species part on the route that keeps
/// only its free-species term.
struct PairRoute {
    shape: Option<(TwoSpeciesShape, bool)>,
    free: Option<usize>,
}

fn pair_route(dec: &Decomposition, p: usize) -> PairRoute {
    let part = &dec.parts[p];
    if part.species.len() != 2 || dec.shared[p].len() != 1 {
        return PairRoute { shape: None, free: None };
    }
    let shared = dec.shared[p][0];
    let free = part.species.iter().copied().find(|&s| s != shared);
    PairRoute { shape: choose_shape(part, shared), free }
}

/// Other non-base parts containing the species `s`.
fn parts_with(dec: &Decomposition, p: usize, s: usize) -> Vec<usize> {
    dec.others().into_iter().filter(|&q| q != p && dec.parts[q].contains(s)).collect()
}

/// Conditions on the free-species route for part `p`: orientation, the
/// curvature of the `S_j` term, and proportional rates with every other part
/// containing `S_j`.
fn pair_conditions(dec: &Decomposition, p: usize, route: &PairRoute, conditions: &mut Vec<Condition>) {
    let part = &dec.parts[p];
    match &route.shape {
        None => conditions.push(Condition::structural(
            format!("part{p}.coefficients"),
            "no orientation has a constant reactant coefficient for each species on its side",
            false,
        )),
        Some((shape, cond1)) => {
            conditions.push(Condition::structural(
                format!("part{p}.coefficients"),
                format!("constant reactant coefficients a = {}, b = {}", shape.a, shape.b),
                true,
            ));
            conditions.push(Condition::structural(
                format!("part{p}.shared_orientation"),
                format!("v_il − a = w_i on the reverse side (w = {:?})", shape.w),
                *cond1,
            ));
            let v = shape.con2(&part.subsystem, part.x_star[shape.j]);
            conditions.push(Condition::positive(format!("part{p}.free_curvature"), format!("free-species curvature {v:e} must be positive"), v));
        }
    }
    if let Some(j) = route.free {
        for q in parts_with(dec, p, j) {
            if q < p {
                continue;
            }
            let c = proportionality(part, &dec.parts[q], j);
            conditions.push(Condition::structural(
                format!("parts{p}_{q}.proportional"),
                match c {
                    Some(c) => format!("rates of parts {p} and {q} are proportional (c = {c:e})"),
                    None => format!("rates of parts {p} and {q} are not proportional after matching on {}", names(dec, &[j])),
                },
                c.is_some(),
            ));
        }
    }
}

/// Two-species parts each sharing one species with the complex-balanced part.
pub fn check_thm_shared_two_species(dec: &Decomposition, tol: FluxTolerance) -> TheoremOutcome {
    let others = dec.others();
    let not_two: Vec<usize> = others.iter().copied().filter(|&p| dec.parts[p].species.len() != 2).collect();
    let multi: Vec<usize> = others.iter().copied().filter(|&p| dec.shared[p].len() > 1).collect();
    let hypotheses = vec![
        hypothesis_base_exists(dec),
        Condition::structural(
            "two_species_parts",
            if not_two.is_empty() { "every other part has two species".to_string() } else { format!("parts {not_two:?} do not have two species") },
            not_two.is_empty(),
        ),
        hypothesis_shared_nonempty(dec),
        Condition::structural(
            "one_free_species",
            if multi.is_empty() {
                "every other part keeps one species outside the complex-balanced part".to_string()
            } else {
                format!("parts {multi:?} have both species in the complex-balanced part")
            },
            multi.is_empty(),
        ),
        hypothesis_rv_balanced(dec, tol),
    ];
    let mut conditions = Vec::new();
    let mut plans = Vec::new();
    if hypotheses.iter().all(|h| h.pass) {
        plans.push(PartPlan::ComplexBalanced { reactions: dec.parts[dec.base.expect("checked")].reactions.clone() });
        for &p in &others {
            let route = pair_route(dec, p);
            pair_conditions(dec, p, &route, &mut conditions);
            if let Some((shape, _)) = route.shape {
                plans.push(PartPlan::SpeciesTerm { reactions: dec.parts[p].reactions.clone(), shape });
            }
        }
    }
    let verdict = TheoremVerdict::new("thm_com_tw", hypotheses, conditions, Vec::new());
    finish(verdict, dec, CertificateKind::CompositeThm46, &plans)
}

/// Mixed route: two-species parts with a valid orientation and proportional
/// partners keep only their free-species term; every other part takes the
/// `ũ_p` line.
pub fn check_corollary_mixed(dec: &Decomposition, tol: FluxTolerance) -> TheoremOutcome {
    let others = dec.others();
    let routes: Vec<(usize, PairRoute)> = others.iter().map(|&p| (p, pair_route(dec, p))).collect();
    let eligible = |p: usize| routes.iter().any(|(q, r)| *q == p && r.shape.is_some() && r.free.is_some());
    let pair_routed: Vec<usize> = routes
        .iter()
        .filter(|(p, r)| {
            eligible(*p)
                && parts_with(dec, *p, r.free.expect("eligible"))
                    .into_iter()
                    .all(|q| eligible(q) && proportionality(&dec.parts[*p], &dec.parts[q], r.free.expect("eligible")).is_some())
        })
        .map(|(p, _)| *p)
        .collect();
    let mut notes: Vec<String> = others
        .iter()
        .map(|p| {
            if pair_routed.contains(p) {
                format!("part {p}: free-species term")
            } else {
                format!("part {p}: ũ_p line")
            }
        })
        .collect();
    let mut hypotheses = vec![
        hypothesis_base_exists(dec),
        hypothesis_all_one_dim(dec),
        hypothesis_shared_nonempty(dec),
        hypothesis_intersections(dec, |p, q| pair_routed.contains(&p) && pair_routed.contains(&q)),
        hypothesis_rv_balanced(dec, tol),
    ];
    let mut lines = Vec::new();
    if hypotheses.iter().all(|h| h.pass) {
        for &p in others.iter().filter(|p| !pair_routed.contains(p)) {
            match shared_line(dec, p) {
                Ok(l) => lines.push((p, l)),
                Err(e) => hypotheses.push(Condition::structural(format!("part{p}.unit_shifts"), e, false)),
            }
        }
    }
    let mut conditions = Vec::new();
    let mut plans = Vec::new();
    if hypotheses.iter().all(|h| h.pass) {
        plans.push(PartPlan::ComplexBalanced { reactions: dec.parts[dec.base.expect("checked")].reactions.clone() });
        for &p in &others {
            if pair_routed.contains(&p) {
                let (_, route) = routes.iter().find(|(q, _)| *q == p).expect("routed");
                pair_conditions(dec, p, route, &mut conditions);
                let (shape, _) = route.shape.clone().expect("eligible");
                plans.push(PartPlan::SpeciesTerm { reactions: dec.parts[p].reactions.clone(), shape });
            } else {
                let (_, line) = lines.iter().find(|(q, _)| *q == p).expect("built above");
                shared_line_conditions(dec, p, line, &mut conditions);
                plans.push(PartPlan::Shared { reactions: dec.parts[p].reactions.clone(), shared: dec.shared[p].clone() });
            }
        }
    } else {
        notes.push("routing shown for reference; hypotheses not met".to_string());
    }
    let verdict = TheoremVerdict::new("cor_mixed", hypotheses, conditions, notes);
    finish(verdict, dec, CertificateKind::CompositeCor47, &plans)
}
