//! Plain-text renderings of the reports.

use std::fmt::Write;

use crnscope_core::decompose::{CertifyReport, Overall};
use crnscope_core::exact::rational_string;
use crnscope_core::model::StructureReport;
use crnscope_core::netparse::DecompositionDocument;

use crate::SimulateOutput;

fn table(rows: &[(&str, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
}

pub fn structure(r: &StructureReport) -> String {
    let laws: Vec<String> = r
        .conservation_basis
        .iter()
        .map(|w| format!("({})", w.iter().map(rational_string).collect::<Vec<_>>().join(", ")))
        .collect();
    table(&[
        ("species", format!("{} ({})", r.species.len(), r.species.join(", "))),
        ("reactions", r.num_reactions.to_string()),
        ("complexes", r.num_complexes.to_string()),
        ("linkage classes", r.num_linkage_classes.to_string()),
        ("dimension", r.dim_s.to_string()),
        ("deficiency", r.deficiency.to_string()),
        ("weakly reversible", r.weakly_reversible.to_string()),
        ("reversible", r.reversible.to_string()),
        ("conservation laws", if laws.is_empty() { "none".into() } else { laws.join(" ") }),
    ])
}

fn overall(o: Overall) -> &'static str {
    match o {
        Overall::Pass => "pass",
        Overall::Fail => "fail",
        Overall::NotApplicable => "n/a",
    }
}

pub fn certify(r: &CertifyReport, species: &[String]) -> String {
    let mut out = String::new();
    for v in &r.verdicts {
        let cand = v.candidate.map_or(String::new(), |c| format!(" (candidate {c})"));
        let _ = writeln!(out, "{:<13} {}{cand}", v.theorem_id, overall(v.overall));
        for c in v.hypotheses.iter().chain(&v.conditions).filter(|c| !c.pass) {
            let margin = c.margin.map_or(String::new(), |m| format!(" [margin {m:e}]"));
            let _ = writeln!(out, "    failed {}: {}{margin}", c.id, c.description);
        }
        for n in &v.notes {
            let _ = writeln!(out, "    note: {n}");
        }
    }
    for n in &r.notes {
        let _ = writeln!(out, "note: {n}");
    }
    match &r.certificate {
        Some(c) => {
            let kind = serde_json::to_value(c.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
            let _ = writeln!(out, "certified: {kind}");
            let point: Vec<String> = species.iter().zip(&c.x_star).map(|(s, x)| format!("{s} = {x}")).collect();
            let _ = writeln!(out, "equilibrium: {}", point.join(", "));
            if let Some(nb) = &c.neighborhood {
                let _ = writeln!(
                    out,
                    "neighbourhood: {} samples, radius {:e}, max f' {:e}, min f {:e}, {}",
                    nb.samples,
                    nb.radius_abs,
                    nb.max_f_dot,
                    nb.min_f,
                    if nb.pass { "pass" } else { "fail" }
                );
            }
        }
        None => out.push_str("no certificate\n"),
    }
    out
}

pub fn candidates(docs: &[DecompositionDocument]) -> String {
    if docs.is_empty() {
        return "no candidate decomposition\n".into();
    }
    let mut out = String::new();
    for (k, d) in docs.iter().enumerate() {
        let parts: Vec<String> = d
            .parts
            .iter()
            .map(|p| format!("{}{:?}", p.tag.as_str(), p.reactions))
            .collect();
        let _ = writeln!(out, "candidate {k}: {}", parts.join(" | "));
    }
    out
}

pub fn simulation(s: &SimulateOutput) -> String {
    let mut out = String::new();
    for (k, t) in s.trajectories.iter().enumerate() {
        let conv = s.convergence.as_ref().map(|c| &c.entries[k]);
        let diss = s.dissipation.as_ref().map(|d| &d[k]);
        let _ = write!(out, "trajectory {k}: {} samples, drift {:e}", t.samples, t.conservation_drift);
        if let Some(b) = &t.breach {
            let _ = write!(out, ", halted at t = {} (species {} = {:e})", b.t, b.species, b.value);
        }
        if let Some(c) = conv {
            let _ = write!(out, ", distance {:e} {}", c.final_distance, if c.converged { "converged" } else { "not converged" });
        }
        if let Some(d) = diss {
            let _ = write!(out, ", max f increase {:e} {}", d.max_increase, if d.pass { "dissipative" } else { "not dissipative" });
        }
        out.push('\n');
    }
    let _ = writeln!(out, "{}", if s.pass { "pass" } else { "fail" });
    out
}
