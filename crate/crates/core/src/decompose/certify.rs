//! Tries the stability theorems in a fixed order and returns the first
//! certificate found.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    check_corollary_mixed, check_thm_auto, check_thm_disjoint, check_thm_shared_1d, check_thm_shared_two_species,
    is_autocatalytic, search_decomposition, validate_decomposition, DecomposeError, Decomposition, TheoremOutcome,
    TheoremVerdict, DEFAULT_BUDGET,
};
use crate::balance::{self, FluxTolerance};
use crate::lyapunov::{neighborhood_check, LyapunovCertificate};
use crate::model::{MassActionSystem, ModelError};
use crate::netparse::DecompositionDocument;

/// Order in which the theorems are tried.
pub const THEOREM_ORDER: [&str; 5] = ["thm_auto", "thm_disjoint", "thm_com_tw", "thm_com_1", "cor_mixed"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub tol: FluxTolerance,
    /// Relative radius of the sampled neighbourhood.
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
    pub budget: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { tol: FluxTolerance::default(), radius: 0.1, samples: 100, seed: 0, budget: DEFAULT_BUDGET }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("the given point is not an equilibrium of the network")]
    NotEquilibrium,
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub order: Vec<String>,
    pub certified: bool,
    pub candidates_tried: usize,
    pub verdicts: Vec<TheoremVerdict>,
    #[serde(default)]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub decomposition: Option<DecompositionDocument>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<LyapunovCertificate>,
}

fn decomposition_checks(dec: &Decomposition, tol: FluxTolerance) -> [TheoremOutcome; 4] {
    [
        check_thm_disjoint(dec),
        check_thm_shared_two_species(dec, tol),
        check_thm_shared_1d(dec, tol),
        check_corollary_mixed(dec, tol),
    ]
}

/// Runs the theorems in [`THEOREM_ORDER`]. With `decomposition` only that
/// split is examined; otherwise candidates come from
/// [`search_decomposition`]. The first passing theorem wins and its
/// certificate gets a neighbourhood report.
pub fn certify(
    mas: &MassActionSystem,
    x_star: &[f64],
    decomposition: Option<&DecompositionDocument>,
    opts: &CertifyOptions,
) -> Result<CertifyReport, CertifyError> {
    mas.check_state(x_star)?;
    if !balance::is_equilibrium(mas, x_star, opts.tol)? {
        return Err(CertifyError::NotEquilibrium);
    }
    let mut report = CertifyReport {
        order: THEOREM_ORDER.iter().map(|s| s.to_string()).collect(),
        certified: false,
        candidates_tried: 0,
        verdicts: Vec::new(),
        notes: Vec::new(),
        decomposition: None,
        certificate: None,
    };
    let mut winner: Option<(LyapunovCertificate, Option<DecompositionDocument>)> = None;
    if is_autocatalytic(mas).reaction_form {
        let out = check_thm_auto(mas, x_star, opts.tol);
        if let (true, Some(cert)) = (out.verdict.passed(), out.certificate) {
            winner = Some((cert, None));
        }
        report.verdicts.push(out.verdict);
    }
    if winner.is_none() {
        let candidates = match decomposition {
            Some(doc) => vec![validate_decomposition(mas, x_star, doc, opts.tol)?],
            None => search_decomposition(mas, x_star, opts.tol, opts.budget),
        };
        if candidates.is_empty() {
            report.notes.push("no decomposition candidate validates at this equilibrium".into());
        }
        'outer: for (k, dec) in candidates.iter().enumerate() {
            report.candidates_tried += 1;
            for out in decomposition_checks(dec, opts.tol) {
                let mut verdict = out.verdict;
                verdict.candidate = Some(k);
                let passed = verdict.passed();
                report.verdicts.push(verdict);
                if let (true, Some(cert)) = (passed, out.certificate) {
                    winner = Some((cert, Some(dec.document())));
                    break 'outer;
                }
            }
        }
    }
    if let Some((mut cert, doc)) = winner {
        cert.neighborhood = Some(neighborhood_check(&cert, mas, opts.radius, opts.samples, opts.seed));
        report.certified = true;
        report.certificate = Some(cert);
        report.decomposition = doc;
    }
    Ok(report)
}
