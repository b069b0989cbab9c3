//! Acceptance criteria, one line of output per criterion. Runs without the
//! libtest harness so that the lines are always printed.

mod common;

use std::process::ExitCode;

use common::{
    cycle, load_decomposition, load_with_x, networks_dir, pairs_balanced_oracle, random_autocatalytic, random_network,
};
use crnscope_core::balance::{self, FluxTolerance};
use crnscope_core::decompose::{
    certify, check_thm_auto, is_autocatalytic, pairwise_balance_equivalence, validate_decomposition, CertifyOptions,
    Overall,
};
use crnscope_core::lyapunov::{
    autocat_two_species_conditions, h_du, h_poly, neighborhood_check, numeric_gradient, solve_u_tilde,
    u_tilde_shared, CertificateKind, LyapunovCertificate, OneDimGeometry, Piece, TwoSpeciesShape,
};
use crnscope_core::model::{self, MassActionSystem};
use crnscope_core::netparse::{emit_report, parse_network};
use crnscope_core::simulate::{
    integrate, integrate_batch, sample_perturbations, verify_convergence, verify_dissipation, SimulateOptions,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn tol() -> FluxTolerance {
    FluxTolerance::default()
}

fn sim() -> SimulateOptions {
    SimulateOptions::default()
}

fn perturb(mas: &MassActionSystem, x: &[f64], rel: f64, count: usize, seed: u64) -> Result<Vec<Vec<f64>>, String> {
    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    sample_perturbations(x, &model::stoichiometric_basis(mas), rel * min, count, seed).map_err(|e| e.to_string())
}

fn aurora(k: [f64; 3]) -> MassActionSystem {
    MassActionSystem::from_triples(
        &["E", "EP"],
        &[(&[1, 0], &[0, 1], k[0]), (&[0, 1], &[1, 0], k[1]), (&[1, 1], &[0, 2], k[2])],
    )
    .unwrap()
}

fn criterion_1() -> Outcome {
    let k = [1.0, 2.0, 1.0];
    let mas = aurora(k);
    let r = model::structure_report(&mas);
    ensure!(
        r.num_complexes == 4 && r.num_linkage_classes == 2 && r.dim_s == 1 && r.deficiency == 1,
        "|C|={} l={} dim={} δ={}",
        r.num_complexes,
        r.num_linkage_classes,
        r.dim_s,
        r.deficiency
    );
    let mut worst: f64 = 0.0;
    for c in [0.5, 1.0, 1.5] {
        let x = [c, c * k[0] / (k[1] - c * k[2])];
        let check = balance::check_reaction_vector_balanced(&mas, &x, tol()).map_err(|e| e.to_string())?;
        ensure!(check.holds, "not reaction-vector balanced at {x:?}");
        worst = check.groups.iter().fold(worst, |m, g| m.max(g.residual.abs()));
    }
    ensure!(worst <= 1e-12, "flux residual {worst:e}");
    Ok(format!("|C|=4 l=2 dim=1 δ=1; max residual {worst:e}"))
}

fn criterion_2() -> Outcome {
    let (mas, x) = load_with_x("eg7");
    let doc = load_decomposition("eg7", &mas);
    let dec = validate_decomposition(&mas, &x, &doc, tol()).map_err(|e| e.to_string())?;
    let part = &dec.parts[3];
    let s3 = part.local(2).ok_or("S3 not in the one-dimensional part")?;
    let (line, margin) = u_tilde_shared(&part.subsystem, &[s3], &part.x_star).map_err(|e| e.to_string())?;
    let mut worst_u: f64 = 0.0;
    for x4 in [0.5, 0.8, 1.0, 1.3, 2.0] {
        let want = (2.0 + 2.0 * x4) / (3.0 * x4 + x4 * x4);
        worst_u = worst_u.max((line.u_tilde(&[x4]) - want).abs());
    }
    ensure!(worst_u <= 1e-12, "ũ₃ deviates by {worst_u:e}");
    ensure!((margin - 0.75).abs() <= 1e-10, "condition margin {margin}");

    let report = certify(&mas, &x, Some(&doc), &CertifyOptions::default()).map_err(|e| e.to_string())?;
    let cert = report.certificate.ok_or("no certificate")?;
    ensure!(cert.kind == CertificateKind::CompositeCor47, "kind {:?}", cert.kind);

    let trs = integrate_batch(&mas, &perturb(&mas, &x, 0.1, 20, 0)?, 50.0, &sim()).map_err(|e| e.to_string())?;
    let conv = verify_convergence(&trs, &x, 1e-4);
    ensure!(conv.converged == 20, "{}/20 converged", conv.converged);
    let worst_step = trs.iter().map(|t| verify_dissipation(&cert, &mas, t)).try_fold(f64::NEG_INFINITY, |m, d| {
        if d.monotonicity_violations == 0 && d.evaluation_failures == 0 { Ok(m.max(d.max_increase)) } else { Err(format!("{d:?}")) }
    })?;
    ensure!(worst_step <= 1e-8, "f increased by {worst_step:e}");
    Ok(format!(
        "ũ₃ error {worst_u:e}; margin {margin:.12}; composite_cor47; 20/20 converged; max f step {worst_step:e}"
    ))
}

fn criterion_3() -> Outcome {
    let (mas, x) = load_with_x("autocat2");
    let shape = TwoSpeciesShape::extract(&mas, 0, 1, [-1, 1], &x).map_err(|e| e.to_string())?;
    let c = autocat_two_species_conditions(&shape, &mas, &x).map_err(|e| e.to_string())?;
    ensure!((c.forward - 3.0).abs() <= 1e-12 && (c.backward - 1.0).abs() <= 1e-12, "conditions {} and {}", c.forward, c.backward);
    let out = check_thm_auto(&mas, &x, tol());
    ensure!(out.verdict.overall == Overall::Pass, "thm_auto {:?}", out.verdict.overall);
    let cert = out.certificate.ok_or("no certificate")?;
    let targets: [fn(f64) -> f64; 2] = [|t| 6.0 * t / (t * t + 3.0 * t + 2.0), |t| 6.0 * t / (t * t + t + 4.0)];
    let mut worst: f64 = 0.0;
    for (s, target) in targets.iter().enumerate() {
        let piece = cert
            .pieces
            .iter()
            .find_map(|p| match p {
                Piece::SpeciesIntegral(si) if si.species == s => Some(si),
                _ => None,
            })
            .ok_or(format!("no integral for species {s}"))?;
        for t in [0.3, 0.7, 1.0, 1.6, 2.5] {
            worst = worst.max((piece.integrand(t) - target(t).ln()).abs());
        }
    }
    ensure!(worst <= 1e-12, "integrand error {worst:e}");
    let tr = integrate(&mas, &[1.3, 0.7], 50.0, &sim()).map_err(|e| e.to_string())?;
    let conv = verify_convergence(&[tr], &x, 1e-4);
    ensure!(conv.pass, "distance {:e}", conv.entries[0].final_distance);
    Ok(format!("conditions 3 and 1; integrand error {worst:e}; (1.3, 0.7) → (1, 1)"))
}

fn criterion_4() -> Outcome {
    let (mas, x) = load_with_x("autocat4");
    let a = (3f64.sqrt() - 1.0) / 2.0;
    ensure!((x[0] - a).abs() < 1e-15 && x[1] == 1.0 && x[2] == 1.0 && (x[3] - a).abs() < 1e-15, "x* = {x:?}");
    let out = check_thm_auto(&mas, &x, tol());
    ensure!(out.verdict.overall == Overall::Pass, "thm_auto {:?}", out.verdict.overall);
    let check = balance::check_reaction_vector_balanced(&mas, &x, tol()).map_err(|e| e.to_string())?;
    let worst = check.groups.iter().fold(0.0f64, |m, g| m.max(g.residual.abs()));
    ensure!(check.groups.len() == 3 && check.holds && worst <= 1e-10, "residual {worst:e}");
    let trs = integrate_batch(&mas, &perturb(&mas, &x, 0.1, 10, 0)?, 50.0, &sim()).map_err(|e| e.to_string())?;
    let conv = verify_convergence(&trs, &x, 1e-4);
    ensure!(conv.pass, "{}/10 converged", conv.converged);
    Ok(format!("thm_auto pass; pair residual {worst:e}; 10/10 converged"))
}

fn criterion_5() -> Outcome {
    for n in 3..=8 {
        let mas = cycle(n);
        let x = vec![1.0; n];
        let out = check_thm_auto(&mas, &x, tol());
        ensure!(out.verdict.overall == Overall::Pass, "n={n}: thm_auto {:?}", out.verdict.overall);
        for pair in is_autocatalytic(&mas).pairs {
            let (sub, map) = mas.subsystem(&pair.reactions()).map_err(|e| e.to_string())?;
            let xp: Vec<f64> = map.iter().map(|&s| x[s]).collect();
            let shape = TwoSpeciesShape::extract(&sub, 0, 1, [-1, 1], &xp).map_err(|e| e.to_string())?;
            let c = autocat_two_species_conditions(&shape, &sub, &xp).map_err(|e| e.to_string())?;
            ensure!(c.shortcut_pass && c.explicit_pass, "n={n}, pair ({}, {}): {c:?}", pair.i, pair.j);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let mut balanced = 0;
    for k in 0..200 {
        let (mas, x) = random_autocatalytic(&mut rng);
        let oracle = pairs_balanced_oracle(&mas, &x);
        let (full, pairs) = pairwise_balance_equivalence(&mas, &x, tol()).map_err(|e| e.to_string())?;
        ensure!(full == oracle && pairs == oracle, "instance {k}: full {full}, pairs {pairs}, oracle {oracle}");
        balanced += oracle as usize;
    }
    Ok(format!("n=3..8 pass, shortcut and explicit agree; 200 random instances agree ({balanced} balanced)"))
}

struct Oracle {
    equilibrium: bool,
    detailed: bool,
    complex: bool,
    reaction_vector: bool,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 + 1e-9 * a.abs().max(b.abs())
}

/// Flux sums computed directly from the reaction list.
fn balance_oracle(mas: &MassActionSystem, x: &[f64]) -> Oracle {
    let rs = mas.reactions();
    let flux: Vec<f64> = rs.iter().map(|r| r.rate * r.reactant.monomial(x)).collect();
    let n = mas.num_species();
    let equilibrium = (0..n).all(|s| {
        let (mut prod, mut cons) = (0.0, 0.0);
        for (r, f) in rs.iter().zip(&flux) {
            let v = r.product.coeff(s) as f64 - r.reactant.coeff(s) as f64;
            if v > 0.0 { prod += v * f } else { cons -= v * f }
        }
        close(prod, cons)
    });
    let detailed = rs.iter().enumerate().all(|(i, r)| {
        rs.iter().enumerate().any(|(j, s)| s.reactant == r.product && s.product == r.reactant && close(flux[i], flux[j]))
    });
    let mut complexes: Vec<&crnscope_core::model::Complex> = rs.iter().flat_map(|r| [&r.reactant, &r.product]).collect();
    complexes.dedup();
    let complex = complexes.iter().all(|c| {
        let out: f64 = rs.iter().zip(&flux).filter(|(r, _)| &r.reactant == *c).map(|(_, f)| f).sum();
        let inn: f64 = rs.iter().zip(&flux).filter(|(r, _)| &r.product == *c).map(|(_, f)| f).sum();
        close(out, inn)
    });
    let reaction_vector = rs.iter().all(|r| {
        let v = r.reaction_vector();
        let neg: Vec<i64> = v.iter().map(|a| -a).collect();
        let same: f64 = rs.iter().zip(&flux).filter(|(s, _)| s.reaction_vector() == v).map(|(_, f)| f).sum();
        let opp: f64 = rs.iter().zip(&flux).filter(|(s, _)| s.reaction_vector() == neg).map(|(_, f)| f).sum();
        close(same, opp)
    });
    Oracle { equilibrium, detailed, complex, reaction_vector }
}

fn one_dim_fixtures() -> Vec<(MassActionSystem, Vec<f64>)> {
    let mut out = Vec::new();
    for c in [0.5, 1.0, 1.5] {
        out.push((aurora([1.0, 2.0, 1.0]), vec![c, c / (2.0 - c)]));
    }
    out.push(load_with_x("isomerization"));
    let (eg7, x) = load_with_x("eg7");
    for part in [&[5usize, 6, 7][..], &[8, 9, 10], &[11, 12, 13, 14]] {
        let (sub, map) = eg7.subsystem(part).unwrap();
        let xp = map.iter().map(|&s| x[s]).collect();
        out.push((sub, xp));
    }
    let (a2, x2) = load_with_x("autocat2");
    out.push((a2, x2));
    out
}

fn certificates() -> Result<Vec<(String, MassActionSystem, LyapunovCertificate)>, String> {
    let mut out = Vec::new();
    let mut files: Vec<_> = std::fs::read_dir(networks_dir())
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "crn"))
        .collect();
    files.sort();
    for p in files {
        let doc = parse_network(&std::fs::read_to_string(&p).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let Some(x) = doc.equilibrium.clone() else { continue };
        let report = certify(&doc.system, &x, None, &CertifyOptions::default()).map_err(|e| e.to_string())?;
        if let Some(c) = report.certificate {
            out.push((p.file_name().unwrap().to_string_lossy().into_owned(), doc.system, c));
        }
    }
    Ok(out)
}

/// Finite-difference Hessian of `f` at `x` along an orthonormal basis of
/// the stoichiometric subspace.
fn restricted_hessian(cert: &LyapunovCertificate, basis: &[Vec<f64>], x: &[f64], h: f64) -> Result<DMatrix<f64>, String> {
    let d = basis.len();
    let f = |a: usize, sa: f64, b: usize, sb: f64| -> Result<f64, String> {
        let p: Vec<f64> = (0..x.len()).map(|i| x[i] + h * (sa * basis[a][i] + sb * basis[b][i])).collect();
        cert.evaluate(&p).map_err(|e| e.to_string())
    };
    let mut m = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            m[(a, b)] = (f(a, 1.0, b, 1.0)? - f(a, 1.0, b, -1.0)? - f(a, -1.0, b, 1.0)? + f(a, -1.0, b, -1.0)?) / (4.0 * h * h);
        }
    }
    Ok((&m + m.transpose()) * 0.5)
}

fn criterion_6() -> Outcome {
    // h(x, ·) is strictly increasing
    let fixtures = one_dim_fixtures();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for k in 0..1000 {
        let (mas, xs) = &fixtures[rng.gen_range(0..fixtures.len())];
        let geom = OneDimGeometry::new(mas, xs).map_err(|e| e.to_string())?;
        let x: Vec<f64> = xs.iter().map(|v| v * rng.gen_range(0.2..3.0)).collect();
        let u1 = rng.gen_range(0.05..10.0);
        let u2 = u1 * rng.gen_range(1.001..5.0);
        let (h1, h2) = (h_poly(mas, &geom, &x, u1), h_poly(mas, &geom, &x, u2));
        ensure!(h1 < h2 && h_du(mas, &geom, &x, u1) > 0.0, "sample {k}: h({u1}) = {h1}, h({u2}) = {h2}");
    }
    let mut worst_u: f64 = 0.0;
    for (mas, xs) in &fixtures {
        let geom = OneDimGeometry::new(mas, xs).map_err(|e| e.to_string())?;
        worst_u = worst_u.max((solve_u_tilde(mas, &geom, xs).map_err(|e| e.to_string())? - 1.0).abs());
    }
    ensure!(worst_u <= 1e-12, "ũ(x*) off by {worst_u:e}");

    let certs = certificates()?;
    let mut worst_f_dot = f64::NEG_INFINITY;
    for (name, mas, cert) in &certs {
        let x = &cert.x_star;
        let f0 = cert.evaluate(x).map_err(|e| e.to_string())?;
        ensure!(f0.abs() <= 1e-12, "{name}: f(x*) = {f0:e}");
        let g = numeric_gradient(cert, x, 1e-6).map_err(|e| e.to_string())?;
        let gn = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        ensure!(gn <= 1e-6, "{name}: ‖∇f(x*)‖∞ = {gn:e}");
        let basis = model::stoichiometric_basis(mas);
        let hs = restricted_hessian(cert, &basis, x, 1e-4)?;
        let min_eig = hs.symmetric_eigenvalues().min();
        ensure!(min_eig > 0.0, "{name}: restricted Hessian has eigenvalue {min_eig:e}");
        let nb = neighborhood_check(cert, mas, 0.1, 100, 0);
        ensure!(nb.pass && nb.samples == 100, "{name}: {nb:?}");
        worst_f_dot = worst_f_dot.max(nb.max_f_dot);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let (mut count, mut seen) = (0, [0usize; 4]);
    while count < 500 {
        let Some((mas, x)) = random_network(&mut rng) else { continue };
        count += 1;
        let cert = balance::certify_balance(&mas, &x, tol()).map_err(|e| e.to_string())?;
        let o = balance_oracle(&mas, &x);
        ensure!(
            cert.equilibrium == o.equilibrium
                && cert.detailed == o.detailed
                && cert.complex_balanced == o.complex
                && cert.reaction_vector_balanced == o.reaction_vector,
            "network {count}: checks disagree with the oracle for {mas:?} at {x:?}"
        );
        ensure!(!cert.detailed || (cert.complex_balanced && cert.reaction_vector_balanced), "network {count}: detailed without weaker notions");
        ensure!(!(cert.complex_balanced || cert.reaction_vector_balanced) || cert.equilibrium, "network {count}: balance without equilibrium");
        for (s, flag) in seen.iter_mut().zip([o.equilibrium, o.detailed, o.complex, o.reaction_vector]) {
            *s += flag as usize;
        }
    }
    Ok(format!(
        "h monotone on 1000 samples; ũ(x*) error {worst_u:e}; {} certificates, max ḟ {worst_f_dot:e}; 500 networks (eq/db/cb/rv = {}/{}/{}/{})",
        certs.len(),
        seen[0],
        seen[1],
        seen[2],
        seen[3]
    ))
}

fn criterion_7() -> Outcome {
    let (mas, x) = load_with_x("eg7");
    let opts = CertifyOptions { seed: 11, ..CertifyOptions::default() };
    let a = emit_report(&certify(&mas, &x, None, &opts).map_err(|e| e.to_string())?);
    let b = emit_report(&certify(&mas, &x, None, &opts).map_err(|e| e.to_string())?);
    ensure!(a == b, "certify JSON differs between runs");
    let cert = certify(&mas, &x, None, &opts).unwrap().certificate.unwrap();
    let csv = || -> Result<Vec<String>, String> {
        let starts = perturb(&mas, &x, 0.1, 4, 11)?;
        let trs = integrate_batch(&mas, &starts, 20.0, &sim()).map_err(|e| e.to_string())?;
        trs.into_iter()
            .map(|mut t| {
                t.attach_lyapunov(&cert).map_err(|e| e.to_string())?;
                Ok(t.to_csv())
            })
            .collect()
    };
    ensure!(csv()? == csv()?, "CSV differs between runs");
    Ok(format!("certify JSON ({} bytes) and 4 trajectory CSVs byte-identical", a.len()))
}

fn criterion_8() -> Outcome {
    let (mas, _) = load_with_x("eg7");
    let r = model::structure_report(&mas);
    let stated = (5, 3);
    let consistent = r.deficiency == r.num_complexes as i64 - r.num_linkage_classes as i64 - r.dim_s as i64
        && r.conservation_basis.len() == r.species.len() - r.dim_s;
    ensure!(consistent, "inconsistent report {r:?}");
    Ok(format!(
        "computed dim {} δ {} (|C|={}, l={}, {} conservation laws); stated dim {} δ {}",
        r.dim_s,
        r.deficiency,
        r.num_complexes,
        r.num_linkage_classes,
        r.conservation_basis.len(),
        stated.0,
        stated.1
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("Aurora B kinase structure and balance", criterion_1),
        ("five-species split, ũ₃, margin, certificate, simulation", criterion_2),
        ("two-species autocatalytic example", criterion_3),
        ("four-species autocatalytic example", criterion_4),
        ("autocatalytic cycles and pairwise balance", criterion_5),
        ("property suite", criterion_6),
        ("determinism", criterion_7),
        ("structure report consistency", criterion_8),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {why}", k + 1);
            }
        }
    }
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
