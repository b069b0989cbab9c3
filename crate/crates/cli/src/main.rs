//! `crnscope`: structure reports, stability certificates, decomposition
//! candidates and simulations for mass-action networks.
//!
//! Exit codes: 0 success, 1 no certificate or a failed verification,
//! 2 invalid input.

mod text;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crnscope_core::balance::{self, FluxTolerance};
use crnscope_core::decompose::{certify, search_decomposition, CertifyOptions, CertifyReport, DEFAULT_BUDGET};
use crnscope_core::lyapunov::LyapunovCertificate;
use crnscope_core::model::{self, MassActionSystem};
use crnscope_core::netparse::{emit_report, parse_decomposition, parse_network, print_decomposition, NetworkDocument};
use crnscope_core::simulate::{
    self, integrate_batch, verify_convergence, verify_dissipation, ConvergenceReport, DissipationReport,
    PositivityBreach, SimulateOptions,
};

#[derive(Parser, Debug)]
#[command(name = "crnscope", version, about = "Stability certificates for mass-action reaction networks")]
struct Cli {
    #[command(flatten)]
    config: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct RunConfig {
    /// Relative tolerance on flux balances.
    #[arg(long, global = true, default_value_t = 1e-9, value_parser = positive)]
    tol_flux: f64,
    /// Absolute and relative step tolerance of the integrator.
    #[arg(long, global = true, default_value_t = 1e-9, value_parser = positive)]
    tol_ode: f64,
    /// Neighbourhood radius relative to the smallest equilibrium coordinate.
    #[arg(long, global = true, default_value_t = 0.1, value_parser = unit_interval)]
    radius: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Simulation horizon.
    #[arg(long, global = true, default_value_t = 50.0, value_parser = positive)]
    t_end: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for batch work.
    #[arg(long, global = true, env = "CRNSCOPE_THREADS")]
    threads: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Structural report: complexes, linkage classes, dimension, deficiency.
    Analyze { network: PathBuf },
    /// Try the stability theorems in order and emit the first certificate.
    Certify {
        network: PathBuf,
        /// Use this decomposition instead of searching.
        #[arg(long, conflicts_with = "auto")]
        decomposition: Option<PathBuf>,
        /// Search for decompositions (the default).
        #[arg(long)]
        auto: bool,
        #[command(flatten)]
        point: PointArgs,
    },
    /// Integrate the dynamics and check convergence and dissipation.
    Simulate {
        network: PathBuf,
        /// Initial state as comma-separated values.
        #[arg(long, value_parser = vector, conflicts_with = "perturb")]
        x0: Option<Vector>,
        /// Relative radius and number of perturbed starts around the equilibrium.
        #[arg(long, num_args = 2, value_names = ["RADIUS", "COUNT"])]
        perturb: Option<Vec<String>>,
        /// Certificate (or certify report) whose function is tracked along trajectories.
        #[arg(long)]
        certificate: Option<PathBuf>,
        /// Convergence threshold in the max norm.
        #[arg(long, default_value_t = 1e-4, value_parser = positive)]
        eps: f64,
        /// Output samples per trajectory.
        #[arg(long, default_value_t = 201)]
        samples: usize,
        /// Write one `trajectory_<k>.csv` per trajectory into this directory.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
        #[command(flatten)]
        point: PointArgs,
    },
    /// Write candidate decompositions as `.dcmp.json` files.
    Decompose {
        network: PathBuf,
        /// Directory for `candidate_<k>.dcmp.json`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Maximum number of part assignments tried.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[command(flatten)]
        point: PointArgs,
    },
    /// Certify every `.crn` file of a directory at its declared equilibrium.
    CertifyAll { dir: PathBuf },
}

#[derive(Args, Debug, Clone, Default)]
struct PointArgs {
    /// Equilibrium as comma-separated values in species order.
    #[arg(long, value_parser = vector)]
    equilibrium: Option<Vector>,
    /// Solve for an equilibrium, starting from the declared or given point.
    #[arg(long)]
    solve: bool,
    /// Levels of the canonical conservation laws for `--solve`.
    #[arg(long, value_parser = vector, requires = "solve")]
    levels: Option<Vector>,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

fn unit_interval(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        _ => Err(format!("expected a number in (0, 1), got `{s}`")),
    }
}

/// Comma-separated list of numbers.
#[derive(Debug, Clone, PartialEq)]
struct Vector(Vec<f64>);

fn vector(s: &str) -> Result<Vector, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()
        .map(Vector)
}

impl RunConfig {
    fn flux_tol(&self) -> FluxTolerance {
        FluxTolerance { rel: self.tol_flux, ..FluxTolerance::default() }
    }

    fn certify_options(&self) -> CertifyOptions {
        CertifyOptions { tol: self.flux_tol(), radius: self.radius, seed: self.seed, ..CertifyOptions::default() }
    }

    fn emit(&self, json: &str, text: impl FnOnce() -> String) -> Result<()> {
        let body = match self.format {
            Format::Json => json.to_string(),
            Format::Text => text(),
        };
        match &self.out {
            Some(p) => fs::write(p, body).with_context(|| format!("writing {}", p.display())),
            None => {
                print!("{body}");
                Ok(())
            }
        }
    }
}

fn read_network(path: &Path) -> Result<NetworkDocument> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_network(&text).with_context(|| format!("{}", path.display()))
}

/// The equilibrium to work with: `--equilibrium`, else the file's
/// `@equilibrium`, optionally refined by `--solve`.
fn resolve_point(doc: &NetworkDocument, args: &PointArgs, tol: FluxTolerance) -> Result<Vec<f64>> {
    let n = doc.system.num_species();
    let given = args.equilibrium.as_ref().map(|v| v.0.clone()).or_else(|| doc.equilibrium.clone());
    if args.solve {
        let guess = given.unwrap_or_else(|| vec![1.0; n]);
        let eq = balance::find_equilibrium(&doc.system, &guess, args.levels.as_ref().map(|v| v.0.as_slice())).context("solving for an equilibrium")?;
        return Ok(eq.x_star);
    }
    let Some(x) = given else { bail!("no equilibrium: pass --equilibrium, --solve, or declare @equilibrium") };
    if x.len() != n {
        bail!("equilibrium has {} values, network has {n} species", x.len());
    }
    if !balance::is_equilibrium(&doc.system, &x, tol).context("checking the equilibrium")? {
        bail!("the given point is not an equilibrium of the network");
    }
    Ok(x)
}

#[derive(Serialize)]
struct CertifyOutput<'a> {
    equilibrium: &'a [f64],
    #[serde(flatten)]
    report: &'a CertifyReport,
}

fn cmd_analyze(cfg: &RunConfig, network: &Path) -> Result<u8> {
    let doc = read_network(network)?;
    let report = model::structure_report(&doc.system);
    cfg.emit(&emit_report(&report), || text::structure(&report))?;
    Ok(0)
}

fn cmd_certify(cfg: &RunConfig, network: &Path, decomposition: Option<&Path>, point: &PointArgs) -> Result<u8> {
    let doc = read_network(network)?;
    let x = resolve_point(&doc, point, cfg.flux_tol())?;
    let dcmp = match decomposition {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Some(parse_decomposition(&text, &doc.system, true).with_context(|| format!("{}", p.display()))?)
        }
        None => None,
    };
    let report = certify(&doc.system, &x, dcmp.as_ref(), &cfg.certify_options())?;
    let out = CertifyOutput { equilibrium: &x, report: &report };
    cfg.emit(&emit_report(&out), || text::certify(&report, &doc.system.species_names()))?;
    Ok(if report.certified { 0 } else { 1 })
}

fn cmd_decompose(cfg: &RunConfig, network: &Path, out_dir: Option<&Path>, budget: usize, point: &PointArgs) -> Result<u8> {
    let doc = read_network(network)?;
    let x = resolve_point(&doc, point, cfg.flux_tol())?;
    let found = search_decomposition(&doc.system, &x, cfg.flux_tol(), budget);
    let docs: Vec<_> = found.iter().map(|d| d.document()).collect();
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (k, d) in docs.iter().enumerate() {
            let path = dir.join(format!("candidate_{k}.dcmp.json"));
            fs::write(&path, print_decomposition(d)).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    #[derive(Serialize)]
    struct Out<'a> {
        equilibrium: &'a [f64],
        candidates: &'a [crnscope_core::netparse::DecompositionDocument],
    }
    cfg.emit(&emit_report(&Out { equilibrium: &x, candidates: &docs }), || text::candidates(&docs))?;
    Ok(if docs.is_empty() { 1 } else { 0 })
}

#[derive(Serialize)]
struct TrajectorySummary {
    index: usize,
    x0: Vec<f64>,
    final_state: Vec<f64>,
    samples: usize,
    complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    breach: Option<PositivityBreach>,
    conservation_drift: f64,
}

#[derive(Serialize)]
struct SimulateOutput {
    t_end: f64,
    trajectories: Vec<TrajectorySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    equilibrium: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    convergence: Option<ConvergenceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dissipation: Option<Vec<DissipationReport>>,
    pass: bool,
}

fn read_certificate(path: &Path, mas: &MassActionSystem, tol: FluxTolerance) -> Result<LyapunovCertificate> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("{}", path.display()))?;
    let inner = value.get("certificate").cloned().unwrap_or(value);
    let cert: LyapunovCertificate =
        serde_json::from_value(inner).with_context(|| format!("{}: not a certificate", path.display()))?;
    let n = mas.num_species();
    let max_index = cert.pieces.iter().flat_map(|p| p.species()).max();
    if cert.x_star.len() != n || max_index.is_some_and(|i| i >= n) {
        bail!("certificate is for a network with {} species, this one has {n}", cert.x_star.len());
    }
    if !balance::is_equilibrium(mas, &cert.x_star, tol)? {
        bail!("the certificate's equilibrium is not an equilibrium of this network");
    }
    Ok(cert)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    cfg: &RunConfig,
    network: &Path,
    x0: Option<&[f64]>,
    perturb: Option<&[String]>,
    certificate: Option<&Path>,
    eps: f64,
    samples: usize,
    csv_dir: Option<&Path>,
    point: &PointArgs,
) -> Result<u8> {
    let doc = read_network(network)?;
    let mas = &doc.system;
    let cert = certificate.map(|p| read_certificate(p, mas, cfg.flux_tol())).transpose()?;
    let x_star = match (&cert, point.equilibrium.is_some() || point.solve || doc.equilibrium.is_some()) {
        (_, true) => Some(resolve_point(&doc, point, cfg.flux_tol())?),
        (Some(c), false) => Some(c.x_star.clone()),
        (None, false) => None,
    };
    let starts: Vec<Vec<f64>> = match (x0, perturb) {
        (Some(x0), _) => vec![x0.to_vec()],
        (None, Some([radius, count])) => {
            let radius: f64 = unit_interval(radius).map_err(anyhow::Error::msg)?;
            let count: usize = count.parse().with_context(|| format!("count `{count}`"))?;
            let Some(x) = &x_star else { bail!("--perturb needs an equilibrium") };
            let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
            let basis = model::stoichiometric_basis(mas);
            simulate::sample_perturbations(x, &basis, radius * min, count, cfg.seed)?
        }
        _ => bail!("pass --x0 or --perturb RADIUS COUNT"),
    };
    let opts = SimulateOptions { abs_tol: cfg.tol_ode, rel_tol: cfg.tol_ode, samples, ..SimulateOptions::default() };
    let mut trajectories = integrate_batch(mas, &starts, cfg.t_end, &opts)?;
    let convergence = x_star.as_ref().map(|x| verify_convergence(&trajectories, x, eps));
    let dissipation = cert.as_ref().map(|c| trajectories.iter().map(|t| verify_dissipation(c, mas, t)).collect::<Vec<_>>());
    if let Some(c) = &cert {
        for t in &mut trajectories {
            // points outside the function's domain leave the column empty
            let _ = t.attach_lyapunov(c);
        }
    }
    if let Some(dir) = csv_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (k, t) in trajectories.iter().enumerate() {
            let path = dir.join(format!("trajectory_{k}.csv"));
            fs::write(&path, t.to_csv()).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    let pass = trajectories.iter().all(|t| t.complete())
        && convergence.as_ref().is_none_or(|c| c.pass)
        && dissipation.as_ref().is_none_or(|d| d.iter().all(|r| r.pass));
    let out = SimulateOutput {
        t_end: cfg.t_end,
        trajectories: trajectories
            .iter()
            .enumerate()
            .map(|(index, t)| TrajectorySummary {
                index,
                x0: t.states[0].clone(),
                final_state: t.final_state().to_vec(),
                samples: t.times.len(),
                complete: t.complete(),
                breach: t.breach,
                conservation_drift: t.conservation_drift(),
            })
            .collect(),
        equilibrium: x_star,
        convergence,
        dissipation,
        pass,
    };
    cfg.emit(&emit_report(&out), || text::simulation(&out))?;
    Ok(if pass { 0 } else { 1 })
}

#[derive(Serialize)]
struct BatchEntry {
    file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    certified: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn certify_file(cfg: &RunConfig, path: &Path) -> Result<CertifyReport> {
    let doc = read_network(path)?;
    let x = resolve_point(&doc, &PointArgs::default(), cfg.flux_tol())?;
    Ok(certify(&doc.system, &x, None, &cfg.certify_options())?)
}

fn cmd_certify_all(cfg: &RunConfig, dir: &Path) -> Result<u8> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "crn"))
        .collect();
    files.sort();
    let entries: Vec<BatchEntry> = files
        .par_iter()
        .map(|p| {
            let file = p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
            match certify_file(cfg, p) {
                Ok(r) => BatchEntry {
                    file,
                    certified: Some(r.certified),
                    kind: r.certificate.map(|c| kind_name(&c)),
                    error: None,
                },
                Err(e) => BatchEntry { file, certified: None, kind: None, error: Some(format!("{e:#}")) },
            }
        })
        .collect();
    #[derive(Serialize)]
    struct Out<'a> {
        entries: &'a [BatchEntry],
    }
    let text = || {
        entries
            .iter()
            .map(|e| match (&e.error, e.certified, &e.kind) {
                (Some(err), _, _) => format!("{:<32} error: {err}\n", e.file),
                (None, Some(true), Some(k)) => format!("{:<32} certified {k}\n", e.file),
                _ => format!("{:<32} no certificate\n", e.file),
            })
            .collect()
    };
    cfg.emit(&emit_report(&Out { entries: &entries }), text)?;
    Ok(if entries.iter().any(|e| e.error.is_some()) {
        2
    } else if entries.iter().all(|e| e.certified == Some(true)) {
        0
    } else {
        1
    })
}

fn kind_name(cert: &LyapunovCertificate) -> String {
    serde_json::to_value(cert.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = &cli.config;
    if let Some(n) = cfg.threads {
        // a pool may already exist when embedded; the setting is then ignored
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match &cli.command {
        Command::Analyze { network } => cmd_analyze(cfg, network),
        Command::Certify { network, decomposition, point, .. } => cmd_certify(cfg, network, decomposition.as_deref(), point),
        Command::Simulate { network, x0, perturb, certificate, eps, samples, csv_dir, point } => cmd_simulate(
            cfg,
            network,
            x0.as_ref().map(|v| v.0.as_slice()),
            perturb.as_deref(),
            certificate.as_deref(),
            *eps,
            *samples,
            csv_dir.as_deref(),
            point,
        ),
        Command::Decompose { network, out_dir, budget, point } => cmd_decompose(cfg, network, out_dir.as_deref(), *budget, point),
        Command::CertifyAll { dir } => cmd_certify_all(cfg, dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
