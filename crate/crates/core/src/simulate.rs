//! Numerical integration of mass-action dynamics and empirical checks of
//! convergence and dissipation along trajectories.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lyapunov::{dissipation_check, LyapunovCertificate, LyapunovError, DISSIPATION_TOL};
use crate::model::{self, MassActionSystem, ModelError};
use crate::netparse::format_float;
use crate::numeric::rk45::{self, StepError, Tolerances};
use crate::numeric::{inf_norm, sampling};

/// Integration halts once any coordinate drops below this value.
pub const POSITIVITY_FLOOR: f64 = 1e-12;
/// Allowed per-sample increase of a Lyapunov function along a trajectory.
pub const MONOTONICITY_SLACK: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulateError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("end time must be positive and finite, got {0}")]
    Horizon(f64),
    #[error("at least two output samples are required, got {0}")]
    Samples(usize),
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("step budget exhausted after {0} steps")]
    TooManySteps(usize),
    #[error("radius {radius} does not keep the sample positive (smallest coordinate {min})")]
    Radius { radius: f64, min: f64 },
    #[error("state has {found} coordinates, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Lyapunov(#[from] LyapunovError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulateOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Number of equally spaced output times including both ends.
    pub samples: usize,
    pub max_steps: usize,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        SimulateOptions { abs_tol: 1e-9, rel_tol: 1e-9, samples: 201, max_steps: 1_000_000 }
    }
}

/// Where integration stopped because a coordinate left the positive orthant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityBreach {
    pub t: f64,
    pub species: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Rows of the conservation-law basis used for `conserved_values`.
    pub conservation_laws: Vec<Vec<f64>>,
    /// `wᵀ x(t)` for every law, one row per sample.
    pub conserved_values: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lyapunov_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub breach: Option<PositivityBreach>,
    pub t_end: f64,
}

impl Trajectory {
    /// Reached `t_end` without a positivity breach.
    pub fn complete(&self) -> bool {
        self.breach.is_none()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Largest relative change of any conserved quantity from its initial
    /// value. The scale is `max(|wᵀx(0)|, ‖w‖₁ ‖x(0)‖∞)`.
    pub fn conservation_drift(&self) -> f64 {
        let (Some(first), Some(x0)) = (self.conserved_values.first(), self.states.first()) else {
            return 0.0;
        };
        let xs = inf_norm(x0);
        let mut worst: f64 = 0.0;
        for (k, w) in self.conservation_laws.iter().enumerate() {
            let scale = first[k].abs().max(w.iter().map(|v| v.abs()).sum::<f64>() * xs).max(f64::MIN_POSITIVE);
            for row in &self.conserved_values {
                worst = worst.max((row[k] - first[k]).abs() / scale);
            }
        }
        worst
    }

    /// Fills `lyapunov_values` with `f(x(t))` for every sample.
    pub fn attach_lyapunov(&mut self, cert: &LyapunovCertificate) -> Result<(), SimulateError> {
        let values = self.states.iter().map(|x| cert.evaluate(x)).collect::<Result<Vec<_>, _>>()?;
        self.lyapunov_values = Some(values);
        Ok(())
    }

    /// CSV with header `t,x_1,...,x_n` and a trailing `f` column when
    /// Lyapunov values are attached.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, Vec::len);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        if self.lyapunov_values.is_some() {
            header.push("f".into());
        }
        // writing into a Vec cannot fail
        let _ = w.write_record(&header);
        for (k, (t, x)) in self.times.iter().zip(&self.states).enumerate() {
            let mut row = vec![format_float(*t)];
            row.extend(x.iter().map(|v| format_float(*v)));
            if let Some(f) = &self.lyapunov_values {
                row.push(format_float(f[k]));
            }
            let _ = w.write_record(&row);
        }
        String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
    }
}

fn rhs(mas: &MassActionSystem, x: &[f64]) -> Vec<f64> {
    let mut dx = vec![0.0; x.len()];
    for r in mas.reactions() {
        let rate = r.flux(x);
        for (d, v) in dx.iter_mut().zip(r.reaction_vector()) {
            if v != 0 {
                *d += v as f64 * rate;
            }
        }
    }
    dx
}

/// Integrates `ẋ = Γ Ξ(x)` from `x0` over `[0, t_end]` with Dormand–Prince
/// 5(4), recording the dense solution at `opts.samples` equally spaced
/// times. A coordinate falling below [`POSITIVITY_FLOOR`] ends the run early
/// and is reported in [`Trajectory::breach`].
pub fn integrate(
    mas: &MassActionSystem,
    x0: &[f64],
    t_end: f64,
    opts: &SimulateOptions,
) -> Result<Trajectory, SimulateError> {
    mas.check_state(x0)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(SimulateError::Horizon(t_end));
    }
    if opts.samples < 2 {
        return Err(SimulateError::Samples(opts.samples));
    }
    let grid: Vec<f64> = (0..opts.samples)
        .map(|k| if k + 1 == opts.samples { t_end } else { t_end * k as f64 / (opts.samples - 1) as f64 })
        .collect();
    let mut times = vec![0.0];
    let mut states = vec![x0.to_vec()];
    let mut next = 1;
    let mut breach = None;
    let tol = Tolerances { abs: opts.abs_tol, rel: opts.rel_tol };
    let result = rk45::integrate(
        |_t, y: &[f64]| Ok::<_, std::convert::Infallible>(rhs(mas, y)),
        0.0,
        x0,
        t_end,
        tol,
        opts.max_steps,
        |step| {
            let t1 = step.t1();
            while next < grid.len() && grid[next] <= t1 {
                let x = if grid[next] == t1 { step.end_state() } else { step.eval(grid[next]) };
                if let Some((species, &value)) = x.iter().enumerate().find(|(_, v)| **v < POSITIVITY_FLOOR) {
                    breach = Some(PositivityBreach { t: grid[next], species, value });
                    return false;
                }
                times.push(grid[next]);
                states.push(x);
                next += 1;
            }
            let end = step.end_state();
            if let Some((species, &value)) = end.iter().enumerate().find(|(_, v)| **v < POSITIVITY_FLOOR) {
                breach = Some(PositivityBreach { t: t1, species, value });
                return false;
            }
            true
        },
    );
    match result {
        Ok(_) | Err(StepError::Stopped(_)) => {}
        Err(StepError::StepUnderflow(t)) => return Err(SimulateError::StepUnderflow(t)),
        Err(StepError::TooManySteps(n)) => return Err(SimulateError::TooManySteps(n)),
        Err(StepError::Rhs { source, .. }) => match source {},
    }
    let laws = model::conservation_laws_f64(mas);
    let conserved_values = states
        .iter()
        .map(|x| laws.iter().map(|w| w.iter().zip(x).map(|(a, b)| a * b).sum()).collect())
        .collect();
    Ok(Trajectory { times, states, conservation_laws: laws, conserved_values, lyapunov_values: None, breach, t_end })
}

/// Integrates every initial state in parallel, preserving input order.
pub fn integrate_batch(
    mas: &MassActionSystem,
    starts: &[Vec<f64>],
    t_end: f64,
    opts: &SimulateOptions,
) -> Result<Vec<Trajectory>, SimulateError> {
    starts.par_iter().map(|x0| integrate(mas, x0, t_end, opts)).collect()
}

/// `count` points `x* + Σ c_k v_k` within Euclidean distance `radius` of
/// `x_star`, where `basis` is an orthonormal basis of the stoichiometric
/// subspace. Coefficients come from a seeded low-discrepancy sequence, so
/// every point lies in the compatibility class of `x_star`.
pub fn sample_perturbations(
    x_star: &[f64],
    basis: &[Vec<f64>],
    radius: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, SimulateError> {
    if let Some(v) = basis.iter().find(|v| v.len() != x_star.len()) {
        return Err(SimulateError::Dimension { expected: x_star.len(), found: v.len() });
    }
    let min = x_star.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(radius >= 0.0 && radius < min) {
        return Err(SimulateError::Radius { radius, min });
    }
    Ok(sampling::ball_samples(x_star, basis, radius, count, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    pub index: usize,
    pub complete: bool,
    /// `‖x(t_end) − x*‖∞`.
    pub final_distance: f64,
    /// Largest distance over the last tenth of the samples.
    pub tail_max: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub eps: f64,
    pub total: usize,
    pub converged: usize,
    pub entries: Vec<ConvergenceEntry>,
    pub pass: bool,
}

impl ConvergenceReport {
    pub fn failures(&self) -> impl Iterator<Item = &ConvergenceEntry> {
        self.entries.iter().filter(|e| !e.converged)
    }
}

/// A trajectory converged when it is complete, ends within `eps` of
/// `x_star` in the max norm and stays within `2 eps` over its last tenth.
pub fn verify_convergence(trajectories: &[Trajectory], x_star: &[f64], eps: f64) -> ConvergenceReport {
    let entries: Vec<ConvergenceEntry> = trajectories
        .iter()
        .enumerate()
        .map(|(index, tr)| {
            let dist = |x: &[f64]| {
                if x.len() != x_star.len() {
                    return f64::INFINITY;
                }
                x.iter().zip(x_star).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            };
            let final_distance = dist(tr.final_state());
            let n = tr.states.len();
            let tail = (n / 10).max(1).min(n);
            let tail_max = tr.states[n - tail..].iter().map(|x| dist(x)).fold(0.0, f64::max);
            let complete = tr.complete();
            ConvergenceEntry {
                index,
                complete,
                final_distance,
                tail_max,
                converged: complete && final_distance < eps && tail_max < 2.0 * eps,
            }
        })
        .collect();
    let converged = entries.iter().filter(|e| e.converged).count();
    ConvergenceReport { eps, total: entries.len(), converged, pass: converged == entries.len(), entries }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationReport {
    pub samples: usize,
    /// Largest `f(x(t_{k+1})) − f(x(t_k))`.
    pub max_increase: f64,
    /// Number of sample steps whose increase exceeds [`MONOTONICITY_SLACK`].
    pub monotonicity_violations: usize,
    /// Largest `ḟ` over the samples.
    pub max_f_dot: f64,
    pub evaluation_failures: usize,
    pub pass: bool,
}

/// Checks that `f` does not increase along the trajectory and that `ḟ`
/// stays below [`DISSIPATION_TOL`] at every sample.
pub fn verify_dissipation(cert: &LyapunovCertificate, mas: &MassActionSystem, trajectory: &Trajectory) -> DissipationReport {
    let mut failures = 0;
    let mut values = Vec::with_capacity(trajectory.states.len());
    let mut max_f_dot = f64::NEG_INFINITY;
    for x in &trajectory.states {
        match (cert.evaluate(x), dissipation_check(cert, mas, x)) {
            (Ok(f), Ok(fd)) => {
                values.push(Some(f));
                max_f_dot = max_f_dot.max(fd);
            }
            _ => {
                values.push(None);
                failures += 1;
            }
        }
    }
    let mut max_increase = f64::NEG_INFINITY;
    let mut violations = 0;
    for pair in values.windows(2) {
        if let [Some(a), Some(b)] = pair {
            let inc = b - a;
            max_increase = max_increase.max(inc);
            if inc > MONOTONICITY_SLACK {
                violations += 1;
            }
        }
    }
    DissipationReport {
        samples: values.len(),
        max_increase,
        monotonicity_violations: violations,
        max_f_dot,
        evaluation_failures: failures,
        pass: failures == 0 && violations == 0 && max_f_dot <= DISSIPATION_TOL,
    }
}
