//! Dormand–Prince 5(4) with step-size control and the standard fourth-order
//! continuous extension for dense output.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError<E> {
    #[error("right-hand side failed at t = {t}: {source}")]
    Rhs { t: f64, source: E },
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("too many steps ({0})")]
    TooManySteps(usize),
    #[error("stopped by observer at t = {0}")]
    Stopped(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { abs: 1e-9, rel: 1e-9 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step with the coefficients of its continuous extension.
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    r: [Vec<f64>; 5],
}

impl DenseStep {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// State at time `t` inside the step.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.r;
        (0..r1.len())
            .map(|i| r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i]))))
            .collect()
    }

    pub fn end_state(&self) -> Vec<f64> {
        self.r[0].iter().zip(&self.r[1]).map(|(a, b)| a + b).collect()
    }
}

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        if *c != 0.0 {
            for (o, ki) in out.iter_mut().zip(*k) {
                *o += h * c * ki;
            }
        }
    }
    out
}

fn rms(v: &[f64], y0: &[f64], y1: &[f64], tol: Tolerances) -> f64 {
    let n = v.len().max(1) as f64;
    let s: f64 = v
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = tol.abs + tol.rel * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction). The
/// observer sees every accepted step and may stop integration by returning
/// `false`.
pub fn integrate<E, F, O>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    tol: Tolerances,
    max_steps: usize,
    mut observer: O,
) -> Result<Vec<f64>, StepError<E>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
    O: FnMut(&DenseStep) -> bool,
{
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0.to_vec();
    if t0 == t1 {
        return Ok(y);
    }
    let mut call = |t: f64, y: &[f64]| f(t, y).map_err(|source| StepError::Rhs { t, source });
    let mut k1 = call(t, &y)?;

    // initial step (Hairer & Wanner, II.4)
    let sc: Vec<f64> = y.iter().map(|v| tol.abs + tol.rel * v.abs()).collect();
    let d0 = rms_plain(&y, &sc);
    let d1 = rms_plain(&k1, &sc);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min((t1 - t0).abs());
    let y_probe = axpy(&y, dir * h, &[(1.0, &k1)]);
    let f_probe = call(t + dir * h, &y_probe)?;
    let diff: Vec<f64> = f_probe.iter().zip(&k1).map(|(a, b)| a - b).collect();
    let d2 = rms_plain(&diff, &sc) / h;
    let h1 = if d1.max(d2) <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    h = (100.0 * h).min(h1).min((t1 - t0).abs());

    let mut steps = 0;
    let mut last = false;
    while !last {
        if steps >= max_steps {
            return Err(StepError::TooManySteps(steps));
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(StepError::StepUnderflow(t));
        }
        if (t + dir * h - t1) * dir >= 0.0 {
            h = (t1 - t).abs();
            last = true;
        }
        let hs = dir * h;
        let k2 = call(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]))?;
        let k3 = call(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = call(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = call(t + C5 * hs, &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
        let k6 = call(t + hs, &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
        let y1 = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = call(t + hs, &y1)?;
        let err_vec: Vec<f64> = (0..y.len())
            .map(|i| hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]))
            .collect();
        let err = rms(&err_vec, &y, &y1, tol);
        steps += 1;
        if err <= 1.0 {
            let r2: Vec<f64> = y1.iter().zip(&y).map(|(a, b)| a - b).collect();
            let r3: Vec<f64> = (0..y.len()).map(|i| hs * k1[i] - r2[i]).collect();
            let r4: Vec<f64> = (0..y.len()).map(|i| r2[i] - hs * k7[i] - r3[i]).collect();
            let r5: Vec<f64> = (0..y.len())
                .map(|i| hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]))
                .collect();
            let step = DenseStep { t0: t, h: hs, r: [y.clone(), r2, r3, r4, r5] };
            t = if last { t1 } else { t + hs };
            y = y1;
            k1 = k7;
            if !observer(&step) {
                return Err(StepError::Stopped(t));
            }
            let fac = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 10.0) };
            h *= fac;
        } else {
            last = false;
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
    Ok(y)
}

fn rms_plain(v: &[f64], sc: &[f64]) -> f64 {
    let n = v.len().max(1) as f64;
    (v.iter().zip(sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let y = integrate(
            |_t, y: &[f64]| Ok::<_, ()>(vec![-y[0]]),
            0.0,
            &[1.0],
            5.0,
            Tolerances { abs: 1e-12, rel: 1e-12 },
            100_000,
            |_| true,
        )
        .unwrap();
        assert!((y[0] - (-5f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn dense_output_matches_solution() {
        let mut worst: f64 = 0.0;
        integrate(
            |_t, y: &[f64]| Ok::<_, ()>(vec![y[1], -y[0]]),
            0.0,
            &[0.0, 1.0],
            6.0,
            Tolerances { abs: 1e-11, rel: 1e-11 },
            100_000,
            |s| {
                for k in 1..5 {
                    let t = s.t0 + s.h * k as f64 / 5.0;
                    worst = worst.max((s.eval(t)[0] - t.sin()).abs());
                }
                true
            },
        )
        .unwrap();
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn backward_integration() {
        let y = integrate(|_t, y: &[f64]| Ok::<_, ()>(vec![y[0]]), 1.0, &[1.0], 0.0, Tolerances::default(), 100_000, |_| true).unwrap();
        assert!((y[0] - (-1f64).exp()).abs() < 1e-8);
    }
}
