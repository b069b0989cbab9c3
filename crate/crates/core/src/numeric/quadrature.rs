//! Globally adaptive 15-point Gauss–Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

/// Kronrod abscissae on [0, 1]; the Gauss nodes are the odd-indexed ones.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

pub const DEFAULT_ABS_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_INTERVALS: usize = 1 << 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError<E> {
    #[error("integrand failed: {0}")]
    Integrand(E),
    #[error("integrand returned a non-finite value at {0}")]
    NonFinite(f64),
    #[error("no convergence after {intervals} subintervals (estimate {value}, error {error})")]
    MaxIntervals { value: f64, error: f64, intervals: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<E, F>(f: &mut F, a: f64, b: f64) -> Result<Piece, QuadratureError<E>>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut eval = |x: f64| -> Result<f64, QuadratureError<E>> {
        let v = f(x).map_err(QuadratureError::Integrand)?;
        if v.is_finite() { Ok(v) } else { Err(QuadratureError::NonFinite(x)) }
    };
    let fc = eval(center)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = eval(center - dx)? + eval(center + dx)?;
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Ok(Piece { a, b, value: kronrod * half, error: ((kronrod - gauss) * half).abs() })
}

/// Integrates `f` over `[a, b]` (either orientation) until the summed
/// Gauss–Kronrod error estimate drops below `abs_tol`.
pub fn integrate<E, F>(mut f: F, a: f64, b: f64, abs_tol: f64, max_intervals: usize) -> Result<Quadrature, QuadratureError<E>>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0, intervals: 0 });
    }
    if a > b {
        let q = integrate(f, b, a, abs_tol, max_intervals)?;
        return Ok(Quadrature { value: -q.value, ..q });
    }
    let mut heap = BinaryHeap::new();
    let first = gk15(&mut f, a, b)?;
    let (mut total, mut err) = (first.value, first.error);
    heap.push(first);
    while err > abs_tol {
        if heap.len() >= max_intervals {
            return Err(QuadratureError::MaxIntervals { value: total, error: err, intervals: heap.len() });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in double precision
            heap.push(worst);
            return Err(QuadratureError::MaxIntervals { value: total, error: err, intervals: heap.len() });
        }
        let left = gk15(&mut f, worst.a, mid)?;
        let right = gk15(&mut f, mid, worst.b)?;
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if err <= abs_tol {
            // recompute from scratch to shed accumulated rounding
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.error).sum();
        }
    }
    Ok(Quadrature { value: total, error: err, intervals: heap.len() })
}

/// [`integrate`] with the default tolerance and subdivision budget, for
/// integrands that cannot fail.
pub fn integrate_default<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> Result<f64, QuadratureError<std::convert::Infallible>> {
    integrate(|x| Ok(f(x)), a, b, DEFAULT_ABS_TOL, DEFAULT_MAX_INTERVALS).map(|q| q.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate_default(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0).unwrap();
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-14);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let a = integrate_default(f64::exp, 0.0, 1.0).unwrap();
        let b = integrate_default(f64::exp, 1.0, 0.0).unwrap();
        assert!((a - (1f64.exp() - 1.0)).abs() < 1e-14);
        assert_eq!(a, -b);
    }

    #[test]
    fn adapts_to_peaks() {
        // narrow Lorentzian: integral of 1/(1e-4 + x^2) over [-1,1] = 2/1e-2 * atan(1/1e-2)
        let eps: f64 = 1e-2;
        let exact = 2.0 / eps * (1.0 / eps).atan();
        let q = integrate(|x: f64| Ok::<_, ()>(1.0 / (eps * eps + x * x)), -1.0, 1.0, 1e-10, 4096).unwrap();
        assert!((q.value - exact).abs() < 1e-9, "{} vs {}", q.value, exact);
        assert!(q.intervals > 1);
    }

    #[test]
    fn reports_non_finite() {
        let r = integrate(|x: f64| Ok::<_, ()>(1.0 / x), 0.0, 1.0, 1e-10, 64);
        assert!(r.is_err());
    }

    #[test]
    fn integrand_errors_propagate() {
        let r = integrate(|x| if x > 0.5 { Err("boom") } else { Ok(x) }, 0.0, 1.0, 1e-10, 64);
        assert_eq!(r, Err(QuadratureError::Integrand("boom")));
    }
}
