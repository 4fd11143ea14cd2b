//! Globally adaptive Gauss–Kronrod (7/15) quadrature with infinite endpoints
//! mapped onto finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::normal;
use crate::scalar::Scalar;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for the adaptive integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig<S> {
    pub abs_tol: S,
    pub rel_tol: S,
    pub max_subdivisions: usize,
}

impl<S: Scalar> QuadratureConfig<S> {
    pub fn new(abs_tol: S, rel_tol: S, max_subdivisions: usize) -> Result<Self> {
        if !(abs_tol > S::zero()) || !(rel_tol > S::zero()) {
            return Err(Error::param("tolerance", "abs_tol and rel_tol must be positive"));
        }
        if max_subdivisions < 1 {
            return Err(Error::param("max_subdivisions", "must be at least 1"));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        })
    }
}

impl<S: Scalar> Default for QuadratureConfig<S> {
    fn default() -> Self {
        Self {
            abs_tol: S::tol(1e-10),
            rel_tol: S::tol(1e-9),
            max_subdivisions: 2000,
        }
    }
}

/// Result of one 15-point panel.
#[derive(Debug, Clone, Copy)]
struct Panel<S> {
    a: S,
    b: S,
    value: S,
    error: S,
}

impl<S: Scalar> PartialEq for Panel<S> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<S: Scalar> Eq for Panel<S> {}
impl<S: Scalar> PartialOrd for Panel<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S: Scalar> Ord for Panel<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

fn kronrod<S: Scalar, F: Fn(S) -> S>(f: &F, a: S, b: S) -> Panel<S> {
    let two = S::lit(2.0);
    let center = (a + b) / two;
    let half = (b - a) / two;
    let fc = f(center);
    let mut res_k = fc * S::lit(WGK[7]);
    let mut res_g = fc * S::lit(WG[3]);
    let mut res_abs = res_k.abs();
    let mut fv1 = [S::zero(); 7];
    let mut fv2 = [S::zero(); 7];
    for j in 0..7 {
        let dx = half * S::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        let w = S::lit(WGK[j]);
        res_k = res_k + w * (f1 + f2);
        res_abs = res_abs + w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g = res_g + S::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let mean = res_k / two;
    let mut res_asc = S::lit(WGK[7]) * (fc - mean).abs();
    for j in 0..7 {
        res_asc = res_asc + S::lit(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != S::zero() && error != S::zero() {
        let scale = (S::lit(200.0) * error / res_asc).powf(S::lit(1.5));
        error = if scale < S::one() { res_asc * scale } else { res_asc };
    }
    let min_err = S::lit(50.0) * S::epsilon() * res_abs;
    if res_abs > S::min_positive_value() / (S::lit(50.0) * S::epsilon()) && min_err > error {
        error = min_err;
    }
    Panel { a, b, value, error }
}

/// Adaptive integral of `f` over the finite interval `[a, b]`.
pub fn integrate<S: Scalar, F: Fn(S) -> S>(f: F, a: S, b: S, cfg: &QuadratureConfig<S>) -> Result<S> {
    if a == b {
        return Ok(S::zero());
    }
    if !(a.is_finite() && b.is_finite()) {
        return integrate_mapped(f, a, b, cfg);
    }
    integrate_finite(f, a, b, cfg)
}

fn integrate_finite<S: Scalar, F: Fn(S) -> S>(f: F, a: S, b: S, cfg: &QuadratureConfig<S>) -> Result<S> {
    let first = kronrod(&f, a, b);
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut settled = S::zero();
    let mut count = 1usize;
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::Quadrature {
                subdivisions: count,
                estimate: total.f64(),
                error: total_err.f64(),
            });
        }
        if total_err <= cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
            return Ok(total);
        }
        let Some(worst) = heap.pop() else {
            // every panel is at resolution limit
            return if settled <= cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
                Ok(total)
            } else {
                Err(Error::Quadrature {
                    subdivisions: count,
                    estimate: total.f64(),
                    error: total_err.f64(),
                })
            };
        };
        if count >= cfg.max_subdivisions {
            return Err(Error::Quadrature {
                subdivisions: count,
                estimate: total.f64(),
                error: total_err.f64(),
            });
        }
        let mid = (worst.a + worst.b) / S::lit(2.0);
        let width = (worst.b - worst.a).abs();
        let scale = worst.a.abs().max(worst.b.abs()).max(S::one());
        if width <= S::lit(100.0) * S::epsilon() * scale {
            settled = settled + worst.error;
            continue;
        }
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        total = total - worst.value + left.value + right.value;
        total_err = total_err - worst.error + left.error + right.error;
        heap.push(left);
        heap.push(right);
        count += 1;
    }
}

/// Handles infinite endpoints by a rational change of variables.
fn integrate_mapped<S: Scalar, F: Fn(S) -> S>(f: F, a: S, b: S, cfg: &QuadratureConfig<S>) -> Result<S> {
    if a > b {
        return integrate_mapped(f, b, a, cfg).map(|v| -v);
    }
    let one = S::one();
    match (a.is_finite(), b.is_finite()) {
        (false, false) => {
            // u = v / (1 - v^2), v in (-1, 1)
            let g = |v: S| {
                let d = one - v * v;
                if d <= S::zero() {
                    return S::zero();
                }
                let u = v / d;
                f(u) * (one + v * v) / (d * d)
            };
            integrate_finite(g, -one, one, cfg)
        }
        (false, true) => {
            // u = b - (1 - v)/v, v in (0, 1]
            let g = |v: S| {
                if v <= S::zero() {
                    return S::zero();
                }
                f(b - (one - v) / v) / (v * v)
            };
            integrate_finite(g, S::zero(), one, cfg)
        }
        (true, false) => {
            let g = |v: S| {
                if v <= S::zero() {
                    return S::zero();
                }
                f(a + (one - v) / v) / (v * v)
            };
            integrate_finite(g, S::zero(), one, cfg)
        }
        (true, true) => unreachable!(),
    }
}

/// Beyond this many standard deviations the weight underflows to zero.
const GAUSS_CUT: f64 = 40.0;

/// Fixed cut points so that every panel sees the bulk of the normal mass
/// near one of its ends, however long the interval.
const GAUSS_SPLITS: [f64; 9] = [-16.0, -8.0, -4.0, -2.0, 0.0, 2.0, 4.0, 8.0, 16.0];

/// `∫_lo^hi f(u) φ(u) du` for a standard-normal weight; endpoints may be
/// infinite. The range is truncated at ±40, so `f` must grow slower than
/// `e^{u²/2}` there.
pub fn integrate_gaussian_between<S: Scalar, F: Fn(S) -> S>(
    f: F,
    lo: S,
    hi: S,
    cfg: &QuadratureConfig<S>,
) -> Result<S> {
    let cut = S::lit(GAUSS_CUT);
    let (lo, hi) = (lo.max(-cut), hi.min(cut));
    if !(lo < hi) {
        return Ok(S::zero());
    }
    let weighted = |u: S| {
        let w = normal::pdf(u);
        if w == S::zero() {
            S::zero()
        } else {
            f(u) * w
        }
    };
    let mut edges = vec![lo];
    edges.extend(GAUSS_SPLITS.iter().map(|&c| S::lit(c)).filter(|&c| lo < c && c < hi));
    edges.push(hi);
    edges
        .windows(2)
        .try_fold(S::zero(), |acc, w| Ok(acc + integrate(weighted, w[0], w[1], cfg)?))
}

/// `(1/√(2π)) ∫_{-∞}^{alpha} f(u) e^{-u²/2} du`.
pub fn integrate_gaussian<S: Scalar, F: Fn(S) -> S>(f: F, alpha: S, cfg: &QuadratureConfig<S>) -> Result<S> {
    integrate_gaussian_between(f, S::neg_infinity(), alpha, cfg)
}
