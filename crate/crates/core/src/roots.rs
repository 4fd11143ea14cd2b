//! Bracketing root finders: Brent's safeguarded inverse-quadratic/secant/
//! bisection hybrid, and geometric bracket expansion for positive unknowns.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootConfig<S> {
    /// Relative tolerance on the root.
    pub x_tol: S,
    /// Absolute tolerance on the residual.
    pub f_tol: S,
    pub max_iter: usize,
}

impl<S: Scalar> Default for RootConfig<S> {
    fn default() -> Self {
        Self {
            x_tol: S::tol(1e-12),
            f_tol: S::tol(1e-10),
            max_iter: 300,
        }
    }
}

/// A bracket `[lo, hi]` with the function values at both ends.
#[derive(Debug, Clone, Copy)]
pub struct Bracket<S> {
    pub lo: S,
    pub hi: S,
    pub f_lo: S,
    pub f_hi: S,
}

/// Wraps `f` so that a NaN evaluation becomes an error instead of a silent
/// non-comparison.
fn checked<S: Scalar, F: FnMut(S) -> Result<S>>(mut f: F, what: &'static str) -> impl FnMut(S) -> Result<S> {
    move |x| {
        let v = f(x)?;
        if v.is_nan() {
            return Err(Error::NoConvergence {
                what,
                iterations: 0,
                residual: f64::NAN,
            });
        }
        Ok(v)
    }
}

fn opposite<S: Scalar>(a: S, b: S) -> bool {
    (a <= S::zero() && b >= S::zero()) || (a >= S::zero() && b <= S::zero())
}

/// Finds a sign change of `f` on `(0, inf)` by doubling/halving around `x0`.
pub fn bracket_positive<S, F>(f: F, x0: S, what: &'static str) -> Result<Bracket<S>>
where
    S: Scalar,
    F: FnMut(S) -> Result<S>,
{
    let mut f = checked(f, what);
    let two = S::lit(2.0);
    let f0 = f(x0)?;
    let (mut lo, mut f_lo, mut hi, mut f_hi) = (x0, f0, x0, f0);
    for _ in 0..160 {
        let next_hi = hi * two;
        if next_hi.is_finite() {
            let v = f(next_hi)?;
            if opposite(f_hi, v) {
                return Ok(Bracket {
                    lo: hi,
                    hi: next_hi,
                    f_lo: f_hi,
                    f_hi: v,
                });
            }
            hi = next_hi;
            f_hi = v;
        }
        let next_lo = lo / two;
        if next_lo > S::zero() {
            let v = f(next_lo)?;
            if opposite(v, f_lo) {
                return Ok(Bracket {
                    lo: next_lo,
                    hi: lo,
                    f_lo: v,
                    f_hi: f_lo,
                });
            }
            lo = next_lo;
            f_lo = v;
        }
    }
    Err(Error::Bracket {
        what,
        lo: lo.f64(),
        hi: hi.f64(),
    })
}

/// Grows `hi` geometrically from a known left end until the sign flips.
pub fn expand_upward<S, F>(f: F, lo: S, f_lo: S, start: S, what: &'static str) -> Result<Bracket<S>>
where
    S: Scalar,
    F: FnMut(S) -> Result<S>,
{
    let mut f = checked(f, what);
    let mut a = lo;
    let mut fa = f_lo;
    let mut b = start;
    for _ in 0..200 {
        let fb = f(b)?;
        if opposite(fa, fb) {
            return Ok(Bracket {
                lo: a,
                hi: b,
                f_lo: fa,
                f_hi: fb,
            });
        }
        a = b;
        fa = fb;
        b = b * S::lit(2.0);
        if !b.is_finite() {
            break;
        }
    }
    Err(Error::Bracket {
        what,
        lo: lo.f64(),
        hi: b.f64(),
    })
}

/// Brent's method on a bracket with a sign change.
pub fn brent<S, F>(f: F, bracket: Bracket<S>, cfg: &RootConfig<S>, what: &'static str) -> Result<S>
where
    S: Scalar,
    F: FnMut(S) -> Result<S>,
{
    let mut f = checked(f, what);
    let Bracket {
        lo: mut a,
        hi: mut b,
        f_lo: mut fa,
        f_hi: mut fb,
    } = bracket;
    if !opposite(fa, fb) {
        return Err(Error::Bracket {
            what,
            lo: a.f64(),
            hi: b.f64(),
        });
    }
    if fa == S::zero() {
        return Ok(a);
    }
    if fb == S::zero() {
        return Ok(b);
    }
    let two = S::lit(2.0);
    let half = S::lit(0.5);
    let three = S::lit(3.0);
    let (mut c, mut fc) = (b, fb);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..cfg.max_iter {
        if (fb > S::zero() && fc > S::zero()) || (fb < S::zero() && fc < S::zero()) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = two * S::epsilon() * b.abs() + half * cfg.x_tol * b.abs() + S::min_positive_value();
        let xm = half * (c - b);
        if xm.abs() <= tol1 || fb.abs() <= cfg.f_tol {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * xm * s;
                q = S::one() - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (two * xm * qq * (qq - r) - (b - a) * (r - S::one()));
                q = (qq - S::one()) * (r - S::one()) * (s - S::one());
            }
            if p > S::zero() {
                q = -q;
            }
            p = p.abs();
            let min1 = three * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if two * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol1 {
            b + d
        } else if xm > S::zero() {
            b + tol1
        } else {
            b - tol1
        };
        fb = f(b)?;
    }
    Err(Error::NoConvergence {
        what,
        iterations: cfg.max_iter,
        residual: fb.f64(),
    })
}

/// Root of a function on `(0, inf)`: bracket around `x0`, then Brent.
pub fn solve_positive<S, F>(mut f: F, x0: S, cfg: &RootConfig<S>, what: &'static str) -> Result<S>
where
    S: Scalar,
    F: FnMut(S) -> Result<S>,
{
    let bracket = bracket_positive(&mut f, x0, what)?;
    brent(f, bracket, cfg, what)
}
