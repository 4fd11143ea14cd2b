//! Lognormal partial expectations and Gaussian-weighted quadrature.

mod quadrature;

pub use quadrature::{integrate, integrate_gaussian, integrate_gaussian_between, QuadratureConfig};

use crate::error::{Error, Result};
use crate::market::LognormalLaw;
use crate::normal;
use crate::scalar::Scalar;

fn check_bounds<S: Scalar>(lo: S, hi: S) -> Result<()> {
    if !(lo >= S::zero()) {
        return Err(Error::param("lo", format!("must be non-negative, got {lo}")));
    }
    if !(lo < hi) {
        return Err(Error::param("lo/hi", format!("need lo < hi, got [{lo}, {hi})")));
    }
    Ok(())
}

/// `E[X^a ; lo <= X < hi]` for `X` with the given lognormal law.
///
/// `hi` may be `+inf`; `lo = 0` stands for the whole lower tail.
pub fn partial_power_expectation<S: Scalar>(law: &LognormalLaw<S>, a: S, lo: S, hi: S) -> Result<S> {
    check_bounds(lo, hi)?;
    if let Some(atom) = law.atom() {
        return Ok(if lo <= atom && atom < hi {
            atom.powf(a)
        } else {
            S::zero()
        });
    }
    let (m, s) = (law.m(), law.s());
    let shift = a * s;
    let prob = normal::cdf_diff(law.standardize(lo) - shift, law.standardize(hi) - shift);
    if prob <= S::zero() {
        return Ok(S::zero());
    }
    Ok((a * m + a * a * s * s / S::lit(2.0) + prob.ln()).exp())
}

/// `E[ln X ; lo <= X < hi]`.
pub fn partial_log_expectation<S: Scalar>(law: &LognormalLaw<S>, lo: S, hi: S) -> Result<S> {
    check_bounds(lo, hi)?;
    if let Some(atom) = law.atom() {
        return Ok(if lo <= atom && atom < hi { atom.ln() } else { S::zero() });
    }
    let (alpha, beta) = (law.standardize(lo), law.standardize(hi));
    let prob = normal::cdf_diff(alpha, beta);
    let dens = |u: S| if u.is_infinite() { S::zero() } else { normal::pdf(u) };
    Ok(law.m() * prob + law.s() * (dens(alpha) - dens(beta)))
}

/// `E[g(X) ; lo <= X < hi]` by quadrature in the standardized log-coordinate.
pub fn partial_expectation<S: Scalar, G: Fn(S) -> S>(
    law: &LognormalLaw<S>,
    g: G,
    lo: S,
    hi: S,
    cfg: &QuadratureConfig<S>,
) -> Result<S> {
    check_bounds(lo, hi)?;
    if let Some(atom) = law.atom() {
        return Ok(if lo <= atom && atom < hi { g(atom) } else { S::zero() });
    }
    integrate_gaussian_between(
        |u| g(law.from_standard(u)),
        law.standardize(lo),
        law.standardize(hi),
        cfg,
    )
}

/// `(1/(√(2π) s)) ∫_{-∞}^{alpha} exp(-(u-m)²/(2s²)) / (c1 e^{beta u} - c2)^delta du`.
///
/// The base `c1 e^{beta u} - c2` must stay positive on the whole domain.
#[allow(clippy::too_many_arguments)]
pub fn psi0<S: Scalar>(alpha: S, beta: S, c1: S, c2: S, m: S, s: S, delta: S, cfg: &QuadratureConfig<S>) -> Result<S> {
    if !(s > S::zero()) {
        return Err(Error::param("s", "must be positive"));
    }
    if alpha == S::neg_infinity() {
        return Ok(S::zero());
    }
    let base = |u: S| c1 * (beta * u).exp() - c2;
    // The base is monotone in u; check its infimum over (-inf, alpha].
    let positive = if c1 <= S::zero() {
        false
    } else if beta < S::zero() {
        base(alpha) > S::zero()
    } else if beta == S::zero() {
        c1 > c2
    } else {
        c2 <= S::zero()
    };
    if !positive {
        return Err(Error::param(
            "psi0",
            format!("c1 e^(beta u) - c2 is not positive on (-inf, {alpha}]"),
        ));
    }
    if beta < S::zero() && c2 > S::zero() && c2 / (c1 * (beta * alpha).exp()) <= S::lit(PSI0_SERIES_MAX_RATIO) {
        if let Some(v) = psi0_series(alpha, beta, c1, c2, m, s, delta) {
            return Ok(v);
        }
    }
    psi0_quadrature(alpha, beta, c1, c2, m, s, delta, cfg)
}

/// Largest `c2 / (c1 e^{beta alpha})` for which [`psi0`] sums the binomial
/// series instead of integrating.
const PSI0_SERIES_MAX_RATIO: f64 = 0.9;

#[allow(clippy::too_many_arguments)]
fn psi0_quadrature<S: Scalar>(
    alpha: S,
    beta: S,
    c1: S,
    c2: S,
    m: S,
    s: S,
    delta: S,
    cfg: &QuadratureConfig<S>,
) -> Result<S> {
    integrate_gaussian(
        |w| {
            let b = c1 * (beta * (m + s * w)).exp() - c2;
            if b == S::infinity() {
                S::zero()
            } else {
                b.powf(-delta)
            }
        },
        (alpha - m) / s,
        cfg,
    )
}

/// `(c1 e^{beta u} - c2)^{-delta} = sum_n (delta)_n/n! c2^n (c1 e^{beta u})^{-delta-n}`
/// term by term; each term is a Gaussian exponential moment
/// `E[e^{-p beta U}; U < alpha] = e^{-p beta m + p² beta² s²/2} Φ((alpha - m + p beta s²)/s)`.
/// Needs `beta < 0 < c2` and a ratio `c2/(c1 e^{beta alpha})` below one;
/// `None` when the terms have not settled after the iteration cap.
fn psi0_series<S: Scalar>(alpha: S, beta: S, c1: S, c2: S, m: S, s: S, delta: S) -> Option<S> {
    let half = S::lit(0.5);
    let (ln_c1, ln_c2) = (c1.ln(), c2.ln());
    let bs2 = beta * s * s;
    let ln_term = |n: usize, ln_coef: S| {
        let p = delta + S::from_usize(n).expect("term index");
        ln_coef + S::from_usize(n).expect("term index") * ln_c2 - p * ln_c1 - p * beta * m
            + half * p * p * beta * bs2
            + normal::log_cdf((alpha - m + p * bs2) / s)
    };
    let mut ln_coef = S::zero();
    let mut sum = ln_term(0, ln_coef).exp();
    let mut prev = sum;
    for n in 1..4000 {
        let k = S::from_usize(n).expect("term index");
        ln_coef = ln_coef + ((delta + k - S::one()) / k).ln();
        let term = ln_term(n, ln_coef).exp();
        sum = sum + term;
        if term <= S::epsilon() * S::lit(0.01) * sum && term <= prev {
            return Some(sum);
        }
        prev = term;
    }
    None
}
