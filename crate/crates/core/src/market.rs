//! Black–Scholes market primitives: the law of the state-price density and
//! the bijection between the state-price density and the stock price.
//!
//! The stock starts at `S_0 = 1` and the state-price density at `H_0 = 1`.

use crate::error::{Error, Result};
use crate::normal;
use crate::scalar::Scalar;

/// Drift, volatility and riskless rate of a one-stock/one-bond market.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams<S> {
    mu: S,
    sigma: S,
    r: S,
    kappa: S,
}

impl<S: Scalar> MarketParams<S> {
    pub fn new(mu: S, sigma: S, r: S) -> Result<Self> {
        if !(sigma > S::zero()) || !sigma.is_finite() {
            return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
        }
        if !mu.is_finite() || !r.is_finite() {
            return Err(Error::param("mu/r", "must be finite"));
        }
        Ok(Self {
            mu,
            sigma,
            r,
            kappa: (mu - r) / sigma,
        })
    }

    pub fn mu(&self) -> S {
        self.mu
    }

    pub fn sigma(&self) -> S {
        self.sigma
    }

    pub fn r(&self) -> S {
        self.r
    }

    /// Market price of risk `(mu - r) / sigma`.
    pub fn kappa(&self) -> S {
        self.kappa
    }

    /// Unconstrained optimal stock fraction `kappa / (gamma sigma)`.
    pub fn normal_fraction(&self, gamma: S) -> S {
        self.kappa / (gamma * self.sigma)
    }

    /// Log-drift of the state-price density per unit time, `-(r + kappa^2/2)`.
    pub(crate) fn h_drift(&self) -> S {
        -(self.r + self.kappa * self.kappa / S::lit(2.0))
    }
}

/// Law of `X` with `ln X ~ Normal(m, s^2)`. `s = 0` is the point mass at `e^m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LognormalLaw<S> {
    m: S,
    s: S,
}

impl<S: Scalar> LognormalLaw<S> {
    pub fn new(m: S, s: S) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::param("m", "must be finite"));
        }
        if !(s >= S::zero()) || !s.is_finite() {
            return Err(Error::param("s", format!("must be non-negative, got {s}")));
        }
        Ok(Self { m, s })
    }

    pub fn m(&self) -> S {
        self.m
    }

    pub fn s(&self) -> S {
        self.s
    }

    pub fn is_degenerate(&self) -> bool {
        self.s == S::zero()
    }

    /// Location of the point mass of a degenerate law.
    pub fn atom(&self) -> Option<S> {
        self.is_degenerate().then(|| self.m.exp())
    }

    /// Standardized log-coordinate of `x`, `(ln x - m)/s`, mapping `0` to `-inf`.
    /// For a degenerate law the result is `±inf` (or `0` exactly at the atom).
    pub fn standardize(&self, x: S) -> S {
        if x <= S::zero() {
            return S::neg_infinity();
        }
        if x == S::infinity() {
            return S::infinity();
        }
        let d = x.ln() - self.m;
        if self.is_degenerate() {
            if d > S::zero() {
                S::infinity()
            } else if d < S::zero() {
                S::neg_infinity()
            } else {
                S::zero()
            }
        } else {
            d / self.s
        }
    }

    /// Inverse of [`standardize`](Self::standardize).
    pub fn from_standard(&self, u: S) -> S {
        (self.m + self.s * u).exp()
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: S) -> S {
        if self.is_degenerate() {
            return if x >= self.m.exp() { S::one() } else { S::zero() };
        }
        normal::cdf(self.standardize(x))
    }

    /// `P(X > x)`.
    pub fn sf(&self, x: S) -> S {
        if self.is_degenerate() {
            return S::one() - self.cdf(x);
        }
        normal::sf(self.standardize(x))
    }

    /// `P(lo <= X < hi)`.
    pub fn prob(&self, lo: S, hi: S) -> S {
        if self.is_degenerate() {
            let a = self.m.exp();
            return if lo <= a && a < hi { S::one() } else { S::zero() };
        }
        normal::cdf_diff(self.standardize(lo), self.standardize(hi))
    }

    /// Density; zero for a degenerate law.
    pub fn pdf(&self, x: S) -> S {
        if x <= S::zero() || self.is_degenerate() {
            return S::zero();
        }
        normal::pdf(self.standardize(x)) / (self.s * x)
    }

    /// The `p`-quantile.
    pub fn quantile(&self, p: S) -> S {
        self.from_standard(normal::ppf(p))
    }

    /// The `x` with `P(X > x) = q`.
    pub fn upper_quantile(&self, q: S) -> S {
        self.from_standard(normal::isf(q))
    }

    pub fn mean(&self) -> S {
        (self.m + self.s * self.s / S::lit(2.0)).exp()
    }
}

fn check_time<S: Scalar>(t: S) -> Result<()> {
    if !(t >= S::zero()) || !t.is_finite() {
        return Err(Error::param(
            "t",
            format!("must be a finite non-negative time, got {t}"),
        ));
    }
    Ok(())
}

/// Law of `H_t`: `ln H_t ~ Normal(-(r + kappa^2/2) t, kappa^2 t)`.
///
/// Also the law of the increment `H_{t+tau}/H_t` when called with `tau`.
pub fn state_price_law<S: Scalar>(params: &MarketParams<S>, t: S) -> Result<LognormalLaw<S>> {
    check_time(t)?;
    LognormalLaw::new(params.h_drift() * t, params.kappa().abs() * t.sqrt())
}

/// Law of `S_t` with `S_0 = 1`: `ln S_t ~ Normal((mu - sigma^2/2) t, sigma^2 t)`.
pub fn stock_law<S: Scalar>(params: &MarketParams<S>, t: S) -> Result<LognormalLaw<S>> {
    check_time(t)?;
    let sig = params.sigma();
    LognormalLaw::new((params.mu() - sig * sig / S::lit(2.0)) * t, sig * t.sqrt())
}

/// State-price density implied by the stock price `s_t` at time `t`.
pub fn h_from_stock<S: Scalar>(params: &MarketParams<S>, t: S, s_t: S) -> Result<S> {
    check_time(t)?;
    if !(s_t > S::zero()) {
        return Err(Error::param("s_t", format!("stock price must be positive, got {s_t}")));
    }
    let sig = params.sigma();
    let stock_drift = params.mu() - sig * sig / S::lit(2.0);
    let ratio = params.kappa() / sig;
    Ok((params.h_drift() * t - ratio * (s_t.ln() - stock_drift * t)).exp())
}

/// Stock price consistent with state-price density `z` at time `t`; the
/// exact inverse of [`h_from_stock`].
pub fn stock_from_h<S: Scalar>(params: &MarketParams<S>, t: S, z: S) -> Result<S> {
    check_time(t)?;
    if !(z > S::zero()) {
        return Err(Error::param(
            "z",
            format!("state-price density must be positive, got {z}"),
        ));
    }
    if params.kappa() == S::zero() {
        return Err(Error::param(
            "kappa",
            "the state-price density carries no stock information when mu = r",
        ));
    }
    if t == S::zero() {
        if z != S::one() {
            return Err(Error::param("z", "at t = 0 the state-price density equals 1"));
        }
        return Ok(S::one());
    }
    let sig = params.sigma();
    let stock_drift = params.mu() - sig * sig / S::lit(2.0);
    let ln_s = stock_drift * t - (sig / params.kappa()) * (z.ln() - params.h_drift() * t);
    Ok(ln_s.exp())
}
