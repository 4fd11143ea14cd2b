//! Wealth `X_t = F(H_t, t)` and the optimal stock fraction
//! `θ_t = θᴺ Θ(H_t, t)` before the horizon.
//!
//! All closed forms are written in one pair of threshold functions,
//!
//! ```text
//! d_price(u, z)  = (ln(u/z) + (r - κ²/2)τ) / (κ√τ)
//! d_wealth(u, z) = d_price(u, z) + κ√τ / γ
//! ```
//!
//! with `τ = T - t`. Given `H_t = z`, `E[(H_T/z) 1{H_T < u}] = e^{-rτ} Φ(d_price)`
//! and `E[(H_T/z) I(y H_T) 1{H_T < u}] = A Φ(d_wealth)` where
//! `A = e^{Γ} (y z)^{-1/γ}`.

use rayon::prelude::*;

use crate::analytics::{psi0, QuadratureConfig};
use crate::error::{Error, Result};
use crate::market::{h_from_stock, stock_from_h, LognormalLaw, MarketParams};
use crate::normal;
use crate::profile::{Kind, TerminalProfile};
use crate::scalar::Scalar;
use crate::utility::UtilitySpec;

/// Time-`t` quantities shared by the closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreHorizonTerms<S> {
    /// `T - t`.
    pub tau: S,
    /// `κ√τ`.
    pub vol: S,
    pub gamma: S,
    /// Γ(t) = ((1-γ)/γ)(r + κ²/(2γ))τ.
    pub gamma_t: S,
    /// Drift of `ln(H_T/H_t)`: `-(r + κ²/2)τ`.
    pub a: S,
    /// Loading of `ln(H_T/H_t)` on a standard normal: `-κ√τ`.
    pub b: S,
    r: S,
    kappa: S,
}

impl<S: Scalar> PreHorizonTerms<S> {
    pub fn new(market: &MarketParams<S>, utility: &UtilitySpec<S>, horizon: S, t: S) -> Result<Self> {
        if !(t >= S::zero()) || !(t < horizon) {
            return Err(Error::param("t", format!("need 0 <= t < T = {horizon}, got {t}")));
        }
        let tau = horizon - t;
        let (r, kappa, g) = (market.r(), market.kappa(), utility.gamma());
        let two = S::lit(2.0);
        let vol = kappa.abs() * tau.sqrt();
        Ok(Self {
            tau,
            vol,
            gamma: g,
            gamma_t: (S::one() - g) / g * (r + kappa * kappa / (two * g)) * tau,
            a: -(r + kappa * kappa / two) * tau,
            b: -vol,
            r,
            kappa,
        })
    }

    pub fn d_price(&self, u: S, z: S) -> S {
        let half = S::lit(0.5);
        ((u / z).ln() + (self.r - half * self.kappa * self.kappa) * self.tau) / self.vol
    }

    pub fn d_wealth(&self, u: S, z: S) -> S {
        self.d_price(u, z) + self.vol / self.gamma
    }

    /// Upper integration limit of the expected-loss tail term.
    pub fn c2(&self, h_hi: S, z: S) -> S {
        ((h_hi / z).ln() - self.a) / self.b
    }

    pub fn discount(&self) -> S {
        (-self.r * self.tau).exp()
    }

    /// `A = e^{Γ} (y z)^{-1/γ}`: time-`t` value of the claim `I(y H_T)`.
    pub fn unconstrained_wealth(&self, y: S, z: S) -> S {
        self.gamma_t.exp() * (y * z).powf(-self.gamma.recip())
    }

    /// Law of `H_T` given `H_t = z`.
    pub fn conditional_law(&self, z: S) -> LognormalLaw<S> {
        LognormalLaw::new(z.ln() + self.a, self.vol).expect("non-negative volatility")
    }
}

/// One point of a strategy curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample<S> {
    /// Stock price, when the market makes `H_t` a function of it.
    pub s: Option<S>,
    pub h: S,
    pub wealth: S,
    pub fraction: S,
    pub relative_exposure: S,
}

fn sample<S: Scalar>(profile: &TerminalProfile<S>, t: S, z: S, wealth: S, rel: S) -> CurveSample<S> {
    let theta_n = profile.market().normal_fraction(profile.utility().gamma());
    CurveSample {
        s: stock_from_h(profile.market(), t, z).ok(),
        h: z,
        wealth,
        fraction: theta_n * rel,
        relative_exposure: rel,
    }
}

fn check_z<S: Scalar>(z: S) -> Result<()> {
    if !(z > S::zero()) || !z.is_finite() {
        return Err(Error::param(
            "z",
            format!("state-price value must be positive, got {z}"),
        ));
    }
    Ok(())
}

fn require(profile: &TerminalProfile<impl Scalar>, kind: Kind, op: &'static str) -> Result<()> {
    if profile.kind() != kind {
        return Err(Error::WrongKind {
            op,
            kind: profile.kind().to_string(),
        });
    }
    Ok(())
}

fn terms<S: Scalar>(profile: &TerminalProfile<S>, t: S) -> Result<PreHorizonTerms<S>> {
    PreHorizonTerms::new(profile.market(), profile.utility(), profile.horizon(), t)
}

/// Unconstrained formula `F = A`, `Θ = 1`; also the slack case of every
/// constrained kind.
fn unconstrained<S: Scalar>(profile: &TerminalProfile<S>, t: S, z: S) -> Result<CurveSample<S>> {
    let k = terms(profile, t)?;
    Ok(sample(profile, t, z, k.unconstrained_wealth(profile.y(), z), S::one()))
}

pub fn wealth_and_fraction_unconstrained<S: Scalar>(
    profile: &TerminalProfile<S>,
    t: S,
    z: S,
) -> Result<CurveSample<S>> {
    require(profile, Kind::Unconstrained, "wealth_and_fraction_unconstrained")?;
    check_z(z)?;
    unconstrained(profile, t, z)
}

pub fn wealth_and_fraction_var<S: Scalar>(profile: &TerminalProfile<S>, t: S, z: S) -> Result<CurveSample<S>> {
    require(profile, Kind::VaR, "wealth_and_fraction_var")?;
    check_z(z)?;
    if !profile.is_binding() {
        return unconstrained(profile, t, z);
    }
    let k = terms(profile, t)?;
    let q = profile.q().expect("constrained profile");
    let (lo, hi) = (profile.h_lo(), profile.h_hi());
    let g = k.gamma;
    let a = k.unconstrained_wealth(profile.y(), z);
    let qd = q * k.discount();
    let (w_lo, w_hi) = (k.d_wealth(lo, z), k.d_wealth(hi, z));
    let (p_lo, p_hi) = (k.d_price(lo, z), k.d_price(hi, z));
    let insured = normal::cdf_diff(-p_hi, -p_lo);
    let free = a * (normal::cdf(w_lo) + normal::cdf(-w_hi));
    let f = free + qd * insured;
    // `1 - qd·insured/F + ...` with the leading difference done exactly
    let rel = (free + g / k.vol * a * (normal::pdf(w_lo) - normal::pdf(w_hi))
        - g * qd / k.vol * (normal::pdf(p_lo) - normal::pdf(p_hi)))
        / f;
    Ok(sample(profile, t, z, f, rel))
}

pub fn wealth_and_fraction_el<S: Scalar>(
    profile: &TerminalProfile<S>,
    t: S,
    z: S,
    cfg: &QuadratureConfig<S>,
) -> Result<CurveSample<S>> {
    require(profile, Kind::EL, "wealth_and_fraction_el")?;
    check_z(z)?;
    if !profile.is_binding() {
        return unconstrained(profile, t, z);
    }
    let k = terms(profile, t)?;
    let q = profile.q().expect("constrained profile");
    let (lo, hi) = (profile.h_lo(), profile.h_hi());
    let (y1, y2) = (profile.y(), profile.y2());
    let g = k.gamma;
    let a = k.unconstrained_wealth(y1, z);
    let qd = q * k.discount();
    let w_lo = k.d_wealth(lo, z);
    let (p_lo, p_hi) = (k.d_price(lo, z), k.d_price(hi, z));
    let insured = normal::cdf_diff(-p_hi, -p_lo);
    let (tail, tail_exposure) = if hi.is_finite() {
        let c2 = k.c2(hi, z);
        let base = y1 * z * k.a.exp();
        let inv_g = g.recip();
        let tail = k.discount() * psi0(c2, k.b, base, y2, k.b, S::one(), inv_g, cfg)?;
        let scale = y1 * z * ((k.kappa * k.kappa - S::lit(2.0) * k.r) * k.tau).exp();
        let exposure = scale * psi0(c2, k.b, base, y2, S::lit(2.0) * k.b, S::one(), S::one() + inv_g, cfg)?;
        (tail, exposure)
    } else {
        (S::zero(), S::zero())
    };
    let f = a * normal::cdf(w_lo) + qd * insured + tail;
    let rel = (a * (normal::cdf(w_lo) + g / k.vol * normal::pdf(w_lo)) - g / k.vol * qd * normal::pdf(p_lo)
        + tail_exposure)
        / f;
    Ok(sample(profile, t, z, f, rel))
}

pub fn wealth_and_fraction_eul<S: Scalar>(profile: &TerminalProfile<S>, t: S, z: S) -> Result<CurveSample<S>> {
    require(profile, Kind::EUL, "wealth_and_fraction_eul")?;
    check_z(z)?;
    if !profile.is_binding() {
        return unconstrained(profile, t, z);
    }
    let k = terms(profile, t)?;
    let q = profile.q().expect("constrained profile");
    let (lo, hi) = (profile.h_lo(), profile.h_hi());
    let a = k.unconstrained_wealth(profile.y(), z);
    let qd = q * k.discount();
    let (p_lo, p_hi) = (k.d_price(lo, z), k.d_price(hi, z));
    let insured = normal::cdf_diff(-p_hi, -p_lo);
    let lift = (S::one() + profile.y2()).powf(k.gamma.recip());
    let worst = if hi.is_finite() {
        lift * a * normal::cdf(-k.d_wealth(hi, z))
    } else {
        S::zero()
    };
    let free = a * normal::cdf(k.d_wealth(lo, z)) + worst;
    let f = free + qd * insured;
    // equals 1 - qd·insured/F without the cancellation
    Ok(sample(profile, t, z, f, free / f))
}

fn benchmark<S: Scalar>(profile: &TerminalProfile<S>, t: S, z: S) -> Result<CurveSample<S>> {
    let m = profile.market();
    let x = profile.initial_wealth();
    terms(profile, t)?;
    match profile.kind() {
        Kind::PureBond => Ok(sample(profile, t, z, x * (m.r() * t).exp(), S::zero())),
        Kind::PureStock => {
            // x S_t with S_t written through z; at t = 0 this is the price of
            // the claim at an arbitrary initial density, not a stock price
            let ratio = m.sigma() / m.kappa();
            let drift = m.mu() - m.sigma() * m.sigma() / S::lit(2.0);
            let s_t = (drift * t - ratio * (z.ln() - m.h_drift() * t)).exp();
            let theta_n = m.normal_fraction(profile.utility().gamma());
            Ok(sample(profile, t, z, x * s_t, theta_n.recip()))
        }
        _ => unreachable!(),
    }
}

/// Wealth and fraction for any profile kind.
pub fn wealth_and_fraction<S: Scalar>(
    profile: &TerminalProfile<S>,
    t: S,
    z: S,
    cfg: &QuadratureConfig<S>,
) -> Result<CurveSample<S>> {
    match profile.kind() {
        Kind::Unconstrained => wealth_and_fraction_unconstrained(profile, t, z),
        Kind::VaR => wealth_and_fraction_var(profile, t, z),
        Kind::EL => wealth_and_fraction_el(profile, t, z, cfg),
        Kind::EUL => wealth_and_fraction_eul(profile, t, z),
        Kind::PureBond | Kind::PureStock => {
            check_z(z)?;
            benchmark(profile, t, z)
        }
    }
}

/// `E[(H_T/z) ξ(H_T) | H_t = z]` summed branch by branch on the conditional
/// law; independent of the closed forms above.
pub fn wealth_by_branches<S: Scalar>(profile: &TerminalProfile<S>, t: S, z: S, cfg: &QuadratureConfig<S>) -> Result<S> {
    check_z(z)?;
    let law = terms(profile, t)?.conditional_law(z);
    let total = profile
        .branches()
        .iter()
        .try_fold(S::zero(), |acc, b| Ok(acc + b.moment(&law, S::one(), cfg)?))?;
    Ok(total / z)
}

/// Strategy curve at time `t` over stock prices `s_grid` (strictly
/// increasing, positive).
pub fn curve<S: Scalar>(
    profile: &TerminalProfile<S>,
    t: S,
    s_grid: &[S],
    cfg: &QuadratureConfig<S>,
) -> Result<Vec<CurveSample<S>>> {
    if s_grid.iter().any(|s| !(*s > S::zero()) || !s.is_finite()) {
        return Err(Error::param("grid", "stock prices must be positive and finite"));
    }
    if s_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("grid", "stock prices must be strictly increasing"));
    }
    s_grid
        .par_iter()
        .map(|&s| {
            let z = h_from_stock(profile.market(), t, s)?;
            let mut c = wealth_and_fraction(profile, t, z, cfg)?;
            c.s = Some(s);
            Ok(c)
        })
        .collect()
}
