//! Piecewise terminal-wealth profiles `h ↦ ξ(h)` over the horizon state-price
//! density, and the functionals evaluated on them.
//!
//! Every profile is a list of branches on disjoint intervals `[lo, hi)` that
//! cover `(0, inf)`. Each branch is monotone in `h` with an analytic inverse,
//! so probabilities and densities of `ξ(H_T)` follow from the law of `H_T`
//! without numerical inversion.

use std::fmt;

use crate::analytics::{partial_expectation, partial_log_expectation, partial_power_expectation, QuadratureConfig};
use crate::error::{Error, Result};
use crate::market::{LognormalLaw, MarketParams};
use crate::scalar::Scalar;
use crate::utility::UtilitySpec;

/// Which risk constraint (or benchmark payoff) a profile solves for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Unconstrained,
    VaR,
    EL,
    EUL,
    PureBond,
    PureStock,
}

impl Kind {
    pub const ALL: [Kind; 6] = [
        Kind::Unconstrained,
        Kind::VaR,
        Kind::EL,
        Kind::EUL,
        Kind::PureBond,
        Kind::PureStock,
    ];

    /// Whether the kind carries a shortfall level and a bound.
    pub fn is_constrained(self) -> bool {
        matches!(self, Kind::VaR | Kind::EL | Kind::EUL)
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Unconstrained => "unconstrained",
            Kind::VaR => "var",
            Kind::EL => "el",
            Kind::EUL => "eul",
            Kind::PureBond => "bond",
            Kind::PureStock => "stock",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "unconstrained" | "none" | "benchmark" => Ok(Kind::Unconstrained),
            "var" => Ok(Kind::VaR),
            "el" => Ok(Kind::EL),
            "eul" => Ok(Kind::EUL),
            "bond" | "purebond" | "pure_bond" | "pure-bond" => Ok(Kind::PureBond),
            "stock" | "purestock" | "pure_stock" | "pure-stock" => Ok(Kind::PureStock),
            other => Err(Error::param("kind", format!("unknown strategy kind `{other}`"))),
        }
    }
}

/// Risk constraint: kind, shortfall level `q` and bound `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSpec<S> {
    pub kind: Kind,
    pub q: Option<S>,
    pub eps: Option<S>,
}

impl<S: Scalar> ConstraintSpec<S> {
    pub fn new(kind: Kind, q: Option<S>, eps: Option<S>) -> Result<Self> {
        if kind.is_constrained() {
            let q = q.ok_or_else(|| Error::param("q", format!("required for {kind}")))?;
            let eps = eps.ok_or_else(|| Error::param("eps", format!("required for {kind}")))?;
            if !(q > S::zero()) || !q.is_finite() {
                return Err(Error::param("q", format!("must be positive, got {q}")));
            }
            if !(eps >= S::zero()) {
                return Err(Error::param("eps", format!("must be non-negative, got {eps}")));
            }
            if kind == Kind::VaR && eps > S::one() {
                return Err(Error::param(
                    "eps",
                    format!("a probability bound must lie in [0, 1], got {eps}"),
                ));
            }
        }
        Ok(Self { kind, q, eps })
    }

    pub fn unconstrained() -> Self {
        Self {
            kind: Kind::Unconstrained,
            q: None,
            eps: None,
        }
    }
}

/// Functional form of one branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape<S> {
    /// `coef * h^exponent`; `I(y h)` is `y^(-1/gamma) h^(-1/gamma)`.
    Power { coef: S, exponent: S },
    /// Wealth held at a fixed level.
    Constant { value: S },
    /// `I(y1 h - y2) = (y1 h - y2)^(-1/gamma)`, the expected-loss worst branch.
    Shifted { y1: S, y2: S, gamma: S },
}

/// `shape` on the state-price interval `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch<S> {
    pub lo: S,
    pub hi: S,
    pub shape: Shape<S>,
}

impl<S: Scalar> Branch<S> {
    pub fn new(lo: S, hi: S, shape: Shape<S>) -> Self {
        Self { lo, hi, shape }
    }

    pub fn contains(&self, h: S) -> bool {
        self.lo <= h && h < self.hi
    }

    pub fn value(&self, h: S) -> S {
        match self.shape {
            Shape::Power { coef, exponent } => coef * h.powf(exponent),
            Shape::Constant { value } => value,
            Shape::Shifted { y1, y2, gamma } => (y1 * h - y2).powf(-gamma.recip()),
        }
    }

    /// `h` with `value(h) = w` on the unrestricted branch formula.
    pub fn inverse(&self, w: S) -> Option<S> {
        match self.shape {
            Shape::Power { coef, exponent } => {
                if w == S::zero() {
                    Some(if exponent < S::zero() { S::infinity() } else { S::zero() })
                } else if w == S::infinity() {
                    Some(if exponent < S::zero() { S::zero() } else { S::infinity() })
                } else {
                    Some((w / coef).powf(exponent.recip()))
                }
            }
            Shape::Constant { .. } => None,
            Shape::Shifted { y1, y2, gamma } => {
                if w == S::zero() {
                    Some(S::infinity())
                } else {
                    Some((w.powf(-gamma) + y2) / y1)
                }
            }
        }
    }

    /// `|dh/dw|` at wealth `w` for the monotone shapes.
    pub fn inverse_slope(&self, w: S) -> Option<S> {
        match self.shape {
            Shape::Power { exponent, .. } => {
                let h = self.inverse(w)?;
                Some((h / (exponent * w)).abs())
            }
            Shape::Constant { .. } => None,
            Shape::Shifted { y1, gamma, .. } => Some(gamma * w.powf(-gamma - S::one()) / y1),
        }
    }

    fn increasing(&self) -> bool {
        matches!(self.shape, Shape::Power { exponent, .. } if exponent > S::zero())
    }

    /// Sub-interval of `[lo, hi)` on which `value(h)` lies in the open wealth
    /// interval `(w_lo, w_hi)`.
    pub fn preimage(&self, w_lo: S, w_hi: S) -> Option<(S, S)> {
        let (a, b) = match self.shape {
            Shape::Constant { value } => {
                return (w_lo < value && value < w_hi && self.lo < self.hi).then_some((self.lo, self.hi));
            }
            _ if self.increasing() => (self.inverse(w_lo)?, self.inverse(w_hi)?),
            _ => (self.inverse(w_hi)?, self.inverse(w_lo)?),
        };
        let a = a.max(self.lo);
        let b = b.min(self.hi);
        (a < b).then_some((a, b))
    }

    /// Same branch on a narrower state-price interval.
    pub fn restrict(&self, lo: S, hi: S) -> Self {
        Self {
            lo,
            hi,
            shape: self.shape,
        }
    }

    /// Image of the branch in wealth, as an ordered pair.
    pub fn wealth_range(&self) -> (S, S) {
        let a = self.value(self.lo);
        let b = self.value(self.hi);
        let fix = |v: S| if v.is_nan() { S::infinity() } else { v };
        let (a, b) = (fix(a), fix(b));
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// `E[H^k ξ(H) ; lo <= H < hi]`.
    pub fn moment(&self, law: &LognormalLaw<S>, k: S, cfg: &QuadratureConfig<S>) -> Result<S> {
        if !(self.lo < self.hi) {
            return Ok(S::zero());
        }
        match self.shape {
            Shape::Power { coef, exponent } => {
                Ok(coef * partial_power_expectation(law, k + exponent, self.lo, self.hi)?)
            }
            Shape::Constant { value } => Ok(value * partial_power_expectation(law, k, self.lo, self.hi)?),
            Shape::Shifted { .. } => partial_expectation(law, |h| h.powf(k) * self.value(h), self.lo, self.hi, cfg),
        }
    }

    /// `P(lo <= H < hi)`.
    pub fn probability(&self, law: &LognormalLaw<S>) -> S {
        if !(self.lo < self.hi) {
            return S::zero();
        }
        law.prob(self.lo, self.hi)
    }

    /// `E[u(ξ(H)) ; lo <= H < hi]`.
    pub fn utility_moment(
        &self,
        law: &LognormalLaw<S>,
        utility: &UtilitySpec<S>,
        cfg: &QuadratureConfig<S>,
    ) -> Result<S> {
        if !(self.lo < self.hi) {
            return Ok(S::zero());
        }
        match self.shape {
            Shape::Constant { value } => Ok(utility.util(value) * self.probability(law)),
            Shape::Power { coef, exponent } => {
                if utility.is_log() {
                    Ok(coef.ln() * self.probability(law) + exponent * partial_log_expectation(law, self.lo, self.hi)?)
                } else {
                    let e = S::one() - utility.gamma();
                    Ok(coef.powf(e) / e * partial_power_expectation(law, exponent * e, self.lo, self.hi)?)
                }
            }
            Shape::Shifted { .. } => partial_expectation(law, |h| utility.util(self.value(h)), self.lo, self.hi, cfg),
        }
    }
}

/// A solved terminal-wealth profile together with the market and horizon it
/// was solved for.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalProfile<S> {
    pub(crate) kind: Kind,
    pub(crate) market: MarketParams<S>,
    pub(crate) utility: UtilitySpec<S>,
    pub(crate) horizon: S,
    pub(crate) x: S,
    pub(crate) law: LognormalLaw<S>,
    pub(crate) y: S,
    pub(crate) y2: S,
    pub(crate) h_lo: S,
    pub(crate) h_hi: S,
    pub(crate) q: Option<S>,
    pub(crate) eps: Option<S>,
    pub(crate) branches: Vec<Branch<S>>,
}

impl<S: Scalar> TerminalProfile<S> {
    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn market(&self) -> &MarketParams<S> {
        &self.market
    }

    pub fn utility(&self) -> &UtilitySpec<S> {
        &self.utility
    }

    pub fn horizon(&self) -> S {
        self.horizon
    }

    pub fn initial_wealth(&self) -> S {
        self.x
    }

    /// Law of `H_T`.
    pub fn law(&self) -> &LognormalLaw<S> {
        &self.law
    }

    /// Budget multiplier (`y`, or `y1` for the two-multiplier problems).
    /// Zero for the pure bond and pure stock payoffs.
    pub fn y(&self) -> S {
        self.y
    }

    /// Constraint multiplier `y2`; zero when slack, infinite for ε = 0.
    pub fn y2(&self) -> S {
        self.y2
    }

    pub fn h_lo(&self) -> S {
        self.h_lo
    }

    pub fn h_hi(&self) -> S {
        self.h_hi
    }

    pub fn q(&self) -> Option<S> {
        self.q
    }

    pub fn eps(&self) -> Option<S> {
        self.eps
    }

    pub fn branches(&self) -> &[Branch<S>] {
        &self.branches
    }

    /// The constraint holds with equality exactly when `h_lo < h_hi`.
    pub fn is_binding(&self) -> bool {
        self.kind.is_constrained() && self.h_lo < self.h_hi
    }

    /// Terminal wealth in state `h > 0`.
    pub fn xi(&self, h: S) -> S {
        self.branches
            .iter()
            .find(|b| b.contains(h))
            .or(self.branches.last())
            .map(|b| b.value(h))
            .unwrap_or_else(S::nan)
    }

    /// Large-loss threshold: `I(y h_hi)` for a binding VaR profile, else `q`.
    pub fn q2(&self) -> Option<S> {
        let q = self.q?;
        if self.kind == Kind::VaR && self.is_binding() && self.h_hi.is_finite() {
            Some(self.utility.inv(self.y * self.h_hi))
        } else {
            Some(q)
        }
    }

    /// `E[H_T ξ]`, the initial cost of the payoff.
    pub fn budget_value(&self, cfg: &QuadratureConfig<S>) -> Result<S> {
        self.sum_moments(S::one(), cfg)
    }

    /// `E[ξ]`.
    pub fn expected_wealth(&self, cfg: &QuadratureConfig<S>) -> Result<S> {
        self.sum_moments(S::zero(), cfg)
    }

    fn sum_moments(&self, k: S, cfg: &QuadratureConfig<S>) -> Result<S> {
        self.branches
            .iter()
            .try_fold(S::zero(), |acc, b| Ok(acc + b.moment(&self.law, k, cfg)?))
    }

    /// `P(ξ ∈ (lo, hi))`.
    pub fn interval_probability(&self, lo: S, hi: S) -> Result<S> {
        if !(lo >= S::zero()) || !(lo < hi) {
            return Err(Error::param("interval", format!("need 0 <= lo < hi, got ({lo}, {hi})")));
        }
        Ok(self
            .branches
            .iter()
            .filter_map(|b| b.preimage(lo, hi))
            .fold(S::zero(), |acc, (a, b)| acc + self.law.prob(a, b)))
    }

    /// Branches cut down to the states where `ξ < level`.
    fn below(&self, level: S) -> impl Iterator<Item = Branch<S>> + '_ {
        self.branches
            .iter()
            .filter_map(move |b| b.preimage(S::zero(), level).map(|(a, c)| b.restrict(a, c)))
    }

    /// `E[H^k (level - ξ)^+]`.
    pub fn shortfall_moment(&self, level: S, k: S, cfg: &QuadratureConfig<S>) -> Result<S> {
        self.below(level).try_fold(S::zero(), |acc, b| {
            let weight = partial_power_expectation(&self.law, k, b.lo, b.hi)?;
            Ok(acc + level * weight - b.moment(&self.law, k, cfg)?)
        })
    }

    /// `E[(u(level) - u(ξ))^+]`.
    pub fn utility_shortfall(&self, level: S, cfg: &QuadratureConfig<S>) -> Result<S> {
        let u_level = self.utility.util(level);
        self.below(level).try_fold(S::zero(), |acc, b| {
            Ok(acc + u_level * b.probability(&self.law) - b.utility_moment(&self.law, &self.utility, cfg)?)
        })
    }

    /// The constrained functional for this profile's kind: `P(ξ < q)`,
    /// `E[(ξ - q)^-]` or `E[(u(ξ) - u(q))^-]`.
    pub fn constraint_value(&self, cfg: &QuadratureConfig<S>) -> Result<S> {
        let q = self.q.ok_or_else(|| Error::WrongKind {
            op: "constraint_value",
            kind: self.kind.to_string(),
        })?;
        match self.kind {
            Kind::VaR => self.interval_probability(S::zero(), q),
            Kind::EL => self.shortfall_moment(q, S::zero(), cfg),
            Kind::EUL => self.utility_shortfall(q, cfg),
            other => Err(Error::WrongKind {
                op: "constraint_value",
                kind: other.to_string(),
            }),
        }
    }

    /// Expected utility `E[u(ξ)]`.
    pub fn expected_utility(&self, cfg: &QuadratureConfig<S>) -> Result<S> {
        self.branches.iter().try_fold(S::zero(), |acc, b| {
            Ok(acc + b.utility_moment(&self.law, &self.utility, cfg)?)
        })
    }

    /// Copy of the profile with the budget multiplier scaled, for sensitivity
    /// checks of the verification suite.
    pub fn with_scaled_multiplier(&self, factor: S) -> Self {
        let mut out = self.clone();
        let scale = factor.powf(-self.utility.gamma().recip());
        for b in &mut out.branches {
            match &mut b.shape {
                Shape::Power { coef, .. } => *coef = *coef * scale,
                Shape::Shifted { y1, .. } => *y1 = *y1 * factor,
                Shape::Constant { .. } => {}
            }
        }
        out.y = out.y * factor;
        out
    }
}

/// Large-loss measures relative to the threshold `q2` of a VaR profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport<S> {
    /// Expected future-value loss `E[(q2 - ξ) 1{ξ <= q2}]`.
    pub l1: S,
    /// Expected present-value loss `E[H_T (q2 - ξ) 1{ξ <= q2}]`.
    pub l2: S,
    pub q2: S,
}

/// Loss measures of `profile` at the large-loss threshold `q2` taken from
/// the VaR profile `var_profile`.
pub fn loss_measures<S: Scalar>(
    profile: &TerminalProfile<S>,
    var_profile: &TerminalProfile<S>,
    cfg: &QuadratureConfig<S>,
) -> Result<LossReport<S>> {
    if var_profile.kind != Kind::VaR {
        return Err(Error::WrongKind {
            op: "loss_measures",
            kind: var_profile.kind.to_string(),
        });
    }
    let q2 = var_profile.q2().expect("VaR profiles carry q");
    Ok(LossReport {
        l1: profile.shortfall_moment(q2, S::zero(), cfg)?,
        l2: profile.shortfall_moment(q2, S::one(), cfg)?,
        q2,
    })
}
