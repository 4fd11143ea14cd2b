//! Static problems: choose the terminal payoff maximizing `E[u(ξ)]` subject
//! to the budget `E[H_T ξ] <= x` and, optionally, a VaR, expected-loss or
//! expected-utility-loss constraint.
//!
//! Each solver returns a [`TerminalProfile`]. Multipliers are found by
//! bracketing: the budget is monotone in the budget multiplier, and for the
//! two-multiplier problems the constraint functional is monotone in `y2`
//! once the budget has been re-solved for each trial `y2`.

use crate::analytics::{partial_power_expectation, QuadratureConfig};
use crate::error::{Error, Result};
use crate::market::{state_price_law, LognormalLaw, MarketParams};
use crate::profile::{Branch, ConstraintSpec, Kind, Shape, TerminalProfile};
use crate::roots::{brent, expand_upward, solve_positive, RootConfig};
use crate::scalar::Scalar;
use crate::utility::UtilitySpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<S> {
    pub quad: QuadratureConfig<S>,
    pub root: RootConfig<S>,
}

impl<S: Scalar> Default for SolverConfig<S> {
    fn default() -> Self {
        Self {
            quad: QuadratureConfig::default(),
            root: RootConfig::default(),
        }
    }
}

/// Everything a solve needs besides the constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Problem<S> {
    pub market: MarketParams<S>,
    pub horizon: S,
    pub x: S,
    pub utility: UtilitySpec<S>,
}

impl<S: Scalar> Problem<S> {
    pub fn new(market: MarketParams<S>, horizon: S, x: S, utility: UtilitySpec<S>) -> Result<Self> {
        if !(horizon > S::zero()) || !horizon.is_finite() {
            return Err(Error::param("T", format!("horizon must be positive, got {horizon}")));
        }
        if !(x > S::zero()) || !x.is_finite() {
            return Err(Error::param("x", format!("initial wealth must be positive, got {x}")));
        }
        Ok(Self {
            market,
            horizon,
            x,
            utility,
        })
    }

    pub fn law(&self) -> LognormalLaw<S> {
        state_price_law(&self.market, self.horizon).expect("validated horizon")
    }

    fn profile(&self, kind: Kind, y: S, y2: S, h_lo: S, h_hi: S, branches: Vec<Branch<S>>) -> TerminalProfile<S> {
        TerminalProfile {
            kind,
            market: self.market,
            utility: self.utility,
            horizon: self.horizon,
            x: self.x,
            law: self.law(),
            y,
            y2,
            h_lo,
            h_hi,
            q: None,
            eps: None,
            branches,
        }
    }

    fn inv_branch(&self, lo: S, hi: S, y: S) -> Branch<S> {
        let g = self.utility.gamma();
        Branch::new(
            lo,
            hi,
            Shape::Power {
                coef: y.powf(-g.recip()),
                exponent: -g.recip(),
            },
        )
    }

    fn cost(&self, branches: &[Branch<S>], cfg: &SolverConfig<S>) -> Result<S> {
        let law = self.law();
        branches
            .iter()
            .try_fold(S::zero(), |acc, b| Ok(acc + b.moment(&law, S::one(), &cfg.quad)?))
    }

    /// Relative budget residual of the payoff built from multiplier `y`.
    fn budget_gap<F>(&self, build: &F, y: S, cfg: &SolverConfig<S>) -> Result<S>
    where
        F: Fn(S) -> Vec<Branch<S>>,
    {
        Ok(self.cost(&build(y), cfg)? / self.x - S::one())
    }

    /// Budget multiplier for a payoff family known to cost at least `x` at
    /// `y_lo` and decreasing in `y`.
    fn budget_multiplier_above<F>(&self, build: F, y_lo: S, cfg: &SolverConfig<S>) -> Result<S>
    where
        F: Fn(S) -> Vec<Branch<S>>,
    {
        let f_lo = self.budget_gap(&build, y_lo, cfg)?;
        // constraint slack to rounding: the sign of the gap is noise
        if f_lo.abs() <= cfg.root.f_tol {
            return Ok(y_lo);
        }
        let bracket = expand_upward(
            |y| self.budget_gap(&build, y, cfg),
            y_lo,
            f_lo,
            y_lo * S::lit(1.25),
            "budget",
        )?;
        brent(|y| self.budget_gap(&build, y, cfg), bracket, &cfg.root, "budget")
    }
}

/// `ξ = I(y H_T)` with `y` fixed by the budget.
pub fn solve_unconstrained<S: Scalar>(problem: &Problem<S>, cfg: &SolverConfig<S>) -> Result<TerminalProfile<S>> {
    let build = |y: S| vec![problem.inv_branch(S::zero(), S::infinity(), y)];
    let y = solve_positive(
        |y| problem.budget_gap(&build, y, cfg),
        problem.x.recip(),
        &cfg.root,
        "budget",
    )?;
    Ok(problem.profile(Kind::Unconstrained, y, S::zero(), S::zero(), S::zero(), build(y)))
}

/// The unconstrained payoff relabelled as a slack solution of `kind`.
fn slack<S: Scalar>(
    problem: &Problem<S>,
    kind: Kind,
    q: S,
    eps: S,
    cfg: &SolverConfig<S>,
) -> Result<TerminalProfile<S>> {
    let mut p = solve_unconstrained(problem, cfg)?;
    let h = problem.utility.marginal(q) / p.y;
    p.kind = kind;
    p.h_lo = h;
    p.h_hi = h;
    p.q = Some(q);
    p.eps = Some(eps);
    Ok(p)
}

fn check_level<S: Scalar>(q: S, eps: S) -> Result<()> {
    if !(q > S::zero()) || !q.is_finite() {
        return Err(Error::param("q", format!("must be positive, got {q}")));
    }
    if !(eps >= S::zero()) {
        return Err(Error::param("eps", format!("must be non-negative, got {eps}")));
    }
    Ok(())
}

/// Three-region payoff shared by the constrained solvers: `I(y1 h)` below
/// `h_lo`, `q` on `[h_lo, h_hi)`, `worst` above.
fn three_regions<S: Scalar>(problem: &Problem<S>, y1: S, q: S, h_hi: S, worst: Option<Shape<S>>) -> Vec<Branch<S>> {
    let h_lo = problem.utility.marginal(q) / y1;
    if h_lo >= h_hi {
        return vec![problem.inv_branch(S::zero(), S::infinity(), y1)];
    }
    let mut out = vec![
        problem.inv_branch(S::zero(), h_lo, y1),
        Branch::new(h_lo, h_hi, Shape::Constant { value: q }),
    ];
    if h_hi.is_finite() {
        if let Some(shape) = worst {
            out.push(Branch::new(h_hi, S::infinity(), shape));
        }
    }
    out
}

/// Value-at-Risk constrained payoff, `P(ξ < q) <= eps`.
pub fn solve_var<S: Scalar>(problem: &Problem<S>, q: S, eps: S, cfg: &SolverConfig<S>) -> Result<TerminalProfile<S>> {
    check_level(q, eps)?;
    if eps > S::one() {
        return Err(Error::param(
            "eps",
            format!("a probability bound must lie in [0, 1], got {eps}"),
        ));
    }
    let law = problem.law();
    let h_hi = law.upper_quantile(eps);
    let unc = solve_unconstrained(problem, cfg)?;
    let marg_q = problem.utility.marginal(q);
    if marg_q / unc.y >= h_hi {
        return slack(problem, Kind::VaR, q, eps, cfg);
    }
    let floor_cost = q * partial_power_expectation(&law, S::one(), S::zero(), h_hi)?;
    if floor_cost >= problem.x {
        return Err(Error::Infeasible(format!(
            "insuring q = {q} on P(H_T < h) = 1 - eps costs at least {floor_cost} > x = {}",
            problem.x
        )));
    }
    let build = |y: S| {
        let g = problem.utility.gamma();
        let worst = Shape::Power {
            coef: y.powf(-g.recip()),
            exponent: -g.recip(),
        };
        three_regions(problem, y, q, h_hi, Some(worst))
    };
    let y = problem.budget_multiplier_above(build, unc.y, cfg)?;
    let mut p = problem.profile(Kind::VaR, y, S::zero(), marg_q / y, h_hi, build(y));
    p.q = Some(q);
    p.eps = Some(eps);
    Ok(p)
}

/// Shape of the worst-state branch for the two-multiplier problems.
fn worst_shape<S: Scalar>(problem: &Problem<S>, kind: Kind, y1: S, y2: S) -> Shape<S> {
    let g = problem.utility.gamma();
    match kind {
        Kind::EL => Shape::Shifted { y1, y2, gamma: g },
        Kind::EUL => Shape::Power {
            coef: ((S::one() + y2) / y1).powf(g.recip()),
            exponent: -g.recip(),
        },
        _ => unreachable!("only EL and EUL have a second multiplier"),
    }
}

fn upper_breakpoint<S: Scalar>(problem: &Problem<S>, kind: Kind, q: S, y1: S, y2: S) -> S {
    let marg_q = problem.utility.marginal(q);
    match kind {
        Kind::EL => (marg_q + y2) / y1,
        Kind::EUL => (S::one() + y2) * marg_q / y1,
        _ => unreachable!("only EL and EUL have a second multiplier"),
    }
}

fn shortfall_functional<S: Scalar>(profile: &TerminalProfile<S>, cfg: &SolverConfig<S>) -> Result<S> {
    profile.constraint_value(&cfg.quad)
}

/// Solves the budget for `y1` at fixed `y2` and returns the resulting profile.
fn two_multiplier_profile<S: Scalar>(
    problem: &Problem<S>,
    kind: Kind,
    q: S,
    eps: S,
    y2: S,
    y1_floor: S,
    cfg: &SolverConfig<S>,
) -> Result<TerminalProfile<S>> {
    let build = |y1: S| {
        let h_hi = upper_breakpoint(problem, kind, q, y1, y2);
        three_regions(problem, y1, q, h_hi, Some(worst_shape(problem, kind, y1, y2)))
    };
    let y1 = problem.budget_multiplier_above(build, y1_floor, cfg)?;
    let h_lo = problem.utility.marginal(q) / y1;
    let h_hi = upper_breakpoint(problem, kind, q, y1, y2);
    let mut p = problem.profile(kind, y1, y2, h_lo, h_hi, build(y1));
    p.q = Some(q);
    p.eps = Some(eps);
    Ok(p)
}

fn solve_two_multiplier<S: Scalar>(
    problem: &Problem<S>,
    kind: Kind,
    q: S,
    eps: S,
    cfg: &SolverConfig<S>,
) -> Result<TerminalProfile<S>> {
    check_level(q, eps)?;
    let unc = solve_unconstrained(problem, cfg)?;
    let mut unc_as_kind = unc.clone();
    unc_as_kind.kind = kind;
    unc_as_kind.q = Some(q);
    let eps_max = shortfall_functional(&unc_as_kind, cfg)?;
    if eps >= eps_max {
        return slack(problem, kind, q, eps, cfg);
    }
    if eps == S::zero() {
        let floor_cost = q * (-problem.market.r() * problem.horizon).exp();
        if floor_cost >= problem.x {
            return Err(Error::Infeasible(format!(
                "a floor of q = {q} costs {floor_cost} > x = {}",
                problem.x
            )));
        }
        return two_multiplier_profile(problem, kind, q, eps, S::infinity(), unc.y, cfg);
    }
    let gap = |y2: S| -> Result<S> {
        let p = two_multiplier_profile(problem, kind, q, eps, y2, unc.y, cfg)?;
        Ok(shortfall_functional(&p, cfg)? - eps)
    };
    let start = problem.utility.marginal(q) * S::lit(1e-3);
    let bracket = expand_upward(gap, S::zero(), eps_max - eps, start, "constraint")?;
    let y2 = brent(gap, bracket, &cfg.root, "constraint")?;
    two_multiplier_profile(problem, kind, q, eps, y2, unc.y, cfg)
}

/// Expected-loss constrained payoff, `E[(ξ - q)^-] <= eps`.
pub fn solve_el<S: Scalar>(problem: &Problem<S>, q: S, eps: S, cfg: &SolverConfig<S>) -> Result<TerminalProfile<S>> {
    solve_two_multiplier(problem, Kind::EL, q, eps, cfg)
}

/// Expected-utility-loss constrained payoff, `E[(u(ξ) - u(q))^-] <= eps`.
pub fn solve_eul<S: Scalar>(problem: &Problem<S>, q: S, eps: S, cfg: &SolverConfig<S>) -> Result<TerminalProfile<S>> {
    solve_two_multiplier(problem, Kind::EUL, q, eps, cfg)
}

/// Largest bound that still constrains: the EL or EUL functional of the
/// unconstrained payoff.
pub fn eps_max<S: Scalar>(problem: &Problem<S>, q: S, kind: Kind, cfg: &SolverConfig<S>) -> Result<S> {
    if !matches!(kind, Kind::EL | Kind::EUL) {
        return Err(Error::WrongKind {
            op: "eps_max",
            kind: kind.to_string(),
        });
    }
    check_level(q, S::zero())?;
    let mut unc = solve_unconstrained(problem, cfg)?;
    unc.kind = kind;
    unc.q = Some(q);
    shortfall_functional(&unc, cfg)
}

/// All wealth in the bond: `ξ = x e^{rT}`.
pub fn pure_bond<S: Scalar>(problem: &Problem<S>) -> TerminalProfile<S> {
    let value = problem.x * (problem.market.r() * problem.horizon).exp();
    problem.profile(
        Kind::PureBond,
        S::zero(),
        S::zero(),
        S::zero(),
        S::zero(),
        vec![Branch::new(S::zero(), S::infinity(), Shape::Constant { value })],
    )
}

/// All wealth in the stock: `ξ = x S_T`, written as a power of `H_T`.
pub fn pure_stock<S: Scalar>(problem: &Problem<S>) -> Result<TerminalProfile<S>> {
    let m = &problem.market;
    if m.kappa() == S::zero() {
        return Err(Error::param(
            "kappa",
            "the stock payoff is not a function of H_T when mu = r",
        ));
    }
    let ratio = m.sigma() / m.kappa();
    let t = problem.horizon;
    let stock_drift = m.mu() - m.sigma() * m.sigma() / S::lit(2.0);
    let coef = problem.x * (stock_drift * t + ratio * m.h_drift() * t).exp();
    Ok(problem.profile(
        Kind::PureStock,
        S::zero(),
        S::zero(),
        S::zero(),
        S::zero(),
        vec![Branch::new(
            S::zero(),
            S::infinity(),
            Shape::Power { coef, exponent: -ratio },
        )],
    ))
}

/// Dispatches on the constraint kind.
pub fn solve<S: Scalar>(
    problem: &Problem<S>,
    constraint: &ConstraintSpec<S>,
    cfg: &SolverConfig<S>,
) -> Result<TerminalProfile<S>> {
    let level = || -> Result<(S, S)> {
        let c = ConstraintSpec::new(constraint.kind, constraint.q, constraint.eps)?;
        Ok((c.q.expect("validated"), c.eps.expect("validated")))
    };
    match constraint.kind {
        Kind::Unconstrained => solve_unconstrained(problem, cfg),
        Kind::VaR => {
            let (q, eps) = level()?;
            solve_var(problem, q, eps, cfg)
        }
        Kind::EL => {
            let (q, eps) = level()?;
            solve_el(problem, q, eps, cfg)
        }
        Kind::EUL => {
            let (q, eps) = level()?;
            solve_eul(problem, q, eps, cfg)
        }
        Kind::PureBond => Ok(pure_bond(problem)),
        Kind::PureStock => pure_stock(problem),
    }
}
