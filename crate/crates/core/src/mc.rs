//! Monte Carlo oracles: static sampling of `H_T`, conditional pricing of the
//! wealth before the horizon, and simulation of the rebalanced strategy along
//! stock paths.
//!
//! Streams: the work is cut into chunks of [`CHUNK`] sampling units; chunk `c`
//! draws from `ChaCha8Rng::seed_from_u64(seed)` switched to stream `c`. Chunk
//! statistics are merged in chunk order, so a report depends only on the
//! configuration and never on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::analytics::QuadratureConfig;
use crate::error::{Error, Result};
use crate::market::{state_price_law, LognormalLaw};
use crate::prehorizon::wealth_and_fraction;
use crate::profile::{Kind, TerminalProfile};
use crate::scalar::Scalar;

/// Sampling units per random stream.
pub const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MCConfig {
    /// Sampling units (paths in [`replicate`]). With antithetics a unit is a
    /// draw together with its mirror image.
    pub n_samples: usize,
    /// Rebalancing dates per path, used by [`replicate`] only.
    pub n_steps: usize,
    pub seed: u64,
    pub antithetic: bool,
}

impl MCConfig {
    pub fn new(n_samples: usize, n_steps: usize, seed: u64, antithetic: bool) -> Result<Self> {
        let cfg = Self {
            n_samples,
            n_steps,
            seed,
            antithetic,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::param(
                "n_samples",
                format!("need at least 2, got {}", self.n_samples),
            ));
        }
        if self.n_steps < 1 {
            return Err(Error::param("n_steps", "need at least one step"));
        }
        Ok(())
    }

    fn units(&self) -> usize {
        self.n_samples
    }
}

impl Default for MCConfig {
    fn default() -> Self {
        Self {
            n_samples: 100_000,
            n_steps: 256,
            seed: 0,
            antithetic: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCReport<S> {
    pub estimate: S,
    pub std_error: S,
    /// Independent sampling units behind the estimate.
    pub n: usize,
    pub target: Option<S>,
    pub z_score: Option<S>,
}

impl<S: Scalar> MCReport<S> {
    fn new(estimate: S, std_error: S, n: usize) -> Self {
        Self {
            estimate,
            std_error,
            n,
            target: None,
            z_score: None,
        }
    }

    /// Attaches a reference value and the implied z-score. With a zero
    /// standard error the score is 0 on exact agreement and infinite
    /// otherwise.
    pub fn with_target(mut self, target: S) -> Self {
        let diff = self.estimate - target;
        let z = if self.std_error > S::zero() {
            diff / self.std_error
        } else if diff == S::zero() {
            S::zero()
        } else {
            diff.signum() * S::infinity()
        };
        self.target = Some(target);
        self.z_score = Some(z);
        self
    }

    /// `|z| <= k`, false without a target.
    pub fn within(&self, k: S) -> bool {
        self.z_score.is_some_and(|z| z.abs() <= k)
    }
}

/// Quantity averaged by [`mc_static`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional<S> {
    /// `H_T ξ`.
    Budget,
    /// The profile's own constraint: `1{ξ < q}`, `(q - ξ)^+` or `(u(q) - u(ξ))^+`.
    Constraint,
    /// `ξ`.
    Mean,
    /// `1{lo < ξ < hi}`.
    Interval(S, S),
    /// `(level - ξ)^+`.
    L1(S),
    /// `H_T (level - ξ)^+`.
    L2(S),
}

/// Running count, mean and centred sum of squares.
#[derive(Debug, Clone, Copy)]
struct Moments<S> {
    n: usize,
    mean: S,
    m2: S,
}

impl<S: Scalar> Moments<S> {
    fn empty() -> Self {
        Self {
            n: 0,
            mean: S::zero(),
            m2: S::zero(),
        }
    }

    fn push(&mut self, v: S) {
        self.n += 1;
        let d = v - self.mean;
        self.mean = self.mean + d / S::from_usize(self.n).expect("count");
        self.m2 = self.m2 + d * (v - self.mean);
    }

    fn merge(self, o: Self) -> Self {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let (na, nb, nn) = (count(self.n), count(o.n), count(n));
        let d = o.mean - self.mean;
        Self {
            n,
            mean: self.mean + d * nb / nn,
            m2: self.m2 + o.m2 + d * d * na * nb / nn,
        }
    }

    fn std_error(&self) -> S {
        if self.n < 2 {
            return S::zero();
        }
        let n = count(self.n);
        (self.m2 / (n - S::one()) / n).sqrt()
    }
}

fn count<S: Scalar>(n: usize) -> S {
    S::from_usize(n).expect("count")
}

fn normal<S: Scalar>(rng: &mut ChaCha8Rng) -> S {
    S::lit(StandardNormal.sample(rng))
}

/// Runs `units` sampling units over deterministic chunked streams. `unit`
/// receives the stream and returns one observation.
fn run<S, F>(units: usize, seed: u64, unit: F) -> Result<Moments<S>>
where
    S: Scalar,
    F: Fn(&mut ChaCha8Rng) -> Result<S> + Sync,
{
    let chunks = units.div_ceil(CHUNK);
    let parts: Vec<Result<Moments<S>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(units - c * CHUNK);
            let mut m = Moments::empty();
            for _ in 0..len {
                m.push(unit(&mut rng)?);
            }
            Ok(m)
        })
        .collect();
    parts.into_iter().try_fold(Moments::empty(), |acc, p| Ok(acc.merge(p?)))
}

/// One observation from a standard normal draw, averaged with its mirror
/// image when antithetic.
fn paired<S: Scalar>(rng: &mut ChaCha8Rng, antithetic: bool, f: impl Fn(S) -> Result<S>) -> Result<S> {
    let z: S = normal(rng);
    if antithetic {
        Ok((f(z)? + f(-z)?) / S::lit(2.0))
    } else {
        f(z)
    }
}

fn functional_value<S: Scalar>(
    profile: &TerminalProfile<S>,
    functional: Functional<S>,
) -> Result<impl Fn(S) -> S + Sync + '_> {
    let q = profile.q();
    let need_q = || {
        q.ok_or_else(|| Error::WrongKind {
            op: "mc_static constraint",
            kind: profile.kind().to_string(),
        })
    };
    let constraint = match (functional, profile.kind()) {
        (Functional::Constraint, Kind::VaR | Kind::EL | Kind::EUL) => Some((profile.kind(), need_q()?)),
        (Functional::Constraint, _) => {
            return Err(Error::WrongKind {
                op: "mc_static constraint",
                kind: profile.kind().to_string(),
            })
        }
        _ => None,
    };
    if let Functional::Interval(lo, hi) = functional {
        if !(lo >= S::zero()) || !(lo < hi) {
            return Err(Error::param("interval", format!("need 0 <= lo < hi, got ({lo}, {hi})")));
        }
    }
    let utility = *profile.utility();
    Ok(move |h: S| {
        let w = profile.xi(h);
        let indicator = |b: bool| if b { S::one() } else { S::zero() };
        match functional {
            Functional::Budget => h * w,
            Functional::Mean => w,
            Functional::Interval(lo, hi) => indicator(lo < w && w < hi),
            Functional::L1(level) => (level - w).max(S::zero()),
            Functional::L2(level) => h * (level - w).max(S::zero()),
            Functional::Constraint => match constraint.expect("checked above") {
                (Kind::VaR, q) => indicator(w < q),
                (Kind::EL, q) => (q - w).max(S::zero()),
                (_, q) => (utility.util(q) - utility.util(w)).max(S::zero()),
            },
        }
    })
}

/// Plain Monte Carlo of `E[g(H_T, ξ(H_T))]` with exact lognormal draws of
/// `H_T`.
pub fn mc_static<S: Scalar>(
    profile: &TerminalProfile<S>,
    functional: Functional<S>,
    cfg: &MCConfig,
) -> Result<MCReport<S>> {
    cfg.validate()?;
    let g = functional_value(profile, functional)?;
    let law = *profile.law();
    let m = run(cfg.units(), cfg.seed, |rng| {
        paired(rng, cfg.antithetic, |z| Ok(g(law.from_standard(z))))
    })?;
    Ok(MCReport::new(m.mean, m.std_error(), m.n))
}

/// `E[(H_T/H_t) ξ(H_T) | H_t = z]` from exact draws of the increment
/// `H_T/H_t`.
pub fn mc_conditional_wealth<S: Scalar>(
    profile: &TerminalProfile<S>,
    t: S,
    z: S,
    cfg: &MCConfig,
) -> Result<MCReport<S>> {
    cfg.validate()?;
    let horizon = profile.horizon();
    if !(t >= S::zero() && t < horizon) {
        return Err(Error::param("t", format!("need 0 <= t < T, got {t}")));
    }
    if !(z > S::zero()) || !z.is_finite() {
        return Err(Error::param("z", format!("must be positive, got {z}")));
    }
    let inc: LognormalLaw<S> = state_price_law(profile.market(), horizon - t)?;
    let m = run(cfg.units(), cfg.seed, |rng| {
        paired(rng, cfg.antithetic, |u| {
            let ratio = inc.from_standard(u);
            Ok(ratio * profile.xi(z * ratio))
        })
    })?;
    Ok(MCReport::new(m.mean, m.std_error(), m.n))
}

/// Squared relative replication error of one path driven by `shocks`.
fn path_error<S: Scalar>(profile: &TerminalProfile<S>, shocks: &[S], qcfg: &QuadratureConfig<S>) -> Result<S> {
    let market = profile.market();
    let n = shocks.len();
    let dt = profile.horizon() / count(n);
    let sq = dt.sqrt();
    let (sigma, kappa, r) = (market.sigma(), market.kappa(), market.r());
    let half = S::lit(0.5);
    let stock_drift = (market.mu() - half * sigma * sigma) * dt;
    let h_drift = -(r + half * kappa * kappa) * dt;
    let growth = (r * dt).exp();
    let (mut ln_h, mut wealth) = (S::zero(), profile.initial_wealth());
    for (k, &e) in shocks.iter().enumerate() {
        let t = count::<S>(k) * dt;
        let theta = wealth_and_fraction(profile, t, ln_h.exp(), qcfg)?.fraction;
        let ret = (stock_drift + sigma * sq * e).exp();
        wealth = wealth * ((S::one() - theta) * growth + theta * ret);
        ln_h = ln_h + h_drift - kappa * sq * e;
    }
    let target = profile.xi(ln_h.exp());
    let rel = (wealth - target) / target;
    Ok(rel * rel)
}

/// Runs the rebalanced strategy along simulated stock paths and reports the
/// root-mean-square relative gap `(X_T - ξ(H_T))/ξ(H_T)`.
///
/// Log prices advance by exact lognormal steps; wealth is rebalanced to the
/// fraction of [`wealth_and_fraction`] at each of the `n_steps` dates, so the
/// only error source is the rebalancing frequency. The standard error is
/// carried from the mean square by the delta method.
pub fn replicate<S: Scalar>(
    profile: &TerminalProfile<S>,
    cfg: &MCConfig,
    qcfg: &QuadratureConfig<S>,
) -> Result<MCReport<S>> {
    cfg.validate()?;
    let steps = cfg.n_steps;
    let m = run(cfg.units(), cfg.seed, |rng| {
        let shocks: Vec<S> = (0..steps).map(|_| normal(rng)).collect();
        let err = path_error(profile, &shocks, qcfg)?;
        if cfg.antithetic {
            let mirror: Vec<S> = shocks.iter().map(|&e| -e).collect();
            Ok((err + path_error(profile, &mirror, qcfg)?) / S::lit(2.0))
        } else {
            Ok(err)
        }
    })?;
    let rms = m.mean.sqrt();
    let se = if rms > S::zero() {
        m.std_error() / (S::lit(2.0) * rms)
    } else {
        S::zero()
    };
    Ok(MCReport::new(rms, se, m.n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::MarketParams;
    use crate::solver::{
        pure_bond, pure_stock, solve_el, solve_eul, solve_unconstrained, solve_var, Problem, SolverConfig,
    };
    use crate::utility::UtilitySpec;

    fn problem(gamma: f64) -> Problem<f64> {
        let m = MarketParams::new(0.09, 0.2, 0.06).unwrap();
        Problem::new(m, 15.0, 1.0, UtilitySpec::new(gamma).unwrap()).unwrap()
    }

    fn q1() -> f64 {
        0.75 * 0.9f64.exp()
    }

    fn mc(n: usize, seed: u64, anti: bool) -> MCConfig {
        MCConfig::new(n, 1, seed, anti).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(MCConfig::new(1, 1, 0, false).is_err());
        assert!(MCConfig::new(2, 0, 0, false).is_err());
        assert!(MCConfig::new(2, 1, 0, true).is_ok());
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut all = Moments::empty();
        xs.iter().for_each(|&v| all.push(v));
        let (mut a, mut b) = (Moments::empty(), Moments::empty());
        xs[..333].iter().for_each(|&v| a.push(v));
        xs[333..].iter().for_each(|&v| b.push(v));
        let m = a.merge(b);
        assert_eq!(m.n, all.n);
        assert!((m.mean - all.mean).abs() < 1e-12);
        assert!((m.m2 / all.m2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seed_determinism_across_thread_counts() {
        let p = solve_var(&problem(1.0), q1(), 0.06, &SolverConfig::default()).unwrap();
        let cfg = mc(10_000, 42, true);
        let a = mc_static(&p, Functional::Mean, &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| mc_static(&p, Functional::Mean, &cfg).unwrap());
        assert_eq!(a, b);
        let c = mc_static(&p, Functional::Mean, &mc(10_000, 43, true)).unwrap();
        assert_ne!(a.estimate, c.estimate);
    }

    #[test]
    fn unconstrained_mean_and_budget() {
        let pr = problem(1.0);
        let p = solve_unconstrained(&pr, &SolverConfig::default()).unwrap();
        let r = mc_static(&p, Functional::Mean, &mc(200_000, 7, false))
            .unwrap()
            .with_target(1.2375f64.exp());
        assert!(r.within(3.0), "{r:?}");
        assert!((r.estimate - 3.4469).abs() < 4.0 * r.std_error);
        // log utility: H ξ(H) is the constant x
        let b = mc_static(&p, Functional::Budget, &mc(1000, 7, false)).unwrap();
        assert!((b.estimate - 1.0).abs() < 1e-12 && b.std_error < 1e-12);
    }

    #[test]
    fn constraint_functionals_match_closed_forms() {
        let pr = problem(1.0);
        let c = SolverConfig::default();
        let q = QuadratureConfig::default();
        let profiles = [
            solve_var(&pr, q1(), 0.06, &c).unwrap(),
            solve_el(&pr, q1(), 0.06, &c).unwrap(),
            solve_eul(&pr, q1(), 0.05, &c).unwrap(),
        ];
        for p in &profiles {
            let r = mc_static(p, Functional::Constraint, &mc(200_000, 11, true)).unwrap();
            let r = r.with_target(p.constraint_value(&q).unwrap());
            assert!(r.within(4.0), "{} {r:?}", p.kind());
            let b = mc_static(p, Functional::Budget, &mc(200_000, 12, true))
                .unwrap()
                .with_target(1.0);
            assert!(b.within(4.0), "{} {b:?}", p.kind());
        }
        let var = &profiles[0];
        let q2 = var.q2().unwrap();
        let gap = mc_static(var, Functional::Interval(q2, q1()), &mc(50_000, 3, false)).unwrap();
        assert_eq!(gap.estimate, 0.0);
        let l2 = mc_static(&profiles[1], Functional::L2(q2), &mc(200_000, 5, true)).unwrap();
        assert!(l2
            .with_target(profiles[1].shortfall_moment(q2, 1.0, &q).unwrap())
            .within(4.0));
        let l1 = mc_static(&profiles[1], Functional::L1(q2), &mc(200_000, 5, true)).unwrap();
        assert!(l1
            .with_target(profiles[1].shortfall_moment(q2, 0.0, &q).unwrap())
            .within(4.0));
    }

    #[test]
    fn constraint_needs_a_constrained_profile() {
        let p = pure_bond(&problem(1.0));
        assert!(mc_static(&p, Functional::Constraint, &mc(10, 0, false)).is_err());
        assert!(mc_static(&p, Functional::Interval(2.0, 1.0), &mc(10, 0, false)).is_err());
    }

    #[test]
    fn antithetics_do_not_increase_budget_error() {
        let c = SolverConfig::default();
        let mut checked = 0;
        for (i, gamma) in [0.6, 0.8, 1.5, 2.0, 3.0].into_iter().enumerate() {
            let pr = problem(gamma);
            for p in [
                solve_var(&pr, 0.8 * q1(), 0.05, &c).unwrap(),
                solve_eul(&pr, 0.8 * q1(), 0.02, &c).unwrap(),
            ] {
                let plain = mc_static(&p, Functional::Budget, &mc(40_000, i as u64, false)).unwrap();
                let anti = mc_static(&p, Functional::Budget, &mc(40_000, i as u64, true)).unwrap();
                assert!(
                    anti.std_error <= plain.std_error,
                    "gamma {gamma} {}: {anti:?} vs {plain:?}",
                    p.kind()
                );
                checked += 1;
            }
        }
        assert_eq!(checked, 10);
    }

    #[test]
    fn conditional_wealth_matches_unconstrained_formula() {
        let pr = problem(1.0);
        let p = solve_unconstrained(&pr, &SolverConfig::default()).unwrap();
        let (t, z) = (5.0, 0.7);
        // F = x e^{r t} / (z e^{...}) reduces to (1/y) e^{r(T-t)} E[1/H_T...]; for log utility F = x/z
        let r = mc_conditional_wealth(&p, t, z, &mc(100_000, 9, false))
            .unwrap()
            .with_target(1.0 / z);
        assert!((r.estimate - 1.0 / z).abs() < 1e-12, "{r:?}");
        let r = mc_conditional_wealth(&p, 15.0 - 1e-8, z, &mc(1000, 9, false)).unwrap();
        assert!((r.estimate - p.xi(z)).abs() < 1e-6 && r.std_error < 1e-6);
    }

    #[test]
    fn conditional_wealth_matches_el_closed_form() {
        let pr = problem(1.0);
        let p = solve_el(&pr, q1(), 0.06, &SolverConfig::default()).unwrap();
        let q = QuadratureConfig::default();
        let t = 5.0;
        let z = crate::market::h_from_stock(&pr.market, t, 0.5).unwrap();
        let f = wealth_and_fraction(&p, t, z, &q).unwrap().wealth;
        let r = mc_conditional_wealth(&p, t, z, &mc(200_000, 21, true))
            .unwrap()
            .with_target(f);
        assert!(r.within(4.0), "{r:?}");
    }

    #[test]
    fn z_score_edge_cases() {
        let r = MCReport::new(1.0, 0.0, 5);
        assert_eq!(r.with_target(1.0).z_score, Some(0.0));
        assert_eq!(r.with_target(0.0).z_score, Some(f64::INFINITY));
        assert!(!r.within(3.0));
    }

    #[test]
    fn pure_bond_replicates_exactly() {
        let p = pure_bond(&problem(1.0));
        let r = replicate(
            &p,
            &MCConfig::new(200, 64, 1, false).unwrap(),
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert!(r.estimate < 1e-13, "{r:?}");
    }

    #[test]
    fn pure_stock_replicates_exactly() {
        let p = pure_stock(&problem(2.0)).unwrap();
        let r = replicate(
            &p,
            &MCConfig::new(200, 64, 1, false).unwrap(),
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert!(r.estimate < 1e-10, "{r:?}");
    }

    #[test]
    fn unconstrained_replication_converges() {
        let p = solve_unconstrained(&problem(1.0), &SolverConfig::default()).unwrap();
        let q = QuadratureConfig::default();
        let errs: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&n| {
                replicate(&p, &MCConfig::new(2000, n, 5, false).unwrap(), &q)
                    .unwrap()
                    .estimate
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        // order 1/sqrt(n): each doubling shrinks the error by about 1/sqrt(2)
        for w in errs.windows(2) {
            let ratio = w[1] / w[0];
            assert!((0.6..0.8).contains(&ratio), "{errs:?}");
        }
    }

    #[test]
    fn replication_is_deterministic() {
        let p = solve_eul(&problem(1.0), q1(), 0.05, &SolverConfig::default()).unwrap();
        let cfg = MCConfig::new(300, 32, 77, true).unwrap();
        let q = QuadratureConfig::default();
        assert_eq!(replicate(&p, &cfg, &q).unwrap(), replicate(&p, &cfg, &q).unwrap());
    }
}
