use shortfall::density::{default_grid, log_grid, terminal_density};
use shortfall::market::{h_from_stock, MarketParams};
use shortfall::mc::{mc_conditional_wealth, mc_static};
use shortfall::prehorizon::{curve, wealth_and_fraction, wealth_by_branches};
use shortfall::solver::{self, pure_bond, pure_stock, solve, solve_unconstrained, Problem as GenericProblem};
use shortfall::utility::UtilitySpec;
use shortfall::{
    ConstraintSpec, Functional, Kind, MCConfig, Market, Problem, Profile, QuadratureConfig, SolverConfig, Utility,
};

fn table1(gamma: f64) -> Problem {
    Problem::new(
        Market::new(0.09, 0.2, 0.06).unwrap(),
        15.0,
        1.0,
        Utility::new(gamma).unwrap(),
    )
    .unwrap()
}

fn q1() -> f64 {
    0.75 * 0.9f64.exp()
}

fn every_kind(pr: &Problem) -> Vec<Profile> {
    let c = SolverConfig::default();
    let mut out = vec![pure_bond(pr), pure_stock(pr).unwrap()];
    for kind in [Kind::Unconstrained, Kind::VaR, Kind::EL, Kind::EUL] {
        let spec = match kind {
            Kind::Unconstrained => ConstraintSpec::unconstrained(),
            _ => ConstraintSpec::new(kind, Some(q1()), Some(0.05)).unwrap(),
        };
        out.push(solve(pr, &spec, &c).unwrap());
    }
    out
}

#[test]
fn single_precision_end_to_end() {
    let m = MarketParams::<f32>::new(0.09, 0.2, 0.06).unwrap();
    let pr = GenericProblem::new(m, 15.0, 1.0, UtilitySpec::log()).unwrap();
    let q = 0.75 * (0.9f32).exp();
    let c = solver::SolverConfig::<f32>::default();
    let p = solver::solve_var(&pr, q, 0.06, &c).unwrap();
    assert!((p.h_hi() - 0.847_463).abs() < 1e-4);
    assert!((p.y() - 1.042_98).abs() < 1e-3);
    let budget = p.budget_value(&c.quad).unwrap();
    assert!((budget - 1.0).abs() < 1e-4);
    let s = wealth_and_fraction(&p, 5.0, 0.8, &c.quad).unwrap();
    assert!(s.wealth > 0.0 && s.fraction > 0.0);
}

#[test]
fn time_zero_wealth_is_the_budget() {
    let q = QuadratureConfig::default();
    for gamma in [0.7, 1.0, 2.5] {
        for p in every_kind(&table1(gamma)) {
            let s = wealth_and_fraction(&p, 0.0, 1.0, &q).unwrap();
            assert!(
                (s.wealth - 1.0).abs() < 1e-8,
                "{} gamma {gamma}: {}",
                p.kind(),
                s.wealth
            );
        }
    }
}

#[test]
fn closed_forms_match_branch_pricing() {
    let q = QuadratureConfig::default();
    let pr = table1(1.0);
    for p in every_kind(&pr) {
        for (t, s) in [(1.0, 0.6), (5.0, 1.0), (9.0, 2.5), (14.5, 1.3)] {
            let z = h_from_stock(&pr.market, t, s).unwrap();
            let a = wealth_and_fraction(&p, t, z, &q).unwrap().wealth;
            let b = wealth_by_branches(&p, t, z, &q).unwrap();
            assert!((a / b - 1.0).abs() < 1e-8, "{} t={t} S={s}: {a} vs {b}", p.kind());
        }
    }
}

#[test]
fn curve_rows_follow_the_grid() {
    let pr = table1(1.0);
    let q = QuadratureConfig::default();
    let grid = log_grid(0.2, 8.0, 33).unwrap();
    for p in every_kind(&pr) {
        let rows = curve(&p, 5.0, &grid, &q).unwrap();
        assert_eq!(rows.len(), grid.len());
        for (r, s) in rows.iter().zip(&grid) {
            assert_eq!(r.s, Some(*s));
            assert!(r.wealth > 0.0);
        }
    }
    assert!(curve(&every_kind(&pr)[0], 5.0, &[1.0, 0.5], &q).is_err());
}

#[test]
fn density_moments_match_profile() {
    let q = QuadratureConfig::default();
    for p in every_kind(&table1(1.5)) {
        let d = terminal_density(&p, &default_grid(&p), &q).unwrap();
        let total: f64 = d.pieces.iter().map(|x| x.mass).sum::<f64>() + d.atom.map_or(0.0, |a| a.mass);
        assert!((total - 1.0).abs() < 1e-12, "{}", p.kind());
        assert_eq!(d.mean, p.expected_wealth(&q).unwrap());
        assert_eq!(d.gap.is_some(), p.kind() == Kind::VaR && p.is_binding());
    }
}

#[test]
fn monte_carlo_agrees_at_moderate_size() {
    let q = QuadratureConfig::default();
    let cfg = MCConfig::new(200_000, 1, 2024, true).unwrap();
    for p in every_kind(&table1(2.0)) {
        let mean = mc_static(&p, Functional::Mean, &cfg)
            .unwrap()
            .with_target(p.expected_wealth(&q).unwrap());
        assert!(mean.within(4.0) || mean.std_error == 0.0, "{} {mean:?}", p.kind());
        let budget = mc_static(&p, Functional::Budget, &cfg).unwrap();
        assert!(
            (budget.estimate - 1.0).abs() <= 4.0 * budget.std_error + 1e-12,
            "{} {budget:?}",
            p.kind()
        );
        let z = 0.9;
        let f = wealth_and_fraction(&p, 6.0, z, &q).unwrap().wealth;
        let c = mc_conditional_wealth(&p, 6.0, z, &cfg).unwrap();
        assert!(
            (c.estimate - f).abs() <= 4.0 * c.std_error + 1e-12,
            "{} {c:?} vs {f}",
            p.kind()
        );
    }
}

#[test]
fn scaled_multiplier_breaks_the_budget() {
    let q = QuadratureConfig::default();
    let pr = table1(1.0);
    for p in every_kind(&pr).into_iter().filter(|p| p.kind().is_constrained()) {
        let off = p.with_scaled_multiplier(1.01);
        assert!((off.budget_value(&q).unwrap() - 1.0).abs() > 1e-4, "{}", p.kind());
    }
    let unc = solve_unconstrained(&pr, &SolverConfig::default()).unwrap();
    assert!((unc.with_scaled_multiplier(1.01).budget_value(&q).unwrap() - 1.0 / 1.01).abs() < 1e-12);
}
