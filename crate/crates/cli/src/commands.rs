use std::fmt::Write as _;

use shortfall::density::{default_grid, log_grid, terminal_density};
use shortfall::market::{state_price_law, stock_from_h};
use shortfall::mc::{mc_conditional_wealth, mc_static, replicate};
use shortfall::prehorizon::{curve as strategy_curve, wealth_and_fraction};
use shortfall::solver::solve;
use shortfall::{ConstraintSpec, Functional, Kind, MCConfig, Profile, QuadratureConfig, SolverConfig};

use crate::config::{GridSpec, Setup};
use crate::error::CliError;

/// Stock-price grid used by `curve` when none is given.
pub const DEFAULT_CURVE_GRID: GridSpec = GridSpec {
    lo: 0.1,
    hi: 10.0,
    n: 199,
};

/// Shortest round-trip decimal, switching to exponent form for very small
/// or very large magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".to_string()
    } else if !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn qc() -> QuadratureConfig<f64> {
    QuadratureConfig::default()
}

pub fn profile(setup: &Setup, multiplier_scale: Option<f64>) -> Result<Profile, CliError> {
    let p = solve(&setup.problem, &setup.spec, &SolverConfig::default())?;
    Ok(match multiplier_scale {
        Some(f) => p.with_scaled_multiplier(f),
        None => p,
    })
}

fn grid(spec: GridSpec) -> Result<Vec<f64>, CliError> {
    Ok(log_grid(spec.lo, spec.hi, spec.n)?)
}

/// Key=value record of a solved profile.
pub fn solve_record(setup: &Setup, p: &Profile) -> Result<String, CliError> {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| writeln!(out, "{k}={v}").expect("string write");
    kv("kind", p.kind().name().to_string());
    kv("y", num(p.y()));
    kv("y2", num(p.y2()));
    kv("h_lo", num(p.h_lo()));
    kv("h_hi", num(p.h_hi()));
    if let (Some(q), Some(eps)) = (p.q(), p.eps()) {
        kv("q", num(q));
        kv("eps", num(eps));
    }
    if p.kind() == Kind::VaR {
        kv("q2", num(p.q2().expect("VaR profiles carry q")));
    }
    kv("binding", p.is_binding().to_string());
    kv("budget_residual", num(p.budget_value(&qc())? - setup.problem.x));
    if p.kind().is_constrained() {
        kv(
            "constraint_residual",
            num(p.constraint_value(&qc())? - setup.spec.eps.expect("validated")),
        );
    }
    kv("expected_wealth", num(p.expected_wealth(&qc())?));
    Ok(out)
}

/// CSV of the strategy at time `t` over a stock-price grid.
pub fn curve_csv(setup: &Setup, p: &Profile, spec: Option<GridSpec>, benchmarks: bool) -> Result<String, CliError> {
    let s_grid = grid(spec.unwrap_or(DEFAULT_CURVE_GRID))?;
    let rows = strategy_curve(p, setup.t, &s_grid, &qc())?;
    let normal = setup.problem.market.normal_fraction(setup.problem.utility.gamma());
    let mut out = String::from("s,h,wealth,fraction,relative_exposure");
    if benchmarks {
        out.push_str(",bond_fraction,stock_fraction,normal_fraction");
    }
    out.push('\n');
    for (row, s) in rows.iter().zip(&s_grid) {
        write!(
            out,
            "{},{},{},{},{}",
            num(*s),
            num(row.h),
            num(row.wealth),
            num(row.fraction),
            num(row.relative_exposure)
        )
        .expect("string write");
        if benchmarks {
            write!(out, ",0,1,{}", num(normal)).expect("string write");
        }
        out.push('\n');
    }
    Ok(out)
}

/// `w,pdf` table and the key=value summary.
pub fn density_outputs(p: &Profile, spec: Option<GridSpec>) -> Result<(String, String), CliError> {
    let w_grid = match spec {
        Some(g) => grid(g)?,
        None => default_grid(p),
    };
    let d = terminal_density(p, &w_grid, &qc())?;
    let mut table = String::from("w,pdf\n");
    for (w, pdf) in d.table() {
        writeln!(table, "{},{}", num(*w), num(*pdf)).expect("string write");
    }
    let mut summary = String::new();
    let mut kv = |k: &str, v: String| writeln!(summary, "{k}={v}").expect("string write");
    kv("kind", p.kind().name().to_string());
    match d.atom {
        Some(a) => {
            kv("atom_at", num(a.at));
            kv("atom_mass", num(a.mass));
        }
        None => {
            kv("atom_at", "none".into());
            kv("atom_mass", "0".into());
        }
    }
    match d.gap {
        Some((lo, hi)) => {
            kv("gap_lo", num(lo));
            kv("gap_hi", num(hi));
        }
        None => {
            kv("gap_lo", "none".into());
            kv("gap_hi", "none".into());
        }
    }
    kv("mean", format!("{:.4}", d.mean));
    kv("table_mass", num(d.table_mass()));
    kv("total_mass", num(d.table_mass() + d.atom.map_or(0.0, |a| a.mass)));
    kv("rows", d.table().len().to_string());
    Ok((table, summary))
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub closed_form: f64,
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub z_score: Option<f64>,
    pub pass: bool,
}

/// Round-off allowance for payoffs that make the standard error zero.
fn rounding(target: f64) -> f64 {
    1e-12 * target.abs().max(1.0)
}

fn mc_check(name: String, closed_form: f64, est: f64, se: f64) -> Check {
    let z = if se > rounding(closed_form) {
        (est - closed_form) / se
    } else {
        0.0
    };
    Check {
        name,
        closed_form,
        estimate: est,
        std_error: Some(se),
        z_score: Some(z),
        pass: (est - closed_form).abs() <= 3.0 * se + rounding(closed_form),
    }
}

fn plain_check(name: String, closed_form: f64, estimate: f64, pass: bool) -> Check {
    Check {
        name,
        closed_form,
        estimate,
        std_error: None,
        z_score: None,
        pass,
    }
}

/// `-γ z F_z / F` by central differences in `ln z`.
fn fd_exposure(p: &Profile, t: f64, z: f64) -> Result<f64, CliError> {
    let h = 1e-4f64;
    let f = |z: f64| wealth_and_fraction(p, t, z, &qc()).map(|s| s.wealth);
    let (up, down, mid) = (f(z * h.exp())?, f(z * (-h).exp())?, f(z)?);
    Ok(-p.utility().gamma() * (up - down) / (2.0 * h) / mid)
}

fn replication_threshold(kind: Kind) -> f64 {
    if kind == Kind::VaR {
        0.04
    } else {
        0.02
    }
}

/// Closed forms against Monte Carlo and the invariant checks.
pub fn verify_checks(setup: &Setup, p: &Profile, paths: usize) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    let x = setup.problem.x;
    let q = setup.q;
    let cfg = setup.mc;

    let budget = p.budget_value(&qc())?;
    let tol = 1e-8 * x.max(1.0);
    checks.push(plain_check(
        "budget_residual".into(),
        x,
        budget,
        (budget - x).abs() <= tol,
    ));
    if p.is_binding() {
        let eps = setup.spec.eps.expect("validated");
        let c = p.constraint_value(&qc())?;
        checks.push(plain_check(
            "constraint_residual".into(),
            eps,
            c,
            (c - eps).abs() <= 1e-8 * eps.max(1.0),
        ));
    }

    let mut functionals = vec![
        ("mc_budget".to_string(), Functional::Budget, x),
        ("mc_mean".to_string(), Functional::Mean, p.expected_wealth(&qc())?),
        (
            format!("mc_interval(0,{q:.4})"),
            Functional::Interval(0.0, q),
            p.interval_probability(0.0, q)?,
        ),
        (
            format!("mc_interval({q:.4},{:.4})", 2.0 * q),
            Functional::Interval(q, 2.0 * q),
            p.interval_probability(q, 2.0 * q)?,
        ),
    ];
    if p.kind().is_constrained() {
        functionals.push((
            "mc_constraint".into(),
            Functional::Constraint,
            p.constraint_value(&qc())?,
        ));
    }
    for (name, f, target) in functionals {
        let r = mc_static(p, f, &cfg)?;
        checks.push(mc_check(name, target, r.estimate, r.std_error));
    }

    let t = setup.t;
    let pins: Vec<f64> = if t == 0.0 {
        vec![1.0]
    } else {
        let law = state_price_law(&setup.problem.market, t)?;
        [0.05, 0.25, 0.5, 0.75, 0.95].iter().map(|&u| law.quantile(u)).collect()
    };
    for (i, &z) in pins.iter().enumerate() {
        let sample = wealth_and_fraction(p, t, z, &qc())?;
        let pin_cfg = MCConfig {
            seed: cfg.seed.wrapping_add(1 + i as u64),
            ..cfg
        };
        let r = mc_conditional_wealth(p, t, z, &pin_cfg)?;
        checks.push(mc_check(
            format!("mc_wealth(t={t},z={z:.4})"),
            sample.wealth,
            r.estimate,
            r.std_error,
        ));
        let fd = fd_exposure(p, t, z)?;
        let rel = sample.relative_exposure;
        let ok = (rel - fd).abs() <= 1e-4 * rel.abs().max(fd.abs()) + 1e-12;
        checks.push(plain_check(format!("delta(t={t},z={z:.4})"), rel, fd, ok));
    }

    if paths > 0 {
        let rep = MCConfig {
            n_samples: paths,
            ..cfg
        };
        let r = replicate(p, &rep, &qc())?;
        let limit = replication_threshold(p.kind());
        checks.push(Check {
            name: format!("replication_rms(steps={})", cfg.n_steps),
            closed_form: limit,
            estimate: r.estimate,
            std_error: Some(r.std_error),
            z_score: None,
            pass: r.estimate <= limit,
        });
    }
    Ok(checks)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"))
}

pub fn verify_table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
    let mut out = format!(
        "{:<width$}  {:>22}  {:>22}  {:>13}  {:>13}  pass\n",
        "check", "closed_form", "estimate", "std_error", "z_score"
    );
    for c in checks {
        writeln!(
            out,
            "{:<width$}  {:>22}  {:>22}  {:>13}  {:>13}  {}",
            c.name,
            num(c.closed_form),
            num(c.estimate),
            opt(c.std_error),
            c.z_score.map_or_else(|| "-".to_string(), |z| format!("{z:.3}")),
            if c.pass { "yes" } else { "NO" }
        )
        .expect("string write");
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    writeln!(out, "passed {passed}/{}", checks.len()).expect("string write");
    out
}

/// Values reported for the reference scenario.
mod reported {
    pub const Q: f64 = 1.8447;
    pub const Q2: f64 = 1.1765;
    pub const BOND_MEAN: f64 = 2.4596;
    pub const STOCK_MEAN: f64 = 3.8574;
    pub const UNC_MEAN: f64 = 3.4469;
    pub const VAR_MEAN: f64 = 8.7437;
    pub const EL_MEAN: f64 = 2.3495;
    pub const EUL_MEAN: f64 = 8.8482;
    pub const LOSS_LEVEL: f64 = 1.0807;
    pub const UNC_TAIL: f64 = 0.0456;
    pub const VAR_TAIL: f64 = 0.0600;
    pub const EL_TAIL: f64 = 0.0114;
    pub const EUL_TAIL: f64 = 0.0393;
    pub const S_LOW: f64 = 0.9282;
    pub const S_HIGH: f64 = 2.1373;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Match,
    Mismatch,
    /// The reported value is known to be inconsistent; shown, not compared.
    Flagged,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Match => "match",
            Status::Mismatch => "MISMATCH",
            Status::Flagged => "flagged",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReportRow {
    pub quantity: String,
    pub paper: f64,
    pub computed: f64,
    pub percent: bool,
    pub status: Status,
}

fn row(quantity: impl Into<String>, paper: f64, computed: f64, tol: f64) -> ReportRow {
    ReportRow {
        quantity: quantity.into(),
        paper,
        computed,
        percent: false,
        status: if (paper - computed).abs() <= tol {
            Status::Match
        } else {
            Status::Mismatch
        },
    }
}

/// Every strategy of the scenario, solved with its market, level and bound.
pub fn report_rows(setup: &Setup) -> Result<Vec<ReportRow>, CliError> {
    use reported::*;
    let cfg = SolverConfig::default();
    let eps = setup.spec.eps.unwrap_or(0.06);
    let solved = |kind: Kind| -> Result<Profile, CliError> {
        let spec = if kind.is_constrained() {
            ConstraintSpec::new(kind, Some(setup.q), Some(eps))?
        } else {
            ConstraintSpec::new(kind, None, None)?
        };
        Ok(solve(&setup.problem, &spec, &cfg)?)
    };
    let bond = solved(Kind::PureBond)?;
    let stock = solved(Kind::PureStock)?;
    let unc = solved(Kind::Unconstrained)?;
    let var = solved(Kind::VaR)?;
    let el = solved(Kind::EL)?;
    let eul = solved(Kind::EUL)?;
    let mean = |p: &Profile| p.expected_wealth(&qc());

    let mut rows = vec![
        row("q", Q, setup.q, 5e-5),
        row("q2 (VaR)", Q2, var.q2().expect("VaR carries q"), 0.005 * Q2),
        row("E[xi] bond", BOND_MEAN, mean(&bond)?, 5e-5),
        row("E[xi] stock", STOCK_MEAN, mean(&stock)?, 5e-5),
        row("E[xi] unconstrained", UNC_MEAN, mean(&unc)?, 1e-3),
    ];
    for (name, paper, p) in [
        ("E[xi] VaR", VAR_MEAN, &var),
        ("E[xi] EL", EL_MEAN, &el),
        ("E[xi] EUL", EUL_MEAN, &eul),
    ] {
        let mut r = row(name, paper, mean(p)?, 5e-5);
        r.status = Status::Flagged;
        rows.push(r);
    }
    for (name, paper, p) in [
        ("unconstrained", UNC_TAIL, &unc),
        ("VaR", VAR_TAIL, &var),
        ("EL", EL_TAIL, &el),
        ("EUL", EUL_TAIL, &eul),
    ] {
        let mut r = row(
            format!("P(xi in (0,{LOSS_LEVEL})) {name}"),
            paper,
            p.interval_probability(0.0, LOSS_LEVEL)?,
            5e-4,
        );
        r.percent = true;
        rows.push(r);
    }
    let t = setup.t;
    let s_at = |h: f64| stock_from_h(&setup.problem.market, t, h);
    if var.is_binding() && var.h_hi().is_finite() {
        rows.push(row(
            format!("S region bound at h_hi (VaR, t={t})"),
            S_LOW,
            s_at(var.h_hi())?,
            5e-4 * S_LOW,
        ));
        rows.push(row(
            format!("S region bound at h_lo (VaR, t={t})"),
            S_HIGH,
            s_at(var.h_lo())?,
            5e-4 * S_HIGH,
        ));
    }
    Ok(rows)
}

pub fn report_table(rows: &[ReportRow]) -> String {
    let width = rows.iter().map(|r| r.quantity.len()).max().unwrap_or(8).max(8);
    let mut out = format!("{:<width$}  {:>10}  {:>10}  status\n", "quantity", "paper", "computed");
    for r in rows {
        let (paper, computed) = if r.percent {
            (
                format!("{:.2}%", 100.0 * r.paper),
                format!("{:.2}%", 100.0 * r.computed),
            )
        } else {
            (format!("{:.4}", r.paper), format!("{:.4}", r.computed))
        };
        writeln!(
            out,
            "{:<width$}  {paper:>10}  {computed:>10}  {}",
            r.quantity,
            r.status.label()
        )
        .expect("string write");
    }
    out
}
