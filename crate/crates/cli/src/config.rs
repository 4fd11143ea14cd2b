//! Scenario files: flat `key = value` lines, `#` starts a comment.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use shortfall::{ConstraintSpec, Error, Kind, MCConfig, Market, Problem, Utility};

use crate::commands::num;
use crate::error::CliError;

/// Shortfall level: absolute, or a fraction of the pure-bond terminal wealth `x·e^{rT}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Level {
    Absolute(f64),
    Fraction(f64),
}

/// `lo:hi:n`, log-spaced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [lo, hi, n] = parts[..] else {
            return Err(format!("expected lo:hi:n, got `{s}`"));
        };
        let lo: f64 = lo.parse().map_err(|e| format!("grid lower end `{lo}`: {e}"))?;
        let hi: f64 = hi.parse().map_err(|e| format!("grid upper end `{hi}`: {e}"))?;
        let n: usize = n.parse().map_err(|e| format!("grid size `{n}`: {e}"))?;
        if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
            return Err(format!("grid needs 0 < lo < hi < inf, got {lo}:{hi}"));
        }
        if n < 2 {
            return Err(format!("grid needs at least 2 points, got {n}"));
        }
        Ok(Self { lo, hi, n })
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", num(self.lo), num(self.hi), self.n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub mu: f64,
    pub sigma: f64,
    pub r: f64,
    pub horizon: f64,
    pub x: f64,
    pub gamma: f64,
    pub kind: Kind,
    pub level: Level,
    pub eps: f64,
    /// Evaluation time for curves and conditional checks.
    pub t: f64,
    pub grid: Option<GridSpec>,
    /// Static Monte Carlo sample size; conditional checks use the same.
    pub samples: usize,
    /// Replication paths for `verify`; 0 skips replication.
    pub paths: usize,
    pub steps: usize,
    pub seed: u64,
    pub antithetic: bool,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            mu: 0.09,
            sigma: 0.2,
            r: 0.06,
            horizon: 15.0,
            x: 1.0,
            gamma: 1.0,
            kind: Kind::VaR,
            level: Level::Fraction(0.75),
            eps: 0.06,
            t: 5.0,
            grid: None,
            samples: 200_000,
            paths: 0,
            steps: 512,
            seed: 0,
            antithetic: false,
        }
    }
}

const KEYS: &[&str] = &[
    "mu",
    "sigma",
    "r",
    "T",
    "x",
    "gamma",
    "kind",
    "q",
    "q_frac",
    "eps",
    "t",
    "grid",
    "samples",
    "paths",
    "steps",
    "seed",
    "antithetic",
];

/// Parse error with the 1-based line it refers to.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Parsed scenario plus the line each key came from, for diagnostics
/// raised only once the values are combined.
#[derive(Debug, Clone, Default)]
pub struct Parsed {
    pub scenario: Scenario,
    lines: HashMap<&'static str, usize>,
}

fn value<T: FromStr>(key: &str, raw: &str, line: usize) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    raw.parse().map_err(|e| ConfigError {
        line: Some(line),
        message: format!("invalid value `{raw}` for `{key}`: {e}"),
    })
}

fn boolean(key: &str, raw: &str, line: usize) -> Result<bool, ConfigError> {
    match raw.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError {
            line: Some(line),
            message: format!("invalid value `{raw}` for `{key}`: expected true or false"),
        }),
    }
}

pub fn parse(text: &str) -> Result<Parsed, ConfigError> {
    let mut p = Parsed::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(ConfigError {
                line: Some(line),
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let (k, v) = (k.trim(), v.trim());
        let Some(key) = KEYS.iter().copied().find(|key| *key == k) else {
            return Err(ConfigError {
                line: Some(line),
                message: format!("unknown key `{k}`"),
            });
        };
        if let Some(first) = p.lines.get(key) {
            return Err(ConfigError {
                line: Some(line),
                message: format!("`{key}` already set on line {first}"),
            });
        }
        let other = match key {
            "q" => Some("q_frac"),
            "q_frac" => Some("q"),
            _ => None,
        };
        if let Some(first) = other.and_then(|o| p.lines.get(o)) {
            return Err(ConfigError {
                line: Some(line),
                message: format!("`q` and `q_frac` are exclusive (the other is set on line {first})"),
            });
        }
        let s = &mut p.scenario;
        match key {
            "mu" => s.mu = value(key, v, line)?,
            "sigma" => s.sigma = value(key, v, line)?,
            "r" => s.r = value(key, v, line)?,
            "T" => s.horizon = value(key, v, line)?,
            "x" => s.x = value(key, v, line)?,
            "gamma" => s.gamma = value(key, v, line)?,
            "kind" => s.kind = value(key, v, line)?,
            "q" => s.level = Level::Absolute(value(key, v, line)?),
            "q_frac" => s.level = Level::Fraction(value(key, v, line)?),
            "eps" => s.eps = value(key, v, line)?,
            "t" => s.t = value(key, v, line)?,
            "grid" => s.grid = Some(value(key, v, line)?),
            "samples" => s.samples = value(key, v, line)?,
            "paths" => s.paths = value(key, v, line)?,
            "steps" => s.steps = value(key, v, line)?,
            "seed" => s.seed = value(key, v, line)?,
            "antithetic" => s.antithetic = boolean(key, v, line)?,
            _ => unreachable!("key list and match agree"),
        }
        p.lines.insert(key, line);
    }
    Ok(p)
}

/// Command-line values that replace file values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub r: Option<f64>,
    pub horizon: Option<f64>,
    pub x: Option<f64>,
    pub gamma: Option<f64>,
    pub kind: Option<Kind>,
    pub q: Option<f64>,
    pub q_frac: Option<f64>,
    pub eps: Option<f64>,
    pub t: Option<f64>,
    pub grid: Option<GridSpec>,
    pub samples: Option<usize>,
    pub paths: Option<usize>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub antithetic: bool,
}

impl Parsed {
    pub fn apply(&mut self, o: &Overrides) {
        fn set<T: Copy>(lines: &mut HashMap<&'static str, usize>, key: &str, slot: &mut T, v: Option<T>) {
            if let Some(v) = v {
                *slot = v;
                lines.remove(key);
            }
        }
        let (s, l) = (&mut self.scenario, &mut self.lines);
        set(l, "mu", &mut s.mu, o.mu);
        set(l, "sigma", &mut s.sigma, o.sigma);
        set(l, "r", &mut s.r, o.r);
        set(l, "T", &mut s.horizon, o.horizon);
        set(l, "x", &mut s.x, o.x);
        set(l, "gamma", &mut s.gamma, o.gamma);
        set(l, "kind", &mut s.kind, o.kind);
        set(l, "eps", &mut s.eps, o.eps);
        set(l, "t", &mut s.t, o.t);
        set(l, "samples", &mut s.samples, o.samples);
        set(l, "paths", &mut s.paths, o.paths);
        set(l, "steps", &mut s.steps, o.steps);
        set(l, "seed", &mut s.seed, o.seed);
        if let Some(g) = o.grid {
            s.grid = Some(g);
            l.remove("grid");
        }
        if let Some(q) = o.q {
            s.level = Level::Absolute(q);
            l.remove("q_frac");
            l.remove("q");
        }
        if let Some(f) = o.q_frac {
            s.level = Level::Fraction(f);
            l.remove("q_frac");
            l.remove("q");
        }
        if o.antithetic {
            s.antithetic = true;
            l.remove("antithetic");
        }
    }

    fn located(&self, key: &str, message: String) -> CliError {
        let line = self.lines.get(key).copied();
        ConfigError { line, message }.into()
    }

    /// Checks the scenario against the library's parameter rules.
    pub fn validate(&self) -> Result<Setup, CliError> {
        let s = &self.scenario;
        let param = |e: Error| match e {
            Error::InvalidParameter { name, reason } => {
                let key = match name {
                    "mu/r" | "kappa" => "mu",
                    other => other,
                };
                self.located(key, format!("invalid `{name}`: {reason}"))
            }
            other => CliError::from(other),
        };
        if !s.mu.is_finite() {
            return Err(self.located("mu", format!("mu must be finite, got {}", s.mu)));
        }
        if !s.r.is_finite() {
            return Err(self.located("r", format!("r must be finite, got {}", s.r)));
        }
        let market = Market::new(s.mu, s.sigma, s.r).map_err(param)?;
        let utility = Utility::new(s.gamma).map_err(param)?;
        let problem = Problem::new(market, s.horizon, s.x, utility).map_err(param)?;
        if !(s.t >= 0.0) || !(s.t < s.horizon) {
            return Err(self.located("t", format!("need 0 <= t < T = {}, got {}", s.horizon, s.t)));
        }
        let q = s.q();
        let spec = if s.kind.is_constrained() {
            ConstraintSpec::new(s.kind, Some(q), Some(s.eps)).map_err(|e| match e {
                Error::InvalidParameter { name: "q", reason } => {
                    let key = if matches!(s.level, Level::Fraction(_)) {
                        "q_frac"
                    } else {
                        "q"
                    };
                    self.located(key, format!("invalid `q`: {reason}"))
                }
                e => param(e),
            })?
        } else {
            ConstraintSpec::new(s.kind, None, None).map_err(param)?
        };
        if !(q > 0.0) || !q.is_finite() {
            return Err(self.located("q", format!("shortfall level must be positive, got {q}")));
        }
        let mc = MCConfig::new(s.samples, s.steps, s.seed, s.antithetic).map_err(|e| match e {
            Error::InvalidParameter {
                name: "n_samples",
                reason,
            } => self.located("samples", reason),
            Error::InvalidParameter {
                name: "n_steps",
                reason,
            } => self.located("steps", reason),
            e => param(e),
        })?;
        Ok(Setup {
            problem,
            spec,
            q,
            t: s.t,
            mc,
        })
    }
}

impl Scenario {
    pub fn q(&self) -> f64 {
        match self.level {
            Level::Absolute(q) => q,
            Level::Fraction(f) => f * self.x * (self.r * self.horizon).exp(),
        }
    }

    /// Text that [`parse`] maps back to the same scenario.
    pub fn dump(&self) -> String {
        let mut out = String::from("# shortfall scenario\n");
        let mut kv = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        kv("mu", num(self.mu));
        kv("sigma", num(self.sigma));
        kv("r", num(self.r));
        kv("T", num(self.horizon));
        kv("x", num(self.x));
        kv("gamma", num(self.gamma));
        kv("kind", self.kind.name().to_string());
        match self.level {
            Level::Absolute(q) => kv("q", num(q)),
            Level::Fraction(f) => kv("q_frac", num(f)),
        }
        kv("eps", num(self.eps));
        kv("t", num(self.t));
        if let Some(g) = self.grid {
            kv("grid", g.to_string());
        }
        kv("samples", self.samples.to_string());
        kv("paths", self.paths.to_string());
        kv("steps", self.steps.to_string());
        kv("seed", self.seed.to_string());
        kv("antithetic", self.antithetic.to_string());
        out
    }
}

/// Validated inputs for the commands.
#[derive(Debug, Clone)]
pub struct Setup {
    pub problem: Problem,
    pub spec: ConstraintSpec<f64>,
    /// Resolved shortfall level (also used by unconstrained runs for reporting).
    pub q: f64,
    pub t: f64,
    pub mc: MCConfig,
}
