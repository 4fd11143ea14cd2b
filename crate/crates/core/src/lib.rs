//! Optimal terminal wealth and dynamic strategies for a CRRA investor in a
//! Black–Scholes market, with an optional risk limit on the shortfall below
//! a level `q`: a Value-at-Risk bound, an expected-loss bound or an
//! expected-utility-loss bound.
//!
//! The static problem is solved over payoffs `ξ(H_T)` of the state-price
//! density ([`solver`]); the wealth and stock fraction before the horizon
//! follow in closed form ([`prehorizon`]); [`density`] describes the law of
//! `ξ` and [`mc`] checks all of it by simulation.
//!
//! Numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix `f64`.
//!
//! ```
//! use shortfall::{Market, Problem, SolverConfig, Utility, solver::solve_var};
//!
//! let market = Market::new(0.09, 0.2, 0.06).unwrap();
//! let problem = Problem::new(market, 15.0, 1.0, Utility::log()).unwrap();
//! let q = 0.75 * (0.06f64 * 15.0).exp();
//! let p = solve_var(&problem, q, 0.06, &SolverConfig::default()).unwrap();
//! assert!(p.is_binding());
//! assert!((p.h_hi() - 0.8475).abs() < 1e-4);
//! ```

// NaN must fail range checks, so `!(a < b)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::excessive_precision)]

pub mod analytics;
pub mod density;
pub mod error;
pub mod market;
pub mod mc;
pub mod normal;
pub mod prehorizon;
pub mod profile;
pub mod roots;
pub mod scalar;
pub mod solver;
pub mod utility;

pub use analytics::QuadratureConfig;
pub use error::{Error, Result};
pub use mc::{Functional, MCConfig};
pub use profile::{ConstraintSpec, Kind};
pub use roots::RootConfig;
pub use scalar::Scalar;

pub type Market = market::MarketParams<f64>;
pub type Law = market::LognormalLaw<f64>;
pub type Utility = utility::UtilitySpec<f64>;
pub type Problem = solver::Problem<f64>;
pub type SolverConfig = solver::SolverConfig<f64>;
pub type Constraint = profile::ConstraintSpec<f64>;
pub type Profile = profile::TerminalProfile<f64>;
pub type Branch = profile::Branch<f64>;
pub type LossReport = profile::LossReport<f64>;
pub type Terms = prehorizon::PreHorizonTerms<f64>;
pub type CurveSample = prehorizon::CurveSample<f64>;
pub type Density = density::DensitySummary<f64>;
pub type MCReport = mc::MCReport<f64>;
