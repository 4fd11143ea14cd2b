//! Law of the terminal wealth `ξ(H_T)`: densities of the monotone branches by
//! change of variables, the point mass of a constant branch, and the empty
//! interval between `q₂` and `q` of a binding VaR profile.

use crate::analytics::QuadratureConfig;
use crate::error::{Error, Result};
use crate::profile::{Branch, Kind, Shape, TerminalProfile};
use crate::scalar::Scalar;

/// Point mass of the terminal wealth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<S> {
    pub at: S,
    pub mass: S,
}

/// One monotone branch seen in wealth space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPiece<S> {
    /// Wealth range `(lo, hi)` covered by the branch.
    pub lo: S,
    pub hi: S,
    /// Exact probability of the branch.
    pub mass: S,
    /// `(w, pdf)` at the grid points inside the range and at its finite ends
    /// (one-sided limits there).
    pub samples: Vec<(S, S)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensitySummary<S> {
    pub pieces: Vec<DensityPiece<S>>,
    pub atom: Option<Atom<S>>,
    /// Wealth interval of zero probability strictly inside the support.
    pub gap: Option<(S, S)>,
    pub mean: S,
    table: Vec<(S, S)>,
}

impl<S: Scalar> DensitySummary<S> {
    /// Mass of the atom at `q`, zero when there is none.
    pub fn atom_at(&self, q: S) -> S {
        match self.atom {
            Some(a) if a.at == q => a.mass,
            _ => S::zero(),
        }
    }

    /// Density table sorted by wealth. Jumps appear as two rows with the
    /// same `w` (left limit first), so the trapezoid rule integrates it
    /// without smearing them.
    pub fn table(&self) -> &[(S, S)] {
        &self.table
    }

    /// Trapezoid integral of [`table`](Self::table).
    pub fn table_mass(&self) -> S {
        trapezoid(&self.table, |_, p| p)
    }

    /// Trapezoid integral of `w·pdf(w)` over the table.
    pub fn table_mean(&self) -> S {
        trapezoid(&self.table, |w, p| w * p)
    }
}

fn trapezoid<S: Scalar>(rows: &[(S, S)], g: impl Fn(S, S) -> S) -> S {
    rows.windows(2).fold(S::zero(), |acc, r| {
        acc + (r[1].0 - r[0].0) * (g(r[0].0, r[0].1) + g(r[1].0, r[1].1)) / S::lit(2.0)
    })
}

fn branch_pdf<S: Scalar>(profile: &TerminalProfile<S>, b: &Branch<S>, w: S) -> S {
    match (b.inverse(w), b.inverse_slope(w)) {
        (Some(h), Some(slope)) if h.is_finite() && h > S::zero() => profile.law().pdf(h) * slope,
        _ => S::zero(),
    }
}

fn monotone(b: &Branch<impl Scalar>) -> bool {
    !matches!(b.shape, Shape::Constant { .. }) && b.lo < b.hi
}

/// Density of `ξ(H_T)` at `w` (continuous part only).
pub fn density_at<S: Scalar>(profile: &TerminalProfile<S>, w: S) -> S {
    profile
        .branches()
        .iter()
        .filter(|b| monotone(b))
        .filter(|b| {
            let (lo, hi) = b.wealth_range();
            lo < w && w < hi
        })
        .fold(S::zero(), |acc, b| acc + branch_pdf(profile, b, w))
}

/// Reference wealth for default grids: `q` when the profile has one, else
/// the bond payoff.
fn reference_level<S: Scalar>(profile: &TerminalProfile<S>) -> S {
    profile
        .q()
        .unwrap_or_else(|| profile.initial_wealth() * (profile.market().r() * profile.horizon()).exp())
}

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_grid<S: Scalar>(lo: S, hi: S, n: usize) -> Result<Vec<S>> {
    if !(lo > S::zero()) || !(hi > lo) || !hi.is_finite() || n < 2 {
        return Err(Error::param(
            "grid",
            format!("need 0 < lo < hi and n >= 2, got {lo}:{hi}:{n}"),
        ));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / S::from_usize(n - 1).expect("grid size");
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (a + step * S::from_usize(i).expect("grid index")).exp()
            }
        })
        .collect())
}

/// 2048 log-spaced points over `[1e-3 q, 20 q]`.
pub fn default_grid<S: Scalar>(profile: &TerminalProfile<S>) -> Vec<S> {
    let q = reference_level(profile);
    log_grid(q * S::lit(1e-3), q * S::lit(20.0), 2048).expect("valid default grid")
}

pub fn terminal_density<S: Scalar>(
    profile: &TerminalProfile<S>,
    grid: &[S],
    cfg: &QuadratureConfig<S>,
) -> Result<DensitySummary<S>> {
    if grid.is_empty() || grid.iter().any(|w| !(*w > S::zero()) || !w.is_finite()) {
        return Err(Error::param(
            "grid",
            "wealth grid must be non-empty, positive and finite",
        ));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("grid", "wealth grid must be strictly increasing"));
    }
    let (g_lo, g_hi) = (grid[0], grid[grid.len() - 1]);
    let law = profile.law();
    let mut pieces = Vec::new();
    let mut atom = None;
    for b in profile.branches() {
        if !(b.lo < b.hi) {
            continue;
        }
        if let Shape::Constant { value } = b.shape {
            let mass = b.probability(law);
            if mass > S::zero() {
                atom = Some(Atom { at: value, mass });
            }
            continue;
        }
        let (lo, hi) = b.wealth_range();
        let mut samples = Vec::new();
        let end = |w: S| w > S::zero() && w.is_finite() && g_lo <= w && w <= g_hi;
        if end(lo) {
            samples.push((lo, branch_pdf(profile, b, lo)));
        }
        samples.extend(
            grid.iter()
                .filter(|&&w| lo < w && w < hi)
                .map(|&w| (w, branch_pdf(profile, b, w))),
        );
        if end(hi) {
            samples.push((hi, branch_pdf(profile, b, hi)));
        }
        pieces.push(DensityPiece {
            lo,
            hi,
            mass: b.probability(law),
            samples,
        });
    }
    pieces.sort_by(|a, b| a.lo.partial_cmp(&b.lo).expect("finite ranges"));
    let gap = match (profile.kind(), profile.is_binding(), profile.q2(), profile.q()) {
        (Kind::VaR, true, Some(q2), Some(q)) if q2 < q => Some((q2, q)),
        _ => None,
    };
    let table = build_table(profile, &pieces, grid);
    Ok(DensitySummary {
        pieces,
        atom,
        gap,
        mean: profile.expected_wealth(cfg)?,
        table,
    })
}

/// Grid rows plus both one-sided limits at every piece end inside the grid.
/// Ends that agree to a few ulps (adjacent branches meeting at the same
/// wealth) are merged.
fn build_table<S: Scalar>(profile: &TerminalProfile<S>, pieces: &[DensityPiece<S>], grid: &[S]) -> Vec<(S, S)> {
    if pieces.is_empty() {
        return Vec::new();
    }
    let close = |a: S, b: S| (a - b).abs() <= S::lit(8.0) * S::epsilon() * a.abs().max(b.abs());
    let mut ends: Vec<S> = pieces
        .iter()
        .flat_map(|p| [p.lo, p.hi])
        .filter(|&w| w > grid[0] && w < grid[grid.len() - 1])
        .collect();
    ends.sort_by(|a, b| a.partial_cmp(b).expect("finite ends"));
    ends.dedup_by(|a, b| close(*a, *b));
    let limit = |w: S, left: bool| {
        pieces
            .iter()
            .filter_map(|p| {
                let (end, sample) = if left {
                    (p.hi, p.samples.last())
                } else {
                    (p.lo, p.samples.first())
                };
                close(end, w).then_some(sample).flatten().map(|s| s.1)
            })
            .fold(S::zero(), |acc, v| acc + v)
    };
    let mut rows: Vec<(S, S)> = grid
        .iter()
        .filter(|&&w| !ends.iter().any(|&e| close(e, w)))
        .map(|&w| (w, density_at(profile, w)))
        .collect();
    for &e in &ends {
        let at = rows.partition_point(|r| r.0 < e);
        rows.insert(at, (e, limit(e, true)));
        rows.insert(at + 1, (e, limit(e, false)));
    }
    rows
}

/// `P(ξ ∈ (lo, hi))`.
pub fn interval_probability<S: Scalar>(profile: &TerminalProfile<S>, lo: S, hi: S) -> Result<S> {
    profile.interval_probability(lo, hi)
}

/// `E[ξ(H_T)]`.
pub fn expected_terminal_wealth<S: Scalar>(profile: &TerminalProfile<S>, cfg: &QuadratureConfig<S>) -> Result<S> {
    profile.expected_wealth(cfg)
}
