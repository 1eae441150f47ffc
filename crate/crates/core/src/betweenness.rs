//! Between-points, lens sets and uniform non-convexity.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;
use crate::rng::SplitMix64;

pub const DEFAULT_BETWEEN_TOL: f64 = 1e-9;
pub const DEFAULT_PAIR_BUDGET: usize = 2000;

/// `z` lies (approximately) between `x` and `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetweennessCertificate {
    pub x: usize,
    pub z: usize,
    pub y: usize,
    /// `d(x,z) + d(z,y) - d(x,y)`.
    pub defect: f64,
    /// `defect / d(x,y)`.
    pub relative_defect: f64,
    /// `d(x,z) / d(x,y)`, the split ratio a geodesic construction would use.
    pub ratio: f64,
}

impl BetweennessCertificate {
    fn of(space: &FiniteMetricSpace, x: usize, z: usize, y: usize) -> Self {
        let d_xy = space.d(x, y);
        let defect = space.d(x, z) + space.d(z, y) - d_xy;
        Self {
            x,
            z,
            y,
            defect,
            relative_defect: defect / d_xy,
            ratio: space.d(x, z) / d_xy,
        }
    }

    fn key(&self) -> (usize, usize, usize) {
        (self.x, self.z, self.y)
    }

    pub fn is_exact(&self, rel_tol: f64) -> bool {
        self.relative_defect <= rel_tol
    }
}

fn by_defect(a: &BetweennessCertificate, b: &BetweennessCertificate) -> Ordering {
    a.defect.total_cmp(&b.defect).then(a.key().cmp(&b.key()))
}

fn by_relative_defect(a: &BetweennessCertificate, b: &BetweennessCertificate) -> Ordering {
    a.relative_defect
        .total_cmp(&b.relative_defect)
        .then(a.key().cmp(&b.key()))
}

/// Result of a between-point scan that keeps at most `limit` certificates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetweenSummary {
    pub rel_tol: f64,
    /// Number of triples within tolerance.
    pub count: u64,
    /// The `limit` smallest-defect certificates, ascending.
    pub certificates: Vec<BetweennessCertificate>,
    /// Triple with the smallest relative defect, exact or not.
    pub closest: Option<BetweennessCertificate>,
}

#[derive(Default)]
struct BetweenAcc {
    count: u64,
    kept: Vec<BetweennessCertificate>,
    closest: Option<BetweennessCertificate>,
}

impl BetweenAcc {
    fn trim(&mut self, limit: usize) {
        if self.kept.len() > limit {
            self.kept.sort_by(by_defect);
            self.kept.truncate(limit);
        }
    }

    fn consider_closest(&mut self, c: BetweennessCertificate) {
        if self
            .closest
            .as_ref()
            .is_none_or(|b| by_relative_defect(&c, b) == Ordering::Less)
        {
            self.closest = Some(c);
        }
    }
}

/// Scans every triple `x < y`, `z` distinct from both, for
/// `d(x,z) + d(z,y) - d(x,y) <= rel_tol * d(x,y)`.
pub fn between_summary(space: &FiniteMetricSpace, rel_tol: f64, limit: usize) -> BetweenSummary {
    let n = space.len();
    let acc = (0..n)
        .into_par_iter()
        .fold(BetweenAcc::default, |mut acc, x| {
            for y in (x + 1)..n {
                let d_xy = space.d(x, y);
                let bound = rel_tol * d_xy;
                let mut best: Option<(f64, usize)> = None;
                for z in (0..n).filter(|&z| z != x && z != y) {
                    let defect = space.d(x, z) + space.d(z, y) - d_xy;
                    if best.is_none_or(|(b, _)| defect < b) {
                        best = Some((defect, z));
                    }
                    if defect <= bound {
                        acc.count += 1;
                        acc.kept.push(BetweennessCertificate::of(space, x, z, y));
                        if acc.kept.len() > limit.max(16).saturating_mul(2) {
                            acc.trim(limit);
                        }
                    }
                }
                if let Some((_, z)) = best {
                    acc.consider_closest(BetweennessCertificate::of(space, x, z, y));
                }
            }
            acc
        })
        .reduce(BetweenAcc::default, |mut a, b| {
            a.count += b.count;
            a.kept.extend(b.kept);
            a.trim(limit);
            if let Some(c) = b.closest {
                a.consider_closest(c);
            }
            a
        });
    let mut kept = acc.kept;
    kept.sort_by(by_defect);
    kept.truncate(limit);
    BetweenSummary {
        rel_tol,
        count: acc.count,
        certificates: kept,
        closest: acc.closest,
    }
}

/// All between-point certificates at `rel_tol`, sorted by defect.
pub fn find_between_points(space: &FiniteMetricSpace, rel_tol: f64) -> Vec<BetweennessCertificate> {
    between_summary(space, rel_tol, usize::MAX).certificates
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LensQuery {
    pub x: usize,
    pub y: usize,
    pub lambda: f64,
    pub delta: f64,
}

impl LensQuery {
    pub fn new(x: usize, y: usize, lambda: f64, delta: f64) -> Self {
        Self { x, y, lambda, delta }
    }
}

/// `z` is in the lens when `r - lambda <= delta` and `r' - (1 - lambda) <=
/// delta`, with `r, r'` the distances to `x, y` relative to `d(x,y)`.
/// At `lambda = 1/2` this is exactly `max(r, r') - 1/2 <= delta`.
#[inline]
fn in_lens(r: f64, r2: f64, lambda: f64, delta: f64) -> bool {
    r - lambda <= delta && r2 - (1.0 - lambda) <= delta
}

/// Members of `L(x, y; lambda, delta)`, the intersection of the closed
/// balls `B(x, (lambda + delta) d(x,y))` and `B(y, (1 - lambda + delta) d(x,y))`.
/// The endpoints are included when they satisfy both bounds.
pub fn lens_members(space: &FiniteMetricSpace, q: LensQuery) -> Result<Vec<usize>> {
    space.check_index(q.x)?;
    space.check_index(q.y)?;
    if q.x == q.y {
        return Err(Error::input("lens needs two distinct points"));
    }
    if !(q.lambda.is_finite() && q.delta.is_finite()) {
        return Err(Error::domain("lens parameters must be finite"));
    }
    let d_xy = space.d(q.x, q.y);
    if !(d_xy > 0.0) {
        return Err(Error::input(format!("d({},{}) must be positive", q.x, q.y)));
    }
    Ok((0..space.len())
        .filter(|&z| in_lens(space.d(q.x, z) / d_xy, space.d(z, q.y) / d_xy, q.lambda, q.delta))
        .collect())
}

/// `min_z max(d(x,z), d(z,y)) / d(x,y) - 1/2` over `z` other than `x, y`;
/// `+inf` when there is no third point.
pub fn midpoint_defect(space: &FiniteMetricSpace, x: usize, y: usize) -> Result<f64> {
    space.check_index(x)?;
    space.check_index(y)?;
    if x == y {
        return Err(Error::input("midpoint defect needs two distinct points"));
    }
    let d_xy = space.d(x, y);
    if !(d_xy > 0.0) {
        return Err(Error::input(format!("d({x},{y}) must be positive")));
    }
    Ok((0..space.len())
        .filter(|&z| z != x && z != y)
        .map(|z| (space.d(x, z) / d_xy).max(space.d(z, y) / d_xy) - 0.5)
        .fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonConvexityOptions {
    pub delta_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub pair_budget: usize,
    pub seed: u64,
}

impl Default for NonConvexityOptions {
    fn default() -> Self {
        Self {
            delta_grid: (1..50).map(|i| i as f64 / 100.0).collect(),
            lambda_grid: (1..100).map(|i| i as f64 / 100.0).collect(),
            pair_budget: DEFAULT_PAIR_BUDGET,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairLens {
    pub x: usize,
    pub y: usize,
    /// First grid value of lambda whose lens is empty.
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonConvexityCertificate {
    pub delta: f64,
    pub entries: Vec<PairLens>,
    /// Whether every pair was examined (otherwise a seeded sample).
    pub exhaustive: bool,
    pub seed: u64,
}

/// A pair whose lenses are all occupied, one member per grid value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refutation {
    pub delta: f64,
    pub x: usize,
    pub y: usize,
    pub lambdas: Vec<f64>,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum NonConvexityVerdict {
    Certified(NonConvexityCertificate),
    Refuted(Refutation),
}

impl NonConvexityVerdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, Self::Certified(_))
    }

    pub fn delta(&self) -> f64 {
        match self {
            Self::Certified(c) => c.delta,
            Self::Refuted(r) => r.delta,
        }
    }
}

/// All pairs `x < y` if there are at most `budget`, otherwise `budget`
/// distinct pairs drawn with the seeded generator, in index order.
fn pick_pairs(n: usize, budget: usize, seed: u64) -> (Vec<(usize, usize)>, bool) {
    let total = n * n.saturating_sub(1) / 2;
    if total <= budget {
        let all = (0..n).flat_map(|x| ((x + 1)..n).map(move |y| (x, y))).collect();
        return (all, true);
    }
    let mut rng = SplitMix64::new(seed);
    let mut picked = BTreeSet::new();
    while picked.len() < budget {
        let x = rng.below(n);
        let y = rng.below(n);
        if x != y {
            picked.insert((x.min(y), x.max(y)));
        }
    }
    (picked.into_iter().collect(), false)
}

/// For one pair: the first lambda with an empty lens, or one member per
/// lambda when all lenses are occupied.
fn examine_pair(
    space: &FiniteMetricSpace,
    (x, y): (usize, usize),
    lambdas: &[f64],
    delta: f64,
) -> std::result::Result<f64, Vec<usize>> {
    let d_xy = space.d(x, y);
    // Points outside every lens are dropped up front: membership forces
    // r + r' <= 1 + 2 delta.
    let candidates: Vec<(usize, f64, f64)> = (0..space.len())
        .map(|z| (z, space.d(x, z) / d_xy, space.d(z, y) / d_xy))
        .filter(|&(_, r, r2)| r + r2 <= 1.0 + 2.0 * delta + 1e-9)
        .collect();
    let mut members = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        match candidates.iter().find(|&&(_, r, r2)| in_lens(r, r2, lambda, delta)) {
            Some(&(z, _, _)) => members.push(z),
            None => return Ok(lambda),
        }
    }
    Err(members)
}

/// Searches the delta grid from the largest value down for one where every
/// examined pair has an empty lens at some grid lambda in `(delta, 1 - delta)`.
/// Returns the certificate for the largest such delta, or a refutation at
/// the largest delta when none works.
pub fn uniform_nonconvexity(
    space: &FiniteMetricSpace,
    opts: &NonConvexityOptions,
) -> Result<NonConvexityVerdict> {
    if opts.delta_grid.is_empty() || opts.lambda_grid.is_empty() {
        return Err(Error::input("delta and lambda grids must be non-empty"));
    }
    if let Some(d) = opts.delta_grid.iter().find(|&&d| !(d > 0.0 && d < 0.5)) {
        return Err(Error::domain(format!("delta must lie in (0, 1/2), got {d}")));
    }
    if let Some(l) = opts.lambda_grid.iter().find(|l| !l.is_finite()) {
        return Err(Error::domain(format!("lambda must be finite, got {l}")));
    }
    if opts.pair_budget == 0 {
        return Err(Error::input("pair budget must be positive"));
    }
    let (pairs, exhaustive) = pick_pairs(space.len(), opts.pair_budget, opts.seed);

    let mut deltas = opts.delta_grid.clone();
    deltas.sort_by(|a, b| b.total_cmp(a));
    deltas.dedup();

    let mut first_refutation = None;
    for &delta in &deltas {
        let lambdas: Vec<f64> = opts
            .lambda_grid
            .iter()
            .copied()
            .filter(|&l| l > delta && l < 1.0 - delta)
            .collect();
        let outcomes: Vec<_> = pairs
            .par_iter()
            .map(|&pair| examine_pair(space, pair, &lambdas, delta))
            .collect();
        let failed = outcomes.iter().position(|o| o.is_err());
        match failed {
            None => {
                let entries = pairs
                    .iter()
                    .zip(outcomes)
                    .map(|(&(x, y), o)| PairLens {
                        x,
                        y,
                        lambda: o.expect("no failures"),
                    })
                    .collect();
                return Ok(NonConvexityVerdict::Certified(NonConvexityCertificate {
                    delta,
                    entries,
                    exhaustive,
                    seed: opts.seed,
                }));
            }
            Some(k) if first_refutation.is_none() => {
                let (x, y) = pairs[k];
                let members = outcomes[k].clone().expect_err("failed pair");
                first_refutation = Some(Refutation {
                    delta,
                    x,
                    y,
                    lambdas,
                    members,
                });
            }
            Some(_) => {}
        }
    }
    Ok(NonConvexityVerdict::Refuted(
        first_refutation.expect("every delta was refuted"),
    ))
}
