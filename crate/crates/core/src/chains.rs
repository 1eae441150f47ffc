//! Chain refinement by repeated subdivision, p-lengths of chains and
//! sampled quasi-triangle constants.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, MetricSpace};
use crate::oracle::{Placement, RatioOracle};
use crate::rng::SplitMix64;

/// A finite sequence of points `x_0, ..., x_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain<P> {
    pub points: Vec<P>,
}

impl<P> Chain<P> {
    pub fn segments(&self) -> usize {
        self.points.len().saturating_sub(1)
    }
}

/// Replicates a base triple `(a, z, b)` between arbitrary pairs: every
/// placement `z'` between `(x', y')` must satisfy
/// `d(x',z') = d(a,z)/d(a,b) * d(x',y')` and the matching right equation.
pub struct SubdivisionOracle<'a, M: MetricSpace, P> {
    pub a: M::Point,
    pub z: M::Point,
    pub b: M::Point,
    oracle: RatioOracle<'a, M, P>,
}

impl<'a, M: MetricSpace, P: Placement<M>> SubdivisionOracle<'a, M, P> {
    pub fn new(space: &'a M, placement: P, a: M::Point, z: M::Point, b: M::Point) -> Result<Self> {
        let d_ab = space.distance(&a, &b)?;
        if !(d_ab > 0.0) {
            return Err(Error::input("subdivision base needs distinct endpoints"));
        }
        let left = space.distance(&a, &z)? / d_ab;
        let right = space.distance(&z, &b)? / d_ab;
        if !(left > 0.0 && right > 0.0) {
            return Err(Error::input("subdivision point must differ from both endpoints"));
        }
        let oracle = RatioOracle::new(space, placement, left, right)?;
        Ok(Self { a, z, b, oracle })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.oracle = self.oracle.with_tolerance(tol);
        self
    }

    pub fn space(&self) -> &'a M {
        self.oracle.space()
    }

    /// `(d(a,z), d(z,b))` relative to `d(a,b)`.
    pub fn ratios(&self) -> (f64, f64) {
        self.oracle.ratios()
    }

    /// Per-level contraction `c = (d(a,z)^p + d(z,b)^p) / d(a,b)^p`.
    pub fn contraction(&self, p: f64) -> f64 {
        let (l, r) = self.ratios();
        l.powf(p) + r.powf(p)
    }

    fn base(&self) -> Chain<M::Point> {
        Chain {
            points: vec![self.a.clone(), self.z.clone(), self.b.clone()],
        }
    }

    /// Inserts a checked placement between every pair of consecutive points.
    fn refine_once(&self, chain: &Chain<M::Point>, depth: usize) -> Result<Chain<M::Point>> {
        let mut points = Vec::with_capacity(2 * chain.points.len() - 1);
        for (i, w) in chain.points.windows(2).enumerate() {
            points.push(w[0].clone());
            let mid = self
                .oracle
                .place_checked(&w[0], &w[1], || format!("depth {depth}, segment {i}"))?;
            points.push(mid);
        }
        points.extend(chain.points.last().cloned());
        Ok(Chain { points })
    }
}

/// The depth-`k` chain: `(a, z, b)` refined `k` times, `2^(k+1)` segments.
pub fn refine_chain<M: MetricSpace, P: Placement<M>>(
    oracle: &SubdivisionOracle<'_, M, P>,
    k: usize,
) -> Result<Chain<M::Point>> {
    check_depth(k)?;
    let mut chain = oracle.base();
    for depth in 1..=k {
        chain = oracle.refine_once(&chain, depth)?;
    }
    Ok(chain)
}

fn check_depth(k: usize) -> Result<()> {
    if k > 24 {
        return Err(Error::Resource(format!("refinement depth {k} exceeds 24")));
    }
    Ok(())
}

/// `sum_i d(x_i, x_{i-1})^p`.
pub fn p_length<M: MetricSpace>(space: &M, chain: &Chain<M::Point>, p: f64) -> Result<f64> {
    check_exponent(p)?;
    chain
        .points
        .windows(2)
        .map(|w| space.distance(&w[0], &w[1]).map(|d| d.powf(p)))
        .sum()
}

/// `d(x_0, x_m)^p / sum_i d(x_i, x_{i-1})^p`.
pub fn chain_ratio<M: MetricSpace>(space: &M, chain: &Chain<M::Point>, p: f64) -> Result<f64> {
    let total = p_length(space, chain, p)?;
    match (chain.points.first(), chain.points.last()) {
        (Some(s), Some(e)) if total > 0.0 => Ok(space.distance(s, e)?.powf(p) / total),
        _ => Err(Error::input("chain ratio needs a chain of positive length")),
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::domain(format!("exponent must be positive, got {p}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRow {
    pub depth: usize,
    pub segments: usize,
    /// p-length divided by `d(a,b)^p`.
    pub p_length: f64,
    /// `c^(depth + 1)`.
    pub predicted: f64,
    pub relative_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecursionCheck {
    pub p: f64,
    pub contraction: f64,
    pub rows: Vec<DecayRow>,
    pub max_deviation: f64,
}

/// Compares the normalized p-length of every depth `k <= k_max` chain with
/// `c^(k+1)`.
pub fn verify_recursion<M: MetricSpace, P: Placement<M>>(
    oracle: &SubdivisionOracle<'_, M, P>,
    p: f64,
    k_max: usize,
) -> Result<RecursionCheck> {
    check_exponent(p)?;
    check_depth(k_max)?;
    let space = oracle.space();
    let scale = space.distance(&oracle.a, &oracle.b)?.powf(p);
    let c = oracle.contraction(p);
    let mut rows = Vec::with_capacity(k_max + 1);
    let mut chain = oracle.base();
    for depth in 0..=k_max {
        if depth > 0 {
            chain = oracle.refine_once(&chain, depth)?;
        }
        let length = p_length(space, &chain, p)? / scale;
        let predicted = c.powi(depth as i32 + 1);
        rows.push(DecayRow {
            depth,
            segments: chain.segments(),
            p_length: length,
            predicted,
            relative_deviation: (length - predicted).abs() / predicted,
        });
    }
    // depth 0 matches by the definition of c; only rounding separates them
    let max_deviation = rows
        .iter()
        .map(|r| r.relative_deviation)
        .fold(0.0, f64::max);
    Ok(RecursionCheck {
        p,
        contraction: c,
        rows,
        max_deviation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasiTriangleEstimate {
    pub p: f64,
    pub l_hat: f64,
    /// Index chain attaining `l_hat`.
    pub witness: Vec<usize>,
    pub chains_tested: usize,
}

/// Largest `d(x_0,x_m)^p / sum d(x_i,x_{i-1})^p` over `chain_budget` random
/// chains of 1 to `max_len` segments (consecutive points distinct). A lower
/// bound for the best constant `L`.
pub fn estimate_quasi_triangle(
    space: &FiniteMetricSpace,
    p: f64,
    chain_budget: usize,
    max_len: usize,
    seed: u64,
) -> Result<QuasiTriangleEstimate> {
    check_exponent(p)?;
    if chain_budget == 0 || max_len == 0 {
        return Err(Error::input("chain budget and length must be positive"));
    }
    let n = space.len();
    if n < 2 {
        return Err(Error::input("chains need at least two points"));
    }
    let mut rng = SplitMix64::new(seed);
    let mut best = QuasiTriangleEstimate {
        p,
        l_hat: f64::NEG_INFINITY,
        witness: Vec::new(),
        chains_tested: chain_budget,
    };
    let mut chain = Vec::with_capacity(max_len + 1);
    for _ in 0..chain_budget {
        let m = 1 + rng.below(max_len);
        chain.clear();
        chain.push(rng.below(n));
        while chain.len() <= m {
            // draw from the n - 1 points other than the previous one
            let prev = *chain.last().expect("non-empty");
            let mut next = rng.below(n - 1);
            if next >= prev {
                next += 1;
            }
            chain.push(next);
        }
        let total: f64 = chain.windows(2).map(|w| space.d(w[0], w[1]).powf(p)).sum();
        let ratio = space.d(chain[0], chain[m]).powf(p) / total;
        if ratio > best.l_hat {
            best.l_hat = ratio;
            best.witness = chain.clone();
        }
    }
    Ok(best)
}
