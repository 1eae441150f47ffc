//! Critical exponents: the gauge function `phi(p)` of a unit pair, the
//! per-triple exponent at which `d^p` stops satisfying the triangle
//! inequality, and the maximal de-snowflaking exponent of a finite space.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::serialize_ext_f64;
use crate::metric::FiniteMetricSpace;

pub const DEFAULT_ABS_TOL: f64 = 1e-12;

/// Upper end of the bracket search; larger roots are reported as `+inf`.
pub const MAX_BRACKET: f64 = (1u64 << 20) as f64;

const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RootTrace {
    pub iterations: usize,
    /// Width of the final bracket `[lo, hi]`; zero for closed-form exits.
    pub bracket_width: f64,
}

/// Solves `a^p + b^p = 1` for `p >= 1`, where `a, b` are the legs of a
/// triple normalized by its longest side.
///
/// Returns `+inf` when one leg is (within `abs_tol`) as long as the base,
/// and exactly `1` when the triple is degenerate (`a + b = 1`). The
/// bracket `[1, P]` uses the bound `P = ln 2 / -ln max(a, b)`, falling back
/// to doubling `P` from 2; inside it, Halley steps on `ln(a^p + b^p)`
/// are taken while they stay in the bracket, with bisection otherwise. Iteration stops once the residual is
/// at most `abs_tol` and the Newton correction is at most `abs_tol * p`.
pub fn solve_leg_exponent(a: f64, b: f64, abs_tol: f64) -> Result<(f64, RootTrace)> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::domain(format!("legs must be positive, got a = {a}, b = {b}")));
    }
    if a.max(b) > 1.0 + abs_tol {
        return Err(Error::input(format!(
            "legs ({a}, {b}) exceed the base; the longest side must be the base"
        )));
    }
    if a.max(b) >= 1.0 - abs_tol {
        return Ok((f64::INFINITY, RootTrace::default()));
    }
    solve_with_logs(a, b, a.ln(), b.ln(), abs_tol)
}

/// Root solve for legs already checked to be in `(0, 1 - abs_tol)`, with
/// their logarithms precomputed.
fn solve_with_logs(a: f64, b: f64, la: f64, lb: f64, abs_tol: f64) -> Result<(f64, RootTrace)> {
    let g = |p: f64| (p * la).exp() + (p * lb).exp() - 1.0;

    let g1 = a + b - 1.0;
    if g1 < -abs_tol {
        return Err(Error::domain(format!(
            "legs ({a}, {b}) violate the triangle inequality at p = 1"
        )));
    }
    if g1 <= abs_tol {
        return Ok((1.0, RootTrace::default()));
    }

    // Since a^p + b^p <= 2 max(a, b)^p, the root is at most ln 2 / -ln max(a, b).
    let mut lo = 1.0;
    let mut hi = std::f64::consts::LN_2 / -la.max(lb);
    if hi > MAX_BRACKET {
        hi = 2.0;
        while g(hi) >= 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > MAX_BRACKET {
                return Ok((f64::INFINITY, RootTrace::default()));
            }
        }
    }

    // Halley steps on h(p) = ln(a^p + b^p), which is convex, decreasing and
    // nearly linear once one leg dominates.
    let mut p = lo;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (ea, eb) = ((p * la).exp(), (p * lb).exp());
        let sum = ea + eb;
        let gp = sum - 1.0;
        let slope = ea * la + eb * lb;
        if gp > 0.0 {
            lo = p;
        } else {
            hi = p;
        }
        let correction = if slope != 0.0 { gp / slope } else { f64::INFINITY };
        if gp.abs() <= abs_tol && correction.abs() <= abs_tol * p {
            break;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let h = sum.ln();
        let h1 = slope / sum;
        let h2 = (ea * la * la + eb * lb * lb) / sum - h1 * h1;
        let next = p - 2.0 * h * h1 / (2.0 * h1 * h1 - h * h2);
        p = if next > lo && next < hi {
            next
        } else {
            lo + (hi - lo) / 2.0
        };
    }
    Ok((
        p,
        RootTrace {
            iterations,
            bracket_width: hi - lo,
        },
    ))
}

/// Critical exponent of the triple with base `d_xy` (the longest side)
/// and legs `d_xz`, `d_zy`.
pub fn triple_critical_exponent(d_xy: f64, d_xz: f64, d_zy: f64, abs_tol: f64) -> Result<f64> {
    if !(d_xy > 0.0 && d_xz > 0.0 && d_zy > 0.0) {
        return Err(Error::domain("triple distances must be positive"));
    }
    solve_leg_exponent(d_xz / d_xy, d_zy / d_xy, abs_tol).map(|(p, _)| p)
}

/// Triple `(x, z, y)` with base `d(x,y)` and its critical exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripleExponent {
    pub x: usize,
    pub z: usize,
    pub y: usize,
    pub a: f64,
    pub b: f64,
    #[serde(serialize_with = "serialize_ext_f64")]
    pub p_crit: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ExponentTrace {
    pub triples: u64,
    /// Root-solver trace for the witness triple.
    pub witness_root: RootTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalExponentResult {
    #[serde(serialize_with = "serialize_ext_f64")]
    pub p_star: f64,
    pub witness: Option<TripleExponent>,
    pub trace: ExponentTrace,
}

/// Orders the sides of `{i, j, k}` (with `i < j < k`) so the longest comes
/// first, ties going to the smallest index pair. Returns `(x, z, y)`.
fn orient(space: &FiniteMetricSpace, i: usize, j: usize, k: usize) -> (usize, usize, usize) {
    let candidates = [(i, j, k), (i, k, j), (j, k, i)];
    let mut best = candidates[0];
    let mut best_d = space.d(i, j);
    for &(x, y, z) in &candidates[1..] {
        let d = space.d(x, y);
        if d > best_d {
            best = (x, y, z);
            best_d = d;
        }
    }
    (best.0, best.2, best.1)
}

type Key = (usize, usize, usize);

#[derive(Default)]
struct Scan {
    best: Option<(f64, Key, TripleExponent, RootTrace)>,
    invalid: Option<((usize, usize, usize), Error)>,
}

impl Scan {
    fn offer(&mut self, key: (usize, usize, usize), t: TripleExponent, trace: RootTrace) {
        let better = match &self.best {
            None => true,
            Some((p, k, _, _)) => t.p_crit < *p || (t.p_crit == *p && key < *k),
        };
        if better {
            self.best = Some((t.p_crit, key, t, trace));
        }
    }

    fn fail(&mut self, key: (usize, usize, usize), e: Error) {
        if self.invalid.as_ref().is_none_or(|(k, _)| key < *k) {
            self.invalid = Some((key, e));
        }
    }

    fn merge(mut self, other: Scan) -> Scan {
        if let Some((_, key, t, tr)) = other.best {
            self.offer(key, t, tr);
        }
        if let Some((key, e)) = other.invalid {
            self.fail(key, e);
        }
        self
    }

    fn bound(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.0)
    }
}

/// Maximal `p` for which `d^p` is still a metric: the minimum critical
/// exponent over all triples, with the lexicographically smallest triple
/// attaining it as witness.
pub fn desnowflake_exponent(space: &FiniteMetricSpace, abs_tol: f64) -> Result<CriticalExponentResult> {
    let n = space.len();
    let triples = if n < 3 {
        0
    } else {
        (n as u64) * (n as u64 - 1) * (n as u64 - 2) / 6
    };
    let scan = (0..n)
        .into_par_iter()
        .fold(Scan::default, |mut acc, i| {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    let key = (i, j, k);
                    let (x, z, y) = orient(space, i, j, k);
                    let d_xy = space.d(x, y);
                    let (d_xz, d_zy) = (space.d(x, z), space.d(z, y));
                    if !(d_xz > 0.0 && d_zy > 0.0) {
                        acc.fail(key, Error::input(format!(
                            "zero distance inside triple ({x}, {z}, {y})"
                        )));
                        continue;
                    }
                    let (a, b) = (d_xz / d_xy, d_zy / d_xy);
                    if a + b < 1.0 - abs_tol {
                        acc.fail(key, Error::InvalidMetric {
                            x,
                            z,
                            y,
                            d_xy,
                            sum: d_xz + d_zy,
                        });
                        continue;
                    }
                    if a.max(b) >= 1.0 - abs_tol {
                        continue;
                    }
                    // Prune triples whose root is provably above the best so far.
                    let (la, lb) = (a.ln(), b.ln());
                    let bound = acc.bound();
                    if bound.is_finite()
                        && (bound * la).exp() + (bound * lb).exp() > 1.0 + 4.0 * abs_tol
                    {
                        continue;
                    }
                    match solve_with_logs(a, b, la, lb, abs_tol) {
                        Ok((p, trace)) if p.is_finite() => {
                            acc.offer(key, TripleExponent { x, z, y, a, b, p_crit: p }, trace);
                        }
                        Ok(_) => {}
                        Err(e) => acc.fail(key, e),
                    }
                }
            }
            acc
        })
        .reduce(Scan::default, Scan::merge);

    if let Some((_, e)) = scan.invalid {
        return Err(e);
    }
    Ok(match scan.best {
        Some((p, _, witness, root)) => CriticalExponentResult {
            p_star: p,
            witness: Some(witness),
            trace: ExponentTrace {
                triples,
                witness_root: root,
            },
        },
        None => CriticalExponentResult {
            p_star: f64::INFINITY,
            witness: None,
            trace: ExponentTrace {
                triples,
                witness_root: RootTrace::default(),
            },
        },
    })
}

/// A pair `(a, b)` of a finite space, with distances rescaled so that
/// `d(a, b) = 1`.
#[derive(Debug, Clone, Copy)]
pub struct GaugeContext<'a> {
    space: &'a FiniteMetricSpace,
    a: usize,
    b: usize,
    scale: f64,
}

impl<'a> GaugeContext<'a> {
    pub fn new(space: &'a FiniteMetricSpace, a: usize, b: usize) -> Result<Self> {
        space.check_index(a)?;
        space.check_index(b)?;
        if a == b {
            return Err(Error::input("gauge needs two distinct points"));
        }
        let scale = space.d(a, b);
        if !(scale > 0.0) {
            return Err(Error::input(format!("d({a},{b}) must be positive, got {scale}")));
        }
        Ok(Self { space, a, b, scale })
    }

    pub fn pair(&self) -> (usize, usize) {
        (self.a, self.b)
    }

    /// `min_x (d(a,x)^p + d(x,b)^p)` over the space, with the minimizing
    /// point (lowest index on ties).
    pub fn minimize(&self, p: f64) -> Result<(f64, usize)> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::domain(format!("gauge needs p >= 1, got {p}")));
        }
        let mut best = (f64::INFINITY, 0);
        for x in 0..self.space.len() {
            let u = self.space.d(self.a, x) / self.scale;
            let v = self.space.d(x, self.b) / self.scale;
            let val = u.powf(p) + v.powf(p);
            if val < best.0 {
                best = (val, x);
            }
        }
        Ok(best)
    }
}

/// The gauge `phi(p)`; always at most 1 since `x = a` contributes 1.
pub fn gauge(ctx: &GaugeContext<'_>, p: f64) -> Result<f64> {
    ctx.minimize(p).map(|(v, _)| v)
}

/// `phi` on an even grid of `steps` exponents from `p_min` to `p_max`.
pub fn gauge_scan(
    ctx: &GaugeContext<'_>,
    p_min: f64,
    p_max: f64,
    steps: usize,
) -> Result<Vec<(f64, f64)>> {
    if !(p_min >= 1.0 && p_min < p_max && p_max.is_finite()) {
        return Err(Error::input(format!(
            "need 1 <= p_min < p_max, got [{p_min}, {p_max}]"
        )));
    }
    if steps < 2 {
        return Err(Error::input("gauge scan needs at least 2 steps"));
    }
    let h = (p_max - p_min) / (steps - 1) as f64;
    (0..steps)
        .into_par_iter()
        .map(|i| {
            let p = if i + 1 == steps { p_max } else { p_min + h * i as f64 };
            gauge(ctx, p).map(|v| (p, v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{Point, SampleSet, SpaceDescriptor};

    fn segment(n: usize, eps: f64) -> FiniteMetricSpace {
        let e1 = SpaceDescriptor::euclidean(1).unwrap();
        let desc = if eps == 1.0 { e1 } else { SpaceDescriptor::snowflaked(e1, eps).unwrap() };
        let pts = (0..n).map(|i| Point::Coords(vec![i as f64 / (n - 1) as f64])).collect();
        SampleSet::from_points(desc, pts).unwrap().materialize().unwrap()
    }

    #[test]
    fn leg_exponent_closed_forms() {
        assert_eq!(triple_critical_exponent(1.0, 0.5, 0.5, DEFAULT_ABS_TOL).unwrap(), 1.0);
        let h = 0.5f64.sqrt();
        let p = triple_critical_exponent(1.0, h, h, DEFAULT_ABS_TOL).unwrap();
        assert!((p - 2.0).abs() < 1e-10, "{p}");
        assert_eq!(triple_critical_exponent(1.0, 1.0, 0.3, DEFAULT_ABS_TOL).unwrap(), f64::INFINITY);
    }

    #[test]
    fn leg_exponent_errors() {
        assert!(matches!(
            triple_critical_exponent(1.0, 0.3, 0.3, DEFAULT_ABS_TOL),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            triple_critical_exponent(1.0, 1.5, 0.3, DEFAULT_ABS_TOL),
            Err(Error::Input(_))
        ));
        assert!(triple_critical_exponent(0.0, 1.0, 1.0, DEFAULT_ABS_TOL).is_err());
    }

    #[test]
    fn near_ultrametric_triple_caps_to_infinity() {
        let a = 1.0 - 1e-9;
        let (p, _) = solve_leg_exponent(a, a, DEFAULT_ABS_TOL).unwrap();
        // root is ln 2 / -ln a ~ 6.9e8, beyond the bracket cap
        assert_eq!(p, f64::INFINITY);
    }

    #[test]
    fn gauge_examples() {
        let seg = segment(1001, 1.0);
        let ctx = GaugeContext::new(&seg, 0, 1000).unwrap();
        assert_eq!(gauge(&ctx, 1.0).unwrap(), 1.0);
        let (v, x) = ctx.minimize(2.0).unwrap();
        assert!((v - 0.5).abs() < 1e-6);
        assert_eq!(x, 500);

        let snow = segment(1001, 0.5);
        let ctx = GaugeContext::new(&snow, 0, 1000).unwrap();
        assert!((gauge(&ctx, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(gauge(&ctx, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn gauge_scan_grid() {
        let seg = segment(1001, 1.0);
        let ctx = GaugeContext::new(&seg, 0, 1000).unwrap();
        let scan = gauge_scan(&ctx, 1.0, 3.0, 3).unwrap();
        assert_eq!(scan.iter().map(|r| r.0).collect::<Vec<_>>(), vec![1.0, 2.0, 3.0]);
        for (p, phi) in &scan {
            assert!((phi - 2f64.powf(1.0 - p)).abs() < 1e-9);
        }
        let two = gauge_scan(&ctx, 2.0 - 1e-3, 2.0, 2).unwrap();
        assert!(two[0].1 >= two[1].1);
        assert!(gauge_scan(&ctx, 0.5, 2.0, 3).is_err());
        assert!(gauge_scan(&ctx, 2.0, 2.0, 3).is_err());
        assert!(gauge_scan(&ctx, 1.0, 2.0, 1).is_err());
    }

    #[test]
    fn tiny_spaces_have_infinite_exponent() {
        let two = FiniteMetricSpace::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]], None).unwrap();
        let r = desnowflake_exponent(&two, DEFAULT_ABS_TOL).unwrap();
        assert_eq!(r.p_star, f64::INFINITY);
        assert!(r.witness.is_none());
        let empty = FiniteMetricSpace::from_rows(vec![], None).unwrap();
        assert_eq!(desnowflake_exponent(&empty, DEFAULT_ABS_TOL).unwrap().p_star, f64::INFINITY);
    }

    #[test]
    fn invalid_metric_reports_triple() {
        let s = FiniteMetricSpace::from_rows(
            vec![vec![0.0, 3.0, 1.0], vec![3.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]],
            None,
        )
        .unwrap();
        match desnowflake_exponent(&s, DEFAULT_ABS_TOL) {
            Err(Error::InvalidMetric { x, z, y, .. }) => assert_eq!((x, z, y), (0, 2, 1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn segment_snowflake_exponent_is_two() {
        let s = segment(41, 0.5);
        let r = desnowflake_exponent(&s, DEFAULT_ABS_TOL).unwrap();
        // collinear triples are exact between-points of d^2
        assert!((r.p_star - 2.0).abs() < 1e-9, "{}", r.p_star);
        let w = r.witness.unwrap();
        assert_eq!(w.p_crit, r.p_star);
        assert_eq!(r.trace.triples, 41 * 40 * 39 / 6);
    }
}
