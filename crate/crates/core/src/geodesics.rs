//! Geodesics built on the δ-subdivided dyadic parameter sets `E_n`.
//!
//! `E_0 = {0, 1}`; `E_{k+1}` splits every interval `[s, u]` of `E_k` at
//! `s + δ (u - s)`. A between-oracle places `γ(t)` between `γ(s)` and
//! `γ(u)` at every split.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::MetricSpace;
use crate::oracle::{Placement, RatioOracle};

pub const MAX_SCHEDULE_DEPTH: usize = 20;
pub const MAX_DEFECT_DEPTH: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicSchedule {
    pub delta: f64,
    pub depth: usize,
    /// `E_n`, ascending, `2^n + 1` values.
    pub endpoints: Vec<f64>,
}

impl DyadicSchedule {
    /// Indices of `E_k` inside `E_n` (every `2^(n-k)`-th endpoint).
    pub fn level_step(&self, k: usize) -> usize {
        1 << (self.depth - k.min(self.depth))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

fn check_depth(n: usize) -> Result<()> {
    if n > MAX_SCHEDULE_DEPTH {
        return Err(Error::input(format!(
            "schedule depth {n} exceeds {MAX_SCHEDULE_DEPTH}"
        )));
    }
    Ok(())
}

#[inline]
fn split(s: f64, u: f64, delta: f64) -> f64 {
    s + delta * (u - s)
}

/// Refines a sorted sequence once, inserting `f(left, right)` between
/// every pair of neighbours.
fn refine<T: Clone>(
    items: &[T],
    mut f: impl FnMut(usize, &T, &T) -> Result<T>,
) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(2 * items.len() - 1);
    for (i, w) in items.windows(2).enumerate() {
        out.push(w[0].clone());
        out.push(f(i, &w[0], &w[1])?);
    }
    out.extend(items.last().cloned());
    Ok(out)
}

pub fn build_schedule(delta: f64, n: usize) -> Result<DyadicSchedule> {
    check_delta(delta)?;
    check_depth(n)?;
    let mut endpoints = vec![0.0, 1.0];
    for _ in 0..n {
        endpoints = refine(&endpoints, |_, &s, &u| Ok(split(s, u, delta)))?;
    }
    Ok(DyadicSchedule {
        delta,
        depth: n,
        endpoints,
    })
}

/// `γ` on `E_n` with `γ(0) = x`, `γ(1) = y`.
#[derive(Debug, Clone)]
pub struct GeodesicApprox<'a, M: MetricSpace> {
    space: &'a M,
    pub schedule: DyadicSchedule,
    pub points: Vec<M::Point>,
    pub base_distance: f64,
}

impl<'a, M: MetricSpace> GeodesicApprox<'a, M> {
    pub fn space(&self) -> &'a M {
        self.space
    }

    pub fn params(&self) -> &[f64] {
        &self.schedule.endpoints
    }

    /// `(t, γ(t))` for `t` in `E_k`.
    pub fn level(&self, k: usize) -> impl Iterator<Item = (f64, &M::Point)> {
        let step = self.schedule.level_step(k);
        self.params()
            .iter()
            .copied()
            .zip(&self.points)
            .step_by(step)
    }
}

/// Builds `γ` level by level; each placement is checked against the
/// oracle's equations and a violation names the interval being split.
pub fn construct_geodesic<'a, M: MetricSpace, P: Placement<M>>(
    oracle: &RatioOracle<'a, M, P>,
    x: &M::Point,
    y: &M::Point,
    n: usize,
) -> Result<GeodesicApprox<'a, M>> {
    check_depth(n)?;
    let (delta, rest) = oracle.ratios();
    if (delta + rest - 1.0).abs() > 1e-12 {
        return Err(Error::input(format!(
            "a between-oracle needs ratios summing to 1, got ({delta}, {rest})"
        )));
    }
    check_delta(delta)?;
    let space = oracle.space();
    let base_distance = space.distance(x, y)?;
    if !(base_distance > 0.0) {
        return Err(Error::input("geodesic endpoints must be distinct"));
    }
    let mut nodes: Vec<(f64, M::Point)> = vec![(0.0, x.clone()), (1.0, y.clone())];
    for _ in 0..n {
        nodes = refine(&nodes, |_, (s, ps), (u, pu)| {
            let t = split(*s, *u, delta);
            let z = oracle.place_checked(ps, pu, || format!("interval [{s}, {u}]"))?;
            Ok((t, z))
        })?;
    }
    let (endpoints, points) = nodes.into_iter().unzip();
    Ok(GeodesicApprox {
        space,
        schedule: DyadicSchedule {
            delta,
            depth: n,
            endpoints,
        },
        points,
        base_distance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsometryDeviation {
    /// `max |d(γ(s), γ(t)) - |s - t| d(x,y)| / d(x,y)` over `E_n`.
    pub max_defect: f64,
    pub worst_pair: (f64, f64),
    pub pairs: u64,
    /// Prefix maxima: entry `k` covers all pairs among the first `k + 1`
    /// parameters.
    #[serde(skip)]
    pub running: Vec<f64>,
}

/// Exhaustive pairwise defect; limited to depth 12.
pub fn isometry_defect<M>(g: &GeodesicApprox<'_, M>) -> Result<IsometryDeviation>
where
    M: MetricSpace + Sync,
    M::Point: Sync,
{
    if g.schedule.depth > MAX_DEFECT_DEPTH {
        return Err(Error::Resource(format!(
            "pairwise defect at depth {} needs {} pairs; restrict to depth <= {MAX_DEFECT_DEPTH} \
             or subsample the parameters",
            g.schedule.depth,
            g.points.len() * g.points.len() / 2
        )));
    }
    let ts = g.params();
    let base = g.base_distance;
    // row k: worst defect against every earlier parameter
    let rows: Vec<(f64, usize)> = (0..ts.len())
        .into_par_iter()
        .map(|k| {
            let mut worst = (0.0, 0);
            for j in 0..k {
                let d = g.space.distance(&g.points[j], &g.points[k])?;
                let defect = (d - (ts[k] - ts[j]) * base).abs() / base;
                if defect > worst.0 {
                    worst = (defect, j);
                }
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    let mut running = Vec::with_capacity(rows.len());
    let mut best = (0.0, 0, 0);
    for (k, &(defect, j)) in rows.iter().enumerate() {
        if defect > best.0 {
            best = (defect, j, k);
        }
        running.push(best.0);
    }
    let n = ts.len() as u64;
    Ok(IsometryDeviation {
        max_defect: best.0,
        worst_pair: (ts[best.1], ts[best.2]),
        pairs: n * n.saturating_sub(1) / 2,
        running,
    })
}

/// Worst `|d(γ(s),γ(t)) + d(γ(t),γ(u)) - d(γ(s),γ(u))| / d(γ(s),γ(u))`
/// over every split `t` of a parent interval `[s, u]`.
pub fn adjacent_additivity_defect<M: MetricSpace>(g: &GeodesicApprox<'_, M>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 1..=g.schedule.depth {
        let half = g.schedule.level_step(k);
        let mut s = 0;
        while s + 2 * half < g.points.len() {
            let (ps, pt, pu) = (&g.points[s], &g.points[s + half], &g.points[s + 2 * half]);
            let whole = g.space.distance(ps, pu)?;
            let parts = g.space.distance(ps, pt)? + g.space.distance(pt, pu)?;
            worst = worst.max((parts - whole).abs() / whole);
            s += 2 * half;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::oracle::{FnPlacement, Linear};
    use crate::spaces::{Point, SpaceDescriptor};

    fn c(v: &[f64]) -> Point {
        Point::Coords(v.to_vec())
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(build_schedule(0.5, 2).unwrap().endpoints, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(build_schedule(1.0 / 3.0, 1).unwrap().endpoints, vec![0.0, 1.0 / 3.0, 1.0]);
        let e2 = build_schedule(1.0 / 3.0, 2).unwrap().endpoints;
        let want = [0.0, 1.0 / 9.0, 1.0 / 3.0, 1.0 / 3.0 + 2.0 / 9.0, 1.0];
        for (a, b) in e2.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(build_schedule(0.3, 0).unwrap().endpoints, vec![0.0, 1.0]);
        assert!(matches!(build_schedule(1.0, 2), Err(Error::Domain(_))));
        assert!(build_schedule(0.5, 21).is_err());
    }

    #[test]
    fn straight_line_in_the_plane() {
        let e2 = SpaceDescriptor::euclidean(2).unwrap();
        let delta = 1.0 / 3.0;
        let o = RatioOracle::between(&e2, Linear { t: delta }, delta).unwrap();
        let g = construct_geodesic(&o, &c(&[0.0, 0.0]), &c(&[1.0, 1.0]), 8).unwrap();
        assert_eq!(g.points.len(), 257);
        for (t, p) in g.params().iter().zip(&g.points) {
            let p = p.coords().unwrap();
            assert!((p[0] - t).abs() < 1e-12 && (p[1] - t).abs() < 1e-12);
        }
        let dev = isometry_defect(&g).unwrap();
        assert!(dev.max_defect <= 1e-12, "{}", dev.max_defect);
        assert!(adjacent_additivity_defect(&g).unwrap() <= 1e-12);
    }

    #[test]
    fn naive_oracle_on_snowflake_is_rejected() {
        let snow = SpaceDescriptor::snowflaked(SpaceDescriptor::euclidean(1).unwrap(), 0.5).unwrap();
        let o = RatioOracle::between(&snow, Linear { t: 0.25 }, 0.25).unwrap();
        match construct_geodesic(&o, &c(&[0.0]), &c(&[1.0]), 3) {
            Err(Error::Oracle(v)) => assert_eq!(v.location, "interval [0, 1]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn corrupted_oracle_shows_in_the_defect() {
        let e1 = SpaceDescriptor::euclidean(1).unwrap();
        let off = FnPlacement(|_: &SpaceDescriptor, x: &Point, y: &Point| {
            let (a, b) = (x.coords().unwrap()[0], y.coords().unwrap()[0]);
            Ok(Point::Coords(vec![a + 0.5 * 1.01 * (b - a)]))
        });
        let o = RatioOracle::between(&e1, off, 0.5).unwrap().with_tolerance(0.02);
        let g = construct_geodesic(&o, &c(&[0.0]), &c(&[1.0]), 4).unwrap();
        assert!(isometry_defect(&g).unwrap().max_defect >= 1e-3);
    }

    #[test]
    fn depth_one_defect_is_the_oracle_residual() {
        let e1 = SpaceDescriptor::euclidean(1).unwrap();
        let o = RatioOracle::between(&e1, Linear { t: 0.3 }, 0.25)
            .unwrap()
            .with_tolerance(0.1);
        let g = construct_geodesic(&o, &c(&[0.0]), &c(&[2.0]), 1).unwrap();
        let (_, r) = o.place(&c(&[0.0]), &c(&[2.0])).unwrap();
        let dev = isometry_defect(&g).unwrap();
        assert!((dev.max_defect - r.max()).abs() < 1e-15);
        assert_eq!(dev.running.len(), 3);
    }

    #[test]
    fn deep_defect_is_a_resource_error() {
        let e1 = SpaceDescriptor::euclidean(1).unwrap();
        let o = RatioOracle::between(&e1, Linear { t: 0.5 }, 0.5).unwrap();
        let g = construct_geodesic(&o, &c(&[0.0]), &c(&[1.0]), 13).unwrap();
        assert!(matches!(isometry_defect(&g), Err(Error::Resource(_))));
    }
}
