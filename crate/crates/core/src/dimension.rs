//! Box-counting dimension, doubling constants and sphere gaps of finite
//! spaces.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;
use crate::rng::SplitMix64;

pub const DEFAULT_SCALE_COUNT: usize = 8;
pub const DEFAULT_CENTER_BUDGET: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxCountRecord {
    pub scale: f64,
    pub count: usize,
    /// Whether the scale entered the fit.
    pub used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionEstimate {
    /// Least-squares slope of `ln N(r)` against `ln(1/r)`.
    pub slope: f64,
    /// Root-mean-square residual of the fit, in log units.
    pub residual: f64,
    pub records: Vec<BoxCountRecord>,
}

/// Insertion radii of the farthest-point traversal started at index 0:
/// entry `k` is the distance from the `k`-th selected point to the ones
/// selected before it (`+inf` for the first). Ties go to the lowest index.
pub fn insertion_radii(space: &FiniteMetricSpace) -> Vec<f64> {
    let n = space.len();
    if n == 0 {
        return Vec::new();
    }
    let mut radii = Vec::with_capacity(n);
    radii.push(f64::INFINITY);
    let mut nearest: Vec<f64> = space.row(0).to_vec();
    let mut taken = vec![false; n];
    taken[0] = true;
    for _ in 1..n {
        let (next, r) = nearest
            .iter()
            .enumerate()
            .filter(|&(i, _)| !taken[i])
            .fold((usize::MAX, f64::NEG_INFINITY), |best, (i, &d)| {
                if d > best.1 {
                    (i, d)
                } else {
                    best
                }
            });
        taken[next] = true;
        radii.push(r);
        for (m, &d) in nearest.iter_mut().zip(space.row(next)) {
            *m = m.min(d);
        }
    }
    radii
}

/// Size of the greedy `r`-net: points whose insertion radius exceeds `r`.
fn net_size(radii: &[f64], r: f64) -> usize {
    radii.iter().filter(|&&x| x > r).count()
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, rms)
}

fn check_scales(scales: &[f64]) -> Result<()> {
    if scales.len() < 3 {
        return Err(Error::input("box counting needs at least 3 scales"));
    }
    if let Some(r) = scales.iter().find(|&&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::input(format!("scales must be positive, got {r}")));
    }
    let lo = scales.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scales.iter().copied().fold(0.0, f64::max);
    if hi < 10.0 * lo {
        return Err(Error::input(format!(
            "scales must span at least a decade, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}

fn fit(records: Vec<BoxCountRecord>) -> DimensionEstimate {
    let (xs, ys): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| r.used)
        .map(|r| (-r.scale.ln(), (r.count as f64).ln()))
        .unzip();
    let (slope, residual) = least_squares(&xs, &ys);
    DimensionEstimate {
        slope: slope.max(0.0),
        residual,
        records,
    }
}

/// Greedy net sizes at the given scales and the fitted slope.
pub fn box_dimension(space: &FiniteMetricSpace, scales: &[f64]) -> Result<DimensionEstimate> {
    check_scales(scales)?;
    if space.is_empty() {
        return Err(Error::input("box counting needs a non-empty space"));
    }
    let radii = insertion_radii(space);
    Ok(fit(scales
        .iter()
        .map(|&scale| BoxCountRecord {
            scale,
            count: net_size(&radii, scale),
            used: true,
        })
        .collect()))
}

/// `count` logarithmically spaced scales from `diam/64` to `diam/4`.
pub fn default_scales(space: &FiniteMetricSpace, count: usize) -> Vec<f64> {
    let diam = match space.max_distance() {
        d if d > 0.0 => d,
        _ => 1.0,
    };
    let (lo, hi) = (diam / 64.0, diam / 4.0);
    let steps = count.max(2) - 1;
    (0..=steps)
        .map(|i| lo * (hi / lo).powf(i as f64 / steps as f64))
        .collect()
}

/// Box dimension over the default window, raised above the sampling floor.
///
/// The lower end is lifted to the scale where the greedy net already holds a
/// quarter of the sample, and the upper end is pushed out to four times the
/// lower end when the two collide, so sparse samples of high-dimensional
/// spaces still get a few informative scales. Saturated scales (every point,
/// or a single point) are left out of the fit as long as at least 3 remain.
pub fn box_dimension_auto(space: &FiniteMetricSpace) -> Result<DimensionEstimate> {
    if space.is_empty() {
        return Err(Error::input("box counting needs a non-empty space"));
    }
    let n = space.len();
    let radii = insertion_radii(space);
    let diam = match space.max_distance() {
        d if d > 0.0 => d,
        _ => 1.0,
    };
    let floor = if n >= 8 { radii[n / 4] } else { 0.0 };
    let lo = (diam / 64.0).max(floor);
    let hi = (diam / 4.0).max(4.0 * lo).min(diam);
    let scales = if lo < hi {
        let steps = DEFAULT_SCALE_COUNT - 1;
        (0..=steps)
            .map(|i| lo * (hi / lo).powf(i as f64 / steps as f64))
            .collect()
    } else {
        default_scales(space, DEFAULT_SCALE_COUNT)
    };
    let informative = |count: usize| count > 1 && count < n;
    let enough = scales
        .iter()
        .filter(|&&r| informative(net_size(&radii, r)))
        .count()
        >= 3;
    Ok(fit(scales
        .iter()
        .map(|&scale| {
            let count = net_size(&radii, scale);
            BoxCountRecord {
                scale,
                count,
                used: !enough || informative(count),
            }
        })
        .collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingEstimate {
    pub c_hat: usize,
    pub radii: Vec<f64>,
    /// Ball `(center, radius)` that needed `c_hat` half-balls.
    pub worst: Option<(usize, f64)>,
    pub balls_tested: usize,
}

/// Sizes of greedy covers of `ball` (centred at `center`) by balls of
/// radius `r` centred at `candidates`. Two rules are tried and the smaller
/// cover is kept: the candidate covering the most uncovered points, and the
/// best candidate reaching the uncovered point farthest from `center`.
/// Centres made redundant by later picks are dropped. Lowest index wins ties.
fn greedy_cover(
    space: &FiniteMetricSpace,
    center: usize,
    candidates: &[usize],
    ball: &[usize],
    r: f64,
) -> usize {
    let reach: Vec<Vec<usize>> = candidates
        .iter()
        .map(|&c| {
            (0..ball.len())
                .filter(|&k| space.d(c, ball[k]) <= r)
                .collect()
        })
        .collect();
    let gain = |covered: &[bool], i: usize| reach[i].iter().filter(|&&k| !covered[k]).count();
    let best_of = |covered: &[bool], admissible: &dyn Fn(usize) -> bool| {
        (0..reach.len())
            .filter(|&i| admissible(i))
            .map(|i| (i, gain(covered, i)))
            .fold((usize::MAX, 0), |b, c| if c.1 > b.1 { c } else { b })
            .0
    };
    let run = |farthest_first: bool| {
        let mut covered = vec![false; ball.len()];
        let mut picks = Vec::new();
        while let Some(far) = (0..ball.len())
            .filter(|&k| !covered[k])
            .fold(None, |b: Option<usize>, k| match b {
                Some(j) if space.d(center, ball[j]) >= space.d(center, ball[k]) => Some(j),
                _ => Some(k),
            })
        {
            let pick = if farthest_first {
                best_of(&covered, &|i| reach[i].contains(&far))
            } else {
                best_of(&covered, &|_| true)
            };
            for &k in &reach[pick] {
                covered[k] = true;
            }
            picks.push(pick);
        }
        prune(&reach, picks, ball.len())
    };
    run(false).min(run(true))
}

/// Drops centres whose points are all covered by the remaining ones, latest
/// picks first.
fn prune(reach: &[Vec<usize>], mut picks: Vec<usize>, points: usize) -> usize {
    let mut multiplicity = vec![0usize; points];
    for &p in &picks {
        for &k in &reach[p] {
            multiplicity[k] += 1;
        }
    }
    let mut i = picks.len();
    while i > 0 {
        i -= 1;
        if reach[picks[i]].iter().all(|&k| multiplicity[k] > 1) {
            for &k in &reach[picks[i]] {
                multiplicity[k] -= 1;
            }
            picks.remove(i);
        }
    }
    picks.len()
}

pub fn doubling_constant(
    space: &FiniteMetricSpace,
    radii: &[f64],
    center_budget: usize,
    seed: u64,
) -> Result<DoublingEstimate> {
    if let Some(r) = radii.iter().find(|&&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::input(format!("radii must be positive, got {r}")));
    }
    if center_budget == 0 {
        return Err(Error::input("center budget must be positive"));
    }
    let n = space.len();
    let centers: Vec<usize> = if n <= center_budget {
        (0..n).collect()
    } else {
        let mut rng = SplitMix64::new(seed);
        let mut picked = BTreeSet::new();
        while picked.len() < center_budget {
            picked.insert(rng.below(n));
        }
        picked.into_iter().collect()
    };
    let jobs: Vec<(f64, usize)> = radii
        .iter()
        .flat_map(|&r| centers.iter().map(move |&c| (r, c)))
        .collect();
    let sizes: Vec<usize> = jobs
        .par_iter()
        .map(|&(r, c)| {
            let ball: Vec<usize> = (0..n).filter(|&x| space.d(c, x) <= r).collect();
            greedy_cover(space, c, &ball, &ball, r / 2.0)
        })
        .collect();
    let mut best: Option<(usize, (usize, f64))> = None;
    for (&(r, c), &size) in jobs.iter().zip(&sizes) {
        if best.is_none_or(|(b, _)| size > b) {
            best = Some((size, (c, r)));
        }
    }
    Ok(DoublingEstimate {
        c_hat: best.map_or(0, |b| b.0),
        radii: radii.to_vec(),
        worst: best.map(|b| b.1),
        balls_tested: jobs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphereGap {
    pub radius: f64,
    /// `min_x |d(x0, x) - r|`.
    pub gap: f64,
    pub nearest: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereReport {
    pub center: usize,
    pub gap_tol: f64,
    pub max_gap: f64,
    /// All gaps within `gap_tol`.
    pub surjective: bool,
    pub rows: Vec<SphereGap>,
}

/// `k` evenly spaced radii from 0 to the largest distance from `x0`.
pub fn auto_radii(space: &FiniteMetricSpace, x0: usize, k: usize) -> Result<Vec<f64>> {
    space.check_index(x0)?;
    if k < 2 {
        return Err(Error::input("need at least 2 radii"));
    }
    let far = space.row(x0).iter().copied().fold(0.0, f64::max);
    Ok((0..k)
        .map(|i| if i + 1 == k { far } else { far * i as f64 / (k - 1) as f64 })
        .collect())
}

/// For every radius, how far the sample misses the sphere `S(x0, r)`.
pub fn sphere_surjectivity(
    space: &FiniteMetricSpace,
    x0: usize,
    radii: &[f64],
    gap_tol: f64,
) -> Result<SphereReport> {
    space.check_index(x0)?;
    let row = space.row(x0);
    let far = row.iter().copied().fold(0.0, f64::max);
    if let Some(r) = radii.iter().find(|&&r| !(r >= 0.0 && r <= far)) {
        return Err(Error::input(format!("radius {r} outside [0, {far}]")));
    }
    let rows: Vec<SphereGap> = radii
        .iter()
        .map(|&radius| {
            let (nearest, gap) = row
                .iter()
                .enumerate()
                .map(|(i, &d)| (i, (d - radius).abs()))
                .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
            SphereGap {
                radius,
                gap,
                nearest,
            }
        })
        .collect();
    let max_gap = rows.iter().map(|g| g.gap).fold(0.0, f64::max);
    Ok(SphereReport {
        center: x0,
        gap_tol,
        max_gap,
        surjective: max_gap <= gap_tol,
        rows,
    })
}
