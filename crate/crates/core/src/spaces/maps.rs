//! Candidate dilations and isometries, checked on samples, plus the
//! parallelogram-law test for norms.

use serde::Serialize;

use super::{Point, SampleSet, SpaceDescriptor};
use crate::error::{Error, Result};
use crate::metric::MetricSpace;

#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    Translation(Vec<f64>),
    /// Row-major square matrix acting on column vectors.
    Linear(Vec<Vec<f64>>),
    CoordinateDilation(Vec<f64>),
    /// `(shift x)_n = x_{n - steps}` on the shift space.
    Shift(i64),
    /// Applied left to right.
    Compose(Vec<MapKind>),
}

/// A map together with the dilation factor it claims.
#[derive(Debug, Clone, PartialEq)]
pub struct MapDescriptor {
    pub kind: MapKind,
    pub factor: f64,
}

impl MapDescriptor {
    pub fn new(kind: MapKind, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::domain(format!("dilation factor must be positive, got {factor}")));
        }
        check_kind(&kind)?;
        Ok(Self { kind, factor })
    }

    /// `self` followed by `next`, claiming the product of the factors.
    pub fn then(self, next: MapDescriptor) -> Self {
        Self {
            kind: MapKind::Compose(vec![self.kind, next.kind]),
            factor: self.factor * next.factor,
        }
    }

    /// Image of `p`, or `None` when a shift pushes a non-zero entry out of
    /// the window.
    pub fn apply(&self, desc: &SpaceDescriptor, p: &Point) -> Result<Option<Point>> {
        desc.check_point(p)?;
        apply_kind(&self.kind, p)
    }
}

fn check_kind(kind: &MapKind) -> Result<()> {
    match kind {
        MapKind::CoordinateDilation(f) if f.iter().any(|&x| !(x > 0.0 && x.is_finite())) => {
            Err(Error::domain("coordinate dilation factors must be positive"))
        }
        MapKind::Linear(m) if m.iter().any(|r| r.len() != m.len()) => {
            Err(Error::input("linear map matrix must be square"))
        }
        MapKind::Compose(parts) => parts.iter().try_for_each(check_kind),
        _ => Ok(()),
    }
}

fn coords_of<'a>(p: &'a Point, what: &str) -> Result<&'a [f64]> {
    p.coords()
        .ok_or_else(|| Error::input(format!("{what} needs a coordinate space")))
}

fn same_len(len: usize, c: &[f64], what: &str) -> Result<()> {
    if len == c.len() {
        Ok(())
    } else {
        Err(Error::input(format!(
            "{what} has dimension {len}, point has {}",
            c.len()
        )))
    }
}

fn apply_kind(kind: &MapKind, p: &Point) -> Result<Option<Point>> {
    Ok(Some(match kind {
        MapKind::Translation(v) => {
            let c = coords_of(p, "translation")?;
            same_len(v.len(), c, "translation")?;
            Point::Coords(c.iter().zip(v).map(|(a, b)| a + b).collect())
        }
        MapKind::Linear(m) => {
            let c = coords_of(p, "linear map")?;
            same_len(m.len(), c, "linear map")?;
            Point::Coords(
                m.iter()
                    .map(|row| row.iter().zip(c).map(|(a, b)| a * b).sum())
                    .collect(),
            )
        }
        MapKind::CoordinateDilation(f) => {
            let c = coords_of(p, "coordinate dilation")?;
            same_len(f.len(), c, "coordinate dilation")?;
            Point::Coords(c.iter().zip(f).map(|(a, b)| a * b).collect())
        }
        MapKind::Shift(steps) => {
            let bits = p
                .bits()
                .ok_or_else(|| Error::input("shift map needs the shift space"))?;
            let len = bits.len() as i64;
            let mut out = vec![0u8; bits.len()];
            for (i, &b) in bits.iter().enumerate() {
                if b == 0 {
                    continue;
                }
                let j = i as i64 + steps;
                if !(0..len).contains(&j) {
                    return Ok(None);
                }
                out[j as usize] = b;
            }
            Point::Bits(out)
        }
        MapKind::Compose(parts) => {
            let mut cur = p.clone();
            for part in parts {
                match apply_kind(part, &cur)? {
                    Some(next) => cur = next,
                    None => return Ok(None),
                }
            }
            cur
        }
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapVerification {
    /// `max |d(f x, f y) - factor * d(x, y)| / (factor * d(x, y))`.
    pub max_defect: f64,
    pub pairs_checked: usize,
    /// Pairs dropped because a shift left the window.
    pub pairs_skipped: usize,
    /// `max_defect <= rel_tol` over at least one pair.
    pub certified: bool,
}

/// Checks `map` as a dilation by its claimed factor on every sample pair.
pub fn verify_map(
    desc: &SpaceDescriptor,
    map: &MapDescriptor,
    samples: &SampleSet,
    rel_tol: f64,
) -> Result<MapVerification> {
    let images: Vec<Option<Point>> = samples
        .points
        .iter()
        .map(|p| map.apply(desc, p))
        .collect::<Result<_>>()?;
    let pts = &samples.points;
    let mut max_defect: f64 = 0.0;
    let mut checked = 0;
    let mut skipped = 0;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let (Some(fi), Some(fj)) = (&images[i], &images[j]) else {
                skipped += 1;
                continue;
            };
            let want = map.factor * desc.distance(&pts[i], &pts[j])?;
            if want == 0.0 {
                continue;
            }
            let got = desc.distance(fi, fj)?;
            max_defect = max_defect.max((got - want).abs() / want);
            checked += 1;
        }
    }
    Ok(MapVerification {
        max_defect,
        pairs_checked: checked,
        pairs_skipped: skipped,
        certified: checked > 0 && max_defect <= rel_tol,
    })
}

/// For Euclidean-based descriptors (and their snowflakes), an explicit
/// similarity `f` with `f(x) = x2`, `f(y) = y2` scaling distances by
/// `d(x2, y2) / d(x, y)`: translate, reflect-and-scale, translate.
///
/// Other normed spaces are supported only when `y2 - x2` is a positive
/// multiple of `y - x`.
pub fn similarity_between(
    desc: &SpaceDescriptor,
    x: &Point,
    y: &Point,
    x2: &Point,
    y2: &Point,
) -> Result<MapDescriptor> {
    let d1 = desc.distance(x, y)?;
    let d2 = desc.distance(x2, y2)?;
    if d1 == 0.0 || d2 == 0.0 {
        return Err(Error::input("similarity needs two pairs of distinct points"));
    }
    let (cx, cy, cx2, cy2) = match (x.coords(), y.coords(), x2.coords(), y2.coords()) {
        (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
        _ => return Err(Error::input("similarity needs a coordinate space")),
    };
    let u: Vec<f64> = cy.iter().zip(cx).map(|(a, b)| a - b).collect();
    let v: Vec<f64> = cy2.iter().zip(cx2).map(|(a, b)| a - b).collect();
    let len_u = euclid(&u);
    let len_v = euclid(&v);
    let scale = len_v / len_u;

    let linear = if euclidean_based(desc) {
        reflection_onto(&u, &v)
            .into_iter()
            .map(|row| row.into_iter().map(|h| h * scale).collect())
            .collect()
    } else {
        let parallel = u
            .iter()
            .zip(&v)
            .all(|(a, b)| (a * scale - b).abs() <= 1e-12 * len_v.max(1.0));
        if !parallel || matches!(desc, SpaceDescriptor::Mixed { .. }) {
            return Err(Error::input(format!(
                "no similarity of {desc} available for these pairs"
            )));
        }
        diagonal(u.len(), scale)
    };
    MapDescriptor::new(
        MapKind::Compose(vec![
            MapKind::Translation(cx.iter().map(|a| -a).collect()),
            MapKind::Linear(linear),
            MapKind::Translation(cx2.to_vec()),
        ]),
        d2 / d1,
    )
}

fn euclidean_based(desc: &SpaceDescriptor) -> bool {
    match desc {
        SpaceDescriptor::Euclidean { .. } => true,
        SpaceDescriptor::Normed { norm, .. } => *norm == super::Norm::P(2.0),
        SpaceDescriptor::Snowflaked { base, .. } => euclidean_based(base),
        _ => false,
    }
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diagonal(n: usize, s: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { s } else { 0.0 }).collect())
        .collect()
}

/// Householder reflection sending the direction of `u` to that of `v`.
fn reflection_onto(u: &[f64], v: &[f64]) -> Vec<Vec<f64>> {
    let (lu, lv) = (euclid(u), euclid(v));
    let w: Vec<f64> = u.iter().zip(v).map(|(a, b)| a / lu - b / lv).collect();
    let ww: f64 = w.iter().map(|x| x * x).sum();
    let n = u.len();
    if ww < 1e-30 {
        return diagonal(n, 1.0);
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let id = if i == j { 1.0 } else { 0.0 };
                    id - 2.0 * w[i] * w[j] / ww
                })
                .collect()
        })
        .collect()
}

/// `|‖u+v‖² + ‖u−v‖² − 2‖u‖² − 2‖v‖²| / (2‖u‖² + 2‖v‖²)`.
pub fn parallelogram_defect_pair(desc: &SpaceDescriptor, u: &[f64], v: &[f64]) -> Result<f64> {
    if !desc.is_normed() {
        return Err(Error::input(format!("{desc} is not a normed space")));
    }
    let sum: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + b).collect();
    let diff: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    let nu = desc.norm(u)?.powi(2);
    let nv = desc.norm(v)?.powi(2);
    let denom = 2.0 * nu + 2.0 * nv;
    if denom == 0.0 {
        return Ok(0.0);
    }
    let lhs = desc.norm(&sum)?.powi(2) + desc.norm(&diff)?.powi(2);
    Ok((lhs - denom).abs() / denom)
}

/// Worst parallelogram defect over all pairs of sample vectors. Zero is
/// necessary for the norm to come from an inner product.
pub fn parallelogram_defect(desc: &SpaceDescriptor, samples: &SampleSet) -> Result<f64> {
    if !desc.is_normed() {
        return Err(Error::input(format!("{desc} is not a normed space")));
    }
    let vecs: Vec<&[f64]> = samples
        .points
        .iter()
        .map(|p| {
            desc.check_point(p)?;
            coords_of(p, "parallelogram test")
        })
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for i in 0..vecs.len() {
        for j in (i + 1)..vecs.len() {
            worst = worst.max(parallelogram_defect_pair(desc, vecs[i], vecs[j])?);
        }
    }
    Ok(worst)
}
