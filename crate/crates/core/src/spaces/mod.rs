//! Parametric example spaces: Euclidean and normed spaces, their
//! snowflakes, mixed-exponent products and the two-sided 0/1 shift space.

mod maps;
mod parse;

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, MetricSpace};
use crate::rng::SplitMix64;

pub use maps::{
    parallelogram_defect, parallelogram_defect_pair, similarity_between, verify_map, MapDescriptor,
    MapKind, MapVerification,
};
pub use parse::parse_space_spec;

/// Redraws allowed per point before sampling gives up on distinctness.
pub const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    /// The `q`-norm, `q >= 1`.
    P(f64),
    Sup,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpaceDescriptor {
    Euclidean { dim: usize },
    Normed { dim: usize, norm: Norm },
    /// `base` with every distance raised to `eps`. Never nested: the
    /// constructor folds `snowflake(snowflake(S, a), b)` into
    /// `snowflake(S, a * b)`.
    Snowflaked { base: Box<SpaceDescriptor>, eps: f64 },
    /// `d(x, y) = sum_k |x_k - y_k|^{eps_k}`.
    Mixed { exponents: Vec<f64> },
    /// 0/1 sequences indexed by `-window..=window`, with
    /// `d(x, y) = 2^{max { n : x_n != y_n }}`.
    Shift { window: usize },
}

/// A point of a descriptor space.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Point {
    Coords(Vec<f64>),
    /// Slot `i` holds the sequence entry at index `i - window`.
    Bits(Vec<u8>),
}

impl Point {
    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            Point::Coords(c) => Some(c),
            Point::Bits(_) => None,
        }
    }

    pub fn bits(&self) -> Option<&[u8]> {
        match self {
            Point::Bits(b) => Some(b),
            Point::Coords(_) => None,
        }
    }

    /// Text form used for labels: comma-separated coordinates or a 0/1 string.
    pub fn label(&self) -> String {
        match self {
            Point::Coords(c) => c
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(","),
            Point::Bits(b) => b.iter().map(|&x| if x == 0 { '0' } else { '1' }).collect(),
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("exponent must lie in (0, 1], got {eps}")))
    }
}

impl SpaceDescriptor {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        Ok(Self::Euclidean { dim })
    }

    pub fn normed(dim: usize, norm: Norm) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        if let Norm::P(q) = norm {
            if !(q >= 1.0 && q.is_finite()) {
                return Err(Error::domain(format!("norm exponent must be >= 1, got {q}")));
            }
        }
        Ok(Self::Normed { dim, norm })
    }

    pub fn snowflaked(base: SpaceDescriptor, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        Ok(match base {
            Self::Snowflaked { base, eps: inner } => Self::Snowflaked {
                base,
                eps: inner * eps,
            },
            other => Self::Snowflaked {
                base: Box::new(other),
                eps,
            },
        })
    }

    pub fn mixed(exponents: Vec<f64>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::domain("mixed product needs at least one coordinate"));
        }
        for &e in &exponents {
            check_eps(e)?;
        }
        Ok(Self::Mixed { exponents })
    }

    pub fn shift(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::domain("shift window must be at least 1"));
        }
        Ok(Self::Shift { window })
    }

    /// Number of coordinates, or `None` for the shift space.
    pub fn coordinate_dim(&self) -> Option<usize> {
        match self {
            Self::Euclidean { dim } | Self::Normed { dim, .. } => Some(*dim),
            Self::Snowflaked { base, .. } => base.coordinate_dim(),
            Self::Mixed { exponents } => Some(exponents.len()),
            Self::Shift { .. } => None,
        }
    }

    /// Number of sequence slots (`2 * window + 1`) for the shift space.
    pub fn sequence_len(&self) -> Option<usize> {
        match self {
            Self::Shift { window } => Some(2 * window + 1),
            Self::Snowflaked { base, .. } => base.sequence_len(),
            _ => None,
        }
    }

    /// Is this a normed vector space (distance = norm of the difference)?
    pub fn is_normed(&self) -> bool {
        matches!(self, Self::Euclidean { .. } | Self::Normed { .. })
    }

    /// Vector norm for Euclidean and normed descriptors.
    pub fn norm(&self, v: &[f64]) -> Result<f64> {
        match self {
            Self::Euclidean { .. } => Ok(v.iter().map(|x| x * x).sum::<f64>().sqrt()),
            Self::Normed { norm, .. } => Ok(match norm {
                Norm::Sup => v.iter().fold(0.0, |m, x| m.max(x.abs())),
                Norm::P(q) => v.iter().map(|x| x.abs().powf(*q)).sum::<f64>().powf(1.0 / q),
            }),
            _ => Err(Error::input(format!("{self} is not a normed space"))),
        }
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        match (p, self.coordinate_dim(), self.sequence_len()) {
            (Point::Coords(c), Some(dim), _) => {
                if c.len() != dim {
                    return Err(Error::input(format!(
                        "point has {} coordinates, {self} needs {dim}",
                        c.len()
                    )));
                }
                if let Some(bad) = c.iter().find(|x| !x.is_finite()) {
                    return Err(Error::input(format!("non-finite coordinate {bad}")));
                }
                Ok(())
            }
            (Point::Bits(b), _, Some(len)) => {
                if b.len() != len {
                    return Err(Error::input(format!(
                        "sequence has {} slots, {self} needs {len}",
                        b.len()
                    )));
                }
                if b.iter().any(|&x| x > 1) {
                    return Err(Error::input("sequence entries must be 0 or 1"));
                }
                Ok(())
            }
            _ => Err(Error::input(format!("point kind does not match {self}"))),
        }
    }

    fn raw_distance(&self, x: &Point, y: &Point) -> f64 {
        match (self, x, y) {
            (Self::Euclidean { .. } | Self::Normed { .. }, Point::Coords(a), Point::Coords(b)) => {
                let diff: Vec<f64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
                self.norm(&diff).expect("normed descriptor")
            }
            (Self::Snowflaked { base, eps }, _, _) => base.raw_distance(x, y).powf(*eps),
            (Self::Mixed { exponents }, Point::Coords(a), Point::Coords(b)) => exponents
                .iter()
                .zip(a.iter().zip(b))
                .map(|(e, (p, q))| {
                    let t = (p - q).abs();
                    if *e == 1.0 {
                        t
                    } else {
                        t.powf(*e)
                    }
                })
                .sum(),
            (Self::Shift { window }, Point::Bits(a), Point::Bits(b)) => {
                match (0..a.len()).rev().find(|&i| a[i] != b[i]) {
                    Some(i) => 2f64.powi(i as i32 - *window as i32),
                    None => 0.0,
                }
            }
            _ => unreachable!("points checked against descriptor"),
        }
    }

    /// Pseudo-random points: uniform coordinates in `[0, 1)` per axis, or
    /// one fair bit per sequence slot. Duplicates are redrawn.
    pub fn sample(&self, count: usize, seed: u64) -> Result<SampleSet> {
        let mut rng = SplitMix64::new(seed);
        let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(count);
        let mut points = Vec::with_capacity(count);
        for _ in 0..count {
            let mut redraws = 0;
            loop {
                let p = self.draw(&mut rng);
                let key: Vec<u64> = match &p {
                    Point::Coords(c) => c.iter().map(|x| x.to_bits()).collect(),
                    Point::Bits(b) => b.iter().map(|&x| x as u64).collect(),
                };
                if seen.insert(key) {
                    points.push(p);
                    break;
                }
                redraws += 1;
                if redraws > MAX_REDRAWS {
                    return Err(Error::Resource(format!(
                        "could not draw {count} distinct points from {self}"
                    )));
                }
            }
        }
        Ok(SampleSet {
            descriptor: self.clone(),
            seed: Some(seed),
            points,
        })
    }

    fn draw(&self, rng: &mut SplitMix64) -> Point {
        match (self.coordinate_dim(), self.sequence_len()) {
            (Some(dim), _) => Point::Coords((0..dim).map(|_| rng.unit()).collect()),
            (None, Some(len)) => Point::Bits((0..len).map(|_| rng.bit()).collect()),
            (None, None) => unreachable!("every descriptor has a point kind"),
        }
    }
}

impl MetricSpace for SpaceDescriptor {
    type Point = Point;

    fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.raw_distance(x, y))
    }
}

impl fmt::Display for SpaceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Euclidean { dim } => write!(f, "euclidean:{dim}"),
            Self::Normed { dim, norm } => match norm {
                Norm::Sup => write!(f, "normed({dim},sup)"),
                Norm::P(q) => write!(f, "normed({dim},{q})"),
            },
            Self::Snowflaked { base, eps } => write!(f, "snowflake({base},{eps})"),
            Self::Mixed { exponents } => {
                let parts: Vec<String> = exponents.iter().map(|e| e.to_string()).collect();
                write!(f, "mixed({})", parts.join(","))
            }
            Self::Shift { window } => write!(f, "shift:{window}"),
        }
    }
}

/// Points drawn from (or placed in) a descriptor space.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub descriptor: SpaceDescriptor,
    /// Seed used by [`SpaceDescriptor::sample`]; `None` for hand-built sets.
    pub seed: Option<u64>,
    pub points: Vec<Point>,
}

impl SampleSet {
    pub fn from_points(descriptor: SpaceDescriptor, points: Vec<Point>) -> Result<Self> {
        for p in &points {
            descriptor.check_point(p)?;
        }
        Ok(Self {
            descriptor,
            seed: None,
            points,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Distance matrix of the sample, labelled by point data.
    pub fn materialize(&self) -> Result<FiniteMetricSpace> {
        let labels: Vec<String> = self.points.iter().map(Point::label).collect();
        let mut seen = HashSet::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if !seen.insert(l.as_str()) {
                return Err(Error::input(format!("duplicate point {i}: {l}")));
            }
        }
        let desc = &self.descriptor;
        let pts = &self.points;
        FiniteMetricSpace::from_fn(pts.len(), Some(labels), |i, j| {
            desc.distance(&pts[i], &pts[j])
        })
    }
}
