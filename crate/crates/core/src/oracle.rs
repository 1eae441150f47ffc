//! Checked placement oracles.
//!
//! A [`RatioOracle`] maps an ordered pair `(x, y)` to a point `z` that
//! should satisfy `d(x,z) = left * d(x,y)` and `d(z,y) = right * d(x,y)`.
//! Every call is checked against those two equations; the chain and
//! geodesic constructions are built on top of it.

use serde::Serialize;
use thiserror::Error;

use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, MetricSpace};
use crate::spaces::{Point, SpaceDescriptor};

/// Default relative tolerance on the two distance equations.
pub const ORACLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
#[error(
    "placement at {location} misses its distance equations: \
     residuals ({left_residual:.3e}, {right_residual:.3e}) exceed {tol:.1e}"
)]
pub struct OracleViolation {
    /// Where in the construction the call happened (step, interval, ...).
    pub location: String,
    pub left_residual: f64,
    pub right_residual: f64,
    pub tol: f64,
}

/// Relative residuals of one placement.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Residual {
    pub left: f64,
    pub right: f64,
}

impl Residual {
    pub fn max(&self) -> f64 {
        self.left.max(self.right)
    }
}

/// A rule producing a candidate point between `x` and `y`.
pub trait Placement<M: MetricSpace> {
    fn place(&self, space: &M, x: &M::Point, y: &M::Point) -> Result<M::Point>;
}

/// Closures `(space, x, y) -> point` are placements.
pub struct FnPlacement<F>(pub F);

impl<M, F> Placement<M> for FnPlacement<F>
where
    M: MetricSpace,
    F: Fn(&M, &M::Point, &M::Point) -> Result<M::Point>,
{
    fn place(&self, space: &M, x: &M::Point, y: &M::Point) -> Result<M::Point> {
        (self.0)(space, x, y)
    }
}

/// `z = x + t (y - x)` in coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear {
    pub t: f64,
}

impl Linear {
    /// Parameter realizing the left ratio on a straight segment of `desc`:
    /// `t = left` for normed and mixed spaces (exact along `eps = 1`
    /// axes), `t = left^(1/eps)` for snowflakes of normed spaces.
    pub fn for_ratio(desc: &SpaceDescriptor, left: f64) -> Result<Self> {
        match desc {
            SpaceDescriptor::Euclidean { .. }
            | SpaceDescriptor::Normed { .. }
            | SpaceDescriptor::Mixed { .. } => Ok(Self { t: left }),
            SpaceDescriptor::Snowflaked { base, eps } if base.is_normed() => Ok(Self {
                t: left.powf(1.0 / eps),
            }),
            _ => Err(Error::input(format!("no straight-line placement in {desc}"))),
        }
    }
}

impl Placement<SpaceDescriptor> for Linear {
    fn place(&self, _: &SpaceDescriptor, x: &Point, y: &Point) -> Result<Point> {
        match (x.coords(), y.coords()) {
            (Some(a), Some(b)) => Ok(Point::Coords(
                a.iter().zip(b).map(|(p, q)| p + self.t * (q - p)).collect(),
            )),
            _ => Err(Error::input("linear placement needs coordinate points")),
        }
    }
}

/// Transports a base triple `(a, z, b)` onto `(x, y)` with the explicit
/// similarity of a Euclidean-based space.
#[derive(Debug, Clone, PartialEq)]
pub struct Similarity {
    pub a: Point,
    pub z: Point,
    pub b: Point,
}

impl Placement<SpaceDescriptor> for Similarity {
    fn place(&self, space: &SpaceDescriptor, x: &Point, y: &Point) -> Result<Point> {
        let map = crate::spaces::similarity_between(space, &self.a, &self.b, x, y)?;
        map.apply(space, &self.z)?
            .ok_or_else(|| Error::input("similarity left the space"))
    }
}

/// Search over a finite space: the point (other than `x`, `y`) minimizing
/// the larger of the two relative residuals; lowest index on ties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub left: f64,
    pub right: f64,
}

impl Placement<FiniteMetricSpace> for Nearest {
    fn place(&self, space: &FiniteMetricSpace, x: &usize, y: &usize) -> Result<usize> {
        let (x, y) = (*x, *y);
        space.check_index(x)?;
        space.check_index(y)?;
        let dxy = space.d(x, y);
        (0..space.len())
            .filter(|&z| z != x && z != y)
            .map(|z| {
                let r = residual(space.d(x, z), space.d(z, y), dxy, self.left, self.right);
                (r.max(), z)
            })
            .min_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)))
            .map(|(_, z)| z)
            .ok_or_else(|| Error::input("search placement needs a third point"))
    }
}

fn residual(d_xz: f64, d_zy: f64, d_xy: f64, left: f64, right: f64) -> Residual {
    Residual {
        left: (d_xz - left * d_xy).abs() / d_xy,
        right: (d_zy - right * d_xy).abs() / d_xy,
    }
}

/// A placement together with the ratios it must realize.
pub struct RatioOracle<'a, M: MetricSpace, P> {
    space: &'a M,
    placement: P,
    left: f64,
    right: f64,
    tol: f64,
}

impl<'a, M: MetricSpace, P: Placement<M>> RatioOracle<'a, M, P> {
    pub fn new(space: &'a M, placement: P, left: f64, right: f64) -> Result<Self> {
        if !(left > 0.0 && right > 0.0 && left.is_finite() && right.is_finite()) {
            return Err(Error::domain(format!(
                "oracle ratios must be positive, got ({left}, {right})"
            )));
        }
        Ok(Self {
            space,
            placement,
            left,
            right,
            tol: ORACLE_TOL,
        })
    }

    /// Oracle for the pair equations `d(x,z) = delta d(x,y)`,
    /// `d(z,y) = (1 - delta) d(x,y)`.
    pub fn between(space: &'a M, placement: P, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
        }
        Self::new(space, placement, delta, 1.0 - delta)
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn space(&self) -> &'a M {
        self.space
    }

    pub fn ratios(&self) -> (f64, f64) {
        (self.left, self.right)
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// Places a point and reports its residuals without judging them.
    pub fn place(&self, x: &M::Point, y: &M::Point) -> Result<(M::Point, Residual)> {
        let d_xy = self.space.distance(x, y)?;
        if !(d_xy > 0.0) {
            return Err(Error::input("oracle needs two distinct points"));
        }
        let z = self.placement.place(self.space, x, y)?;
        let r = residual(
            self.space.distance(x, &z)?,
            self.space.distance(&z, y)?,
            d_xy,
            self.left,
            self.right,
        );
        Ok((z, r))
    }

    /// Places a point, failing with a violation located by `location` when
    /// a residual exceeds the tolerance.
    pub fn place_checked(
        &self,
        x: &M::Point,
        y: &M::Point,
        location: impl FnOnce() -> String,
    ) -> Result<M::Point> {
        let (z, r) = self.place(x, y)?;
        if r.max() > self.tol || r.max().is_nan() {
            return Err(OracleViolation {
                location: location(),
                left_residual: r.left,
                right_residual: r.right,
                tol: self.tol,
            }
            .into());
        }
        Ok(z)
    }
}
