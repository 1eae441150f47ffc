//! Finite metric spaces, axiom validation and the power (snowflake) transform.

use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default relative tolerance for [`validate_metric`].
pub const DEFAULT_REL_TOL: f64 = 1e-9;

/// Anything that can measure the distance between two of its points.
///
/// Implemented by [`FiniteMetricSpace`] (points are indices) and by
/// [`SpaceDescriptor`](crate::spaces::SpaceDescriptor) (points are
/// coordinates or 0/1 sequences).
pub trait MetricSpace {
    type Point: Clone + PartialEq + fmt::Debug;

    fn distance(&self, x: &Self::Point, y: &Self::Point) -> Result<f64>;
}

/// A labelled point set with a dense `n x n` distance matrix.
///
/// Both triangles are stored. Constructors reject malformed matrices
/// (non-square, non-finite entries, non-zero diagonal); the remaining
/// axioms are checked by [`validate_metric`].
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl FiniteMetricSpace {
    /// Builds a space from row-major rows, keeping the matrix as given.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Option<Vec<String>>) -> Result<Self> {
        let n = rows.len();
        let mut dist = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::input(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, v) in row.into_iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::input(format!("entry ({i},{j}) is not finite: {v}")));
                }
                if i == j && v != 0.0 {
                    return Err(Error::input(format!("diagonal entry ({i},{i}) is {v}, expected 0")));
                }
                dist.push(v);
            }
        }
        Self::with_labels(n, dist, labels)
    }

    /// Builds a symmetric space by evaluating `f(i, j)` once per unordered pair.
    pub fn from_fn<F>(n: usize, labels: Option<Vec<String>>, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> Result<f64> + Sync,
    {
        let upper: Vec<(usize, usize, f64)> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| f(i, j).map(|d| (i, j, d)))
            .collect::<Result<_>>()?;
        let mut dist = vec![0.0; n * n];
        for (i, j, d) in upper {
            if !d.is_finite() {
                return Err(Error::input(format!("distance ({i},{j}) is not finite: {d}")));
            }
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
        Self::with_labels(n, dist, labels)
    }

    fn with_labels(n: usize, dist: Vec<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::input(format!(
                    "{} labels for {n} points",
                    labels.len()
                )));
            }
            let mut seen = HashSet::with_capacity(n);
            for l in labels {
                if !seen.insert(l.as_str()) {
                    return Err(Error::input(format!("duplicate label {l:?}")));
                }
            }
        }
        Ok(Self { n, dist, labels })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Distance lookup. Panics on out-of-range indices.
    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.dist.chunks(self.n.max(1)).take(self.n)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[i].as_str())
    }

    pub fn max_distance(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(Error::input(format!("point index {i} out of range for {} points", self.n)))
        }
    }

    fn map_entries(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        Self {
            n: self.n,
            dist: self.dist.par_iter().map(|&d| f(d)).collect(),
            labels: self.labels.clone(),
        }
    }

    /// Multiplies every distance by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::domain(format!("scale factor must be positive, got {c}")));
        }
        Ok(self.map_entries(|d| d * c))
    }
}

impl MetricSpace for FiniteMetricSpace {
    type Point = usize;

    fn distance(&self, x: &usize, y: &usize) -> Result<f64> {
        self.check_index(*x)?;
        self.check_index(*y)?;
        Ok(self.d(*x, *y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Asymmetry,
    Negative,
    ZeroOffDiagonal,
    Triangle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// Indices involved in a violation. Triples are `(x, z, y)` with `d(x,y)`
/// the side that is too long.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(untagged)]
pub enum Witness {
    Pair(usize, usize),
    Triple(usize, usize, usize),
}

impl Witness {
    fn sort_key(&self) -> (usize, usize, usize) {
        match *self {
            Witness::Pair(i, j) => (i, j, usize::MAX),
            Witness::Triple(x, z, y) => (x, y, z),
        }
    }
}

/// One failed axiom. `defect` is always positive:
///
/// * asymmetry: `|d(i,j) - d(j,i)|`
/// * negative: `-d(i,j)`
/// * zero off-diagonal: `1` (indicator; there is no natural magnitude)
/// * triangle: `d(x,y) - d(x,z) - d(z,y)`
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationReport {
    pub kind: ViolationKind,
    pub witness: Witness,
    pub defect: f64,
    pub severity: Severity,
}

#[derive(Debug, Clone, Copy)]
pub struct ValidationOptions {
    pub rel_tol: f64,
    /// Report zero distances between distinct points as warnings instead
    /// of errors.
    pub allow_zero_distance: bool,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            rel_tol: DEFAULT_REL_TOL,
            allow_zero_distance: false,
        }
    }
}

/// Checks the metric axioms, returning every violation sorted by witness.
///
/// The triangle inequality is checked for every unordered pair `x < y`
/// against every `z`; each offending pair is reported once with the `z`
/// of largest defect.
pub fn validate_metric(space: &FiniteMetricSpace, rel_tol: f64) -> Vec<ViolationReport> {
    validate_metric_with(
        space,
        ValidationOptions {
            rel_tol,
            ..Default::default()
        },
    )
}

pub fn validate_metric_with(
    space: &FiniteMetricSpace,
    opts: ValidationOptions,
) -> Vec<ViolationReport> {
    let n = space.len();
    let tol = opts.rel_tol.max(0.0);
    let zero_severity = if opts.allow_zero_distance {
        Severity::Warning
    } else {
        Severity::Error
    };

    let mut out: Vec<ViolationReport> = (0..n)
        .into_par_iter()
        .flat_map_iter(|x| {
            let mut local = Vec::new();
            for y in (x + 1)..n {
                let dxy = space.d(x, y);
                let dyx = space.d(y, x);
                if (dxy - dyx).abs() > tol * dxy.abs().max(dyx.abs()) {
                    local.push(ViolationReport {
                        kind: ViolationKind::Asymmetry,
                        witness: Witness::Pair(x, y),
                        defect: (dxy - dyx).abs(),
                        severity: Severity::Error,
                    });
                }
                let low = dxy.min(dyx);
                if low < 0.0 {
                    local.push(ViolationReport {
                        kind: ViolationKind::Negative,
                        witness: Witness::Pair(x, y),
                        defect: -low,
                        severity: Severity::Error,
                    });
                } else if low == 0.0 {
                    local.push(ViolationReport {
                        kind: ViolationKind::ZeroOffDiagonal,
                        witness: Witness::Pair(x, y),
                        defect: 1.0,
                        severity: zero_severity,
                    });
                }

                let mut worst: Option<(usize, f64)> = None;
                for z in 0..n {
                    if z == x || z == y {
                        continue;
                    }
                    let defect = dxy - space.d(x, z) - space.d(z, y);
                    if defect > tol * dxy && worst.is_none_or(|(_, w)| defect > w) {
                        worst = Some((z, defect));
                    }
                }
                if let Some((z, defect)) = worst {
                    local.push(ViolationReport {
                        kind: ViolationKind::Triangle,
                        witness: Witness::Triple(x, z, y),
                        defect,
                        severity: Severity::Error,
                    });
                }
            }
            local
        })
        .collect();

    out.sort_by(|a, b| {
        a.witness
            .sort_key()
            .cmp(&b.witness.sort_key())
            .then(a.kind.cmp(&b.kind))
    });
    out
}

/// True when `validate_metric_with` reports no errors (warnings allowed).
pub fn is_valid_metric(space: &FiniteMetricSpace, opts: ValidationOptions) -> bool {
    validate_metric_with(space, opts)
        .iter()
        .all(|v| v.severity == Severity::Warning)
}

/// Raises every distance to the power `p > 0`. The result is not revalidated.
pub fn power_transform(space: &FiniteMetricSpace, p: f64) -> Result<FiniteMetricSpace> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::domain(format!("exponent must be positive and finite, got {p}")));
    }
    if p == 1.0 {
        return Ok(space.clone());
    }
    Ok(space.map_entries(|d| d.powf(p)))
}

/// Induced subspace on `subset`, preserving its order.
pub fn restrict(space: &FiniteMetricSpace, subset: &[usize]) -> Result<FiniteMetricSpace> {
    let mut seen = HashSet::with_capacity(subset.len());
    for &i in subset {
        space.check_index(i)?;
        if !seen.insert(i) {
            return Err(Error::input(format!("duplicate index {i} in subset")));
        }
    }
    let m = subset.len();
    let mut dist = Vec::with_capacity(m * m);
    for &i in subset {
        dist.extend(subset.iter().map(|&j| space.d(i, j)));
    }
    let labels = space
        .labels
        .as_ref()
        .map(|l| subset.iter().map(|&i| l[i].clone()).collect());
    Ok(FiniteMetricSpace { n: m, dist, labels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(rows: &[&[f64]]) -> FiniteMetricSpace {
        FiniteMetricSpace::from_rows(rows.iter().map(|r| r.to_vec()).collect(), None).unwrap()
    }

    #[test]
    fn equilateral_triangle_is_valid() {
        let s = space(&[&[0.0, 1.0, 1.0], &[1.0, 0.0, 1.0], &[1.0, 1.0, 0.0]]);
        assert!(validate_metric(&s, DEFAULT_REL_TOL).is_empty());
    }

    #[test]
    fn long_side_is_one_triangle_violation() {
        // points a, b, c with d(a,b) = 3, d(a,c) = d(c,b) = 1
        let s = space(&[&[0.0, 3.0, 1.0], &[3.0, 0.0, 1.0], &[1.0, 1.0, 0.0]]);
        let v = validate_metric(&s, DEFAULT_REL_TOL);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Triangle);
        assert_eq!(v[0].witness, Witness::Triple(0, 2, 1));
        assert_eq!(v[0].defect, 1.0);
    }

    #[test]
    fn chordal_circle_is_valid() {
        let n = 50;
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                (t.cos(), t.sin())
            })
            .collect();
        let s = FiniteMetricSpace::from_fn(n, None, |i, j| {
            Ok(((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt())
        })
        .unwrap();
        // brute-force oracle: every ordered triple
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    assert!(s.d(x, y) <= s.d(x, z) + s.d(z, y) + 1e-12);
                }
            }
        }
        assert!(validate_metric(&s, DEFAULT_REL_TOL).is_empty());
    }

    #[test]
    fn malformed_matrices_are_input_errors() {
        let r = FiniteMetricSpace::from_rows(vec![vec![0.0, 1.0], vec![1.0]], None);
        assert!(matches!(r, Err(Error::Input(_))));
        let r = FiniteMetricSpace::from_rows(vec![vec![0.0, f64::NAN], vec![1.0, 0.0]], None);
        assert!(matches!(r, Err(Error::Input(_))));
        let r = FiniteMetricSpace::from_rows(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            Some(vec!["a".into(), "a".into()]),
        );
        assert!(matches!(r, Err(Error::Input(_))));
    }

    #[test]
    fn asymmetry_negative_and_zero_are_reported() {
        let s = space(&[&[0.0, 1.0, -1.0], &[2.0, 0.0, 0.0], &[-1.0, 0.0, 0.0]]);
        let v = validate_metric(&s, DEFAULT_REL_TOL);
        let kinds: Vec<_> = v.iter().map(|r| r.kind).collect();
        assert!(kinds.contains(&ViolationKind::Asymmetry));
        assert!(kinds.contains(&ViolationKind::Negative));
        assert!(kinds.contains(&ViolationKind::ZeroOffDiagonal));
        assert!(v.iter().all(|r| r.defect > 0.0));
    }

    #[test]
    fn zero_distance_can_be_downgraded() {
        let s = space(&[&[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0], &[1.0, 1.0, 0.0]]);
        let strict = validate_metric(&s, DEFAULT_REL_TOL);
        assert_eq!(strict.len(), 1);
        assert_eq!(strict[0].severity, Severity::Error);
        let lax = ValidationOptions {
            allow_zero_distance: true,
            ..Default::default()
        };
        assert!(is_valid_metric(&s, lax));
        assert_eq!(validate_metric_with(&s, lax)[0].severity, Severity::Warning);
    }

    #[test]
    fn power_transform_cases() {
        let s = space(&[&[0.0, 4.0], &[4.0, 0.0]]);
        assert_eq!(power_transform(&s, 1.0).unwrap(), s);
        assert_eq!(power_transform(&s, 0.5).unwrap().d(0, 1), 2.0);
        assert!(matches!(power_transform(&s, 0.0), Err(Error::Domain(_))));
        assert!(matches!(power_transform(&s, -2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn restrict_cases() {
        let s = FiniteMetricSpace::from_fn(5, None, |i, j| Ok((i as f64 - j as f64).abs())).unwrap();
        assert_eq!(restrict(&s, &[0, 1, 2, 3, 4]).unwrap(), s);
        assert_eq!(restrict(&s, &[3]).unwrap().len(), 1);
        let sub = restrict(&s, &[4, 0, 2]).unwrap();
        let idx = [4, 0, 2];
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(sub.d(a, b), s.d(idx[a], idx[b]));
            }
        }
        assert!(matches!(restrict(&s, &[1, 1]), Err(Error::Input(_))));
        assert!(matches!(restrict(&s, &[7]), Err(Error::Input(_))));
    }
}
