//! The composite analysis: validate, look for between-points, compute the
//! de-snowflake exponent, test non-convexity and estimate the dimension,
//! then label the space.

use std::fmt;

use serde::Serialize;

use crate::betweenness::{
    between_summary, uniform_nonconvexity, BetweenSummary, NonConvexityOptions,
    NonConvexityVerdict,
};
use crate::dimension::{box_dimension_auto, DimensionEstimate};
use crate::error::{Error, Result};
use crate::exponents::{desnowflake_exponent, CriticalExponentResult, DEFAULT_ABS_TOL};
use crate::metric::{validate_metric, FiniteMetricSpace, Severity, ViolationReport, DEFAULT_REL_TOL};

/// Exponents this close to 1 are not evidence of snowflaking.
pub const SNOWFLAKE_THRESHOLD: f64 = 1.05;

const MAX_LISTED: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConclusionTag {
    GeodesicLike,
    SnowflakeLike,
    UltrametricLike,
    InvalidMetric,
    Inconclusive,
}

impl ConclusionTag {
    /// 0 for a conclusive label, 2 for an invalid metric, 3 otherwise.
    pub fn exit_code(self) -> i32 {
        match self {
            Self::InvalidMetric => 2,
            Self::Inconclusive => 3,
            _ => 0,
        }
    }
}

impl fmt::Display for ConclusionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::GeodesicLike => "geodesic-like",
            Self::SnowflakeLike => "snowflake-like",
            Self::UltrametricLike => "ultrametric-like",
            Self::InvalidMetric => "invalid-metric",
            Self::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub validate_tol: f64,
    /// Between-point tolerance; `None` scales it with the sample size as
    /// `n^-3` clamped to `[1e-9, 1e-6]`.
    pub between_tol: Option<f64>,
    pub abs_tol: f64,
    pub nonconvexity: NonConvexityOptions,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            validate_tol: DEFAULT_REL_TOL,
            between_tol: None,
            abs_tol: DEFAULT_ABS_TOL,
            nonconvexity: NonConvexityOptions::default(),
        }
    }
}

/// Verdict of the non-convexity search without the per-pair table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonConvexitySummary {
    pub certified: bool,
    pub delta: f64,
    pub pairs: usize,
    /// For a refutation, the pair whose lenses were all occupied.
    pub refuting_pair: Option<(usize, usize)>,
}

impl From<&NonConvexityVerdict> for NonConvexitySummary {
    fn from(v: &NonConvexityVerdict) -> Self {
        match v {
            NonConvexityVerdict::Certified(c) => Self {
                certified: true,
                delta: c.delta,
                pairs: c.entries.len(),
                refuting_pair: None,
            },
            NonConvexityVerdict::Refuted(r) => Self {
                certified: false,
                delta: r.delta,
                pairs: 1,
                refuting_pair: Some((r.x, r.y)),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    /// Space spec or file the points came from.
    pub input: String,
    pub points: usize,
    pub valid_metric: bool,
    pub violation_count: usize,
    /// First few violations in witness order.
    pub violations: Vec<ViolationReport>,
    pub between: Option<BetweenSummary>,
    pub exponent: Option<CriticalExponentResult>,
    pub nonconvexity: Option<NonConvexitySummary>,
    pub dimension: Option<DimensionEstimate>,
    /// Steps that could not run, with the reason.
    pub notes: Vec<String>,
    pub conclusion: ConclusionTag,
}

impl AnalysisReport {
    pub fn exit_code(&self) -> i32 {
        self.conclusion.exit_code()
    }
}

pub fn default_between_tol(n: usize) -> f64 {
    let n = n.max(1) as f64;
    (1.0 / (n * n * n)).clamp(1e-9, 1e-6)
}

/// Runs validate, between, exponent, non-convexity and dimension in that
/// order and assigns the conclusion.
pub fn run_report(
    space: &FiniteMetricSpace,
    input: impl Into<String>,
    opts: &ReportOptions,
) -> Result<AnalysisReport> {
    let violations = validate_metric(space, opts.validate_tol);
    let errors: Vec<ViolationReport> = violations
        .into_iter()
        .filter(|v| v.severity == Severity::Error)
        .collect();
    let mut report = AnalysisReport {
        input: input.into(),
        points: space.len(),
        valid_metric: errors.is_empty(),
        violation_count: errors.len(),
        violations: errors.into_iter().take(MAX_LISTED).collect(),
        between: None,
        exponent: None,
        nonconvexity: None,
        dimension: None,
        notes: Vec::new(),
        conclusion: ConclusionTag::InvalidMetric,
    };
    if !report.valid_metric {
        return Ok(report);
    }

    let tol = opts.between_tol.unwrap_or_else(|| default_between_tol(space.len()));
    let between = between_summary(space, tol, MAX_LISTED);
    let has_between = between.count > 0;
    report.between = Some(between);

    match desnowflake_exponent(space, opts.abs_tol) {
        Ok(r) => report.exponent = Some(r),
        Err(e @ Error::InvalidMetric { .. }) => {
            report.valid_metric = false;
            report.notes.push(format!("exponent: {e}"));
            return Ok(report);
        }
        Err(e) => return Err(e),
    }

    if space.len() >= 2 {
        let v = uniform_nonconvexity(space, &opts.nonconvexity)?;
        report.nonconvexity = Some(NonConvexitySummary::from(&v));
    } else {
        report.notes.push("nonconvexity: fewer than 2 points".into());
    }

    match box_dimension_auto(space) {
        Ok(d) => report.dimension = Some(d),
        Err(e) => report.notes.push(format!("dimension: {e}")),
    }

    let p_star = report.exponent.as_ref().map_or(f64::NAN, |r| r.p_star);
    report.conclusion = if has_between {
        ConclusionTag::GeodesicLike
    } else if p_star == f64::INFINITY {
        ConclusionTag::UltrametricLike
    } else if p_star > SNOWFLAKE_THRESHOLD {
        ConclusionTag::SnowflakeLike
    } else {
        ConclusionTag::Inconclusive
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::parse_space_spec;

    fn sample(spec: &str, n: usize) -> FiniteMetricSpace {
        parse_space_spec(spec)
            .unwrap()
            .sample(n, 11)
            .unwrap()
            .materialize()
            .unwrap()
    }

    #[test]
    fn tags_for_the_three_model_spaces() {
        let opts = ReportOptions::default();
        let snow = run_report(&sample("snowflake(euclidean:2,0.5)", 80), "snow", &opts).unwrap();
        assert_eq!(snow.conclusion, ConclusionTag::SnowflakeLike);
        assert!((snow.exponent.unwrap().p_star - 2.0).abs() < 0.05);

        let flat = run_report(&sample("euclidean:2", 80), "flat", &opts).unwrap();
        assert_eq!(flat.conclusion, ConclusionTag::GeodesicLike);

        let ultra = run_report(&sample("shift:4", 60), "ultra", &opts).unwrap();
        assert_eq!(ultra.conclusion, ConclusionTag::UltrametricLike);
        assert_eq!(ultra.exit_code(), 0);
    }

    #[test]
    fn invalid_metric_stops_early() {
        let bad = FiniteMetricSpace::from_rows(
            vec![vec![0.0, 3.0, 1.0], vec![3.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]],
            None,
        )
        .unwrap();
        let r = run_report(&bad, "bad", &ReportOptions::default()).unwrap();
        assert_eq!(r.conclusion, ConclusionTag::InvalidMetric);
        assert_eq!(r.exit_code(), 2);
        assert!(r.exponent.is_none());
    }

    #[test]
    fn nearly_flat_triangle_is_inconclusive() {
        let rows = vec![
            vec![0.0, 1.0, 0.501],
            vec![1.0, 0.0, 0.501],
            vec![0.501, 0.501, 0.0],
        ];
        let tri = FiniteMetricSpace::from_rows(rows, None).unwrap();
        let r = run_report(&tri, "tri", &ReportOptions::default()).unwrap();
        let p = r.exponent.as_ref().unwrap().p_star;
        assert!(p > 1.0 && p < SNOWFLAKE_THRESHOLD);
        assert_eq!(r.conclusion, ConclusionTag::Inconclusive);
        assert_eq!(r.exit_code(), 3);

        let equilateral = FiniteMetricSpace::from_fn(3, None, |_, _| Ok(1.0)).unwrap();
        let r = run_report(&equilateral, "eq", &ReportOptions::default()).unwrap();
        assert_eq!(r.conclusion, ConclusionTag::UltrametricLike);
    }
}
