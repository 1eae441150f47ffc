//! Snowflake analysis of metric spaces: axiom validation, critical
//! exponents, between-points and lens sets, chain refinement, dyadic
//! geodesics and dimension estimates.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod betweenness;
pub mod chains;
pub mod dimension;
pub mod error;
pub mod geodesics;
pub mod exponents;
pub mod io;
pub mod metric;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod spaces;

pub use error::{Error, Result};
pub use metric::{FiniteMetricSpace, MetricSpace};
