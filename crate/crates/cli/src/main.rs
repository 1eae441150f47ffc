//! `snowprobe`: command-line front end for the snowprobe library.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use snowprobe_core::betweenness::{
    between_summary, uniform_nonconvexity, NonConvexityOptions, NonConvexityVerdict,
    DEFAULT_BETWEEN_TOL, DEFAULT_PAIR_BUDGET,
};
use snowprobe_core::chains::{estimate_quasi_triangle, verify_recursion, SubdivisionOracle};
use snowprobe_core::dimension::{
    auto_radii, box_dimension, box_dimension_auto, doubling_constant, sphere_surjectivity,
    DEFAULT_CENTER_BUDGET,
};
use snowprobe_core::exponents::{
    desnowflake_exponent, gauge_scan, GaugeContext, DEFAULT_ABS_TOL,
};
use snowprobe_core::geodesics::{adjacent_additivity_defect, construct_geodesic, isometry_defect};
use snowprobe_core::io::{format_float, read_path, to_canonical_json, to_json_value};
use snowprobe_core::metric::{validate_metric_with, Severity, ValidationOptions, DEFAULT_REL_TOL};
use snowprobe_core::oracle::{Linear, Nearest, RatioOracle};
use snowprobe_core::report::{run_report, ReportOptions};
use snowprobe_core::spaces::{parse_space_spec, Point, SpaceDescriptor};
use snowprobe_core::{Error, FiniteMetricSpace};

#[derive(Parser)]
#[command(name = "snowprobe", version, about = "Snowflake structure analysis of metric spaces")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Metric space file (JSON, or CSV by extension).
    #[arg(long = "in", global = true, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Space spec to sample instead of reading a file, e.g. `snowflake(euclidean:2,0.5)`.
    #[arg(long, global = true, value_name = "SPEC")]
    space: Option<String>,
    /// Sample size for `--space`.
    #[arg(long, global = true, default_value_t = 200)]
    count: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance; its meaning and default depend on the command.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Emit JSON instead of text or CSV.
    #[arg(long, global = true)]
    json: bool,
    /// Write output here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a space spec and write its distance matrix.
    Generate,
    /// Check the metric axioms.
    Validate {
        /// Treat zero distances between distinct points as warnings.
        #[arg(long)]
        allow_zero: bool,
    },
    /// Largest exponent p with d^p still a metric.
    Exponent,
    /// Gauge curve phi(p) for one base pair.
    Gauge {
        #[arg(long)]
        a: usize,
        #[arg(long)]
        b: usize,
        #[arg(long, default_value_t = 1.0)]
        pmin: f64,
        #[arg(long, default_value_t = 6.0)]
        pmax: f64,
        #[arg(long, default_value_t = 51)]
        steps: usize,
    },
    /// Between-points up to a relative tolerance.
    Between {
        /// Certificates to list.
        #[arg(long, default_value_t = 10)]
        limit: usize,
    },
    /// Uniform non-convexity search over lens sets.
    Nonconvexity {
        #[arg(long, default_value_t = DEFAULT_PAIR_BUDGET)]
        pairs: usize,
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
    },
    /// Chain refinement on a segment of a space spec, or quasi-triangle
    /// estimates on a file.
    Chains {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 10)]
        depth: usize,
        /// Segment start (defaults to the origin).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        from: Option<Vec<f64>>,
        /// Segment end (defaults to the first unit vector).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        to: Option<Vec<f64>>,
        /// Straight-line parameter of the subdivision point.
        #[arg(long, default_value_t = 0.5)]
        at: f64,
        /// Random chains for the quasi-triangle estimate.
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        /// Longest random chain, in segments.
        #[arg(long, default_value_t = 8)]
        max_len: usize,
    },
    /// Dyadic geodesic between two points.
    Geodesic {
        /// Coordinates for `--space`, a point index for `--in`.
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        to: String,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
    /// Box-counting dimension and doubling constant.
    Dimension {
        #[arg(long, value_delimiter = ',')]
        scales: Option<Vec<f64>>,
        /// Doubling radii (defaults to diam/16, diam/8, diam/4).
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        #[arg(long, default_value_t = DEFAULT_CENTER_BUDGET)]
        centers: usize,
    },
    /// Distance-sphere gaps around one point.
    Spheres {
        #[arg(long, default_value_t = 0)]
        center: usize,
        /// `auto:K` or a comma-separated list.
        #[arg(long, default_value = "auto:64")]
        radii: String,
    },
    /// Full analysis with a conclusion tag.
    Report {
        #[arg(long)]
        between_tol: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_PAIR_BUDGET)]
        pairs: usize,
    },
}

/// Rendered output and the exit code to finish with.
struct Outcome {
    body: String,
    code: u8,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self { body, code: 0 }
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which is reserved for invalid metrics.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(outcome) => match write_out(&cli.global, &outcome.body) {
            Ok(()) => ExitCode::from(outcome.code),
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
        Err(e) => {
            eprintln!("error: {e:#}");
            let invalid = e
                .chain()
                .any(|c| matches!(c.downcast_ref::<Error>(), Some(Error::InvalidMetric { .. })));
            ExitCode::from(if invalid { 2 } else { 1 })
        }
    }
}

fn write_out(g: &Global, body: &str) -> anyhow::Result<()> {
    match &g.out {
        Some(path) => fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn canonical<T: Serialize>(value: &T) -> anyhow::Result<String> {
    Ok(to_canonical_json(&serde_json::to_value(value)?))
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::Generate => generate(g),
        Command::Validate { allow_zero } => validate(g, *allow_zero),
        Command::Exponent => exponent(g),
        Command::Gauge {
            a,
            b,
            pmin,
            pmax,
            steps,
        } => gauge(g, *a, *b, *pmin, *pmax, *steps),
        Command::Between { limit } => between(g, *limit),
        Command::Nonconvexity {
            pairs,
            deltas,
            lambdas,
        } => nonconvexity(g, *pairs, deltas.clone(), lambdas.clone()),
        Command::Chains {
            p,
            depth,
            from,
            to,
            at,
            budget,
            max_len,
        } => chains(g, *p, *depth, from.as_deref(), to.as_deref(), *at, *budget, *max_len),
        Command::Geodesic {
            from,
            to,
            delta,
            depth,
        } => geodesic(g, from, to, *delta, *depth),
        Command::Dimension {
            scales,
            radii,
            centers,
        } => dimension(g, scales.as_deref(), radii.as_deref(), *centers),
        Command::Spheres { center, radii } => spheres(g, *center, radii),
        Command::Report { between_tol, pairs } => report(g, *between_tol, *pairs),
    }
}

fn descriptor(g: &Global) -> anyhow::Result<SpaceDescriptor> {
    let spec = g.space.as_deref().ok_or_else(|| anyhow!("this command needs --space"))?;
    parse_space_spec(spec).with_context(|| format!("parsing space spec {spec:?}"))
}

/// The finite space to analyse and a name for it.
fn load(g: &Global) -> anyhow::Result<(FiniteMetricSpace, String)> {
    match (&g.input, &g.space) {
        (Some(_), Some(_)) => bail!("give either --in or --space, not both"),
        (Some(path), None) => {
            let space = read_path(path).with_context(|| format!("reading {}", path.display()))?;
            Ok((space, path.display().to_string()))
        }
        (None, Some(_)) => {
            let desc = descriptor(g)?;
            let space = desc.sample(g.count, g.seed)?.materialize()?;
            Ok((space, format!("{desc} (count {}, seed {})", g.count, g.seed)))
        }
        (None, None) => bail!("give --in FILE or --space SPEC"),
    }
}

fn generate(g: &Global) -> anyhow::Result<Outcome> {
    let desc = descriptor(g)?;
    let space = desc.sample(g.count, g.seed)?.materialize()?;
    Ok(Outcome::ok(to_canonical_json(&to_json_value(
        &space,
        Some(desc.to_string()),
    ))))
}

fn validate(g: &Global, allow_zero: bool) -> anyhow::Result<Outcome> {
    let (space, input) = load(g)?;
    let opts = ValidationOptions {
        rel_tol: g.tol.unwrap_or(DEFAULT_REL_TOL),
        allow_zero_distance: allow_zero,
    };
    let violations = validate_metric_with(&space, opts);
    let errors = violations.iter().filter(|v| v.severity == Severity::Error).count();
    let code = if errors > 0 { 2 } else { 0 };
    let body = if g.json {
        to_canonical_json(&json!({
            "input": input,
            "points": space.len(),
            "valid": errors == 0,
            "violations": serde_json::to_value(&violations)?,
        }))
    } else {
        let mut s = format!(
            "{input}: {} points, {}\n",
            space.len(),
            if errors == 0 { "valid metric" } else { "NOT a metric" }
        );
        for v in violations.iter().take(20) {
            s += &format!(
                "{:?} {:?} at {:?}: defect {}\n",
                v.severity, v.kind, v.witness, v.defect
            );
        }
        if violations.len() > 20 {
            s += &format!("... {} more\n", violations.len() - 20);
        }
        s
    };
    Ok(Outcome { body, code })
}

fn exponent(g: &Global) -> anyhow::Result<Outcome> {
    let (space, input) = load(g)?;
    let r = desnowflake_exponent(&space, g.tol.unwrap_or(DEFAULT_ABS_TOL))?;
    // The witness is listed as base pair (i, j) with intermediate point k.
    let witness = r.witness.map(|w| {
        json!({"i": w.x, "j": w.y, "k": w.z, "a": w.a, "b": w.b, "p_crit": ext(w.p_crit)})
    });
    let body = if g.json {
        to_canonical_json(&json!({
            "input": input,
            "p_star": ext(r.p_star),
            "witness": witness,
            "trace": serde_json::to_value(r.trace)?,
        }))
    } else {
        let mut s = format!("p* = {}\n", r.p_star);
        if let Some(w) = r.witness {
            s += &format!(
                "witness: d({},{}) against d({},{}) = {} and d({},{}) = {} (ratios)\n",
                w.x, w.y, w.x, w.z, w.a, w.z, w.y, w.b
            );
        }
        s
    };
    Ok(Outcome::ok(body))
}

fn ext(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn gauge(g: &Global, a: usize, b: usize, pmin: f64, pmax: f64, steps: usize) -> anyhow::Result<Outcome> {
    let (space, _) = load(g)?;
    let ctx = GaugeContext::new(&space, a, b)?;
    let rows = gauge_scan(&ctx, pmin, pmax, steps)?;
    let body = if g.json {
        let rows: Vec<Value> = rows.iter().map(|&(p, phi)| json!({"p": p, "phi": phi})).collect();
        to_canonical_json(&json!({"a": a, "b": b, "rows": rows}))
    } else {
        let mut s = String::from("p,phi\n");
        for (p, phi) in rows {
            s += &format!("{},{}\n", format_float(p), format_float(phi));
        }
        s
    };
    Ok(Outcome::ok(body))
}

fn between(g: &Global, limit: usize) -> anyhow::Result<Outcome> {
    let (space, _) = load(g)?;
    let summary = between_summary(&space, g.tol.unwrap_or(DEFAULT_BETWEEN_TOL), limit);
    let body = if g.json {
        canonical(&summary)?
    } else {
        let mut s = format!(
            "{} between-point triples at relative tolerance {}\n",
            summary.count, summary.rel_tol
        );
        for c in &summary.certificates {
            s += &format!(
                "{} between {} and {}: ratio {}, relative defect {}\n",
                c.z, c.x, c.y, c.ratio, c.relative_defect
            );
        }
        if let (0, Some(c)) = (summary.count, &summary.closest) {
            s += &format!(
                "closest: {} between {} and {} with relative defect {}\n",
                c.z, c.x, c.y, c.relative_defect
            );
        }
        s
    };
    Ok(Outcome::ok(body))
}

fn nonconvexity_options(
    g: &Global,
    pairs: usize,
    deltas: Option<Vec<f64>>,
    lambdas: Option<Vec<f64>>,
) -> NonConvexityOptions {
    let defaults = NonConvexityOptions::default();
    NonConvexityOptions {
        delta_grid: deltas.unwrap_or(defaults.delta_grid),
        lambda_grid: lambdas.unwrap_or(defaults.lambda_grid),
        pair_budget: pairs,
        seed: g.seed,
    }
}

fn nonconvexity(
    g: &Global,
    pairs: usize,
    deltas: Option<Vec<f64>>,
    lambdas: Option<Vec<f64>>,
) -> anyhow::Result<Outcome> {
    let (space, _) = load(g)?;
    let verdict = uniform_nonconvexity(&space, &nonconvexity_options(g, pairs, deltas, lambdas))?;
    let body = if g.json {
        canonical(&verdict)?
    } else {
        match &verdict {
            NonConvexityVerdict::Certified(c) => format!(
                "certified at delta = {} over {} pairs ({})\n",
                c.delta,
                c.entries.len(),
                if c.exhaustive { "all pairs" } else { "sampled" }
            ),
            NonConvexityVerdict::Refuted(r) => format!(
                "refuted at delta = {}: every lens of ({}, {}) is occupied\n",
                r.delta, r.x, r.y
            ),
        }
    };
    Ok(Outcome::ok(body))
}

#[allow(clippy::too_many_arguments)]
fn chains(
    g: &Global,
    p: f64,
    depth: usize,
    from: Option<&[f64]>,
    to: Option<&[f64]>,
    at: f64,
    budget: usize,
    max_len: usize,
) -> anyhow::Result<Outcome> {
    if g.input.is_some() {
        let (space, _) = load(g)?;
        let est = estimate_quasi_triangle(&space, p, budget, max_len, g.seed)?;
        let body = if g.json {
            canonical(&est)?
        } else {
            format!(
                "L_hat = {} at p = {} over {} chains (witness {:?})\n",
                est.l_hat, est.p, est.chains_tested, est.witness
            )
        };
        return Ok(Outcome::ok(body));
    }
    let desc = descriptor(g)?;
    let dim = desc
        .coordinate_dim()
        .ok_or_else(|| anyhow!("chains need a coordinate space, got {desc}"))?;
    let a = from.map_or_else(|| vec![0.0; dim], <[f64]>::to_vec);
    let b = to.map_or_else(
        || {
            let mut e = vec![0.0; dim];
            e[0] = 1.0;
            e
        },
        <[f64]>::to_vec,
    );
    let z: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + at * (y - x)).collect();
    let oracle = SubdivisionOracle::new(
        &desc,
        Linear { t: at },
        Point::Coords(a),
        Point::Coords(z),
        Point::Coords(b),
    )?;
    let check = verify_recursion(&oracle, p, depth)?;
    let body = if g.json {
        canonical(&check)?
    } else {
        let mut s = String::from("depth,segments,p_length,predicted,relative_deviation\n");
        for r in &check.rows {
            s += &format!(
                "{},{},{},{},{}\n",
                r.depth,
                r.segments,
                format_float(r.p_length),
                format_float(r.predicted),
                format_float(r.relative_deviation)
            );
        }
        s
    };
    Ok(Outcome::ok(body))
}

fn parse_coords(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad coordinate {t:?}")))
        .collect()
}

/// Rows of `(t, point, running defect)` as JSON or CSV.
fn geodesic_output(
    g: &Global,
    params: &[f64],
    points: Vec<Value>,
    running: Option<&[f64]>,
    summary: Value,
) -> anyhow::Result<String> {
    if g.json {
        let rows: Vec<Value> = params
            .iter()
            .zip(points)
            .enumerate()
            .map(|(k, (&t, point))| {
                json!({"t": t, "point": point, "running_defect": running.map(|r| r[k])})
            })
            .collect();
        let mut out = summary;
        out["rows"] = Value::Array(rows);
        return Ok(to_canonical_json(&out));
    }
    let mut s = String::from("t,point,running_defect\n");
    for (k, (&t, point)) in params.iter().zip(points).enumerate() {
        let point = match point {
            Value::Array(xs) => xs.iter().map(Value::to_string).collect::<Vec<_>>().join(" "),
            other => other.to_string(),
        };
        let defect = running.map_or(String::new(), |r| format_float(r[k]));
        s += &format!("{},{point},{defect}\n", format_float(t));
    }
    Ok(s)
}

fn geodesic(g: &Global, from: &str, to: &str, delta: f64, depth: usize) -> anyhow::Result<Outcome> {
    let oracle_tol = g.tol;
    if g.input.is_some() {
        let (space, _) = load(g)?;
        let x: usize = from.parse().context("--from must be a point index with --in")?;
        let y: usize = to.parse().context("--to must be a point index with --in")?;
        let mut oracle = RatioOracle::between(&space, Nearest { left: delta, right: 1.0 - delta }, delta)?;
        if let Some(t) = oracle_tol {
            oracle = oracle.with_tolerance(t);
        }
        let geo = construct_geodesic(&oracle, &x, &y, depth)?;
        let additivity = adjacent_additivity_defect(&geo)?;
        let iso = isometry_defect(&geo).ok();
        let summary = json!({
            "delta": delta,
            "depth": depth,
            "additivity_defect": additivity,
            "isometry": iso.as_ref().map(serde_json::to_value).transpose()?,
        });
        let points = geo.points.iter().map(|&i| json!(i)).collect();
        let body = geodesic_output(g, geo.params(), points, iso.as_ref().map(|d| &d.running[..]), summary)?;
        return Ok(Outcome::ok(body));
    }
    let desc = descriptor(g)?;
    let (x, y) = (Point::Coords(parse_coords(from)?), Point::Coords(parse_coords(to)?));
    desc.check_point(&x)?;
    desc.check_point(&y)?;
    let mut oracle = RatioOracle::between(&desc, Linear::for_ratio(&desc, delta)?, delta)?;
    if let Some(t) = oracle_tol {
        oracle = oracle.with_tolerance(t);
    }
    let geo = construct_geodesic(&oracle, &x, &y, depth)?;
    let additivity = adjacent_additivity_defect(&geo)?;
    let iso = isometry_defect(&geo).ok();
    let summary = json!({
        "space": desc.to_string(),
        "delta": delta,
        "depth": depth,
        "base_distance": geo.base_distance,
        "additivity_defect": additivity,
        "isometry": iso.as_ref().map(serde_json::to_value).transpose()?,
    });
    let points = geo
        .points
        .iter()
        .map(|p| json!(p.coords().unwrap_or_default()))
        .collect();
    let body = geodesic_output(g, geo.params(), points, iso.as_ref().map(|d| &d.running[..]), summary)?;
    Ok(Outcome::ok(body))
}

fn dimension(
    g: &Global,
    scales: Option<&[f64]>,
    radii: Option<&[f64]>,
    centers: usize,
) -> anyhow::Result<Outcome> {
    let (space, _) = load(g)?;
    let boxes = match scales {
        Some(s) => box_dimension(&space, s)?,
        None => box_dimension_auto(&space)?,
    };
    let diam = space.max_distance();
    let radii = match radii {
        Some(r) => r.to_vec(),
        None if diam > 0.0 => vec![diam / 16.0, diam / 8.0, diam / 4.0],
        None => vec![1.0],
    };
    let doubling = doubling_constant(&space, &radii, centers, g.seed)?;
    let body = if g.json {
        to_canonical_json(&json!({
            "box": serde_json::to_value(&boxes)?,
            "doubling": serde_json::to_value(&doubling)?,
        }))
    } else {
        let mut s = format!(
            "box dimension {} (rms residual {})\n",
            boxes.slope, boxes.residual
        );
        for r in &boxes.records {
            s += &format!(
                "  r = {}: N = {}{}\n",
                r.scale,
                r.count,
                if r.used { "" } else { " (not fitted)" }
            );
        }
        s += &format!("doubling constant >= {} over radii {:?}\n", doubling.c_hat, doubling.radii);
        s
    };
    Ok(Outcome::ok(body))
}

fn spheres(g: &Global, center: usize, radii: &str) -> anyhow::Result<Outcome> {
    let (space, _) = load(g)?;
    let radii: Vec<f64> = match radii.strip_prefix("auto:") {
        Some(k) => auto_radii(&space, center, k.parse().context("auto:K needs an integer K")?)?,
        None => parse_coords(radii)?,
    };
    // default gap tolerance: the widest step of the radius grid
    let gap_tol = g.tol.unwrap_or_else(|| {
        let mut sorted = radii.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    });
    let rep = sphere_surjectivity(&space, center, &radii, gap_tol)?;
    let body = if g.json {
        canonical(&rep)?
    } else {
        format!(
            "largest sphere gap {} around point {} ({} at tolerance {})\n",
            rep.max_gap,
            rep.center,
            if rep.surjective { "surjective" } else { "gaps" },
            rep.gap_tol
        )
    };
    Ok(Outcome::ok(body))
}

fn report(g: &Global, between_tol: Option<f64>, pairs: usize) -> anyhow::Result<Outcome> {
    let (space, input) = load(g)?;
    let opts = ReportOptions {
        validate_tol: g.tol.unwrap_or(DEFAULT_REL_TOL),
        between_tol,
        abs_tol: DEFAULT_ABS_TOL,
        nonconvexity: nonconvexity_options(g, pairs, None, None),
    };
    let rep = run_report(&space, input, &opts)?;
    let code = rep.exit_code() as u8;
    let body = if g.json {
        canonical(&rep)?
    } else {
        let mut s = format!("{}: {} points\n", rep.input, rep.points);
        if !rep.valid_metric {
            s += &format!("not a metric ({} violations)\n", rep.violation_count);
        }
        if let Some(b) = &rep.between {
            s += &format!("between-point triples: {} (tol {})\n", b.count, b.rel_tol);
        }
        if let Some(e) = &rep.exponent {
            s += &format!("p* = {}\n", e.p_star);
        }
        if let Some(n) = &rep.nonconvexity {
            s += &format!(
                "non-convexity: {} at delta = {}\n",
                if n.certified { "certified" } else { "refuted" },
                n.delta
            );
        }
        if let Some(d) = &rep.dimension {
            s += &format!("box dimension ~ {} (residual {})\n", d.slope, d.residual);
        }
        for note in &rep.notes {
            s += &format!("note: {note}\n");
        }
        s += &format!("conclusion: {}\n", rep.conclusion);
        s
    };
    Ok(Outcome { body, code })
}
