//! Subcommand definitions and their handlers.
//!
//! Every handler computes a JSON result payload plus a human rendering of
//! the same data, and maps its verdict onto the exit-code contract (see
//! `report`). Configurations come either from a JSON file or from the
//! embedded builtin corpus (`--builtin NAME`). Commands that need a
//! two-dimensional shift accept spacetime configs too, working on the
//! induced shift specification.

use crate::parse;
use crate::report::{Failure, Handled};
use clap::{Args, Subcommand};
use num_bigint::BigUint;
use num_rational::Rational64;
use serde_json::{json, Value};
use shiftlab_core::coding::{
    build_coding_polygon, canonical_recode, classify_ray, codes, is_closing, primitive_rays,
    scale_down_recode, verify_coding_polygon, ClosingStatus, CodeMethod, CodingVerdict,
    RayStatus,
};
use shiftlab_core::config::{
    builtin, builtin_names, parse_config, serialize_config, ConfigPayload, ParsedConfig,
};
use shiftlab_core::entropy::{
    directional_entropy, entropy_sphere, girth_formula_check, polygonal_entropy, scaled_region,
    CountMethod, EntropyError, EntropyEstimate,
};
use shiftlab_core::geometry::{girth, ConvexLatticePolygon, LatticePoint, RationalRay};
use shiftlab_core::lang1d::count_words_1d;
use shiftlab_core::shifts::{
    count_colorings, nivat_bound_check, product_shift, NivatVerdict, Region, ShiftError,
    ShiftSpec,
};
use shiftlab_core::spacetime::{
    induced_shift_spec, light_cone_levels, normalize_spacetime, width_table, Spacetime,
};
use shiftlab_core::Budget;
use std::path::PathBuf;

#[derive(Subcommand)]
pub enum Command {
    /// Count legal colorings of a finite region, or words of a 1-D language.
    Count(CountArgs),
    /// Decide whether a set of source cells forces a target cell.
    Codes(CodesArgs),
    /// List the rays not certified expansive (nonexpansive candidates).
    Rays(RaysArgs),
    /// Test whether a nonexpansive ray is closing.
    Closing(ClosingArgs),
    /// Verify that a convex lattice polygon is a coding polygon.
    Polygon(PolygonArgs),
    /// Build a coding polygon from candidate rays and verify it.
    PolygonFromRays(PolygonFromRaysArgs),
    /// Canonically recode a shift by a finite window.
    Recode(RecodeArgs),
    /// Scale a coding polygon down by canonical recoding.
    ScaleDown(ScaleDownArgs),
    /// Form the product of two or more shift specifications.
    Product(ProductArgs),
    /// Light-cone levels and asymptotic slopes of a spacetime.
    Lightcone(LightconeArgs),
    /// Recode a spacetime so its light cone hugs the integer hull.
    Normalize(NormalizeArgs),
    /// Estimate directional or polygonal entropy.
    Entropy(EntropyArgs),
    /// Compute the entropy sphere of a verified coding polygon.
    Sphere(SphereArgs),
    /// Check the girth formula h_v = H·|v|/G(P,v) for one direction.
    GirthCheck(GirthCheckArgs),
    /// Compare the pattern count of a box against the linear lower bound.
    Nivat(NivatArgs),
}

/// Runs a command, returning its name, the resolved-parameter echo, and
/// the outcome.
pub fn dispatch(
    cmd: &Command,
    budget: &mut Budget,
) -> (&'static str, Value, Result<Handled, Failure>) {
    match cmd {
        Command::Count(a) => ("count", a.params(), run_count(a, budget)),
        Command::Codes(a) => ("codes", a.params(), run_codes(a, budget)),
        Command::Rays(a) => ("rays", a.params(), run_rays(a, budget)),
        Command::Closing(a) => ("closing", a.params(), run_closing(a, budget)),
        Command::Polygon(a) => ("polygon", a.params(), run_polygon(a, budget)),
        Command::PolygonFromRays(a) => {
            ("polygon-from-rays", a.params(), run_polygon_from_rays(a, budget))
        }
        Command::Recode(a) => ("recode", a.params(), run_recode(a, budget)),
        Command::ScaleDown(a) => ("scale-down", a.params(), run_scale_down(a, budget)),
        Command::Product(a) => ("product", a.params(), run_product(a, budget)),
        Command::Lightcone(a) => ("lightcone", a.params(), run_lightcone(a, budget)),
        Command::Normalize(a) => ("normalize", a.params(), run_normalize(a, budget)),
        Command::Entropy(a) => ("entropy", a.params(), run_entropy(a, budget)),
        Command::Sphere(a) => ("sphere", a.params(), run_sphere(a, budget)),
        Command::GirthCheck(a) => ("girth-check", a.params(), run_girth_check(a, budget)),
        Command::Nivat(a) => ("nivat", a.params(), run_nivat(a, budget)),
    }
}

// ---------------------------------------------------------------------------
// Shared argument groups and helpers
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct SpecArg {
    /// Path to a JSON configuration file.
    #[arg(
        value_name = "CONFIG",
        required_unless_present = "builtin",
        conflicts_with = "builtin"
    )]
    config: Option<PathBuf>,
    /// Use an embedded builtin configuration by name instead of a file.
    #[arg(long, value_name = "NAME")]
    builtin: Option<String>,
}

impl SpecArg {
    fn echo(&self) -> String {
        match (&self.builtin, &self.config) {
            (Some(name), _) => format!("builtin:{name}"),
            (None, Some(path)) => path.display().to_string(),
            (None, None) => String::new(),
        }
    }

    fn load(&self) -> Result<ParsedConfig, Failure> {
        if let Some(name) = &self.builtin {
            builtin(name).ok_or_else(|| {
                Failure::hard(format!(
                    "unknown builtin {name:?}; available: {}",
                    builtin_names().join(", ")
                ))
            })
        } else {
            let path = self.config.as_ref().expect("clap requires config or builtin");
            Ok(parse_config(path)?)
        }
    }

    /// The two-dimensional shift specification of the config (spacetimes
    /// contribute their induced specification).
    fn shift(&self) -> Result<ShiftSpec, Failure> {
        match self.load()?.payload {
            ConfigPayload::Shift(s) => Ok(s),
            ConfigPayload::Spacetime(st) => Ok(induced_shift_spec(&st)?),
            ConfigPayload::Language(_) => Err(Failure::hard(
                "this command needs a two-dimensional shift configuration",
            )),
        }
    }

    fn spacetime(&self) -> Result<Spacetime, Failure> {
        match self.load()?.payload {
            ConfigPayload::Spacetime(st) => Ok(st),
            _ => Err(Failure::hard(
                "this command needs a spacetime configuration (\"type\": \"spacetime\")",
            )),
        }
    }
}

/// Options shared by the entropy-estimating commands.
#[derive(Args)]
pub struct EntropyOpts {
    /// Largest scale factor in the estimation schedule.
    #[arg(long, default_value_t = 48, value_name = "N")]
    n_max: i64,
    /// Thickening radii to stabilize over.
    #[arg(long, default_value = "1,2,4", value_name = "R,R,...")]
    r_schedule: String,
    /// Convergence tolerance for successive slope estimates.
    #[arg(long, default_value_t = shiftlab_core::DEFAULT_TOLERANCE, value_name = "T")]
    tolerance: f64,
}

impl EntropyOpts {
    fn schedule(&self) -> Result<Vec<i64>, Failure> {
        Ok(parse::int_list(&self.r_schedule)?)
    }

    fn params(&self) -> Value {
        json!({
            "n_max": self.n_max,
            "r_schedule": self.r_schedule,
            "tolerance": self.tolerance,
        })
    }
}

fn merge(base: Value, extra: Value) -> Value {
    let (Value::Object(mut m), Value::Object(e)) = (base, extra) else {
        unreachable!("parameter echoes are objects");
    };
    m.extend(e);
    Value::Object(m)
}

fn pt_json(p: LatticePoint) -> Value {
    json!([p.i, p.j])
}

fn pts_json<'a>(pts: impl IntoIterator<Item = &'a LatticePoint>) -> Value {
    Value::Array(pts.into_iter().map(|&p| pt_json(p)).collect())
}

fn pts_human(pts: &[LatticePoint]) -> String {
    pts.iter()
        .map(|p| format!("({},{})", p.i, p.j))
        .collect::<Vec<_>>()
        .join(" ")
}

fn rat_json(r: Rational64) -> Value {
    json!({"numer": *r.numer(), "denom": *r.denom()})
}

fn hull_arg(vertices: &str) -> Result<ConvexLatticePolygon, Failure> {
    let pts = parse::points(vertices)?;
    Ok(ConvexLatticePolygon::hull(&pts)?)
}

fn ray_arg(dir: &str) -> Result<RationalRay, Failure> {
    Ok(RationalRay::from_dir(parse::point(dir)?)?)
}

fn method_str(m: CodeMethod) -> &'static str {
    match m {
        CodeMethod::Trivial => "trivial",
        CodeMethod::Linear => "linear",
        CodeMethod::Propagation => "propagation",
        CodeMethod::Exhaustion => "exhaustion",
        CodeMethod::Vacuous => "vacuous",
        CodeMethod::Componentwise => "componentwise",
    }
}

fn verdict_json(v: &CodingVerdict) -> Value {
    let witness = v.witness.as_ref().map(|w| {
        json!({
            "cells": pts_json(w.0.region.points()),
            "first": w.0.colors,
            "second": w.1.colors,
        })
    });
    json!({
        "status": if v.is_forced() { "forced" } else { "not-forced-locally" },
        "method": method_str(v.method),
        "window_radius": v.window_radius,
        "witness": witness,
    })
}

fn certificate_json(sources: &Region, target: LatticePoint, radius: i64) -> Value {
    json!({
        "sources": pts_json(sources.points()),
        "target": pt_json(target),
        "radius": radius,
    })
}

fn estimate_json(est: &EntropyEstimate) -> Value {
    json!({
        "value": est.value,
        "converged": est.converged,
        "method": match est.method {
            CountMethod::ExactLinear => "exact-linear",
            CountMethod::Enumerated => "enumerated",
        },
        "tolerance": est.tolerance,
        "trace": est.trace.iter().map(|t| json!({
            "n": t.n,
            "r": t.r,
            "count": t.count.to_string(),
            "quotient": t.quotient,
        })).collect::<Vec<_>>(),
    })
}

fn estimate_human(label: &str, est: &EntropyEstimate) -> Vec<String> {
    vec![
        format!("{label}: {:.6}", est.value),
        format!("converged: {}", est.converged),
        format!(
            "method: {}",
            match est.method {
                CountMethod::ExactLinear => "exact-linear",
                CountMethod::Enumerated => "enumerated",
            }
        ),
    ]
}

/// Folds a shift-layer failure into the command budget (mirroring the core
/// convention) so `budget_used` stays meaningful.
fn lift_shift(budget: &mut Budget, e: ShiftError) -> Failure {
    if let ShiftError::BudgetExceeded { used } = e {
        let _ = budget.charge(used);
        Failure::BudgetExceeded {
            used: budget.used(),
        }
    } else {
        Failure::Hard(e.to_string())
    }
}

/// Serializes a derived configuration, optionally writing it to `--out`.
fn emit_spec(
    cfg: &ParsedConfig,
    out: &Option<PathBuf>,
    human: &mut Vec<String>,
) -> Result<Value, Failure> {
    let text = serialize_config(cfg);
    if let Some(path) = out {
        std::fs::write(path, &text)
            .map_err(|e| Failure::hard(format!("cannot write {}: {e}", path.display())))?;
        human.push(format!("wrote {}", path.display()));
    }
    Ok(serde_json::from_str(&text).expect("canonical config is valid JSON"))
}

// ---------------------------------------------------------------------------
// count
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct CountArgs {
    #[command(flatten)]
    spec: SpecArg,
    /// Count colorings of the n×m box [0,n)×[0,m).
    #[arg(long, value_name = "N,M")]
    rect: Option<String>,
    /// Count colorings of the closed ball of this radius.
    #[arg(long, value_name = "R")]
    ball: Option<i64>,
    /// Count colorings of the polygon hull of these points (see --scale,
    /// --thicken).
    #[arg(long, value_name = "POINTS")]
    vertices: Option<String>,
    /// Scale factor applied to the polygon.
    #[arg(long, default_value_t = 1, value_name = "N")]
    scale: i64,
    /// Thickening radius: count on {u : d(u, nP) < r} instead of nP.
    #[arg(long, default_value_t = 0, value_name = "R")]
    thicken: i64,
    /// Count words of this length in a 1-D language configuration.
    #[arg(long, value_name = "N")]
    words: Option<usize>,
}

impl CountArgs {
    fn params(&self) -> Value {
        json!({
            "config": self.spec.echo(),
            "rect": self.rect,
            "ball": self.ball,
            "vertices": self.vertices,
            "scale": self.scale,
            "thicken": self.thicken,
            "words": self.words,
        })
    }
}

fn run_count(args: &CountArgs, budget: &mut Budget) -> Result<Handled, Failure> {
    let selectors = [
        args.rect.is_some(),
        args.ball.is_some(),
        args.vertices.is_some(),
        args.words.is_some(),
    ]
    .iter()
    .filter(|&&b| b)
    .count();
    if selectors != 1 {
        return Err(Failure::hard(
            "give exactly one of --rect, --ball, --vertices, or --words",
        ));
    }

    if let Some(n) = args.words {
        let cfg = args.spec.load()?;
        let Some(lang) = cfg.as_language() else {
            return Err(Failure::hard(
                "--words needs a language configuration (\"type\": \"language\")",
            ));
        };
        let count = count_words_1d(lang, n, budget.remaining())
            .map_err(|e| lift_shift(budget, e))?;
        return Ok(Handled::ok(
            json!({"count": count.to_string(), "length": n}),
            vec![format!("words of length {n}: {count}")],
        ));
    }

    let spec = args.spec.shift()?;
    let region = if let Some(rect) = &args.rect {
        let dims = parse::int_list(rect)?;
        let [n, m] = dims[..] else {
            return Err(Failure::hard("--rect expects \"N,M\""));
        };
        if n < 1 || m < 1 {
            return Err(Failure::hard("--rect dimensions must be positive"));
        }
        Region::rect(n, m)
    } else if let Some(r) = args.ball {
        if r < 0 {
            return Err(Failure::hard("--ball radius must be nonnegative"));
        }
        Region::ball(r)
    } else {
        let p = hull_arg(args.vertices.as_ref().expect("selector checked"))?;
        if args.scale < 1 || args.thicken < 0 {
            return Err(Failure::hard("--scale must be ≥ 1 and --thicken ≥ 0"));
        }
        scaled_region(&p, args.scale, args.thicken, budget)?
    };
    budget
        .charge(region.len() as u64)
        .map_err(|used| Failure::BudgetExceeded { used })?;
    let count =
        count_colorings(&spec, &region, budget.remaining()).map_err(|e| lift_shift(budget, e))?;
    Ok(Handled::ok(
        json!({"count": count.to_string(), "cells": region.len()}),
        vec![
            format!("cells: {}", region.len()),
            format!("count: {count}"),
        ],
    ))
}

// ---------------------------------------------------------------------------
// codes
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct CodesArgs {
    #[command(flatten)]
    spec: SpecArg,
    /// Source cells, e.g. "(0,0),(1,0)".
    #[arg(long, value_name = "POINTS", required_unless_present = "replay")]
    sources: Option<String>,
    /// Target cell, e.g. "0,1".
    #[arg(long, value_name = "I,J", required_unless_present = "replay")]
    target: Option<String>,
    /// Window radius; sources and target must lie in ball(radius).
    #[arg(long, default_value_t = 6, value_name = "R")]
    radius: i64,
    /// Re-verify every certificate embedded in a stored JSON report.
    #[arg(long, value_name = "REPORT", conflicts_with_all = ["sources", "target"])]
    replay: Option<PathBuf>,
}

impl CodesArgs {
    fn params(&self) -> Value {
        json!({
            "config": self.spec.echo(),
            "sources": self.sources,
            "target": self.target,
            "radius": self.radius,
            "replay": self.replay.as_ref().map(|p| p.display().to_string()),
        })
    }
}

fn collect_certificates(v: &Value, out: &mut Vec<(Region, LatticePoint, i64)>) {
    match v {
        Value::Object(map) => {
            if let Some(cert) = map.get("certificate") {
                if let Some(parsed) = parse_certificate(cert) {
                    out.push(parsed);
                }
            }
            for val in map.values() {
                collect_certificates(val, out);
            }
        }
        Value::Array(items) => {
            for val in items {
                collect_certificates(val, out);
            }
        }
        _ => {}
    }
}

fn parse_certificate(v: &Value) -> Option<(Region, LatticePoint, i64)> {
    let pair = |p: &Value| -> Option<LatticePoint> {
        let arr = p.as_array()?;
        match arr[..] {
            [ref i, ref j] => Some(shiftlab_core::geometry::pt(i.as_i64()?, j.as_i64()?)),
            _ => None,
        }
    };
    let sources = v
        .get("sources")?
        .as_array()?
        .iter()
        .map(pair)
        .collect::<Option<Vec<_>>>()?;
    let target = pair(v.get("target")?)?;
    let radius = v.get("radius")?.as_i64()?;
    Some((Region::from_points(sources), target, radius))
}

fn run_codes(args: &CodesArgs, budget: &mut Budget) -> Result<Handled, Failure> {
    let spec = args.spec.shift()?;

    if let Some(report) = &args.replay {
        let text = std::fs::read_to_string(report)
            .map_err(|e| Failure::hard(format!("cannot read {}: {e}", report.display())))?;
        let doc: Value = serde_json::from_str(&text)
            .map_err(|e| Failure::hard(format!("{} is not JSON: {e}", report.display())))?;
        let mut certs = Vec::new();
        collect_certificates(&doc, &mut certs);
        if certs.is_empty() {
            return Err(Failure::hard(format!(
                "no certificates embedded in {}",
                report.display()
            )));
        }
        let mut checks = Vec::new();
        let mut all_forced = true;
        for (sources, target, radius) in &certs {
            let verdict = codes(&spec, sources, *target, *radius, budget)?;
            all_forced &= verdict.is_forced();
            checks.push(json!({
                "target": pt_json(*target),
                "radius": radius,
                "status": if verdict.is_forced() { "forced" } else { "not-forced-locally" },
            }));
        }
        let result = json!({
            "status": "replayed",
            "certificates": certs.len(),
            "all_forced": all_forced,
            "checks": checks,
        });
        let human = vec![format!(
            "replayed {} certificate(s): {}",
            certs.len(),
            if all_forced { "all forced" } else { "NOT all forced" }
        )];
        return Ok(if all_forced {
            Handled::ok(result, human)
        } else {
            Handled::inconclusive(result, human)
        });
    }

    let sources = Region::from_points(parse::points(args.sources.as_ref().expect("clap"))?);
    let target = parse::point(args.target.as_ref().expect("clap"))?;
    let verdict = codes(&spec, &sources, target, args.radius, budget)?;
    let mut result = verdict_json(&verdict);
    if verdict.is_forced() {
        result["certificate"] = certificate_json(&sources, target, args.radius);
    }
    let human = vec![format!(
        "({},{}) is {} by {} at radius {}",
        target.i,
        target.j,
        if verdict.is_forced() { "forced" } else { "not forced locally" },
        method_str(verdict.method),
        args.radius,
    )];
    Ok(if verdict.is_forced() {
        Handled::ok(result, human)
    } else {
        Handled::inconclusive(result, human)
    })
}

// ---------------------------------------------------------------------------
// rays
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct RaysArgs {
    #[command(flatten)]
    spec: SpecArg,
    /// Largest ray height (max coordinate) to enumerate.
    #[arg(long, default_value_t = 3, value_name = "H")]
    height: i64,
    /// Expansiveness search radius.
    #[arg(long, default_value_t = 8, value_name = "R")]
    radius: i64,
}

impl RaysArgs {
    fn params(&self) -> Value {
        json!({
            "config": self.spec.echo(),
            "height": self.height,
            "radius": self.radius,
        })
    }
}

fn run_rays(args: &RaysArgs, budget: &mut Budget) -> Result<Handled, Failure> {
    let spec = args.spec.shift()?;
    let mut candidates = Vec::new();
    let mut expansive = Vec::new();
    for ray in primitive_rays(args.height) {
        let class = classify_ray(&spec, &ray, args.radius, budget)?;
        match class.status {
            RayStatus::ExpansiveCertified {
                radius,
                coder,
                target,
            } => expansive.push(json!({
                "ray": pt_json(ray.dir),
                "certificate": certificate_json(&coder, target, radius),
            })),
            RayStatus::UnknownUpTo { .. } => candidates.push(ray.dir),
        }
    }
    let human = vec![
        format!("nonexpansive candidates: {}", pts_human(&candidates)),
        format!("certified expansive: {} rays", expansive.len()),
    ];
    Ok(Handled::ok(
        json!({"candidates": pts_json(&candidates), "expansive": expansive}),
        human,
    ))
}

// ---------------------------------------------------------------------------
// closing
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct ClosingArgs {
    #[command(flatten)]
    spec: SpecArg,
    /// Ray direction, e.g. "1,0".
    #[arg(long, value_name = "I,J")]
    ray: String,
    /// Largest block length to try on the adjacent line.
    #[arg(long, default_value_t = 3, value_name = "N")]
    n_max: usize,
    /// Window radius.
    #[arg(long, default_value_t = 6, value_name = "R")]
    radius: i64,
}

impl ClosingArgs {
    fn params(&self) -> Value {
        json!({
            "config": self.spec.echo(),
            "ray": self.ray,
            "n_max": self.n_max,
            "radius": self.radius,
        })
    }
}

fn run_closing(args: &ClosingArgs, budget: &mut Budget) -> Result<Handled, Failure> {
    let spec = args.spec.shift()?;
    let ray = ray_arg(&args.ray)?;
    let verdict = is_closing(&spec, &ray, args.n_max, args.radius, budget)?;
    let d = ray.dir;
    Ok(match verdict.status {
        ClosingStatus::Closing { n, window_radius } => Handled::ok(
            json!({
                "ray": pt_json(d),
                "status": "closing",
                "n": n,
                "window_radius": window_radius,
            }),
            vec![format!("ray ({},{}): closing with block length {n}", d.i, d.j)],
        ),
        ClosingStatus::NotClosedUpTo {
            n_max,
            window_radius,
        } => Handled::inconclusive(
            json!({
                "ray": pt_json(d),
                "status": "not-closed-up-to",
                "n_max": n_max,
                "window_radius": window_radius,
            }),
            vec![format!(
                "ray ({},{}): not closed for any block length ≤ {n_max}",
                d.i, d.j
            )],
        ),
    })
}

// ---------------------------------------------------------------------------
// polygon
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct PolygonArgs {
    #[command(flatten)]
    spec: SpecArg,
    /// Polygon vertices, e.g. "(0,0),(1,0),(0,1)".
    #[arg(long, value_name = "POINTS")]
    vertices: String,
}

impl PolygonArgs {
    fn params(&self) -> Value {
        json!({"config": self.spec.echo(), "vertices": self.vertices})
    }
}

fn run_polygon(args: &PolygonArgs, budget: &mut Budget) -> Result<Handled, Failure> {
    let spec = args.spec.shift()?;
    let p = hull_arg(&args.vertices)?;
    let check = verify_coding_polygon(&spec, &p, budget)?;
    let vertices: Vec<Value> = check
        .vertices
        .iter()
        .map(|(v, verdict)| {
            json!({
                "vertex": pt_json(*v),
                "status": if verdict.is_forced() { "forced" } else { "not-forced-locally" },
                "method": method_str(verdict.method),
            })
        })
        .collect();
    let result = json!({
        "certified": check.certified,
        "polygon": pts_json(check.polygon.vertices()),
        "window_radius": check.window_radius,
        "vertices": vertices,
    });
    let mut human = vec![format!("coding polygon: {}", check.certified)];
    for (v, verdict) in &check.vertices {
        if !verdict.is_forced() {
            human.push(format!("vertex ({},{}): not forced locally", v.i, v.j));
        }
    }
    Ok(if check.certified {
        Handled::ok(result, human)
    } else {
        Handled::inconclusive(result, human)
    })
}

// ---------------------------------------------------------------------------
// polygon-from-rays
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct PolygonFromRaysArgs {
    #[command(flatten)]
    spec: SpecArg,
    /// Candidate rays, e.g. "(1,0),(-1,1),(0,-1)". Defaults to the
    /// nonexpansive candidates found by `rays`.
    #[arg(long, value_name = "POINTS")]
    rays: Option<String>,
    /// Ray height bound when enumerating candidates.
    #[arg(long, default_value_t = 3, value_name = "H")]
    height: i64,
    /// Expansiveness search radius when enumerating candidates.
    #[arg(long, default_value_t = 8, value_name = "R")]
    radius: i64,
    /// Largest scale factor to try.
    #[arg(long, default_value_t = 4, value_name = "N")]
    n_max: i64,
}

impl PolygonFromRaysArgs {
    fn params(&self) -> Value {
        json!({
            "config": self.spec.echo(),
            "rays": self.rays,
            "height": self.height,
            "radius": self.radius,
            "n_max": self.n_max,
        })
    }
}

fn run_polygon_from_rays(args: &PolygonFromRaysArgs, budget: &mut Budget) -> Result<Handled, Failure> {
    let spec = args.spec.shift()?;
    let rays: Vec<RationalRay> = match &args.rays {
        Some(s) => parse::points(s)?
            .into_iter()
            .map(RationalRay::from_dir)
            .collect::<Result<_, _>>()?,
        None => {
            let mut out = Vec::new();
            for ray in primitive_rays(args.height) {
                if !classify_ray(&spec, &ray, args.radius, budget)?.is_certified() {
                    out.push(ray);
                }
            }
            out
        }
    };
    let dirs: Vec<LatticePoint> = rays.iter().map(|r| r.dir).collect();
    if rays.len() < 2 {
        return Err(Failure::hard(format!(
            "need at least two candidate rays, found {}: {}",
            rays.len(),
            pts_human(&dirs)
        )));
    }
    match build_coding_polygon(&spec, &rays, args.n_max, budget)? {
        Some((p, n, check)) => Ok(Handled::ok(
            json!({
                "polygon": pts_json(p.vertices()),
                "scale": n,
                "certified": check.certified,
                "rays": pts_json(&dirs),
            }),
            vec![
                format!("coding polygon: {}", pts_human(p.vertices())),
                format!("scale: {n}"),
            ],
        )),
        None => Ok(Handled::inconclusive(
            json!({
                "status": "no-polygon-up-to",
                "n_max": args.n_max,
                "rays": pts_json(&dirs),
            }),
            vec![format!(
                "no scale ≤ {} of the ray polygon verified as a coding polygon",
                args.n_max
            )],
        )),
    }
}

// ---------------------------------------------------------------------------
// recode / scale-down / product
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct RecodeArgs {
    #[command(flatten)]
    spec: SpecArg,
    /// Recoding window cells, e.g. "(0,0),(1,0)".
    #[arg(long, value_name = "POINTS")]
    window: String,
    /// Write the recoded specification to this file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

impl RecodeArgs {
    fn params(&self) -> Value {
        json!({
            "config": self.spec.echo(),
            "window": self.window,
            "out": self.out.as_ref().map(|p| p.display().to_string()),
        })
    }
}

fn run_recode(args: &RecodeArgs, budget: &mut Budget) -> Result<Handled, Failure> {
    let cfg = args.spec.load()?;
    let spec = match &cfg.payload {
        ConfigPayload::Shift(s) => s.clone(),
        ConfigPayload::Spacetime(st) => induced_shift_spec(st)?,
        ConfigPayload::Language(_) => {
            return Err(Failure::hard(
                "this command needs a two-dimensional shift configuration",
            ))
        }
    };
    let f = Region::from_points(parse::points(&args.window)?);
    let rec = canonical_recode(&spec, &f, budget)?;
    let out_cfg = ParsedConfig {
        name: cfg.name.as_ref().map(|n| format!("{n}-recoded")),
        payload: ConfigPayload::Shift(rec.spec.clone()),
    };
    let mut human = vec![format!("recoded alphabet: {} letters", rec.letters.len())];
    let spec_value = emit_spec(&out_cfg, &args.out, &mut human)?;
    Ok(Handled::ok(
        json!({
            "alphabet": rec.letters.len(),
            "window": pts_json(rec.window.points()),
            "letters": rec.letters,
            "spec": spec_value,
        }),
        human,
    ))
}

#[derive(Args)]
pub struct ScaleDownArgs {
    #[command(flatten)]
    spec: SpecArg,
    /// Vertices of the verified coding polygon nP.
    #[arg(long, value_name = "POINTS")]
    vertices: String,
    /// Scale factor n to divide out.
    #[arg(long, value_name = "N")]
    scale: i64,
    /// Write the recoded specification to this file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

impl ScaleDownArgs {
    fn params(&self) -> Value {
        json!({
            "config": self.spec.echo(),
            "vertices": self.vertices,
            "scale": self.scale,
            "out": self.out.as_ref().map(|p| p.display().to_string()),
        })
    }
}

fn run_scale_down(args: &ScaleDownArgs, budget: &mut Budget) -> Result<Handled, Failure> {
    let cfg = args.spec.load()?;
    let Some(spec) = cfg.as_shift() else {
        return Err(Failure::hard(
            "this command needs a two-dimensional shift configuration",
        ));
    };
    let p = hull_arg(&args.vertices)?;
    let (rec, small) = scale_down_recode(spec, &p, args.scale, budget)?;
    let out_cfg = ParsedConfig {
        name: cfg.name.as_ref().map(|n| format!("{n}-scaled")),
        payload: ConfigPayload::Shift(rec.spec.clone()),
    };
    let mut human = vec![
        format!("scaled polygon: {}", pts_human(small.vertices())),
        format!("recoded alphabet: {} letters", rec.letters.len()),
    ];
    let spec_value = emit_spec(&out_cfg, &args.out, &mut human)?;
    Ok(Handled::ok(
        json!({
            "polygon": pts_json(small.vertices()),
            "alphabet": rec.letters.len(),
            "window": pts_json(rec.window.points()),
            "spec": spec_value,
        }),
        human,
    ))
}

#[derive(Args)]
pub struct ProductArgs {
    /// Factor configurations: file paths or builtin names.
    #[arg(value_name = "FACTOR", num_args = 2..)]
    factors: Vec<String>,
    /// Write the product specification to this file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

impl ProductArgs {
    fn params(&self) -> Value {
        json!({
            "factors": self.factors,
            "out": self.out.as_ref().map(|p| p.display().to_string()),
        })
    }
}

fn run_product(args: &ProductArgs, budget: &mut Budget) -> Result<Handled, Failure> {
    let _ = budget;
    let mut specs = Vec::new();
    for name in &args.factors {
        let path = std::path::Path::new(name);
        let cfg = if path.exists() {
            parse_config(path)?
        } else if let Some(b) = builtin(name) {
            b
        } else {
            return Err(Failure::hard(format!(
                "{name:?} is neither a config file nor a builtin; builtins: {}",
                builtin_names().join(", ")
            )));
        };
        match cfg.payload {
            ConfigPayload::Shift(s) => specs.push(s),
            _ => {
                return Err(Failure::hard(format!(
                    "product factors must be shift configurations ({name:?} is not)"
                )))
            }
        }
    }
    let mut iter = specs.into_iter();
    let first = iter.next().expect("clap enforces ≥ 2 factors");
    let spec = iter.try_fold(first, |acc, next| {
        product_shift(acc, next).map_err(|e| Failure::Hard(e.to_string()))
    })?;
    let alphabet = spec.alphabet_size();
    let out_cfg = ParsedConfig {
        name: None,
        payload: ConfigPayload::Shift(spec),
    };
    let mut human = vec![format!(
        "product of {} factors, alphabet size {alphabet}",
        args.factors.len()
    )];
    let spec_value = emit_spec(&out_cfg, &args.out, &mut human)?;
    Ok(Handled::ok(
        json!({"spec": spec_value, "alphabet": alphabet}),
        human,
    ))
}

// ---------------------------------------------------------------------------
// lightcone / normalize
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct LightconeArgs {
    #[command(flatten)]
    spec: SpecArg,
    /// Lowest level to report.
    #[arg(long, default_value_t = -4, value_name = "N", allow_hyphen_values = true)]
    n_min: i64,
    /// Highest level to report.
    #[arg(long, default_value_t = 4, value_name = "N")]
    n_max: i64,
    /// Depth of the width table behind the slope bounds.
    #[arg(long, default_value_t = 8, value_name = "K")]
    k_max: usize,
}

impl LightconeArgs {
    fn params(&self) -> Value {
        json!({
            "config": self.spec.echo(),
            "n_min": self.n_min,
            "n_max": self.n_max,
            "k_max": self.k_max,
        })
    }
}

fn run_lightcone(args: &LightconeArgs, budget: &mut Budget) -> Result<Handled, Failure> {
    let st = args.spec.spacetime()?;
    let levels = light_cone_levels(&st, args.n_min, args.n_max, budget)?;
    let table = width_table(&st, args.k_max, budget)?;
    let widths: Vec<Value> = (1..=table.k_max())
        .map(|k| {
            json!({
                "k": k,
                "w_plus": table.w_plus(k),
                "w_minus": table.w_minus(k),
            })
        })
        .collect();
    let mut human = Vec::new();
    for &(n, (lo, hi)) in &levels {
        human.push(format!("I({n}) = [{lo}, {hi}]"));
    }
    human.push(format!(
        "alpha+ = {} ({})",
        table.alpha_plus_upper,
        if table.plus_exact { "exact" } else { "upper bound" }
    ));
    human.push(format!(
        "alpha- = {} ({})",
        table.alpha_minus_lower,
        if table.minus_exact { "exact" } else { "lower bound" }
    ));
    Ok(Handled::ok(
        json!({
            "levels": levels.iter().map(|&(n, (lo, hi))| json!({
                "n": n, "lo": lo, "hi": hi,
            })).collect::<Vec<_>>(),
            "widths": widths,
            "alpha_plus": rat_json(table.alpha_plus_upper),
            "alpha_plus_exact": table.plus_exact,
            "alpha_minus": rat_json(table.alpha_minus_lower),
            "alpha_minus_exact": table.minus_exact,
        }),
        human,
    ))
}

#[derive(Args)]
pub struct NormalizeArgs {
    #[command(flatten)]
    spec: SpecArg,
    /// Depth of the width tables used to certify the normalization.
    #[arg(long, default_value_t = 6, value_name = "K")]
    k_max: usize,
    /// Write the normalized spacetime to this file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

impl NormalizeArgs {
    fn params(&self) -> Value {
        json!({
            "config": self.spec.echo(),
            "k_max": self.k_max,
            "out": self.out.as_ref().map(|p| p.display().to_string()),
        })
    }
}

fn run_normalize(args: &NormalizeArgs, budget: &mut Budget) -> Result<Handled, Failure> {
    let cfg = args.spec.load()?;
    let Some(st) = cfg.as_spacetime() else {
        return Err(Failure::hard(
            "this command needs a spacetime configuration (\"type\": \"spacetime\")",
        ));
    };
    match normalize_spacetime(st, args.k_max, budget)? {
        Some(normalized) => {
            let out_cfg = ParsedConfig {
                name: cfg.name.as_ref().map(|n| format!("{n}-normalized")),
                payload: ConfigPayload::Spacetime(normalized),
            };
            let mut human = vec!["normalized: true".to_string()];
            let spec_value = emit_spec(&out_cfg, &args.out, &mut human)?;
            Ok(Handled::ok(
                json!({"status": "normalized", "spec": spec_value}),
                human,
            ))
        }
        None => Ok(Handled::inconclusive(
            json!({"status": "not-normalized", "k_max": args.k_max}),
            vec![format!(
                "no normalization verified within k_max = {}",
                args.k_max
            )],
        )),
    }
}

// ---------------------------------------------------------------------------
// entropy / sphere / girth-check
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct EntropyArgs {
    #[command(flatten)]
    spec: SpecArg,
    /// Direction for directional entropy, e.g. "1,0".
    #[arg(long, value_name = "I,J", conflicts_with = "vertices")]
    dir: Option<String>,
    /// Polygon vertices for polygonal entropy.
    #[arg(long, value_name = "POINTS")]
    vertices: Option<String>,
    #[command(flatten)]
    opts: EntropyOpts,
}

impl EntropyArgs {
    fn params(&self) -> Value {
        merge(
            json!({
                "config": self.spec.echo(),
                "dir": self.dir,
                "vertices": self.vertices,
            }),
            self.opts.params(),
        )
    }
}

fn finish_entropy(
    label: &str,
    outcome: Result<EntropyEstimate, EntropyError>,
) -> Result<Handled, Failure> {
    match outcome {
        Ok(est) => {
            let result = estimate_json(&est);
            let human = estimate_human(label, &est);
            Ok(if est.converged {
                Handled::ok(result, human)
            } else {
                Handled::inconclusive(result, human)
            })
        }
        Err(EntropyError::Divergence { r, slope_growth }) => Ok(Handled::ok(
            json!({
                "status": "divergent",
                "r": r,
                "slope_growth": slope_growth,
            }),
            vec![format!(
                "{label} diverges: slopes still growing by {slope_growth:.3} at r = {r}"
            )],
        )),
        Err(e) => Err(e.into()),
    }
}

fn run_entropy(args: &EntropyArgs, budget: &mut Budget) -> Result<Handled, Failure> {
    let spec = args.spec.shift()?;
    let rs = args.opts.schedule()?;
    match (&args.dir, &args.vertices) {
        (Some(dir), None) => {
            let v = parse::point(dir)?;
            finish_entropy(
                "directional entropy",
                directional_entropy(&spec, v, args.opts.n_max, &rs, args.opts.tolerance, budget),
            )
        }
        (None, Some(vertices)) => {
            let p = hull_arg(vertices)?;
            finish_entropy(
                "polygonal entropy",
                polygonal_entropy(&spec, &p, args.opts.n_max, &rs, args.opts.tolerance, budget),
            )
        }
        _ => Err(Failure::hard("give exactly one of --dir or --vertices")),
    }
}

#[derive(Args)]
pub struct SphereArgs {
    #[command(flatten)]
    spec: SpecArg,
    /// Vertices of the coding polygon.
    #[arg(long, value_name = "POINTS")]
    vertices: String,
    #[command(flatten)]
    opts: EntropyOpts,
}

impl SphereArgs {
    fn params(&self) -> Value {
        merge(
            json!({"config": self.spec.echo(), "vertices": self.vertices}),
            self.opts.params(),
        )
    }
}

fn run_sphere(args: &SphereArgs, budget: &mut Budget) -> Result<Handled, Failure> {
    let spec = args.spec.shift()?;
    let p = hull_arg(&args.vertices)?;
    let rs = args.opts.schedule()?;
    match entropy_sphere(&spec, &p, args.opts.n_max, &rs, args.opts.tolerance, budget) {
        Ok(sphere) => {
            let result = json!({
                "edges": pts_json(&sphere.edges),
                "scale": sphere.scale,
                "vertices_doubled": pts_json(sphere.hexagon_doubled.vertices()),
                "vertices": sphere.vertices().iter().map(|&(x, y)| json!([x, y])).collect::<Vec<_>>(),
                "verified": sphere.verified,
                "conjectural": sphere.conjectural,
                "spot_checks": sphere.spot_checks.iter().map(|&(v, h)| json!({
                    "direction": pt_json(v),
                    "entropy": h,
                })).collect::<Vec<_>>(),
                "entropy": estimate_json(&sphere.entropy),
            });
            let human = vec![
                format!("entropy sphere edges: {}", pts_human(&sphere.edges)),
                format!("scale: {:.6}", sphere.scale),
                format!("verified: {}", sphere.verified),
            ];
            Ok(if sphere.verified {
                Handled::ok(result, human)
            } else {
                Handled::inconclusive(result, human)
            })
        }
        Err(EntropyError::TrivialNorm) => Ok(Handled::ok(
            json!({"status": "trivial-norm"}),
            vec!["entropy norm is trivial".to_string()],
        )),
        Err(e) => Err(e.into()),
    }
}

#[derive(Args)]
pub struct GirthCheckArgs {
    #[command(flatten)]
    spec: SpecArg,
    /// Vertices of the coding polygon.
    #[arg(long, value_name = "POINTS")]
    vertices: String,
    /// Direction to check, e.g. "1,1".
    #[arg(long, value_name = "I,J")]
    dir: String,
    #[command(flatten)]
    opts: EntropyOpts,
}

impl GirthCheckArgs {
    fn params(&self) -> Value {
        merge(
            json!({
                "config": self.spec.echo(),
                "vertices": self.vertices,
                "dir": self.dir,
            }),
            self.opts.params(),
        )
    }
}

fn run_girth_check(args: &GirthCheckArgs, budget: &mut Budget) -> Result<Handled, Failure> {
    let spec = args.spec.shift()?;
    let p = hull_arg(&args.vertices)?;
    let v = parse::point(&args.dir)?;
    let g = girth(&p, v)?;
    let rs = args.opts.schedule()?;
    let check = girth_formula_check(&spec, &p, v, args.opts.n_max, &rs, args.opts.tolerance, budget)?;
    let (delta, directional, predicted) = match &check {
        shiftlab_core::entropy::GirthCheck::Consistent {
            delta,
            directional,
            predicted,
        }
        | shiftlab_core::entropy::GirthCheck::Inconsistent {
            delta,
            directional,
            predicted,
        } => (*delta, *directional, *predicted),
    };
    let result = json!({
        "status": if check.is_consistent() { "consistent" } else { "inconsistent" },
        "girth": {"value": g.to_f64(), "display": g.to_string()},
        "directional": directional,
        "predicted": predicted,
        "delta": delta,
    });
    let human = vec![
        format!("girth: {g}"),
        format!("directional entropy: {directional:.6}"),
        format!("predicted from girth formula: {predicted:.6}"),
        format!("consistent: {}", check.is_consistent()),
    ];
    Ok(if check.is_consistent() {
        Handled::ok(result, human)
    } else {
        Handled::inconclusive(result, human)
    })
}

// ---------------------------------------------------------------------------
// nivat
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct NivatArgs {
    #[command(flatten)]
    spec: SpecArg,
    /// Box dimensions to count on.
    #[arg(long, default_value = "2,2", value_name = "N,M")]
    rect: String,
}

impl NivatArgs {
    fn params(&self) -> Value {
        json!({"config": self.spec.echo(), "rect": self.rect})
    }
}

fn run_nivat(args: &NivatArgs, budget: &mut Budget) -> Result<Handled, Failure> {
    let spec = args.spec.shift()?;
    let dims = parse::int_list(&args.rect)?;
    let [n, m] = dims[..] else {
        return Err(Failure::hard("--rect expects \"N,M\""));
    };
    if n < 1 || m < 1 {
        return Err(Failure::hard("--rect dimensions must be positive"));
    }
    let region = Region::rect(n, m);
    let bound =
        BigUint::from((region.len() as u64 + spec.alphabet_size()).saturating_sub(2));
    let verdict = nivat_bound_check(&spec, &region, budget.remaining())
        .map_err(|e| lift_shift(budget, e))?;
    Ok(match verdict {
        NivatVerdict::BoundHolds(count) => Handled::ok(
            json!({"status": "bound-holds", "count": count.to_string(), "bound": bound.to_string()}),
            vec![format!("count {count} ≤ bound {bound}: bound holds")],
        ),
        NivatVerdict::BoundFails(count) => Handled::ok(
            json!({"status": "bound-fails", "count": count.to_string(), "bound": bound.to_string()}),
            vec![format!("count {count} > bound {bound}: bound fails")],
        ),
    })
}
