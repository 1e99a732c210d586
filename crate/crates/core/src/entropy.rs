//! Linear polygonal entropy H(X, P) = lim_r lim_n ln P(X, (nP)_r)/n,
//! directional entropy as the degenerate-segment case, the girth formula
//! relating the two for triangular systems, the entropy-norm unit sphere,
//! and quasi-conformal dilatation ratios.

use crate::coding::{verify_coding_polygon, CodingError};
use crate::geometry::{girth, merge_edge_vectors, ConvexLatticePolygon, GeometryError, LatticePoint};
use crate::shifts::{count_colorings, Region, ShiftError, ShiftSpec};
use crate::Budget;
use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::ToPrimitive;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("budget exceeded after {used} work units")]
    BudgetExceeded { used: u64 },
    #[error("super-linear growth detected at r = {r}: per-step log-count increments grew by {slope_growth} nats")]
    Divergence { r: i64, slope_growth: f64 },
    #[error("entropy norm is trivial")]
    TrivialNorm,
    #[error("infinite dilatation: some directional entropies vanish while others do not")]
    InfiniteDilatation,
    #[error("estimates did not converge: {0}")]
    Inconclusive(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error(transparent)]
    Shift(ShiftError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Coding(CodingError),
}

fn charge(budget: &mut Budget, n: u64) -> Result<(), EntropyError> {
    budget
        .charge(n)
        .map_err(|used| EntropyError::BudgetExceeded { used })
}

fn lift_shift(budget: &mut Budget, e: ShiftError) -> EntropyError {
    if let ShiftError::BudgetExceeded { used } = e {
        let _ = budget.charge(used);
        EntropyError::BudgetExceeded {
            used: budget.used(),
        }
    } else {
        EntropyError::Shift(e)
    }
}

fn lift_coding(e: CodingError) -> EntropyError {
    match e {
        CodingError::BudgetExceeded { used } => EntropyError::BudgetExceeded { used },
        other => EntropyError::Coding(other),
    }
}

/// Default thickening schedule for the outer limit.
pub fn default_r_schedule() -> Vec<i64> {
    vec![1, 2, 4]
}

/// Per-step log-count increments growing by more than this many nats between
/// the middle and the tail of the n range flag super-linear growth.
pub const DIVERGENCE_SLACK: f64 = 0.25;

// ---------------------------------------------------------------------------
// Counting
// ---------------------------------------------------------------------------

/// Lattice points of the thickened dilate: r = 0 gives the closed polygon
/// nP itself; r ≥ 1 gives {u ∈ ℤ² : d(u, nP) < r} with strict inequality,
/// decided exactly in rational arithmetic.
pub fn scaled_region(
    p: &ConvexLatticePolygon,
    n: i64,
    r: i64,
    budget: &mut Budget,
) -> Result<Region, EntropyError> {
    if n < 1 {
        return Err(EntropyError::NotApplicable("scale must be ≥ 1".into()));
    }
    if r < 0 {
        return Err(EntropyError::NotApplicable("thickening must be ≥ 0".into()));
    }
    let np = p.scale(n)?;
    if r == 0 {
        let pts = np.lattice_points();
        charge(budget, pts.len() as u64)?;
        return Ok(Region::from_points(pts));
    }
    let (mut min_i, mut max_i, mut min_j, mut max_j) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
    for v in np.vertices() {
        min_i = min_i.min(v.i);
        max_i = max_i.max(v.i);
        min_j = min_j.min(v.j);
        max_j = max_j.max(v.j);
    }
    let r2 = Ratio::from_integer((r as i128) * (r as i128));
    let mut pts = Vec::new();
    charge(
        budget,
        ((max_i - min_i + 2 * r + 1) * (max_j - min_j + 2 * r + 1)) as u64,
    )?;
    for j in (min_j - r)..=(max_j + r) {
        for i in (min_i - r)..=(max_i + r) {
            let u = LatticePoint { i, j };
            if np.distance_sq(u) < r2 {
                pts.push(u);
            }
        }
    }
    Ok(Region::from_points(pts))
}

/// P(X, (nP)_r): the exact number of locally legal colorings of the
/// r-thickened dilate nP.
pub fn count_region_scaled(
    spec: &ShiftSpec,
    p: &ConvexLatticePolygon,
    n: i64,
    r: i64,
    budget: &mut Budget,
) -> Result<BigUint, EntropyError> {
    let region = scaled_region(p, n, r, budget)?;
    charge(budget, region.len() as u64)?;
    count_colorings(spec, &region, budget.remaining()).map_err(|e| lift_shift(budget, e))
}

fn ln_big(c: &BigUint) -> f64 {
    let bits = c.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 512 {
        return c.to_f64().expect("small enough for f64").ln();
    }
    let shift = bits - 64;
    let mant = (c >> shift).to_f64().expect("64-bit mantissa");
    mant.ln() + shift as f64 * std::f64::consts::LN_2
}

// ---------------------------------------------------------------------------
// Entropy estimates
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CountMethod {
    /// Counts via constraint-matrix nullity (exact for affine rules).
    ExactLinear,
    /// Counts via budgeted transfer-matrix enumeration.
    Enumerated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TracePoint {
    pub n: i64,
    pub r: i64,
    pub count: BigUint,
    /// ln(count)/n.
    pub quotient: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyEstimate {
    pub value: f64,
    pub trace: Vec<TracePoint>,
    pub method: CountMethod,
    /// Last two trace points within tolerance and the value stable across
    /// the two largest thickenings.
    pub converged: bool,
    pub tolerance: f64,
}

fn is_exact_linear(spec: &ShiftSpec) -> bool {
    match spec {
        ShiftSpec::Linear(_) => true,
        ShiftSpec::Product(a, b) => is_exact_linear(a) && is_exact_linear(b),
        _ => false,
    }
}

fn n_schedule(n_max: i64) -> Vec<i64> {
    let half = (n_max / 2).max(2);
    let mut set = vec![1, 2, 3, 4, half - 1, half, n_max - 1, n_max];
    set.retain(|&n| n >= 1);
    set.sort_unstable();
    set.dedup();
    set
}

/// Estimates H(X, P). For each thickening r the reported value is the tail
/// slope ln count(n_max) − ln count(n_max − 1), which removes the O(r)/n
/// bias of the raw quotient and is exact for affine rules; the final value
/// is the one at the largest r. The trace records every (n, r) pair with
/// its raw quotient ln(count)/n.
pub fn polygonal_entropy(
    spec: &ShiftSpec,
    p: &ConvexLatticePolygon,
    n_max: i64,
    r_schedule: &[i64],
    tolerance: f64,
    budget: &mut Budget,
) -> Result<EntropyEstimate, EntropyError> {
    if n_max < 2 {
        return Err(EntropyError::NotApplicable("n_max must be ≥ 2".into()));
    }
    if !(tolerance > 0.0) {
        return Err(EntropyError::NotApplicable("tolerance must be positive".into()));
    }
    let mut rs: Vec<i64> = r_schedule.to_vec();
    rs.retain(|&r| r >= 1);
    rs.sort_unstable();
    rs.dedup();
    if rs.is_empty() {
        return Err(EntropyError::NotApplicable(
            "the thickening schedule needs at least one r ≥ 1".into(),
        ));
    }
    let ns = n_schedule(n_max);
    let half = (n_max / 2).max(2);
    let method = if is_exact_linear(spec) {
        CountMethod::ExactLinear
    } else {
        CountMethod::Enumerated
    };
    let mut trace: Vec<TracePoint> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut last_tail_step = 0.0;
    for &r in &rs {
        let mut ln_at = std::collections::HashMap::new();
        for &n in &ns {
            let count = count_region_scaled(spec, p, n, r, budget)?;
            if count == BigUint::ZERO {
                return Err(EntropyError::NotApplicable(
                    "the region admits no legal colorings".into(),
                ));
            }
            let ln = ln_big(&count);
            ln_at.insert(n, ln);
            trace.push(TracePoint {
                n,
                r,
                count,
                quotient: ln / n as f64,
            });
        }
        let tail = ln_at[&n_max] - ln_at[&(n_max - 1)];
        if half < n_max - 1 {
            let mid = ln_at[&half] - ln_at[&(half - 1)];
            if tail - mid > DIVERGENCE_SLACK {
                return Err(EntropyError::Divergence {
                    r,
                    slope_growth: tail - mid,
                });
            }
        }
        values.push(tail);
        last_tail_step = (ln_at[&n_max] / n_max as f64)
            - (ln_at[&(n_max - 1)] / (n_max as f64 - 1.0));
    }
    let value = *values.last().unwrap();
    let r_stable = values.len() < 2 || (value - values[values.len() - 2]).abs() < tolerance;
    let converged = last_tail_step.abs() < tolerance && r_stable;
    Ok(EntropyEstimate {
        value,
        trace,
        method,
        converged,
        tolerance,
    })
}

/// Directional entropy h_v(X): polygonal entropy of the degenerate polygon
/// I_v, the segment from the origin to v.
pub fn directional_entropy(
    spec: &ShiftSpec,
    v: LatticePoint,
    n_max: i64,
    r_schedule: &[i64],
    tolerance: f64,
    budget: &mut Budget,
) -> Result<EntropyEstimate, EntropyError> {
    if v.is_zero() {
        return Err(EntropyError::Geometry(GeometryError::InvalidDirection));
    }
    let segment = ConvexLatticePolygon::hull(&[LatticePoint::ORIGIN, v])?;
    polygonal_entropy(spec, &segment, n_max, r_schedule, tolerance, budget)
}

// ---------------------------------------------------------------------------
// The girth formula
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub enum GirthCheck {
    Consistent {
        delta: f64,
        directional: f64,
        predicted: f64,
    },
    Inconsistent {
        delta: f64,
        directional: f64,
        predicted: f64,
    },
}

impl GirthCheck {
    pub fn delta(&self) -> f64 {
        match self {
            GirthCheck::Consistent { delta, .. } | GirthCheck::Inconsistent { delta, .. } => *delta,
        }
    }

    pub fn is_consistent(&self) -> bool {
        matches!(self, GirthCheck::Consistent { .. })
    }
}

/// Checks h_v(X) = H(X, T)·‖v‖/G(T, v) by computing both sides
/// independently. Requires T to be a certified coding polygon.
pub fn girth_formula_check(
    spec: &ShiftSpec,
    t: &ConvexLatticePolygon,
    v: LatticePoint,
    n_max: i64,
    r_schedule: &[i64],
    tolerance: f64,
    budget: &mut Budget,
) -> Result<GirthCheck, EntropyError> {
    let g = girth(t, v)?;
    if g.is_zero() {
        return Err(EntropyError::NotApplicable(
            "the polygon has zero girth in this direction".into(),
        ));
    }
    let check = verify_coding_polygon(spec, t, budget).map_err(lift_coding)?;
    if !check.certified {
        return Err(EntropyError::NotApplicable(
            "the polygon is not a certified coding polygon for this shift".into(),
        ));
    }
    let h = polygonal_entropy(spec, t, n_max, r_schedule, tolerance, budget)?;
    let hv = directional_entropy(spec, v, n_max, r_schedule, tolerance, budget)?;
    if !h.converged || !hv.converged {
        return Err(EntropyError::Inconclusive(
            "polygonal or directional estimate did not converge".into(),
        ));
    }
    let predicted = h.value * v.norm() / g.to_f64();
    let delta = (hv.value - predicted).abs();
    Ok(if delta <= 2.0 * tolerance {
        GirthCheck::Consistent {
            delta,
            directional: hv.value,
            predicted,
        }
    } else {
        GirthCheck::Inconsistent {
            delta,
            directional: hv.value,
            predicted,
        }
    })
}

// ---------------------------------------------------------------------------
// The entropy-norm sphere
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct EntropySphere {
    /// The doubled sphere shape 2·S_X centered at the origin: exact lattice
    /// vertices, centrally symmetric. The unit sphere is these vertices
    /// times scale/2.
    pub hexagon_doubled: ConvexLatticePolygon,
    /// Oriented edges ±E(P) of S_X in angular order.
    pub edges: Vec<LatticePoint>,
    /// 1/H(X, P).
    pub scale: f64,
    pub entropy: EntropyEstimate,
    /// Directional spot checks (edge vector, h_edge) backing the sphere.
    pub spot_checks: Vec<(LatticePoint, f64)>,
    /// All spot checks converged to H(X, P) within 2·tolerance.
    pub verified: bool,
    /// True for non-triangular polygons, where the 2n-gon formula is a
    /// conjecture rather than a theorem.
    pub conjectural: bool,
}

impl EntropySphere {
    /// Unit-sphere vertices in norm coordinates.
    pub fn vertices(&self) -> Vec<(f64, f64)> {
        self.hexagon_doubled
            .vertices()
            .iter()
            .map(|v| (v.i as f64 * self.scale / 2.0, v.j as f64 * self.scale / 2.0))
            .collect()
    }
}

/// The unit sphere of the entropy norm for a system polygonal with respect
/// to P: (1/H(X, P))·S, where S is the centrally symmetric 2n-gon with
/// oriented edges {±e : e ∈ E(P)}.
pub fn entropy_sphere(
    spec: &ShiftSpec,
    p: &ConvexLatticePolygon,
    n_max: i64,
    r_schedule: &[i64],
    tolerance: f64,
    budget: &mut Budget,
) -> Result<EntropySphere, EntropyError> {
    if p.is_degenerate() {
        return Err(EntropyError::NotApplicable(
            "the sphere construction needs a nondegenerate polygon".into(),
        ));
    }
    let entropy = polygonal_entropy(spec, p, n_max, r_schedule, tolerance, budget)?;
    if !(entropy.value > tolerance) {
        return Err(EntropyError::TrivialNorm);
    }
    let neg: Vec<LatticePoint> = p.vertices().iter().map(|&v| -v).collect();
    let neg = ConvexLatticePolygon::hull(&neg)?;
    let hexagon = merge_edge_vectors(p, &neg)?;
    let verts = hexagon.vertices();
    let m = verts.len();
    debug_assert!(m % 2 == 0);
    let c2 = verts[0] + verts[m / 2];
    let doubled: Vec<LatticePoint> = verts.iter().map(|&v| v * 2 - c2).collect();
    for k in 0..m / 2 {
        if doubled[k] != -doubled[k + m / 2] {
            return Err(EntropyError::NotApplicable(
                "edge merge did not produce a centrally symmetric polygon".into(),
            ));
        }
    }
    let hexagon_doubled = ConvexLatticePolygon::hull(&doubled)?;
    let mut spot_checks = Vec::new();
    let mut verified = true;
    for e in p.edge_vectors() {
        let est = directional_entropy(spec, e, n_max, r_schedule, tolerance, budget)?;
        verified = verified && est.converged && (est.value - entropy.value).abs() <= 2.0 * tolerance;
        spot_checks.push((e, est.value));
    }
    Ok(EntropySphere {
        hexagon_doubled,
        edges: hexagon.edge_vectors(),
        scale: 1.0 / entropy.value,
        entropy,
        spot_checks,
        verified,
        conjectural: p.vertices().len() != 3,
    })
}

// ---------------------------------------------------------------------------
// Dilatation
// ---------------------------------------------------------------------------

/// Quasi-conformal dilatation over the given directions: the largest ratio
/// of normalized directional entropies h_u/‖u‖ over h_v/‖v‖ (≥ 1).
pub fn dilatation_ratio(
    spec: &ShiftSpec,
    directions: &[LatticePoint],
    n_max: i64,
    r_schedule: &[i64],
    tolerance: f64,
    budget: &mut Budget,
) -> Result<f64, EntropyError> {
    if directions.len() < 2 {
        return Err(EntropyError::NotApplicable(
            "dilatation needs at least two directions".into(),
        ));
    }
    let mut normalized = Vec::new();
    for &v in directions {
        let est = directional_entropy(spec, v, n_max, r_schedule, tolerance, budget)?;
        if !est.converged {
            return Err(EntropyError::Inconclusive(format!(
                "directional estimate for {:?} did not converge",
                v
            )));
        }
        normalized.push(est.value / v.norm());
    }
    let zeros = normalized.iter().filter(|&&h| h < tolerance).count();
    if zeros == normalized.len() {
        return Err(EntropyError::TrivialNorm);
    }
    if zeros > 0 {
        return Err(EntropyError::InfiniteDilatation);
    }
    let max = normalized.iter().cloned().fold(f64::MIN, f64::max);
    let min = normalized.iter().cloned().fold(f64::MAX, f64::min);
    Ok(max / min)
}
