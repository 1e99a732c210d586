//! Lattice geometry: points, rational rays, convex lattice polygons, sectors.
//!
//! All predicates are exact (integer or rational arithmetic); floating point
//! appears only in explicitly approximate accessors such as
//! [`GirthValue::to_f64`].

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// A point of ℤ² (also used as an integer vector).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint {
    pub i: i64,
    pub j: i64,
}

/// Shorthand constructor.
pub const fn pt(i: i64, j: i64) -> LatticePoint {
    LatticePoint { i, j }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

impl Add for LatticePoint {
    type Output = LatticePoint;
    fn add(self, rhs: LatticePoint) -> LatticePoint {
        pt(self.i + rhs.i, self.j + rhs.j)
    }
}

impl Sub for LatticePoint {
    type Output = LatticePoint;
    fn sub(self, rhs: LatticePoint) -> LatticePoint {
        pt(self.i - rhs.i, self.j - rhs.j)
    }
}

impl Neg for LatticePoint {
    type Output = LatticePoint;
    fn neg(self) -> LatticePoint {
        pt(-self.i, -self.j)
    }
}

impl Mul<i64> for LatticePoint {
    type Output = LatticePoint;
    fn mul(self, rhs: i64) -> LatticePoint {
        pt(self.i * rhs, self.j * rhs)
    }
}

impl LatticePoint {
    pub const ORIGIN: LatticePoint = pt(0, 0);

    pub fn is_zero(self) -> bool {
        self.i == 0 && self.j == 0
    }

    /// 2×2 determinant `det(self, other)`; positive iff `other` lies
    /// counterclockwise of `self`.
    pub fn det(self, other: LatticePoint) -> i128 {
        self.i as i128 * other.j as i128 - self.j as i128 * other.i as i128
    }

    pub fn dot(self, other: LatticePoint) -> i128 {
        self.i as i128 * other.i as i128 + self.j as i128 * other.j as i128
    }

    /// Squared Euclidean norm.
    pub fn norm_sq(self) -> i128 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    /// The primitive vector with the same direction. Zero maps to zero.
    pub fn primitive(self) -> LatticePoint {
        if self.is_zero() {
            return self;
        }
        let g = self.i.abs().gcd(&self.j.abs());
        pt(self.i / g, self.j / g)
    }

    pub fn is_primitive(self) -> bool {
        !self.is_zero() && self.i.abs().gcd(&self.j.abs()) == 1
    }

    /// Total order by angle in [0, 2π), measured from the positive i-axis.
    /// Only meaningful for nonzero vectors.
    pub fn angle_key(self) -> (u8, LatticePoint) {
        // Half 0 covers angles [0, π), half 1 covers [π, 2π).
        let half = if self.j > 0 || (self.j == 0 && self.i > 0) {
            0
        } else {
            1
        };
        (half, self)
    }

    /// Exact angular comparison in [0, 2π) from the positive i-axis.
    pub fn angle_cmp(self, other: LatticePoint) -> std::cmp::Ordering {
        let (ha, _) = self.angle_key();
        let (hb, _) = other.angle_key();
        ha.cmp(&hb).then_with(|| {
            let d = self.det(other);
            // Same half-turn: positive det means self comes first.
            0i128.cmp(&d).then_with(|| {
                // Parallel (same direction within a half): tie-break by length
                // so sorting is total; callers that care have merged already.
                self.norm_sq().cmp(&other.norm_sq())
            })
        })
    }
}

/// Relation between two nonzero direction vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parallelism {
    PositivelyParallel,
    Antiparallel,
    NotParallel,
}

/// Classifies two nonzero vectors as positively parallel, antiparallel, or
/// not parallel.
pub fn parallel_class(a: LatticePoint, b: LatticePoint) -> Result<Parallelism, GeometryError> {
    if a.is_zero() || b.is_zero() {
        return Err(GeometryError::InvalidDirection);
    }
    Ok(if a.det(b) != 0 {
        Parallelism::NotParallel
    } else if a.dot(b) > 0 {
        Parallelism::PositivelyParallel
    } else {
        Parallelism::Antiparallel
    })
}

#[derive(Debug, thiserror::Error, PartialEq, Eq, Clone)]
pub enum GeometryError {
    #[error("direction vector must be nonzero")]
    InvalidDirection,
    #[error("empty point set")]
    EmptyInput,
    #[error("polygon scale factor must be a positive integer")]
    InvalidScale,
    #[error("open cone between the rays is empty")]
    EmptyCone,
    #[error("no polygon: ray directions do not positively span the plane")]
    NoPolygon,
    #[error("rays must be pairwise non-positively-parallel")]
    PositivelyParallelRays,
    #[error("multiplier search exceeded its budget")]
    BudgetExceeded,
}

/// A rational ray: a primitive integer direction anchored at a base point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalRay {
    /// Primitive direction vector.
    pub dir: LatticePoint,
    /// Base point (the ray is `{base + t·dir : t ≥ 0}`).
    pub base: LatticePoint,
}

impl RationalRay {
    /// Ray through the origin; the direction is reduced to primitive form.
    pub fn from_dir(dir: LatticePoint) -> Result<RationalRay, GeometryError> {
        Self::new(dir, LatticePoint::ORIGIN)
    }

    pub fn new(dir: LatticePoint, base: LatticePoint) -> Result<RationalRay, GeometryError> {
        if dir.is_zero() {
            return Err(GeometryError::InvalidDirection);
        }
        Ok(RationalRay {
            dir: dir.primitive(),
            base,
        })
    }

    /// The closed half plane on the walker's left when traveling along the
    /// ray: `{p : det(dir, p − base) ≥ 0}`.
    ///
    /// This is the orientation convention used throughout: a ray and "its"
    /// half space always pair this way, e.g. (1,0) ↔ {j ≥ 0},
    /// (0,−1) ↔ {i ≥ 0}, (−1,1) ↔ {i + j ≤ 0}.
    pub fn half_space_contains(&self, p: LatticePoint) -> bool {
        self.dir.det(p - self.base) >= 0
    }

    /// Signed lattice distance of `p` from the boundary line of the half
    /// space: 0 on the line, positive inside, −1 on the first line outside.
    pub fn line_level(&self, p: LatticePoint) -> i128 {
        self.dir.det(p - self.base)
    }
}

/// A convex lattice polygon, stored as its vertex cycle in counterclockwise
/// order with no three consecutive vertices collinear. Degenerate cases are
/// permitted and flagged: a single vertex (point) or two vertices (segment).
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConvexLatticePolygon {
    vertices: Vec<LatticePoint>,
}

impl fmt::Debug for ConvexLatticePolygon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polygon{:?}", self.vertices)
    }
}

impl ConvexLatticePolygon {
    /// Convex hull of a nonempty finite point set (monotone chain).
    /// Collinear boundary points are dropped; the result is the minimal
    /// vertex description, rotated so the lexicographically least vertex
    /// comes first.
    pub fn hull(points: &[LatticePoint]) -> Result<ConvexLatticePolygon, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::EmptyInput);
        }
        let mut pts: Vec<LatticePoint> = points.to_vec();
        pts.sort();
        pts.dedup();
        if pts.len() == 1 {
            return Ok(ConvexLatticePolygon { vertices: pts });
        }
        // Collinear check: all on one line through pts[0]?
        let d = pts[pts.len() - 1] - pts[0];
        if pts.iter().all(|&p| d.det(p - pts[0]) == 0) {
            // Sorted order puts the two extremes at the ends.
            return Ok(ConvexLatticePolygon {
                vertices: vec![pts[0], pts[pts.len() - 1]],
            });
        }
        let chain = |iter: &mut dyn Iterator<Item = LatticePoint>| {
            let mut out: Vec<LatticePoint> = Vec::new();
            for p in iter {
                while out.len() >= 2 {
                    let a = out[out.len() - 2];
                    let b = out[out.len() - 1];
                    // Keep only strict left turns (strictly convex vertices).
                    if (b - a).det(p - a) <= 0 {
                        out.pop();
                    } else {
                        break;
                    }
                }
                out.push(p);
            }
            out
        };
        let lower = chain(&mut pts.iter().copied());
        let upper = chain(&mut pts.iter().rev().copied());
        let mut vertices = lower;
        vertices.pop();
        vertices.extend_from_slice(&upper[..upper.len() - 1]);
        let mut poly = ConvexLatticePolygon { vertices };
        poly.normalize();
        Ok(poly)
    }

    fn normalize(&mut self) {
        if let Some(k) = self
            .vertices
            .iter()
            .enumerate()
            .min_by_key(|(_, v)| **v)
            .map(|(k, _)| k)
        {
            self.vertices.rotate_left(k);
        }
    }

    pub fn vertices(&self) -> &[LatticePoint] {
        &self.vertices
    }

    /// True for a point or segment.
    pub fn is_degenerate(&self) -> bool {
        self.vertices.len() < 3
    }

    pub fn is_point(&self) -> bool {
        self.vertices.len() == 1
    }

    pub fn is_segment(&self) -> bool {
        self.vertices.len() == 2
    }

    /// Oriented edge vectors in counterclockwise cyclic order. A segment
    /// contributes both orientations; a point contributes none.
    pub fn edge_vectors(&self) -> Vec<LatticePoint> {
        match self.vertices.len() {
            0 | 1 => Vec::new(),
            2 => {
                let d = self.vertices[1] - self.vertices[0];
                vec![d, -d]
            }
            n => (0..n)
                .map(|k| self.vertices[(k + 1) % n] - self.vertices[k])
                .collect(),
        }
    }

    pub fn translate(&self, v: LatticePoint) -> ConvexLatticePolygon {
        let mut poly = ConvexLatticePolygon {
            vertices: self.vertices.iter().map(|&w| w + v).collect(),
        };
        poly.normalize();
        poly
    }

    /// Dilation `nP` by a positive integer factor.
    pub fn scale(&self, n: i64) -> Result<ConvexLatticePolygon, GeometryError> {
        if n < 1 {
            return Err(GeometryError::InvalidScale);
        }
        Ok(ConvexLatticePolygon {
            vertices: self.vertices.iter().map(|&v| v * n).collect(),
        })
    }

    /// Exact membership test for the closed polygon (or segment/point).
    pub fn contains(&self, p: LatticePoint) -> bool {
        match self.vertices.len() {
            1 => p == self.vertices[0],
            2 => {
                let (a, b) = (self.vertices[0], self.vertices[1]);
                let d = b - a;
                d.det(p - a) == 0 && d.dot(p - a) >= 0 && (a - b).dot(p - b) >= 0
            }
            n => (0..n).all(|k| {
                let a = self.vertices[k];
                let b = self.vertices[(k + 1) % n];
                (b - a).det(p - a) >= 0
            }),
        }
    }

    /// All lattice points of the closed polygon.
    pub fn lattice_points(&self) -> Vec<LatticePoint> {
        let (min_i, max_i) = self
            .vertices
            .iter()
            .fold((i64::MAX, i64::MIN), |(lo, hi), v| {
                (lo.min(v.i), hi.max(v.i))
            });
        let (min_j, max_j) = self
            .vertices
            .iter()
            .fold((i64::MAX, i64::MIN), |(lo, hi), v| {
                (lo.min(v.j), hi.max(v.j))
            });
        let mut out = Vec::new();
        for j in min_j..=max_j {
            for i in min_i..=max_i {
                let p = pt(i, j);
                if self.contains(p) {
                    out.push(p);
                }
            }
        }
        out
    }

    /// Squared diameter (max squared distance between vertices).
    pub fn diameter_sq(&self) -> i128 {
        let mut best = 0i128;
        for (k, &a) in self.vertices.iter().enumerate() {
            for &b in &self.vertices[k + 1..] {
                best = best.max((a - b).norm_sq());
            }
        }
        best
    }

    /// Smallest integer ≥ the Euclidean diameter.
    pub fn diameter_ceil(&self) -> i64 {
        let d2 = self.diameter_sq();
        let mut r = (d2 as f64).sqrt().ceil() as i64;
        while (r as i128) * (r as i128) < d2 {
            r += 1;
        }
        while r > 0 && ((r - 1) as i128) * ((r - 1) as i128) >= d2 {
            r -= 1;
        }
        r
    }

    /// Exact squared Euclidean distance from a lattice point to the closed
    /// polygon (zero if inside).
    pub fn distance_sq(&self, p: LatticePoint) -> Ratio<i128> {
        if self.contains(p) {
            return Ratio::from_integer(0);
        }
        let seg_dist = |a: LatticePoint, b: LatticePoint| -> Ratio<i128> {
            let d = b - a;
            let len2 = d.norm_sq();
            if len2 == 0 {
                return Ratio::from_integer((p - a).norm_sq());
            }
            let t = Ratio::new(d.dot(p - a), len2);
            let t = t.max(Ratio::from_integer(0)).min(Ratio::from_integer(1));
            // |p − (a + t·d)|²
            let px = Ratio::from_integer((p - a).i as i128) - t * Ratio::from_integer(d.i as i128);
            let py = Ratio::from_integer((p - a).j as i128) - t * Ratio::from_integer(d.j as i128);
            px.clone() * px + py.clone() * py
        };
        match self.vertices.len() {
            1 => Ratio::from_integer((p - self.vertices[0]).norm_sq()),
            2 => seg_dist(self.vertices[0], self.vertices[1]),
            n => (0..n)
                .map(|k| seg_dist(self.vertices[k], self.vertices[(k + 1) % n]))
                .min()
                .unwrap(),
        }
    }

    /// Builds the polygon whose counterclockwise oriented edges are exactly
    /// `edges` (which must sum to zero and contain no positively parallel
    /// pair). Vertices start from the cumulative sums anchored at the origin,
    /// then the cycle is rotated to canonical form.
    fn from_edges(mut edges: Vec<LatticePoint>) -> ConvexLatticePolygon {
        edges.sort_by(|a, b| a.angle_cmp(*b));
        let mut vertices = vec![LatticePoint::ORIGIN];
        for &e in &edges[..edges.len() - 1] {
            let last = *vertices.last().unwrap();
            vertices.push(last + e);
        }
        if edges.len() == 2 {
            // Antiparallel pair: degenerate segment.
            vertices.truncate(2);
        }
        let mut poly = ConvexLatticePolygon { vertices };
        poly.normalize();
        poly
    }

    /// Searches for a translate of `other` contained in `self` (brute force
    /// over the bounding-box offset range). Intended for tests and
    /// invariant checks at desk scale.
    pub fn contains_translate_of(&self, other: &ConvexLatticePolygon) -> Option<LatticePoint> {
        let bbox = |poly: &ConvexLatticePolygon| {
            let vs = poly.vertices();
            let min_i = vs.iter().map(|v| v.i).min().unwrap();
            let max_i = vs.iter().map(|v| v.i).max().unwrap();
            let min_j = vs.iter().map(|v| v.j).min().unwrap();
            let max_j = vs.iter().map(|v| v.j).max().unwrap();
            (min_i, max_i, min_j, max_j)
        };
        let (smin_i, smax_i, smin_j, smax_j) = bbox(self);
        let (omin_i, omax_i, omin_j, omax_j) = bbox(other);
        for di in (smin_i - omin_i)..=(smax_i - omax_i) {
            for dj in (smin_j - omin_j)..=(smax_j - omax_j) {
                let v = pt(di, dj);
                if other.vertices().iter().all(|&w| self.contains(w + v)) {
                    return Some(v);
                }
            }
        }
        None
    }
}

/// An exact nonnegative value of the form `ratio · √radicand` with
/// `radicand` squarefree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GirthValue {
    pub ratio: Ratio<i128>,
    pub radicand: i128,
}

impl GirthValue {
    pub fn zero() -> GirthValue {
        GirthValue {
            ratio: Ratio::from_integer(0),
            radicand: 1,
        }
    }

    fn from_sqrt(ratio: Ratio<i128>, radicand: i128) -> GirthValue {
        if ratio == Ratio::from_integer(0) {
            return GirthValue::zero();
        }
        let (square, rest) = extract_square(radicand);
        GirthValue {
            ratio: ratio * Ratio::from_integer(square),
            radicand: rest,
        }
    }

    pub fn to_f64(&self) -> f64 {
        let r = *self.ratio.numer() as f64 / *self.ratio.denom() as f64;
        r * (self.radicand as f64).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.ratio == Ratio::from_integer(0)
    }
}

impl fmt::Display for GirthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.radicand == 1 {
            write!(f, "{}", self.ratio)
        } else {
            write!(f, "{}·√{}", self.ratio, self.radicand)
        }
    }
}

/// Writes `n = square² · rest` with `rest` squarefree; returns (square, rest).
fn extract_square(n: i128) -> (i128, i128) {
    debug_assert!(n > 0);
    let mut square = 1i128;
    let mut rest = n;
    let mut d = 2i128;
    while d * d <= rest {
        while rest % (d * d) == 0 {
            rest /= d * d;
            square *= d;
        }
        d += 1;
    }
    (square, rest)
}

/// Girth of the polygon in direction `v`: the maximum Euclidean length of a
/// chord of `P` parallel to `v`. Exact; the maximum over offsets of the chord
/// length is attained on a line through a vertex, so it suffices to scan the
/// vertices.
pub fn girth(p: &ConvexLatticePolygon, v: LatticePoint) -> Result<GirthValue, GeometryError> {
    if v.is_zero() {
        return Err(GeometryError::InvalidDirection);
    }
    let d = v.primitive();
    match p.vertices().len() {
        1 => Ok(GirthValue::zero()),
        2 => {
            let e = p.vertices()[1] - p.vertices()[0];
            if e.det(d) != 0 {
                return Ok(GirthValue::zero());
            }
            let m = (e.norm_sq() / d.norm_sq()) as i128;
            // e = ±√m · d with m a perfect square of the multiple.
            let (mult, _) = extract_square(m);
            Ok(GirthValue::from_sqrt(
                Ratio::from_integer(mult),
                d.norm_sq(),
            ))
        }
        n => {
            let mut best: Option<Ratio<i128>> = None;
            for &w in p.vertices() {
                // Chord {w + t·d} ∩ P as an exact t-interval.
                let mut lo: Option<Ratio<i128>> = None;
                let mut hi: Option<Ratio<i128>> = None;
                let mut empty = false;
                for k in 0..n {
                    let a = p.vertices()[k];
                    let b = p.vertices()[(k + 1) % n];
                    let e = b - a;
                    // Inside: det(e, w + t·d − a) ≥ 0  ⇔  c0 + t·c1 ≥ 0.
                    let c0 = e.det(w - a);
                    let c1 = e.det(d);
                    if c1 == 0 {
                        if c0 < 0 {
                            empty = true;
                            break;
                        }
                    } else {
                        let bound = Ratio::new(-c0, c1);
                        if c1 > 0 {
                            lo = Some(match lo {
                                None => bound,
                                Some(t) => t.max(bound),
                            });
                        } else {
                            hi = Some(match hi {
                                None => bound,
                                Some(t) => t.min(bound),
                            });
                        }
                    }
                }
                if empty {
                    continue;
                }
                if let (Some(lo), Some(hi)) = (lo, hi) {
                    if hi >= lo {
                        let len = hi - lo;
                        best = Some(match best {
                            None => len,
                            Some(b) => b.max(len),
                        });
                    }
                }
            }
            let dt = best.unwrap_or_else(|| Ratio::from_integer(0));
            Ok(GirthValue::from_sqrt(dt, d.norm_sq()))
        }
    }
}

/// Minimal positive integer multipliers `m` with `Σ mᵢ·dirᵢ = 0`.
///
/// Minimality is total multiplier sum `Σ mᵢ` (equivalently the
/// denominator-clearing multiplier of the normalized rational solution),
/// ties broken by the lexicographically smallest multiplier vector in the
/// given ray order.
fn minimal_positive_combination(dirs: &[LatticePoint]) -> Result<Vec<i64>, GeometryError> {
    let n = dirs.len();
    // Breadth-first search for the minimal number of extra copies needed to
    // cancel the all-ones combination.
    let start = dirs
        .iter()
        .fold(LatticePoint::ORIGIN, |acc, &d| acc + d);
    let mut frontier = vec![start];
    let mut visited: HashSet<LatticePoint> = frontier.iter().copied().collect();
    let mut extra = 0u64;
    const MAX_EXTRA: u64 = 4096;
    const MAX_VISITED: usize = 4_000_000;
    while !frontier.iter().any(|p| p.is_zero()) {
        extra += 1;
        if extra > MAX_EXTRA || visited.len() > MAX_VISITED {
            return Err(GeometryError::BudgetExceeded);
        }
        let mut next = Vec::new();
        for &p in &frontier {
            for &d in dirs {
                let q = p + d;
                if visited.insert(q) {
                    next.push(q);
                }
            }
        }
        if next.is_empty() {
            return Err(GeometryError::NoPolygon);
        }
        frontier = next;
    }
    let total = n as i64 + extra as i64;
    // Among all solutions with Σmᵢ = total, take the lexicographically
    // smallest. Depth-first over m₁..m_{n−2} ascending with the last two
    // multipliers solved exactly; the last two slots are chosen (by an
    // internal permutation) to be linearly independent.
    let mut order: Vec<usize> = (0..n).collect();
    let mut last_pair = None;
    'outer: for a in 0..n {
        for b in 0..n {
            if a != b && dirs[a].det(dirs[b]) != 0 {
                last_pair = Some((a, b));
                break 'outer;
            }
        }
    }
    let (a, b) = last_pair.ok_or(GeometryError::NoPolygon)?;
    order.retain(|&k| k != a && k != b);
    order.push(a);
    order.push(b);
    let mut best: Option<Vec<i64>> = None;
    let mut m = vec![0i64; n];
    fn rec(
        dirs: &[LatticePoint],
        order: &[usize],
        pos: usize,
        remaining: i64,
        partial: LatticePoint,
        m: &mut Vec<i64>,
        best: &mut Option<Vec<i64>>,
    ) {
        let n = order.len();
        if pos == n - 2 {
            // Solve m_a·dirs[a] + m_b·dirs[b] = −partial exactly.
            let (a, b) = (order[n - 2], order[n - 1]);
            let (da, db) = (dirs[a], dirs[b]);
            let det = da.det(db);
            let rhs = -partial;
            // Cramer: m_a = det(rhs, db)/det, m_b = det(da, rhs)/det.
            let na = rhs.det(db);
            let nb = da.det(rhs);
            if na % det != 0 || nb % det != 0 {
                return;
            }
            let ma = (na / det) as i64;
            let mb = (nb / det) as i64;
            if ma < 1 || mb < 1 || ma + mb != remaining {
                return;
            }
            m[a] = ma;
            m[b] = mb;
            if best.is_none() || m[..] < best.as_ref().unwrap()[..] {
                *best = Some(m.clone());
            }
            m[a] = 0;
            m[b] = 0;
            return;
        }
        let slots_left = (n - pos) as i64;
        // Each remaining slot needs at least 1.
        for val in 1..=(remaining - (slots_left - 1)) {
            m[order[pos]] = val;
            rec(
                dirs,
                order,
                pos + 1,
                remaining - val,
                partial + dirs[order[pos]] * val,
                m,
                best,
            );
            m[order[pos]] = 0;
        }
    }
    rec(
        dirs,
        &order,
        0,
        total,
        LatticePoint::ORIGIN,
        &mut m,
        &mut best,
    );
    best.ok_or(GeometryError::NoPolygon)
}

/// Constructs the minimal integer polygon whose oriented edges are positive
/// multiples of the given ray directions (one edge per ray, counterclockwise
/// order). Exactly two antiparallel rays produce a degenerate segment.
///
/// Errors with [`GeometryError::NoPolygon`] when the directions do not
/// positively span the plane (all representatives in a closed half plane
/// with fewer than two boundary rays).
pub fn polygon_from_rays(rays: &[RationalRay]) -> Result<ConvexLatticePolygon, GeometryError> {
    if rays.len() < 2 {
        return Err(GeometryError::NoPolygon);
    }
    let dirs: Vec<LatticePoint> = rays.iter().map(|r| r.dir).collect();
    for (k, &a) in dirs.iter().enumerate() {
        for &b in &dirs[k + 1..] {
            if parallel_class(a, b)? == Parallelism::PositivelyParallel {
                return Err(GeometryError::PositivelyParallelRays);
            }
        }
    }
    if dirs.len() == 2 {
        return if parallel_class(dirs[0], dirs[1])? == Parallelism::Antiparallel {
            Ok(ConvexLatticePolygon::from_edges(vec![dirs[0], dirs[1]]))
        } else {
            Err(GeometryError::NoPolygon)
        };
    }
    // Origin must be strictly interior to the hull of the directions:
    // sorted by angle, every consecutive gap is strictly less than π,
    // i.e. each cyclically consecutive pair has positive determinant.
    let mut sorted = dirs.clone();
    sorted.sort_by(|a, b| a.angle_cmp(*b));
    for k in 0..sorted.len() {
        let a = sorted[k];
        let b = sorted[(k + 1) % sorted.len()];
        if a.det(b) <= 0 {
            return Err(GeometryError::NoPolygon);
        }
    }
    let m = minimal_positive_combination(&dirs)?;
    let edges: Vec<LatticePoint> = dirs
        .iter()
        .zip(&m)
        .map(|(&d, &mult)| d * mult)
        .collect();
    Ok(ConvexLatticePolygon::from_edges(edges))
}

/// Merges the oriented edge multisets of two polygons: positively parallel
/// edges are summed, and the combined edges are reassembled in angular order
/// into a convex polygon. Both inputs embed in the result by translation.
pub fn merge_edge_vectors(
    p1: &ConvexLatticePolygon,
    p2: &ConvexLatticePolygon,
) -> Result<ConvexLatticePolygon, GeometryError> {
    let mut by_dir: Vec<(LatticePoint, i64)> = Vec::new();
    for e in p1.edge_vectors().into_iter().chain(p2.edge_vectors()) {
        let d = e.primitive();
        let mult = (e.i.abs().max(e.j.abs())) / (d.i.abs().max(d.j.abs()));
        match by_dir.iter_mut().find(|(dir, _)| *dir == d) {
            Some((_, m)) => *m += mult,
            None => by_dir.push((d, mult)),
        }
    }
    if by_dir.is_empty() {
        // Two points merge to a point.
        return Ok(ConvexLatticePolygon {
            vertices: vec![LatticePoint::ORIGIN],
        });
    }
    if by_dir.len() == 1 {
        return Err(GeometryError::NoPolygon);
    }
    let edges: Vec<LatticePoint> = by_dir.iter().map(|&(d, m)| d * m).collect();
    let sum = edges
        .iter()
        .fold(LatticePoint::ORIGIN, |acc, &e| acc + e);
    if !sum.is_zero() {
        return Err(GeometryError::NoPolygon);
    }
    Ok(ConvexLatticePolygon::from_edges(edges))
}

/// A unimodular basis strictly inside the open cone between the two rays
/// (positively oriented, angle < π). Built from the cone's mediant direction
/// in Stern–Brocot style: the first vector is the reduced mediant, the
/// second is the smallest completion of it to a determinant-one basis that
/// also lies strictly inside the cone.
pub fn basis_in_cone(
    ray1: &RationalRay,
    ray2: &RationalRay,
) -> Result<(LatticePoint, LatticePoint), GeometryError> {
    let d1 = ray1.dir;
    let d2 = ray2.dir;
    if d1.det(d2) <= 0 {
        return Err(GeometryError::EmptyCone);
    }
    let w = (d1 + d2).primitive();
    debug_assert!(d1.det(w) > 0 && w.det(d2) > 0);
    // Extended gcd completion: u* with det(w, u*) = 1.
    let egcd = num_integer::Integer::extended_gcd(&w.i, &w.j);
    debug_assert_eq!(egcd.gcd, 1);
    // w.i·x + w.j·y = 1 with (x, y) = (egcd.x, egcd.y); then
    // det(w, (−y, x)) = w.i·x − w.j·(−y) = 1.
    let u_star = pt(-egcd.y, egcd.x);
    debug_assert_eq!(w.det(u_star), 1);
    // Shift u* + t·w into the open cone with the smallest valid integer t:
    //   det(d1, u* + t·w) > 0  and  det(u* + t·w, d2) > 0.
    let strict_lower = |num: i128, den: i128| -> i128 {
        // Smallest integer t with den·t > num (den > 0).
        debug_assert!(den > 0);
        num.div_euclid(den) + 1
    };
    let t1 = strict_lower(-d1.det(u_star), d1.det(w));
    let t2 = strict_lower(-u_star.det(d2), w.det(d2));
    let t = t1.max(t2).max(i128::MIN + 1);
    let u2 = u_star + w * (t as i64);
    debug_assert_eq!(w.det(u2), 1);
    debug_assert!(d1.det(u2) > 0 && u2.det(d2) > 0);
    Ok((w, u2))
}

/// A sector: the closed cone between two rays from a common base point, with
/// angle strictly between 0 and π (det(dir1, dir2) > 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sector {
    pub base: LatticePoint,
    pub dir1: LatticePoint,
    pub dir2: LatticePoint,
}

impl Sector {
    pub fn new(
        base: LatticePoint,
        dir1: LatticePoint,
        dir2: LatticePoint,
    ) -> Result<Sector, GeometryError> {
        if dir1.is_zero() || dir2.is_zero() {
            return Err(GeometryError::InvalidDirection);
        }
        let (d1, d2) = (dir1.primitive(), dir2.primitive());
        if d1.det(d2) <= 0 {
            return Err(GeometryError::EmptyCone);
        }
        Ok(Sector {
            base,
            dir1: d1,
            dir2: d2,
        })
    }

    /// Closed membership: on either bounding ray or strictly between them.
    pub fn contains(&self, p: LatticePoint) -> bool {
        let v = p - self.base;
        self.dir1.det(v) >= 0 && v.det(self.dir2) >= 0
    }

    /// The supplementary sector sharing the `dir2` ray; the union of a
    /// sector and its supplementary sector is the closed half plane
    /// `{p : det(dir1, p − base) ≥ 0}`.
    pub fn supplementary(&self) -> Sector {
        Sector {
            base: self.base,
            dir1: self.dir2,
            dir2: -self.dir1,
        }
    }
}

/// The corner sector of a convex polygon at vertex index `k`: based at the
/// vertex, bounded by the rays along the two edges of `P` meeting there (so
/// the polygon lies inside the sector near the vertex).
pub fn corner_sector(p: &ConvexLatticePolygon, k: usize) -> Result<Sector, GeometryError> {
    let n = p.vertices().len();
    if n < 3 {
        return Err(GeometryError::EmptyCone);
    }
    let v = p.vertices()[k % n];
    let next = p.vertices()[(k + 1) % n];
    let prev = p.vertices()[(k + n - 1) % n];
    Sector::new(v, next - v, prev - v)
}
