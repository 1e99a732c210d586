//! Exact, desk-scale computations on two-dimensional shift spaces whose
//! coding geometry is polygonal.
//!
//! The crate is organised around finite windows: every verdict it emits is a
//! statement about all locally legal colorings of an explicit finite region,
//! so positive answers (a point is forced, a ray is expansive, a polygon is a
//! coding polygon) are sound certificates, while negative answers are always
//! qualified by the window or budget that produced them.
//!
//! Modules:
//! - [`geometry`]: lattice points, rational rays, convex lattice polygons,
//!   sectors, girth, and the ray-to-polygon constructions.
//! - [`shifts`]: shift-space specifications (linear rules over prime fields,
//!   forbidden patterns, group rules, products), regions, and exact pattern
//!   counting.
//! - [`lang1d`]: one-dimensional languages and word counting, including the
//!   phase-constrained restriction languages used in the test corpus.
//! - [`coding`]: the coding relation ("these cells force that cell"), ray
//!   classification, closing certificates, coding polygons, and canonical
//!   recodings.
//! - [`spacetime`]: spacetimes of one-dimensional endomorphisms, width
//!   functions, light cones, and normalization.
//! - [`entropy`]: polygonal and directional entropy estimation, the entropy
//!   sphere, and girth-formula consistency checks.
//! - [`config`]: JSON (de)serialization of specifications and built-in
//!   examples.

pub mod config;
pub mod coding;
pub mod entropy;
pub mod geometry;
pub mod lang1d;
pub mod linalg;
pub mod shifts;
pub mod spacetime;

/// Default work budget (partial states / search nodes) for enumerative
/// algorithms. Exceeding it is reported as an explicit error, never as a
/// silent truncation.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Default tolerance, in nats, for entropy convergence checks.
pub const DEFAULT_TOLERANCE: f64 = 0.02;

/// A metered work budget threaded through multi-stage analyses.
///
/// Units are approximate "work steps" (search nodes, eliminated rows,
/// propagation checks); the meter exists to guarantee termination with an
/// explicit error rather than to measure time precisely.
#[derive(Clone, Debug)]
pub struct Budget {
    limit: u64,
    used: u64,
}

impl Budget {
    pub fn new(limit: u64) -> Budget {
        Budget { limit, used: 0 }
    }

    pub fn unlimited() -> Budget {
        Budget::new(u64::MAX)
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn remaining(&self) -> u64 {
        self.limit - self.used
    }

    /// Charges `n` units; on overrun returns the total used as an error.
    pub fn charge(&mut self, n: u64) -> Result<(), u64> {
        self.used = self.used.saturating_add(n);
        if self.used > self.limit {
            Err(self.used)
        } else {
            Ok(())
        }
    }
}

impl Default for Budget {
    fn default() -> Budget {
        Budget::new(DEFAULT_BUDGET)
    }
}
