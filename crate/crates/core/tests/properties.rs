//! Randomized properties: structural invariants that must hold across the
//! whole input space, checked with shrinking. Counting properties are
//! verified against a direct enumeration oracle written here, independent of
//! the library's rank- and transfer-matrix-based counting paths.

use num_bigint::BigUint;
use proptest::prelude::*;
use shiftlab_core::coding::{canonical_recode, codes};
use shiftlab_core::geometry::{pt, ConvexLatticePolygon, LatticePoint, RationalRay};
use shiftlab_core::geometry::polygon_from_rays;
use shiftlab_core::lang1d::Language1D;
use shiftlab_core::shifts::{count_colorings, full_shift, ledrappier, product_shift, Region};
use shiftlab_core::spacetime::{width_table, LocalRule, Spacetime};
use shiftlab_core::Budget;

fn budget() -> Budget {
    Budget::new(1 << 38)
}

fn point(lo: i64, hi: i64) -> impl Strategy<Value = LatticePoint> {
    (lo..=hi, lo..=hi).prop_map(|(i, j)| pt(i, j))
}

fn point_set(
    count: std::ops::RangeInclusive<usize>,
    lo: i64,
    hi: i64,
) -> impl Strategy<Value = Vec<LatticePoint>> {
    prop::collection::vec(point(lo, hi), count)
}

/// Counts the legal three-dot colorings of an arbitrary region by direct
/// enumeration: a coloring is legal when every rule instance whose three
/// cells all lie in the region sums to zero mod 2.
fn three_dot_enumeration(region: &Region) -> BigUint {
    let n = region.len();
    assert!(n <= 16, "oracle only meant for small regions");
    let instances: Vec<(usize, usize, usize)> = region
        .points()
        .iter()
        .filter_map(|&p| {
            Some((
                region.index_of(p)?,
                region.index_of(p + pt(1, 0))?,
                region.index_of(p + pt(0, 1))?,
            ))
        })
        .collect();
    let mut count = 0u64;
    for bits in 0u32..(1 << n) {
        let get = |k: usize| bits >> k & 1;
        if instances.iter().all(|&(a, b, c)| get(a) ^ get(b) ^ get(c) == 0) {
            count += 1;
        }
    }
    BigUint::from(count)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// Convex hulls: vertices come from the input, every input point lies
    /// inside, and the result is a fixed point of hull-taking (so the vertex
    /// list is canonical). Translation commutes with hull-taking.
    #[test]
    fn hull_is_canonical_and_covers_inputs(
        pts in point_set(1..=8, -6, 6),
        v in point(-4, 4),
    ) {
        let hull = ConvexLatticePolygon::hull(&pts).unwrap();
        for vertex in hull.vertices() {
            prop_assert!(pts.contains(vertex), "vertex {vertex:?} not an input point");
        }
        for &p in &pts {
            prop_assert!(hull.contains(p), "input {p:?} outside the hull");
        }
        let again = ConvexLatticePolygon::hull(hull.vertices()).unwrap();
        prop_assert_eq!(&again, &hull);
        let translated_pts: Vec<LatticePoint> = pts.iter().map(|&p| p + v).collect();
        let translated = ConvexLatticePolygon::hull(&translated_pts).unwrap();
        prop_assert_eq!(translated, hull.translate(v));
    }

    /// Polygons built from rays close up (edge vectors sum to zero) and use
    /// only edges parallel, with matching orientation, to the given rays.
    #[test]
    fn ray_polygons_close_up_along_the_rays(dirs in point_set(2..=5, -4, 4)) {
        let rays: Vec<RationalRay> = dirs
            .iter()
            .filter(|d| !d.is_zero())
            .map(|&d| RationalRay::from_dir(d).unwrap())
            .collect();
        prop_assume!(rays.len() >= 2);
        let Ok(polygon) = polygon_from_rays(&rays) else {
            return Ok(()); // no closed positive combination for these rays
        };
        let edges = polygon.edge_vectors();
        let total = edges.iter().fold(pt(0, 0), |acc, &e| acc + e);
        prop_assert!(total.is_zero(), "edges {edges:?} do not close up");
        for e in &edges {
            prop_assert!(
                rays.iter().any(|r| e.det(r.dir) == 0 && e.dot(r.dir) > 0),
                "edge {e:?} not parallel to any input ray"
            );
        }
    }

    /// Pattern counts only depend on the shape of the region, not where it
    /// sits in the plane.
    #[test]
    fn counts_are_translation_invariant(
        pts in point_set(1..=6, -4, 4),
        v in point(-5, 5),
    ) {
        let spec = ledrappier();
        let region = Region::from_points(pts);
        let base = count_colorings(&spec, &region, 1 << 30).unwrap();
        let moved = count_colorings(&spec, &region.translate(v), 1 << 30).unwrap();
        prop_assert_eq!(base, moved);
    }

    /// The rank-based count agrees with direct enumeration over all
    /// colorings on every small region, not just rectangles.
    #[test]
    fn rank_counts_match_enumeration(pts in point_set(1..=12, -3, 3)) {
        let spec = ledrappier();
        let region = Region::from_points(pts);
        prop_assume!(region.len() <= 12);
        let ranked = count_colorings(&spec, &region, 1 << 30).unwrap();
        prop_assert_eq!(ranked, three_dot_enumeration(&region));
    }

    /// Counts of a product system factor through the components.
    #[test]
    fn product_counts_multiply(pts in point_set(1..=8, -3, 3)) {
        let region = Region::from_points(pts);
        let a = ledrappier();
        let b = full_shift(2);
        let prod = product_shift(a.clone(), b.clone()).unwrap();
        let ca = count_colorings(&a, &region, 1 << 30).unwrap();
        let cb = count_colorings(&b, &region, 1 << 30).unwrap();
        let cp = count_colorings(&prod, &region, 1 << 30).unwrap();
        prop_assert_eq!(cp, ca * cb);
    }

    /// Forcing verdicts are monotone: adding sources or enlarging the
    /// analysis window never destroys a forcing certificate, and the verdict
    /// is translation covariant once the window leaves room for the shift.
    #[test]
    fn forced_verdicts_are_monotone_and_translate(
        src in point_set(1..=4, -2, 2),
        b in point(-2, 2),
        extra in point(-2, 2),
        v in point(-2, 2),
    ) {
        let spec = ledrappier();
        let a = Region::from_points(src);
        prop_assume!(!a.contains(b));
        let base = codes(&spec, &a, b, 4, &mut budget()).unwrap();
        if base.is_forced() {
            let wider = codes(&spec, &a, b, 6, &mut budget()).unwrap();
            prop_assert!(wider.is_forced(), "radius growth lost the certificate");
            let more = codes(&spec, &a.union(&Region::from_points([extra])), b, 4, &mut budget())
                .unwrap();
            prop_assert!(more.is_forced(), "extra source lost the certificate");
            let shifted = codes(&spec, &a.translate(v), b + v, 8, &mut budget()).unwrap();
            prop_assert!(shifted.is_forced(), "translation by {v:?} lost the certificate");
        }
    }

    /// Recoded pattern counts obey the window-union identity: counting the
    /// recoded letters on R is counting the source colorings on R ⊕ F. The
    /// recoded alphabet itself is the F-pattern count.
    #[test]
    fn recoding_preserves_counts(
        window_pts in point_set(1..=3, 0, 1),
        region_pts in point_set(1..=4, -3, 3),
    ) {
        let spec = ledrappier();
        let window = Region::from_points(window_pts);
        let rec = canonical_recode(&spec, &window, &mut budget()).unwrap();
        let letters = count_colorings(&spec, &window, 1 << 30).unwrap();
        prop_assert_eq!(BigUint::from(rec.alphabet()), letters);
        let region = Region::from_points(region_pts);
        let recoded = count_colorings(&rec.spec, &region, 1 << 30).unwrap();
        let source_region = region.minkowski_with(rec.window.points());
        let source = count_colorings(&spec, &source_region, 1 << 30).unwrap();
        prop_assert_eq!(recoded, source);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Width functions of any binary cellular automaton on the full shift
    /// are subadditive above and superadditive below.
    #[test]
    fn widths_are_subadditive(
        lo in -1i64..=0,
        hi in 0i64..=1,
        bits in 0u32..256,
    ) {
        let width = (hi - lo + 1) as u32;
        let table: Vec<u16> = (0..1u32 << width).map(|k| (bits >> k & 1) as u16).collect();
        let rule = LocalRule::new(lo, hi, 2, table).unwrap();
        let st = Spacetime::new(Language1D::full(2), rule, 1 << 30).unwrap();
        let Ok(table) = width_table(&st, 6, &mut budget()) else {
            return Ok(()); // rules with eventually constant image have no finite widths
        };
        for m in 1..=5usize {
            for n in 1..=(6 - m) {
                prop_assert!(
                    table.w_plus(m + n) <= table.w_plus(m) + table.w_plus(n),
                    "W+({}) > W+({m}) + W+({n})", m + n
                );
                prop_assert!(
                    table.w_minus(m + n) >= table.w_minus(m) + table.w_minus(n),
                    "W-({}) < W-({m}) + W-({n})", m + n
                );
            }
        }
    }

    /// Monotone forcing also holds on the enumerative path (no linear
    /// structure): certificates survive a wider window and extra sources.
    #[test]
    fn forced_verdicts_are_monotone_without_linearity(
        src in point_set(1..=3, -1, 1),
        b in point(-2, 2),
        extra in point(-2, 2),
    ) {
        let rec = canonical_recode(
            &ledrappier(),
            &Region::from_points([pt(0, 0), pt(1, 0)]),
            &mut budget(),
        )
        .unwrap();
        let a = Region::from_points(src);
        prop_assume!(!a.contains(b));
        let base = codes(&rec.spec, &a, b, 3, &mut budget()).unwrap();
        if base.is_forced() {
            let wider = codes(&rec.spec, &a, b, 4, &mut budget()).unwrap();
            prop_assert!(wider.is_forced(), "radius growth lost the certificate");
            let more = codes(
                &rec.spec,
                &a.union(&Region::from_points([extra])),
                b,
                3,
                &mut budget(),
            )
            .unwrap();
            prop_assert!(more.is_forced(), "extra source lost the certificate");
        }
    }
}
