//! The coding relation and everything built on it: forcing verdicts,
//! expansiveness certification for rays, closing certificates, corner
//! coding, coding-polygon verification and construction, canonical
//! recodings, and periodic-direction detection.
//!
//! All positive answers are finite certificates: `Forced` means *every*
//! locally legal coloring of the analysis window that matches the sources
//! matches the target, so it remains true for the full shift. Negative
//! answers are explicitly relative to the window radius and work budget.

use crate::geometry::{
    polygon_from_rays, pt, ConvexLatticePolygon, GeometryError, LatticePoint, RationalRay, Sector,
};
use crate::linalg::LinearSolver;
use crate::shifts::{
    dp_count, instances_in_region, Color, ConstraintFamily, ForbiddenFamily, ForbiddenRule,
    LinearRule, Pattern, Region, ShiftError, ShiftSpec,
};
use crate::Budget;
use std::collections::{BTreeSet, VecDeque};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum CodingError {
    #[error("window too small: the sources and the target must lie inside ball(radius)")]
    WindowTooSmall,
    #[error("recoding window must be nonempty")]
    EmptyWindow,
    #[error("budget exceeded after {used} work units")]
    BudgetExceeded { used: u64 },
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("polygon vertices are not all divisible by {0}")]
    NotDivisible(i64),
    #[error("the recoding window admits no legal pattern")]
    EmptyRecodedAlphabet,
    #[error(transparent)]
    Shift(ShiftError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn charge(budget: &mut Budget, n: u64) -> Result<(), CodingError> {
    budget
        .charge(n)
        .map_err(|used| CodingError::BudgetExceeded { used })
}

/// Converts a shift-layer error, folding its budget usage into ours.
fn lift(budget: &mut Budget, e: ShiftError) -> CodingError {
    if let ShiftError::BudgetExceeded { used } = e {
        let _ = budget.charge(used);
        CodingError::BudgetExceeded {
            used: budget.used(),
        }
    } else {
        CodingError::Shift(e)
    }
}

// ---------------------------------------------------------------------------
// Verdicts
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodeStatus {
    Forced,
    NotForcedLocally,
}

/// How a verdict was reached (informational; the verdict itself is the
/// contract).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodeMethod {
    /// The target is one of the sources.
    Trivial,
    /// Exact GF(p) elimination.
    Linear,
    /// Pair-propagation closed with only diagonal values at the target.
    Propagation,
    /// Complete pair search exhausted without a separating pair.
    Exhaustion,
    /// The window admits no legal coloring at all.
    Vacuous,
    /// Componentwise verdicts on a product specification.
    Componentwise,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodingVerdict {
    pub status: CodeStatus,
    pub window_radius: i64,
    pub method: CodeMethod,
    /// For `NotForcedLocally`: two locally legal window colorings agreeing
    /// on the sources and differing at the target.
    pub witness: Option<Box<(Pattern, Pattern)>>,
}

impl CodingVerdict {
    fn forced(window_radius: i64, method: CodeMethod) -> CodingVerdict {
        CodingVerdict {
            status: CodeStatus::Forced,
            window_radius,
            method,
            witness: None,
        }
    }

    fn not_forced(window_radius: i64, method: CodeMethod, w0: Pattern, w1: Pattern) -> CodingVerdict {
        CodingVerdict {
            status: CodeStatus::NotForcedLocally,
            window_radius,
            method,
            witness: Some(Box::new((w0, w1))),
        }
    }

    pub fn is_forced(&self) -> bool {
        self.status == CodeStatus::Forced
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RayStatus {
    /// `coder` (a finite subset of the half space) forces `target`, a point
    /// outside the half space.
    ExpansiveCertified {
        radius: i64,
        coder: Region,
        target: LatticePoint,
    },
    UnknownUpTo { radius: i64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RayClassification {
    pub ray: RationalRay,
    pub status: RayStatus,
}

impl RayClassification {
    pub fn is_certified(&self) -> bool {
        matches!(self.status, RayStatus::ExpansiveCertified { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClosingStatus {
    /// Within the window, the half space plus every length-`n` block on the
    /// adjacent lattice line forces the whole line.
    Closing { n: usize, window_radius: i64 },
    NotClosedUpTo { n_max: usize, window_radius: i64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosingVerdict {
    pub ray: RationalRay,
    pub status: ClosingStatus,
}

impl ClosingVerdict {
    pub fn is_closing(&self) -> bool {
        matches!(self.status, ClosingStatus::Closing { .. })
    }
}

// ---------------------------------------------------------------------------
// codes: does a set of cells force another cell?
// ---------------------------------------------------------------------------

/// Decides whether the cells of `a` force the color at `b` among all
/// locally legal colorings of the window `ball(radius)`.
///
/// `Forced` is sound for the full shift; `NotForcedLocally` carries a
/// witness pair. Linear rules are decided by exact elimination, everything
/// else by pair propagation plus (when propagation is inconclusive) a
/// complete search for a separating pair.
pub fn codes(
    spec: &ShiftSpec,
    a: &Region,
    b: LatticePoint,
    radius: i64,
    budget: &mut Budget,
) -> Result<CodingVerdict, CodingError> {
    let window = Region::ball(radius);
    if !window.contains(b) || a.points().iter().any(|&s| !window.contains(s)) {
        return Err(CodingError::WindowTooSmall);
    }
    codes_in_window(spec, a, b, &window, radius, budget)
}

fn codes_in_window(
    spec: &ShiftSpec,
    a: &Region,
    b: LatticePoint,
    window: &Region,
    radius: i64,
    budget: &mut Budget,
) -> Result<CodingVerdict, CodingError> {
    if a.contains(b) {
        return Ok(CodingVerdict::forced(radius, CodeMethod::Trivial));
    }
    match spec {
        ShiftSpec::Linear(rule) => codes_linear(rule, a, b, window, radius, budget),
        ShiftSpec::Product(x, y) => codes_product(x, y, a, b, window, radius, budget),
        _ => codes_enumerative(spec, a, b, window, radius, budget),
    }
}

fn linear_instances(rule: &LinearRule, region: &Region) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if rule.terms.is_empty() {
        return out;
    }
    'base: for &p in region.points() {
        let base = p - rule.terms[0].0;
        let mut cells = Vec::with_capacity(rule.terms.len());
        for &(off, _) in &rule.terms {
            match region.index_of(base + off) {
                Some(k) => cells.push(k),
                None => continue 'base,
            }
        }
        out.push(cells);
    }
    out
}

/// Homogeneous forcing system: constraint rows plus a pinning row per
/// source cell. A column is forced exactly when every difference of two
/// legal colorings agreeing on the sources vanishes there.
fn forcing_solver(
    rule: &LinearRule,
    window: &Region,
    sources: &Region,
    budget: &mut Budget,
) -> Result<LinearSolver, CodingError> {
    let instances = linear_instances(rule, window);
    charge(
        budget,
        (instances.len() + sources.len()) as u64 * (window.len() as u64 / 64 + 1),
    )?;
    let mut solver = LinearSolver::new(rule.modulus, window.len());
    for &s in sources.points() {
        solver.add_row(&[(window.index_of(s).unwrap(), 1)], 0);
    }
    for cells in &instances {
        let row: Vec<(usize, u64)> = cells
            .iter()
            .zip(&rule.terms)
            .map(|(&k, &(_, c))| (k, c))
            .collect();
        solver.add_row(&row, 0);
    }
    Ok(solver)
}

fn affine_solver(rule: &LinearRule, window: &Region, budget: &mut Budget) -> Result<LinearSolver, CodingError> {
    let instances = linear_instances(rule, window);
    charge(budget, instances.len() as u64 * (window.len() as u64 / 64 + 1))?;
    let mut solver = LinearSolver::new(rule.modulus, window.len());
    for cells in &instances {
        let row: Vec<(usize, u64)> = cells
            .iter()
            .zip(&rule.terms)
            .map(|(&k, &(_, c))| (k, c))
            .collect();
        solver.add_row(&row, rule.constant);
    }
    Ok(solver)
}

fn codes_linear(
    rule: &LinearRule,
    a: &Region,
    b: LatticePoint,
    window: &Region,
    radius: i64,
    budget: &mut Budget,
) -> Result<CodingVerdict, CodingError> {
    let ti = window.index_of(b).unwrap();
    let mut hom = forcing_solver(rule, window, a, budget)?;
    if hom.forced_columns()[ti] {
        return Ok(CodingVerdict::forced(radius, CodeMethod::Linear));
    }
    let mut aff = affine_solver(rule, window, budget)?;
    if !aff.consistent() {
        return Ok(CodingVerdict::forced(radius, CodeMethod::Vacuous));
    }
    let x0 = aff.particular_solution().expect("consistent system");
    let z = hom
        .nullspace_basis()
        .into_iter()
        .find(|z| z[ti] != 0)
        .expect("unforced target admits a separating kernel vector");
    let p = rule.modulus;
    let c0: Vec<Color> = x0.iter().map(|&v| v as Color).collect();
    let c1: Vec<Color> = x0
        .iter()
        .zip(&z)
        .map(|(&v, &w)| ((v + w) % p) as Color)
        .collect();
    Ok(CodingVerdict::not_forced(
        radius,
        CodeMethod::Linear,
        Pattern::new(window.clone(), c0),
        Pattern::new(window.clone(), c1),
    ))
}

/// One locally legal coloring of the window, if any exists.
fn first_legal(
    spec: &ShiftSpec,
    window: &Region,
    budget: &mut Budget,
) -> Result<Option<Pattern>, CodingError> {
    match spec {
        ShiftSpec::Linear(rule) => {
            let mut aff = affine_solver(rule, window, budget)?;
            if !aff.consistent() {
                return Ok(None);
            }
            let x0 = aff.particular_solution().expect("consistent system");
            Ok(Some(Pattern::new(
                window.clone(),
                x0.iter().map(|&v| v as Color).collect(),
            )))
        }
        ShiftSpec::Product(x, y) => {
            let (Some(px), Some(py)) = (first_legal(x, window, budget)?, first_legal(y, window, budget)?)
            else {
                return Ok(None);
            };
            Ok(Some(crate::shifts::join_product_pattern(
                &px,
                &py,
                y.alphabet_size(),
            )))
        }
        _ => {
            let families = spec.families().map_err(|e| lift(budget, e))?;
            let q = spec.alphabet_size();
            if q > u16::MAX as u64 + 1 {
                return Err(CodingError::Shift(ShiftError::AlphabetTooLarge(q)));
            }
            let q = q as Color;
            let n = window.len();
            let instances = instances_in_region(&families, window);
            let mut finishing: Vec<Vec<usize>> = vec![Vec::new(); n.max(1)];
            for (iid, (_, cells)) in instances.iter().enumerate() {
                if let Some(&last) = cells.iter().max() {
                    finishing[last].push(iid);
                }
            }
            let mut colors = vec![0 as Color; n];
            let found = first_legal_dfs(
                0, n, q, &families, &instances, &finishing, &mut colors, budget,
            )?;
            Ok(found.then(|| Pattern::new(window.clone(), colors)))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn first_legal_dfs(
    k: usize,
    n: usize,
    q: Color,
    families: &[ConstraintFamily],
    instances: &[(usize, Vec<usize>)],
    finishing: &[Vec<usize>],
    colors: &mut [Color],
    budget: &mut Budget,
) -> Result<bool, CodingError> {
    if k == n {
        return Ok(true);
    }
    for c in 0..q {
        charge(budget, 1)?;
        colors[k] = c;
        let ok = finishing[k].iter().all(|&iid| {
            let (f, cells) = &instances[iid];
            let word: Vec<Color> = cells.iter().map(|&cc| colors[cc]).collect();
            families[*f].is_allowed(&word)
        });
        if ok && first_legal_dfs(k + 1, n, q, families, instances, finishing, colors, budget)? {
            return Ok(true);
        }
    }
    Ok(false)
}

#[allow(clippy::too_many_arguments)]
fn codes_product(
    x: &ShiftSpec,
    y: &ShiftSpec,
    a: &Region,
    b: LatticePoint,
    window: &Region,
    radius: i64,
    budget: &mut Budget,
) -> Result<CodingVerdict, CodingError> {
    let vx = codes_in_window(x, a, b, window, radius, budget)?;
    if let Some(w) = vx.witness {
        // A separating pair on the x component joins with any legal y
        // coloring into a separating pair for the product.
        return Ok(match first_legal(y, window, budget)? {
            None => CodingVerdict::forced(radius, CodeMethod::Vacuous),
            Some(py) => {
                let qy = y.alphabet_size();
                CodingVerdict::not_forced(
                    radius,
                    CodeMethod::Componentwise,
                    crate::shifts::join_product_pattern(&w.0, &py, qy),
                    crate::shifts::join_product_pattern(&w.1, &py, qy),
                )
            }
        });
    }
    let vy = codes_in_window(y, a, b, window, radius, budget)?;
    if let Some(w) = vy.witness {
        return Ok(match first_legal(x, window, budget)? {
            None => CodingVerdict::forced(radius, CodeMethod::Vacuous),
            Some(px) => {
                let qy = y.alphabet_size();
                CodingVerdict::not_forced(
                    radius,
                    CodeMethod::Componentwise,
                    crate::shifts::join_product_pattern(&px, &w.0, qy),
                    crate::shifts::join_product_pattern(&px, &w.1, qy),
                )
            }
        });
    }
    Ok(CodingVerdict::forced(radius, CodeMethod::Componentwise))
}

fn codes_enumerative(
    spec: &ShiftSpec,
    a: &Region,
    b: LatticePoint,
    window: &Region,
    radius: i64,
    budget: &mut Budget,
) -> Result<CodingVerdict, CodingError> {
    let mut csp = PairCsp::new(spec, window, a, budget)?;
    csp.propagate(budget)?;
    if csp.has_empty_domain() {
        return Ok(CodingVerdict::forced(radius, CodeMethod::Vacuous));
    }
    let ti = window.index_of(b).unwrap();
    if csp.diagonal_only(ti) {
        return Ok(CodingVerdict::forced(radius, CodeMethod::Propagation));
    }
    match csp.search_separating_pair(ti, budget)? {
        Some((w0, w1)) => Ok(CodingVerdict::not_forced(
            radius,
            CodeMethod::Exhaustion,
            w0,
            w1,
        )),
        None => Ok(CodingVerdict::forced(radius, CodeMethod::Exhaustion)),
    }
}

// ---------------------------------------------------------------------------
// Pair propagation: a CSP over pairs of colorings
// ---------------------------------------------------------------------------

/// Bitset over the q² pair values (u·q + v), representing the possible
/// (first coloring, second coloring) colors of one cell.
#[derive(Clone)]
struct PairSet {
    bits: Vec<u64>,
}

impl PairSet {
    fn empty(n: usize) -> PairSet {
        PairSet {
            bits: vec![0; n.div_ceil(64)],
        }
    }

    fn full(n: usize) -> PairSet {
        let mut s = PairSet::empty(n);
        for id in 0..n {
            s.insert(id);
        }
        s
    }

    fn diagonal(q: usize) -> PairSet {
        let mut s = PairSet::empty(q * q);
        for u in 0..q {
            s.insert(u * q + u);
        }
        s
    }

    fn singleton(n: usize, id: usize) -> PairSet {
        let mut s = PairSet::empty(n);
        s.insert(id);
        s
    }

    fn insert(&mut self, id: usize) {
        self.bits[id / 64] |= 1 << (id % 64);
    }

    fn remove(&mut self, id: usize) {
        self.bits[id / 64] &= !(1 << (id % 64));
    }

    fn contains(&self, id: usize) -> bool {
        self.bits[id / 64] >> (id % 64) & 1 == 1
    }

    fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Intersects in place; true when anything was removed.
    fn intersect(&mut self, other: &PairSet) -> bool {
        let mut changed = false;
        for (w, o) in self.bits.iter_mut().zip(&other.bits) {
            let nw = *w & o;
            changed |= nw != *w;
            *w = nw;
        }
        changed
    }

    fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(wi, &w)| {
            (0..64).filter_map(move |bit| {
                if w >> bit & 1 == 1 {
                    Some(wi * 64 + bit)
                } else {
                    None
                }
            })
        })
    }

    fn has_off_diagonal(&self, q: usize) -> bool {
        self.iter().any(|id| id / q != id % q)
    }
}

/// Generalized arc consistency over pairs of locally legal colorings that
/// agree on the source cells. Solution pairs are never removed, so a cell
/// whose domain closes onto the diagonal is soundly forced; a complete
/// search over the filtered domains then decides the rest.
struct PairCsp {
    q: usize,
    window: Region,
    /// Decoded allowed words per family.
    words: Vec<Vec<Vec<Color>>>,
    instances: Vec<(usize, Vec<usize>)>,
    touching: Vec<Vec<usize>>,
    domains: Vec<PairSet>,
}

impl PairCsp {
    fn new(
        spec: &ShiftSpec,
        window: &Region,
        sources: &Region,
        budget: &mut Budget,
    ) -> Result<PairCsp, CodingError> {
        let q = spec.alphabet_size();
        if q > 256 {
            return Err(CodingError::NotApplicable(format!(
                "pair propagation supports alphabets up to 256 letters (got {q})"
            )));
        }
        let q = q as usize;
        let families = spec.families().map_err(|e| lift(budget, e))?;
        let words: Vec<Vec<Vec<Color>>> = families
            .iter()
            .map(|f| f.allowed_list().iter().map(|&id| f.unpack(id)).collect())
            .collect();
        let instances = instances_in_region(&families, window);
        charge(budget, instances.len() as u64 + window.len() as u64)?;
        let mut touching: Vec<Vec<usize>> = vec![Vec::new(); window.len()];
        for (iid, (_, cells)) in instances.iter().enumerate() {
            for &c in cells {
                if touching[c].last() != Some(&iid) {
                    touching[c].push(iid);
                }
            }
        }
        let domains: Vec<PairSet> = window
            .points()
            .iter()
            .map(|&p| {
                if sources.contains(p) {
                    PairSet::diagonal(q)
                } else {
                    PairSet::full(q * q)
                }
            })
            .collect();
        Ok(PairCsp {
            q,
            window: window.clone(),
            words,
            instances,
            touching,
            domains,
        })
    }

    fn propagate(&mut self, budget: &mut Budget) -> Result<(), CodingError> {
        let mut domains = std::mem::take(&mut self.domains);
        let seed = (0..self.instances.len()).collect();
        let result = self.propagate_in(&mut domains, seed, budget);
        self.domains = domains;
        result
    }

    /// Runs generalized arc consistency over `domains`, starting from the
    /// seeded instances and waking whatever their revisions touch. Stops
    /// early once any domain empties.
    fn propagate_in(
        &self,
        domains: &mut [PairSet],
        seed: VecDeque<usize>,
        budget: &mut Budget,
    ) -> Result<(), CodingError> {
        let mut queued = vec![false; self.instances.len()];
        let mut queue = seed;
        for &iid in &queue {
            queued[iid] = true;
        }
        while let Some(iid) = queue.pop_front() {
            queued[iid] = false;
            let f = self.instances[iid].0;
            let w = self.words[f].len() as u64;
            charge(budget, w * w + 1)?;
            let changed = self.revise_in(domains, iid);
            for c in changed {
                if domains[c].is_empty() {
                    return Ok(());
                }
                for &jid in &self.touching[c] {
                    if !queued[jid] {
                        queued[jid] = true;
                        queue.push_back(jid);
                    }
                }
            }
        }
        Ok(())
    }

    fn revise_in(&self, domains: &mut [PairSet], iid: usize) -> Vec<usize> {
        let (f, cells) = &self.instances[iid];
        let words = &self.words[*f];
        let q = self.q;
        let k = cells.len();
        let mut support: Vec<PairSet> = vec![PairSet::empty(q * q); k];
        for w0 in words {
            for w1 in words {
                let mut ok = true;
                for slot in 0..k {
                    let pid = w0[slot] as usize * q + w1[slot] as usize;
                    if !domains[cells[slot]].contains(pid) {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    for slot in 0..k {
                        support[slot].insert(w0[slot] as usize * q + w1[slot] as usize);
                    }
                }
            }
        }
        let mut changed = Vec::new();
        for slot in 0..k {
            if domains[cells[slot]].intersect(&support[slot]) {
                changed.push(cells[slot]);
            }
        }
        changed
    }

    fn has_empty_domain(&self) -> bool {
        self.domains.iter().any(|d| d.is_empty())
    }

    fn diagonal_only(&self, cell: usize) -> bool {
        !self.domains[cell].has_off_diagonal(self.q)
    }

    /// Complete search for two legal colorings agreeing on the sources and
    /// differing at `target`. `None` means exhaustion: no such pair exists.
    /// Arc consistency is re-established after every decision, so rules
    /// whose constraints chain (everything built from local determinations)
    /// are decided with little or no backtracking.
    fn search_separating_pair(
        &self,
        target: usize,
        budget: &mut Budget,
    ) -> Result<Option<(Pattern, Pattern)>, CodingError> {
        let qq = self.q * self.q;
        let mut domains = self.domains.clone();
        let mut off_diagonal = PairSet::full(qq);
        for u in 0..self.q {
            off_diagonal.remove(u * self.q + u);
        }
        domains[target].intersect(&off_diagonal);
        if domains[target].is_empty() {
            return Ok(None);
        }
        let seed = self.touching[target].iter().copied().collect();
        self.propagate_in(&mut domains, seed, budget)?;
        if domains.iter().any(|d| d.is_empty()) {
            return Ok(None);
        }
        self.search_in(domains, budget)
    }

    fn search_in(
        &self,
        domains: Vec<PairSet>,
        budget: &mut Budget,
    ) -> Result<Option<(Pattern, Pattern)>, CodingError> {
        let branch = domains
            .iter()
            .enumerate()
            .map(|(c, d)| (c, d.count()))
            .filter(|&(_, n)| n > 1)
            .min_by_key(|&(_, n)| n);
        let Some((cell, _)) = branch else {
            // Every domain is a singleton. A nonempty arc-consistent fixed
            // point with singleton domains satisfies every instance, so the
            // assignment reads off directly.
            let mut c0 = Vec::with_capacity(domains.len());
            let mut c1 = Vec::with_capacity(domains.len());
            for d in &domains {
                let pid = d.iter().next().expect("nonempty domain");
                c0.push((pid / self.q) as Color);
                c1.push((pid % self.q) as Color);
            }
            return Ok(Some((
                Pattern::new(self.window.clone(), c0),
                Pattern::new(self.window.clone(), c1),
            )));
        };
        let qq = self.q * self.q;
        for pid in domains[cell].iter().collect::<Vec<_>>() {
            charge(budget, 1)?;
            let mut next = domains.clone();
            next[cell] = PairSet::singleton(qq, pid);
            let seed = self.touching[cell].iter().copied().collect();
            self.propagate_in(&mut next, seed, budget)?;
            if next.iter().any(|d| d.is_empty()) {
                continue;
            }
            if let Some(found) = self.search_in(next, budget)? {
                return Ok(Some(found));
            }
        }
        Ok(None)
    }
}

/// Per-cell forced flags for the given sources (sound; exact for linear
/// rules, propagation-based otherwise).
fn forced_flags(
    spec: &ShiftSpec,
    window: &Region,
    sources: &Region,
    budget: &mut Budget,
) -> Result<Vec<bool>, CodingError> {
    match spec {
        ShiftSpec::Linear(rule) => {
            let mut solver = forcing_solver(rule, window, sources, budget)?;
            Ok(solver.forced_columns())
        }
        ShiftSpec::Product(x, y) => {
            let fx = forced_flags(x, window, sources, budget)?;
            let fy = forced_flags(y, window, sources, budget)?;
            Ok(fx.into_iter().zip(fy).map(|(a, b)| a && b).collect())
        }
        _ => {
            let mut csp = PairCsp::new(spec, window, sources, budget)?;
            csp.propagate(budget)?;
            if csp.has_empty_domain() {
                return Ok(vec![true; window.len()]);
            }
            Ok((0..window.len()).map(|c| csp.diagonal_only(c)).collect())
        }
    }
}

fn is_pure_linear(spec: &ShiftSpec) -> bool {
    match spec {
        ShiftSpec::Linear(_) => true,
        ShiftSpec::Product(a, b) => is_pure_linear(a) && is_pure_linear(b),
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// Ray classification (expansiveness certification)
// ---------------------------------------------------------------------------

/// Searches, over a sweep of growing windows, for a point outside the ray's
/// half space forced by the half space clipped to the window. Success is a
/// sound expansiveness certificate; exhaustion is only "unknown up to this
/// radius".
pub fn classify_ray(
    spec: &ShiftSpec,
    ray: &RationalRay,
    radius: i64,
    budget: &mut Budget,
) -> Result<RayClassification, CodingError> {
    if radius < 1 {
        return Err(CodingError::WindowTooSmall);
    }
    let mut radii: Vec<i64> = (1..).map(|k| 2 * k).take_while(|&r| r < radius).collect();
    radii.push(radius);
    for rho in radii {
        let window = Region::ball(rho);
        let inside = window.retain(|p| ray.half_space_contains(p));
        let mut outside: Vec<LatticePoint> = window
            .points()
            .iter()
            .copied()
            .filter(|&p| !ray.half_space_contains(p))
            .collect();
        if inside.is_empty() || outside.is_empty() {
            continue;
        }
        outside.sort_by_key(|p| (p.norm_sq(), *p));
        let flags = forced_flags(spec, &window, &inside, budget)?;
        if let Some(&t) = outside
            .iter()
            .find(|&&t| flags[window.index_of(t).unwrap()])
        {
            return Ok(RayClassification {
                ray: *ray,
                status: RayStatus::ExpansiveCertified {
                    radius: rho,
                    coder: inside,
                    target: t,
                },
            });
        }
        // Propagation may be inconclusive for non-linear rules; decide the
        // nearest few candidates by complete search.
        if !is_pure_linear(spec) {
            for &t in outside.iter().take(3) {
                let v = codes_in_window(spec, &inside, t, &window, rho, budget)?;
                if v.is_forced() {
                    return Ok(RayClassification {
                        ray: *ray,
                        status: RayStatus::ExpansiveCertified {
                            radius: rho,
                            coder: inside,
                            target: t,
                        },
                    });
                }
            }
        }
    }
    Ok(RayClassification {
        ray: *ray,
        status: RayStatus::UnknownUpTo { radius },
    })
}

/// All primitive rays of height at most `height_max`, ordered by angle.
pub fn primitive_rays(height_max: i64) -> Vec<RationalRay> {
    let mut dirs = Vec::new();
    for i in -height_max..=height_max {
        for j in -height_max..=height_max {
            let d = pt(i, j);
            if !d.is_zero() && d.is_primitive() {
                dirs.push(d);
            }
        }
    }
    dirs.sort_by(|a, b| a.angle_cmp(*b));
    dirs.into_iter()
        .map(|d| RationalRay::from_dir(d).expect("nonzero direction"))
        .collect()
}

/// The primitive rays of height ≤ `height_max` *not* certified expansive at
/// the given radius: a sound superset of the nonexpansive directions of
/// that height.
pub fn enumerate_nonexpansive_candidates(
    spec: &ShiftSpec,
    height_max: i64,
    radius: i64,
    budget: &mut Budget,
) -> Result<Vec<RationalRay>, CodingError> {
    let mut out = Vec::new();
    for ray in primitive_rays(height_max) {
        if !classify_ray(spec, &ray, radius, budget)?.is_certified() {
            out.push(ray);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Closing rays
// ---------------------------------------------------------------------------

/// Tests whether the ray is closing within the window: the half space plus
/// every length-N block on the adjacent lattice line (level −1) must force
/// the whole clipped line. Returns the smallest such N ≤ `n_max`.
pub fn is_closing(
    spec: &ShiftSpec,
    ray: &RationalRay,
    n_max: usize,
    radius: i64,
    budget: &mut Budget,
) -> Result<ClosingVerdict, CodingError> {
    if classify_ray(spec, ray, radius, budget)?.is_certified() {
        return Err(CodingError::NotApplicable(
            "ray is certified expansive; the closing question concerns nonexpansive rays".into(),
        ));
    }
    let window = Region::ball(radius);
    let mut line: Vec<LatticePoint> = window
        .points()
        .iter()
        .copied()
        .filter(|&p| ray.line_level(p) == -1)
        .collect();
    if line.is_empty() {
        return Err(CodingError::WindowTooSmall);
    }
    line.sort_by_key(|&p| ray.dir.dot(p));
    let half = window.retain(|p| ray.half_space_contains(p));
    for n in 1..=n_max.min(line.len()) {
        let mut all_placements_force = true;
        for s in 0..=(line.len() - n) {
            let sources = Region::from_points(
                half.points()
                    .iter()
                    .copied()
                    .chain(line[s..s + n].iter().copied()),
            );
            if !forces_all(spec, &window, &sources, &line, budget)? {
                all_placements_force = false;
                break;
            }
        }
        if all_placements_force {
            return Ok(ClosingVerdict {
                ray: *ray,
                status: ClosingStatus::Closing {
                    n,
                    window_radius: radius,
                },
            });
        }
    }
    Ok(ClosingVerdict {
        ray: *ray,
        status: ClosingStatus::NotClosedUpTo {
            n_max,
            window_radius: radius,
        },
    })
}

/// True when the sources force every target cell (exact; falls back to a
/// complete per-target search where propagation is inconclusive).
fn forces_all(
    spec: &ShiftSpec,
    window: &Region,
    sources: &Region,
    targets: &[LatticePoint],
    budget: &mut Budget,
) -> Result<bool, CodingError> {
    let flags = forced_flags(spec, window, sources, budget)?;
    let unresolved: Vec<LatticePoint> = targets
        .iter()
        .copied()
        .filter(|&t| !flags[window.index_of(t).unwrap()])
        .collect();
    if unresolved.is_empty() {
        return Ok(true);
    }
    if is_pure_linear(spec) {
        return Ok(false);
    }
    for t in unresolved {
        let v = codes_in_window(spec, sources, t, window, 0, budget)?;
        if !v.is_forced() {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Corner coding and coding polygons
// ---------------------------------------------------------------------------

/// Does the sector minus its base force the base?
pub fn is_corner_coding(
    spec: &ShiftSpec,
    sector: &Sector,
    radius: i64,
    budget: &mut Budget,
) -> Result<CodingVerdict, CodingError> {
    let window = Region::ball(radius);
    if !window.contains(sector.base) {
        return Err(CodingError::WindowTooSmall);
    }
    let a = window.retain(|p| p != sector.base && sector.contains(p));
    codes_in_window(spec, &a, sector.base, &window, radius, budget)
}

#[derive(Clone, Debug)]
pub struct PolygonCheck {
    pub polygon: ConvexLatticePolygon,
    pub window_radius: i64,
    pub vertices: Vec<(LatticePoint, CodingVerdict)>,
    pub certified: bool,
}

/// Checks the defining property of a coding polygon: at every vertex v, the
/// remaining lattice points of P force v. Each check runs in coordinates
/// centered at the vertex (the relation is translation invariant).
pub fn verify_coding_polygon(
    spec: &ShiftSpec,
    polygon: &ConvexLatticePolygon,
    budget: &mut Budget,
) -> Result<PolygonCheck, CodingError> {
    let pts = Region::from_polygon(polygon);
    if pts.len() < 2 {
        return Err(CodingError::NotApplicable(
            "polygon must contain at least two lattice points".into(),
        ));
    }
    let radius = polygon.diameter_ceil() + 2;
    let window = Region::ball(radius);
    let mut vertices = Vec::new();
    let mut certified = true;
    for &v in polygon.vertices() {
        let a = pts.retain(|p| p != v).translate(-v);
        let verdict = codes_in_window(spec, &a, pt(0, 0), &window, radius, budget)?;
        certified &= verdict.is_forced();
        vertices.push((v, verdict));
    }
    Ok(PolygonCheck {
        polygon: polygon.clone(),
        window_radius: radius,
        vertices,
        certified,
    })
}

/// Builds the minimal polygon with edges along the given rays and searches
/// for the smallest scale at which it verifies as a coding polygon.
pub fn build_coding_polygon(
    spec: &ShiftSpec,
    rays: &[RationalRay],
    n_max: i64,
    budget: &mut Budget,
) -> Result<Option<(ConvexLatticePolygon, i64, PolygonCheck)>, CodingError> {
    let base = polygon_from_rays(rays)?;
    for n in 1..=n_max {
        let p = base.scale(n)?;
        let check = verify_coding_polygon(spec, &p, budget)?;
        if check.certified {
            return Ok(Some((p, n, check)));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Canonical recoding
// ---------------------------------------------------------------------------

/// A canonical recoding by a finite window F: letters are the locally legal
/// F-patterns of the source, constraints are overlap consistency between
/// window translates plus the source constraints expressed over minimal
/// covers by F-translates. Pattern counts satisfy
/// `count(recoded, R) = count(source, ∪_{g∈R}(F+g))`.
#[derive(Clone, Debug)]
pub struct Recoding {
    /// The recoded specification (a forbidden-pattern spec).
    pub spec: ShiftSpec,
    /// The recoding window F.
    pub window: Region,
    /// Decoded source colors per recoded letter, aligned with F's cells.
    pub letters: Vec<Vec<Color>>,
    /// The source specification.
    pub source: ShiftSpec,
}

impl Recoding {
    pub fn alphabet(&self) -> usize {
        self.letters.len()
    }

    /// Decodes a recoded pattern on R into the source pattern on
    /// ∪_{g∈R}(F+g). For patterns violating overlap consistency the
    /// lexicographically first covering letter wins (legal patterns are
    /// always consistent).
    pub fn decode(&self, pattern: &Pattern) -> Pattern {
        let mut cells: std::collections::BTreeMap<LatticePoint, Color> =
            std::collections::BTreeMap::new();
        for (idx, &p) in pattern.region.points().iter().enumerate() {
            let letter = &self.letters[pattern.colors[idx] as usize];
            for (k, &f) in self.window.points().iter().enumerate() {
                cells.entry(p + f).or_insert(letter[k]);
            }
        }
        let region = Region::from_points(cells.keys().copied());
        let colors = cells.values().copied().collect();
        Pattern::new(region, colors)
    }

    /// Encodes a source pattern over each base point of `region`; `None` if
    /// some window translate is not covered or is not a legal letter.
    pub fn encode(&self, source: &Pattern, region: &Region) -> Option<Pattern> {
        let mut colors = Vec::with_capacity(region.len());
        for &p in region.points() {
            let mut word = Vec::with_capacity(self.window.len());
            for &f in self.window.points() {
                word.push(source.get(p + f)?);
            }
            let letter = self.letters.binary_search(&word).ok()?;
            colors.push(letter as Color);
        }
        Some(Pattern::new(region.clone(), colors))
    }
}

/// Enumerates all inclusion-minimal covers of the cells `wf` by translates
/// F+g (covers of size one are omitted: a single translate containing the
/// whole constraint window already enforces it through letter legality).
fn minimal_covers(
    wf: &[LatticePoint],
    f: &Region,
    budget: &mut Budget,
) -> Result<Vec<Vec<LatticePoint>>, CodingError> {
    let m = wf.len();
    if m > 32 {
        return Err(CodingError::NotApplicable(
            "constraint window too large for cover enumeration".into(),
        ));
    }
    let mut cand_set: BTreeSet<LatticePoint> = BTreeSet::new();
    for &w in wf {
        for &ff in f.points() {
            cand_set.insert(w - ff);
        }
    }
    let cands: Vec<LatticePoint> = cand_set.into_iter().collect();
    if cands.len() > 24 {
        return Err(CodingError::NotApplicable(
            "too many candidate window translates for cover enumeration".into(),
        ));
    }
    let masks: Vec<u64> = cands
        .iter()
        .map(|&g| {
            wf.iter()
                .enumerate()
                .filter(|&(_, &w)| f.contains(w - g))
                .fold(0u64, |acc, (k, _)| acc | 1 << k)
        })
        .collect();
    let full = (1u64 << m) - 1;
    let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut chosen: Vec<usize> = Vec::new();
    cover_rec(&masks, full, 0, &mut chosen, &mut found, budget)?;
    let minimal: Vec<Vec<LatticePoint>> = found
        .into_iter()
        .filter(|c| {
            c.len() > 1
                && (0..c.len()).all(|drop| {
                    let rest = c
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != drop)
                        .fold(0u64, |acc, (_, &ci)| acc | masks[ci]);
                    rest != full
                })
        })
        .map(|c| c.into_iter().map(|ci| cands[ci]).collect())
        .collect();
    Ok(minimal)
}

fn cover_rec(
    masks: &[u64],
    full: u64,
    covered: u64,
    chosen: &mut Vec<usize>,
    found: &mut BTreeSet<Vec<usize>>,
    budget: &mut Budget,
) -> Result<(), CodingError> {
    charge(budget, 1)?;
    if covered == full {
        let mut c = chosen.clone();
        c.sort_unstable();
        found.insert(c);
        return Ok(());
    }
    let first = (!covered & full).trailing_zeros() as u64;
    for (ci, &mask) in masks.iter().enumerate() {
        if mask >> first & 1 == 1 && !chosen.contains(&ci) {
            chosen.push(ci);
            cover_rec(masks, full, covered | mask, chosen, found, budget)?;
            chosen.pop();
        }
    }
    Ok(())
}

pub fn canonical_recode(
    spec: &ShiftSpec,
    f: &Region,
    budget: &mut Budget,
) -> Result<Recoding, CodingError> {
    if f.is_empty() {
        return Err(CodingError::EmptyWindow);
    }
    if matches!(spec, ShiftSpec::Product(..)) {
        return Err(CodingError::NotApplicable(
            "recode the components of a product separately".into(),
        ));
    }
    let letter_patterns = crate::shifts::enumerate_colorings(spec, f, budget.remaining())
        .map_err(|e| lift(budget, e))?;
    charge(budget, letter_patterns.len() as u64)?;
    let letters: Vec<Vec<Color>> = letter_patterns.into_iter().map(|p| p.colors).collect();
    if letters.is_empty() {
        return Err(CodingError::EmptyRecodedAlphabet);
    }
    if letters.len() > u16::MAX as usize {
        return Err(CodingError::Shift(ShiftError::AlphabetTooLarge(
            letters.len() as u64,
        )));
    }
    let nl = letters.len();
    let mut families: Vec<ForbiddenFamily> = Vec::new();
    // Overlap consistency between a letter and its translate by g.
    let mut diffs: BTreeSet<LatticePoint> = BTreeSet::new();
    for &f1 in f.points() {
        for &f2 in f.points() {
            let g = f1 - f2;
            if g > pt(0, 0) {
                diffs.insert(g);
            }
        }
    }
    for g in diffs {
        // Letter a at p, letter b at p+g: common cell p+fa (fa ∈ F ∩ (g+F))
        // must decode equally: a[fa] = b[fa − g].
        let pairs: Vec<(usize, usize)> = f
            .points()
            .iter()
            .enumerate()
            .filter_map(|(ka, &fa)| f.index_of(fa - g).map(|kb| (ka, kb)))
            .collect();
        charge(budget, (nl * nl) as u64)?;
        let mut forbidden = Vec::new();
        for a in 0..nl {
            for b in 0..nl {
                if pairs
                    .iter()
                    .any(|&(ka, kb)| letters[a][ka] != letters[b][kb])
                {
                    forbidden.push(vec![a as Color, b as Color]);
                }
            }
        }
        families.push(ForbiddenFamily {
            window: vec![pt(0, 0), g],
            forbidden,
        });
    }
    // Source constraints over minimal covers by F-translates.
    let src_families = spec.families().map_err(|e| lift(budget, e))?;
    for sf in &src_families {
        for cover in minimal_covers(&sf.window, f, budget)? {
            let k = cover.len();
            let table = (nl as u64).checked_pow(k as u32).ok_or_else(|| {
                CodingError::NotApplicable("recoded constraint table overflows".into())
            })?;
            charge(budget, table)?;
            let mut forbidden = Vec::new();
            let mut tuple = vec![0usize; k];
            'tuples: loop {
                // Decode the union of the chosen letters; conflicts or a
                // disallowed source word forbid the tuple.
                let mut word: Vec<Option<Color>> = vec![None; sf.window.len()];
                let mut consistent = true;
                'check: for (ci, &g) in cover.iter().enumerate() {
                    for (kf, &ff) in f.points().iter().enumerate() {
                        let cell = ff + g;
                        if let Some(slot) = sf.window.iter().position(|&w| w == cell) {
                            let c = letters[tuple[ci]][kf];
                            match word[slot] {
                                None => word[slot] = Some(c),
                                Some(prev) if prev != c => {
                                    consistent = false;
                                    break 'check;
                                }
                                _ => {}
                            }
                        }
                    }
                }
                let ok = consistent && {
                    let w: Vec<Color> = word
                        .iter()
                        .map(|c| c.expect("cover spans the constraint window"))
                        .collect();
                    sf.is_allowed(&w)
                };
                if !ok {
                    forbidden.push(tuple.iter().map(|&t| t as Color).collect());
                }
                // Advance little-endian.
                let mut pos = 0;
                while pos < k {
                    tuple[pos] += 1;
                    if tuple[pos] < nl {
                        break;
                    }
                    tuple[pos] = 0;
                    pos += 1;
                }
                if pos == k {
                    break 'tuples;
                }
            }
            families.push(ForbiddenFamily {
                window: cover,
                forbidden,
            });
        }
    }
    Ok(Recoding {
        spec: ShiftSpec::Forbidden(ForbiddenRule {
            alphabet: nl as Color,
            families,
        }),
        window: f.clone(),
        letters,
        source: spec.clone(),
    })
}

/// Scales a verified coding polygon down by n via the canonical recoding
/// with window (n−1)·(P/n); returns the recoding and the polygon P/n.
pub fn scale_down_recode(
    spec: &ShiftSpec,
    polygon: &ConvexLatticePolygon,
    n: i64,
    budget: &mut Budget,
) -> Result<(Recoding, ConvexLatticePolygon), CodingError> {
    if n < 1 {
        return Err(CodingError::NotApplicable("scale must be positive".into()));
    }
    let verts = polygon.vertices();
    if verts.iter().any(|v| v.i % n != 0 || v.j % n != 0) {
        return Err(CodingError::NotDivisible(n));
    }
    let small: Vec<LatticePoint> = verts.iter().map(|v| pt(v.i / n, v.j / n)).collect();
    let p0 = ConvexLatticePolygon::hull(&small)?;
    if n == 1 {
        let q = spec.alphabet_size();
        if q > u16::MAX as u64 + 1 {
            return Err(CodingError::Shift(ShiftError::AlphabetTooLarge(q)));
        }
        return Ok((
            Recoding {
                spec: spec.clone(),
                window: Region::from_points([pt(0, 0)]),
                letters: (0..q).map(|c| vec![c as Color]).collect(),
                source: spec.clone(),
            },
            p0,
        ));
    }
    let p1 = p0.scale(n - 1)?;
    let f = Region::from_polygon(&p1);
    let rec = canonical_recode(spec, &f, budget)?;
    Ok((rec, p0))
}

// ---------------------------------------------------------------------------
// Periodic directions
// ---------------------------------------------------------------------------

/// Smallest k ≤ radius such that every legal window coloring satisfies
/// x(v) = x(v + k·dir) wherever both cells fit; returns k·dir.
pub fn detect_periodic_direction(
    spec: &ShiftSpec,
    dir: LatticePoint,
    radius: i64,
    budget: &mut Budget,
) -> Result<Option<LatticePoint>, CodingError> {
    if dir.is_zero() {
        return Err(CodingError::Geometry(GeometryError::InvalidDirection));
    }
    let dir = dir.primitive();
    let window = Region::ball(radius);
    for k in 1..=radius {
        let v = dir * k;
        if !window.points().iter().any(|&p| window.contains(p + v)) {
            break;
        }
        if equality_forced(spec, &window, v, budget)? {
            return Ok(Some(v));
        }
    }
    Ok(None)
}

/// True when all legal colorings of the window satisfy x(p) = x(p+v) for
/// every pair of cells inside it.
fn equality_forced(
    spec: &ShiftSpec,
    window: &Region,
    v: LatticePoint,
    budget: &mut Budget,
) -> Result<bool, CodingError> {
    match spec {
        ShiftSpec::Linear(rule) => {
            let base = affine_solver(rule, window, budget)?;
            if !base.consistent() {
                return Ok(true);
            }
            let base_nullity = base.nullity();
            let mut ext = affine_solver(rule, window, budget)?;
            let p = rule.modulus;
            for &q in window.points() {
                if let Some(k2) = window.index_of(q + v) {
                    let k1 = window.index_of(q).unwrap();
                    ext.add_row(&[(k1, 1), (k2, p - 1)], 0);
                }
            }
            Ok(ext.consistent() && ext.nullity() == base_nullity)
        }
        ShiftSpec::Product(a, b) => Ok(equality_forced(a, window, v, budget)?
            && equality_forced(b, window, v, budget)?),
        _ => {
            let q = spec.alphabet_size();
            if q > 256 {
                return Err(CodingError::NotApplicable(
                    "alphabet too large for periodicity check".into(),
                ));
            }
            let q = q as Color;
            let families = spec.families().map_err(|e| lift(budget, e))?;
            let c1 = dp_count(q, &families, window, budget.remaining())
                .map_err(|e| lift(budget, e))?;
            let eq_fam = ConstraintFamily::from_predicate(vec![pt(0, 0), v], q, |c| c[0] == c[1])
                .map_err(|e| lift(budget, e))?;
            let mut with_eq = families;
            with_eq.push(eq_fam);
            let c2 = dp_count(q, &with_eq, window, budget.remaining())
                .map_err(|e| lift(budget, e))?;
            Ok(c1 == c2)
        }
    }
}

// ---------------------------------------------------------------------------
// Finite coders
// ---------------------------------------------------------------------------

/// Prunes `a` to an inclusion-minimal subset still forcing `b`, by greedy
/// deletion in lexicographic cell order. `None` when `a` does not force `b`.
pub fn find_finite_coder(
    spec: &ShiftSpec,
    a: &Region,
    b: LatticePoint,
    radius: i64,
    budget: &mut Budget,
) -> Result<Option<Region>, CodingError> {
    if !codes(spec, a, b, radius, budget)?.is_forced() {
        return Ok(None);
    }
    if a.contains(b) {
        return Ok(Some(Region::from_points([b])));
    }
    let mut cur: Vec<LatticePoint> = a.points().to_vec();
    let mut i = 0;
    while i < cur.len() {
        let mut trial = cur.clone();
        trial.remove(i);
        if codes(spec, &Region::from_points(trial.iter().copied()), b, radius, budget)?.is_forced()
        {
            cur.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(Some(Region::from_points(cur)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shifts::{
        constant_shift, count_colorings, enumerate_colorings, full_shift, ledrappier,
        product_shift, stripes,
    };

    fn budget() -> Budget {
        Budget::default()
    }

    fn ray(i: i64, j: i64) -> RationalRay {
        RationalRay::from_dir(pt(i, j)).unwrap()
    }

    /// Ledrappier's rule written as explicit forbidden patterns, to exercise
    /// the enumeration path on a spec with a known linear twin.
    fn ledrappier_forbidden() -> ShiftSpec {
        ShiftSpec::Forbidden(ForbiddenRule {
            alphabet: 2,
            families: vec![ForbiddenFamily {
                window: vec![pt(0, 0), pt(1, 0), pt(0, 1)],
                forbidden: vec![
                    vec![1, 0, 0],
                    vec![0, 1, 0],
                    vec![0, 0, 1],
                    vec![1, 1, 1],
                ],
            }],
        })
    }

    fn check_witness(spec: &ShiftSpec, a: &Region, b: LatticePoint, v: &CodingVerdict) {
        let (w0, w1) = &**v.witness.as_ref().expect("witness present");
        assert!(spec.is_locally_legal(w0).unwrap());
        assert!(spec.is_locally_legal(w1).unwrap());
        for &s in a.points() {
            assert_eq!(w0.get(s), w1.get(s), "witnesses must agree on sources");
        }
        assert_ne!(w0.get(b), w1.get(b), "witnesses must differ at target");
    }

    #[test]
    fn codes_forced_by_rule_instance() {
        let spec = ledrappier();
        let a = Region::from_points([pt(0, 0), pt(1, 0)]);
        let v = codes(&spec, &a, pt(0, 1), 2, &mut budget()).unwrap();
        assert!(v.is_forced());
        assert_eq!(v.method, CodeMethod::Linear);
    }

    #[test]
    fn codes_single_cell_does_not_force_neighbor() {
        let spec = ledrappier();
        let a = Region::from_points([pt(0, 0)]);
        let v = codes(&spec, &a, pt(1, 0), 4, &mut budget()).unwrap();
        assert_eq!(v.status, CodeStatus::NotForcedLocally);
        check_witness(&spec, &a, pt(1, 0), &v);
    }

    #[test]
    fn codes_full_shift_never_forces() {
        let spec = full_shift(2);
        let a = Region::from_points([pt(0, 0), pt(1, 0)]);
        let v = codes(&spec, &a, pt(1, 1), 3, &mut budget()).unwrap();
        assert_eq!(v.status, CodeStatus::NotForcedLocally);
        check_witness(&spec, &a, pt(1, 1), &v);
    }

    #[test]
    fn codes_target_in_sources_is_trivial() {
        let spec = full_shift(3);
        let a = Region::from_points([pt(0, 0)]);
        let v = codes(&spec, &a, pt(0, 0), 2, &mut budget()).unwrap();
        assert!(v.is_forced());
        assert_eq!(v.method, CodeMethod::Trivial);
    }

    #[test]
    fn codes_window_too_small() {
        let spec = ledrappier();
        let a = Region::from_points([pt(5, 0)]);
        assert_eq!(
            codes(&spec, &a, pt(0, 0), 2, &mut budget()).unwrap_err(),
            CodingError::WindowTooSmall
        );
    }

    #[test]
    fn enumeration_path_agrees_with_linear_path() {
        let lin = ledrappier();
        let en = ledrappier_forbidden();
        let cases: Vec<(Vec<LatticePoint>, LatticePoint)> = vec![
            (vec![pt(0, 0), pt(1, 0)], pt(0, 1)),
            (vec![pt(0, 0)], pt(1, 0)),
            (vec![pt(0, 0), pt(0, 1)], pt(1, 0)),
            (vec![pt(-1, 0), pt(-1, 1)], pt(0, 0)),
        ];
        for (a, b) in cases {
            let a = Region::from_points(a);
            let vl = codes(&lin, &a, b, 3, &mut budget()).unwrap();
            let ve = codes(&en, &a, b, 3, &mut budget()).unwrap();
            assert_eq!(vl.status, ve.status, "sources {:?} target {:?}", a, b);
            if ve.status == CodeStatus::NotForcedLocally {
                check_witness(&en, &a, b, &ve);
            }
        }
    }

    #[test]
    fn codes_vacuous_when_no_legal_colorings() {
        let spec = ShiftSpec::Forbidden(ForbiddenRule {
            alphabet: 2,
            families: vec![ForbiddenFamily {
                window: vec![pt(0, 0)],
                forbidden: vec![vec![0], vec![1]],
            }],
        });
        let a = Region::from_points([pt(1, 0)]);
        let v = codes(&spec, &a, pt(0, 0), 2, &mut budget()).unwrap();
        assert!(v.is_forced());
        assert_eq!(v.method, CodeMethod::Vacuous);
    }

    #[test]
    fn codes_product_componentwise() {
        let both = product_shift(ledrappier(), ledrappier()).unwrap();
        let a = Region::from_points([pt(0, 0), pt(1, 0)]);
        let v = codes(&both, &a, pt(0, 1), 2, &mut budget()).unwrap();
        assert!(v.is_forced());
        assert_eq!(v.method, CodeMethod::Componentwise);

        let half = product_shift(ledrappier(), full_shift(2)).unwrap();
        let v = codes(&half, &a, pt(0, 1), 2, &mut budget()).unwrap();
        assert_eq!(v.status, CodeStatus::NotForcedLocally);
        check_witness(&half, &a, pt(0, 1), &v);
    }

    #[test]
    fn codes_translation_invariance() {
        let spec = ledrappier();
        for (a_pts, b) in [
            (vec![pt(0, 0), pt(1, 0)], pt(0, 1)),
            (vec![pt(0, 0)], pt(1, 0)),
        ] {
            let a = Region::from_points(a_pts.clone());
            let base = codes(&spec, &a, b, 8, &mut budget()).unwrap();
            for v in [pt(1, 1), pt(-2, 1), pt(0, -2)] {
                let at = a.translate(v);
                let vt = codes(&spec, &at, b + v, 8, &mut budget()).unwrap();
                assert_eq!(base.status, vt.status, "shift by {v:?}");
            }
        }
    }

    #[test]
    fn codes_monotone_in_radius_and_sources() {
        let spec = ledrappier();
        let a = Region::from_points([pt(0, 0), pt(1, 0)]);
        for r in [2, 3, 4, 6] {
            assert!(codes(&spec, &a, pt(0, 1), r, &mut budget()).unwrap().is_forced());
        }
        let bigger = a.union(&Region::from_points([pt(2, 0), pt(-1, -1)]));
        assert!(codes(&spec, &bigger, pt(0, 1), 4, &mut budget())
            .unwrap()
            .is_forced());
    }

    #[test]
    fn find_finite_coder_prunes_to_rule_instance() {
        let spec = ledrappier();
        let lower = Region::ball(4).retain(|p| p.j <= 0);
        let coder = find_finite_coder(&spec, &lower, pt(0, 1), 4, &mut budget())
            .unwrap()
            .expect("forced");
        assert_eq!(coder.points(), &[pt(0, 0), pt(1, 0)]);
    }

    #[test]
    fn find_finite_coder_trivial_and_negative() {
        let spec = ledrappier();
        let a = Region::from_points([pt(0, 0), pt(2, 2)]);
        let coder = find_finite_coder(&spec, &a, pt(0, 0), 3, &mut budget())
            .unwrap()
            .unwrap();
        assert_eq!(coder.points(), &[pt(0, 0)]);
        // The nonexpansive side: the upper half plane does not force below.
        let upper = Region::ball(4).retain(|p| p.j >= 0);
        assert!(find_finite_coder(&spec, &upper, pt(0, -1), 4, &mut budget())
            .unwrap()
            .is_none());
    }

    #[test]
    fn classify_rays_of_ledrappier() {
        let spec = ledrappier();
        for d in [pt(0, 1), pt(-1, 0), pt(1, 1), pt(-1, -1), pt(2, 1)] {
            let c = classify_ray(&spec, &ray(d.i, d.j), 6, &mut budget()).unwrap();
            assert!(c.is_certified(), "{d:?} should certify");
            if let RayStatus::ExpansiveCertified { coder, target, .. } = &c.status {
                assert!(!c.ray.half_space_contains(*target));
                assert!(coder.points().iter().all(|&p| c.ray.half_space_contains(p)));
            }
        }
        for d in [pt(1, 0), pt(-1, 1), pt(0, -1)] {
            let c = classify_ray(&spec, &ray(d.i, d.j), 8, &mut budget()).unwrap();
            assert!(!c.is_certified(), "{d:?} must stay unknown");
        }
    }

    #[test]
    fn nonexpansive_candidates_match_known_sets() {
        let led = enumerate_nonexpansive_candidates(&ledrappier(), 2, 6, &mut budget()).unwrap();
        let dirs: Vec<LatticePoint> = led.iter().map(|r| r.dir).collect();
        assert_eq!(dirs.len(), 3);
        for d in [pt(1, 0), pt(-1, 1), pt(0, -1)] {
            assert!(dirs.contains(&d), "{d:?} missing");
        }
        // Full shift: nothing certifies, all 8 height-1 rays remain.
        let full = enumerate_nonexpansive_candidates(&full_shift(2), 1, 4, &mut budget()).unwrap();
        assert_eq!(full.len(), 8);
        // Constant shift: everything certifies.
        let none = enumerate_nonexpansive_candidates(&constant_shift(), 2, 4, &mut budget()).unwrap();
        assert!(none.is_empty(), "got {:?}", none.iter().map(|r| r.dir).collect::<Vec<_>>());
    }

    #[test]
    fn closing_verdicts_for_ledrappier() {
        let spec = ledrappier();
        for d in [pt(1, 0), pt(0, -1), pt(-1, 1)] {
            let v = is_closing(&spec, &ray(d.i, d.j), 3, 6, &mut budget()).unwrap();
            assert_eq!(
                v.status,
                ClosingStatus::Closing {
                    n: 1,
                    window_radius: 6
                },
                "{d:?}"
            );
        }
        // Expansive rays are out of scope for closing.
        assert!(matches!(
            is_closing(&spec, &ray(0, 1), 3, 6, &mut budget()).unwrap_err(),
            CodingError::NotApplicable(_)
        ));
        // The full shift forces nothing.
        let v = is_closing(&full_shift(2), &ray(1, 0), 2, 4, &mut budget()).unwrap();
        assert!(matches!(v.status, ClosingStatus::NotClosedUpTo { .. }));
    }

    #[test]
    fn corner_coding_examples() {
        let spec = ledrappier();
        let s = Sector::new(pt(0, 0), pt(1, 0), pt(0, 1)).unwrap();
        assert!(is_corner_coding(&spec, &s, 3, &mut budget()).unwrap().is_forced());
        let s2 = Sector::new(pt(1, 0), pt(-1, 1), pt(-1, 0)).unwrap();
        assert!(is_corner_coding(&spec, &s2, 3, &mut budget()).unwrap().is_forced());
        assert!(!is_corner_coding(&full_shift(2), &s, 3, &mut budget())
            .unwrap()
            .is_forced());
    }

    fn unit_triangle() -> ConvexLatticePolygon {
        ConvexLatticePolygon::hull(&[pt(0, 0), pt(1, 0), pt(0, 1)]).unwrap()
    }

    #[test]
    fn verify_triangle_polygons() {
        let spec = ledrappier();
        let t = unit_triangle();
        assert!(verify_coding_polygon(&spec, &t, &mut budget()).unwrap().certified);
        let t2 = t.scale(2).unwrap();
        assert!(verify_coding_polygon(&spec, &t2, &mut budget()).unwrap().certified);
        let check = verify_coding_polygon(&full_shift(2), &t, &mut budget()).unwrap();
        assert!(!check.certified);
        assert!(check.vertices.iter().all(|(_, v)| !v.is_forced()));
    }

    #[test]
    fn build_polygon_from_nonexpansive_rays() {
        let rays = [ray(1, 0), ray(-1, 1), ray(0, -1)];
        let spec = ledrappier();
        let (p, n, _) = build_coding_polygon(&spec, &rays, 3, &mut budget())
            .unwrap()
            .expect("found");
        assert_eq!(n, 1);
        assert_eq!(p.vertices(), unit_triangle().vertices());
        // Product of two copies has the same coding polygon.
        let prod = product_shift(ledrappier(), ledrappier()).unwrap();
        let (p2, n2, _) = build_coding_polygon(&prod, &rays, 3, &mut budget())
            .unwrap()
            .expect("found");
        assert_eq!((p2.vertices(), n2), (unit_triangle().vertices(), 1));
        // Full shift never verifies.
        assert!(build_coding_polygon(&full_shift(2), &rays, 2, &mut budget())
            .unwrap()
            .is_none());
    }

    #[test]
    fn recode_singleton_window_is_identity_like() {
        let spec = ledrappier();
        let f = Region::from_points([pt(0, 0)]);
        let rec = canonical_recode(&spec, &f, &mut budget()).unwrap();
        assert_eq!(rec.alphabet(), 2);
        for (n, m) in [(1, 1), (2, 2), (3, 2)] {
            let r = Region::rect(n, m);
            let a = count_colorings(&rec.spec, &r, 1 << 20).unwrap();
            let b = count_colorings(&spec, &r, 1 << 20).unwrap();
            assert_eq!(a, b, "{n}×{m}");
        }
    }

    #[test]
    fn recode_domino_window() {
        let spec = ledrappier();
        let f = Region::from_points([pt(0, 0), pt(1, 0)]);
        let rec = canonical_recode(&spec, &f, &mut budget()).unwrap();
        assert_eq!(rec.alphabet(), 4);
        let one = Region::rect(1, 1);
        assert_eq!(
            count_colorings(&rec.spec, &one, 1 << 20).unwrap(),
            count_colorings(&spec, &Region::rect(2, 1), 1 << 20).unwrap()
        );
    }

    #[test]
    fn recode_count_identity_and_decode_bijection() {
        let spec = ledrappier();
        let f = Region::from_points([pt(0, 0), pt(1, 0), pt(0, 1)]);
        let rec = canonical_recode(&spec, &f, &mut budget()).unwrap();
        assert_eq!(rec.alphabet(), 4);
        for r in [
            Region::rect(2, 2),
            Region::rect(3, 1),
            Region::from_points([pt(0, 0), pt(1, 1)]),
        ] {
            let union = r.minkowski_with(f.points());
            let recoded = count_colorings(&rec.spec, &r, 1 << 22).unwrap();
            let source = count_colorings(&spec, &union, 1 << 22).unwrap();
            assert_eq!(recoded, source);
            // Decode is a bijection onto legal source patterns.
            let pats = enumerate_colorings(&rec.spec, &r, 1 << 22).unwrap();
            let mut decoded: Vec<Vec<Color>> = Vec::new();
            for p in &pats {
                let d = rec.decode(p);
                assert_eq!(d.region, union);
                assert!(spec.is_locally_legal(&d).unwrap());
                // Encode round-trips.
                let e = rec.encode(&d, &r).expect("legal pattern encodes");
                assert_eq!(&e, p);
                decoded.push(d.colors);
            }
            decoded.sort();
            decoded.dedup();
            assert_eq!(decoded.len(), pats.len());
        }
    }

    #[test]
    fn recoding_preserves_ray_certificates() {
        let spec = ledrappier();
        let f = Region::from_points([pt(0, 0), pt(1, 0), pt(0, 1)]);
        let rec = canonical_recode(&spec, &f, &mut budget()).unwrap();
        // Certified at radius 2 for the source; diam(F) = ceil(√2) = 2.
        for d in [pt(0, 1), pt(-1, 0), pt(1, 1)] {
            let c = classify_ray(&rec.spec, &ray(d.i, d.j), 4, &mut budget()).unwrap();
            assert!(c.is_certified(), "{d:?} should stay certified after recoding");
        }
        for d in [pt(1, 0), pt(-1, 1), pt(0, -1)] {
            let c = classify_ray(&rec.spec, &ray(d.i, d.j), 4, &mut budget()).unwrap();
            assert!(!c.is_certified(), "{d:?} must stay unknown after recoding");
        }
    }

    #[test]
    fn scale_down_produces_certified_unit_polygon() {
        let spec = ledrappier();
        let t2 = unit_triangle().scale(2).unwrap();
        let (rec, p0) = scale_down_recode(&spec, &t2, 2, &mut budget()).unwrap();
        assert_eq!(p0.vertices(), unit_triangle().vertices());
        assert_eq!(rec.alphabet(), 4);
        let check = verify_coding_polygon(&rec.spec, &p0, &mut budget()).unwrap();
        assert!(check.certified);
    }

    #[test]
    fn scale_down_identity_and_divisibility() {
        let spec = ledrappier();
        let t = unit_triangle();
        let (rec, p0) = scale_down_recode(&spec, &t, 1, &mut budget()).unwrap();
        assert_eq!(rec.spec, spec);
        assert_eq!(p0.vertices(), t.vertices());
        assert_eq!(
            scale_down_recode(&spec, &t, 2, &mut budget()).unwrap_err(),
            CodingError::NotDivisible(2)
        );
    }

    #[test]
    fn periodic_direction_detection() {
        let constant = constant_shift();
        assert_eq!(
            detect_periodic_direction(&constant, pt(1, 0), 4, &mut budget()).unwrap(),
            Some(pt(1, 0))
        );
        assert_eq!(
            detect_periodic_direction(&ledrappier(), pt(1, 0), 4, &mut budget()).unwrap(),
            None
        );
        assert_eq!(
            detect_periodic_direction(&full_shift(1), pt(1, 1), 3, &mut budget()).unwrap(),
            Some(pt(1, 1))
        );
        // Stripes alternate vertically: period 2 in direction (0,1).
        assert_eq!(
            detect_periodic_direction(&stripes(), pt(0, 1), 4, &mut budget()).unwrap(),
            Some(pt(0, 2))
        );
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let spec = ledrappier_forbidden();
        let a = Region::from_points([pt(0, 0)]);
        let mut tiny = Budget::new(5);
        assert!(matches!(
            codes(&spec, &a, pt(1, 0), 4, &mut tiny).unwrap_err(),
            CodingError::BudgetExceeded { .. }
        ));
    }
}
