//! Spacetimes of one-dimensional subshift endomorphisms: a local rule φ
//! acting on a base language Y generates the two-dimensional coloring
//! u(n, j+m) = φᵐ(y)ₙ. This module computes the exact coding widths
//! W±(k), asymptotic slopes, light-cone levels, the twist identity for
//! φ∘σᵖ, the induced two-dimensional shift specification, and a
//! best-effort ceiling normalization via strip recoding.

use crate::coding::{canonical_recode, is_closing, CodingError};
use crate::geometry::{pt, LatticePoint, RationalRay};
use crate::lang1d::{enumerate_words, Language1D};
use crate::shifts::{Color, ForbiddenFamily, ForbiddenRule, LinearRule, ShiftError, ShiftSpec};
use crate::Budget;
use num_rational::Rational64;
use std::collections::HashMap;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum SpacetimeError {
    #[error("invalid local rule: {0}")]
    InvalidRule(String),
    #[error("rule is not well defined on the base language (a legal word of length {length} maps to an illegal word)")]
    RuleNotWellDefined { length: usize },
    #[error("spacetimes require a full-shift or finite-type base language")]
    UnsupportedBase,
    #[error("rule image is constant on the base language; coding widths are unbounded")]
    DegenerateRule,
    #[error("budget exceeded after {used} work units")]
    BudgetExceeded { used: u64 },
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error(transparent)]
    Coding(CodingError),
    #[error(transparent)]
    Shift(ShiftError),
}

fn charge(budget: &mut Budget, n: u64) -> Result<(), SpacetimeError> {
    budget
        .charge(n)
        .map_err(|used| SpacetimeError::BudgetExceeded { used })
}

fn lift_shift(budget: &mut Budget, e: ShiftError) -> SpacetimeError {
    if let ShiftError::BudgetExceeded { used } = e {
        let _ = budget.charge(used);
        SpacetimeError::BudgetExceeded {
            used: budget.used(),
        }
    } else {
        SpacetimeError::Shift(e)
    }
}

fn lift_coding(e: CodingError) -> SpacetimeError {
    match e {
        CodingError::BudgetExceeded { used } => SpacetimeError::BudgetExceeded { used },
        other => SpacetimeError::Coding(other),
    }
}

const MAX_RULE_TABLE: u64 = 1 << 20;

// ---------------------------------------------------------------------------
// Local rules
// ---------------------------------------------------------------------------

/// A local map φ(y)ₘ = f(y_{m+lo}, …, y_{m+hi}). The table is indexed
/// little-endian: word w maps to entry Σ w[t]·qᵗ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalRule {
    pub lo: i64,
    pub hi: i64,
    pub alphabet: Color,
    table: Vec<Color>,
}

impl LocalRule {
    pub fn new(lo: i64, hi: i64, alphabet: Color, table: Vec<Color>) -> Result<LocalRule, SpacetimeError> {
        if alphabet == 0 {
            return Err(SpacetimeError::InvalidRule("alphabet must be nonempty".into()));
        }
        if lo > hi {
            return Err(SpacetimeError::InvalidRule("window must satisfy lo ≤ hi".into()));
        }
        let width = (hi - lo + 1) as u32;
        let size = (alphabet as u64)
            .checked_pow(width)
            .filter(|&s| s <= MAX_RULE_TABLE)
            .ok_or_else(|| SpacetimeError::InvalidRule("rule table too large".into()))?;
        if table.len() as u64 != size {
            return Err(SpacetimeError::InvalidRule(format!(
                "table must have {size} entries (alphabet^width)"
            )));
        }
        if table.iter().any(|&c| c >= alphabet) {
            return Err(SpacetimeError::InvalidRule("table value out of range".into()));
        }
        Ok(LocalRule {
            lo,
            hi,
            alphabet,
            table,
        })
    }

    /// Rule with window [−left_radius, right_radius].
    pub fn from_radii(
        left_radius: u32,
        right_radius: u32,
        alphabet: Color,
        table: Vec<Color>,
    ) -> Result<LocalRule, SpacetimeError> {
        LocalRule::new(-(left_radius as i64), right_radius as i64, alphabet, table)
    }

    pub fn identity(alphabet: Color) -> LocalRule {
        LocalRule::new(0, 0, alphabet, (0..alphabet).collect()).expect("identity is valid")
    }

    pub fn width(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn table(&self) -> &[Color] {
        &self.table
    }

    pub fn value(&self, word: &[Color]) -> Color {
        debug_assert_eq!(word.len(), self.width());
        let q = self.alphabet as usize;
        let mut idx = 0usize;
        for &c in word.iter().rev() {
            idx = idx * q + c as usize;
        }
        self.table[idx]
    }

    /// Applies the rule once: a word covering positions [s, s+len) maps to
    /// the image word covering [s−lo, s+len−1−hi].
    pub fn apply(&self, word: &[Color]) -> Vec<Color> {
        let w = self.width();
        assert!(word.len() >= w, "word shorter than the rule window");
        (0..word.len() - w + 1)
            .map(|t| self.value(&word[t..t + w]))
            .collect()
    }

    /// The rule of φ∘σᵖ: the window shifts by p, the table is unchanged.
    pub fn twist(&self, p: i64) -> LocalRule {
        LocalRule {
            lo: self.lo + p,
            hi: self.hi + p,
            alphabet: self.alphabet,
            table: self.table.clone(),
        }
    }

    /// The rule conjugated by the coordinate reflection i ↦ −i.
    fn reflect(&self) -> LocalRule {
        let w = self.width();
        let q = self.alphabet as usize;
        let mut table = vec![0; self.table.len()];
        for (idx, &v) in self.table.iter().enumerate() {
            let mut rest = idx;
            let mut word = Vec::with_capacity(w);
            for _ in 0..w {
                word.push(rest % q);
                rest /= q;
            }
            let mut ridx = 0usize;
            for &c in word.iter() {
                ridx = ridx * q + c;
            }
            table[ridx] = v;
        }
        LocalRule {
            lo: -self.hi,
            hi: -self.lo,
            alphabet: self.alphabet,
            table,
        }
    }

    /// Affine coefficients (c₀…c_{w−1}, constant) over GF(q) if the rule is
    /// affine-linear and q is prime.
    fn linear_coefficients(&self) -> Option<(Vec<u64>, u64)> {
        let q = self.alphabet as u64;
        if q < 2 || !(2..=q).take_while(|d| d * d <= q).all(|d| q % d != 0) {
            return None;
        }
        let w = self.width();
        let constant = self.table[0] as u64;
        let mut coeffs = Vec::with_capacity(w);
        let mut stride = 1usize;
        for _ in 0..w {
            let c = (self.table[stride] as u64 + q - constant) % q;
            coeffs.push(c);
            stride *= q as usize;
        }
        // Verify the affine form on the whole table.
        for (idx, &v) in self.table.iter().enumerate() {
            let mut rest = idx;
            let mut acc = constant;
            for &c in &coeffs {
                acc = (acc + c * (rest % q as usize) as u64) % q;
                rest /= q as usize;
            }
            if acc != v as u64 {
                return None;
            }
        }
        Some((coeffs, constant))
    }
}

// ---------------------------------------------------------------------------
// Spacetimes
// ---------------------------------------------------------------------------

/// The spacetime of an endomorphism: rows are points of `base`, each row is
/// the φ-image of the one below it. The distinguished basis (e₁, e₂) has
/// −e₁ expansive by construction (the lower half plane codes the upper).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spacetime {
    pub base: Language1D,
    pub rule: LocalRule,
    pub basis: (LatticePoint, LatticePoint),
}

/// How far beyond the rule window the well-definedness check extends.
const WELL_DEFINED_SLACK: usize = 3;

impl Spacetime {
    /// Validates that the rule maps legal base words to legal base words
    /// (on all words up to the rule width plus a fixed slack).
    pub fn new(base: Language1D, rule: LocalRule, budget: u64) -> Result<Spacetime, SpacetimeError> {
        if matches!(base, Language1D::Phased(_) | Language1D::Union(_)) {
            return Err(SpacetimeError::UnsupportedBase);
        }
        if base.alphabet() != rule.alphabet {
            return Err(SpacetimeError::InvalidRule(
                "rule alphabet must match the base language".into(),
            ));
        }
        let mut b = Budget::new(budget);
        let st = Spacetime {
            base,
            rule,
            basis: (pt(1, 0), pt(0, 1)),
        };
        let w = st.rule.width();
        for len in w..=w + WELL_DEFINED_SLACK {
            let words = enumerate_words(&st.base, len, b.remaining())
                .map_err(|e| lift_shift(&mut b, e))?;
            let legal_images = enumerate_words(&st.base, len - w + 1, b.remaining())
                .map_err(|e| lift_shift(&mut b, e))?;
            charge(&mut b, words.len() as u64 * len as u64)?;
            for word in &words {
                let image = st.rule.apply(word);
                if legal_images.binary_search(&image).is_err() {
                    return Err(SpacetimeError::RuleNotWellDefined { length: len });
                }
            }
        }
        Ok(st)
    }

    /// The spacetime of φ∘σᵖ.
    pub fn twist(&self, p: i64) -> Spacetime {
        Spacetime {
            base: self.base.clone(),
            rule: self.rule.twist(p),
            basis: self.basis,
        }
    }

    /// The spacetime conjugated by i ↦ −i (swaps the roles of W⁺ and W⁻).
    pub fn reflect(&self) -> Spacetime {
        Spacetime {
            base: reverse_language(&self.base),
            rule: self.rule.reflect(),
            basis: self.basis,
        }
    }

    /// Legal words of the k-fold composite's window together with their
    /// composite image at the leftmost output position.
    fn composite_words(
        &self,
        k: usize,
        budget: &mut Budget,
    ) -> Result<Vec<(Vec<Color>, Color)>, SpacetimeError> {
        let len = (k as i64 * (self.rule.hi - self.rule.lo) + 1) as usize;
        let words =
            enumerate_words(&self.base, len, budget.remaining()).map_err(|e| lift_shift(budget, e))?;
        charge(budget, words.len() as u64 * (k as u64 + 1) * len as u64)?;
        Ok(words
            .into_iter()
            .map(|w| {
                let mut cur = w.clone();
                for _ in 0..k {
                    cur = self.rule.apply(&cur);
                }
                debug_assert_eq!(cur.len(), 1);
                (w, cur[0])
            })
            .collect())
    }

    /// W⁺(k): the smallest m such that every position ≥ m of φᵏ(y) is
    /// determined by y on [0, ∞).
    pub fn w_plus(&self, k: usize, budget: &mut Budget) -> Result<i64, SpacetimeError> {
        if k == 0 {
            return Ok(0);
        }
        let lo = k as i64 * self.rule.lo;
        let hi = k as i64 * self.rule.hi;
        let words = self.composite_words(k, budget)?;
        let mut m = -lo;
        loop {
            charge(budget, words.len() as u64)?;
            if !determined(&words, |idx| (m - 1) + lo + idx as i64 >= 0) {
                return Ok(m);
            }
            m -= 1;
            if m + hi < 0 {
                return Err(SpacetimeError::DegenerateRule);
            }
        }
    }

    /// W⁻(k): the largest m such that every position ≤ m of φᵏ(y) is
    /// determined by y on (−∞, 0].
    pub fn w_minus(&self, k: usize, budget: &mut Budget) -> Result<i64, SpacetimeError> {
        if k == 0 {
            return Ok(0);
        }
        let lo = k as i64 * self.rule.lo;
        let hi = k as i64 * self.rule.hi;
        let words = self.composite_words(k, budget)?;
        let mut m = -hi;
        loop {
            charge(budget, words.len() as u64)?;
            if !determined(&words, |idx| (m + 1) + lo + idx as i64 <= 0) {
                return Ok(m);
            }
            m += 1;
            if m + lo > 0 {
                return Err(SpacetimeError::DegenerateRule);
            }
        }
    }
}

/// True when the composite image is a function of the known cells: no two
/// legal window words agreeing on every known position differ in value.
fn determined(words: &[(Vec<Color>, Color)], known: impl Fn(usize) -> bool) -> bool {
    let mut groups: HashMap<Vec<Color>, Color> = HashMap::new();
    for (w, v) in words {
        let key: Vec<Color> = w
            .iter()
            .enumerate()
            .filter(|&(idx, _)| known(idx))
            .map(|(_, &c)| c)
            .collect();
        match groups.insert(key, *v) {
            Some(prev) if prev != *v => return false,
            _ => {}
        }
    }
    true
}

fn reverse_language(lang: &Language1D) -> Language1D {
    match lang {
        Language1D::Full { alphabet } => Language1D::Full { alphabet: *alphabet },
        Language1D::Sft {
            alphabet,
            width,
            allowed,
        } => {
            let mut rev: Vec<Vec<Color>> = allowed
                .iter()
                .map(|w| w.iter().rev().copied().collect())
                .collect();
            rev.sort();
            Language1D::Sft {
                alphabet: *alphabet,
                width: *width,
                allowed: rev,
            }
        }
        other => other.clone(),
    }
}

// ---------------------------------------------------------------------------
// Width tables and slopes
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WidthTable {
    /// rows[k] = (W⁺(k), W⁻(k)) for k = 0..=k_max.
    pub rows: Vec<(i64, i64)>,
    /// min_k W⁺(k)/k — a certified upper bound for α⁺ by subadditivity.
    pub alpha_plus_upper: Rational64,
    /// max_k W⁻(k)/k — a certified lower bound for α⁻.
    pub alpha_minus_lower: Rational64,
    /// Heuristic: the bound was attained linearly at two consecutive
    /// multiples of its denominator.
    pub plus_exact: bool,
    pub minus_exact: bool,
}

impl WidthTable {
    pub fn k_max(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn w_plus(&self, k: usize) -> i64 {
        self.rows[k].0
    }

    pub fn w_minus(&self, k: usize) -> i64 {
        self.rows[k].1
    }

    pub fn plus_subadditive(&self) -> bool {
        let n = self.rows.len();
        (1..n).all(|a| (1..n - a).all(|b| self.rows[a + b].0 <= self.rows[a].0 + self.rows[b].0))
    }

    pub fn minus_superadditive(&self) -> bool {
        let n = self.rows.len();
        (1..n).all(|a| (1..n - a).all(|b| self.rows[a + b].1 >= self.rows[a].1 + self.rows[b].1))
    }

    /// W⁺(k) ≥ ⌈α̂⁺k⌉ for every table entry (meaningful when `plus_exact`).
    pub fn ceil_inequality(&self) -> bool {
        (1..self.rows.len()).all(|k| {
            let bound = (self.alpha_plus_upper * Rational64::from(k as i64)).ceil().to_integer();
            self.rows[k].0 >= bound
        })
    }
}

pub fn width_table(
    st: &Spacetime,
    k_max: usize,
    budget: &mut Budget,
) -> Result<WidthTable, SpacetimeError> {
    if k_max < 1 {
        return Err(SpacetimeError::NotApplicable("width tables need k_max ≥ 1".into()));
    }
    let mut rows = vec![(0i64, 0i64)];
    for k in 1..=k_max {
        rows.push((st.w_plus(k, budget)?, st.w_minus(k, budget)?));
    }
    let alpha_plus_upper = (1..=k_max)
        .map(|k| Rational64::new(rows[k].0, k as i64))
        .min()
        .unwrap();
    let alpha_minus_lower = (1..=k_max)
        .map(|k| Rational64::new(rows[k].1, k as i64))
        .max()
        .unwrap();
    let exact = |alpha: Rational64, pick: fn(&(i64, i64)) -> i64| {
        let (p, q) = (*alpha.numer(), *alpha.denom() as usize);
        (1..).take_while(|j| q * (j + 1) <= k_max).any(|j| {
            pick(&rows[q * j]) == p * j as i64 && pick(&rows[q * (j + 1)]) == p * (j as i64 + 1)
        })
    };
    Ok(WidthTable {
        plus_exact: exact(alpha_plus_upper, |r| r.0),
        minus_exact: exact(alpha_minus_lower, |r| r.1),
        rows,
        alpha_plus_upper,
        alpha_minus_lower,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlphaBounds {
    pub alpha_plus: Rational64,
    pub plus_exact: bool,
    pub alpha_minus: Rational64,
    pub minus_exact: bool,
}

/// Certified one-sided bounds on the asymptotic slopes (upper for α⁺ by
/// subadditivity, lower for α⁻), with heuristic exactness flags.
pub fn alpha_bounds(
    st: &Spacetime,
    k_max: usize,
    budget: &mut Budget,
) -> Result<AlphaBounds, SpacetimeError> {
    let t = width_table(st, k_max, budget)?;
    Ok(AlphaBounds {
        alpha_plus: t.alpha_plus_upper,
        plus_exact: t.plus_exact,
        alpha_minus: t.alpha_minus_lower,
        minus_exact: t.minus_exact,
    })
}

/// Levels I(n) = [W⁻(n), W⁺(n)] of the light cone for n ≥ 0, extended to
/// negative n by the central symmetry of the past cone.
pub fn light_cone_levels(
    st: &Spacetime,
    n_min: i64,
    n_max: i64,
    budget: &mut Budget,
) -> Result<Vec<(i64, (i64, i64))>, SpacetimeError> {
    if n_min > n_max {
        return Err(SpacetimeError::NotApplicable("empty level range".into()));
    }
    let mut out = Vec::new();
    for n in n_min..=n_max {
        let level = if n == 0 {
            (0, 0)
        } else if n > 0 {
            (st.w_minus(n as usize, budget)?, st.w_plus(n as usize, budget)?)
        } else {
            let k = (-n) as usize;
            (-st.w_plus(k, budget)?, -st.w_minus(k, budget)?)
        };
        out.push((n, level));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// The induced two-dimensional shift
// ---------------------------------------------------------------------------

/// The ℤ²-SFT of spacetime colorings: every row is base-legal and every
/// vertical step applies the rule. Recognizably affine rules over a prime
/// alphabet on a full-shift base produce a linear specification.
pub fn induced_shift_spec(st: &Spacetime) -> Result<ShiftSpec, SpacetimeError> {
    let q = st.rule.alphabet;
    let width = st.rule.width();
    if let (Language1D::Full { .. }, Some((coeffs, constant))) =
        (&st.base, st.rule.linear_coefficients())
    {
        let mut terms: Vec<(LatticePoint, u64)> = coeffs
            .iter()
            .enumerate()
            .map(|(t, &c)| (pt(st.rule.lo + t as i64, 0), c))
            .collect();
        terms.push((pt(0, 1), q as u64 - 1));
        let rule = LinearRule::new(q as u64, terms, constant).map_err(SpacetimeError::Shift)?;
        return Ok(ShiftSpec::Linear(rule));
    }
    let mut families = Vec::new();
    if let Language1D::Sft {
        width: bw, allowed, ..
    } = &st.base
    {
        let window: Vec<LatticePoint> = (0..*bw as i64).map(|i| pt(i, 0)).collect();
        let mut forbidden = Vec::new();
        let mut word = vec![0 as Color; *bw];
        enumerate_words_over(q, &mut word, 0, &mut |w| {
            if allowed.binary_search(&w.to_vec()).is_err() {
                forbidden.push(w.to_vec());
            }
        });
        families.push(ForbiddenFamily { window, forbidden });
    }
    if matches!(st.base, Language1D::Phased(_) | Language1D::Union(_)) {
        return Err(SpacetimeError::UnsupportedBase);
    }
    let mut window: Vec<LatticePoint> = (0..width as i64).map(|t| pt(st.rule.lo + t, 0)).collect();
    window.push(pt(0, 1));
    let mut forbidden = Vec::new();
    let mut word = vec![0 as Color; width + 1];
    enumerate_words_over(q, &mut word, 0, &mut |w| {
        if w[width] != st.rule.value(&w[..width]) {
            forbidden.push(w.to_vec());
        }
    });
    families.push(ForbiddenFamily { window, forbidden });
    Ok(ShiftSpec::Forbidden(ForbiddenRule {
        alphabet: q,
        families,
    }))
}

fn enumerate_words_over(q: Color, word: &mut Vec<Color>, k: usize, f: &mut impl FnMut(&[Color])) {
    if k == word.len() {
        f(word);
        return;
    }
    for c in 0..q {
        word[k] = c;
        enumerate_words_over(q, word, k + 1, f);
    }
}

// ---------------------------------------------------------------------------
// Ceiling normalization
// ---------------------------------------------------------------------------

const NORMALIZE_CLOSING_NMAX: usize = 3;
const NORMALIZE_CLOSING_RADIUS: i64 = 6;

fn ceil_ratio(alpha: Rational64, n: i64) -> i64 {
    (alpha * Rational64::from(n)).ceil().to_integer()
}

fn floor_ratio(alpha: Rational64, n: i64) -> i64 {
    (alpha * Rational64::from(n)).floor().to_integer()
}

/// Best-effort recoding to a spacetime with W⁺(n) = ⌈α⁺n⌉ and
/// W⁻(n) = ⌊α⁻n⌋ for n ≤ k_max.
///
/// Preconditions (errors otherwise): both slopes certified exact, and both
/// left-edge rays of the light cone closing for the induced 2-D shift. The
/// construction searches strip heights N such that the half strip along the
/// upper edge codes the adjacent quadrant within a window, recodes by the
/// triangle the strip cuts off, re-extracts the endomorphism of the recoded
/// rows, and verifies the width identities; verification failure returns
/// None rather than trusting the construction.
pub fn normalize_spacetime(
    st: &Spacetime,
    k_max: usize,
    budget: &mut Budget,
) -> Result<Option<Spacetime>, SpacetimeError> {
    let table = width_table(st, k_max, budget)?;
    if !table.plus_exact || !table.minus_exact {
        return Err(SpacetimeError::NotApplicable(
            "asymptotic slopes are not certified exact".into(),
        ));
    }
    let (ap, am) = (table.alpha_plus_upper, table.alpha_minus_lower);
    let spec = induced_shift_spec(st)?;
    for dir in [
        pt(*am.numer(), *am.denom()),
        pt(-*ap.numer(), -(*ap.denom())),
    ] {
        let ray = RationalRay::from_dir(dir).expect("slope denominators are positive");
        let verdict = is_closing(
            &spec,
            &ray,
            NORMALIZE_CLOSING_NMAX,
            NORMALIZE_CLOSING_RADIUS,
            budget,
        )
        .map_err(|e| match e {
            CodingError::BudgetExceeded { used } => SpacetimeError::BudgetExceeded { used },
            _ => SpacetimeError::NotApplicable(format!(
                "closing precondition unverifiable for edge ray {:?}",
                dir
            )),
        })?;
        if !verdict.is_closing() {
            return Err(SpacetimeError::NotApplicable(format!(
                "edge ray {:?} is not closing within the window",
                dir
            )));
        }
    }
    let normalized = |t: &WidthTable| {
        (0..=t.k_max()).all(|n| {
            t.rows[n].0 == ceil_ratio(ap, n as i64) && t.rows[n].1 == floor_ratio(am, n as i64)
        })
    };
    if normalized(&table) {
        return Ok(Some(st.clone()));
    }
    // Upper edge first, then if needed the lower edge via reflection.
    let mut cur = st.clone();
    if (0..=k_max).any(|n| table.rows[n].0 != ceil_ratio(ap, n as i64)) {
        match edge_pass(&cur, ap, k_max, budget)? {
            Some(next) => cur = next,
            None => return Ok(None),
        }
    }
    let mid = width_table(&cur, k_max, budget)?;
    if (0..=k_max).any(|n| mid.rows[n].1 != floor_ratio(am, n as i64)) {
        match edge_pass(&cur.reflect(), -am, k_max, budget)? {
            Some(next) => cur = next.reflect(),
            None => return Ok(None),
        }
    }
    let fin = width_table(&cur, k_max, budget)?;
    Ok(normalized(&fin).then_some(cur))
}

/// One normalization pass on the upper edge with target slope `alpha`:
/// strip search, triangle recoding, endomorphism re-extraction. Returns
/// None whenever any step fails to certify.
fn edge_pass(
    st: &Spacetime,
    alpha: Rational64,
    k_max: usize,
    budget: &mut Budget,
) -> Result<Option<Spacetime>, SpacetimeError> {
    let (p, q) = (*alpha.numer(), *alpha.denom());
    let table = width_table(st, k_max, budget)?;
    // Anchor: a table entry with W⁺(m) = αm exactly.
    let Some(m) = (1..=k_max / q as usize)
        .map(|j| j * q as usize)
        .find(|&m| table.rows[m].0 == p * (m as i64 / q))
    else {
        return Ok(None);
    };
    let spec = induced_shift_spec(st)?;
    // Fundamental patch of the quadrant {j ≥ 0, i ≥ αj}.
    let targets: Vec<LatticePoint> = (0..=q)
        .flat_map(|s| (p.min(0)..=p.max(0)).map(move |r| pt(r, s)))
        .filter(|t| q * t.i >= p * t.j)
        .collect();
    let mut strip_height = None;
    for n in m as i64..=k_max as i64 {
        let radius = n + q + p.abs() + 3;
        let window = crate::shifts::Region::ball(radius);
        let strip = window.retain(|c| -n <= c.j && c.j <= 0 && q * c.i >= p * c.j);
        let all_forced = targets.iter().try_fold(true, |acc, &t| {
            if strip.contains(t) {
                return Ok::<bool, SpacetimeError>(acc);
            }
            let v = crate::coding::codes(&spec, &strip, t, radius, budget).map_err(lift_coding)?;
            Ok(acc && v.is_forced())
        })?;
        if all_forced {
            strip_height = Some(n);
            break;
        }
    }
    let Some(n) = strip_height else {
        return Ok(None);
    };
    // The triangle the strip cuts off against the vertical axis.
    let tri: Vec<LatticePoint> = (-n..=0)
        .flat_map(|j| {
            let edge = if p >= 0 {
                ceil_ratio(alpha, j)..=0
            } else {
                0..=floor_ratio(alpha, j)
            };
            edge.map(move |i| pt(i, j))
        })
        .collect();
    let f = crate::shifts::Region::from_points(tri);
    let rec = match canonical_recode(&spec, &f, budget) {
        Ok(rec) => rec,
        Err(CodingError::BudgetExceeded { used }) => {
            return Err(SpacetimeError::BudgetExceeded { used })
        }
        Err(_) => return Ok(None),
    };
    extract_spacetime(st, &f, &rec.letters, n, budget)
}

/// Reconstructs the endomorphism of the recoded rows: letters are legal
/// F-patterns, a recoded row at level j is the sliding-block image of the
/// source row at level j−N, and the next recoded letter is a local
/// function of the current recoded row. Any ambiguity or ill-definedness
/// returns None.
fn extract_spacetime(
    st: &Spacetime,
    f: &crate::shifts::Region,
    letters: &[Vec<Color>],
    n: i64,
    budget: &mut Budget,
) -> Result<Option<Spacetime>, SpacetimeError> {
    let (lo, hi) = (st.rule.lo, st.rule.hi);
    // Source window needed to evaluate one recoded letter at the origin.
    let mut theta_lo = i64::MAX;
    let mut theta_hi = i64::MIN;
    for &c in f.points() {
        let steps = n + c.j;
        theta_lo = theta_lo.min(c.i + steps * lo);
        theta_hi = theta_hi.max(c.i + steps * hi);
    }
    // The bottom row of F recovers the source row: a one-block inverse.
    let blo = f
        .points()
        .iter()
        .filter(|c| c.j == -n)
        .map(|c| c.i)
        .min()
        .expect("triangle rows are nonempty");
    let plo = theta_lo + lo - blo;
    let phi = theta_hi + hi - blo;
    let wlen = (phi - plo + 1) as usize;
    let margin = wlen as i64;
    let y_lo = plo - margin + theta_lo;
    let y_hi = phi + margin + theta_hi;
    let y_len = (y_hi - y_lo + 1) as usize;
    let src_words = enumerate_words(&st.base, y_len, budget.remaining())
        .map_err(|e| lift_shift(budget, e))?;
    charge(budget, src_words.len() as u64 * y_len as u64 * (n as u64 + 2))?;
    let q1 = letters.len();
    let encode = |colors: &[Color]| letters.binary_search(&colors.to_vec()).ok();
    let mut rule_map: HashMap<Vec<Color>, Color> = HashMap::new();
    let mut allowed: Vec<Vec<Color>> = Vec::new();
    for y in &src_words {
        // Rows 0..=n+1 of the spacetime over y: row r covers
        // [y_lo − r·lo, y_hi − r·hi].
        let mut rows = vec![y.clone()];
        for _ in 0..=n {
            let last = rows.last().unwrap();
            if last.len() < st.rule.width() {
                return Ok(None);
            }
            rows.push(st.rule.apply(last));
        }
        let letter_at = |pos: i64, level: i64| -> Option<Color> {
            let mut colors = Vec::with_capacity(f.len());
            for &c in f.points() {
                let r = (n + c.j + level) as usize;
                let start = y_lo - (r as i64) * lo;
                let idx = (c.i + pos) - start;
                let row = rows.get(r)?;
                if idx < 0 || idx as usize >= row.len() {
                    return None;
                }
                colors.push(row[idx as usize]);
            }
            encode(&colors).map(|l| l as Color)
        };
        // All level-0 letter words of width wlen, plus the rule samples.
        for s in (plo - margin)..=(phi + margin - wlen as i64 + 1) {
            let word: Option<Vec<Color>> =
                (0..wlen as i64).map(|t| letter_at(s + t, 0)).collect();
            if let Some(word) = word {
                if allowed.last() != Some(&word) {
                    allowed.push(word);
                }
            }
        }
        let sample: Option<Vec<Color>> = (plo..=phi).map(|t| letter_at(t, 0)).collect();
        let (Some(sample), Some(out)) = (sample, letter_at(0, 1)) else {
            return Ok(None);
        };
        if let Some(prev) = rule_map.insert(sample, out) {
            if prev != out {
                return Ok(None);
            }
        }
    }
    allowed.sort();
    allowed.dedup();
    if q1 > u16::MAX as usize {
        return Ok(None);
    }
    let tsize = (q1 as u64).checked_pow(wlen as u32);
    if tsize.is_none() || tsize.unwrap() > MAX_RULE_TABLE {
        return Ok(None);
    }
    let mut table = vec![0 as Color; tsize.unwrap() as usize];
    for (word, out) in &rule_map {
        let mut idx = 0usize;
        for &c in word.iter().rev() {
            idx = idx * q1 + c as usize;
        }
        table[idx] = *out;
    }
    let base1 = match Language1D::sft(q1 as Color, wlen, allowed) {
        Ok(l) => l,
        Err(_) => return Ok(None),
    };
    let rule1 = match LocalRule::new(plo, phi, q1 as Color, table) {
        Ok(r) => r,
        Err(_) => return Ok(None),
    };
    match Spacetime::new(base1, rule1, budget.remaining()) {
        Ok(st1) => Ok(Some(st1)),
        Err(SpacetimeError::BudgetExceeded { used }) => {
            Err(SpacetimeError::BudgetExceeded { used })
        }
        Err(_) => Ok(None),
    }
}

// ---------------------------------------------------------------------------
// Builtins
// ---------------------------------------------------------------------------

/// φ(y)₀ = y₀ + y₁ mod 2 on the full binary shift.
pub fn ledrappier_spacetime() -> Spacetime {
    let rule = LocalRule::new(0, 1, 2, vec![0, 1, 1, 0]).unwrap();
    Spacetime::new(Language1D::full(2), rule, 1 << 16).unwrap()
}

/// φ(y)₀ = y₀ ∧ y₁ on the full binary shift (a nonlinear cone).
pub fn and_rule_spacetime() -> Spacetime {
    let rule = LocalRule::new(0, 1, 2, vec![0, 0, 0, 1]).unwrap();
    Spacetime::new(Language1D::full(2), rule, 1 << 16).unwrap()
}

pub fn identity_spacetime(alphabet: Color) -> Spacetime {
    Spacetime::new(Language1D::full(alphabet), LocalRule::identity(alphabet), 1 << 16).unwrap()
}
