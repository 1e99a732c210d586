//! One-dimensional languages: full shifts, finite-type constraints, and
//! periodically phased constraints, together with exact subword counting.
//!
//! `enumerate_words` lists the length-n words that occur in bi-infinite
//! points of the language. For finite-type languages this is exact (the
//! transition graph is pruned to its bi-extendable part); for phased
//! constraint systems the window is padded by a slack margin so that every
//! constraint interacting with the window is resolved, which is exact as
//! long as equality constraints do not chain through shared cells (all
//! built-in languages satisfy this).

use crate::shifts::{Color, ShiftError};
use std::collections::{BTreeSet, HashMap};

/// A constraint imposed at every anchor position k ≡ residue (mod period).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PhaseConstraint {
    /// y(k) = color.
    Fixed { residue: usize, color: Color },
    /// y(k) = y(k + offset).
    Equal { residue: usize, offset: i64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhasedLanguage {
    pub alphabet: Color,
    pub period: usize,
    pub constraints: Vec<PhaseConstraint>,
}

/// A one-dimensional language over colors 0..alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Language1D {
    Full {
        alphabet: Color,
    },
    /// Finite type: exactly the bi-infinite sequences all of whose
    /// width-windows are in `allowed`.
    Sft {
        alphabet: Color,
        width: usize,
        allowed: Vec<Vec<Color>>,
    },
    Phased(PhasedLanguage),
    Union(Vec<Language1D>),
}

impl Language1D {
    pub fn full(alphabet: Color) -> Language1D {
        Language1D::Full { alphabet }
    }

    pub fn sft(
        alphabet: Color,
        width: usize,
        allowed: Vec<Vec<Color>>,
    ) -> Result<Language1D, ShiftError> {
        if width == 0 {
            return Err(ShiftError::InvalidSpec("window width must be ≥ 1".into()));
        }
        let mut allowed = allowed;
        for w in &allowed {
            if w.len() != width {
                return Err(ShiftError::InvalidSpec(
                    "allowed word length must equal the window width".into(),
                ));
            }
            if w.iter().any(|&c| c >= alphabet) {
                return Err(ShiftError::InvalidSpec("allowed word color out of range".into()));
            }
        }
        allowed.sort();
        allowed.dedup();
        Ok(Language1D::Sft {
            alphabet,
            width,
            allowed,
        })
    }

    pub fn alphabet(&self) -> Color {
        match self {
            Language1D::Full { alphabet } => *alphabet,
            Language1D::Sft { alphabet, .. } => *alphabet,
            Language1D::Phased(p) => p.alphabet,
            Language1D::Union(ls) => ls.iter().map(|l| l.alphabet()).max().unwrap_or(0),
        }
    }
}

/// Distinct length-n words occurring in points of the language, sorted.
pub fn enumerate_words(
    lang: &Language1D,
    n: usize,
    budget: u64,
) -> Result<Vec<Vec<Color>>, ShiftError> {
    let mut used = 0u64;
    let set = words_into(lang, n, budget, &mut used)?;
    Ok(set.into_iter().collect())
}

/// Number of distinct length-n words occurring in points of the language.
pub fn count_words_1d(lang: &Language1D, n: usize, budget: u64) -> Result<u64, ShiftError> {
    Ok(enumerate_words(lang, n, budget)?.len() as u64)
}

fn charge(used: &mut u64, budget: u64) -> Result<(), ShiftError> {
    *used += 1;
    if *used > budget {
        return Err(ShiftError::BudgetExceeded { used: *used });
    }
    Ok(())
}

fn words_into(
    lang: &Language1D,
    n: usize,
    budget: u64,
    used: &mut u64,
) -> Result<BTreeSet<Vec<Color>>, ShiftError> {
    match lang {
        Language1D::Full { alphabet } => {
            let q = *alphabet;
            let mut out = BTreeSet::new();
            if q == 0 {
                if n == 0 {
                    out.insert(Vec::new());
                }
                return Ok(out);
            }
            let mut word = vec![0 as Color; n];
            loop {
                charge(used, budget)?;
                out.insert(word.clone());
                // Increment little-endian.
                let mut k = 0;
                while k < n {
                    if word[k] + 1 < q {
                        word[k] += 1;
                        break;
                    }
                    word[k] = 0;
                    k += 1;
                }
                if k == n {
                    break;
                }
            }
            Ok(out)
        }
        Language1D::Sft { width, allowed, .. } => words_sft(*width, allowed, n, budget, used),
        Language1D::Phased(p) => words_phased(p, n, budget, used),
        Language1D::Union(ls) => {
            let mut out = BTreeSet::new();
            for l in ls {
                out.append(&mut words_into(l, n, budget, used)?);
            }
            Ok(out)
        }
    }
}

fn words_sft(
    width: usize,
    allowed: &[Vec<Color>],
    n: usize,
    budget: u64,
    used: &mut u64,
) -> Result<BTreeSet<Vec<Color>>, ShiftError> {
    let mut out = BTreeSet::new();
    // Transition graph on allowed width-words; prune to the bi-extendable
    // part (nodes on bi-infinite paths).
    let nodes: Vec<&Vec<Color>> = allowed.iter().collect();
    let mut by_prefix: HashMap<&[Color], Vec<usize>> = HashMap::new();
    for (id, w) in nodes.iter().enumerate() {
        by_prefix.entry(&w[..width - 1]).or_default().push(id);
    }
    let succs: Vec<Vec<usize>> = nodes
        .iter()
        .map(|w| by_prefix.get(&w[1..]).cloned().unwrap_or_default())
        .collect();
    let mut alive = vec![true; nodes.len()];
    loop {
        let mut changed = false;
        let mut has_pred = vec![false; nodes.len()];
        for (u, su) in succs.iter().enumerate() {
            if alive[u] {
                for &v in su {
                    if alive[v] {
                        has_pred[v] = true;
                    }
                }
            }
        }
        for u in 0..nodes.len() {
            if !alive[u] {
                continue;
            }
            let has_succ = succs[u].iter().any(|&v| alive[v]);
            if !has_succ || !has_pred[u] {
                alive[u] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if n == 0 {
        if alive.iter().any(|&a| a) {
            out.insert(Vec::new());
        }
        return Ok(out);
    }
    if n < width {
        for (id, w) in nodes.iter().enumerate() {
            if !alive[id] {
                continue;
            }
            for s in 0..=(width - n) {
                charge(used, budget)?;
                out.insert(w[s..s + n].to_vec());
            }
        }
        return Ok(out);
    }
    // Paths of n − width edges through the pruned graph.
    fn walk(
        node: usize,
        remaining: usize,
        word: &mut Vec<Color>,
        nodes: &[&Vec<Color>],
        succs: &[Vec<usize>],
        alive: &[bool],
        out: &mut BTreeSet<Vec<Color>>,
        used: &mut u64,
        budget: u64,
    ) -> Result<(), ShiftError> {
        charge(used, budget)?;
        if remaining == 0 {
            out.insert(word.clone());
            return Ok(());
        }
        for &v in &succs[node] {
            if alive[v] {
                word.push(*nodes[v].last().unwrap());
                walk(v, remaining - 1, word, nodes, succs, alive, out, used, budget)?;
                word.pop();
            }
        }
        Ok(())
    }
    for (id, w) in nodes.iter().enumerate() {
        if alive[id] {
            let mut word = w.to_vec();
            walk(
                id,
                n - width,
                &mut word,
                &nodes,
                &succs,
                &alive,
                &mut out,
                used,
                budget,
            )?;
        }
    }
    Ok(out)
}

fn words_phased(
    p: &PhasedLanguage,
    n: usize,
    budget: u64,
    used: &mut u64,
) -> Result<BTreeSet<Vec<Color>>, ShiftError> {
    let mut out = BTreeSet::new();
    if p.period == 0 {
        return Err(ShiftError::InvalidSpec("phase period must be ≥ 1".into()));
    }
    let span = p
        .constraints
        .iter()
        .map(|c| match c {
            PhaseConstraint::Fixed { .. } => 0,
            PhaseConstraint::Equal { offset, .. } => offset.unsigned_abs() as usize,
        })
        .max()
        .unwrap_or(0);
    let slack = (p.period + span) as i64;
    for phase in 0..p.period as i64 {
        // Absolute cell range [lo, hi).
        let lo = phase - slack;
        let hi = phase + n as i64 + slack;
        let len = (hi - lo) as usize;
        // Constraint instances fully inside [lo, hi), as cell indices,
        // bucketed by their last cell.
        let mut finishing_at: Vec<Vec<(Vec<usize>, Option<Color>)>> = vec![Vec::new(); len];
        for c in &p.constraints {
            let (residue, color, offset) = match *c {
                PhaseConstraint::Fixed { residue, color } => (residue, Some(color), 0),
                PhaseConstraint::Equal { residue, offset } => (residue, None, offset),
            };
            if residue >= p.period {
                return Err(ShiftError::InvalidSpec("phase residue out of range".into()));
            }
            // Anchors k ≡ residue (mod period) whose cells could reach the
            // window.
            let period = p.period as i64;
            let mut k = lo - span as i64;
            k += (residue as i64 - k).rem_euclid(period);
            while k < hi + span as i64 {
                let cells: Vec<i64> = match color {
                    Some(_) => vec![k],
                    None => vec![k, k + offset],
                };
                if cells.iter().all(|&c| c >= lo && c < hi) {
                    let idx: Vec<usize> = cells.iter().map(|&c| (c - lo) as usize).collect();
                    let last = *idx.iter().max().unwrap();
                    finishing_at[last].push((idx, color));
                }
                k += period;
            }
        }
        let mut colors = vec![0 as Color; len];
        let mid = (phase - lo) as usize;
        dfs_phased(
            0,
            len,
            p.alphabet,
            &finishing_at,
            &mut colors,
            mid,
            n,
            &mut out,
            used,
            budget,
        )?;
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn dfs_phased(
    k: usize,
    len: usize,
    q: Color,
    finishing_at: &[Vec<(Vec<usize>, Option<Color>)>],
    colors: &mut [Color],
    mid: usize,
    n: usize,
    out: &mut BTreeSet<Vec<Color>>,
    used: &mut u64,
    budget: u64,
) -> Result<(), ShiftError> {
    if k == len {
        out.insert(colors[mid..mid + n].to_vec());
        return Ok(());
    }
    for c in 0..q {
        charge(used, budget)?;
        colors[k] = c;
        let ok = finishing_at[k].iter().all(|(cells, fixed)| match fixed {
            Some(col) => colors[cells[0]] == *col,
            None => colors[cells[0]] == colors[cells[1]],
        });
        if ok {
            dfs_phased(k + 1, len, q, finishing_at, colors, mid, n, out, used, budget)?;
        }
    }
    Ok(())
}

/// Union of the four binary restriction languages: even cells zero, odd
/// cells zero, even cell equals its right neighbour, even cell equals its
/// left neighbour.
pub fn einsiedler_restriction() -> Language1D {
    let fixed = |residue| {
        Language1D::Phased(PhasedLanguage {
            alphabet: 2,
            period: 2,
            constraints: vec![PhaseConstraint::Fixed { residue, color: 0 }],
        })
    };
    let equal = |offset| {
        Language1D::Phased(PhasedLanguage {
            alphabet: 2,
            period: 2,
            constraints: vec![PhaseConstraint::Equal { residue: 0, offset }],
        })
    };
    Language1D::Union(vec![fixed(0), fixed(1), equal(1), equal(-1)])
}

#[cfg(test)]
mod tests {
    use super::*;

    const B: u64 = 10_000_000;

    #[test]
    fn full_counts() {
        let l = Language1D::full(2);
        for n in 0..=6 {
            assert_eq!(count_words_1d(&l, n, B).unwrap(), 1u64 << n);
        }
        let l3 = Language1D::full(3);
        assert_eq!(count_words_1d(&l3, 4, B).unwrap(), 81);
    }

    #[test]
    fn golden_mean_sft() {
        // No two consecutive 1s: word counts follow the Fibonacci recurrence.
        let allowed = vec![vec![0, 0], vec![0, 1], vec![1, 0]];
        let l = Language1D::sft(2, 2, allowed).unwrap();
        let counts: Vec<u64> = (1..=8)
            .map(|n| count_words_1d(&l, n, B).unwrap())
            .collect();
        assert_eq!(counts, vec![2, 3, 5, 8, 13, 21, 34, 55]);
    }

    #[test]
    fn sft_pruning_drops_dead_words() {
        // 11 can never recur: with windows {00, 01, 11}, the word 10 is
        // forbidden, so after a 1 only 1 may follow; 01 is allowed but 0
        // after 1 is not, making 01 usable once — all fine bi-infinitely.
        // Here instead make 1 a strict dead end: allowed {00, 01}.
        let l = Language1D::sft(2, 2, vec![vec![0, 0], vec![0, 1]]).unwrap();
        // 01 has no successor, so only 0^∞ survives.
        assert_eq!(enumerate_words(&l, 3, B).unwrap(), vec![vec![0, 0, 0]]);
        assert_eq!(count_words_1d(&l, 1, B).unwrap(), 1);
    }

    #[test]
    fn phased_fixed_even_cells() {
        // Even cells forced to 0: length-2 words are 00, 01, 10.
        let l = Language1D::Phased(PhasedLanguage {
            alphabet: 2,
            period: 2,
            constraints: vec![PhaseConstraint::Fixed { residue: 0, color: 0 }],
        });
        let words = enumerate_words(&l, 2, B).unwrap();
        assert_eq!(words, vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
        // Length 2n: one free phase contributes 2^n words, the other 2^n
        // shifted; total 2^(n+1) − 1 (the all-pairs overlap is 2^... counted
        // once via dedup).
        for n in 1..=6 {
            assert_eq!(
                count_words_1d(&l, 2 * n, B).unwrap(),
                (1u64 << (n + 1)) - 1
            );
        }
    }

    #[test]
    fn phased_equal_pairs() {
        // y(2k) = y(2k+1): at even phase 2^n words; at odd phase the two
        // boundary cells are unconstrained, giving 2^(n+1); overlap 2.
        let l = Language1D::Phased(PhasedLanguage {
            alphabet: 2,
            period: 2,
            constraints: vec![PhaseConstraint::Equal { residue: 0, offset: 1 }],
        });
        assert_eq!(count_words_1d(&l, 2, B).unwrap(), 4);
        for n in 2..=6 {
            assert_eq!(
                count_words_1d(&l, 2 * n, B).unwrap(),
                (1u64 << n) + (1u64 << (n + 1)) - 2
            );
        }
    }

    #[test]
    fn restriction_union_counts() {
        let l = einsiedler_restriction();
        assert_eq!(count_words_1d(&l, 2, B).unwrap(), 4);
        assert_eq!(count_words_1d(&l, 4, B).unwrap(), 14);
        assert_eq!(count_words_1d(&l, 6, B).unwrap(), 34);
        // count(2n) = 5·2^n − 6 for n ≥ 2.
        for n in 2..=10u32 {
            assert_eq!(
                count_words_1d(&l, 2 * n as usize, B).unwrap(),
                5 * (1u64 << n) - 6,
                "length {}",
                2 * n
            );
        }
    }

    #[test]
    fn union_dedupes() {
        let l = Language1D::Union(vec![Language1D::full(2), Language1D::full(2)]);
        assert_eq!(count_words_1d(&l, 3, B).unwrap(), 8);
    }

    #[test]
    fn budget_enforced() {
        let l = Language1D::full(2);
        assert!(matches!(
            count_words_1d(&l, 30, 1000).unwrap_err(),
            ShiftError::BudgetExceeded { .. }
        ));
    }
}
