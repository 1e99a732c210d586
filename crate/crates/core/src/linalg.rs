//! Exact linear algebra over prime fields GF(p).
//!
//! An incremental row-echelon solver: rows are inserted one at a time and
//! reduced against the current pivots (pivot = highest nonzero column, which
//! keeps naturally "triangular" constraint matrices cheap). GF(2) rows are
//! stored as bitsets; other primes use dense word vectors.

/// Incremental solver for a linear system over GF(p), p prime.
pub struct LinearSolver {
    p: u64,
    ncols: usize,
    rows: Rows,
    /// Pivot column of each stored row (strictly decreasing per insertion
    /// history is not guaranteed; the map below tracks ownership).
    pivot_of_row: Vec<usize>,
    /// pivot column -> row index.
    row_of_pivot: Vec<Option<usize>>,
    inconsistent: bool,
}

enum Rows {
    F2 {
        words: Vec<Vec<u64>>,
        rhs: Vec<bool>,
    },
    Fp {
        dense: Vec<Vec<u64>>,
        rhs: Vec<u64>,
    },
}

impl LinearSolver {
    pub fn new(p: u64, ncols: usize) -> LinearSolver {
        let rows = if p == 2 {
            Rows::F2 {
                words: Vec::new(),
                rhs: Vec::new(),
            }
        } else {
            Rows::Fp {
                dense: Vec::new(),
                rhs: Vec::new(),
            }
        };
        LinearSolver {
            p,
            ncols,
            rows,
            pivot_of_row: Vec::new(),
            row_of_pivot: vec![None; ncols],
            inconsistent: false,
        }
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rank(&self) -> usize {
        self.pivot_of_row.len()
    }

    pub fn nullity(&self) -> usize {
        self.ncols - self.rank()
    }

    /// False once some inserted row reduced to 0 = nonzero.
    pub fn consistent(&self) -> bool {
        !self.inconsistent
    }

    /// Inserts the row Σ coeff·x_col = rhs (coefficients mod p, duplicate
    /// columns accumulate). Returns true if the row increased the rank.
    pub fn add_row(&mut self, cols: &[(usize, u64)], rhs: u64) -> bool {
        match &mut self.rows {
            Rows::F2 { words, rhs: rhss } => {
                let nwords = self.ncols.div_ceil(64);
                let mut row = vec![0u64; nwords];
                for &(c, coeff) in cols {
                    debug_assert!(c < self.ncols);
                    if coeff % 2 == 1 {
                        row[c / 64] ^= 1 << (c % 64);
                    }
                }
                let mut r = rhs % 2 == 1;
                // Reduce against existing pivots.
                loop {
                    let Some(h) = highest_bit(&row) else {
                        if r {
                            self.inconsistent = true;
                        }
                        return false;
                    };
                    match self.row_of_pivot[h] {
                        Some(idx) => {
                            let other = &words[idx];
                            for (w, o) in row.iter_mut().zip(other) {
                                *w ^= o;
                            }
                            r ^= rhss[idx];
                        }
                        None => {
                            self.row_of_pivot[h] = Some(words.len());
                            self.pivot_of_row.push(h);
                            words.push(row);
                            rhss.push(r);
                            return true;
                        }
                    }
                }
            }
            Rows::Fp { dense, rhs: rhss } => {
                let p = self.p;
                let mut row = vec![0u64; self.ncols];
                for &(c, coeff) in cols {
                    debug_assert!(c < self.ncols);
                    row[c] = (row[c] + coeff) % p;
                }
                let mut r = rhs % p;
                loop {
                    let Some(h) = row.iter().rposition(|&v| v != 0) else {
                        if r != 0 {
                            self.inconsistent = true;
                        }
                        return false;
                    };
                    match self.row_of_pivot[h] {
                        Some(idx) => {
                            // row -= (row[h] / other[h]) * other
                            let other = &dense[idx];
                            let factor = row[h] * mod_inv(other[h], p) % p;
                            for (w, &o) in row.iter_mut().zip(other) {
                                *w = (*w + (p - factor * o % p)) % p;
                            }
                            r = (r + (p - factor * rhss[idx] % p)) % p;
                            debug_assert_eq!(row[h], 0);
                        }
                        None => {
                            self.row_of_pivot[h] = Some(dense.len());
                            self.pivot_of_row.push(h);
                            dense.push(row);
                            rhss.push(r);
                            return true;
                        }
                    }
                }
            }
        }
    }

    /// Brings the stored rows to reduced row echelon form (each pivot column
    /// appears in exactly one row). Idempotent.
    fn reduce_fully(&mut self) {
        // Process pivots from highest to lowest, eliminating each pivot
        // column from all other rows.
        let mut order: Vec<usize> = (0..self.pivot_of_row.len()).collect();
        order.sort_by_key(|&idx| std::cmp::Reverse(self.pivot_of_row[idx]));
        match &mut self.rows {
            Rows::F2 { words, rhs } => {
                for &idx in &order {
                    let h = self.pivot_of_row[idx];
                    let (w, hi) = (h / 64, 1u64 << (h % 64));
                    let src = words[idx].clone();
                    let src_rhs = rhs[idx];
                    for other in 0..words.len() {
                        if other != idx && words[other][w] & hi != 0 {
                            for (a, b) in words[other].iter_mut().zip(&src) {
                                *a ^= b;
                            }
                            rhs[other] ^= src_rhs;
                        }
                    }
                }
            }
            Rows::Fp { dense, rhs } => {
                let p = self.p;
                for &idx in &order {
                    let h = self.pivot_of_row[idx];
                    // Normalize pivot to 1.
                    let inv = mod_inv(dense[idx][h], p);
                    for v in dense[idx].iter_mut() {
                        *v = *v * inv % p;
                    }
                    rhs[idx] = rhs[idx] * inv % p;
                    let src = dense[idx].clone();
                    let src_rhs = rhs[idx];
                    for other in 0..dense.len() {
                        if other != idx && dense[other][h] != 0 {
                            let f = dense[other][h];
                            for (a, &b) in dense[other].iter_mut().zip(&src) {
                                *a = (*a + (p - f * b % p)) % p;
                            }
                            rhs[other] = (rhs[other] + (p - f * src_rhs % p)) % p;
                        }
                    }
                }
            }
        }
    }

    /// One solution of the affine system (free variables set to zero), or
    /// None if inconsistent.
    pub fn particular_solution(&mut self) -> Option<Vec<u64>> {
        if self.inconsistent {
            return None;
        }
        self.reduce_fully();
        let mut x = vec![0u64; self.ncols];
        match &self.rows {
            Rows::F2 { rhs, .. } => {
                for (idx, &h) in self.pivot_of_row.iter().enumerate() {
                    x[h] = rhs[idx] as u64;
                }
            }
            Rows::Fp { rhs, .. } => {
                for (idx, &h) in self.pivot_of_row.iter().enumerate() {
                    // reduce_fully normalized pivots to 1.
                    x[h] = rhs[idx];
                }
            }
        }
        Some(x)
    }

    /// Basis of the nullspace of the homogeneous part, as dense vectors.
    pub fn nullspace_basis(&mut self) -> Vec<Vec<u64>> {
        self.reduce_fully();
        let p = self.p;
        let pivot_cols: Vec<Option<usize>> = self.row_of_pivot.clone();
        let mut basis = Vec::with_capacity(self.nullity());
        for f in 0..self.ncols {
            if pivot_cols[f].is_some() {
                continue;
            }
            let mut v = vec![0u64; self.ncols];
            v[f] = 1;
            match &self.rows {
                Rows::F2 { words, .. } => {
                    for (idx, &h) in self.pivot_of_row.iter().enumerate() {
                        if words[idx][f / 64] >> (f % 64) & 1 == 1 {
                            v[h] = 1;
                        }
                    }
                }
                Rows::Fp { dense, .. } => {
                    for (idx, &h) in self.pivot_of_row.iter().enumerate() {
                        let c = dense[idx][f];
                        if c != 0 {
                            v[h] = (p - c) % p;
                        }
                    }
                }
            }
            basis.push(v);
        }
        basis
    }

    /// For each column, whether every nullspace vector vanishes there
    /// (true = the coordinate is forced once the pivoted constraints and
    /// any zeroed columns are imposed). Equivalent to "column is a pivot or
    /// appears in no nullspace basis vector", computed without materializing
    /// the basis.
    pub fn forced_columns(&mut self) -> Vec<bool> {
        self.reduce_fully();
        let mut forced = vec![true; self.ncols];
        // A free column f itself is not forced, and every pivot column whose
        // row mentions f inherits a nonzero entry in the basis vector for f.
        for f in 0..self.ncols {
            if self.row_of_pivot[f].is_some() {
                continue;
            }
            forced[f] = false;
        }
        match &self.rows {
            Rows::F2 { words, .. } => {
                for (idx, &h) in self.pivot_of_row.iter().enumerate() {
                    let row = &words[idx];
                    for f in 0..self.ncols {
                        if self.row_of_pivot[f].is_none() && row[f / 64] >> (f % 64) & 1 == 1 {
                            forced[h] = false;
                            break;
                        }
                    }
                }
            }
            Rows::Fp { dense, .. } => {
                for (idx, &h) in self.pivot_of_row.iter().enumerate() {
                    let row = &dense[idx];
                    for f in 0..self.ncols {
                        if self.row_of_pivot[f].is_none() && row[f] != 0 {
                            forced[h] = false;
                            break;
                        }
                    }
                }
            }
        }
        forced
    }
}

fn highest_bit(words: &[u64]) -> Option<usize> {
    for (k, &w) in words.iter().enumerate().rev() {
        if w != 0 {
            return Some(64 * k + 63 - w.leading_zeros() as usize);
        }
    }
    None
}

/// Modular inverse for prime modulus via Fermat.
fn mod_inv(a: u64, p: u64) -> u64 {
    mod_pow(a % p, p - 2, p)
}

fn mod_pow(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gf2_rank_and_nullspace() {
        // x0 + x1 = 0, x1 + x2 = 0 over GF(2): rank 2, nullity 1,
        // nullspace spanned by (1,1,1).
        let mut s = LinearSolver::new(2, 3);
        assert!(s.add_row(&[(0, 1), (1, 1)], 0));
        assert!(s.add_row(&[(1, 1), (2, 1)], 0));
        assert!(!s.add_row(&[(0, 1), (2, 1)], 0)); // dependent
        assert_eq!(s.rank(), 2);
        assert_eq!(s.nullity(), 1);
        let basis = s.nullspace_basis();
        assert_eq!(basis, vec![vec![1, 1, 1]]);
        assert!(s.consistent());
    }

    #[test]
    fn gf2_inconsistent_affine() {
        let mut s = LinearSolver::new(2, 2);
        s.add_row(&[(0, 1), (1, 1)], 0);
        s.add_row(&[(0, 1), (1, 1)], 1);
        assert!(!s.consistent());
        assert_eq!(s.particular_solution(), None);
    }

    #[test]
    fn gf2_particular_solution() {
        // x0 + x1 = 1, x1 = 1 → x = (0, 1).
        let mut s = LinearSolver::new(2, 2);
        s.add_row(&[(0, 1), (1, 1)], 1);
        s.add_row(&[(1, 1)], 1);
        assert_eq!(s.particular_solution(), Some(vec![0, 1]));
    }

    #[test]
    fn gf3_elimination() {
        // 2x0 + x1 = 1, x0 + x1 = 2 over GF(3) → x0 = 2, x1 = 0.
        let mut s = LinearSolver::new(3, 2);
        s.add_row(&[(0, 2), (1, 1)], 1);
        s.add_row(&[(0, 1), (1, 1)], 2);
        assert!(s.consistent());
        assert_eq!(s.rank(), 2);
        let x = s.particular_solution().unwrap();
        assert_eq!((2 * x[0] + x[1]) % 3, 1);
        assert_eq!((x[0] + x[1]) % 3, 2);
    }

    #[test]
    fn gf5_nullspace_satisfies_rows() {
        // One row over GF(5) with 4 unknowns: nullity 3.
        let mut s = LinearSolver::new(5, 4);
        s.add_row(&[(0, 1), (1, 2), (2, 3), (3, 4)], 0);
        let basis = s.nullspace_basis();
        assert_eq!(basis.len(), 3);
        for v in &basis {
            let dot: u64 = v[0] + 2 * v[1] + 3 * v[2] + 4 * v[3];
            assert_eq!(dot % 5, 0);
        }
    }

    #[test]
    fn forced_columns_via_zeroed_cells() {
        // Three-dot row x0 + x1 + x2 = 0 with x0, x1 pinned to zero forces x2.
        let mut s = LinearSolver::new(2, 3);
        s.add_row(&[(0, 1), (1, 1), (2, 1)], 0);
        s.add_row(&[(0, 1)], 0);
        s.add_row(&[(1, 1)], 0);
        assert_eq!(s.forced_columns(), vec![true, true, true]);

        // Without pinning x1, neither x1 nor x2 is forced.
        let mut s = LinearSolver::new(2, 3);
        s.add_row(&[(0, 1), (1, 1), (2, 1)], 0);
        s.add_row(&[(0, 1)], 0);
        let forced = s.forced_columns();
        assert_eq!(forced, vec![true, false, false]);
    }

    #[test]
    fn duplicate_columns_accumulate() {
        // x0 + x0 = 0 over GF(2) is the zero row.
        let mut s = LinearSolver::new(2, 1);
        assert!(!s.add_row(&[(0, 1), (0, 1)], 0));
        assert_eq!(s.rank(), 0);
    }
}
