//! Sparse LDLᵀ factorization of symmetric quasi-definite matrices.
//!
//! Up-looking factorization driven by the elimination tree, after Davis's
//! LDL. No pivoting: the interior-point caller regularizes its KKT
//! matrices into quasi-definite form, for which the factorization exists
//! and is stable.

/// Symmetric matrix stored as the upper triangle in compressed sparse
/// column form, diagonal included, row indices ascending within columns.
#[derive(Debug, Clone)]
pub struct CscUpper {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscUpper {
    /// Build from upper-triangle triplets (row <= col). Duplicates are
    /// summed. Returns the matrix and, per input triplet, the slot in
    /// `values` it maps to, so callers can refresh values in place.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> (Self, Vec<usize>) {
        let mut per_col: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (t, &(r, c, _)) in triplets.iter().enumerate() {
            debug_assert!(r <= c && c < n);
            per_col[c].push((r, t));
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        let mut slots = vec![0usize; triplets.len()];
        col_ptr.push(0);
        for col in per_col.iter_mut() {
            col.sort_unstable_by_key(|&(r, _)| r);
            let mut last_row = usize::MAX;
            for &(r, t) in col.iter() {
                if r != last_row {
                    row_idx.push(r);
                    values.push(0.0);
                    last_row = r;
                }
                slots[t] = values.len() - 1;
            }
            col_ptr.push(row_idx.len());
        }
        for (t, &(_, _, v)) in triplets.iter().enumerate() {
            values[slots[t]] += v;
        }
        (
            Self {
                n,
                col_ptr,
                row_idx,
                values,
            },
            slots,
        )
    }

    /// Refresh `values` from triplet values using the slot map returned
    /// by [`CscUpper::from_triplets`].
    pub fn refresh(&mut self, triplet_values: &[f64], slots: &[usize]) {
        self.values.fill(0.0);
        for (t, &v) in triplet_values.iter().enumerate() {
            self.values[slots[t]] += v;
        }
    }

    /// y += A x with the implicit symmetry expanded.
    pub fn mul_vec_add(&self, x: &[f64], y: &mut [f64]) {
        for c in 0..self.n {
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[p];
                let v = self.values[p];
                y[r] += v * x[c];
                if r != c {
                    y[c] += v * x[r];
                }
            }
        }
    }
}

/// Symbolic analysis reused across numeric refactorizations.
#[derive(Debug, Clone)]
pub struct LdlSymbolic {
    parent: Vec<isize>,
    l_col_ptr: Vec<usize>,
}

pub fn ldl_symbolic(a: &CscUpper) -> LdlSymbolic {
    let n = a.n;
    let mut parent = vec![-1isize; n];
    let mut flag = vec![usize::MAX; n];
    let mut lnz = vec![0usize; n];
    for k in 0..n {
        flag[k] = k;
        for p in a.col_ptr[k]..a.col_ptr[k + 1] {
            let mut i = a.row_idx[p];
            while i < k && flag[i] != k {
                if parent[i] == -1 {
                    parent[i] = k as isize;
                }
                lnz[i] += 1;
                flag[i] = k;
                i = parent[i] as usize;
            }
        }
    }
    let mut l_col_ptr = vec![0usize; n + 1];
    for i in 0..n {
        l_col_ptr[i + 1] = l_col_ptr[i] + lnz[i];
    }
    LdlSymbolic { parent, l_col_ptr }
}

/// Numeric LDLᵀ factor.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    l_col_ptr: Vec<usize>,
    l_row_idx: Vec<usize>,
    l_values: Vec<f64>,
    d: Vec<f64>,
}

/// Factorize using a previously computed symbolic analysis. Fails when a
/// pivot collapses to zero, which for a quasi-definite input signals an
/// ill-posed system.
pub fn ldl_numeric(a: &CscUpper, sym: &LdlSymbolic) -> Result<LdlFactor, usize> {
    let n = a.n;
    let nnz = sym.l_col_ptr[n];
    let mut l_row_idx = vec![0usize; nnz];
    let mut l_values = vec![0.0f64; nnz];
    let mut d = vec![0.0f64; n];
    let mut y = vec![0.0f64; n];
    let mut pattern = vec![0usize; n];
    let mut flag = vec![usize::MAX; n];
    let mut lnz = vec![0usize; n];

    for k in 0..n {
        let mut top = n;
        flag[k] = k;
        y[k] = 0.0;
        for p in a.col_ptr[k]..a.col_ptr[k + 1] {
            let i = a.row_idx[p];
            y[i] += a.values[p];
            let mut len = 0;
            let mut node = i;
            while node < k && flag[node] != k {
                pattern[len] = node;
                len += 1;
                flag[node] = k;
                node = sym.parent[node] as usize;
            }
            while len > 0 {
                len -= 1;
                top -= 1;
                pattern[top] = pattern[len];
            }
        }
        d[k] = y[k];
        y[k] = 0.0;
        for t in top..n {
            let i = pattern[t];
            let yi = y[i];
            y[i] = 0.0;
            let start = sym.l_col_ptr[i];
            for p in start..start + lnz[i] {
                y[l_row_idx[p]] -= l_values[p] * yi;
            }
            let l_ki = yi / d[i];
            d[k] -= l_ki * yi;
            l_row_idx[start + lnz[i]] = k;
            l_values[start + lnz[i]] = l_ki;
            lnz[i] += 1;
        }
        if d[k] == 0.0 || !d[k].is_finite() {
            return Err(k);
        }
    }
    Ok(LdlFactor {
        n,
        l_col_ptr: sym.l_col_ptr.clone(),
        l_row_idx,
        l_values,
        d,
    })
}

impl LdlFactor {
    /// Solve A x = b in place.
    pub fn solve(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        // L z = b (unit lower triangular).
        for j in 0..self.n {
            let bj = b[j];
            for p in self.l_col_ptr[j]..self.l_col_ptr[j + 1] {
                b[self.l_row_idx[p]] -= self.l_values[p] * bj;
            }
        }
        for j in 0..self.n {
            b[j] /= self.d[j];
        }
        // Lᵀ x = z.
        for j in (0..self.n).rev() {
            let mut sum = b[j];
            for p in self.l_col_ptr[j]..self.l_col_ptr[j + 1] {
                sum -= self.l_values[p] * b[self.l_row_idx[p]];
            }
            b[j] = sum;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn solve_dense_check(n: usize, triplets: &[(usize, usize, f64)], b: &[f64]) {
        let (a, _) = CscUpper::from_triplets(n, triplets);
        let sym = ldl_symbolic(&a);
        let f = ldl_numeric(&a, &sym).unwrap();
        let mut x = b.to_vec();
        f.solve(&mut x);
        let mut ax = vec![0.0; n];
        a.mul_vec_add(&x, &mut ax);
        for i in 0..n {
            assert_abs_diff_eq!(ax[i], b[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn factorizes_positive_definite() {
        solve_dense_check(
            3,
            &[
                (0, 0, 4.0),
                (0, 1, 1.0),
                (1, 1, 3.0),
                (1, 2, -1.0),
                (2, 2, 5.0),
            ],
            &[1.0, 2.0, 3.0],
        );
    }

    #[test]
    fn factorizes_quasi_definite() {
        // [ 2  0  1 ]
        // [ 0  3  1 ]
        // [ 1  1 -1 ]  (KKT-like: PD block plus negative diagonal)
        solve_dense_check(
            3,
            &[
                (0, 0, 2.0),
                (1, 1, 3.0),
                (0, 2, 1.0),
                (1, 2, 1.0),
                (2, 2, -1.0),
            ],
            &[1.0, -2.0, 0.5],
        );
    }

    #[test]
    fn duplicate_triplets_accumulate() {
        let (a, slots) = CscUpper::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0)]);
        assert_eq!(a.values[slots[0]], 3.0);
        assert_eq!(slots[0], slots[1]);
    }

    #[test]
    fn refresh_updates_values_in_place() {
        let trip = [(0usize, 0usize, 1.0f64), (0, 1, 0.5), (1, 1, 2.0)];
        let (mut a, slots) = CscUpper::from_triplets(2, &trip);
        a.refresh(&[4.0, 1.0, 3.0], &slots);
        let sym = ldl_symbolic(&a);
        let f = ldl_numeric(&a, &sym).unwrap();
        let mut x = vec![5.0, 4.0];
        f.solve(&mut x);
        // A = [4 1; 1 3], b = (5, 4) -> x = (1, 1).
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn singular_pivot_reported() {
        let (a, _) = CscUpper::from_triplets(2, &[(0, 0, 0.0), (1, 1, 1.0)]);
        let sym = ldl_symbolic(&a);
        assert_eq!(ldl_numeric(&a, &sym).unwrap_err(), 0);
    }
}
