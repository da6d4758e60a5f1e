//! Minimal sparse matrix containers used by the solvers.

use nalgebra::DMatrix;

/// Symmetric sparse matrix storing the upper triangle as triplets.
///
/// Indices are zero-based. Entries with `row <= col` are stored once and
/// mirrored implicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSymMatrix {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Insert an entry, normalizing to the upper triangle. Duplicate
    /// coordinates are rejected in debug builds.
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        assert!(row < self.n && col < self.n, "index out of range");
        let (r, c) = if row <= col { (row, col) } else { (col, row) };
        debug_assert!(
            !self.entries.iter().any(|&(er, ec, _)| er == r && ec == c),
            "duplicate entry ({r},{c})"
        );
        self.entries.push((r, c, value));
    }

    /// y = A x with the implicit symmetry expanded.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        y.fill(0.0);
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
            if r != c {
                y[c] += v * x[r];
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
            if r != c {
                m[(c, r)] += v;
            }
        }
        m
    }

    /// Connected components of the off-diagonal sparsity pattern. For a
    /// graph Laplacian this equals the multiplicity of the zero
    /// eigenvalue.
    pub fn pattern_components(&self) -> usize {
        if self.n == 0 {
            return 0;
        }
        let mut adj = vec![Vec::new(); self.n];
        for &(r, c, v) in &self.entries {
            if r != c && v != 0.0 {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
        let mut seen = vec![false; self.n];
        let mut components = 0;
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        components
    }
}

/// General rectangular sparse matrix in triplet form, zero-based.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub triplets: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            triplets: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.rows && col < self.cols);
        self.triplets.push((row, col, value));
    }

    /// y = A x.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        y.fill(0.0);
        for &(r, c, v) in &self.triplets {
            y[r] += v * x[c];
        }
    }

    /// y = Aᵀ x.
    pub fn mul_vec_transpose(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(y.len(), self.cols);
        y.fill(0.0);
        for &(r, c, v) in &self.triplets {
            y[c] += v * x[r];
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for &(r, c, v) in &self.triplets {
            m[(r, c)] += v;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_matvec_mirrors_triangle() {
        let mut a = SparseSymMatrix::new(3);
        a.push(0, 0, 2.0);
        a.push(1, 0, -1.0); // stored as (0,1)
        a.push(1, 2, 3.0);
        let x = [1.0, 2.0, 3.0];
        let mut y = [0.0; 3];
        a.mul_vec(&x, &mut y);
        assert_eq!(y, [0.0, 8.0, 6.0]);
        let dense = a.to_dense();
        assert_eq!(dense[(0, 1)], -1.0);
        assert_eq!(dense[(1, 0)], -1.0);
    }

    #[test]
    fn pattern_components_counts_islands() {
        let mut a = SparseSymMatrix::new(4);
        a.push(0, 1, -1.0);
        a.push(2, 3, -1.0);
        assert_eq!(a.pattern_components(), 2);
        a.push(1, 2, -1.0);
        assert_eq!(a.pattern_components(), 1);
    }

    #[test]
    fn rectangular_transpose_matvec() {
        let mut a = SparseMatrix::new(2, 3);
        a.push(0, 0, 1.0);
        a.push(0, 2, 2.0);
        a.push(1, 1, -1.0);
        let mut y = [0.0; 3];
        a.mul_vec_transpose(&[3.0, 4.0], &mut y);
        assert_eq!(y, [3.0, -4.0, 6.0]);
    }
}
