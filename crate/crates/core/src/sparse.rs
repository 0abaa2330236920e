//! Real symmetric operators in compressed-row storage.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Anything that can apply a real symmetric matrix to a vector.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// `y = A x`. Callers guarantee both slices have length [`dim`](Self::dim).
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// CSR matrix with sorted column indices and no stored zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseOperator {
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Stored entries of row `r` as `(column, value)` pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[s..e].iter().map(|&c| c as usize).zip(self.vals[s..e].iter().copied())
    }

    /// Entry `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
        match self.cols[s..e].binary_search(&(c as u32)) {
            Ok(k) => self.vals[s + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|r| self.get(r, r)).collect()
    }

    /// All stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// Largest `|A_rc - A_cr|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        self.triplets().map(|(r, c, v)| libm::fabs(v - self.get(c, r))).fold(0.0, f64::max)
    }

    /// `y = A x` with length checks.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::LengthMismatch { expected: self.dim, found: x.len() });
        }
        if y.len() != self.dim {
            return Err(Error::LengthMismatch { expected: self.dim, found: y.len() });
        }
        self.apply(x, y);
        Ok(())
    }

    /// Dense copy, refused above `cap` rows.
    pub fn to_dense(&self, cap: usize) -> Result<DMatrix<f64>> {
        if self.dim > cap {
            return Err(Error::DimensionTooLarge {
                dim: self.dim,
                cap,
                hint: "dense conversion is meant for small oracle problems",
            });
        }
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        Ok(m)
    }
}

impl LinearOperator for SparseOperator {
    #[inline]
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for (r, out) in y.iter_mut().enumerate() {
            let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let mut acc = 0.0;
            for (&c, &v) in self.cols[s..e].iter().zip(&self.vals[s..e]) {
                acc += v * x[c as usize];
            }
            *out = acc;
        }
    }
}

/// Streaming row-by-row assembly.
#[derive(Debug)]
pub struct CsrBuilder {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    scratch: Vec<(u32, f64)>,
}

impl CsrBuilder {
    pub fn new(dim: usize, nnz_hint: usize) -> Result<Self> {
        if dim > u32::MAX as usize {
            return Err(Error::DimensionTooLarge { dim, cap: u32::MAX as usize, hint: "column indices are 32-bit" });
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        Ok(Self {
            dim,
            row_ptr,
            cols: Vec::with_capacity(nnz_hint),
            vals: Vec::with_capacity(nnz_hint),
            scratch: Vec::new(),
        })
    }

    /// Adds `value` at column `col` of the current row; duplicates are summed.
    #[inline]
    pub fn push(&mut self, col: usize, value: f64) {
        self.scratch.push((col as u32, value));
    }

    /// Closes the current row.
    pub fn finish_row(&mut self) {
        self.scratch.sort_unstable_by_key(|&(c, _)| c);
        let mut k = 0;
        while k < self.scratch.len() {
            let col = self.scratch[k].0;
            let mut v = 0.0;
            while k < self.scratch.len() && self.scratch[k].0 == col {
                v += self.scratch[k].1;
                k += 1;
            }
            if v != 0.0 {
                self.cols.push(col);
                self.vals.push(v);
            }
        }
        self.scratch.clear();
        self.row_ptr.push(self.vals.len());
    }

    pub fn build(self) -> Result<SparseOperator> {
        if self.row_ptr.len() != self.dim + 1 {
            return Err(Error::LengthMismatch { expected: self.dim, found: self.row_ptr.len() - 1 });
        }
        Ok(SparseOperator { dim: self.dim, row_ptr: self.row_ptr, cols: self.cols, vals: self.vals })
    }
}

/// Diagonal operator, mostly for tests and the dense/Krylov cross-checks.
pub fn diagonal_operator(diag: &[f64]) -> SparseOperator {
    let mut b = CsrBuilder::new(diag.len(), diag.len()).expect("small dimension");
    for (i, &d) in diag.iter().enumerate() {
        b.push(i, d);
        b.finish_row();
    }
    b.build().expect("all rows closed")
}

/// Symmetric operator from `(row, col, value)` entries; each off-diagonal pair is given once.
pub fn symmetric_from_entries(dim: usize, entries: &[(usize, usize, f64)]) -> Result<SparseOperator> {
    let mut rows: Vec<Vec<(usize, f64)>> = alloc::vec![Vec::new(); dim];
    for &(r, c, v) in entries {
        if r >= dim || c >= dim {
            return Err(Error::OutOfRange { what: "entry", index: r.max(c), bound: dim });
        }
        rows[r].push((c, v));
        if r != c {
            rows[c].push((r, v));
        }
    }
    let mut b = CsrBuilder::new(dim, entries.len() * 2)?;
    for row in rows {
        for (c, v) in row {
            b.push(c, v);
        }
        b.finish_row();
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SparseOperator {
        symmetric_from_entries(4, &[(0, 0, 2.0), (0, 1, -1.0), (1, 1, 2.0), (1, 2, -1.0), (2, 3, 0.5), (3, 3, 1.0)])
            .unwrap()
    }

    #[test]
    fn rows_sorted_no_zeros() {
        let m = symmetric_from_entries(3, &[(0, 2, 1.0), (0, 0, 0.0), (0, 1, 2.0), (0, 1, -2.0)]).unwrap();
        assert_eq!(m.nnz(), 2);
        let row0: Vec<_> = m.row(0).collect();
        assert_eq!(row0, vec![(2, 1.0)]);
        assert_eq!(m.asymmetry(), 0.0);
    }

    #[test]
    fn matvec_of_zero_is_zero() {
        let m = sample();
        let mut y = vec![1.0; 4];
        m.matvec(&[0.0; 4], &mut y).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_vector_extracts_column() {
        let m = sample();
        for i in 0..4 {
            let mut e = vec![0.0; 4];
            e[i] = 1.0;
            let mut y = vec![0.0; 4];
            m.matvec(&e, &mut y).unwrap();
            for r in 0..4 {
                assert_eq!(y[r], m.get(r, i));
            }
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let m = sample();
        let mut y = vec![0.0; 4];
        assert_eq!(m.matvec(&[1.0; 3], &mut y), Err(Error::LengthMismatch { expected: 4, found: 3 }));
    }

    #[test]
    fn dense_cap_is_enforced() {
        assert!(sample().to_dense(3).is_err());
        assert_eq!(sample().to_dense(4).unwrap()[(2, 3)], 0.5);
    }
}
