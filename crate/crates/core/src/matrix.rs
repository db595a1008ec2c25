//! Row-indexed sparse matrices and the three combinators used to assemble
//! the measurement ensemble: row direct sum, element-wise product and
//! semi-direct product.

use std::io::Write;

use crate::error::{Error, Result};

/// A sparse matrix stored as one sorted entry list per row.
///
/// Within a row, columns are strictly increasing and no stored value is
/// zero. This makes "the j-th non-zero of a row" well defined, which the
/// semi-direct product relies on.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    /// An all-zero matrix.
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            rows: vec![Vec::new(); n_rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            rows: (0..n).map(|i| vec![(i, 1.0)]).collect(),
        }
    }

    /// Builds a matrix from per-row entry lists. Entries are sorted, zeros are
    /// dropped, and duplicate columns within a row are rejected.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut out = Vec::with_capacity(rows.len());
        for (r, mut row) in rows.into_iter().enumerate() {
            row.retain(|&(_, v)| v != 0.0);
            row.sort_by_key(|&(c, _)| c);
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::Dimension(format!(
                        "row {r} repeats column {}",
                        w[0].0
                    )));
                }
            }
            if let Some(&(c, _)) = row.last() {
                if c >= n_cols {
                    return Err(Error::OutOfRange {
                        index: c as u64,
                        limit: n_cols as u64,
                    });
                }
            }
            out.push(row);
        }
        Ok(Self {
            n_rows: out.len(),
            n_cols,
            rows: out,
        })
    }

    pub fn from_dense(dense: &[Vec<f64>], n_cols: usize) -> Result<Self> {
        let rows = dense
            .iter()
            .map(|row| {
                if row.len() != n_cols {
                    return Err(Error::Dimension(format!(
                        "dense row has {} entries, expected {n_cols}",
                        row.len()
                    )));
                }
                Ok(row
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(c, &v)| (c, v))
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(n_cols, rows)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, r: usize) -> &[(usize, f64)] {
        &self.rows[r]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[(usize, f64)]> {
        self.rows.iter().map(Vec::as_slice)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Entry lookup by binary search within the row.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let row = &self.rows[r];
        match row.binary_search_by_key(&c, |&(col, _)| col) {
            Ok(pos) => row[pos].1,
            Err(_) => 0.0,
        }
    }

    /// Dense image, row-major. Meant for test oracles on small matrices.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                out[r][c] = v;
            }
        }
        out
    }

    /// Vertical concatenation: the rows of `self` followed by the rows of `other`.
    pub fn row_direct_sum(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.n_cols != other.n_cols {
            return Err(Error::Dimension(format!(
                "row direct sum of {} and {} columns",
                self.n_cols, other.n_cols
            )));
        }
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(SparseMatrix {
            n_rows: self.n_rows + other.n_rows,
            n_cols: self.n_cols,
            rows,
        })
    }

    /// Entry-wise product of two matrices of identical shape.
    pub fn elementwise_product(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::Dimension(format!(
                "element-wise product of {}x{} and {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                // merge-intersect two sorted rows
                let mut out = Vec::new();
                let (mut p, mut q) = (0, 0);
                while p < a.len() && q < b.len() {
                    match a[p].0.cmp(&b[q].0) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            let v = a[p].1 * b[q].1;
                            if v != 0.0 {
                                out.push((a[p].0, v));
                            }
                            p += 1;
                            q += 1;
                        }
                    }
                }
                out
            })
            .collect();
        Ok(SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            rows,
        })
    }

    /// Semi-direct product `selector ⋉ pattern`.
    ///
    /// `selector` is `r2 x h`; `pattern` is `r1 x N` with at most `h`
    /// non-zeros per row. The result is `(r1 * r2) x N`: the `j`-th non-zero
    /// `a` of pattern row `k` at column `l` contributes `a * selector[i][j]`
    /// to result row `i + k * r2`, column `l`. Rows with fewer than `h`
    /// non-zeros simply leave the trailing selector columns unused.
    pub fn semi_direct_product(
        selector: &SparseMatrix,
        pattern: &SparseMatrix,
        h: usize,
    ) -> Result<SparseMatrix> {
        if selector.n_cols != h {
            return Err(Error::Dimension(format!(
                "selector has {} columns, expected h = {h}",
                selector.n_cols
            )));
        }
        let r2 = selector.n_rows;
        let dense_selector = selector.to_dense();
        let mut rows = Vec::with_capacity(pattern.n_rows * r2);
        for (k, prow) in pattern.rows.iter().enumerate() {
            if prow.len() > h {
                return Err(Error::RowTooFull {
                    row: k,
                    nnz: prow.len(),
                    h,
                });
            }
            for sel in &dense_selector {
                let row: Vec<(usize, f64)> = prow
                    .iter()
                    .enumerate()
                    .map(|(j, &(l, a))| (l, a * sel[j]))
                    .filter(|&(_, v)| v != 0.0)
                    .collect();
                rows.push(row);
            }
        }
        Ok(SparseMatrix {
            n_rows: pattern.n_rows * r2,
            n_cols: pattern.n_cols,
            rows,
        })
    }

    /// Exact sparse matrix-vector product.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.n_cols
            )));
        }
        Ok(self
            .rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * x[c]).sum())
            .collect())
    }

    /// Coordinate-triplet dump: a `rows,cols` dimension line followed by one
    /// `row,col,val` line per stored entry.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{},{}", self.n_rows, self.n_cols)?;
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                writeln!(out, "{r},{c},{v}")?;
            }
        }
        Ok(())
    }
}
