//! CSR storage, block composition and the direct solver.
//!
//! The LU factorization itself is faer's sparse LU (column approximate
//! minimum degree ordering, partial pivoting). Everything that touches the
//! discretization goes through [`SparseMatrix`].

use faer::prelude::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Col;

use crate::error::{Error, Result};

/// Relative residual every solve must reach.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Compressed sparse row matrix. Columns are sorted and unique within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from `(row, col, value)` entries; duplicates are summed in input order.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|(r, c, _)| *r >= nrows || *c >= ncols) {
            return Err(Error::Shape(format!(
                "entry ({r}, {c}) outside a {nrows}x{ncols} matrix"
            )));
        }
        // Counting sort by row keeps input order within a row (stable).
        let mut row_ptr = vec![0usize; nrows + 1];
        for &(r, _, _) in triplets {
            row_ptr[r + 1] += 1;
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut next = row_ptr.clone();
        let mut by_row = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            by_row[next[r]] = (c, v);
            next[r] += 1;
        }

        let mut out_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        out_ptr.push(0);
        for i in 0..nrows {
            let row = &mut by_row[row_ptr[i]..row_ptr[i + 1]];
            row.sort_by_key(|&(c, _)| c);
            let start = col_idx.len();
            for &(c, v) in row.iter() {
                if col_idx.len() > start && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            out_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix {
            nrows,
            ncols,
            row_ptr: out_ptr,
            col_idx,
            values,
        })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let triplets: Vec<_> = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(move |(j, &v)| (i, j, v))
            })
            .collect();
        Self::from_triplets(nrows, ncols, &triplets).expect("indices in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::Shape(format!(
                "spmv with a {}x{} matrix and a vector of length {}",
                self.nrows,
                self.ncols,
                x.len()
            )));
        }
        Ok((0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect())
    }

    /// `x^T A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != self.nrows {
            return Err(Error::Shape(format!(
                "left vector length {} for {} rows",
                x.len(),
                self.nrows
            )));
        }
        Ok(self.spmv(y)?.iter().zip(x).map(|(a, b)| a * b).sum())
    }

    pub fn transpose(&self) -> SparseMatrix {
        let t: Vec<_> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t).expect("indices in range")
    }

    pub fn scale(&self, alpha: f64) -> SparseMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `alpha * a + b` on the union pattern.
    pub fn add_scaled(a: &SparseMatrix, alpha: f64, b: &SparseMatrix) -> Result<SparseMatrix> {
        if a.nrows != b.nrows || a.ncols != b.ncols {
            return Err(Error::Shape(format!(
                "adding a {}x{} and a {}x{} matrix",
                a.nrows, a.ncols, b.nrows, b.ncols
            )));
        }
        let mut row_ptr = Vec::with_capacity(a.nrows + 1);
        let mut col_idx = Vec::with_capacity(a.nnz().max(b.nnz()));
        let mut values = Vec::with_capacity(a.nnz().max(b.nnz()));
        row_ptr.push(0);
        for i in 0..a.nrows {
            let mut ra = a.row(i).peekable();
            let mut rb = b.row(i).peekable();
            loop {
                match (ra.peek().copied(), rb.peek().copied()) {
                    (Some((ja, va)), Some((jb, vb))) if ja == jb => {
                        col_idx.push(ja);
                        values.push(alpha * va + vb);
                        ra.next();
                        rb.next();
                    }
                    (Some((ja, va)), Some((jb, _))) if ja < jb => {
                        col_idx.push(ja);
                        values.push(alpha * va);
                        ra.next();
                    }
                    (Some((ja, va)), None) => {
                        col_idx.push(ja);
                        values.push(alpha * va);
                        ra.next();
                    }
                    (_, Some((jb, vb))) => {
                        col_idx.push(jb);
                        values.push(vb);
                        rb.next();
                    }
                    (None, None) => break,
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix {
            nrows: a.nrows,
            ncols: a.ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Sum of `alpha_k * m_k`; all terms must share one shape.
    pub fn linear_combination(terms: &[(f64, &SparseMatrix)]) -> Result<SparseMatrix> {
        let (first, rest) = terms
            .split_first()
            .ok_or_else(|| Error::Shape("empty linear combination".into()))?;
        let mut acc = first.1.scale(first.0);
        for (alpha, m) in rest {
            acc = Self::add_scaled(m, *alpha, &acc)?;
        }
        Ok(acc)
    }

    /// Assembles `[[a, b], [c, d]]`; `None` blocks are zero.
    pub fn block_compose(blocks: [[Option<&SparseMatrix>; 2]; 2]) -> Result<SparseMatrix> {
        let dim = |k: usize, rows: bool| -> Result<usize> {
            let sizes: Vec<usize> = (0..2)
                .filter_map(|l| {
                    let b = if rows { blocks[k][l] } else { blocks[l][k] };
                    b.map(|m| if rows { m.nrows } else { m.ncols })
                })
                .collect();
            match sizes.as_slice() {
                [] => Err(Error::Shape(format!(
                    "block {} {k} is entirely empty",
                    if rows { "row" } else { "column" }
                ))),
                [s, rest @ ..] if rest.iter().all(|r| r == s) => Ok(*s),
                _ => Err(Error::Shape(format!(
                    "blocks in {} {k} disagree on size: {sizes:?}",
                    if rows { "row" } else { "column" }
                ))),
            }
        };
        let rows = [dim(0, true)?, dim(1, true)?];
        let cols = [dim(0, false)?, dim(1, false)?];
        let mut triplets = Vec::new();
        for (bi, block_row) in blocks.iter().enumerate() {
            for (bj, block) in block_row.iter().enumerate() {
                if let Some(m) = block {
                    let (r0, c0) = (bi * rows[0], bj * cols[0]);
                    triplets.extend(m.triplets().map(|(i, j, v)| (i + r0, j + c0, v)));
                }
            }
        }
        Self::from_triplets(rows[0] + rows[1], cols[0] + cols[1], &triplets)
    }

    /// Replaces row `i` by the identity row.
    pub fn set_identity_row(&mut self, i: usize) {
        let mut mask = vec![false; self.nrows];
        mask[i] = true;
        self.set_identity_rows(&mask);
    }

    /// Replaces every row flagged in `mask` by an identity row.
    pub fn set_identity_rows(&mut self, mask: &[bool]) {
        let mut triplets = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            if mask.get(i).copied().unwrap_or(false) {
                triplets.push((i, i, 1.0));
            } else {
                triplets.extend(self.row(i).map(|(j, v)| (i, j, v)));
            }
        }
        *self = Self::from_triplets(self.nrows, self.ncols, &triplets).expect("indices in range");
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let t: Vec<_> = self.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .map_err(|e| Error::Solver(format!("cannot convert matrix: {e:?}")))
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Reusable LU factorization of a square sparse matrix.
pub struct Factorization {
    matrix: SparseMatrix,
    lu: Lu<usize, f64>,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization")
            .field("n", &self.matrix.nrows)
            .field("nnz", &self.matrix.nnz())
            .finish()
    }
}

/// Result of one solve together with its achieved relative residual.
#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub residual: f64,
}

impl Factorization {
    pub fn new(matrix: &SparseMatrix) -> Result<Self> {
        if matrix.nrows != matrix.ncols {
            return Err(Error::Shape(format!(
                "cannot factorize a non-square {}x{} matrix",
                matrix.nrows, matrix.ncols
            )));
        }
        if let Some(i) = (0..matrix.nrows).find(|&i| matrix.row(i).all(|(_, v)| v == 0.0)) {
            return Err(Error::Solver(format!("row {i} is structurally zero")));
        }
        let lu = matrix
            .to_faer()?
            .sp_lu()
            .map_err(|e| Error::Solver(format!("LU factorization failed: {e:?}")))?;
        let f = Factorization {
            matrix: matrix.clone(),
            lu,
        };
        // A zero pivot shows up as non-finite output.
        let probe = vec![1.0; matrix.nrows];
        let x = f.raw_solve(&probe);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver("matrix is numerically singular".into()));
        }
        Ok(f)
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    fn raw_solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = Col::<f64>::from_fn(rhs.len(), |i| rhs[i]);
        let x = self.lu.solve(&b);
        (0..rhs.len()).map(|i| x[i]).collect()
    }

    fn relative_residual(&self, x: &[f64], rhs: &[f64]) -> Result<f64> {
        let ax = self.matrix.spmv(x)?;
        let r: Vec<f64> = ax.iter().zip(rhs).map(|(a, b)| a - b).collect();
        let bn = norm2(rhs);
        Ok(if bn == 0.0 { norm2(&r) } else { norm2(&r) / bn })
    }

    /// Solves `S x = rhs`, with up to two steps of iterative refinement, and
    /// fails when the relative residual stays above [`RESIDUAL_TOLERANCE`].
    pub fn solve(&self, rhs: &[f64]) -> Result<Solution> {
        if rhs.len() != self.matrix.nrows {
            return Err(Error::Shape(format!(
                "rhs of length {} for a system of size {}",
                rhs.len(),
                self.matrix.nrows
            )));
        }
        let mut x = self.raw_solve(rhs);
        let mut residual = self.relative_residual(&x, rhs)?;
        for _ in 0..2 {
            if residual <= RESIDUAL_TOLERANCE || !residual.is_finite() {
                break;
            }
            let ax = self.matrix.spmv(&x)?;
            let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let dx = self.raw_solve(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
            residual = self.relative_residual(&x, rhs)?;
        }
        if !(residual <= RESIDUAL_TOLERANCE) {
            return Err(Error::Solver(format!(
                "relative residual {residual:e} exceeds {RESIDUAL_TOLERANCE:e} (n = {}, nnz = {})",
                self.matrix.nrows,
                self.matrix.nnz()
            )));
        }
        Ok(Solution { x, residual })
    }
}
