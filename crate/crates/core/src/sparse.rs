//! Compressed sparse row matrices built from triplets.
//!
//! Triplets are bucketed by row in input order and duplicates are summed in
//! the order they were produced.
//! The result is bit-identical for a given triplet sequence.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::{Error, Result};

/// `(row, col, value)` with 0-based indices.
pub type Triplet = (u32, u32, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrix {
    /// Compresses an `n x n` triplet list, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[Triplet], symmetric: bool) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(r, _, _) in triplets {
            counts[r as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0u32; triplets.len()];
        let mut vals = vec![0.0f64; triplets.len()];
        for &(r, c, v) in triplets {
            let slot = &mut next[r as usize];
            cols[*slot] = c;
            vals[*slot] = v;
            *slot += 1;
        }

        // Sum duplicates in input order through a column marker, then sort
        // the (much shorter) list of distinct columns.
        let mut marker = vec![usize::MAX; n];
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx: Vec<u32> = Vec::with_capacity(triplets.len() / 2);
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len() / 2);
        let mut row: Vec<(u32, f64)> = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            row.clear();
            for t in counts[i]..counts[i + 1] {
                let c = cols[t];
                let m = &mut marker[c as usize];
                if *m == usize::MAX {
                    *m = row.len();
                    row.push((c, vals[t]));
                } else {
                    row[*m].1 += vals[t];
                }
            }
            row.sort_unstable_by_key(|&(c, _)| c);
            for &(c, v) in &row {
                marker[c as usize] = usize::MAX;
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self { n, row_ptr, col_idx, values, symmetric }
    }

    /// Wraps CSR arrays whose rows are already sorted and duplicate-free.
    pub(crate) fn from_csr(n: usize, row_ptr: Vec<usize>, col_idx: Vec<u32>, values: Vec<f64>, symmetric: bool) -> Self {
        debug_assert_eq!(row_ptr.len(), n + 1);
        debug_assert_eq!(col_idx.len(), values.len());
        Self { n, row_ptr, col_idx, values, symmetric }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[u32] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(col, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().zip(&self.values[range]).map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&(j as u32)) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| x[i] * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>()).sum()
    }

    /// `alpha A + beta B`.
    pub fn linear_combination(alpha: f64, a: &SparseMatrix, beta: f64, b: &SparseMatrix) -> Result<Self> {
        if a.n != b.n {
            return Err(Error::DimensionMismatch { expected: a.n, found: b.n });
        }
        let mut row_ptr = Vec::with_capacity(a.n + 1);
        let mut col_idx = Vec::with_capacity(a.nnz().max(b.nnz()));
        let mut values = Vec::with_capacity(a.nnz().max(b.nnz()));
        row_ptr.push(0);
        for i in 0..a.n {
            let mut ra = a.row(i).peekable();
            let mut rb = b.row(i).peekable();
            loop {
                let (c, v) = match (ra.peek(), rb.peek()) {
                    (Some(&(ca, va)), Some(&(cb, vb))) if ca == cb => {
                        ra.next();
                        rb.next();
                        (ca, alpha * va + beta * vb)
                    }
                    (Some(&(ca, va)), Some(&(cb, _))) if ca < cb => {
                        ra.next();
                        (ca, alpha * va)
                    }
                    (_, Some(&(cb, vb))) => {
                        rb.next();
                        (cb, beta * vb)
                    }
                    (Some(&(ca, va)), None) => {
                        ra.next();
                        (ca, alpha * va)
                    }
                    (None, None) => break,
                };
                col_idx.push(c as u32);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self { n: a.n, row_ptr, col_idx, values, symmetric: a.symmetric && b.symmetric })
    }

    /// `max |A_ij - A_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        self.triplets().map(|(i, j, v)| (v - self.get(j, i)).abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v;
        }
        d
    }

    /// MatrixMarket coordinate format. Symmetric matrices store the lower
    /// triangle only.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> Result<()> {
        let kind = if self.symmetric { "symmetric" } else { "general" };
        writeln!(w, "%%MatrixMarket matrix coordinate real {kind}")?;
        let entries: Vec<_> = self.triplets().filter(|&(i, j, _)| !self.symmetric || j <= i).collect();
        writeln!(w, "{} {} {}", self.n, self.n, entries.len())?;
        for (i, j, v) in entries {
            writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
        }
        Ok(())
    }

    /// Reads square real coordinate matrices (general or symmetric).
    pub fn read_matrix_market<R: BufRead>(r: R) -> Result<Self> {
        let bad = |msg: &str| Error::MatrixMarket(msg.to_string());
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| bad("empty input"))??;
        let tokens: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
        if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" || tokens[2] != "coordinate" || tokens[3] != "real" {
            return Err(bad("expected a real coordinate matrix header"));
        }
        let symmetric = match tokens[4].as_str() {
            "symmetric" => true,
            "general" => false,
            other => return Err(Error::MatrixMarket(format!("unsupported symmetry '{other}'"))),
        };
        let mut size = None;
        let mut triplets = Vec::new();
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('%') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match size {
                None => {
                    let nums: Vec<usize> = fields.iter().map(|f| f.parse()).collect::<std::result::Result<_, _>>().map_err(|_| bad("malformed size line"))?;
                    if nums.len() != 3 || nums[0] != nums[1] {
                        return Err(bad("expected a square size line 'n n nnz'"));
                    }
                    size = Some(nums[0]);
                    triplets.reserve(nums[2]);
                }
                Some(n) => {
                    if fields.len() != 3 {
                        return Err(bad("malformed entry"));
                    }
                    let i: usize = fields[0].parse().map_err(|_| bad("malformed row index"))?;
                    let j: usize = fields[1].parse().map_err(|_| bad("malformed column index"))?;
                    let v: f64 = fields[2].parse().map_err(|_| bad("malformed value"))?;
                    if i == 0 || j == 0 || i > n || j > n {
                        return Err(bad("index out of range"));
                    }
                    triplets.push(((i - 1) as u32, (j - 1) as u32, v));
                    if symmetric && i != j {
                        triplets.push(((j - 1) as u32, (i - 1) as u32, v));
                    }
                }
            }
        }
        let n = size.ok_or_else(|| bad("missing size line"))?;
        Ok(Self::from_triplets(n, &triplets, symmetric))
    }
}
