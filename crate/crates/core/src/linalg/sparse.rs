use crate::error::{Error, Result};

use super::DenseSquare;

/// Compressed sparse row p-by-p matrix.
///
/// The estimator's iterates are stored here: asymmetric, with every
/// diagonal entry explicitly present and strictly positive. Column
/// indices are strictly increasing within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSquare {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSquare {
    pub fn identity(dim: usize) -> Self {
        SparseSquare {
            dim,
            row_ptr: (0..=dim).collect(),
            cols: (0..dim).collect(),
            vals: vec![1.0; dim],
        }
    }

    /// Builds from (row, col, value) triplets. Entries are sorted;
    /// duplicates are rejected. Exact zeros off the diagonal are dropped.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= dim || j >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: i.max(j) + 1,
                    context: "triplet index out of range",
                });
            }
            if v == 0.0 && i != j {
                continue;
            }
            entries.push((i, j, v));
        }
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(Error::InvalidParameter(format!(
                    "duplicate sparse entry at ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals = Vec::with_capacity(entries.len());
        for &(i, j, v) in &entries {
            row_ptr[i + 1] += 1;
            cols.push(j);
            vals.push(v);
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseSquare {
            dim,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Number of stored nonzero off-diagonal entries (asymmetric count).
    pub fn offdiag_nnz(&self) -> usize {
        let mut count = 0;
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j != i && v != 0.0 {
                    count += 1;
                }
            }
        }
        count
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Iterator over (row, col, value) of stored entries.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// The diagonal as a dense vector (missing entries read as 0).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Verifies every diagonal entry is stored and strictly positive.
    pub fn require_positive_diagonal(&self) -> Result<()> {
        for i in 0..self.dim {
            let d = self.get(i, i);
            if d <= 0.0 {
                return Err(Error::NonPositiveDiagonal { index: i, value: d });
            }
        }
        Ok(())
    }

    pub fn to_dense(&self) -> DenseSquare {
        let mut out = DenseSquare::zeros(self.dim);
        for (i, j, v) in self.iter() {
            out.set(i, j, v);
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Frobenius norm of the difference, walking both supports.
    pub fn frobenius_distance(&self, other: &SparseSquare) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            let (ac, av) = self.row(i);
            let (bc, bv) = other.row(i);
            let (mut a, mut b) = (0, 0);
            while a < ac.len() || b < bc.len() {
                let d = match (ac.get(a), bc.get(b)) {
                    (Some(&ja), Some(&jb)) if ja == jb => {
                        let d = av[a] - bv[b];
                        a += 1;
                        b += 1;
                        d
                    }
                    (Some(&ja), Some(&jb)) if ja < jb => {
                        let d = av[a];
                        a += 1;
                        d
                    }
                    (Some(_), Some(_)) | (None, Some(_)) => {
                        let d = -bv[b];
                        b += 1;
                        d
                    }
                    (Some(_), None) => {
                        let d = av[a];
                        a += 1;
                        d
                    }
                    (None, None) => unreachable!(),
                };
                acc += d * d;
            }
        }
        acc.sqrt()
    }

    /// True when both matrices store exactly the same index pattern.
    pub fn same_support(&self, other: &SparseSquare) -> bool {
        self.dim == other.dim && self.row_ptr == other.row_ptr && self.cols == other.cols
    }
}

/// Incremental row-by-row CSR assembly.
pub struct SparseBuilder {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    current_row: usize,
    last_col: Option<usize>,
}

impl SparseBuilder {
    pub fn new(dim: usize) -> Self {
        SparseBuilder {
            dim,
            row_ptr: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
            current_row: 0,
            last_col: None,
        }
    }

    pub fn with_capacity(dim: usize, nnz: usize) -> Self {
        let mut b = Self::new(dim);
        b.cols.reserve(nnz);
        b.vals.reserve(nnz);
        b
    }

    /// Appends an entry to the current row. Columns must arrive in
    /// strictly increasing order.
    pub fn push(&mut self, col: usize, val: f64) {
        debug_assert!(col < self.dim);
        debug_assert!(self.last_col.map_or(true, |c| col > c), "columns not sorted");
        self.cols.push(col);
        self.vals.push(val);
        self.last_col = Some(col);
    }

    pub fn finish_row(&mut self) {
        self.current_row += 1;
        self.row_ptr.push(self.cols.len());
        self.last_col = None;
    }

    pub fn build(self) -> SparseSquare {
        assert_eq!(self.current_row, self.dim, "not all rows finished");
        SparseSquare {
            dim: self.dim,
            row_ptr: self.row_ptr,
            cols: self.cols,
            vals: self.vals,
        }
    }
}

/// Sparse-dense product: omega (p-by-p) times a row-major operand with
/// p rows and `op_cols` columns. Cost O(nnz(omega) * op_cols).
pub fn spdm(omega: &SparseSquare, operand: &[f64], op_cols: usize) -> Result<Vec<f64>> {
    let p = omega.dim();
    if operand.len() != p * op_cols {
        return Err(Error::DimensionMismatch {
            expected: p * op_cols,
            got: operand.len(),
            context: "spdm operand",
        });
    }
    let mut out = vec![0.0; p * op_cols];
    spdm_rows_into(omega, 0..p, operand, op_cols, &mut out);
    Ok(out)
}

/// Product restricted to a row range of omega, written into `out`
/// (len = range length * op_cols, zeroed here). Each output row is
/// accumulated in CSR order, so results are identical however rows are
/// scheduled.
pub(crate) fn spdm_rows_into(
    omega: &SparseSquare,
    rows: std::ops::Range<usize>,
    operand: &[f64],
    op_cols: usize,
    out: &mut [f64],
) {
    out.iter_mut().for_each(|v| *v = 0.0);
    let base = rows.start;
    for i in rows {
        let (cols, vals) = omega.row(i);
        let out_row = &mut out[(i - base) * op_cols..(i - base + 1) * op_cols];
        for (&k, &v) in cols.iter().zip(vals) {
            let op_row = &operand[k * op_cols..(k + 1) * op_cols];
            for (o, &m) in out_row.iter_mut().zip(op_row) {
                *o += v * m;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_times_operand_is_identity_map() {
        let eye = SparseSquare::identity(3);
        let m = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let out = spdm(&eye, &m, 2).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn single_entry_product_by_hand() {
        let omega = SparseSquare::from_triplets(2, &[(0, 1, 2.0)]).unwrap();
        let m = vec![1.0, 3.0];
        let out = spdm(&omega, &m, 1).unwrap();
        assert_eq!(out, vec![6.0, 0.0]);
    }

    #[test]
    fn spdm_against_densified_product() {
        let mut triplets = Vec::new();
        let dim = 30;
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for i in 0..dim {
            triplets.push((i, i, 1.0 + next()));
            for j in 0..dim {
                if i != j && next() < 0.1 {
                    triplets.push((i, j, next() * 2.0 - 1.0));
                }
            }
        }
        let omega = SparseSquare::from_triplets(dim, &triplets).unwrap();
        let operand: Vec<f64> = (0..dim * 4).map(|_| next() * 2.0 - 1.0).collect();
        let out = spdm(&omega, &operand, 4).unwrap();

        let dense = omega.to_dense();
        for i in 0..dim {
            for c in 0..4 {
                let mut acc = 0.0;
                for k in 0..dim {
                    acc += dense.get(i, k) * operand[k * 4 + c];
                }
                let got = out[i * 4 + c];
                let denom = acc.abs().max(1.0);
                assert!(
                    (got - acc).abs() / denom < 1e-12,
                    "({i},{c}): {got} vs {acc}"
                );
            }
        }
    }

    #[test]
    fn spdm_identity_operand_reproduces_matrix() {
        let omega =
            SparseSquare::from_triplets(3, &[(0, 0, 2.0), (1, 1, 1.0), (2, 0, -3.0), (2, 2, 4.0)])
                .unwrap();
        let eye = SparseSquare::identity(3).to_dense();
        let out = spdm(&omega, eye.values(), 3).unwrap();
        assert_eq!(out, omega.to_dense().values());
    }

    #[test]
    fn spdm_rejects_dimension_mismatch() {
        let omega = SparseSquare::identity(3);
        assert!(spdm(&omega, &[1.0, 2.0], 1).is_err());
    }

    #[test]
    fn duplicate_triplets_rejected() {
        let r = SparseSquare::from_triplets(2, &[(0, 1, 1.0), (0, 1, 2.0)]);
        assert!(r.is_err());
    }

    #[test]
    fn frobenius_distance_walks_disjoint_supports() {
        let a = SparseSquare::from_triplets(2, &[(0, 0, 3.0)]).unwrap();
        let b = SparseSquare::from_triplets(2, &[(1, 1, 4.0)]).unwrap();
        assert_eq!(a.frobenius_distance(&b), 5.0);
    }

    #[test]
    fn builder_assembles_rows() {
        let mut b = SparseBuilder::new(2);
        b.push(0, 1.5);
        b.finish_row();
        b.push(0, -2.0);
        b.push(1, 0.5);
        b.finish_row();
        let m = b.build();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(1, 0), -2.0);
        assert_eq!(m.offdiag_nnz(), 1);
    }
}
