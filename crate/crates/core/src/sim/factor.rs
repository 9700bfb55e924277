use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::linalg::{center_columns, DenseData, SparseSquare};

/// Sparse unit lower triangular factor L. The covariance it implies,
/// (L L')^-1, is never materialized; samples come from back substitution.
/// Stored by column (strictly-lower part only) because the transpose
/// solve consumes columns.
#[derive(Debug, Clone)]
pub struct TriangularFactor {
    dim: usize,
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<f64>,
}

impl TriangularFactor {
    pub fn identity(dim: usize) -> Self {
        TriangularFactor {
            dim,
            col_ptr: vec![0; dim + 1],
            rows: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// From strictly-lower (row, col, value) triplets with row > col.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, k, v) in triplets {
            if i <= k || i >= dim {
                return Err(Error::InvalidParameter(format!(
                    "({i}, {k}) is not a strictly-lower position inside 0..{dim}"
                )));
            }
            entries.push((k, i, v)); // keyed by column for CSC assembly
        }
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(Error::InvalidParameter(format!(
                    "duplicate factor entry at ({}, {})",
                    w[0].1, w[0].0
                )));
            }
        }
        let mut col_ptr = vec![0usize; dim + 1];
        let mut rows = Vec::with_capacity(entries.len());
        let mut vals = Vec::with_capacity(entries.len());
        for &(k, i, v) in &entries {
            col_ptr[k + 1] += 1;
            rows.push(i);
            vals.push(v);
        }
        for k in 0..dim {
            col_ptr[k + 1] += col_ptr[k];
        }
        Ok(TriangularFactor {
            dim,
            col_ptr,
            rows,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Strictly-lower stored entries (the unit diagonal is implicit).
    pub fn nnz_lower(&self) -> usize {
        self.vals.len()
    }

    pub fn column(&self, k: usize) -> (&[usize], &[f64]) {
        let lo = self.col_ptr[k];
        let hi = self.col_ptr[k + 1];
        (&self.rows[lo..hi], &self.vals[lo..hi])
    }

    /// L as a general sparse matrix including the unit diagonal.
    pub fn to_sparse(&self) -> SparseSquare {
        let mut triplets: Vec<(usize, usize, f64)> =
            (0..self.dim).map(|i| (i, i, 1.0)).collect();
        for k in 0..self.dim {
            let (rows, vals) = self.column(k);
            for (&i, &v) in rows.iter().zip(vals) {
                triplets.push((i, k, v));
            }
        }
        SparseSquare::from_triplets(self.dim, &triplets).expect("valid by construction")
    }

    /// Structural support of L L' as unordered pairs: i and j are
    /// adjacent iff rows i and j of L share a nonzero column (the unit
    /// diagonal included).
    pub fn implied_edges(&self) -> Vec<(usize, usize)> {
        let mut edges: HashSet<(usize, usize)> = HashSet::new();
        for k in 0..self.dim {
            let (rows, _) = self.column(k);
            // the diagonal element (k, k) participates in column k
            for (a, &i) in rows.iter().enumerate() {
                edges.insert((k.min(i), k.max(i)));
                for &j in &rows[a + 1..] {
                    edges.insert((i.min(j), i.max(j)));
                }
            }
        }
        let mut out: Vec<(usize, usize)> = edges.into_iter().collect();
        out.sort_unstable();
        out
    }

    /// Average degree of the implied graph, 2 |edges| / p.
    pub fn average_degree(&self) -> f64 {
        2.0 * self.implied_edges().len() as f64 / self.dim as f64
    }

    /// The implied precision matrix L L' assembled sparsely: entry
    /// (i, j) accumulates L_ik L_jk over the columns both rows touch
    /// (unit diagonal included).
    pub fn implied_precision(&self) -> SparseSquare {
        use std::collections::BTreeMap;
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for k in 0..self.dim {
            let (rows, vals) = self.column(k);
            // stack the implicit diagonal element on top of the column
            let mut full: Vec<(usize, f64)> = Vec::with_capacity(rows.len() + 1);
            full.push((k, 1.0));
            full.extend(rows.iter().copied().zip(vals.iter().copied()));
            for (a, &(i, vi)) in full.iter().enumerate() {
                for &(j, vj) in &full[a..] {
                    *acc.entry((i.min(j), i.max(j))).or_insert(0.0) += vi * vj;
                }
            }
        }
        let mut triplets = Vec::with_capacity(2 * acc.len());
        for (&(i, j), &v) in &acc {
            triplets.push((i, j, v));
            if i != j {
                triplets.push((j, i, v));
            }
        }
        SparseSquare::from_triplets(self.dim, &triplets).expect("valid by construction")
    }
}

/// Generates a sparse unit lower triangular factor whose implied
/// precision support has the requested average degree.
///
/// Strictly-lower positions are drawn uniformly; the entry count is
/// chosen by bisection against the measured average degree of the
/// implied graph (fill-in included), which is monotone in the entry
/// count along a fixed position stream. Values are uniform on
/// [-1, -0.05] and [0.05, 1] (near-zero weights excluded).
pub fn gen_cholesky_factor(p: usize, avg_degree: f64, seed: u64) -> Result<TriangularFactor> {
    if p < 2 {
        return Err(Error::InvalidParameter("factor needs at least 2 nodes".into()));
    }
    if !(avg_degree >= 0.0) || avg_degree >= p as f64 - 1.0 {
        return Err(Error::InvalidParameter(format!(
            "average degree must lie in [0, p-1), got {avg_degree}"
        )));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut pos_rng = ChaCha8Rng::seed_from_u64(master.random());
    let mut val_rng = ChaCha8Rng::seed_from_u64(master.random());

    let total = p * (p - 1) / 2;
    // entry-count guess from avg = 2c + c^2 with c entries per row,
    // then bracket generously for the bisection
    let c = (1.0 + avg_degree).sqrt() - 1.0;
    let hi_bound = (((4.0 * c * p as f64) as usize) + 2 * p).min(total);

    // one nested stream of distinct positions; degree(m) is monotone in m
    let mut positions: Vec<(usize, usize)> = Vec::with_capacity(hi_bound);
    let mut seen = HashSet::with_capacity(hi_bound * 2);
    if hi_bound * 2 > total {
        let mut all: Vec<(usize, usize)> = (0..p)
            .flat_map(|col| ((col + 1)..p).map(move |row| (row, col)))
            .collect();
        for k in 0..hi_bound {
            let pick = pos_rng.random_range(k..all.len());
            all.swap(k, pick);
        }
        positions.extend(all.into_iter().take(hi_bound));
    } else {
        while positions.len() < hi_bound {
            let row = pos_rng.random_range(1..p);
            let col = pos_rng.random_range(0..row);
            if seen.insert((row, col)) {
                positions.push((row, col));
            }
        }
    }

    let degree_of = |m: usize| -> f64 {
        let triplets: Vec<(usize, usize, f64)> = positions[..m]
            .iter()
            .map(|&(r, c)| (r, c, 1.0))
            .collect();
        TriangularFactor::from_triplets(p, &triplets)
            .expect("positions are valid")
            .average_degree()
    };

    let (mut lo, mut hi) = (0usize, hi_bound);
    if degree_of(hi) < avg_degree {
        // bracket too small for an unusually dense request; fall back to
        // everything we drew
        lo = hi;
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if degree_of(mid) < avg_degree {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let m = if (degree_of(lo) - avg_degree).abs() <= (degree_of(hi) - avg_degree).abs() {
        lo
    } else {
        hi
    };

    let mut chosen: Vec<(usize, usize)> = positions[..m].to_vec();
    chosen.sort_unstable_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
    let triplets: Vec<(usize, usize, f64)> = chosen
        .into_iter()
        .map(|(r, c)| {
            let magnitude = 0.05 + 0.95 * val_rng.random::<f64>();
            let sign = if val_rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
            (r, c, sign * magnitude)
        })
        .collect();
    TriangularFactor::from_triplets(p, &triplets)
}

/// Draws n samples of y solving L'y = x with x standard normal, so y is
/// zero-mean Gaussian with covariance (L L')^-1; O(nnz(L)) per sample.
/// Columns are centered before returning.
pub fn sample_from_factor(factor: &TriangularFactor, n: usize, seed: u64) -> Result<DenseData> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let p = factor.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::StandardNormal;
    let mut buf = vec![0.0f64; n * p];
    let mut x = vec![0.0f64; p];
    for s in 0..n {
        for xi in x.iter_mut() {
            *xi = normal.sample(&mut rng);
        }
        // back substitution: y_i = x_i - sum_{j > i} L_ji y_j
        for i in (0..p).rev() {
            let (rows, vals) = factor.column(i);
            let mut acc = x[i];
            for (&j, &v) in rows.iter().zip(vals) {
                acc -= v * x[j];
            }
            x[i] = acc;
        }
        buf[s * p..(s + 1) * p].copy_from_slice(&x);
    }
    center_columns(buf, n, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_factor_passes_noise_through() {
        let f = TriangularFactor::identity(3);
        assert_eq!(f.nnz_lower(), 0);
        assert_eq!(f.average_degree(), 0.0);
        let data = sample_from_factor(&f, 100, 1).unwrap();
        assert_eq!((data.n(), data.p()), (100, 3));
    }

    #[test]
    fn implied_edges_include_fill_in() {
        // L has entries (1,0) and (2,0): rows 1 and 2 share column 0,
        // so (1,2) is a fill-in edge of L L'
        let f =
            TriangularFactor::from_triplets(3, &[(1, 0, 0.5), (2, 0, -0.5)]).unwrap();
        assert_eq!(f.implied_edges(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn factor_generation_hits_target_degree() {
        let f = gen_cholesky_factor(100, 10.3, 42).unwrap();
        let deg = f.average_degree();
        assert!(
            (deg - 10.3).abs() <= 1.5,
            "average degree {deg} misses 10.3 by more than 1.5"
        );
        for (_, vals) in (0..100).map(|k| f.column(k)) {
            for &v in vals {
                assert!((0.05..=1.0).contains(&v.abs()), "weight {v}");
            }
        }
    }

    #[test]
    fn factor_generation_deterministic() {
        let a = gen_cholesky_factor(60, 6.0, 9).unwrap();
        let b = gen_cholesky_factor(60, 6.0, 9).unwrap();
        assert_eq!(a.to_sparse(), b.to_sparse());
    }

    #[test]
    fn sampling_deterministic_and_centered() {
        let f = gen_cholesky_factor(15, 4.0, 3).unwrap();
        let a = sample_from_factor(&f, 50, 77).unwrap();
        let b = sample_from_factor(&f, 50, 77).unwrap();
        assert_eq!(a.values(), b.values());
        for j in 0..15 {
            let sum: f64 = (0..50).map(|i| a.values()[i * 15 + j]).sum();
            assert!(sum.abs() < 1e-9 * 50.0, "column {j} sum {sum}");
        }
    }

    #[test]
    fn implied_precision_matches_dense_product() {
        let f = gen_cholesky_factor(12, 4.0, 8).unwrap();
        let theta = f.implied_precision();
        let l = f.to_sparse().to_dense();
        for i in 0..12 {
            for j in 0..12 {
                let mut acc = 0.0;
                for k in 0..12 {
                    acc += l.get(i, k) * l.get(j, k);
                }
                assert!(
                    (theta.get(i, j) - acc).abs() < 1e-12,
                    "({i},{j}): {} vs {acc}",
                    theta.get(i, j)
                );
            }
        }
    }

    #[test]
    fn rejects_upper_positions() {
        assert!(TriangularFactor::from_triplets(3, &[(0, 1, 0.5)]).is_err());
        assert!(TriangularFactor::from_triplets(3, &[(1, 1, 0.5)]).is_err());
    }
}
