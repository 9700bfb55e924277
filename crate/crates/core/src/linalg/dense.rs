use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest dimension for which dense p-by-p objects are materialized.
/// Above this, callers must stay on the matrix-free path through the data.
pub const DENSE_CAP: usize = 4096;

/// Relative tolerance of the power iteration behind [`DenseData::spectral_bound`].
const POWER_TOL: f64 = 1e-6;
const POWER_MAX_ITER: usize = 1000;

/// A column-centered n-by-p sample matrix (one row per observation).
///
/// Caches the transpose (for fast column access in sparse products) and
/// the spectral bound L of the implied Gram matrix (1/n) X'X.
#[derive(Debug)]
pub struct DenseData {
    values: Vec<f64>, // row-major, n * p
    n: usize,
    p: usize,
    centered: bool,
    transpose: OnceLock<Vec<f64>>, // p * n row-major
    spectral: OnceLock<f64>,
    gram_cache: OnceLock<DenseSquare>,
}

/// A dense p-by-p real matrix, used for the sample covariance and for
/// gradients at moderate dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSquare {
    dim: usize,
    values: Vec<f64>, // row-major
}

/// Subtracts each column's mean, producing centered data.
///
/// Rejects non-finite input, reporting the coordinates of the first
/// offending entry in row-major scan order.
pub fn center_columns(mut values: Vec<f64>, n: usize, p: usize) -> Result<DenseData> {
    validate_shape(&values, n, p)?;
    let inv_n = 1.0 / n as f64;
    for j in 0..p {
        let mut mean = 0.0;
        for i in 0..n {
            mean += values[i * p + j];
        }
        mean *= inv_n;
        for i in 0..n {
            values[i * p + j] -= mean;
        }
    }
    Ok(DenseData {
        values,
        n,
        p,
        centered: true,
        transpose: OnceLock::new(),
        spectral: OnceLock::new(),
        gram_cache: OnceLock::new(),
    })
}

fn validate_shape(values: &[f64], n: usize, p: usize) -> Result<()> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidParameter(format!(
            "data matrix must be non-empty, got {n} x {p}"
        )));
    }
    if values.len() != n * p {
        return Err(Error::DimensionMismatch {
            expected: n * p,
            got: values.len(),
            context: "data matrix buffer",
        });
    }
    for (k, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                row: k / p,
                col: k % p,
                value: v,
            });
        }
    }
    Ok(())
}

impl DenseData {
    /// Wraps a buffer that is already column-centered (e.g. output of a
    /// sampler that centers before returning). Entries must be finite.
    pub fn from_centered(values: Vec<f64>, n: usize, p: usize) -> Result<Self> {
        validate_shape(&values, n, p)?;
        Ok(DenseData {
            values,
            n,
            p,
            centered: true,
            transpose: OnceLock::new(),
            spectral: OnceLock::new(),
            gram_cache: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    /// The p-by-n transpose, built once on first use. Row i of the
    /// result is column i of the data, contiguous in memory.
    pub fn transposed(&self) -> &[f64] {
        self.transpose.get_or_init(|| {
            let mut t = vec![0.0; self.n * self.p];
            for i in 0..self.n {
                let row = &self.values[i * self.p..(i + 1) * self.p];
                for (j, &v) in row.iter().enumerate() {
                    t[j * self.n + i] = v;
                }
            }
            t
        })
    }

    /// Column j of the data, contiguous (borrowed from the cached transpose).
    pub fn column(&self, j: usize) -> &[f64] {
        &self.transposed()[j * self.n..(j + 1) * self.n]
    }

    /// Sample covariance S = (1/n) X'X as a dense matrix.
    ///
    /// Computes the upper triangle and mirrors it, so the result is
    /// symmetric to exact bit equality. Fails when p exceeds `cap`.
    pub fn gram(&self, cap: usize) -> Result<DenseSquare> {
        self.require_centered()?;
        if self.p > cap {
            return Err(Error::DenseCapExceeded { dim: self.p, cap });
        }
        let p = self.p;
        let xt = self.transposed();
        let inv_n = 1.0 / self.n as f64;
        let mut s = vec![0.0; p * p];
        for i in 0..p {
            let ci = &xt[i * self.n..(i + 1) * self.n];
            for j in i..p {
                let cj = &xt[j * self.n..(j + 1) * self.n];
                let dot: f64 = ci.iter().zip(cj).map(|(a, b)| a * b).sum();
                let v = dot * inv_n;
                s[i * p + j] = v;
                s[j * p + i] = v;
            }
        }
        Ok(DenseSquare { dim: p, values: s })
    }

    /// Like [`DenseData::gram`], but computed at most once per data set
    /// and borrowed thereafter. Used by the solver and the path driver.
    pub fn gram_cached(&self, cap: usize) -> Result<&DenseSquare> {
        if self.p > cap {
            return Err(Error::DenseCapExceeded { dim: self.p, cap });
        }
        if self.gram_cache.get().is_none() {
            let s = self.gram(cap)?;
            let _ = self.gram_cache.set(s);
        }
        Ok(self.gram_cache.get().expect("gram cache populated above"))
    }

    /// Upper bound on the largest eigenvalue L of S = (1/n) X'X.
    ///
    /// Matrix-free power iteration v -> (1/n) X'(Xv) from the normalized
    /// all-ones vector, inflated by (1 + tol) so the returned value can
    /// safely be used as a Lipschitz constant (overestimating is safe,
    /// underestimating is not). Returns 0 for identically zero data;
    /// see [`DenseData::degenerate`].
    pub fn spectral_bound(&self, tol: f64) -> f64 {
        *self.spectral.get_or_init(|| self.compute_spectral_bound(tol))
    }

    /// True once the spectral bound has been computed and found to be 0.
    pub fn degenerate(&self) -> bool {
        matches!(self.spectral.get(), Some(&l) if l == 0.0)
    }

    fn compute_spectral_bound(&self, tol: f64) -> f64 {
        let p = self.p;
        let inv_n = 1.0 / self.n as f64;
        let mut v = vec![1.0 / (p as f64).sqrt(); p];
        let mut xv = vec![0.0; self.n];
        let mut u = vec![0.0; p];
        let mut prev = 0.0;
        let mut max_rayleigh: f64 = 0.0;
        for _ in 0..POWER_MAX_ITER {
            // xv = X v
            for i in 0..self.n {
                let row = self.row(i);
                xv[i] = row.iter().zip(&v).map(|(a, b)| a * b).sum();
            }
            // u = (1/n) X' xv = S v
            u.iter_mut().for_each(|x| *x = 0.0);
            for i in 0..self.n {
                let row = self.row(i);
                let w = xv[i] * inv_n;
                for (uj, &xj) in u.iter_mut().zip(row) {
                    *uj += w * xj;
                }
            }
            // v is unit, so the Rayleigh quotient is v'Sv = v'u
            let rayleigh: f64 = v.iter().zip(&u).map(|(a, b)| a * b).sum();
            max_rayleigh = max_rayleigh.max(rayleigh);
            let norm: f64 = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            if (rayleigh - prev).abs() <= tol * rayleigh.abs() {
                prev = rayleigh;
                break;
            }
            prev = rayleigh;
            for (vj, &uj) in v.iter_mut().zip(&u) {
                *vj = uj / norm;
            }
        }
        max_rayleigh.max(prev) * (1.0 + tol)
    }

    /// Spectral bound at the default tolerance.
    pub fn spectral_bound_default(&self) -> f64 {
        self.spectral_bound(POWER_TOL)
    }

    fn require_centered(&self) -> Result<()> {
        if !self.centered {
            return Err(Error::InvalidParameter(
                "data must be column-centered".into(),
            ));
        }
        Ok(())
    }
}

impl DenseSquare {
    pub fn zeros(dim: usize) -> Self {
        DenseSquare {
            dim,
            values: vec![0.0; dim * dim],
        }
    }

    pub fn from_values(dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: values.len(),
                context: "square matrix buffer",
            });
        }
        for (k, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: k / dim,
                    col: k % dim,
                    value: v,
                });
            }
        }
        Ok(DenseSquare { dim, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.dim + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Largest absolute off-diagonal entry.
    pub fn max_offdiag_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    m = m.max(self.get(i, j).abs());
                }
            }
        }
        m
    }
}
