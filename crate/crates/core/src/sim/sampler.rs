use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::linalg::{center_columns, DenseData, SparseSquare, DENSE_CAP};

/// Draws n zero-mean Gaussian samples whose precision matrix is the
/// given symmetric positive definite theta, then centers the columns.
///
/// Densifies theta and factorizes it once (theta = L L'), then each
/// sample solves L'y = x with x standard normal. Only for dimensions at
/// or below the dense cap; larger simulations go through the sparse
/// triangular factor path.
pub fn sample_gaussian(theta: &SparseSquare, n: usize, seed: u64) -> Result<DenseData> {
    let p = theta.dim();
    if p > DENSE_CAP {
        return Err(Error::DenseCapExceeded {
            dim: p,
            cap: DENSE_CAP,
        });
    }
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let mut dense = DMatrix::<f64>::zeros(p, p);
    for (i, j, v) in theta.iter() {
        dense[(i, j)] = v;
    }
    let chol = nalgebra::Cholesky::new(dense).ok_or_else(|| {
        Error::InvalidParameter("precision matrix is not positive definite".into())
    })?;
    let l = chol.l();
    let lcols = l.as_slice(); // column-major: column i at lcols[i*p..]

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::StandardNormal;
    let mut buf = vec![0.0f64; n * p];
    let mut x = vec![0.0f64; p];
    for s in 0..n {
        for xi in x.iter_mut() {
            *xi = normal.sample(&mut rng);
        }
        // solve L'y = x: y_i = (x_i - sum_{j>i} L_ji y_j) / L_ii
        for i in (0..p).rev() {
            let col = &lcols[i * p..(i + 1) * p];
            let mut acc = x[i];
            for j in (i + 1)..p {
                acc -= col[j] * x[j];
            }
            x[i] = acc / col[i];
        }
        buf[s * p..(s + 1) * p].copy_from_slice(&x);
    }
    center_columns(buf, n, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_precision_gives_standard_normals() {
        let data = sample_gaussian(&SparseSquare::identity(4), 20_000, 3).unwrap();
        for j in 0..4 {
            let var: f64 = (0..20_000)
                .map(|i| data.values()[i * 4 + j].powi(2))
                .sum::<f64>()
                / 20_000.0;
            assert!((var - 1.0).abs() < 0.05, "column {j} variance {var}");
        }
    }

    #[test]
    fn empirical_precision_recovers_target() {
        // p = 5 SPD with a few couplings; large n so S^-1 ~ theta
        let theta = SparseSquare::from_triplets(
            5,
            &[
                (0, 0, 2.0),
                (1, 1, 1.5),
                (2, 2, 1.0),
                (3, 3, 1.2),
                (4, 4, 1.8),
                (0, 1, 0.6),
                (1, 0, 0.6),
                (2, 3, -0.4),
                (3, 2, -0.4),
            ],
        )
        .unwrap();
        let n = 200_000;
        let data = sample_gaussian(&theta, n, 11).unwrap();
        let s = data.gram(DENSE_CAP).unwrap();
        let mut sm = DMatrix::<f64>::zeros(5, 5);
        for i in 0..5 {
            for j in 0..5 {
                sm[(i, j)] = s.get(i, j);
            }
        }
        let prec = sm.try_inverse().unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                let d = prec[(i, j)] - theta.get(i, j);
                num += d * d;
                den += theta.get(i, j).powi(2);
            }
        }
        let rel = (num / den).sqrt();
        assert!(rel < 0.05, "relative precision error {rel}");
    }

    #[test]
    fn deterministic_under_seed() {
        let theta = SparseSquare::identity(3);
        let a = sample_gaussian(&theta, 10, 5).unwrap();
        let b = sample_gaussian(&theta, 10, 5).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn rejects_indefinite_matrix() {
        let bad = SparseSquare::from_triplets(
            2,
            &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)],
        )
        .unwrap();
        assert!(sample_gaussian(&bad, 10, 1).is_err());
    }
}
