//! Row-scaling bijection between a symmetric precision matrix and the
//! asymmetric target of the loss, plus partial-correlation recovery.
//! Both directions preserve the sparsity pattern exactly.

use crate::error::{Error, Result};
use crate::linalg::{SparseBuilder, SparseSquare};

/// Scales row i by 1/sqrt(theta_ii). Support is unchanged.
pub fn theta_to_omega(theta: &SparseSquare) -> Result<SparseSquare> {
    scale_rows(theta, |d| 1.0 / d.sqrt())
}

/// Scales row i by omega_ii, recovering the precision matrix from the
/// asymmetric estimate. Support is unchanged.
pub fn omega_to_theta(omega: &SparseSquare) -> Result<SparseSquare> {
    scale_rows(omega, |d| d)
}

fn scale_rows(m: &SparseSquare, factor: impl Fn(f64) -> f64) -> Result<SparseSquare> {
    let p = m.dim();
    let mut b = SparseBuilder::with_capacity(p, m.nnz());
    for i in 0..p {
        let d = m.get(i, i);
        if d <= 0.0 {
            return Err(Error::NonPositiveDiagonal { index: i, value: d });
        }
        let f = factor(d);
        let (cols, vals) = m.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            b.push(j, v * f);
        }
        b.finish_row();
    }
    Ok(b.build())
}

/// Symmetric partial-correlation estimates from the asymmetric iterate:
/// rho_ij = -(omega_ij / omega_jj + omega_ji / omega_ii) / 2.
///
/// An off-diagonal pair is present iff either orientation is stored
/// nonzero. The unit diagonal is implicit and not stored.
pub fn partial_correlations(omega: &SparseSquare) -> Result<SparseSquare> {
    let p = omega.dim();
    let diag = omega.diagonal();
    for (i, &d) in diag.iter().enumerate() {
        if d <= 0.0 {
            return Err(Error::NonPositiveDiagonal { index: i, value: d });
        }
    }
    let mut pairs = std::collections::BTreeSet::new();
    for (i, j, v) in omega.iter() {
        if i != j && v != 0.0 {
            pairs.insert((i.min(j), i.max(j)));
        }
    }
    let mut triplets = Vec::with_capacity(2 * pairs.len());
    for (i, j) in pairs {
        let rho = -0.5 * (omega.get(i, j) / diag[j] + omega.get(j, i) / diag[i]);
        triplets.push((i, j, rho));
        triplets.push((j, i, rho));
    }
    SparseSquare::from_triplets(p, &triplets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_scaling_by_inverse_sqrt_diagonal() {
        let theta =
            SparseSquare::from_triplets(2, &[(0, 0, 4.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 4.0)])
                .unwrap();
        let omega = theta_to_omega(&theta).unwrap();
        assert_eq!(omega.get(0, 0), 2.0);
        assert_eq!(omega.get(0, 1), 1.0);
        assert_eq!(omega.get(1, 0), 1.0);
        assert_eq!(omega.get(1, 1), 2.0);
    }

    #[test]
    fn identity_is_fixed_point_of_both_maps() {
        let eye = SparseSquare::identity(4);
        assert_eq!(theta_to_omega(&eye).unwrap(), eye);
        assert_eq!(omega_to_theta(&eye).unwrap(), eye);
    }

    #[test]
    fn inverse_map_recovers_precision() {
        let omega =
            SparseSquare::from_triplets(2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)])
                .unwrap();
        let theta = omega_to_theta(&omega).unwrap();
        assert_eq!(theta.get(0, 0), 4.0);
        assert_eq!(theta.get(0, 1), 2.0);
    }

    #[test]
    fn nonpositive_diagonal_rejected() {
        let bad = SparseSquare::from_triplets(2, &[(0, 0, -1.0), (1, 1, 1.0)]).unwrap();
        assert!(theta_to_omega(&bad).is_err());
        assert!(omega_to_theta(&bad).is_err());
        assert!(partial_correlations(&bad).is_err());
    }

    #[test]
    fn partial_correlation_symmetric_pair() {
        let omega =
            SparseSquare::from_triplets(2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)])
                .unwrap();
        let rho = partial_correlations(&omega).unwrap();
        assert!((rho.get(0, 1) + 0.5).abs() < 1e-15);
        assert_eq!(rho.get(0, 1), rho.get(1, 0));
        assert_eq!(rho.get(0, 0), 0.0);
    }

    #[test]
    fn diagonal_iterate_has_empty_partial_correlations() {
        let omega = SparseSquare::from_triplets(3, &[(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0)]).unwrap();
        let rho = partial_correlations(&omega).unwrap();
        assert_eq!(rho.nnz(), 0);
    }

    #[test]
    fn asymmetric_single_orientation_still_yields_pair() {
        let omega =
            SparseSquare::from_triplets(3, &[(0, 0, 1.0), (1, 1, 4.0), (2, 2, 1.0), (2, 0, 0.8)])
                .unwrap();
        let rho = partial_correlations(&omega).unwrap();
        // only (2,0) stored: rho = -(0/1 + 0.8/1)/2 ... uses both diagonals
        let expect = -0.5 * (0.8 / 1.0);
        assert!((rho.get(0, 2) - expect).abs() < 1e-15);
        assert_eq!(rho.get(0, 2), rho.get(2, 0));
    }
}
