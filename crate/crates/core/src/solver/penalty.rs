use crate::error::{Error, Result};
use crate::linalg::SparseSquare;

/// Off-diagonal index pattern used by masked penalties: sorted column
/// lists per row, diagonal never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportPattern {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
}

impl SupportPattern {
    /// The stored off-diagonal support of a sparse matrix.
    pub fn from_offdiag(m: &SparseSquare) -> Self {
        let dim = m.dim();
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::new();
        for i in 0..dim {
            let (rc, rv) = m.row(i);
            for (&j, &v) in rc.iter().zip(rv) {
                if j != i && v != 0.0 {
                    cols.push(j);
                }
            }
            row_ptr[i + 1] = cols.len();
        }
        SupportPattern { dim, row_ptr, cols }
    }

    /// From ordered (row, col) pairs; diagonal pairs and duplicates are
    /// dropped.
    pub fn from_pairs(dim: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize)> = Vec::with_capacity(pairs.len());
        for &(i, j) in pairs {
            if i >= dim || j >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: i.max(j) + 1,
                    context: "support pair out of range",
                });
            }
            if i != j {
                sorted.push((i, j));
            }
        }
        sorted.sort_unstable();
        sorted.dedup();
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(sorted.len());
        for &(i, j) in &sorted {
            row_ptr[i + 1] += 1;
            cols.push(j);
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SupportPattern { dim, row_ptr, cols })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.row(i).binary_search(&j).is_ok()
    }
}

/// The l1 penalty applied to the iterate.
///
/// `Uniform` charges lambda on every entry, diagonal included. `Masked`
/// charges `lambda_eff` on the diagonal and on a fixed off-diagonal
/// support, and an infinite penalty elsewhere (hard zeros); this is the
/// second-stage refit configuration.
#[derive(Debug, Clone)]
pub enum PenaltyPolicy {
    Uniform { lambda: f64 },
    Masked {
        support: SupportPattern,
        lambda_eff: f64,
    },
}

impl PenaltyPolicy {
    pub fn uniform(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "penalty level must be finite and nonnegative, got {lambda}"
            )));
        }
        Ok(PenaltyPolicy::Uniform { lambda })
    }

    pub fn masked(support: SupportPattern, lambda_eff: f64) -> Result<Self> {
        if !(lambda_eff >= 0.0) || !lambda_eff.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "effective penalty level must be finite and nonnegative, got {lambda_eff}"
            )));
        }
        Ok(PenaltyPolicy::Masked {
            support,
            lambda_eff,
        })
    }

    /// Penalty level applied to entry (i, j); infinite off the mask.
    pub fn level(&self, i: usize, j: usize) -> f64 {
        match self {
            PenaltyPolicy::Uniform { lambda } => *lambda,
            PenaltyPolicy::Masked {
                support,
                lambda_eff,
            } => {
                if i == j || support.contains(i, j) {
                    *lambda_eff
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Penalty value at the given iterate; infinite when a stored nonzero
    /// sits off the mask.
    pub fn value(&self, omega: &SparseSquare) -> f64 {
        match self {
            PenaltyPolicy::Uniform { lambda } => {
                *lambda * omega.iter().map(|(_, _, v)| v.abs()).sum::<f64>()
            }
            PenaltyPolicy::Masked {
                support,
                lambda_eff,
            } => {
                let mut acc = 0.0;
                for (i, j, v) in omega.iter() {
                    if v == 0.0 {
                        continue;
                    }
                    if i == j || support.contains(i, j) {
                        acc += v.abs();
                    } else {
                        return f64::INFINITY;
                    }
                }
                *lambda_eff * acc
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_levels_cover_diagonal() {
        let p = PenaltyPolicy::uniform(0.3).unwrap();
        assert_eq!(p.level(0, 0), 0.3);
        assert_eq!(p.level(1, 2), 0.3);
    }

    #[test]
    fn masked_levels() {
        let sup = SupportPattern::from_pairs(3, &[(0, 1)]).unwrap();
        let p = PenaltyPolicy::masked(sup, 0.1).unwrap();
        assert_eq!(p.level(0, 1), 0.1);
        assert_eq!(p.level(2, 2), 0.1);
        assert_eq!(p.level(1, 0), f64::INFINITY);
    }

    #[test]
    fn masked_value_infinite_off_mask() {
        let sup = SupportPattern::from_pairs(2, &[]).unwrap();
        let p = PenaltyPolicy::masked(sup, 0.5).unwrap();
        let on_mask =
            SparseSquare::from_triplets(2, &[(0, 0, 2.0), (1, 1, 1.0)]).unwrap();
        assert!((p.value(&on_mask) - 1.5).abs() < 1e-15);
        let off_mask =
            SparseSquare::from_triplets(2, &[(0, 0, 1.0), (0, 1, 0.2), (1, 1, 1.0)]).unwrap();
        assert_eq!(p.value(&off_mask), f64::INFINITY);
    }

    #[test]
    fn support_from_offdiag_ignores_diagonal() {
        let m =
            SparseSquare::from_triplets(3, &[(0, 0, 1.0), (0, 2, 0.5), (1, 1, 1.0)]).unwrap();
        let sup = SupportPattern::from_offdiag(&m);
        assert_eq!(sup.len(), 1);
        assert!(sup.contains(0, 2));
        assert!(!sup.contains(2, 0));
    }

    #[test]
    fn negative_lambda_rejected() {
        assert!(PenaltyPolicy::uniform(-1.0).is_err());
        assert!(PenaltyPolicy::uniform(f64::NAN).is_err());
    }
}
