use crate::error::{Error, Result};
use crate::linalg::{spdm, DenseData, DenseSquare, SparseSquare, DENSE_CAP};

use super::penalty::PenaltyPolicy;

/// Full objective value: -sum_i log(omega_ii) + ||Omega X'||_F^2 / (2n)
/// plus the penalty term.
///
/// Returns +infinity on the domain boundary (a non-positive diagonal),
/// which is distinct from the hard errors (dimension mismatch).
pub fn objective(
    omega: &SparseSquare,
    data: &DenseData,
    penalty: &PenaltyPolicy,
) -> Result<f64> {
    check_dims(omega, data)?;
    let mut logdet = 0.0;
    for i in 0..omega.dim() {
        let d = omega.get(i, i);
        if d <= 0.0 {
            return Ok(f64::INFINITY);
        }
        logdet += d.ln();
    }
    let quad = quadratic_term(omega, data);
    Ok(-logdet + quad + penalty.value(omega))
}

/// ||Omega X'||_F^2 / (2n), evaluated through Y = Omega X' so the dense
/// covariance is never needed.
pub(crate) fn quadratic_term(omega: &SparseSquare, data: &DenseData) -> f64 {
    let y = product_with_data_transpose(omega, data);
    let ss: f64 = y.iter().map(|v| v * v).sum();
    ss / (2.0 * data.n() as f64)
}

/// Y = Omega X', a p-by-n dense buffer.
pub(crate) fn product_with_data_transpose(omega: &SparseSquare, data: &DenseData) -> Vec<f64> {
    spdm(omega, data.transposed(), data.n()).expect("dimensions checked by caller")
}

/// Smooth-part gradient Omega S, computed in two steps as
/// (1/n) (Omega X') X without forming S.
///
/// Materializes a dense p-by-p matrix and therefore refuses dimensions
/// above the dense cap; large problems go through the block engine.
pub fn gradient(omega: &SparseSquare, data: &DenseData) -> Result<DenseSquare> {
    check_dims(omega, data)?;
    let p = data.p();
    if p > DENSE_CAP {
        return Err(Error::DenseCapExceeded {
            dim: p,
            cap: DENSE_CAP,
        });
    }
    let y = product_with_data_transpose(omega, data);
    let mut g = vec![0.0; p * p];
    gradient_rows_from_y(&y, data, 0..p, &mut g);
    DenseSquare::from_values(p, g)
}

/// Writes rows `rows` of (1/n) Y X into `out` (len = rows.len() * p).
/// Y is p-by-n row-major; row i of the result only needs row i of Y.
pub(crate) fn gradient_rows_from_y(
    y: &[f64],
    data: &DenseData,
    rows: std::ops::Range<usize>,
    out: &mut [f64],
) {
    let n = data.n();
    let p = data.p();
    let inv_n = 1.0 / n as f64;
    let base = rows.start;
    out.iter_mut().for_each(|v| *v = 0.0);
    for i in rows {
        let yrow = &y[i * n..(i + 1) * n];
        let orow = &mut out[(i - base) * p..(i - base + 1) * p];
        for (k, &yk) in yrow.iter().enumerate() {
            if yk == 0.0 {
                continue;
            }
            let w = yk * inv_n;
            let xrow = data.row(k);
            for (o, &x) in orow.iter_mut().zip(xrow) {
                *o += w * x;
            }
        }
    }
}

/// Maximum optimality violation of the stationarity condition
/// -diag(Omega)^-1 + Omega S + lambda Z = 0 over all matrix positions.
///
/// Stored nonzeros contribute the absolute stationarity residual with
/// sign(omega_ij) in place of Z; absent off-diagonal entries contribute
/// max(0, |[Omega S]_ij| - lambda). Positions carrying an infinite
/// (masked-out) penalty are skipped.
pub fn kkt_residual(
    omega: &SparseSquare,
    data: &DenseData,
    penalty: &PenaltyPolicy,
) -> Result<f64> {
    check_dims(omega, data)?;
    omega.require_positive_diagonal()?;
    let p = data.p();
    let y = product_with_data_transpose(omega, data);
    let block = 512.min(p);
    let mut buf = vec![0.0; block * p];
    let mut worst = 0.0f64;
    let mut start = 0;
    while start < p {
        let end = (start + block).min(p);
        gradient_rows_from_y(&y, data, start..end, &mut buf);
        for i in start..end {
            let grow = &buf[(i - start) * p..(i - start + 1) * p];
            let (cols, vals) = omega.row(i);
            let mut cur = 0usize;
            for j in 0..p {
                let stored = if cur < cols.len() && cols[cur] == j {
                    let v = vals[cur];
                    cur += 1;
                    Some(v)
                } else {
                    None
                };
                let lam = penalty.level(i, j);
                let viol = match stored {
                    Some(v) if v != 0.0 => {
                        if lam.is_infinite() {
                            continue;
                        }
                        let inv_d = if i == j { 1.0 / v } else { 0.0 };
                        (-inv_d + grow[j] + lam * v.signum()).abs()
                    }
                    _ => {
                        if i == j || lam.is_infinite() {
                            continue;
                        }
                        (grow[j].abs() - lam).max(0.0)
                    }
                };
                worst = worst.max(viol);
            }
        }
        start = end;
    }
    Ok(worst)
}

fn check_dims(omega: &SparseSquare, data: &DenseData) -> Result<()> {
    if omega.dim() != data.p() {
        return Err(Error::DimensionMismatch {
            expected: data.p(),
            got: omega.dim(),
            context: "iterate vs data columns",
        });
    }
    Ok(())
}
