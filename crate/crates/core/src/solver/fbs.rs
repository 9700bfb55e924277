use crate::error::{Error, Result};
use crate::linalg::{DenseData, SparseBuilder, SparseSquare, DENSE_CAP};

use super::objective::{gradient_rows_from_y, kkt_residual, product_with_data_transpose};
use super::penalty::PenaltyPolicy;
use super::prox::{prox_diagonal, soft_threshold, DROP_TOL};

/// Step-size policy of the main loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    /// Constant step, clamped into (0, 2/L).
    Fixed,
    /// Shrink by beta from tau0 until the sufficient-decrease condition
    /// holds; a step at or below 1/L is accepted unconditionally.
    Backtracking,
}

/// Starting point of the iteration.
#[derive(Debug, Clone)]
pub enum Init {
    Identity,
    WarmStart(SparseSquare),
}

/// All solver tuning knobs.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub penalty: PenaltyPolicy,
    pub step_mode: StepMode,
    /// Initial step size; defaults to 1/L for fixed steps and 1.0 for
    /// backtracking.
    pub tau0: Option<f64>,
    /// Line-search shrink factor in (0, 1).
    pub beta: f64,
    /// Convergence threshold on the Frobenius norm of the iterate change.
    pub tol: f64,
    pub max_iter: usize,
    pub init: Init,
    /// Above this dimension the gradient is processed in row blocks and
    /// the dense covariance is never formed.
    pub dense_cap: usize,
    /// Row-block height of the matrix-free sweep.
    pub block_rows: usize,
    /// Start each line search at (last accepted step)/beta instead of
    /// tau0. Off by default.
    pub step_warm_start: bool,
    /// Compute the optimality certificate at exit (one extra gradient
    /// pass). When off, `kkt_residual` is NaN.
    pub certify: bool,
    /// Relative tolerance of the power iteration for the spectral bound.
    pub spectral_tol: f64,
}

impl SolverConfig {
    pub fn new(penalty: PenaltyPolicy) -> Self {
        SolverConfig {
            penalty,
            step_mode: StepMode::Backtracking,
            tau0: None,
            beta: 0.5,
            tol: 1e-8,
            max_iter: 10_000,
            init: Init::Identity,
            dense_cap: DENSE_CAP,
            block_rows: 256,
            step_warm_start: false,
            certify: true,
            spectral_tol: 1e-6,
        }
    }

    /// Uniform-penalty configuration with all defaults.
    pub fn uniform(lambda: f64) -> Result<Self> {
        Ok(Self::new(PenaltyPolicy::uniform(lambda)?))
    }

    fn validate(&self) -> Result<()> {
        if let Some(t) = self.tau0 {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "tau0 must be positive and finite, got {t}"
                )));
            }
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in (0, 1], got {}",
                self.beta
            )));
        }
        if self.step_mode == StepMode::Backtracking && self.beta >= 1.0 {
            return Err(Error::InvalidParameter(
                "backtracking requires beta < 1".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if self.block_rows == 0 {
            return Err(Error::InvalidParameter("block_rows must be at least 1".into()));
        }
        Ok(())
    }
}

/// Converged (or truncated) estimate with its trace.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub omega: SparseSquare,
    pub iterations: usize,
    /// f at the initial point followed by f at each accepted iterate;
    /// non-increasing.
    pub objective_trace: Vec<f64>,
    /// Accepted step size per iteration (aligned with
    /// `objective_trace[1..]`).
    pub steps: Vec<f64>,
    pub final_step: f64,
    pub converged: bool,
    /// Maximum stationarity violation at exit; NaN if certification was
    /// disabled.
    pub kkt_residual: f64,
}

impl FitResult {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace never empty")
    }
}

/// Runs forward-backward splitting on the penalized objective.
///
/// Each iteration takes a gradient step on the smooth quadratic part and
/// applies the closed-form proximal update (positive-root diagonal,
/// soft-thresholded off-diagonals). Stops when the Frobenius change
/// falls below `tol` or after `max_iter` iterations (`converged` then
/// reports which).
pub fn solve(data: &DenseData, config: &SolverConfig) -> Result<FitResult> {
    config.validate()?;
    if !data.is_centered() {
        return Err(Error::InvalidParameter(
            "data must be column-centered".into(),
        ));
    }
    let p = data.p();
    let n = data.n();

    let mut omega = match &config.init {
        Init::Identity => SparseSquare::identity(p),
        Init::WarmStart(m) => {
            if m.dim() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: m.dim(),
                    context: "warm start dimension",
                });
            }
            m.require_positive_diagonal()?;
            m.clone()
        }
    };

    let lipschitz = data.spectral_bound(config.spectral_tol);
    if lipschitz <= 0.0 {
        return Err(Error::DegenerateData(
            "zero data matrix: spectral bound is 0".into(),
        ));
    }
    let min_step = 1.0 / lipschitz;
    let tau0 = config.tau0.unwrap_or(match config.step_mode {
        StepMode::Fixed => min_step,
        StepMode::Backtracking => 1.0,
    });
    // Fixed steps must stay strictly below 2/L.
    let tau_fixed = tau0.min(2.0 / lipschitz * (1.0 - 1e-9));

    let dense_mode = p <= config.dense_cap;
    let s = if dense_mode {
        Some(data.gram_cached(config.dense_cap)?)
    } else {
        None
    };
    let mut grad = if dense_mode {
        vec![0.0; p * p]
    } else {
        vec![0.0; config.block_rows.min(p) * p]
    };

    let mut y = product_with_data_transpose(&omega, data);
    let f0 = h_value(&omega, &config.penalty) + squared_sum(&y) / (2.0 * n as f64);
    if !f0.is_finite() {
        return Err(Error::InvalidParameter(
            "initial iterate violates the penalty mask".into(),
        ));
    }
    let mut trace = vec![f0];
    let mut steps = Vec::new();
    let mut tau_start = tau0;
    let mut final_step = tau_fixed;
    let mut converged = false;
    let mut iterations = 0;

    for t in 0..config.max_iter {
        iterations = t + 1;
        let g_curr = if dense_mode {
            let s = s.expect("dense mode").values();
            crate::linalg::spdm_rows_into(&omega, 0..p, s, p, &mut grad);
            0.5 * sparse_dot_dense(&omega, &grad, p)
        } else {
            squared_sum(&y) / (2.0 * n as f64)
        };

        let mut tau = match config.step_mode {
            StepMode::Fixed => tau_fixed,
            StepMode::Backtracking => tau_start,
        };
        let (cand, y_cand, g_cand, fro2, tau_acc) = loop {
            let (cand, fro2, ip) = if dense_mode {
                sweep_dense(&omega, &grad, tau, &config.penalty)
            } else {
                sweep_blocks(&omega, &y, data, tau, &config.penalty, config.block_rows, &mut grad)
            };
            let y_cand = product_with_data_transpose(&cand, data);
            let g_cand = squared_sum(&y_cand) / (2.0 * n as f64);
            let accept = match config.step_mode {
                StepMode::Fixed => true,
                StepMode::Backtracking => {
                    g_cand <= g_curr + ip + fro2 / (2.0 * tau) || tau <= min_step
                }
            };
            if accept {
                break (cand, y_cand, g_cand, fro2, tau);
            }
            tau *= config.beta;
        };

        let f_cand = h_value(&cand, &config.penalty) + g_cand;
        if !f_cand.is_finite() {
            return Err(Error::NumericFailure { iteration: t });
        }
        trace.push(f_cand);
        steps.push(tau_acc);
        final_step = tau_acc;
        omega = cand;
        y = y_cand;
        if config.step_warm_start {
            tau_start = (tau_acc / config.beta).min(tau0);
        }
        if fro2.sqrt() < config.tol {
            converged = true;
            break;
        }
    }

    let kkt = if config.certify {
        kkt_residual(&omega, data, &config.penalty)?
    } else {
        f64::NAN
    };
    Ok(FitResult {
        omega,
        iterations,
        objective_trace: trace,
        steps,
        final_step,
        converged,
        kkt_residual: kkt,
    })
}

/// -log det of the diagonal plus the penalty; +inf on the boundary.
fn h_value(omega: &SparseSquare, penalty: &PenaltyPolicy) -> f64 {
    let mut logdet = 0.0;
    for i in 0..omega.dim() {
        let d = omega.get(i, i);
        if d <= 0.0 {
            return f64::INFINITY;
        }
        logdet += d.ln();
    }
    -logdet + penalty.value(omega)
}

fn squared_sum(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn sparse_dot_dense(m: &SparseSquare, dense: &[f64], p: usize) -> f64 {
    let mut acc = 0.0;
    for (i, j, v) in m.iter() {
        acc += v * dense[i * p + j];
    }
    acc
}

/// One proximal sweep against a fully materialized gradient. Returns the
/// candidate, the squared Frobenius norm of the change and the inner
/// product of the change with the gradient (accumulated in row-major
/// order).
fn sweep_dense(
    old: &SparseSquare,
    grad: &[f64],
    tau: f64,
    penalty: &PenaltyPolicy,
) -> (SparseSquare, f64, f64) {
    let p = old.dim();
    let mut b = SparseBuilder::with_capacity(p, old.nnz() + p);
    let mut fro2 = 0.0;
    let mut ip = 0.0;
    for i in 0..p {
        sweep_row(
            old,
            i,
            &grad[i * p..(i + 1) * p],
            tau,
            penalty,
            &mut b,
            &mut fro2,
            &mut ip,
        );
        b.finish_row();
    }
    (b.build(), fro2, ip)
}

/// Matrix-free variant: gradient rows are produced block by block from
/// Y = Omega X', so at most `block_rows` * p gradient values are live.
#[allow(clippy::too_many_arguments)]
fn sweep_blocks(
    old: &SparseSquare,
    y: &[f64],
    data: &DenseData,
    tau: f64,
    penalty: &PenaltyPolicy,
    block_rows: usize,
    grad_buf: &mut [f64],
) -> (SparseSquare, f64, f64) {
    let p = old.dim();
    let block = block_rows.min(p);
    let mut b = SparseBuilder::with_capacity(p, old.nnz() + p);
    let mut fro2 = 0.0;
    let mut ip = 0.0;
    let mut start = 0;
    while start < p {
        let end = (start + block).min(p);
        let buf = &mut grad_buf[..(end - start) * p];
        gradient_rows_from_y(y, data, start..end, buf);
        for i in start..end {
            sweep_row(
                old,
                i,
                &buf[(i - start) * p..(i - start + 1) * p],
                tau,
                penalty,
                &mut b,
                &mut fro2,
                &mut ip,
            );
            b.finish_row();
        }
        start = end;
    }
    (b.build(), fro2, ip)
}

/// Forward + proximal update of one row. For uniform penalties every
/// column is visited; for masked penalties only the mask, the diagonal
/// and any stray stored entries (which map to exact zero).
#[allow(clippy::too_many_arguments)]
fn sweep_row(
    old: &SparseSquare,
    i: usize,
    grad_row: &[f64],
    tau: f64,
    penalty: &PenaltyPolicy,
    b: &mut SparseBuilder,
    fro2: &mut f64,
    ip: &mut f64,
) {
    let (cols, vals) = old.row(i);
    match penalty {
        PenaltyPolicy::Uniform { lambda } => {
            let thresh = tau * *lambda;
            let mut cur = 0usize;
            for (j, &gij) in grad_row.iter().enumerate() {
                let old_v = if cur < cols.len() && cols[cur] == j {
                    let v = vals[cur];
                    cur += 1;
                    v
                } else {
                    0.0
                };
                let yf = old_v - tau * gij;
                let new_v = if i == j {
                    prox_diagonal(yf, tau, *lambda)
                } else {
                    soft_threshold(yf, thresh)
                };
                let d = new_v - old_v;
                if d != 0.0 {
                    *fro2 += d * d;
                    *ip += d * gij;
                }
                if i == j || new_v.abs() >= DROP_TOL {
                    b.push(j, new_v);
                }
            }
        }
        PenaltyPolicy::Masked {
            support,
            lambda_eff,
        } => {
            let thresh = tau * *lambda_eff;
            // merge the mask row, the diagonal and the stored row
            let mask = support.row(i);
            let mut mi = 0usize;
            let mut oi = 0usize;
            let mut diag_done = false;
            loop {
                let next_mask = mask.get(mi).copied();
                let next_old = cols.get(oi).copied();
                let next_diag = if diag_done { None } else { Some(i) };
                let j = match smallest(next_mask, next_old, next_diag) {
                    Some(j) => j,
                    None => break,
                };
                let in_mask = next_mask == Some(j);
                if in_mask {
                    mi += 1;
                }
                let old_v = if next_old == Some(j) {
                    let v = vals[oi];
                    oi += 1;
                    v
                } else {
                    0.0
                };
                if j == i {
                    diag_done = true;
                }
                let gij = grad_row[j];
                let yf = old_v - tau * gij;
                let new_v = if j == i {
                    prox_diagonal(yf, tau, *lambda_eff)
                } else if in_mask {
                    soft_threshold(yf, thresh)
                } else {
                    0.0 // infinite penalty off the mask
                };
                let d = new_v - old_v;
                if d != 0.0 {
                    *fro2 += d * d;
                    *ip += d * gij;
                }
                if j == i || new_v.abs() >= DROP_TOL {
                    b.push(j, new_v);
                }
            }
        }
    }
}

fn smallest(a: Option<usize>, b: Option<usize>, c: Option<usize>) -> Option<usize> {
    [a, b, c].into_iter().flatten().min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::center_columns;

    fn univariate_data(scale: f64, n: usize) -> DenseData {
        // n samples with (1/n) sum x^2 = scale^2 exactly: alternate +-scale
        let raw: Vec<f64> = (0..n)
            .map(|i| if i % 2 == 0 { scale } else { -scale })
            .collect();
        DenseData::from_centered(raw, n, 1).unwrap()
    }

    #[test]
    fn univariate_unpenalized_root() {
        // stationarity -1/w + w s = 0 at w = 1/sqrt(s); s = 1 here
        let data = univariate_data(1.0, 4);
        let mut cfg = SolverConfig::uniform(0.0).unwrap();
        cfg.tol = 1e-12;
        let fit = solve(&data, &cfg).unwrap();
        assert!(fit.converged);
        assert!((fit.omega.get(0, 0) - 1.0).abs() < 1e-9, "{}", fit.omega.get(0, 0));
    }

    #[test]
    fn univariate_penalized_root() {
        // -1/w + w + lambda = 0, positive root (-lambda + sqrt(lambda^2+4))/2
        let data = univariate_data(1.0, 4);
        let mut cfg = SolverConfig::uniform(0.5).unwrap();
        cfg.tol = 1e-12;
        let fit = solve(&data, &cfg).unwrap();
        let expect = (-0.5 + 4.25f64.sqrt()) / 2.0;
        assert!((fit.omega.get(0, 0) - expect).abs() < 1e-9);
        assert!((expect - 0.78077641).abs() < 1e-7);
    }

    #[test]
    fn huge_lambda_gives_diagonal_kkt_solution() {
        let raw: Vec<f64> = (0..40)
            .map(|k| ((k * 2654435761u64 as usize % 97) as f64 / 97.0) - 0.5)
            .collect();
        let data = center_columns(raw, 10, 4).unwrap();
        let s = data.gram(DENSE_CAP).unwrap();
        let mut lambda = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    lambda = lambda.max(s.get(i, j).abs() / s.get(j, j).sqrt());
                }
            }
        }
        let lambda = lambda + 1.0;
        let mut cfg = SolverConfig::uniform(lambda).unwrap();
        cfg.tol = 1e-12;
        let fit = solve(&data, &cfg).unwrap();
        assert_eq!(fit.omega.offdiag_nnz(), 0, "off-diagonals not all zero");
        for i in 0..4 {
            let sii = s.get(i, i);
            let expect = (-lambda + (lambda * lambda + 4.0 * sii).sqrt()) / (2.0 * sii);
            assert!(
                (fit.omega.get(i, i) - expect).abs() < 1e-8,
                "diagonal {i}: {} vs {expect}",
                fit.omega.get(i, i)
            );
        }
    }

    #[test]
    fn fixed_and_backtracking_agree() {
        let raw: Vec<f64> = (0..60)
            .map(|k| (((k * 37 + 11) % 23) as f64 / 23.0) - 0.5)
            .collect();
        let data = center_columns(raw, 12, 5).unwrap();
        let mut fixed = SolverConfig::uniform(0.1).unwrap();
        fixed.step_mode = StepMode::Fixed;
        fixed.tol = 1e-10;
        let mut bt = SolverConfig::uniform(0.1).unwrap();
        bt.step_mode = StepMode::Backtracking;
        bt.tol = 1e-10;
        let a = solve(&data, &fixed).unwrap();
        let b = solve(&data, &bt).unwrap();
        assert!(a.converged && b.converged);
        let d = a.omega.frobenius_distance(&b.omega);
        assert!(d < 1e-6, "estimates differ by {d}");
    }

    #[test]
    fn trace_is_non_increasing() {
        let raw: Vec<f64> = (0..80)
            .map(|k| (((k * 101 + 3) % 41) as f64 / 41.0) - 0.5)
            .collect();
        let data = center_columns(raw, 16, 5).unwrap();
        for mode in [StepMode::Fixed, StepMode::Backtracking] {
            let mut cfg = SolverConfig::uniform(0.05).unwrap();
            cfg.step_mode = mode;
            let fit = solve(&data, &cfg).unwrap();
            for w in fit.objective_trace.windows(2) {
                assert!(
                    w[1] <= w[0] + 1e-12 * w[0].abs(),
                    "objective increased: {} -> {}",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn converged_fit_certifies() {
        let raw: Vec<f64> = (0..120)
            .map(|k| (((k * 17 + 7) % 29) as f64 / 29.0) - 0.5)
            .collect();
        let data = center_columns(raw, 20, 6).unwrap();
        let mut cfg = SolverConfig::uniform(0.08).unwrap();
        cfg.tol = 1e-10;
        let fit = solve(&data, &cfg).unwrap();
        assert!(fit.converged);
        assert!(fit.kkt_residual <= 1e-6, "kkt {}", fit.kkt_residual);
    }

    #[test]
    fn non_convergence_reported_not_fatal() {
        let raw: Vec<f64> = (0..60)
            .map(|k| (((k * 7 + 1) % 13) as f64 / 13.0) - 0.5)
            .collect();
        let data = center_columns(raw, 12, 5).unwrap();
        let mut cfg = SolverConfig::uniform(0.01).unwrap();
        cfg.max_iter = 2;
        cfg.tol = 1e-14;
        let fit = solve(&data, &cfg).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 2);
    }

    #[test]
    fn matrix_free_path_matches_dense_path() {
        let raw: Vec<f64> = (0..9 * 12)
            .map(|k| (((k * 61 + 5) % 31) as f64 / 31.0) - 0.5)
            .collect();
        let data = center_columns(raw, 9, 12).unwrap();
        let mut dense = SolverConfig::uniform(0.07).unwrap();
        dense.tol = 1e-11;
        let mut free = dense.clone();
        free.dense_cap = 4; // force the block path
        free.block_rows = 5;
        let a = solve(&data, &dense).unwrap();
        let b = solve(&data, &free).unwrap();
        let d = a.omega.frobenius_distance(&b.omega);
        assert!(d < 1e-8, "paths differ by {d}");
    }

    #[test]
    fn masked_solve_respects_hard_zeros() {
        let raw: Vec<f64> = (0..100)
            .map(|k| (((k * 53 + 19) % 37) as f64 / 37.0) - 0.5)
            .collect();
        let data = center_columns(raw, 20, 5).unwrap();
        let support =
            crate::solver::SupportPattern::from_pairs(5, &[(0, 1), (1, 0), (3, 4)]).unwrap();
        let mut cfg =
            SolverConfig::new(PenaltyPolicy::masked(support.clone(), 0.0).unwrap());
        cfg.tol = 1e-10;
        let fit = solve(&data, &cfg).unwrap();
        for (i, j, v) in fit.omega.iter() {
            if i != j && v != 0.0 {
                assert!(support.contains(i, j), "({i},{j}) off the mask");
            }
        }
    }

    #[test]
    fn degenerate_data_rejected() {
        let data = DenseData::from_centered(vec![0.0; 8], 4, 2).unwrap();
        let cfg = SolverConfig::uniform(0.1).unwrap();
        assert!(matches!(
            solve(&data, &cfg),
            Err(Error::DegenerateData(_))
        ));
    }
}
