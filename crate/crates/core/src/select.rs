//! Regularization path with warm starts, information-criterion scoring,
//! penalty selection and the two-stage debiasing refit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseData;
use crate::solver::{
    self, objective, FitResult, Init, PenaltyPolicy, SolverConfig, SupportPattern,
};

/// Per-penalty fits over a descending grid, with scores and selection.
#[derive(Debug)]
pub struct PathResult {
    /// Strictly decreasing penalty levels.
    pub lambdas: Vec<f64>,
    pub fits: Vec<FitResult>,
    pub epbic_scores: Vec<f64>,
    pub gamma: f64,
    /// Position of the score minimizer among converged fits; ties break
    /// toward the larger penalty (sparser model). None when no fit
    /// converged.
    pub selected_index: Option<usize>,
    /// Human-readable diagnostics (non-convergence, support
    /// non-monotonicity).
    pub warnings: Vec<String>,
}

/// One row of the path report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathSummary {
    pub lambda: f64,
    pub nnz_offdiag: usize,
    pub objective: f64,
    pub epbic: f64,
    pub converged: bool,
    pub kkt_residual: f64,
    pub selected: bool,
}

impl PathResult {
    pub fn selected(&self) -> Option<&FitResult> {
        self.selected_index.map(|k| &self.fits[k])
    }

    pub fn selected_lambda(&self) -> Option<f64> {
        self.selected_index.map(|k| self.lambdas[k])
    }

    /// Fraction of adjacent penalty pairs where the off-diagonal support
    /// did not shrink as the penalty decreased. Typically close to 1;
    /// reported as a diagnostic, never enforced.
    pub fn support_monotonicity_fraction(&self) -> f64 {
        if self.fits.len() < 2 {
            return 1.0;
        }
        let ok = self
            .fits
            .windows(2)
            .filter(|w| w[1].omega.offdiag_nnz() >= w[0].omega.offdiag_nnz())
            .count();
        ok as f64 / (self.fits.len() - 1) as f64
    }

    /// Report rows in grid order.
    pub fn summaries(&self) -> Vec<PathSummary> {
        self.lambdas
            .iter()
            .zip(&self.fits)
            .zip(&self.epbic_scores)
            .enumerate()
            .map(|(k, ((&lambda, fit), &epbic))| PathSummary {
                lambda,
                nnz_offdiag: fit.omega.offdiag_nnz(),
                objective: fit.objective(),
                epbic,
                converged: fit.converged,
                kkt_residual: fit.kkt_residual,
                selected: self.selected_index == Some(k),
            })
            .collect()
    }
}

/// Log-evenly spaced penalty grid from the largest useful level down to
/// `ratio` times it.
///
/// The top of the grid is the largest absolute off-diagonal entry of
/// S = (1/n) X'X, computed column pair by column pair so no dense S is
/// required.
pub fn lambda_grid(data: &DenseData, count: usize, ratio: f64) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid needs at least 2 points, got {count}"
        )));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "grid ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let lambda_max = max_offdiag_covariance(data);
    if lambda_max <= 0.0 {
        return Err(Error::DegenerateData(
            "all off-diagonal covariances vanish; no useful grid".into(),
        ));
    }
    let k = count as f64 - 1.0;
    Ok((0..count)
        .map(|i| lambda_max * ratio.powf(i as f64 / k))
        .collect())
}

/// max_{i != j} |S_ij| of S = (1/n) X'X.
fn max_offdiag_covariance(data: &DenseData) -> f64 {
    let p = data.p();
    let n = data.n();
    let xt = data.transposed();
    let inv_n = 1.0 / n as f64;
    let mut best = 0.0f64;
    for i in 0..p {
        let ci = &xt[i * n..(i + 1) * n];
        for j in (i + 1)..p {
            let cj = &xt[j * n..(j + 1) * n];
            let dot: f64 = ci.iter().zip(cj).map(|(a, b)| a * b).sum();
            best = best.max((dot * inv_n).abs());
        }
    }
    best
}

/// Extended pseudo-BIC of a fit:
/// 2n * loss + k log n + 4 gamma k log p, where k counts the stored
/// nonzero off-diagonal entries of the asymmetric estimate and the loss
/// is the unpenalized objective. gamma = 0 gives the plain criterion.
pub fn epbic(fit: &FitResult, data: &DenseData, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!(
            "gamma must lie in [0, 1], got {gamma}"
        )));
    }
    fit.omega.require_positive_diagonal()?;
    let loss = objective(&fit.omega, data, &PenaltyPolicy::uniform(0.0)?)?;
    let k = fit.omega.offdiag_nnz() as f64;
    let n = data.n() as f64;
    let p = data.p() as f64;
    Ok(2.0 * n * loss + k * n.ln() + 4.0 * gamma * k * p.ln())
}

/// Fits the grid from the largest penalty down, warm-starting each fit
/// at the previous estimate, and records the score minimizer.
///
/// The penalty inside `base_config` is replaced per grid point; its
/// `init` applies to the first fit only. Non-converged fits are kept in
/// the result but excluded from selection, with a warning.
pub fn fit_path(
    data: &DenseData,
    lambdas: &[f64],
    base_config: &SolverConfig,
    gamma: f64,
) -> Result<PathResult> {
    if lambdas.is_empty() {
        return Err(Error::InvalidParameter("empty penalty grid".into()));
    }
    for w in lambdas.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::InvalidParameter(
                "penalty grid must be strictly decreasing".into(),
            ));
        }
    }
    let mut fits: Vec<FitResult> = Vec::with_capacity(lambdas.len());
    let mut scores = Vec::with_capacity(lambdas.len());
    let mut warnings = Vec::new();
    for (k, &lambda) in lambdas.iter().enumerate() {
        let mut cfg = base_config.clone();
        cfg.penalty = PenaltyPolicy::uniform(lambda)?;
        if let Some(prev) = fits.last() {
            cfg.init = Init::WarmStart(prev.omega.clone());
        }
        let fit = solver::solve(data, &cfg)?;
        if !fit.converged {
            warnings.push(format!(
                "fit {k} (lambda = {lambda:.6e}) did not converge within {} iterations",
                cfg.max_iter
            ));
        }
        scores.push(epbic(&fit, data, gamma)?);
        fits.push(fit);
    }

    let mut selected_index = None;
    let mut best = f64::INFINITY;
    for (k, (fit, &score)) in fits.iter().zip(&scores).enumerate() {
        if fit.converged && score < best {
            best = score;
            selected_index = Some(k);
        }
    }

    let mut path = PathResult {
        lambdas: lambdas.to_vec(),
        fits,
        epbic_scores: scores,
        gamma,
        selected_index,
        warnings,
    };
    let frac = path.support_monotonicity_fraction();
    if frac < 0.9 {
        path.warnings.push(format!(
            "off-diagonal support shrank along {:.0}% of grid steps",
            (1.0 - frac) * 100.0
        ));
    }
    Ok(path)
}

/// Second-stage refit on the selected support with the penalty reduced
/// to phi * lambda there (and on the diagonal) and infinite elsewhere.
/// Entries off the support are exact zeros in the refit.
pub fn debias(
    data: &DenseData,
    selected: &FitResult,
    lambda: f64,
    phi: f64,
    base_config: &SolverConfig,
) -> Result<FitResult> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::InvalidParameter(format!(
            "phi must lie in [0, 1], got {phi}"
        )));
    }
    if !selected.converged {
        return Err(Error::InvalidParameter(
            "refusing to refit a non-converged estimate".into(),
        ));
    }
    let support = SupportPattern::from_offdiag(&selected.omega);
    let mut cfg = base_config.clone();
    cfg.penalty = PenaltyPolicy::masked(support, phi * lambda)?;
    cfg.init = Init::WarmStart(selected.omega.clone());
    solver::solve(data, &cfg)
}

/// Refits the path's selected model; `None` when nothing was selected.
pub fn debias_selected(
    data: &DenseData,
    path: &PathResult,
    phi: f64,
    base_config: &SolverConfig,
) -> Result<Option<FitResult>> {
    match path.selected_index {
        Some(k) => Ok(Some(debias(
            data,
            &path.fits[k],
            path.lambdas[k],
            phi,
            base_config,
        )?)),
        None => Ok(None),
    }
}
