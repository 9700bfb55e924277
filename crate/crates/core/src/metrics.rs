//! Edge-detection and estimation-error metrics against ground truth.
//!
//! Edge selection from the asymmetric estimate uses the OR rule: the
//! unordered pair {i, j} counts as selected when either orientation is
//! stored nonzero.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SparseSquare;
use crate::select::PathResult;
use crate::sim::GraphModel;
use crate::solver::omega_to_theta;

/// Confusion counts over unordered off-diagonal pairs;
/// tp + fp + fn + tn = p (p - 1) / 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.tp + self.fn_ == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fn_) as f64
        }
    }
}

/// Full evaluation of an estimate against ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub counts: ConfusionCounts,
    pub mcc: f64,
    /// Path-level area under the precision-recall curve; absent when a
    /// single estimate was evaluated.
    pub auprc: Option<f64>,
    pub tse_theta: f64,
    pub tse_omega: f64,
    pub max_error_theta: f64,
    pub max_error_omega: f64,
    /// Fraction of true-support orientations whose estimated sign
    /// matches the truth (zero estimates count as mismatches).
    pub sign_accuracy: f64,
}

/// Selected unordered pairs of an asymmetric estimate (OR rule).
fn selected_pairs(estimate: &SparseSquare) -> BTreeSet<(usize, usize)> {
    let mut pairs = BTreeSet::new();
    for (i, j, v) in estimate.iter() {
        if i != j && v != 0.0 {
            pairs.insert((i.min(j), i.max(j)));
        }
    }
    pairs
}

/// Confusion counts of the OR-rule selected edges against the truth.
pub fn confusion(estimate: &SparseSquare, truth: &GraphModel) -> Result<ConfusionCounts> {
    if estimate.dim() != truth.p {
        return Err(Error::DimensionMismatch {
            expected: truth.p,
            got: estimate.dim(),
            context: "estimate vs truth dimension",
        });
    }
    let selected = selected_pairs(estimate);
    let truth_set: BTreeSet<(usize, usize)> = truth.edges.iter().copied().collect();
    let tp = selected.intersection(&truth_set).count();
    let fp = selected.len() - tp;
    let fn_ = truth_set.len() - tp;
    let total = truth.p * (truth.p - 1) / 2;
    let tn = total - tp - fp - fn_;
    Ok(ConfusionCounts { tp, fp, fn_, tn })
}

/// Matthews correlation coefficient; 0 by convention when any factor of
/// the denominator vanishes.
pub fn mcc(c: &ConfusionCounts) -> f64 {
    let (tp, fp, fn_, tn) = (c.tp as f64, c.fp as f64, c.fn_ as f64, c.tn as f64);
    let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    if denom == 0.0 {
        return 0.0;
    }
    (tp * tn - fp * fn_) / denom.sqrt()
}

/// Area under the precision-recall curve traced by a penalty path.
///
/// Points are sorted by recall, deduplicated by keeping the best
/// precision per recall level, anchored at recall 0, and integrated
/// with the step rule that holds precision from the higher-recall side.
/// The curve is truncated at the largest achieved recall (no
/// extrapolation to recall 1). All-diagonal paths score 0.
pub fn auprc(path: &PathResult, truth: &GraphModel) -> Result<f64> {
    if path.fits.len() < 2 {
        return Err(Error::InvalidParameter(
            "a precision-recall curve needs at least 2 fits".into(),
        ));
    }
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(path.fits.len());
    for fit in &path.fits {
        let c = confusion(&fit.omega, truth)?;
        if c.tp + c.fp == 0 {
            continue; // empty selection contributes no curve point
        }
        points.push((c.recall(), c.precision()));
    }
    if points.is_empty() {
        return Ok(0.0);
    }
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite PR points"));
    // best precision at each recall level
    let mut dedup: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for (r, p) in points {
        match dedup.last_mut() {
            Some(last) if last.0 == r => last.1 = last.1.max(p),
            _ => dedup.push((r, p)),
        }
    }
    let mut area = 0.0;
    let mut prev_recall = 0.0;
    for (r, p) in dedup {
        area += (r - prev_recall) * p;
        prev_recall = r;
    }
    Ok(area)
}

/// Per-lambda (recall, precision) rows for the PR-curve export.
pub fn pr_curve(path: &PathResult, truth: &GraphModel) -> Result<Vec<(f64, f64, f64)>> {
    let mut rows = Vec::with_capacity(path.fits.len());
    for (fit, &lambda) in path.fits.iter().zip(&path.lambdas) {
        let c = confusion(&fit.omega, truth)?;
        rows.push((lambda, c.recall(), c.precision()));
    }
    Ok(rows)
}

/// Squared Frobenius distance over all p^2 positions.
pub fn total_squared_error(estimate: &SparseSquare, truth: &SparseSquare) -> Result<f64> {
    check_same_dim(estimate, truth)?;
    let d = estimate.frobenius_distance(truth);
    Ok(d * d)
}

/// Largest entrywise absolute deviation over all p^2 positions.
pub fn max_error(estimate: &SparseSquare, truth: &SparseSquare) -> Result<f64> {
    check_same_dim(estimate, truth)?;
    let mut worst = 0.0f64;
    for i in 0..estimate.dim() {
        let (ac, av) = estimate.row(i);
        let (bc, bv) = truth.row(i);
        let (mut a, mut b) = (0usize, 0usize);
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
            worst = worst.max(d.abs());
        }
    }
    Ok(worst)
}

/// Fraction of ordered true-support off-diagonal entries with matching
/// estimated sign; zero estimates never match.
pub fn sign_accuracy(estimate: &SparseSquare, truth: &GraphModel) -> Result<f64> {
    if estimate.dim() != truth.p {
        return Err(Error::DimensionMismatch {
            expected: truth.p,
            got: estimate.dim(),
            context: "estimate vs truth dimension",
        });
    }
    let mut hits = 0usize;
    let mut total = 0usize;
    for (i, j, v) in truth.omega_true.iter() {
        if i == j || v == 0.0 {
            continue;
        }
        total += 1;
        let e = estimate.get(i, j);
        if e != 0.0 && e.signum() == v.signum() {
            hits += 1;
        }
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(hits as f64 / total as f64)
}

/// Assembles the full report for one estimate, with the AUPRC attached
/// when the estimate came from a path.
pub fn evaluate(
    estimate: &SparseSquare,
    truth: &GraphModel,
    path: Option<&PathResult>,
) -> Result<EvalReport> {
    let counts = confusion(estimate, truth)?;
    let theta_hat = omega_to_theta(estimate)?;
    Ok(EvalReport {
        counts,
        mcc: mcc(&counts),
        auprc: match path {
            Some(p) => Some(auprc(p, truth)?),
            None => None,
        },
        tse_theta: total_squared_error(&theta_hat, &truth.theta_true)?,
        tse_omega: total_squared_error(estimate, &truth.omega_true)?,
        max_error_theta: max_error(&theta_hat, &truth.theta_true)?,
        max_error_omega: max_error(estimate, &truth.omega_true)?,
        sign_accuracy: sign_accuracy(estimate, truth)?,
    })
}

fn check_same_dim(a: &SparseSquare, b: &SparseSquare) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: b.dim(),
            got: a.dim(),
            context: "matrix dimensions",
        });
    }
    Ok(())
}
