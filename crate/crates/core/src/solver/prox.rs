/// Magnitudes below this are treated as exact zeros when assembling the
/// next iterate (the soft threshold already produces exact zeros; this
/// guards against denormals). The diagonal is always kept.
pub(crate) const DROP_TOL: f64 = 1e-300;

/// Closed-form proximal update of a diagonal entry: the minimizer of
/// -log(w) + lambda*w + (w - y)^2 / (2 tau) over w > 0, i.e. the positive
/// root (z + sqrt(z^2 + 4 tau)) / 2 with z = y - tau*lambda.
///
/// Strictly positive for any finite forward-step value `y` and tau > 0.
/// The negative-z branch uses the conjugate form to avoid cancellation.
pub fn prox_diagonal(y: f64, tau: f64, lambda: f64) -> f64 {
    let z = y - tau * lambda;
    let root = (z * z + 4.0 * tau).sqrt();
    if z >= 0.0 {
        0.5 * (z + root)
    } else {
        2.0 * tau / (root - z)
    }
}

/// Soft threshold: sign(y) * (|y| - t)+, the proximal map of t * |.|.
/// An infinite threshold maps everything to exactly zero.
pub fn soft_threshold(y: f64, t: f64) -> f64 {
    let m = y.abs() - t;
    if m > 0.0 {
        m * y.signum()
    } else {
        0.0
    }
}
