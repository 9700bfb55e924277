use accord_core::sim::*;
use accord_core::solver::{Init, PenaltyPolicy, SolverConfig};

#[test]
fn diag_hub_pipeline() {
    let t0 = std::time::Instant::now();
    let edges = gen_cluster_graph(ClusterKind::Hub, 1).unwrap();
    let model = build_precision_bounded(&edges, 1000, 2).unwrap();
    let data = sample_gaussian(&model.theta_true, 500, 3).unwrap();
    eprintln!("setup {:?}, min eig {:?}", t0.elapsed(), model.generator.min_eigenvalue);
    let _ = data.gram_cached(4096).unwrap();
    let grid = accord_core::select::lambda_grid(&data, 30, 0.01).unwrap();
    eprintln!("lambda_max {:.4}, L {:.3}", grid[0], data.spectral_bound(1e-6));
    let mut warm: Option<accord_core::SparseSquare> = None;
    for &lambda in grid.iter() {
        let mut cfg = SolverConfig::uniform(lambda).unwrap();
        cfg.tol = 1e-6;
        cfg.max_iter = 500;
        cfg.certify = false;
        if let Some(w) = warm.take() {
            cfg.init = Init::WarmStart(w);
        }
        let t = std::time::Instant::now();
        let fit = accord_core::solver::solve(&data, &cfg).unwrap();
        let c = accord_core::metrics::confusion(&fit.omega, &model).unwrap();
        eprintln!(
            "lambda {:.5}: it {} conv {} nnz {} tp {} fp {} rec {:.3} prec {:.3} dt {:?}",
            lambda, fit.iterations, fit.converged, fit.omega.nnz(), c.tp, c.fp,
            c.recall(), c.precision(), t.elapsed()
        );
        warm = Some(fit.omega);
    }
    let pen = PenaltyPolicy::uniform(0.0).unwrap();
    let _ = pen;
    eprintln!("total {:?}", t0.elapsed());
}
