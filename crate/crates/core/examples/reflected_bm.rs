//! Folds planar Brownian paths and splits the folded path into a martingale
//! part and boundary pushes.

use weylfold::stochastic::{decompose_folded, fold_path, map_paths, mean_se, SimConfig};
use weylfold::{build_dihedral, FoldingOperator};

fn main() -> weylfold::Result<()> {
    for m in [3, 4] {
        let rs = build_dihedral(m)?;
        let op = FoldingOperator::new(&rs)?;
        let cfg = SimConfig::new(vec![0.0, 0.0], 1.0, 1e-5, 7, 40)?;
        let eps = cfg.default_epsilon();
        let reports = map_paths(&cfg, |_, raw| decompose_folded(&op, raw, &fold_path(&op, raw), eps, eps))
            .into_iter()
            .collect::<weylfold::Result<Vec<_>>>()?;
        let qv: Vec<f64> = reports.iter().map(|r| r.qv_error).collect();
        let off: Vec<f64> = reports.iter().map(|r| r.qv_offdiag).collect();
        let (q, qse) = mean_se(&qv);
        let (o, _) = mean_se(&off);
        println!("dihedral({m}): |<M>_1 - I| = {q:.4} +- {qse:.4}, off-diagonal {o:.4}");
        for a in 0..rs.rank() {
            let l: Vec<f64> = reports.iter().map(|r| r.local_times[a].final_value()).collect();
            let (mean, se) = mean_se(&l);
            println!("    E[L^{a}_1] = {mean:.4} +- {se:.4}");
        }
        let sample = &reports[0];
        println!(
            "    path 0: <M>_1 = {:?}, boundary-support leak {:.2e}",
            sample.qv.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
            sample.boundary_support_leak
        );
    }
    Ok(())
}
