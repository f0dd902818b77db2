//! Boundary processes computed three ways: from the folded path, from the
//! distance to K_alpha, and from local times of the unfolded coordinates.

use weylfold::stochastic::{
    boundary_via_distance, d3_indicator_identity, local_time_occupation, map_paths, mean_se, orbit_sum_local_times,
    tanaka_residual, Band, SimConfig,
};
use weylfold::{build_dihedral, generate_group, FoldingOperator};

fn main() -> weylfold::Result<()> {
    let line = SimConfig::new(vec![0.0], 1.0, 1e-5, 3, 200)?;
    let res = map_paths(&line, |_, p| {
        let z = p.project_onto(&[1.0]);
        let lt = local_time_occupation(&z, line.dt, line.default_epsilon(), Band::Symmetric)?;
        Ok::<_, weylfold::Error>((tanaka_residual(&z, &lt)?, lt.final_value()))
    })
    .into_iter()
    .collect::<weylfold::Result<Vec<_>>>()?;
    let (r, _) = mean_se(&res.iter().map(|x| x.0).collect::<Vec<_>>());
    let (l, _) = mean_se(&res.iter().map(|x| x.1).collect::<Vec<_>>());
    println!("linear BM: mean L_1 = {l:.3} (sqrt(2/pi) = {:.3}), mean Tanaka residual {r:.4}", (2.0 / std::f64::consts::PI).sqrt());

    let rs = build_dihedral(4)?;
    let w = generate_group(&rs)?;
    let op = FoldingOperator::new(&rs)?;
    let cfg = SimConfig::new(vec![0.0, 0.0], 1.0, 1e-5, 11, 40)?;
    let eps = cfg.default_epsilon();
    for a in 0..rs.rank() {
        let pairs = map_paths(&cfg, |_, raw| {
            Ok::<_, weylfold::Error>((
                orbit_sum_local_times(&w, &rs, raw, a, eps)?.final_value(),
                boundary_via_distance(&op, raw, a, eps)?.final_value(),
            ))
        })
        .into_iter()
        .collect::<weylfold::Result<Vec<_>>>()?;
        let (o, _) = mean_se(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
        let (b, _) = mean_se(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
        println!("dihedral(4), root {:?}: orbit sum {o:.4}, distance route {b:.4}", rs.simple()[a].as_slice());
    }

    let d3 = build_dihedral(3)?;
    let w3 = generate_group(&d3)?;
    match orbit_sum_local_times(&w3, &d3, &weylfold::stochastic::simulate_bm(&cfg, 0), 0, eps) {
        Ok(_) => println!("dihedral(3) orbit sum unexpectedly accepted"),
        Err(e) => println!("dihedral(3): {e}"),
    }
    let op3 = FoldingOperator::new(&d3)?;
    let ids = map_paths(&cfg, |_, raw| d3_indicator_identity(&op3, &d3, raw, eps))
        .into_iter()
        .collect::<weylfold::Result<Vec<_>>>()?;
    let (rel, se) = mean_se(&ids.iter().map(|i| i.relative).collect::<Vec<_>>());
    println!("dihedral(3) half-line identity for L^beta: mean relative residual {rel:.4} +- {se:.4}");
    Ok(())
}
