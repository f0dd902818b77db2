//! The reflected heat kernel: normalization, boundary behaviour and
//! agreement with folded Gaussian samples.

use weylfold::density::{heat_equation_residual, mc_density_check, neumann_check, random_wall_points, total_mass, HeatKernel};
use weylfold::rng::stream_rng;
use weylfold::{build_classical, build_dihedral, generate_group, ClassicalFamily, FoldingOperator};

fn main() -> weylfold::Result<()> {
    for rs in [build_dihedral(3)?, build_dihedral(4)?, build_classical(ClassicalFamily::A, 2)?] {
        let w = generate_group(&rs)?;
        let x = (rs.chamber_point() * 0.4).as_slice().to_vec();
        let k = HeatKernel::new(&rs, &w, 1.0)?;
        print!("{:<12} c0 = {:.6}", rs.family().to_string(), k.c0());
        for t in [0.5, 1.0, 2.0] {
            print!("  mass(t={t}) - 1 = {:+.1e}", total_mass(&k.with_time(t)?, &x, 400)? - 1.0);
        }
        println!();

        let walls = random_wall_points(&rs, 50, 0.05, 3.0, &mut stream_rng(1, 0));
        let n = neumann_check(&k, &x, &walls, 1e-4)?;
        let interior: Vec<Vec<f64>> = (1..=5).map(|i| (rs.chamber_point() * (0.3 * i as f64)).as_slice().to_vec()).collect();
        println!(
            "    normal derivative {:.1e}, tangential {:.2}, heat residual {:.1e}",
            n.max_relative_normal,
            n.max_relative_tangential,
            heat_equation_residual(&k, &x, &interior, 1e-3)?
        );

        let op = FoldingOperator::new(&rs)?;
        let mc = mc_density_check(&k, &op, &vec![0.0; rs.dim()], 1_000_000, 20, 4.0, 9)?;
        println!("    Monte Carlo: TV {:.4}, chi2 {:.1} on {} dof (p = {:.3})", mc.tv_distance, mc.chi2, mc.dof, mc.pvalue);
    }
    Ok(())
}
