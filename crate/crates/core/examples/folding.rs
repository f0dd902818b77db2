//! Folds points onto the chamber and lists the facets of the hyperplane
//! arrangement with their fibers.

use weylfold::folding::{distance_oracle, enumerate_facets, facet_signature, orbit_project_oracle, DEFAULT_SIGNATURE_TOL};
use weylfold::{build_dihedral, generate_group, FoldingOperator, Vector};

fn main() -> weylfold::Result<()> {
    let rs = build_dihedral(3)?;
    let w = generate_group(&rs)?;
    let op = FoldingOperator::new(&rs)?;
    println!("word for w0: {:?}", op.word());

    for p in [[1.0, -2.0], [-0.5, 0.2], [-1.0, -1.0], [2.0, 0.5]] {
        let x = Vector::from_column_slice(&p);
        let px = op.project(&x);
        let oracle = orbit_project_oracle(&w, &rs, &x)?;
        println!(
            "x = {:>5?} -> pi(x) = ({:.4}, {:.4})  oracle ({:.4}, {:.4})  signature {}",
            p,
            px[0],
            px[1],
            oracle[0],
            oracle[1],
            facet_signature(&rs, &x, DEFAULT_SIGNATURE_TOL)
        );
        for a in 0..rs.rank() {
            println!(
                "    d(x, K_{a}) = {:.6}  (cone projection {:.6})",
                op.chamber_distance(a, x.as_slice()),
                distance_oracle(&rs, &w, a, &x)?
            );
        }
    }

    println!("\nfacets on exactly one hyperplane:");
    for f in enumerate_facets(&rs, &w, DEFAULT_SIGNATURE_TOL)? {
        println!("  {f}");
    }
    Ok(())
}
