//! Builds the small root systems, their groups and longest words.

use weylfold::rootsys::{build_rank_one, reduced_word_w0};
use weylfold::{build_classical, build_dihedral, generate_group, ClassicalFamily, RootSystem};

fn describe(rs: &RootSystem) -> weylfold::Result<()> {
    let w = generate_group(rs)?;
    let word = reduced_word_w0(rs)?;
    println!(
        "{:<12} dim {} rank {}  |W| = {:>4}  |R+| = {:>2}  w0 = {:?}",
        rs.family().to_string(),
        rs.dim(),
        rs.rank(),
        w.len(),
        rs.positive().len(),
        word
    );
    Ok(())
}

fn main() -> weylfold::Result<()> {
    describe(&build_rank_one())?;
    for m in 2..=6 {
        describe(&build_dihedral(m)?)?;
    }
    for (fam, n) in [(ClassicalFamily::A, 2), (ClassicalFamily::A, 3), (ClassicalFamily::B, 3), (ClassicalFamily::D, 4)] {
        describe(&build_classical(fam, n)?)?;
    }

    let d3 = build_dihedral(3)?;
    println!("\nsimple roots of dihedral(3):");
    for a in d3.simple() {
        println!("  {:?}", a.as_slice());
    }
    println!("\ntext form:\n{}", d3.to_text());
    let back = RootSystem::from_text(&d3.to_text())?;
    assert_eq!(back.positive().len(), 3);
    Ok(())
}
