//! The simple random walk on the triangular lattice, folded onto the
//! chamber, against its transition table.

use weylfold::lattice::{empirical_reflected_transitions, ChainConfig, StateClass};

fn main() -> weylfold::Result<()> {
    let steps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1_000_000);
    let report = empirical_reflected_transitions(&ChainConfig::new(steps, 42))?;
    for class in StateClass::ALL {
        println!("{} ({} visits)", class.name(), report.visits.get(&class).copied().unwrap_or(0));
        for row in report.rows.iter().filter(|r| r.class == class) {
            println!("    {:>5}  {:.4}  (q = {:.4})", row.mv.to_string(), row.frequency, row.expected);
        }
    }
    println!("max deviation {:.4}", report.max_abs_deviation);
    for (class, p) in &report.homogeneity_pvalues {
        println!("same law from every pre-image chamber, {}: p = {p:.3}", class.name());
    }
    if !report.undersampled.is_empty() {
        println!("undersampled: {:?}", report.undersampled);
    }
    Ok(())
}
