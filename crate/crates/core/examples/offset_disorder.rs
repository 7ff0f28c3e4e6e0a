//! First-order equivalence of a uniform offset and random on-site disorder
//! for yxx sequences.
//!
//! ```text
//! cargo run --release --example offset_disorder -- [realizations]
//! ```
use decoupling::aht::offset_disorder_equivalence;
use decoupling::quantum::{CouplingGraph, SpinBasis};
use decoupling::sequence::sequence_library;

fn main() -> decoupling::Result<()> {
    let realizations: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20);
    let basis = SpinBasis::open(4)?;
    let graph = CouplingGraph::nearest_neighbor(&basis, 1.0);
    for name in ["yxx48", "yxx24"] {
        let r = offset_disorder_equivalence(&sequence_library(name)?, &basis, &graph, realizations, 7)?;
        let worst = r.disorder.iter().map(|t| t.cross_norm.max(t.field_norm)).fold(0.0, f64::max);
        println!(
            "{name}: offset cross {:.2e}, worst disorder term {:.2e} over {} realizations, equivalent = {}",
            r.offset.cross_norm,
            worst,
            r.disorder.len(),
            r.equivalent
        );
    }
    match offset_disorder_equivalence(&sequence_library("Angle12")?, &basis, &graph, 1, 0) {
        Err(e) => println!("Angle12 rejected: {e}"),
        Ok(_) => println!("Angle12 unexpectedly accepted"),
    }
    Ok(())
}
