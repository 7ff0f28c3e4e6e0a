//! Toggling-frame trajectories and average Hamiltonians of the bundled sequences.
//!
//! ```text
//! cargo run --release --example toggling_frames
//! ```
use decoupling::aht::{avg_hamiltonian_report, trajectory};
use decoupling::quantum::{CouplingGraph, SpinBasis};
use decoupling::sequence::{library_names, sequence_library, ImperfectionSet};

fn main() -> decoupling::Result<()> {
    let basis = SpinBasis::open(4)?;
    let graph = CouplingGraph::nearest_neighbor(&basis, 1.0);
    let imp = ImperfectionSet::ideal().with_offset(1.0);
    println!("{:<10} {:>6} {:>9} {:>22} {:>10} {:>10}", "sequence", "cyclic", "tallies", "field", "|H1 int|", "|H1 all|");
    for name in library_names() {
        let seq = sequence_library(name)?.with_tau(1.0)?;
        let r = avg_hamiltonian_report(&seq, Some((&basis, &graph, &imp)))?;
        let f = r.zeroth.field;
        let h1 = r.first_order.expect("system given");
        println!(
            "{name:<10} {:>6} {:>9} {:>22} {:>10.2e} {:>10.2e}",
            r.cyclic,
            format!("{:?}", r.zeroth.tallies),
            format!("({:.3},{:.3},{:.3})", f[0], f[1], f[2]),
            h1.interaction,
            h1.all
        );
    }
    let wahuha = sequence_library("WAHUHA")?;
    let traj = trajectory(&wahuha);
    println!("\nWAHUHA toggled z axis per interval: {}", traj.interaction_labels());
    for (k, iv) in traj.intervals().iter().enumerate() {
        println!("  interval {k}: field along {}", iv.field);
    }
    Ok(())
}
