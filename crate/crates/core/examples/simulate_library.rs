//! Fidelity and collective autocorrelations of every bundled sequence.
//!
//! ```text
//! cargo run --release --example simulate_library -- [n_spins] [tau_us]
//! ```
use decoupling::harness::evaluate_sequence;
use decoupling::quantum::{CouplingGraph, SpinBasis};
use decoupling::sequence::{library_names, sequence_library, ImperfectionSet};

fn main() -> decoupling::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(6);
    let tau_us: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(5.0);

    let basis = SpinBasis::periodic(n)?;
    let graph = CouplingGraph::nearest_neighbor(&basis, 32.7e3);
    let conditions = [
        ("ideal", ImperfectionSet::ideal()),
        ("eps=0.02", ImperfectionSet::ideal().with_angle_error(0.02)),
        ("offset=2J", ImperfectionSet::ideal().with_offset(2.0 * 32.7e3)),
        ("t_w=1us", ImperfectionSet::ideal().with_pulse_width(1e-6)),
    ];
    print!("{:<10}", "sequence");
    for (label, _) in &conditions {
        print!(" {label:>12}");
    }
    println!("   (1-F, N={n} periodic, tau={tau_us} us)");
    for name in library_names() {
        let seq = sequence_library(name)?.with_tau(tau_us * 1e-6)?;
        print!("{name:<10}");
        for (_, imp) in &conditions {
            let e = evaluate_sequence(&seq, &basis, &graph, imp, 72)?;
            print!(" {:>12.3e}", e.infidelity);
        }
        println!();
    }
    Ok(())
}
