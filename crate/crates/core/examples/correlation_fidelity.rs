//! Average correlation as a surrogate for propagator fidelity, and the
//! 48τ/96τ averaging rule against exact Floquet evolution to 72τ.
//!
//! ```text
//! cargo run --release --example correlation_fidelity -- [n_spins]
//! ```
use decoupling::harness::{
    average_at_72tau, exact_correlations, fidelity_vs_cavg_report, run_sweep, SweepAxis, SweepSpec,
};
use decoupling::quantum::{autocorrelations, CouplingGraph, SpinBasis};
use decoupling::sequence::{sequence_library, CycleCompiler, ImperfectionSet};

fn main() -> decoupling::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(6);
    let taus: Vec<f64> = (1..=8).map(|k| 1.5e-6 * k as f64).collect();
    let mut results = Vec::new();
    for name in ["Ideal6", "Angle12", "yxx24", "Cory48"] {
        let mut spec = SweepSpec::new(name, SweepAxis::Tau, taus.clone());
        spec.n_spins = n;
        results.push(run_sweep(&spec)?);
    }
    let report = fidelity_vs_cavg_report(&results);
    println!("{} grid points, rank correlation {:?}", report.rows.len(), report.spearman);

    let basis = SpinBasis::periodic(n)?;
    let graph = CouplingGraph::nearest_neighbor(&basis, 32.7e3);
    for name in ["yxx48", "Offset48"] {
        for tau in [2e-6, 5e-6, 10e-6] {
            let seq = sequence_library(name)?.with_tau(tau)?;
            let u = CycleCompiler::new(&basis, &graph, &ImperfectionSet::ideal(), tau)?.compile(seq.actions());
            let c48 = autocorrelations(&u, &basis)?.average();
            let c96 = autocorrelations(&u.mul(&u), &basis)?.average();
            let exact = exact_correlations(&u, seq.len(), 72, &basis)?.average();
            println!(
                "{name} tau={:>4.1}us  rule {:.4}  exact {:.4}",
                tau * 1e6,
                average_at_72tau(c48, c96),
                exact
            );
        }
    }
    Ok(())
}
