//! Offset, angle-error and disorder sweeps (mean ± std over realizations).
//!
//! ```text
//! cargo run --release --example robustness_sweeps -- [n_spins] [output dir]
//! ```
use std::path::PathBuf;

use decoupling::harness::{run_sweep, write_sweep, SweepAxis, SweepSpec};

fn main() -> decoupling::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(6);
    let out = args.next().map(PathBuf::from);
    let j = 32.7e3;
    let offsets: Vec<f64> = (0..=10).map(|k| j * 0.5 * k as f64).collect();
    let epsilons: Vec<f64> = (0..=6).map(|k| 0.005 * k as f64).collect();
    for (axis, grid) in [(SweepAxis::Offset, &offsets), (SweepAxis::AngleError, &epsilons), (SweepAxis::DisorderW, &offsets)] {
        println!("{}:", axis.name());
        for name in ["Cory48", "Offset48", "yxx48", "yxx24", "Angle12"] {
            let mut spec = SweepSpec::new(name, axis, grid.clone());
            spec.n_spins = n;
            spec.realizations = 5;
            let r = run_sweep(&spec)?;
            let row: Vec<String> = r
                .points
                .iter()
                .map(|p| match p.infidelity_std {
                    Some(s) => format!("{:.1e}±{:.0e}", p.infidelity, s),
                    None => format!("{:.1e}", p.infidelity),
                })
                .collect();
            println!("  {name:<8} {}", row.join(" "));
            if let Some(dir) = &out {
                write_sweep(&r, &dir.join(format!("{}_{name}.csv", axis.name())))?;
            }
        }
    }
    Ok(())
}
