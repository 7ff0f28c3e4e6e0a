//! Infidelity against pulse interval and the fitted log-log slopes.
//!
//! ```text
//! cargo run --release --example tau_scaling -- [n_spins]
//! ```
use decoupling::harness::{run_sweep, scaling_fit, SweepAxis, SweepSpec};

fn main() -> decoupling::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(6);
    let grid: Vec<f64> = (0..9).map(|k| 1e-6 * 10f64.powf(k as f64 / 8.0)).collect();
    for name in ["Ideal6", "Angle12", "yxx24", "yxx48", "Cory48"] {
        let mut spec = SweepSpec::new(name, SweepAxis::Tau, grid.clone());
        spec.n_spins = n;
        let result = run_sweep(&spec)?;
        let fit = scaling_fit(&result, Some([grid[0], grid[8]]))?;
        let curve: Vec<String> = result.points.iter().map(|p| format!("{:.1e}", p.infidelity)).collect();
        println!("{name:<8} slope {:5.2} ± {:.2}   {}", fit.slope, fit.stderr, curve.join(" "));
    }
    Ok(())
}
