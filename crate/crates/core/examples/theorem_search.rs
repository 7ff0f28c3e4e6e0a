//! Exhaustive search for short decoupling cycles.
//!
//! ```text
//! cargo run --release --example theorem_search -- 8
//! ```
use decoupling::aht::theorem1_enumerate;

fn main() -> decoupling::Result<()> {
    let max_len = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(6);
    let report = theorem1_enumerate(max_len)?;
    println!("{:>3} {:>10} {:>8} {:>8} {:>8} {:>8}", "L", "sequences", "cyclic", "zeroth", "first", "passing");
    for r in &report.lengths {
        println!(
            "{:>3} {:>10} {:>8} {:>8} {:>8} {:>8}",
            r.length, r.sequences, r.frame_cyclic, r.zeroth_cancelled, r.first_cancelled, r.passing
        );
    }
    if let Some(six) = report.lengths.iter().find(|r| r.length == 6) {
        for s in six.passing_sequences.iter().take(8) {
            println!("  {s}");
        }
    }
    println!("only multiples of 6 pass: {}", report.holds);
    Ok(())
}
