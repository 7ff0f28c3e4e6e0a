//! Sampling sequences from a randomly initialized policy and round-tripping
//! its genome through the checkpoint format.
//!
//! ```text
//! cargo run --release --example policy_rollout -- [genome file]
//! ```
use decoupling::policy::{init_genome, load_genome, rollout, save_genome, GenomeShape, PolicyMode};
use rand::SeedableRng;

fn main() -> decoupling::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "policy.genome".into());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    for mode in [PolicyMode::Full5, PolicyMode::Yxx2] {
        let shape = GenomeShape::for_mode(mode, 12, 64, 64);
        let genome = init_genome(shape, mode, &mut rng)?;
        println!("{mode:?}: {} parameters", shape.param_count());
        for _ in 0..3 {
            println!("  {}", rollout(&genome, 12, 5e-6, &mut rng)?.tokens());
        }
        save_genome(&genome, path.as_ref())?;
        assert_eq!(load_genome(path.as_ref())?, genome);
    }
    println!("genome written to {path}");
    Ok(())
}
