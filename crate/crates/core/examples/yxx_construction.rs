//! Building yxx24 from Angle12 and checking the yxx guarantee on random sign vectors.
//!
//! ```text
//! cargo run --release --example yxx_construction
//! ```
use decoupling::aht::{first_order_numeric, zeroth_order, TermSelector};
use decoupling::quantum::{CouplingGraph, SpinBasis};
use decoupling::sequence::{
    construct_yxx24, equal_up_to_rotation, sequence_library, symmetrize, yxx_expand, ImperfectionSet,
    PulseSequence,
};
use rand::{Rng, SeedableRng};

fn main() -> decoupling::Result<()> {
    let angle12 = sequence_library("Angle12")?;
    let built = construct_yxx24(&angle12)?;
    let table = sequence_library("yxx24")?;
    println!("constructed: {}", built.tokens());
    println!("table:       {}", table.tokens());
    println!("equal up to rotation: {:?}", equal_up_to_rotation(&built, &table));

    println!("\nsymmetrized x y -x -y: {}", symmetrize(&PulseSequence::from_tokens("x y -x -y", 5e-6)?).tokens());

    let basis = SpinBasis::open(4)?;
    let graph = CouplingGraph::nearest_neighbor(&basis, 1.0);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let len = 6 * rng.random_range(1..=8);
        let signs: Vec<bool> = (0..len).map(|_| rng.random()).collect();
        let seq = yxx_expand(&signs, 1.0)?;
        let z = zeroth_order(&seq);
        assert!(z.interaction_vanishes());
        let h1 = first_order_numeric(&seq, &basis, &graph, &ImperfectionSet::ideal(), TermSelector::Interaction)?;
        worst = worst.max(h1.max_norm());
    }
    println!("largest first-order interaction over 50 random yxx sequences: {worst:.2e}");
    Ok(())
}
