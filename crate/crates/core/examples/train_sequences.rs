//! Neuroevolution of a length-M decoupling sequence on a 3-spin chain.
//!
//! ```text
//! cargo run --release --example train_sequences -- [M] [generations] [seed] [checkpoint dir]
//! ```
use std::path::PathBuf;
use std::time::Instant;

use decoupling::evolution::{train, EvolutionConfig, TrainOptions};
use decoupling::quantum::{propagator_fidelity, reward, CouplingGraph, Operator, SpinBasis};
use decoupling::sequence::{compile_cycle, sequence_library, ImperfectionSet};

fn main() -> decoupling::Result<()> {
    let mut args = std::env::args().skip(1);
    let m: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(12);
    let generations: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(100);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);
    let checkpoint_dir = args.next().map(PathBuf::from);

    let mut cfg = EvolutionConfig::new(201, 21, generations, vec![m], seed);
    cfg.mutation_power = 0.05;

    let basis = SpinBasis::open(cfg.n_spins)?;
    let graph = CouplingGraph::nearest_neighbor(&basis, cfg.coupling);
    let reference = sequence_library("Angle12")?.with_tau(cfg.tau)?;
    let u = compile_cycle(&reference, &ImperfectionSet::ideal(), &basis, &graph)?;
    let angle12 = reward(propagator_fidelity(&u, reference.len(), &Operator::identity(basis.dim()))?)?;
    println!("Angle12 ideal reward: {angle12:.4}");

    let start = Instant::now();
    let out = train(&cfg, &TrainOptions { workers: None, checkpoint_dir })?;
    for r in out.records.iter().step_by((generations / 10).max(1)) {
        println!("g={:>4} elite={:.4} parents={:.4} population={:.4}", r.g, r.elite_reward, r.mean_parent_reward, r.mean_population_reward);
    }
    println!("best reward {:.4}: {}", out.best_reward, out.best_sequence.tokens());
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
