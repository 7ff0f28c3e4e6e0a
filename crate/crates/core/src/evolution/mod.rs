//! Neuroevolution of sequence policies: evaluation, truncation selection,
//! elite re-evaluation, decaying Gaussian mutation and the training loop.

mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{rollout, AgentGenome, PolicyMode};
use crate::quantum::{propagator_fidelity, reward, Boundary, CouplingGraph, Operator, SpinBasis, MAX_SPINS};
use crate::sequence::{CycleCompiler, ImperfectionSet, PulseSequence};

pub use train::{curve_csv, resume, train, TrainOptions, TrainOutcome, TrainState, CURVE_HEADER, STATE_VERSION};

pub const CONFIG_VERSION: u32 = 1;

fn default_rollouts() -> usize {
    3
}
fn default_elite_rollouts() -> usize {
    5
}
fn default_hidden() -> [usize; 2] {
    [64, 64]
}
fn default_conditions() -> Vec<ImperfectionSet> {
    vec![ImperfectionSet::ideal()]
}
fn default_spins() -> usize {
    3
}
fn default_boundary() -> Boundary {
    Boundary::Open
}
fn default_coupling() -> f64 {
    32.7e3
}
fn default_tau() -> f64 {
    5e-6
}

/// Training configuration (JSON document, see `docs/formats.md`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub version: u32,
    /// `N_p`.
    pub population: usize,
    /// `P`.
    pub parents: usize,
    /// `G`.
    pub generations: usize,
    /// `μ₀`.
    pub mutation_power: f64,
    #[serde(default = "default_rollouts")]
    pub rollouts_per_agent: usize,
    #[serde(default = "default_elite_rollouts")]
    pub elite_rollouts: usize,
    /// Sequence lengths, trained in succession with fresh populations.
    pub lengths: Vec<usize>,
    #[serde(default = "default_mode")]
    pub mode: PolicyMode,
    #[serde(default = "default_hidden")]
    pub hidden: [usize; 2],
    /// Input capacity of the network; defaults to the largest length.
    #[serde(default)]
    pub m_max: Option<usize>,
    /// Reward is the minimum over these conditions.
    #[serde(default = "default_conditions")]
    pub conditions: Vec<ImperfectionSet>,
    #[serde(default = "default_spins")]
    pub n_spins: usize,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
    /// Nearest-neighbour coupling `J` (rad/s).
    #[serde(default = "default_coupling")]
    pub coupling: f64,
    /// Pulse interval (s).
    #[serde(default = "default_tau")]
    pub tau: f64,
    pub seed: u64,
}

fn default_mode() -> PolicyMode {
    PolicyMode::Full5
}

impl EvolutionConfig {
    /// Defaults for everything but the population sizes, lengths and seed.
    pub fn new(population: usize, parents: usize, generations: usize, lengths: Vec<usize>, seed: u64) -> Self {
        Self {
            version: CONFIG_VERSION,
            population,
            parents,
            generations,
            mutation_power: 0.05,
            rollouts_per_agent: default_rollouts(),
            elite_rollouts: default_elite_rollouts(),
            lengths,
            mode: PolicyMode::Full5,
            hidden: default_hidden(),
            m_max: None,
            conditions: default_conditions(),
            n_spins: default_spins(),
            boundary: default_boundary(),
            coupling: default_coupling(),
            tau: default_tau(),
            seed,
        }
    }

    pub fn m_max(&self) -> usize {
        self.m_max.unwrap_or_else(|| self.lengths.iter().copied().max().unwrap_or(0))
    }

    /// Children per non-elite parent, `(N_p − 1)/(P − 1)`.
    pub fn children_per_parent(&self) -> usize {
        (self.population - 1) / (self.parents - 1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported config version {}", self.version));
        }
        if self.parents < 2 || self.population < self.parents {
            return bad(format!("need population >= parents >= 2, got {} and {}", self.population, self.parents));
        }
        if (self.population - 1) % (self.parents - 1) != 0 {
            return bad(format!(
                "(population - 1) = {} is not a multiple of (parents - 1) = {}",
                self.population - 1,
                self.parents - 1
            ));
        }
        if self.generations == 0 {
            return bad("generations must be at least 1".into());
        }
        if !(self.mutation_power >= 0.0) || !self.mutation_power.is_finite() {
            return bad(format!("mutation_power {} must be finite and non-negative", self.mutation_power));
        }
        if self.rollouts_per_agent == 0 || self.elite_rollouts == 0 {
            return bad("rollout counts must be at least 1".into());
        }
        if self.lengths.is_empty() || self.lengths.contains(&0) {
            return bad("lengths must be a non-empty list of positive lengths".into());
        }
        if self.lengths.iter().any(|&m| m > self.m_max()) {
            return bad(format!("a length exceeds m_max {}", self.m_max()));
        }
        if self.mode == PolicyMode::Yxx2 && self.lengths.iter().any(|m| m % 3 != 0) {
            return bad("yxx2 lengths must be multiples of 3".into());
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer sizes must be positive".into());
        }
        if !(2..=MAX_SPINS).contains(&self.n_spins) {
            return bad(format!("n_spins {} outside 2..={MAX_SPINS}", self.n_spins));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() || !self.coupling.is_finite() {
            return bad("tau must be positive and coupling finite".into());
        }
        if self.conditions.is_empty() {
            return bad("at least one training condition is required".into());
        }
        for c in &self.conditions {
            c.validate(self.tau).map_err(|e| Error::Config(e.to_string()))?;
            if let Some(d) = &c.disorder {
                if d.len() != self.n_spins {
                    return bad(format!("disorder realization has {} fields for {} spins", d.len(), self.n_spins));
                }
            }
        }
        Ok(())
    }
}

/// Compiles and scores sequences on the training system.
#[derive(Debug)]
pub struct Evaluator {
    compilers: Vec<CycleCompiler>,
    identity: Operator,
    tau: f64,
}

impl Evaluator {
    pub fn new(cfg: &EvolutionConfig) -> Result<Self> {
        let basis = SpinBasis::new(cfg.n_spins, cfg.boundary)?;
        let graph = CouplingGraph::nearest_neighbor(&basis, cfg.coupling);
        let compilers =
            cfg.conditions.iter().map(|c| CycleCompiler::new(&basis, &graph, c, cfg.tau)).collect::<Result<_>>()?;
        Ok(Self { compilers, identity: Operator::identity(basis.dim()), tau: cfg.tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Worst-case reward over the training conditions, at effective time `τ`.
    pub fn reward(&self, seq: &PulseSequence) -> Result<f64> {
        let mut worst = f64::INFINITY;
        for c in &self.compilers {
            let u = c.compile(seq.actions());
            let f = propagator_fidelity(&u, seq.len(), &self.identity)?;
            worst = worst.min(reward(f.clamp(0.0, 1.0))?);
        }
        Ok(worst)
    }
}

/// Best of `rollouts` sampled sequences (first one wins ties).
pub fn evaluate_agent<R: Rng + ?Sized>(
    genome: &AgentGenome,
    evaluator: &Evaluator,
    m: usize,
    rollouts: usize,
    rng: &mut R,
) -> Result<(f64, PulseSequence)> {
    let mut best: Option<(f64, PulseSequence)> = None;
    for _ in 0..rollouts.max(1) {
        let seq = rollout(genome, m, evaluator.tau(), rng)?;
        let r = evaluator.reward(&seq)?;
        if best.as_ref().is_none_or(|(b, _)| r > *b) {
            best = Some((r, seq));
        }
    }
    Ok(best.expect("at least one rollout"))
}

/// Indices of the `p` largest rewards, best first; ties go to the lower index.
pub fn select_parents(rewards: &[f64], p: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..rewards.len()).collect();
    let key = |i: usize| if rewards[i].is_nan() { f64::NEG_INFINITY } else { rewards[i] };
    idx.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)));
    idx.truncate(p);
    idx
}

/// Index (into `parents`) with the highest mean reward over fresh rollouts;
/// ties go to the lower index. `rng_for(k)` supplies parent `k`'s stream.
pub fn select_elite<F>(
    parents: &[&AgentGenome],
    evaluator: &Evaluator,
    m: usize,
    rollouts: usize,
    rng_for: F,
) -> Result<usize>
where
    F: Fn(usize) -> ChaCha8Rng + Sync,
{
    let means: Vec<f64> = parents
        .par_iter()
        .enumerate()
        .map(|(k, g)| {
            let mut rng = rng_for(k);
            let mut sum = 0.0;
            for _ in 0..rollouts.max(1) {
                sum += evaluator.reward(&rollout(g, m, evaluator.tau(), &mut rng)?)?;
            }
            Ok(sum / rollouts.max(1) as f64)
        })
        .collect::<Result<_>>()?;
    Ok(select_parents(&means, 1).first().copied().unwrap_or(0))
}

/// `μ(g) = μ₀(1 − g/G)` for `1 ≤ g ≤ G`.
pub fn mutation_power(g: usize, mu0: f64, generations: usize) -> Result<f64> {
    if g == 0 || g > generations {
        return Err(Error::InvalidArgument(format!("generation {g} outside 1..={generations}")));
    }
    Ok(mu0 * ((generations - g) as f64 / generations as f64))
}

/// `genome + μ·z` with `z` i.i.d. standard normal.
pub fn mutate<R: Rng + ?Sized>(genome: &AgentGenome, mu: f64, rng: &mut R) -> Result<AgentGenome> {
    if !(mu >= 0.0) {
        return Err(Error::InvalidArgument(format!("mutation power {mu} must be non-negative")));
    }
    let mut child = genome.clone();
    if mu > 0.0 {
        for p in child.params_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *p += mu * z;
        }
    }
    Ok(child)
}

/// Purpose tags separating the random streams of one generation.
#[derive(Clone, Copy, Debug)]
#[repr(u64)]
pub enum StreamTag {
    Init = 1,
    Rollout = 2,
    Elite = 3,
    Mutation = 4,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for `(seed, generation, agent, index, tag)`.
pub fn stream(seed: u64, generation: u64, agent: u64, index: u64, tag: StreamTag) -> ChaCha8Rng {
    let mut h = splitmix(seed);
    for v in [tag as u64, generation, agent, index] {
        h = splitmix(h ^ splitmix(v));
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// One population member; the elite carries the best sequence recorded so far.
#[derive(Clone, Debug, PartialEq)]
pub struct Agent {
    pub genome: AgentGenome,
    pub record: Option<(f64, PulseSequence)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    /// Generation index, counted across all lengths of a curriculum.
    pub g: usize,
    pub length: usize,
    /// Reward of the best sequence recorded by the elite lineage.
    pub elite_reward: f64,
    pub mean_parent_reward: f64,
    pub mean_population_reward: f64,
    pub best_sequence: String,
}

/// Evaluates, selects and breeds one generation.
///
/// `g` is the 1-based generation within the current length (it sets the
/// mutation power); `stream_g` keys the random streams.
pub fn step_generation(
    population: &[Agent],
    g: usize,
    stream_g: u64,
    m: usize,
    cfg: &EvolutionConfig,
    evaluator: &Evaluator,
) -> Result<(Vec<Agent>, GenerationRecord)> {
    if population.len() != cfg.population {
        return Err(Error::Config(format!("population has {} agents, expected {}", population.len(), cfg.population)));
    }
    let seed = cfg.seed;
    let evaluated: Vec<(f64, PulseSequence)> = population
        .par_iter()
        .enumerate()
        .map(|(i, agent)| {
            let mut rng = stream(seed, stream_g, i as u64, 0, StreamTag::Rollout);
            let (r, seq) = evaluate_agent(&agent.genome, evaluator, m, cfg.rollouts_per_agent, &mut rng)?;
            match &agent.record {
                Some((_, best)) => {
                    let carried = evaluator.reward(best)?;
                    Ok(if carried >= r { (carried, best.clone()) } else { (r, seq) })
                }
                None => Ok((r, seq)),
            }
        })
        .collect::<Result<_>>()?;
    if cfg.mode == PolicyMode::Yxx2 && m % 6 == 0 {
        check_yxx_sample(&evaluated, stream_g)?;
    }
    let rewards: Vec<f64> = evaluated.iter().map(|(r, _)| *r).collect();
    let parents = select_parents(&rewards, cfg.parents);
    let parent_genomes: Vec<&AgentGenome> = parents.iter().map(|&i| &population[i].genome).collect();
    let elite_rank = select_elite(&parent_genomes, evaluator, m, cfg.elite_rollouts, |k| {
        stream(seed, stream_g, k as u64, 0, StreamTag::Elite)
    })?;
    let elite = parents[elite_rank];

    let previous = population.iter().filter_map(|a| a.record.as_ref()).next();
    let (elite_reward, elite_seq) = match previous {
        Some((r, s)) if *r >= evaluated[elite].0 => (*r, s.clone()),
        _ => evaluated[elite].clone(),
    };

    let mu = mutation_power(g, cfg.mutation_power, cfg.generations)?;
    let mut next = Vec::with_capacity(cfg.population);
    next.push(Agent { genome: population[elite].genome.clone(), record: Some((elite_reward, elite_seq.clone())) });
    let breeders: Vec<usize> = parents.iter().copied().filter(|&i| i != elite).collect();
    let per = cfg.children_per_parent();
    let children: Vec<Agent> = (0..breeders.len() * per)
        .into_par_iter()
        .map(|c| {
            let parent = &population[breeders[c / per]].genome;
            let mut rng = stream(seed, stream_g, (c + 1) as u64, 0, StreamTag::Mutation);
            Ok(Agent { genome: mutate(parent, mu, &mut rng)?, record: None })
        })
        .collect::<Result<_>>()?;
    next.extend(children);

    let mean = |v: &mut dyn Iterator<Item = f64>, n: usize| v.sum::<f64>() / n as f64;
    let record = GenerationRecord {
        g: stream_g as usize,
        length: m,
        elite_reward,
        mean_parent_reward: mean(&mut parents.iter().map(|&i| rewards[i]), parents.len()),
        mean_population_reward: mean(&mut rewards.iter().copied(), rewards.len()),
        best_sequence: elite_seq.tokens(),
    };
    Ok((next, record))
}

/// Checks the AHT guarantee of the yxx pattern on about 1% of the evaluated
/// sequences (agents with `i ≡ g mod 100`).
fn check_yxx_sample(evaluated: &[(f64, PulseSequence)], g: u64) -> Result<()> {
    use crate::aht::{first_order_numeric, zeroth_order, TermSelector};
    let basis = SpinBasis::open(4)?;
    let graph = CouplingGraph::nearest_neighbor(&basis, 1.0);
    for (i, (_, seq)) in evaluated.iter().enumerate() {
        if (i as u64 + g) % 100 != 0 {
            continue;
        }
        let unit = seq.clone().with_tau(1.0)?;
        let h1 = first_order_numeric(&unit, &basis, &graph, &ImperfectionSet::ideal(), TermSelector::Interaction)?;
        if !zeroth_order(&unit).interaction_vanishes() || h1.max_norm() > 1e-12 {
            return Err(Error::Numerical(format!("yxx sequence '{}' violates the AHT guarantee", seq.tokens())));
        }
    }
    Ok(())
}
