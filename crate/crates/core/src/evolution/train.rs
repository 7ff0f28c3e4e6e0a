//! Training loop and checkpoint directory.
//!
//! ```text
//! <dir>/config.json              copy of the EvolutionConfig
//! <dir>/curve.csv                one row per generation (CURVE_HEADER)
//! <dir>/state.json               progress, records and the elite's best sequence
//! <dir>/population.bin           current population (genome files back to back)
//! <dir>/genomes/elite_gNNNN.bin  elite genome after generation NNNN
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{step_generation, stream, Agent, EvolutionConfig, Evaluator, GenerationRecord, StreamTag};
use crate::error::{Error, Result};
use crate::policy::{init_genome, read_genome, write_genome, AgentGenome, GenomeShape};
use crate::sequence::PulseSequence;

pub const CURVE_HEADER: &str = "g,elite_reward,mean_parent_reward,mean_population_reward";
pub const STATE_VERSION: u32 = 1;

const POPULATION_MAGIC: &[u8; 8] = b"DDPOPULN";

#[derive(Clone, Debug, Default)]
pub struct TrainOptions {
    /// Worker threads; `None` uses the global rayon pool. Results do not
    /// depend on this.
    pub workers: Option<usize>,
    pub checkpoint_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub version: u32,
    /// Index into `lengths`.
    pub stage: usize,
    /// Generations completed in the current stage.
    pub generation: usize,
    pub records: Vec<GenerationRecord>,
    /// Reward and tokens carried by the elite.
    pub elite_record: Option<(f64, String)>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub best_reward: f64,
    pub best_sequence: PulseSequence,
    pub elite: AgentGenome,
    pub records: Vec<GenerationRecord>,
}

pub fn train(cfg: &EvolutionConfig, opts: &TrainOptions) -> Result<TrainOutcome> {
    cfg.validate()?;
    if let Some(dir) = &opts.checkpoint_dir {
        fs::create_dir_all(dir.join("genomes"))?;
        write_atomic(&dir.join("config.json"), serde_json::to_string_pretty(cfg)?.as_bytes())?;
    }
    let state = TrainState { version: STATE_VERSION, stage: 0, generation: 0, records: Vec::new(), elite_record: None };
    run(cfg, opts, state, None)
}

/// Continues a run from its checkpoint directory.
pub fn resume(dir: &Path, workers: Option<usize>) -> Result<TrainOutcome> {
    let cfg: EvolutionConfig = serde_json::from_slice(&fs::read(dir.join("config.json"))?)?;
    cfg.validate()?;
    let state: TrainState = serde_json::from_slice(&fs::read(dir.join("state.json"))?)?;
    if state.version != STATE_VERSION {
        return Err(Error::Checkpoint(format!("unsupported state version {}", state.version)));
    }
    let genomes = read_population(&fs::read(dir.join("population.bin"))?)?;
    let record = match &state.elite_record {
        Some((r, tokens)) => Some((*r, PulseSequence::from_tokens(tokens, cfg.tau)?)),
        None => None,
    };
    let population = genomes
        .into_iter()
        .enumerate()
        .map(|(i, genome)| Agent { genome, record: if i == 0 { record.clone() } else { None } })
        .collect();
    let opts = TrainOptions { workers, checkpoint_dir: Some(dir.to_path_buf()) };
    run(&cfg, &opts, state, Some(population))
}

fn initial_population(cfg: &EvolutionConfig, stage: usize) -> Result<Vec<Agent>> {
    let shape = GenomeShape::for_mode(cfg.mode, cfg.m_max(), cfg.hidden[0], cfg.hidden[1]);
    (0..cfg.population)
        .map(|i| {
            let mut rng = stream(cfg.seed, stage as u64, i as u64, 0, StreamTag::Init);
            Ok(Agent { genome: init_genome(shape, cfg.mode, &mut rng)?, record: None })
        })
        .collect()
}

fn run(
    cfg: &EvolutionConfig,
    opts: &TrainOptions,
    mut state: TrainState,
    mut population: Option<Vec<Agent>>,
) -> Result<TrainOutcome> {
    let evaluator = Evaluator::new(cfg)?;
    let pool = match opts.workers {
        Some(n) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?,
        ),
        None => None,
    };
    let mut body = || -> Result<Vec<Agent>> {
        let mut last = Vec::new();
        while state.stage < cfg.lengths.len() {
            if state.generation == cfg.generations {
                state.stage += 1;
                state.generation = 0;
                population = None;
                continue;
            }
            let m = cfg.lengths[state.stage];
            let mut pop = match population.take() {
                Some(p) => p,
                None => initial_population(cfg, state.stage)?,
            };
            for g in state.generation + 1..=cfg.generations {
                let stream_g = (state.stage * cfg.generations + g) as u64;
                let (next, record) = step_generation(&pop, g, stream_g, m, cfg, &evaluator)?;
                pop = next;
                state.generation = g;
                state.elite_record = pop[0].record.as_ref().map(|(r, s)| (*r, s.tokens()));
                state.records.push(record);
                if let Some(dir) = &opts.checkpoint_dir {
                    write_checkpoint(dir, &state, &pop, stream_g)?;
                }
            }
            last = pop.clone();
            population = Some(pop);
        }
        Ok(last)
    };
    let last = match &pool {
        Some(p) => p.install(body)?,
        None => body()?,
    };
    let best = state
        .records
        .iter()
        .fold(None::<&GenerationRecord>, |b, r| match b {
            Some(b) if b.elite_reward >= r.elite_reward => Some(b),
            _ => Some(r),
        })
        .ok_or_else(|| Error::Config("no generations were run".into()))?;
    let elite = match last.first() {
        Some(a) => a.genome.clone(),
        None => match &opts.checkpoint_dir {
            Some(dir) => read_population(&fs::read(dir.join("population.bin"))?)?.swap_remove(0),
            None => return Err(Error::Config("no generations were run".into())),
        },
    };
    Ok(TrainOutcome {
        best_reward: best.elite_reward,
        best_sequence: PulseSequence::from_tokens(&best.best_sequence, cfg.tau)?,
        elite,
        records: state.records,
    })
}

/// Learning curve in CSV form.
pub fn curve_csv(records: &[GenerationRecord]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.g, r.elite_reward, r.mean_parent_reward, r.mean_population_reward
        ));
    }
    out
}

fn write_checkpoint(dir: &Path, state: &TrainState, pop: &[Agent], g: u64) -> Result<()> {
    let mut elite = Vec::new();
    write_genome(&pop[0].genome, &mut elite)?;
    write_atomic(&dir.join("genomes").join(format!("elite_g{g:04}.bin")), &elite)?;
    let mut buf = Vec::new();
    buf.extend_from_slice(POPULATION_MAGIC);
    buf.extend_from_slice(&1u32.to_le_bytes());
    buf.extend_from_slice(&(pop.len() as u64).to_le_bytes());
    for a in pop {
        write_genome(&a.genome, &mut buf)?;
    }
    write_atomic(&dir.join("population.bin"), &buf)?;
    write_atomic(&dir.join("state.json"), serde_json::to_string(state)?.as_bytes())?;
    write_atomic(&dir.join("curve.csv"), curve_csv(&state.records).as_bytes())
}

fn read_population(bytes: &[u8]) -> Result<Vec<AgentGenome>> {
    if bytes.len() < 20 || &bytes[..8] != POPULATION_MAGIC {
        return Err(Error::Checkpoint("bad population file header".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != 1 {
        return Err(Error::Checkpoint(format!("unsupported population version {version}")));
    }
    let count = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
    let mut rest = &bytes[20..];
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(read_genome(&mut rest)?);
    }
    if !rest.is_empty() {
        return Err(Error::Checkpoint("trailing bytes in population file".into()));
    }
    Ok(out)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> EvolutionConfig {
        let mut c = EvolutionConfig::new(7, 3, 3, vec![6], 11);
        c.hidden = [8, 8];
        c
    }

    #[test]
    fn records_and_monotone_elite() {
        let out = train(&cfg(), &TrainOptions::default()).unwrap();
        assert_eq!(out.records.len(), 3);
        assert!(out.records.windows(2).all(|w| w[1].elite_reward >= w[0].elite_reward));
        assert_eq!(out.best_reward, out.records.last().unwrap().elite_reward);
        let mut one = cfg();
        one.generations = 1;
        assert_eq!(train(&one, &TrainOptions::default()).unwrap().records.len(), 1);
    }

    #[test]
    fn checkpoint_resume_matches_uninterrupted_run() {
        let full_dir = tempfile::tempdir().unwrap();
        let opts = TrainOptions { workers: Some(1), checkpoint_dir: Some(full_dir.path().to_path_buf()) };
        let full = train(&cfg(), &opts).unwrap();
        let curve = fs::read_to_string(full_dir.path().join("curve.csv")).unwrap();
        assert_eq!(curve.lines().count(), 4);
        assert!(curve.starts_with(CURVE_HEADER));
        assert!(full_dir.path().join("genomes/elite_g0003.bin").exists());

        let one_dir = tempfile::tempdir().unwrap();
        let first = step_one(&cfg(), one_dir.path());
        let resumed = resume(one_dir.path(), Some(2)).unwrap();
        assert_eq!(first, 1);
        assert_eq!(curve_csv(&resumed.records), curve);
        assert_eq!(fs::read_to_string(one_dir.path().join("curve.csv")).unwrap(), curve);
        assert_eq!(resumed.elite, full.elite);
    }

    /// Runs one generation of `cfg` into `dir`, leaving a resumable checkpoint.
    fn step_one(c: &EvolutionConfig, dir: &Path) -> usize {
        fs::create_dir_all(dir.join("genomes")).unwrap();
        fs::write(dir.join("config.json"), serde_json::to_string(c).unwrap()).unwrap();
        let ev = Evaluator::new(c).unwrap();
        let pop = initial_population(c, 0).unwrap();
        let (next, record) = step_generation(&pop, 1, 1, c.lengths[0], c, &ev).unwrap();
        let state = TrainState {
            version: STATE_VERSION,
            stage: 0,
            generation: 1,
            records: vec![record],
            elite_record: next[0].record.as_ref().map(|(r, s)| (*r, s.tokens())),
        };
        write_checkpoint(dir, &state, &next, 1).unwrap();
        state.generation
    }

    #[test]
    fn worker_count_does_not_change_the_curve() {
        let a = train(&cfg(), &TrainOptions { workers: Some(1), checkpoint_dir: None }).unwrap();
        let b = train(&cfg(), &TrainOptions { workers: Some(3), checkpoint_dir: None }).unwrap();
        assert_eq!(curve_csv(&a.records), curve_csv(&b.records));
        assert_eq!(a.elite, b.elite);
    }

    #[test]
    fn curriculum_runs_each_length() {
        let mut c = cfg();
        c.lengths = vec![3, 6];
        c.generations = 2;
        let out = train(&c, &TrainOptions::default()).unwrap();
        let lengths: Vec<_> = out.records.iter().map(|r| (r.g, r.length)).collect();
        assert_eq!(lengths, vec![(1, 3), (2, 3), (3, 6), (4, 6)]);
    }

    #[test]
    fn population_file_is_validated() {
        assert!(read_population(b"short").is_err());
        let mut buf = POPULATION_MAGIC.to_vec();
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&1u64.to_le_bytes());
        assert!(read_population(&buf).is_err());
    }
}
