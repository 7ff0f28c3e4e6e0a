//! Discrete-action policy: a two-hidden-layer ReLU network mapping the
//! partial sequence to action probabilities, and sequence rollout.

mod checkpoint;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::{Action, PulseSequence, SequenceState};

pub use checkpoint::{load_genome, read_genome, save_genome, write_genome, GENOME_MAGIC, GENOME_VERSION};

/// Action space of the policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyMode {
    /// Any of the five actions at every step.
    Full5,
    /// Only the sign of each pulse in the yxx pattern.
    Yxx2,
}

impl PolicyMode {
    pub fn n_choices(self) -> usize {
        match self {
            PolicyMode::Full5 => 5,
            PolicyMode::Yxx2 => 2,
        }
    }

    /// Action taken for `choice` at step `step`.
    pub fn action(self, step: usize, choice: usize) -> Action {
        match self {
            PolicyMode::Full5 => Action::ALL[choice],
            PolicyMode::Yxx2 => match (step % 3 == 0, choice == 0) {
                (true, true) => Action::Py,
                (true, false) => Action::My,
                (false, true) => Action::Px,
                (false, false) => Action::Mx,
            },
        }
    }

    /// Inverse of [`PolicyMode::action`].
    pub fn choice(self, step: usize, action: Action) -> Option<usize> {
        (0..self.n_choices()).find(|&c| self.action(step, c) == action)
    }
}

/// Layer sizes `(input, h1, h2, output)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenomeShape {
    pub input: usize,
    pub h1: usize,
    pub h2: usize,
    pub output: usize,
}

impl GenomeShape {
    /// Shape for sequences of up to `m_max` steps in `mode`.
    pub fn for_mode(mode: PolicyMode, m_max: usize, h1: usize, h2: usize) -> Self {
        let k = mode.n_choices();
        Self { input: k * m_max + 1, h1, h2, output: k }
    }

    pub fn param_count(&self) -> usize {
        self.input * self.h1 + self.h1 + self.h1 * self.h2 + self.h2 + self.h2 * self.output + self.output
    }

    /// Largest sequence length the input layer can encode.
    pub fn m_max(&self) -> usize {
        (self.input - 1) / self.output
    }

    fn check(&self, mode: PolicyMode) -> Result<()> {
        let k = mode.n_choices();
        if self.output != k || self.input == 0 || (self.input - 1) % k != 0 || self.h1 == 0 || self.h2 == 0 {
            return Err(Error::InvalidArgument(format!("shape {self:?} does not fit mode {mode:?}")));
        }
        Ok(())
    }
}

/// Flat parameter vector `W1, b1, W2, b2, W3, b3`; weights are stored
/// input-major (`W[i·out + j]` connects input `i` to output `j`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentGenome {
    shape: GenomeShape,
    mode: PolicyMode,
    params: Vec<f64>,
}

impl AgentGenome {
    pub fn new(shape: GenomeShape, mode: PolicyMode, params: Vec<f64>) -> Result<Self> {
        shape.check(mode)?;
        if params.len() != shape.param_count() {
            return Err(Error::DimensionMismatch { expected: shape.param_count(), actual: params.len() });
        }
        Ok(Self { shape, mode, params })
    }

    pub fn zeros(shape: GenomeShape, mode: PolicyMode) -> Result<Self> {
        Self::new(shape, mode, vec![0.0; shape.param_count()])
    }

    pub fn shape(&self) -> GenomeShape {
        self.shape
    }

    pub fn mode(&self) -> PolicyMode {
        self.mode
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Output-layer biases (the last `output` parameters).
    pub fn output_bias_mut(&mut self) -> &mut [f64] {
        let n = self.params.len();
        &mut self.params[n - self.shape.output..]
    }
}

/// Gaussian weights with standard deviation `1/√fan_in` per layer.
pub fn init_genome<R: Rng + ?Sized>(shape: GenomeShape, mode: PolicyMode, rng: &mut R) -> Result<AgentGenome> {
    shape.check(mode)?;
    let mut params = Vec::with_capacity(shape.param_count());
    for (fan_in, fan_out) in [(shape.input, shape.h1), (shape.h1, shape.h2), (shape.h2, shape.output)] {
        let std = 1.0 / (fan_in as f64).sqrt();
        for _ in 0..fan_in * fan_out + fan_out {
            let z: f64 = StandardNormal.sample(rng);
            params.push(std * z);
        }
    }
    AgentGenome::new(shape, mode, params)
}

/// One-hot blocks of the choices made so far, zeros for future steps, and
/// `m / m_max` as the last entry.
pub fn encode_state(state: &SequenceState, m_max: usize, mode: PolicyMode) -> Result<Vec<f64>> {
    let m = state.step();
    if m > m_max {
        return Err(Error::InvalidArgument(format!("state step {m} exceeds m_max {m_max}")));
    }
    let k = mode.n_choices();
    let mut out = vec![0.0; k * m_max + 1];
    for (step, &a) in state.actions().iter().enumerate() {
        let c = mode
            .choice(step, a)
            .ok_or_else(|| Error::InvalidArgument(format!("action {a} at step {step} not available in {mode:?}")))?;
        out[step * k + c] = 1.0;
    }
    out[k * m_max] = if m_max == 0 { 0.0 } else { m as f64 / m_max as f64 };
    Ok(out)
}

fn dense(input: &[f64], weights: &[f64], bias: &[f64], relu: bool) -> Vec<f64> {
    let out_dim = bias.len();
    let mut out = bias.to_vec();
    for (i, &x) in input.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let row = &weights[i * out_dim..(i + 1) * out_dim];
        for (o, &w) in out.iter_mut().zip(row) {
            *o += x * w;
        }
    }
    if relu {
        for o in &mut out {
            *o = o.max(0.0);
        }
    }
    out
}

/// Action probabilities: linear, ReLU, linear, ReLU, linear, softmax.
pub fn forward(genome: &AgentGenome, encoding: &[f64]) -> Result<Vec<f64>> {
    let s = genome.shape;
    if encoding.len() != s.input {
        return Err(Error::DimensionMismatch { expected: s.input, actual: encoding.len() });
    }
    let p = &genome.params;
    let mut at = 0;
    let mut take = |n: usize| {
        let slice = &p[at..at + n];
        at += n;
        slice
    };
    let (w1, b1) = (take(s.input * s.h1), take(s.h1));
    let (w2, b2) = (take(s.h1 * s.h2), take(s.h2));
    let (w3, b3) = (take(s.h2 * s.output), take(s.output));
    let h = dense(encoding, w1, b1, true);
    let h = dense(&h, w2, b2, true);
    Ok(softmax(&dense(&h, w3, b3, false)))
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

fn sample<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Samples an `m`-step sequence; in yxx2 mode the signs are expanded into
/// the `(±y ±x ±x)…` pattern.
pub fn rollout<R: Rng + ?Sized>(genome: &AgentGenome, m: usize, tau: f64, rng: &mut R) -> Result<PulseSequence> {
    let m_max = genome.shape.m_max();
    if m == 0 || m > m_max {
        return Err(Error::InvalidArgument(format!("rollout length {m} outside 1..={m_max}")));
    }
    if genome.mode == PolicyMode::Yxx2 && m % 3 != 0 {
        return Err(Error::InvalidArgument(format!("yxx2 rollout length {m} is not a multiple of 3")));
    }
    let mut state = SequenceState::new();
    for step in 0..m {
        let probs = forward(genome, &encode_state(&state, m_max, genome.mode)?)?;
        state.push(genome.mode.action(step, sample(&probs, rng)));
    }
    PulseSequence::new(state.into_actions(), tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shape6() -> GenomeShape {
        GenomeShape::for_mode(PolicyMode::Full5, 6, 8, 4)
    }

    #[test]
    fn encoding_examples() {
        let e = encode_state(&SequenceState::new(), 6, PolicyMode::Full5).unwrap();
        assert_eq!(e.len(), 31);
        assert!(e.iter().all(|&v| v == 0.0));
        let e = encode_state(&SequenceState::from_actions(vec![Action::Px]), 6, PolicyMode::Full5).unwrap();
        assert_eq!(e[Action::Px.index()], 1.0);
        assert_eq!(e.iter().filter(|&&v| v != 0.0).count(), 2);
        assert_eq!(e[30], 1.0 / 6.0);
        let full = SequenceState::from_actions(vec![Action::Delay; 6]);
        assert_eq!(encode_state(&full, 6, PolicyMode::Full5).unwrap()[30], 1.0);
        assert!(encode_state(&full, 5, PolicyMode::Full5).is_err());
        let yxx = SequenceState::from_actions(vec![Action::My, Action::Px, Action::Mx]);
        let e = encode_state(&yxx, 3, PolicyMode::Yxx2).unwrap();
        assert_eq!(e, vec![0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
        assert!(encode_state(&SequenceState::from_actions(vec![Action::Px]), 3, PolicyMode::Yxx2).is_err());
    }

    #[test]
    fn parameter_count() {
        let s = GenomeShape::for_mode(PolicyMode::Full5, 6, 128, 64);
        assert_eq!(s.input, 31);
        assert_eq!(s.param_count(), 31 * 128 + 128 + 128 * 64 + 64 + 64 * 5 + 5);
        assert_eq!(s.m_max(), 6);
        assert!(AgentGenome::new(s, PolicyMode::Full5, vec![0.0; 3]).is_err());
        assert!(AgentGenome::zeros(s, PolicyMode::Yxx2).is_err());
    }

    #[test]
    fn zero_genome_is_uniform() {
        let g = AgentGenome::zeros(shape6(), PolicyMode::Full5).unwrap();
        let p = forward(&g, &vec![0.0; 31]).unwrap();
        assert!(p.iter().all(|&v| (v - 0.2).abs() < 1e-15));
        let g = AgentGenome::zeros(GenomeShape::for_mode(PolicyMode::Yxx2, 6, 4, 4), PolicyMode::Yxx2).unwrap();
        assert_eq!(forward(&g, &vec![0.0; 13]).unwrap(), vec![0.5, 0.5]);
        assert!(forward(&g, &[0.0; 3]).is_err());
    }

    /// Direct matrix-vector oracle for the flat layout.
    fn forward_oracle(g: &AgentGenome, x: &[f64]) -> Vec<f64> {
        let s = g.shape();
        let p = g.params();
        let layer = |x: &[f64], off: usize, n_in: usize, n_out: usize, relu: bool| -> Vec<f64> {
            (0..n_out)
                .map(|j| {
                    let v = p[off + n_in * n_out + j] + (0..n_in).map(|i| x[i] * p[off + i * n_out + j]).sum::<f64>();
                    if relu { v.max(0.0) } else { v }
                })
                .collect()
        };
        let h1 = layer(x, 0, s.input, s.h1, true);
        let o2 = s.input * s.h1 + s.h1;
        let h2 = layer(&h1, o2, s.h1, s.h2, true);
        let o3 = o2 + s.h1 * s.h2 + s.h2;
        let z = layer(&h2, o3, s.h2, s.output, false);
        let e: Vec<f64> = z.iter().map(|v| v.exp()).collect();
        let sum: f64 = e.iter().sum();
        e.iter().map(|v| v / sum).collect()
    }

    #[test]
    fn forward_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = init_genome(shape6(), PolicyMode::Full5, &mut rng).unwrap();
        let state = SequenceState::from_actions(vec![Action::Py, Action::Delay, Action::Mx]);
        let x = encode_state(&state, 6, PolicyMode::Full5).unwrap();
        let got = forward(&g, &x).unwrap();
        for (a, b) in got.iter().zip(forward_oracle(&g, &x)) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn init_statistics_and_reproducibility() {
        let shape = GenomeShape::for_mode(PolicyMode::Full5, 48, 400, 250);
        let g = init_genome(shape, PolicyMode::Full5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let again = init_genome(shape, PolicyMode::Full5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(g, again);
        // First layer: std 1/√241, 241·400 + 400 entries.
        let n = shape.input * shape.h1 + shape.h1;
        let w = &g.params()[..n];
        let std = 1.0 / (shape.input as f64).sqrt();
        let mean = w.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 3.0 * std / (n as f64).sqrt());
        let var = w.iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert!((var.sqrt() / std - 1.0).abs() < 0.02);
    }

    #[test]
    fn rollout_determinism_and_saturation() {
        let g = init_genome(shape6(), PolicyMode::Full5, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let a = rollout(&g, 6, 1e-6, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let b = rollout(&g, 6, 1e-6, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
        let mut forced = AgentGenome::zeros(shape6(), PolicyMode::Full5).unwrap();
        forced.output_bias_mut()[Action::Px.index()] = 40.0;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            assert_eq!(rollout(&forced, 6, 1e-6, &mut rng).unwrap().tokens(), "x x x x x x");
        }
        assert!(rollout(&g, 7, 1e-6, &mut rng).is_err());
    }

    #[test]
    fn yxx2_rollout_expands_signs() {
        let shape = GenomeShape::for_mode(PolicyMode::Yxx2, 48, 16, 8);
        let g = init_genome(shape, PolicyMode::Yxx2, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let s = rollout(&g, 48, 1e-6, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        assert_eq!((s.len(), s.pulse_count()), (48, 48));
        assert!(crate::sequence::yxx_signs(&s).is_some());
        assert!(rollout(&g, 47, 1e-6, &mut ChaCha8Rng::seed_from_u64(6)).is_err());
    }

    proptest! {
        #[test]
        fn probabilities_normalized_and_shift_invariant(seed in any::<u64>(), shift in -50.0f64..50.0, steps in 0usize..=6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut g = init_genome(shape6(), PolicyMode::Full5, &mut rng).unwrap();
            for v in g.params_mut() {
                *v *= 3.0;
            }
            let state = SequenceState::from_actions((0..steps).map(|i| Action::ALL[(seed as usize + i) % 5]).collect());
            let x = encode_state(&state, 6, PolicyMode::Full5).unwrap();
            let p = forward(&g, &x).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&v| v.is_finite() && v > 0.0));
            for b in g.output_bias_mut() {
                *b += shift;
            }
            let q = forward(&g, &x).unwrap();
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
