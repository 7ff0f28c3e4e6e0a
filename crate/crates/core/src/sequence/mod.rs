//! Pulse sequences, imperfection models, cycle compilation and the sequence library.

mod compile;
mod format;
mod library;
mod transform;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::DisorderRealization;

pub use compile::{compile_cycle, free_hamiltonian, pulse_propagator, CycleCompiler};
pub use format::{emit_sequence_file, normalize_sequence_file, parse_sequence_file};
pub use library::{library_names, sequence_library, LIBRARY_TAU};
pub use transform::{
    construct_yxx24, equal_up_to_rotation, phase_shift_pi, phase_shift_pi_all, rotate, symmetrize, yxx_expand, yxx_signs,
};

/// One control step: no pulse, or a π/2 pulse about ±x or ±y.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Delay,
    Px,
    Mx,
    Py,
    My,
}

impl Action {
    pub const ALL: [Action; 5] = [Action::Delay, Action::Px, Action::Mx, Action::Py, Action::My];
    pub const PULSES: [Action; 4] = [Action::Px, Action::Mx, Action::Py, Action::My];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    pub fn is_pulse(self) -> bool {
        self != Action::Delay
    }

    pub fn token(self) -> &'static str {
        match self {
            Action::Delay => "d",
            Action::Px => "x",
            Action::Mx => "-x",
            Action::Py => "y",
            Action::My => "-y",
        }
    }

    /// Pulse phase in the xy plane (`+x` = 0, `+y` = π/2, `−x` = π, `−y` = 3π/2).
    pub fn phase(self) -> Option<f64> {
        use std::f64::consts::{FRAC_PI_2, PI};
        match self {
            Action::Delay => None,
            Action::Px => Some(0.0),
            Action::Py => Some(FRAC_PI_2),
            Action::Mx => Some(PI),
            Action::My => Some(3.0 * FRAC_PI_2),
        }
    }

    /// Unit rotation axis `(cos φ, sin φ, 0)` with exact components.
    pub fn axis(self) -> Option<[f64; 3]> {
        match self {
            Action::Delay => None,
            Action::Px => Some([1.0, 0.0, 0.0]),
            Action::Mx => Some([-1.0, 0.0, 0.0]),
            Action::Py => Some([0.0, 1.0, 0.0]),
            Action::My => Some([0.0, -1.0, 0.0]),
        }
    }

    /// Axis of the phase-transient component, `+π/2` ahead of the pulse phase.
    pub fn transient_axis(self) -> Option<[f64; 3]> {
        self.axis().map(|[x, y, _]| [-y, x, 0.0])
    }

    /// π phase shift: `x ↔ −x`, `y ↔ −y`; `Delay` is unchanged.
    pub fn pi_shifted(self) -> Action {
        match self {
            Action::Delay => Action::Delay,
            Action::Px => Action::Mx,
            Action::Mx => Action::Px,
            Action::Py => Action::My,
            Action::My => Action::Py,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "d" => Ok(Action::Delay),
            "x" => Ok(Action::Px),
            "-x" => Ok(Action::Mx),
            "y" => Ok(Action::Py),
            "-y" => Ok(Action::My),
            other => Err(Error::InvalidArgument(format!("unknown action token '{other}'"))),
        }
    }
}

/// An ordered list of actions separated by the interval `tau` (seconds).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    actions: Vec<Action>,
    tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

impl PulseSequence {
    pub fn new(actions: Vec<Action>, tau: f64) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::InvalidArgument("sequence must contain at least one action".into()));
        }
        check_tau(tau)?;
        Ok(Self { actions, tau, name: None })
    }

    /// Parses whitespace-separated tokens, e.g. `"y x x y -x -x"`.
    pub fn from_tokens(tokens: &str, tau: f64) -> Result<Self> {
        let actions = tokens.split_whitespace().map(str::parse).collect::<Result<Vec<_>>>()?;
        Self::new(actions, tau)
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        self.tau = tau;
        Ok(self)
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Cycle duration `Mτ`.
    pub fn duration(&self) -> f64 {
        self.tau * self.actions.len() as f64
    }

    pub fn pulse_count(&self) -> usize {
        self.actions.iter().filter(|a| a.is_pulse()).count()
    }

    pub fn delay_count(&self) -> usize {
        self.len() - self.pulse_count()
    }

    /// This sequence followed by `other`, keeping this sequence's `tau`.
    pub fn concat(&self, other: &PulseSequence) -> PulseSequence {
        let mut actions = self.actions.clone();
        actions.extend_from_slice(&other.actions);
        PulseSequence { actions, tau: self.tau, name: None }
    }

    /// Space-separated tokens.
    pub fn tokens(&self) -> String {
        self.actions.iter().map(|a| a.token()).collect::<Vec<_>>().join(" ")
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!("tau {tau} must be positive and finite")));
    }
    Ok(())
}

/// Everything that perturbs the ideal propagator. All fields default to zero.
///
/// `offset` and the disorder fields are in rad/s, `pulse_width` in seconds,
/// `alpha1`/`alpha2` (trailing/leading phase transients) in radians.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImperfectionSet {
    pub offset: f64,
    pub disorder: Option<DisorderRealization>,
    pub angle_error: f64,
    pub pulse_width: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl ImperfectionSet {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn with_disorder(mut self, disorder: DisorderRealization) -> Self {
        self.disorder = Some(disorder);
        self
    }

    pub fn with_angle_error(mut self, eps: f64) -> Self {
        self.angle_error = eps;
        self
    }

    pub fn with_pulse_width(mut self, t_w: f64) -> Self {
        self.pulse_width = t_w;
        self
    }

    pub fn with_transients(mut self, alpha1: f64, alpha2: f64) -> Self {
        self.alpha1 = alpha1;
        self.alpha2 = alpha2;
        self
    }

    /// Checks finiteness and `0 ≤ t_w < tau`.
    pub fn validate(&self, tau: f64) -> Result<()> {
        let finite = [self.offset, self.angle_error, self.pulse_width, self.alpha1, self.alpha2];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("imperfection parameters must be finite".into()));
        }
        if self.pulse_width < 0.0 || self.pulse_width >= tau {
            return Err(Error::InvalidArgument(format!(
                "pulse width {} must lie in [0, tau = {tau})",
                self.pulse_width
            )));
        }
        Ok(())
    }
}

/// Partial sequence seen by the policy: the actions chosen so far.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SequenceState {
    actions: Vec<Action>,
}

impl SequenceState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_actions(actions: Vec<Action>) -> Self {
        Self { actions }
    }

    pub fn step(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn push(&mut self, action: Action) {
        self.actions.push(action);
    }

    pub fn into_actions(self) -> Vec<Action> {
        self.actions
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_order_and_tokens() {
        let tokens: Vec<_> = Action::ALL.iter().map(|a| a.token()).collect();
        assert_eq!(tokens, ["d", "x", "-x", "y", "-y"]);
        for (i, a) in Action::ALL.iter().enumerate() {
            assert_eq!(a.index(), i);
            assert_eq!(Action::from_index(i), Some(*a));
            assert_eq!(a.token().parse::<Action>().unwrap(), *a);
        }
        assert!(Action::from_index(5).is_none());
        assert!("z".parse::<Action>().is_err());
    }

    #[test]
    fn transient_axis_leads_by_quarter_turn() {
        assert_eq!(Action::Px.transient_axis(), Some([0.0, 1.0, 0.0]));
        assert_eq!(Action::Py.transient_axis(), Some([-1.0, 0.0, 0.0]));
        assert_eq!(Action::Mx.transient_axis(), Some([-0.0, -1.0, 0.0]));
        assert_eq!(Action::My.transient_axis(), Some([1.0, 0.0, 0.0]));
        for a in Action::PULSES {
            let phi = a.phase().unwrap();
            let [x, y, _] = a.axis().unwrap();
            assert!((x - phi.cos()).abs() < 1e-15 && (y - phi.sin()).abs() < 1e-15);
            assert_eq!(a.pi_shifted().pi_shifted(), a);
        }
    }

    #[test]
    fn sequence_invariants() {
        assert!(PulseSequence::new(vec![], 1e-6).is_err());
        assert!(PulseSequence::new(vec![Action::Px], 0.0).is_err());
        assert!(PulseSequence::new(vec![Action::Px], f64::NAN).is_err());
        let s = PulseSequence::from_tokens("d x -y d y -x", 5e-6).unwrap();
        assert_eq!((s.len(), s.pulse_count(), s.delay_count()), (6, 4, 2));
        assert!((s.duration() - 30e-6).abs() < 1e-18);
        assert_eq!(s.tokens(), "d x -y d y -x");
    }

    #[test]
    fn imperfection_validation() {
        let tau = 5e-6;
        assert!(ImperfectionSet::ideal().validate(tau).is_ok());
        assert!(ImperfectionSet::ideal().with_pulse_width(tau).validate(tau).is_err());
        assert!(ImperfectionSet::ideal().with_pulse_width(-1e-9).validate(tau).is_err());
        assert!(ImperfectionSet::ideal().with_offset(f64::INFINITY).validate(tau).is_err());
    }

    #[test]
    fn state_step_tracks_length() {
        let mut s = SequenceState::new();
        assert_eq!(s.step(), 0);
        s.push(Action::Py);
        s.push(Action::Px);
        assert_eq!(s.step(), 2);
    }
}
