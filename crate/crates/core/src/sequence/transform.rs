use super::{Action, PulseSequence};
use crate::error::{Error, Result};

/// `seq` followed by its reverse with every pulse π-phase-shifted.
pub fn symmetrize(seq: &PulseSequence) -> PulseSequence {
    let mut actions = seq.actions().to_vec();
    actions.extend(seq.actions().iter().rev().map(|a| a.pi_shifted()));
    PulseSequence::new(actions, seq.tau()).expect("non-empty input")
}

/// Moves the first `n` actions to the end.
pub fn rotate(seq: &PulseSequence, n: usize) -> Result<PulseSequence> {
    if n >= seq.len() {
        return Err(Error::InvalidArgument(format!("rotation {n} out of range for length {}", seq.len())));
    }
    let mut actions = seq.actions().to_vec();
    actions.rotate_left(n);
    PulseSequence::new(actions, seq.tau())
}

/// Flips the sign of the pulses at `indices`.
pub fn phase_shift_pi(seq: &PulseSequence, indices: &[usize]) -> Result<PulseSequence> {
    let mut actions = seq.actions().to_vec();
    for &i in indices {
        match actions.get(i) {
            None => {
                return Err(Error::InvalidArgument(format!("index {i} out of range for length {}", seq.len())))
            }
            Some(Action::Delay) => return Err(Error::InvalidArgument(format!("index {i} refers to a delay"))),
            Some(a) => actions[i] = a.pi_shifted(),
        }
    }
    PulseSequence::new(actions, seq.tau())
}

/// Global π phase shift (delays untouched).
pub fn phase_shift_pi_all(seq: &PulseSequence) -> PulseSequence {
    let actions = seq.actions().iter().map(|a| a.pi_shifted()).collect();
    PulseSequence::new(actions, seq.tau()).expect("non-empty input")
}

/// Builds a `(±y ±x ±x)…` sequence: position `k` is about y when `k mod 3 = 0`,
/// about x otherwise, with the sign `signs[k]`.
pub fn yxx_expand(signs: &[bool], tau: f64) -> Result<PulseSequence> {
    if signs.is_empty() || signs.len() % 3 != 0 {
        return Err(Error::InvalidArgument(format!(
            "yxx sign vector length {} must be a positive multiple of 3",
            signs.len()
        )));
    }
    let actions = signs
        .iter()
        .enumerate()
        .map(|(k, &plus)| match (k % 3 == 0, plus) {
            (true, true) => Action::Py,
            (true, false) => Action::My,
            (false, true) => Action::Px,
            (false, false) => Action::Mx,
        })
        .collect();
    PulseSequence::new(actions, tau)
}

/// Inverse of [`yxx_expand`]: the sign vector, if `seq` has the yxx pattern.
pub fn yxx_signs(seq: &PulseSequence) -> Option<Vec<bool>> {
    if seq.len() % 3 != 0 {
        return None;
    }
    seq.actions()
        .iter()
        .enumerate()
        .map(|(k, a)| match (k % 3 == 0, a) {
            (true, Action::Py) | (false, Action::Px) => Some(true),
            (true, Action::My) | (false, Action::Mx) => Some(false),
            _ => None,
        })
        .collect()
}

/// yxx24 from Angle12: in the frame rotated by two intervals, π-shift the
/// four-pulse box at positions 4..8, rotate back, and append the global
/// π shift of the result.
pub fn construct_yxx24(angle12: &PulseSequence) -> Result<PulseSequence> {
    if angle12.len() != 12 {
        return Err(Error::InvalidArgument(format!("expected a 12-action sequence, got {}", angle12.len())));
    }
    let shifted = phase_shift_pi(&rotate(angle12, 2)?, &[4, 5, 6, 7])?;
    let half = rotate(&shifted, 10)?;
    Ok(half.concat(&phase_shift_pi_all(&half)))
}

/// Smallest `n` with `rotate(a, n) == b` on the action lists.
pub fn equal_up_to_rotation(a: &PulseSequence, b: &PulseSequence) -> Option<usize> {
    if a.len() != b.len() {
        return None;
    }
    let (x, y) = (a.actions(), b.actions());
    (0..x.len()).find(|&n| (0..x.len()).all(|k| x[(k + n) % x.len()] == y[k]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(tokens: &str) -> PulseSequence {
        PulseSequence::from_tokens(tokens, 5e-6).unwrap()
    }

    #[test]
    fn symmetrize_examples() {
        assert_eq!(symmetrize(&seq("x y -x -y")).tokens(), "x y -x -y y x -y -x");
        assert_eq!(symmetrize(&seq("x")).tokens(), "x -x");
        assert_eq!(symmetrize(&seq("d x")).tokens(), "d x -x d");
        let s = seq("y x x");
        assert_eq!(symmetrize(&symmetrize(&s)).len(), 12);
    }

    #[test]
    fn rotate_examples() {
        let angle12 = seq("-y x -x y -x -x -y x -x y x x");
        assert_eq!(rotate(&angle12, 0).unwrap(), angle12);
        assert_eq!(rotate(&angle12, 2).unwrap().tokens(), "-x y -x -x -y x -x y x x -y x");
        assert!(rotate(&angle12, 12).is_err());
    }

    #[test]
    fn phase_shift_examples() {
        let s = seq("d x -y");
        assert_eq!(phase_shift_pi(&s, &[]).unwrap(), s);
        assert_eq!(phase_shift_pi(&s, &[1, 2]).unwrap().tokens(), "d -x y");
        assert!(phase_shift_pi(&s, &[0]).is_err());
        assert!(phase_shift_pi(&s, &[3]).is_err());
        assert_eq!(phase_shift_pi_all(&s).tokens(), "d -x y");
    }

    #[test]
    fn yxx_examples() {
        assert_eq!(yxx_expand(&[true; 6], 1e-6).unwrap().tokens(), "y x x y x x");
        assert!(yxx_expand(&[true; 4], 1e-6).is_err());
        assert!(yxx_expand(&[], 1e-6).is_err());
        let s = seq("-y x -x y -x -x");
        assert_eq!(yxx_signs(&s), Some(vec![false, true, false, true, false, false]));
        assert_eq!(yxx_signs(&seq("x y y")), None);
    }

    #[test]
    fn yxx24_pipeline() {
        let angle12 = seq("-y x -x y -x -x -y x -x y x x");
        let built = construct_yxx24(&angle12).unwrap();
        assert_eq!(built.tokens(), "-y x -x y -x -x y -x x -y x x y -x x -y x x -y x -x y -x -x");
        assert!(yxx_signs(&built).is_some());
        assert!(construct_yxx24(&seq("y x x")).is_err());
    }

    #[test]
    fn rotation_alignment() {
        let a = seq("y x x y -x -x");
        let b = rotate(&a, 4).unwrap();
        assert_eq!(equal_up_to_rotation(&a, &b), Some(4));
        assert_eq!(equal_up_to_rotation(&a, &seq("y x x y x x")), None);
    }

    fn arb_sequence() -> impl Strategy<Value = PulseSequence> {
        prop::collection::vec(0usize..5, 1..30)
            .prop_map(|ix| PulseSequence::new(ix.into_iter().map(|i| Action::ALL[i]).collect(), 1e-6).unwrap())
    }

    proptest! {
        #[test]
        fn rotate_inverse(s in arb_sequence(), n in 0usize..30) {
            let n = n % s.len();
            let back = (s.len() - n) % s.len();
            prop_assert_eq!(rotate(&rotate(&s, n).unwrap(), back).unwrap(), s);
        }

        #[test]
        fn yxx_roundtrip(signs in prop::collection::vec(any::<bool>(), 1..16)) {
            let signs: Vec<bool> = signs.iter().flat_map(|&s| [s, !s, s]).collect();
            let s = yxx_expand(&signs, 1e-6).unwrap();
            prop_assert_eq!(s.delay_count(), 0);
            prop_assert_eq!(yxx_signs(&s), Some(signs));
        }
    }
}
