use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::quantum::{single_spin_operator, Axis, LocalGate, C64};
use crate::sequence::{Action, PulseSequence};

/// A signed axis `±x`, `±y` or `±z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignedAxis {
    pub axis: Axis,
    pub sign: i8,
}

impl SignedAxis {
    pub fn new(axis: Axis, sign: i8) -> Self {
        assert!(sign == 1 || sign == -1, "sign must be ±1");
        Self { axis, sign }
    }

    /// Components as a unit vector.
    pub fn vector(self) -> [f64; 3] {
        let mut v = [0.0; 3];
        v[self.axis.index()] = f64::from(self.sign);
        v
    }
}

impl fmt::Display for SignedAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.sign > 0 { '+' } else { '-' };
        let a = ['x', 'y', 'z'][self.axis.index()];
        write!(f, "{s}{a}")
    }
}

/// Orientation of the toggling frame under ideal π/2 pulses.
///
/// Row `a` holds the toggling-frame image of lab axis `a`:
/// `U_c† S_a U_c = Σ_b m[a][b] S_b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameElement {
    m: [[i8; 3]; 3],
}

impl FrameElement {
    pub const IDENTITY: FrameElement = FrameElement { m: [[1, 0, 0], [0, 1, 0], [0, 0, 1]] };

    /// Builds a frame from a signed permutation matrix; `None` if `m` is not one.
    pub fn from_matrix(m: [[i8; 3]; 3]) -> Option<Self> {
        for r in 0..3 {
            let row_ok = m[r].iter().filter(|&&v| v != 0).count() == 1;
            let col_ok = (0..3).filter(|&c| m[c][r] != 0).count() == 1;
            if !row_ok || !col_ok || m[r].iter().any(|v| v.abs() > 1) {
                return None;
            }
        }
        Some(Self { m })
    }

    pub fn matrix(&self) -> [[i8; 3]; 3] {
        self.m
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    pub fn determinant(&self) -> i8 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// `self · other` as matrices.
    pub fn compose(&self, other: &FrameElement) -> FrameElement {
        let mut m = [[0i8; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        FrameElement { m }
    }

    pub fn inverse(&self) -> FrameElement {
        let mut m = [[0i8; 3]; 3];
        for (i, row) in self.m.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m[j][i] = v;
            }
        }
        FrameElement { m }
    }

    /// Toggling-frame image of a lab axis.
    pub fn image(&self, lab: Axis) -> SignedAxis {
        let row = self.m[lab.index()];
        let b = row.iter().position(|&v| v != 0).expect("signed permutation");
        SignedAxis::new(Axis::from_index(b), row[b])
    }

    /// Toggling-frame image of a lab vector `v·S`.
    pub fn image_vector(&self, v: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (a, &va) in v.iter().enumerate() {
            for (b, o) in out.iter_mut().enumerate() {
                *o += va * f64::from(self.m[a][b]);
            }
        }
        out
    }

    /// All 48 signed permutations.
    pub fn all() -> Vec<FrameElement> {
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut out = Vec::with_capacity(48);
        for p in PERMS {
            for s in 0..8u8 {
                let mut m = [[0i8; 3]; 3];
                for r in 0..3 {
                    m[r][p[r]] = if s >> r & 1 == 1 { -1 } else { 1 };
                }
                out.push(FrameElement { m });
            }
        }
        out
    }
}

/// Conjugation tables `Q[a][b] = 2 Tr(P† S_a P S_b)` of the ideal pulses,
/// computed once from the single-spin unitaries.
fn pulse_tables() -> &'static [FrameElement; 5] {
    static TABLES: OnceLock<[FrameElement; 5]> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut out = [FrameElement::IDENTITY; 5];
        for action in Action::PULSES {
            let p = LocalGate::rotation(action.axis().expect("pulse"), FRAC_PI_2).matrix();
            let mut m = [[0i8; 3]; 3];
            for a in Axis::ALL {
                let conj = conjugate(&p, &single_spin_operator(a));
                for b in Axis::ALL {
                    let sb = single_spin_operator(b);
                    let mut tr = C64::new(0.0, 0.0);
                    for i in 0..2 {
                        for k in 0..2 {
                            tr += conj[i][k] * sb[k][i];
                        }
                    }
                    m[a.index()][b.index()] = (2.0 * tr.re).round() as i8;
                }
            }
            out[action.index()] = FrameElement::from_matrix(m).expect("π/2 pulse conjugation is a signed permutation");
        }
        out
    })
}

/// `p† s p` on 2×2 matrices.
fn conjugate(p: &[[C64; 2]; 2], s: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[i][j] += p[k][i].conj() * s[k][l] * p[l][j];
                }
            }
        }
    }
    out
}

/// Frame after an ideal pulse; `Delay` leaves it unchanged.
pub fn frame_after(frame: FrameElement, action: Action) -> FrameElement {
    pulse_tables()[action.index()].compose(&frame)
}

/// One free-evolution interval seen from the toggling frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub frame: FrameElement,
    /// `D_z` appears as `D_{interaction}`; the sign drops out.
    pub interaction: Axis,
    /// Lab `Z` appears as `field.sign · field.axis`.
    pub field: SignedAxis,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TogglingTrajectory {
    intervals: Vec<Interval>,
    /// Frames before each pulse slot, then the final frame (length `M + 1`).
    frames: Vec<FrameElement>,
}

impl TogglingTrajectory {
    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Frame in effect before slot `k` (`k = M` gives the final frame).
    pub fn frame_before(&self, k: usize) -> FrameElement {
        self.frames[k]
    }

    pub fn final_frame(&self) -> FrameElement {
        *self.frames.last().expect("non-empty")
    }

    pub fn is_cyclic(&self) -> bool {
        self.final_frame().is_identity()
    }

    /// Interaction labels as `x`, `y`, `z`.
    pub fn interaction_labels(&self) -> String {
        self.intervals.iter().map(|i| ['x', 'y', 'z'][i.interaction.index()]).collect()
    }

    pub fn field_labels(&self) -> Vec<String> {
        self.intervals.iter().map(|i| i.field.to_string()).collect()
    }
}

pub fn trajectory(seq: &PulseSequence) -> TogglingTrajectory {
    let mut frame = FrameElement::IDENTITY;
    let mut frames = vec![frame];
    let mut intervals = Vec::with_capacity(seq.len());
    for &a in seq.actions() {
        frame = frame_after(frame, a);
        frames.push(frame);
        let field = frame.image(Axis::Z);
        intervals.push(Interval { frame, interaction: field.axis, field });
    }
    TogglingTrajectory { intervals, frames }
}
