use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frame::{frame_after, FrameElement};
use super::order::{AhtBasis, TermSelector};
use crate::error::{Error, Result};
use crate::quantum::{CouplingGraph, SpinBasis};
use crate::sequence::Action;

/// Upper bound on the enumerated length (5^9 ≈ 2·10⁶ sequences).
pub const MAX_ENUMERATION_LENGTH: usize = 9;

/// Passing sequences are listed in full up to this count per length.
const LISTED: usize = 2000;

const ZERO_TOL: f64 = 1e-12;

/// Counts for one sequence length.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LengthReport {
    pub length: usize,
    pub sequences: u64,
    pub frame_cyclic: u64,
    /// Equal interaction tallies, any final frame.
    pub zeroth_cancelled: u64,
    /// Zeroth and first-order interaction both zero, any final frame.
    pub first_cancelled: u64,
    pub cyclic_zeroth_cancelled: u64,
    /// Frame-cyclic with zeroth and first-order interaction zero.
    pub passing: u64,
    /// Token strings of passing sequences in lexicographic action order.
    pub passing_sequences: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub max_len: usize,
    pub n_spins: usize,
    pub lengths: Vec<LengthReport>,
    /// No passing sequence with `L mod 6 ≠ 0`, and at least one at every
    /// enumerated multiple of 6.
    pub holds: bool,
}

struct Tables {
    next: Vec<[usize; 5]>,
    /// Interaction label (axis index of the lab-z image) of each frame.
    label: Vec<usize>,
    identity: usize,
}

fn tables() -> Tables {
    let mut index: HashMap<FrameElement, usize> = HashMap::from([(FrameElement::IDENTITY, 0)]);
    let mut frames = vec![FrameElement::IDENTITY];
    let mut next = Vec::new();
    let mut k = 0;
    while k < frames.len() {
        let f = frames[k];
        let mut row = [0; 5];
        for a in Action::ALL {
            let g = frame_after(f, a);
            let n = index.len();
            row[a.index()] = *index.entry(g).or_insert_with(|| {
                frames.push(g);
                n
            });
        }
        next.push(row);
        k += 1;
    }
    let label = frames.iter().map(|f| f.image(crate::quantum::Axis::Z).axis.index()).collect();
    Tables { next, label, identity: 0 }
}

struct Walker<'a> {
    t: &'a Tables,
    ops: &'a AhtBasis,
    scale: f64,
    len: usize,
    report: LengthReport,
    path: Vec<Action>,
}

impl Walker<'_> {
    fn walk(&mut self, frame: usize, tallies: [u32; 3], prod: [[i32; 3]; 3]) {
        if self.path.len() == self.len {
            self.leaf(frame, tallies, prod);
            return;
        }
        for a in Action::ALL {
            let f = self.t.next[frame][a.index()];
            let l = self.t.label[f];
            let mut p = prod;
            for q in 0..3 {
                p[l][q] += tallies[q] as i32;
            }
            let mut tl = tallies;
            tl[l] += 1;
            self.path.push(a);
            self.walk(f, tl, p);
            self.path.pop();
        }
    }

    fn leaf(&mut self, frame: usize, tallies: [u32; 3], prod: [[i32; 3]; 3]) {
        let r = &mut self.report;
        r.sequences += 1;
        let cyclic = frame == self.t.identity;
        r.frame_cyclic += u64::from(cyclic);
        if tallies[0] != tallies[1] || tallies[1] != tallies[2] {
            return;
        }
        r.zeroth_cancelled += 1;
        r.cyclic_zeroth_cancelled += u64::from(cyclic);
        let mut coeff = [[0.0; 6]; 6];
        for p in 0..3 {
            for q in 0..3 {
                coeff[p][q] = f64::from(prod[p][q]);
            }
        }
        let h1 = self.ops.assemble(&coeff, 1.0, self.len, TermSelector::Interaction).max_norm();
        if h1 > ZERO_TOL * self.scale {
            return;
        }
        r.first_cancelled += 1;
        if cyclic {
            r.passing += 1;
            if r.passing_sequences.len() < LISTED {
                let tokens: Vec<_> = self.path.iter().map(|a| a.token()).collect();
                r.passing_sequences.push(tokens.join(" "));
            }
        }
    }
}

fn merge(mut a: LengthReport, b: LengthReport) -> LengthReport {
    a.sequences += b.sequences;
    a.frame_cyclic += b.frame_cyclic;
    a.zeroth_cancelled += b.zeroth_cancelled;
    a.first_cancelled += b.first_cancelled;
    a.cyclic_zeroth_cancelled += b.cyclic_zeroth_cancelled;
    a.passing += b.passing;
    a.passing_sequences.extend(b.passing_sequences);
    a.passing_sequences.truncate(LISTED);
    a
}

fn enumerate_length(len: usize, t: &Tables, ops: &AhtBasis, scale: f64) -> LengthReport {
    let split = len.min(2);
    let prefixes: Vec<Vec<Action>> = (0..5usize.pow(split as u32))
        .map(|mut i| {
            let mut p = vec![Action::Delay; split];
            for slot in p.iter_mut().rev() {
                *slot = Action::ALL[i % 5];
                i /= 5;
            }
            p
        })
        .collect();
    let parts: Vec<LengthReport> = prefixes
        .into_par_iter()
        .map(|prefix| {
            let mut frame = t.identity;
            let mut tallies = [0u32; 3];
            let mut prod = [[0i32; 3]; 3];
            for &a in &prefix {
                frame = t.next[frame][a.index()];
                let l = t.label[frame];
                for q in 0..3 {
                    prod[l][q] += tallies[q] as i32;
                }
                tallies[l] += 1;
            }
            let mut w = Walker { t, ops, scale, len, report: LengthReport::default(), path: prefix };
            w.walk(frame, tallies, prod);
            w.report
        })
        .collect();
    let mut out = parts.into_iter().fold(LengthReport::default(), merge);
    out.length = len;
    out
}

/// Exhaustive search over all action lists of length `1..=max_len` for
/// frame-cyclic sequences whose zeroth- and first-order interaction terms
/// vanish. First-order terms are evaluated on a 4-spin open chain.
pub fn theorem1_enumerate(max_len: usize) -> Result<Theorem1Report> {
    if max_len == 0 || max_len > MAX_ENUMERATION_LENGTH {
        return Err(Error::InvalidArgument(format!(
            "max_len {max_len} outside 1..={MAX_ENUMERATION_LENGTH}"
        )));
    }
    let basis = SpinBasis::open(4)?;
    let graph = CouplingGraph::nearest_neighbor(&basis, 1.0);
    let ops = AhtBasis::new(&basis, &graph, &[0.0; 4])?;
    let mut unit = [[0.0; 6]; 6];
    unit[0][1] = 1.0;
    let scale = ops.assemble(&unit, 1.0, 1, TermSelector::Interaction).max_norm();
    let t = tables();
    let lengths: Vec<LengthReport> = (1..=max_len).map(|l| enumerate_length(l, &t, &ops, scale)).collect();
    let holds = lengths.iter().all(|r| if r.length % 6 == 0 { r.passing > 0 } else { r.passing == 0 });
    Ok(Theorem1Report { max_len, n_spins: basis.n_spins(), lengths, holds })
}
