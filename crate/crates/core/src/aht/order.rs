use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::frame::{trajectory, TogglingTrajectory};
use crate::error::{Error, Result};
use crate::quantum::{
    build_collective, build_dipolar, build_field, Axis, CMatrix, CouplingGraph, LocalGate, Operator, OperatorKind,
    SpinBasis, C64,
};
use crate::sequence::{Action, ImperfectionSet, PulseSequence};

/// Largest chain accepted by the dense first-order evaluation.
pub const MAX_AHT_SPINS: usize = 6;

/// Zeroth-order average Hamiltonian under ideal pulses.
///
/// `field`, `angle_error_axis` and the transient vectors are per-interval
/// averages: the offset contributes `Δ · field·S`, an angle error
/// `ε(π/2)/τ · angle_error_axis·S`, and phase transients
/// `(α₁ transient_trailing + α₂ transient_leading)·S / τ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZerothOrder {
    pub tallies: [usize; 3],
    pub field: [f64; 3],
    pub angle_error_axis: [f64; 3],
    pub transient_trailing: [f64; 3],
    pub transient_leading: [f64; 3],
}

impl ZerothOrder {
    pub fn interaction_vanishes(&self) -> bool {
        self.tallies[0] == self.tallies[1] && self.tallies[1] == self.tallies[2]
    }

    pub fn field_vanishes(&self) -> bool {
        self.field.iter().all(|&c| c == 0.0)
    }

    /// Coefficients of `(D_x, D_y, D_z)` after removing the null combination
    /// `D_x + D_y + D_z = 0`, per interval.
    pub fn interaction_reduced(&self) -> [f64; 3] {
        let m: usize = self.tallies.iter().sum();
        let min = *self.tallies.iter().min().expect("three tallies");
        self.tallies.map(|t| (t - min) as f64 / m as f64)
    }
}

pub fn zeroth_order(seq: &PulseSequence) -> ZerothOrder {
    zeroth_order_of(&trajectory(seq), seq.actions())
}

pub(crate) fn zeroth_order_of(traj: &TogglingTrajectory, actions: &[Action]) -> ZerothOrder {
    // Integer sums first so exact cancellations stay exact.
    let mut tallies = [0usize; 3];
    let mut sums = [[0i64; 3]; 4];
    for (k, iv) in traj.intervals().iter().enumerate() {
        tallies[iv.interaction.index()] += 1;
        sums[0][iv.field.axis.index()] += i64::from(iv.field.sign);
        let a = actions[k];
        if let (Some(p), Some(t)) = (a.axis(), a.transient_axis()) {
            let before = traj.frame_before(k);
            let after = traj.frame_before(k + 1);
            add(&mut sums[1], before.image_vector(p));
            add(&mut sums[2], after.image_vector(t));
            add(&mut sums[3], before.image_vector(t));
        }
    }
    let m = traj.len() as f64;
    let avg = |v: [i64; 3]| v.map(|c| c as f64 / m);
    ZerothOrder {
        tallies,
        field: avg(sums[0]),
        angle_error_axis: avg(sums[1]),
        transient_trailing: avg(sums[2]),
        transient_leading: avg(sums[3]),
    }
}

fn add(acc: &mut [i64; 3], v: [f64; 3]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b as i64;
    }
}

/// Which products enter the first-order term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermSelector {
    /// `[D, D]` only.
    Interaction,
    /// `[F, F]` only.
    Field,
    /// `[D, F]` and `[F, D]`.
    Cross,
    All,
}

impl TermSelector {
    fn keeps(self, p: usize, q: usize) -> bool {
        let (fp, fq) = (p >= 3, q >= 3);
        match self {
            TermSelector::Interaction => !fp && !fq,
            TermSelector::Field => fp && fq,
            TermSelector::Cross => fp != fq,
            TermSelector::All => true,
        }
    }
}

/// The six toggling-frame building blocks `D_x, D_y, D_z, F_x, F_y, F_z`
/// with `F_c = Σ_j w_j S_c^j`, and their pairwise commutators.
pub(crate) struct AhtBasis {
    dim: usize,
    comm: Vec<Vec<CMatrix>>,
}

impl AhtBasis {
    pub(crate) fn new(basis: &SpinBasis, graph: &CouplingGraph, weights: &[f64]) -> Result<Self> {
        if basis.n_spins() > MAX_AHT_SPINS {
            return Err(Error::Precondition(format!(
                "dense first-order AHT supports at most {MAX_AHT_SPINS} spins, got {}",
                basis.n_spins()
            )));
        }
        let mut ops = Vec::with_capacity(6);
        for a in Axis::ALL {
            ops.push(build_dipolar(basis, graph, a)?.into_matrix());
        }
        for a in Axis::ALL {
            ops.push(build_field(basis, a, weights)?.into_matrix());
        }
        let comm = (0..6)
            .map(|p| (0..6).map(|q| if p < q { ops[p].dot(&ops[q]) - ops[q].dot(&ops[p]) } else { Array2::zeros((0, 0)) }).collect())
            .collect();
        Ok(Self { dim: basis.dim(), comm })
    }

    /// `−iτ/(2M) Σ_{p,q} c[p][q] [B_p, B_q]`, restricted by `selector`.
    pub(crate) fn assemble(&self, coeff: &[[f64; 6]; 6], tau: f64, m: usize, selector: TermSelector) -> Operator {
        let mut acc: CMatrix = Array2::zeros((self.dim, self.dim));
        for p in 0..6 {
            for q in p + 1..6 {
                let w = coeff[p][q] - coeff[q][p];
                if w != 0.0 && selector.keeps(p, q) {
                    acc.scaled_add(C64::new(w, 0.0), &self.comm[p][q]);
                }
            }
        }
        let factor = C64::new(0.0, -tau / (2.0 * m as f64));
        acc.mapv_inplace(|v| v * factor);
        let sym = (&acc + &acc.t().mapv(|v| v.conj())) * C64::new(0.5, 0.0);
        Operator::from_parts(sym, OperatorKind::Hermitian)
    }
}

/// Per-interval coefficient vectors on `(D_x, D_y, D_z, F_x, F_y, F_z)`.
pub(crate) fn interval_coefficients(traj: &TogglingTrajectory) -> Vec<[f64; 6]> {
    traj.intervals()
        .iter()
        .map(|iv| {
            let mut c = [0.0; 6];
            c[iv.interaction.index()] = 1.0;
            c[3 + iv.field.axis.index()] = f64::from(iv.field.sign);
            c
        })
        .collect()
}

/// `C[p][q] = Σ_{a>b} c_a[p] c_b[q]` over the intervals in `range`.
pub(crate) fn ordered_products(coeffs: &[[f64; 6]]) -> [[f64; 6]; 6] {
    let mut prefix = [0.0; 6];
    let mut out = [[0.0; 6]; 6];
    for c in coeffs {
        for p in 0..6 {
            if c[p] != 0.0 {
                for q in 0..6 {
                    out[p][q] += c[p] * prefix[q];
                }
            }
        }
        for q in 0..6 {
            prefix[q] += c[q];
        }
    }
    out
}

/// Field weights `Δ + w_j` from the offset and disorder of `imp`.
pub(crate) fn field_weights(basis: &SpinBasis, imp: &ImperfectionSet) -> Result<Vec<f64>> {
    let mut w = vec![imp.offset; basis.n_spins()];
    if let Some(d) = &imp.disorder {
        if d.len() != basis.n_spins() {
            return Err(Error::DimensionMismatch { expected: basis.n_spins(), actual: d.len() });
        }
        for (a, b) in w.iter_mut().zip(d.fields()) {
            *a += b;
        }
    }
    Ok(w)
}

/// First-order average Hamiltonian `−i/(2Mτ) Σ_{a>b} [H_a, H_b] τ²` of the
/// toggling-frame interval Hamiltonians `H_a = D_{l_a} + F_{±f_a}`.
///
/// Fields come from the offset and disorder of `imp`; pulse imperfections
/// are ignored.
pub fn first_order_numeric(
    seq: &PulseSequence,
    basis: &SpinBasis,
    graph: &CouplingGraph,
    imp: &ImperfectionSet,
    selector: TermSelector,
) -> Result<Operator> {
    let ops = AhtBasis::new(basis, graph, &field_weights(basis, imp)?)?;
    let coeffs = interval_coefficients(&trajectory(seq));
    Ok(ops.assemble(&ordered_products(&coeffs), seq.tau(), seq.len(), selector))
}

/// Largest deviation between the symbolic labels and numeric conjugation
/// `U_c† D_z U_c`, `U_c† Z U_c` by the accumulated ideal pulses.
pub fn verify_trajectory(seq: &PulseSequence, basis: &SpinBasis) -> Result<f64> {
    let graph = CouplingGraph::nearest_neighbor(basis, 1.0);
    let d: Vec<CMatrix> =
        Axis::ALL.iter().map(|&a| Ok(build_dipolar(basis, &graph, a)?.into_matrix())).collect::<Result<_>>()?;
    let s: Vec<CMatrix> = Axis::ALL.iter().map(|&a| build_collective(basis, a).into_matrix()).collect();
    let traj = trajectory(seq);
    let mut u: CMatrix = Array2::eye(basis.dim());
    let mut worst: f64 = 0.0;
    for (&a, iv) in seq.actions().iter().zip(traj.intervals()) {
        if let Some(axis) = a.axis() {
            LocalGate::rotation(axis, std::f64::consts::FRAC_PI_2).apply_left(basis, &mut u);
        }
        let ud = u.t().mapv(|v| v.conj());
        let dz = ud.dot(&d[2]).dot(&u);
        let z = ud.dot(&s[2]).dot(&u);
        let z_expected = &s[iv.field.axis.index()] * C64::new(f64::from(iv.field.sign), 0.0);
        worst = worst
            .max(crate::quantum::max_abs_diff(&dz, &d[iv.interaction.index()]))
            .max(crate::quantum::max_abs_diff(&z, &z_expected));
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderNorms {
    pub n_spins: usize,
    pub interaction: f64,
    pub field: f64,
    pub cross: f64,
    pub all: f64,
}

/// Structured summary of the average Hamiltonian of one sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvgHamiltonianReport {
    pub name: Option<String>,
    pub tokens: String,
    pub length: usize,
    pub tau: f64,
    pub cyclic: bool,
    pub interaction_labels: String,
    pub field_labels: Vec<String>,
    pub zeroth: ZerothOrder,
    pub interaction_vanishes: bool,
    pub field_vanishes: bool,
    /// Max-norms of the first-order terms (absent when not requested).
    pub first_order: Option<FirstOrderNorms>,
}

/// Report for `seq`; with `system` the first-order terms are evaluated on it.
pub fn avg_hamiltonian_report(
    seq: &PulseSequence,
    system: Option<(&SpinBasis, &CouplingGraph, &ImperfectionSet)>,
) -> Result<AvgHamiltonianReport> {
    let traj = trajectory(seq);
    let zeroth = zeroth_order_of(&traj, seq.actions());
    let first_order = match system {
        None => None,
        Some((basis, graph, imp)) => {
            let ops = AhtBasis::new(basis, graph, &field_weights(basis, imp)?)?;
            let c = ordered_products(&interval_coefficients(&traj));
            let norm = |s| ops.assemble(&c, seq.tau(), seq.len(), s).max_norm();
            Some(FirstOrderNorms {
                n_spins: basis.n_spins(),
                interaction: norm(TermSelector::Interaction),
                field: norm(TermSelector::Field),
                cross: norm(TermSelector::Cross),
                all: norm(TermSelector::All),
            })
        }
    };
    Ok(AvgHamiltonianReport {
        name: seq.name().map(str::to_string),
        tokens: seq.tokens(),
        length: seq.len(),
        tau: seq.tau(),
        cyclic: traj.is_cyclic(),
        interaction_labels: traj.interaction_labels(),
        field_labels: traj.field_labels(),
        interaction_vanishes: zeroth.interaction_vanishes(),
        field_vanishes: zeroth.field_vanishes(),
        zeroth,
        first_order,
    })
}
