use std::f64::consts::FRAC_PI_2;

use ndarray::Array2;

use super::{Action, ImperfectionSet, PulseSequence};
use crate::error::{Error, Result};
use crate::quantum::{
    build_collective, build_dipolar, build_disorder_hamiltonian, Axis, BlockSpectrum, CMatrix, CouplingGraph,
    BlockUnitary, DisorderRealization, LocalGate, Operator, OperatorKind, SpinBasis,
};

/// `H₀ = D_z + Δ·Z + Σ_j w_j S_z^j`.
pub fn free_hamiltonian(basis: &SpinBasis, graph: &CouplingGraph, imp: &ImperfectionSet) -> Result<Operator> {
    let mut h = build_dipolar(basis, graph, Axis::Z)?;
    if imp.offset != 0.0 {
        // Built as uniform disorder so offset and uniform disorder give identical matrices.
        let offset = build_disorder_hamiltonian(basis, &DisorderRealization::uniform(basis.n_spins(), imp.offset))?;
        h = h.combine(1.0, &offset, 1.0);
    }
    if let Some(d) = &imp.disorder {
        h = h.combine(1.0, &build_disorder_hamiltonian(basis, d)?, 1.0);
    }
    Ok(h)
}

fn rotation_angle(imp: &ImperfectionSet) -> f64 {
    FRAC_PI_2 * (1.0 + imp.angle_error)
}

fn transient_gates(action: Action, imp: &ImperfectionSet) -> (LocalGate, LocalGate) {
    let t = action.transient_axis().expect("pulse action");
    (LocalGate::rotation(t, imp.alpha1), LocalGate::rotation(t, imp.alpha2))
}

/// Propagator of a single action.
///
/// For `t_w = 0` the pulse is `e^{−iα₁T} e^{−i(π/2)(1+ε)P} e^{−iα₂T}` with `T` the
/// collective spin a quarter turn ahead of the pulse axis `P`. For `t_w > 0` the
/// central factor is `e^{−i[(π/2)(1+ε)P/t_w + H₀] t_w}`.
pub fn pulse_propagator(
    action: Action,
    imp: &ImperfectionSet,
    h_free: &Operator,
    basis: &SpinBasis,
    tau: f64,
) -> Result<Operator> {
    imp.validate(tau)?;
    if h_free.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), actual: h_free.dim() });
    }
    match PulseOp::build(action, imp, h_free, basis)? {
        PulseOp::Identity => Ok(Operator::identity(basis.dim())),
        PulseOp::Local(g) => Ok(g.to_operator(basis)),
        PulseOp::Dense(m) => Ok(Operator::from_parts(m, OperatorKind::Unitary)),
    }
}

#[derive(Clone, Debug)]
enum PulseOp {
    Identity,
    Local(LocalGate),
    Dense(CMatrix),
}

impl PulseOp {
    fn build(action: Action, imp: &ImperfectionSet, h_free: &Operator, basis: &SpinBasis) -> Result<PulseOp> {
        let Some(axis) = action.axis() else {
            return Ok(PulseOp::Identity);
        };
        let (trailing, leading) = transient_gates(action, imp);
        let theta = rotation_angle(imp);
        if imp.pulse_width == 0.0 {
            let core = LocalGate::rotation(axis, theta);
            return Ok(PulseOp::Local(trailing.then_after(&core).then_after(&leading)));
        }
        let t_w = imp.pulse_width;
        let p = build_collective(basis, Axis::X)
            .combine(axis[0], &build_collective(basis, Axis::Y), axis[1]);
        let generator = p.combine(theta / t_w, h_free, 1.0);
        let mut m = BlockSpectrum::new(&generator)?.propagator(t_w).into_matrix();
        trailing.apply_left(basis, &mut m);
        let leading_dense = leading.to_operator(basis).into_matrix();
        Ok(PulseOp::Dense(m.dot(&leading_dense)))
    }
}

/// Compiles sequences for a fixed system, imperfection set and `tau`,
/// reusing the free-evolution spectrum and the four pulse propagators.
#[derive(Clone, Debug)]
pub struct CycleCompiler {
    basis: SpinBasis,
    tau: f64,
    free_after_pulse: BlockUnitary,
    free_after_delay: BlockUnitary,
    pulses: [PulseOp; 5],
}

impl CycleCompiler {
    pub fn new(basis: &SpinBasis, graph: &CouplingGraph, imp: &ImperfectionSet, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidArgument(format!("tau {tau} must be positive and finite")));
        }
        imp.validate(tau)?;
        let h_free = free_hamiltonian(basis, graph, imp)?;
        let spectrum = BlockSpectrum::new(&h_free)?;
        let free_after_delay = spectrum.unitary_blocks(tau);
        let free_after_pulse =
            if imp.pulse_width > 0.0 { spectrum.unitary_blocks(tau - imp.pulse_width) } else { free_after_delay.clone() };
        let mut pulses: [PulseOp; 5] = std::array::from_fn(|_| PulseOp::Identity);
        for a in Action::PULSES {
            pulses[a.index()] = PulseOp::build(a, imp, &h_free, basis)?;
        }
        Ok(Self { basis: *basis, tau, free_after_pulse, free_after_delay, pulses })
    }

    pub fn basis(&self) -> &SpinBasis {
        &self.basis
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Applies one slot (pulse, then free evolution) to `u` from the left.
    pub(crate) fn apply_slot(&self, action: Action, u: &mut CMatrix) {
        match &self.pulses[action.index()] {
            PulseOp::Identity => {}
            PulseOp::Local(g) => g.apply_left(&self.basis, u),
            PulseOp::Dense(m) => *u = m.dot(&*u),
        }
        if action.is_pulse() {
            self.free_after_pulse.apply_left(u);
        } else {
            self.free_after_delay.apply_left(u);
        }
    }

    /// `U = F U_{A_{M−1}} ⋯ F U_{A_0}`.
    pub fn compile(&self, actions: &[Action]) -> Operator {
        let mut u: CMatrix = Array2::eye(self.basis.dim());
        for &a in actions {
            self.apply_slot(a, &mut u);
        }
        Operator::from_parts(u, OperatorKind::Unitary)
    }
}

/// Cycle propagator of `seq` on the given system.
pub fn compile_cycle(
    seq: &PulseSequence,
    imp: &ImperfectionSet,
    basis: &SpinBasis,
    graph: &CouplingGraph,
) -> Result<Operator> {
    Ok(CycleCompiler::new(basis, graph, imp, seq.tau())?.compile(seq.actions()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{expm_hermitian, propagator_infidelity};

    const J: f64 = 32.7e3;

    fn system(n: usize, periodic: bool, j: f64) -> (SpinBasis, CouplingGraph) {
        let basis = if periodic { SpinBasis::periodic(n) } else { SpinBasis::open(n) }.unwrap();
        let graph = CouplingGraph::nearest_neighbor(&basis, j);
        (basis, graph)
    }

    fn collective(basis: &SpinBasis, axis: Axis, scale: f64) -> Operator {
        build_collective(basis, axis).scale(scale)
    }

    #[test]
    fn delay_pulse_is_identity() {
        let (basis, graph) = system(3, false, J);
        let imp = ImperfectionSet::ideal().with_angle_error(0.1).with_transients(0.01, 0.02);
        let h = free_hamiltonian(&basis, &graph, &imp).unwrap();
        let u = pulse_propagator(Action::Delay, &imp, &h, &basis, 5e-6).unwrap();
        assert_eq!(u.max_distance(&Operator::identity(8)), 0.0);
    }

    #[test]
    fn angle_error_pulse_matches_dense_exponential() {
        let (basis, graph) = system(3, false, J);
        let imp = ImperfectionSet::ideal().with_angle_error(0.05);
        let h = free_hamiltonian(&basis, &graph, &imp).unwrap();
        let u = pulse_propagator(Action::Px, &imp, &h, &basis, 5e-6).unwrap();
        let oracle = expm_hermitian(&build_collective(&basis, Axis::X), FRAC_PI_2 * 1.05).unwrap();
        assert!(u.max_distance(&oracle) < 1e-13);
    }

    #[test]
    fn transient_pulse_matches_three_factor_product() {
        let (basis, graph) = system(3, false, J);
        let imp = ImperfectionSet::ideal().with_transients(0.02, 0.02);
        let h = free_hamiltonian(&basis, &graph, &imp).unwrap();
        let u = pulse_propagator(Action::Px, &imp, &h, &basis, 5e-6).unwrap();
        let ey = expm_hermitian(&build_collective(&basis, Axis::Y), 0.02).unwrap();
        let ex = expm_hermitian(&build_collective(&basis, Axis::X), FRAC_PI_2).unwrap();
        let dist = u.max_distance(&ey.mul(&ex).mul(&ey));
        assert!(dist < 1e-13, "{dist}");

        // −y pulse: transient axis is +x; distinct edges.
        let imp = ImperfectionSet::ideal().with_transients(0.03, -0.01);
        let u = pulse_propagator(Action::My, &imp, &h, &basis, 5e-6).unwrap();
        let t1 = expm_hermitian(&build_collective(&basis, Axis::X), 0.03).unwrap();
        let core = expm_hermitian(&collective(&basis, Axis::Y, -1.0), FRAC_PI_2).unwrap();
        let t2 = expm_hermitian(&build_collective(&basis, Axis::X), -0.01).unwrap();
        assert!(u.max_distance(&t1.mul(&core).mul(&t2)) < 1e-13);
    }

    #[test]
    fn finite_width_pulse_matches_dense_generator() {
        let (basis, graph) = system(3, true, J);
        let t_w = 1e-6;
        let imp = ImperfectionSet::ideal().with_pulse_width(t_w).with_offset(0.3 * J).with_angle_error(0.02);
        let h = free_hamiltonian(&basis, &graph, &imp).unwrap();
        let u = pulse_propagator(Action::Py, &imp, &h, &basis, 5e-6).unwrap();
        let generator = collective(&basis, Axis::Y, FRAC_PI_2 * 1.02 / t_w).combine(1.0, &h, 1.0);
        let oracle = expm_hermitian(&generator, t_w).unwrap();
        assert!(u.max_distance(&oracle) < 1e-12);
        assert!(pulse_propagator(Action::Py, &imp, &h, &basis, 1e-6).is_err());
    }

    #[test]
    fn single_delay_cycle_is_free_evolution() {
        let (basis, graph) = system(4, true, J);
        let seq = PulseSequence::from_tokens("d", 5e-6).unwrap();
        let u = compile_cycle(&seq, &ImperfectionSet::ideal(), &basis, &graph).unwrap();
        let h = build_dipolar(&basis, &graph, Axis::Z).unwrap();
        assert!(u.max_distance(&expm_hermitian(&h, 5e-6).unwrap()) < 1e-13);
    }

    #[test]
    fn uncoupled_frame_cyclic_sequence_is_identity() {
        let (basis, graph) = system(4, true, 0.0);
        let seq = PulseSequence::from_tokens("y x x y -x -x", 5e-6).unwrap();
        let u = compile_cycle(&seq, &ImperfectionSet::ideal(), &basis, &graph).unwrap();
        assert!(u.max_distance(&Operator::identity(16)) < 1e-10);
    }

    /// Direct dense product oracle for the cycle propagator.
    fn dense_cycle(seq: &PulseSequence, imp: &ImperfectionSet, basis: &SpinBasis, graph: &CouplingGraph) -> Operator {
        let h = free_hamiltonian(basis, graph, imp).unwrap();
        let full = expm_hermitian(&h, seq.tau()).unwrap();
        let short = expm_hermitian(&h, seq.tau() - imp.pulse_width).unwrap();
        let mut u = Operator::identity(basis.dim());
        for &a in seq.actions() {
            if a.is_pulse() {
                let p = pulse_propagator(a, imp, &h, basis, seq.tau()).unwrap();
                u = short.mul(&p.mul(&u));
            } else {
                u = full.mul(&u);
            }
        }
        u
    }

    #[test]
    fn wahuha_cycle_matches_dense_oracle() {
        let (basis, graph) = system(4, true, J);
        let seq = PulseSequence::from_tokens("d x -y d y -x", 5e-6).unwrap();
        let imp = ImperfectionSet::ideal();
        let u = compile_cycle(&seq, &imp, &basis, &graph).unwrap();
        let oracle = dense_cycle(&seq, &imp, &basis, &graph);
        assert!(u.max_distance(&oracle) < 1e-12);
        let infidelity = propagator_infidelity(&u, 6, &Operator::identity(16)).unwrap();
        // Frozen from an independent 16×16 dense-product evaluation.
        assert!((infidelity / 8.146284735666143e-8 - 1.0).abs() < 1e-6, "{infidelity}");
    }

    #[test]
    fn imperfect_cycle_matches_dense_oracle() {
        let (basis, graph) = system(4, true, J);
        let seq = PulseSequence::from_tokens("-y x -x d y -x -x -y x -x y x x", 5e-6).unwrap();
        let imp = ImperfectionSet::ideal()
            .with_offset(0.7 * J)
            .with_disorder(DisorderRealization::sample(4, J, 3).unwrap())
            .with_angle_error(0.03)
            .with_pulse_width(0.8e-6)
            .with_transients(0.01, -0.02);
        let u = compile_cycle(&seq, &imp, &basis, &graph).unwrap();
        assert!(u.unitarity_deviation() < 1e-10);
        assert!(u.max_distance(&dense_cycle(&seq, &imp, &basis, &graph)) < 1e-12);
    }

    #[test]
    fn offset_equals_uniform_disorder_exactly() {
        let (basis, graph) = system(4, false, J);
        let seq = PulseSequence::from_tokens("y x x y -x -x", 5e-6).unwrap();
        let a = compile_cycle(&seq, &ImperfectionSet::ideal().with_offset(2.0 * J), &basis, &graph).unwrap();
        let b = compile_cycle(
            &seq,
            &ImperfectionSet::ideal().with_disorder(DisorderRealization::uniform(4, 2.0 * J)),
            &basis,
            &graph,
        )
        .unwrap();
        assert_eq!(a.max_distance(&b), 0.0);
    }
}
