use std::f64::consts::PI;

use ndarray::Array2;
use ndarray_linalg::{Eig, Inverse};

use super::{adjoint, build_collective, unitarity_deviation, Axis, CMatrix, Operator, OperatorKind, SpinBasis, C64};
use crate::error::{Error, Result};

/// Infidelity floor applied before taking the logarithm in [`reward`].
pub const INFIDELITY_FLOOR: f64 = 1e-12;

const UNITARY_TOL: f64 = 1e-10;

fn require_unitary(op: &Operator) -> Result<()> {
    if op.kind() == OperatorKind::Unitary {
        return Ok(());
    }
    let dev = unitarity_deviation(op.matrix());
    if dev > UNITARY_TOL {
        return Err(Error::NotUnitary(dev));
    }
    Ok(())
}

/// Eigenphases of `W = U·U_tgt†` after removing the global phase `arg Tr W`,
/// each on the principal branch `(−π, π]`, divided by `root`.
///
/// The global phase is taken out first so that a propagator equal to
/// `e^{iφ}·(near identity)` does not straddle the branch cut.
pub fn root_eigenphases(u: &Operator, root: f64, target: &Operator) -> Result<Vec<f64>> {
    require_unitary(u)?;
    require_unitary(target)?;
    if u.dim() != target.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), actual: target.dim() });
    }
    if !(root > 0.0) {
        return Err(Error::InvalidArgument(format!("root {root} must be positive")));
    }
    let w = u.matrix().dot(&adjoint(target.matrix()));
    let (values, _) = w.eig()?;
    let trace: C64 = values.iter().sum();
    let dim = values.len() as f64;
    let global = if trace.norm() > 1e-8 * dim { trace.arg() } else { 0.0 };
    let unwind = C64::from_polar(1.0, -global);
    Ok(values
        .iter()
        .map(|z| {
            let mut theta = (z * unwind).arg();
            if theta <= -PI {
                theta = PI;
            }
            theta / root
        })
        .collect())
}

/// `1 − |Σ_k e^{iψ_k}| / d`, evaluated as `Σ_{j<k} 4 sin²((ψ_j − ψ_k)/2) / (d (d + |S|))`
/// to keep precision for near-unit fidelities.
pub fn infidelity_of_eigenphases(phases: &[f64]) -> f64 {
    let d = phases.len() as f64;
    if phases.is_empty() {
        return 0.0;
    }
    let s: C64 = phases.iter().map(|&p| C64::from_polar(1.0, p)).sum();
    let mut spread = 0.0;
    for (j, &pj) in phases.iter().enumerate() {
        for &pk in &phases[j + 1..] {
            let h = ((pj - pk) / 2.0).sin();
            spread += 4.0 * h * h;
        }
    }
    (spread / (d * (d + s.norm()))).clamp(0.0, 1.0)
}

/// `1 − F` for the effective single-step propagator `U^{1/M}`.
pub fn propagator_infidelity(u: &Operator, cycle_len: usize, target: &Operator) -> Result<f64> {
    if cycle_len == 0 {
        return Err(Error::InvalidArgument("cycle length must be at least 1".into()));
    }
    Ok(infidelity_of_eigenphases(&root_eigenphases(u, cycle_len as f64, target)?))
}

/// `F = |Tr(U^{1/M} U_tgt†)| / 2^N`, with the `M`-th root taken through the
/// eigendecomposition of `U U_tgt†` on the principal branch.
pub fn propagator_fidelity(u: &Operator, cycle_len: usize, target: &Operator) -> Result<f64> {
    Ok(1.0 - propagator_infidelity(u, cycle_len, target)?)
}

/// `R = −ln max(1 − F, 1e−12)`.
pub fn reward(fidelity: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&fidelity) {
        return Err(Error::InvalidArgument(format!("fidelity {fidelity} outside [0, 1]")));
    }
    Ok(-(1.0 - fidelity).max(INFIDELITY_FLOOR).ln())
}

/// `U^n` by repeated squaring.
pub fn matrix_power(u: &Operator, n: u64) -> Operator {
    let dim = u.dim();
    let mut result: CMatrix = Array2::eye(dim);
    let mut base = u.matrix().clone();
    let mut e = n;
    let mut first = true;
    while e > 0 {
        if e & 1 == 1 {
            result = if first { base.clone() } else { result.dot(&base) };
            first = false;
        }
        e >>= 1;
        if e > 0 {
            base = base.dot(&base);
        }
    }
    Operator::from_parts(result, u.kind())
}

/// `U^p` for real `p`, i.e. evolution under the Floquet Hamiltonian
/// `H_F = i log(U)/T` for `p·T`. Uses the phase-aligned principal branch of
/// [`root_eigenphases`]; the global phase is restored as `e^{ipφ}`.
pub fn unitary_power(u: &Operator, p: f64) -> Result<Operator> {
    require_unitary(u)?;
    let (values, vectors) = u.matrix().eig()?;
    let trace: C64 = values.iter().sum();
    let global = if trace.norm() > 1e-8 * values.len() as f64 { trace.arg() } else { 0.0 };
    let unwind = C64::from_polar(1.0, -global);
    let powered = values.mapv(|z| {
        let mut theta = (z * unwind).arg();
        if theta <= -PI {
            theta = PI;
        }
        C64::from_polar(1.0, p * (theta + global))
    });
    let inv = vectors.inv()?;
    let scaled = &vectors * &powered.view().insert_axis(ndarray::Axis(0));
    Ok(Operator::from_parts(scaled.dot(&inv), OperatorKind::Unitary))
}

/// `C_OO = (4/N) Re Tr(Uⁿ O U†ⁿ O) / 2^N` for the collective operator `O` on `axis`.
pub fn autocorrelation(u_cycle: &Operator, n_cycles: u64, axis: Axis, basis: &SpinBasis) -> Result<f64> {
    require_unitary(u_cycle)?;
    let un = matrix_power(u_cycle, n_cycles);
    Ok(correlation_of_power(&un, axis, basis))
}

fn correlation_of_power(un: &Operator, axis: Axis, basis: &SpinBasis) -> f64 {
    let o = build_collective(basis, axis).into_matrix();
    let u = un.matrix();
    let left = u.dot(&o);
    let right = adjoint(u).dot(&o);
    // Re Tr(left · right) = Re Σ_ij left_ij right_ji
    let mut acc = 0.0;
    for ((i, j), a) in left.indexed_iter() {
        acc += (a * right[[j, i]]).re;
    }
    4.0 * acc / (basis.n_spins() as f64 * basis.dim() as f64)
}

/// The three collective autocorrelations and their geometric average.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Correlations {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
}

impl Correlations {
    pub fn average(&self) -> f64 {
        average_correlation(self.xx, self.yy, self.zz)
    }

    /// Arithmetic mean of two sets, entry by entry.
    pub fn midpoint(&self, other: &Correlations) -> Correlations {
        Correlations {
            xx: 0.5 * (self.xx + other.xx),
            yy: 0.5 * (self.yy + other.yy),
            zz: 0.5 * (self.zz + other.zz),
        }
    }
}

/// All three correlations of an already-evolved propagator `Uⁿ`.
pub fn autocorrelations(evolved: &Operator, basis: &SpinBasis) -> Result<Correlations> {
    require_unitary(evolved)?;
    Ok(Correlations {
        xx: correlation_of_power(evolved, Axis::X, basis),
        yy: correlation_of_power(evolved, Axis::Y, basis),
        zz: correlation_of_power(evolved, Axis::Z, basis),
    })
}

/// `(c_xx c_yy c_zz)^{1/3}` when all three are positive, otherwise 0.
pub fn average_correlation(c_xx: f64, c_yy: f64, c_zz: f64) -> f64 {
    if c_xx > 0.0 && c_yy > 0.0 && c_zz > 0.0 {
        (c_xx * c_yy * c_zz).cbrt()
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{build_dipolar, expm_hermitian, CouplingGraph};
    use ndarray_linalg::{Eigh, UPLO};

    const J: f64 = 32.7e3;

    fn pair() -> (SpinBasis, Operator) {
        let basis = SpinBasis::open(2).unwrap();
        let graph = CouplingGraph::new().with(0, 1, J).unwrap();
        (basis, build_dipolar(&basis, &graph, Axis::Z).unwrap())
    }

    #[test]
    fn identical_propagators_have_unit_fidelity() {
        let (_, d) = pair();
        let u = expm_hermitian(&d, 3e-6).unwrap();
        for m in [1, 2, 7] {
            assert!((propagator_fidelity(&u, m, &u).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn free_pair_fidelity_matches_trace_oracle() {
        // Oracle: eigenvalues of D_z for the pair, |Σ e^{−iλτ}| / 4.
        let (_, d) = pair();
        let tau = 10e-6;
        let (ev, _) = d.matrix().eigh(UPLO::Lower).unwrap();
        let oracle = ev.iter().map(|&l| C64::from_polar(1.0, -l * tau)).sum::<C64>().norm() / 4.0;
        let u = expm_hermitian(&d, tau).unwrap();
        let f = propagator_fidelity(&u, 1, &Operator::identity(4)).unwrap();
        assert!((f - oracle).abs() < 1e-13, "{f} vs {oracle}");
        // Frozen value of the oracle: J τ = 0.327; spectrum {J/4, J/4, 0, −J/2}.
        let frozen = (2.0 * C64::from_polar(1.0, -0.25 * J * tau) + 1.0 + C64::from_polar(1.0, 0.5 * J * tau)).norm() / 4.0;
        assert!((f - frozen).abs() < 1e-13);
    }

    #[test]
    fn global_phase_does_not_change_fidelity() {
        let (_, d) = pair();
        let u = expm_hermitian(&d, 7e-6).unwrap();
        let id = Operator::identity(4);
        let f = propagator_fidelity(&u, 1, &id).unwrap();
        for phi in [0.3, 2.0, PI, -2.9] {
            let shifted = Operator::from_parts(u.matrix() * C64::from_polar(1.0, phi), OperatorKind::Unitary);
            assert!((propagator_fidelity(&shifted, 1, &id).unwrap() - f).abs() < 1e-12);
        }
    }

    #[test]
    fn root_of_minus_identity_is_uniform() {
        let minus = Operator::from_parts(-CMatrix::eye(8), OperatorKind::Unitary);
        let f = propagator_fidelity(&minus, 6, &Operator::identity(8)).unwrap();
        assert!((f - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fidelity_rejects_non_unitary() {
        let bad = Operator::general(CMatrix::eye(4) * C64::new(2.0, 0.0)).unwrap();
        assert!(propagator_fidelity(&bad, 1, &Operator::identity(4)).is_err());
    }

    #[test]
    fn reward_values() {
        assert_eq!(reward(0.0).unwrap(), 0.0);
        assert!((reward(1.0 - (-5.0_f64).exp()).unwrap() - 5.0).abs() < 1e-9);
        assert!((reward(1.0).unwrap() - 27.631021115928547).abs() < 1e-9);
        assert!(reward(1.2).is_err());
        assert!(reward(-0.1).is_err());
        assert!(reward(0.3).unwrap() < reward(0.31).unwrap());
    }

    #[test]
    fn correlation_is_normalized_at_zero_cycles() {
        let basis = SpinBasis::periodic(4).unwrap();
        let d = build_dipolar(&basis, &CouplingGraph::nearest_neighbor(&basis, J), Axis::Z).unwrap();
        let u = expm_hermitian(&d, 5e-6).unwrap();
        for axis in Axis::ALL {
            assert!((autocorrelation(&u, 0, axis, &basis).unwrap() - 1.0).abs() < 1e-12);
            let id = Operator::identity(16);
            assert!((autocorrelation(&id, 9, axis, &basis).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pair_x_correlation_matches_trace_oracle() {
        // Oracle: explicit 4×4 evaluation of (4/N) Re Tr(U X U† X)/4.
        let (basis, d) = pair();
        let u = expm_hermitian(&d, 10e-6).unwrap();
        let x = build_collective(&basis, Axis::X).into_matrix();
        let um = u.matrix();
        let evolved = um.dot(&x).dot(&adjoint(um)).dot(&x);
        let oracle = 4.0 * evolved.diag().sum().re / (2.0 * 4.0);
        let c = autocorrelation(&u, 1, Axis::X, &basis).unwrap();
        assert!((c - oracle).abs() < 1e-13);
        // Frozen: X(t)X for the pair oscillates as cos(3Jt/4).
        assert!((c - (0.75 * J * 10e-6).cos()).abs() < 1e-12);
    }

    #[test]
    fn average_correlation_rules() {
        assert_eq!(average_correlation(1.0, 1.0, 1.0), 1.0);
        assert_eq!(average_correlation(0.8, -0.1, 0.9), 0.0);
        assert!((average_correlation(0.5, 0.5, 0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn matrix_power_and_unitary_power_agree_on_integers() {
        let basis = SpinBasis::periodic(3).unwrap();
        let d = build_dipolar(&basis, &CouplingGraph::nearest_neighbor(&basis, J), Axis::Z).unwrap();
        let u = expm_hermitian(&d, 4e-6).unwrap();
        let p3 = matrix_power(&u, 3);
        let r3 = unitary_power(&u, 3.0).unwrap();
        assert!(p3.max_distance(&r3) < 1e-12);
        let half = unitary_power(&u, 0.5).unwrap();
        assert!(half.mul(&half).max_distance(&u) < 1e-12);
        assert_eq!(matrix_power(&u, 0).max_distance(&Operator::identity(8)), 0.0);
    }
}
