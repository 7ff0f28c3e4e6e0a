use ndarray::Array2;

use super::{Axis, CMatrix, CouplingGraph, DisorderRealization, Operator, OperatorKind, SpinBasis, C64};
use crate::error::{Error, Result};

/// Single spin-1/2 operator `S_axis` in the `(up, down)` basis.
pub fn single_spin_operator(axis: Axis) -> [[C64; 2]; 2] {
    let h = 0.5;
    let z = C64::new(0.0, 0.0);
    match axis {
        Axis::X => [[z, C64::new(h, 0.0)], [C64::new(h, 0.0), z]],
        Axis::Y => [[z, C64::new(0.0, -h)], [C64::new(0.0, h), z]],
        Axis::Z => [[C64::new(h, 0.0), z], [z, C64::new(-h, 0.0)]],
    }
}

/// Adds `coeff · A_j ⊗ B_k` to `m`.
fn add_two_site(
    m: &mut CMatrix,
    basis: &SpinBasis,
    j: usize,
    k: usize,
    a: &[[C64; 2]; 2],
    b: &[[C64; 2]; 2],
    coeff: f64,
) {
    let (bj, bk) = (basis.bit(j), basis.bit(k));
    for col in 0..basis.dim() {
        let sj = usize::from(col & bj != 0);
        let sk = usize::from(col & bk != 0);
        for rj in 0..2 {
            let aj = a[rj][sj];
            if aj.norm_sqr() == 0.0 {
                continue;
            }
            for rk in 0..2 {
                let bv = b[rk][sk];
                if bv.norm_sqr() == 0.0 {
                    continue;
                }
                let mut row = col & !(bj | bk);
                if rj == 1 {
                    row |= bj;
                }
                if rk == 1 {
                    row |= bk;
                }
                m[[row, col]] += aj * bv * coeff;
            }
        }
    }
}

/// Secular dipolar interaction along `axis`:
/// `D_a = ½ Σ_{j<k} J_jk (3 S_a^j S_a^k − S^j·S^k)`.
pub fn build_dipolar(basis: &SpinBasis, graph: &CouplingGraph, axis: Axis) -> Result<Operator> {
    graph.check(basis)?;
    let dim = basis.dim();
    let mut m = Array2::zeros((dim, dim));
    let ops = Axis::ALL.map(single_spin_operator);
    for ((j, k), coupling) in graph.iter() {
        if coupling == 0.0 {
            continue;
        }
        for b in Axis::ALL {
            let weight = if b == axis { 3.0 - 1.0 } else { -1.0 };
            let s = &ops[b.index()];
            add_two_site(&mut m, basis, j, k, s, s, 0.5 * coupling * weight);
        }
    }
    Ok(Operator::from_parts(m, OperatorKind::Hermitian))
}

/// Collective spin `Σ_j S_axis^j`.
pub fn build_collective(basis: &SpinBasis, axis: Axis) -> Operator {
    let dim = basis.dim();
    let mut m = Array2::zeros((dim, dim));
    let s = single_spin_operator(axis);
    for j in 0..basis.n_spins() {
        let bj = basis.bit(j);
        for col in 0..dim {
            let sj = usize::from(col & bj != 0);
            for rj in 0..2 {
                let v = s[rj][sj];
                if v.norm_sqr() == 0.0 {
                    continue;
                }
                let row = if rj == 1 { col | bj } else { col & !bj };
                m[[row, col]] += v;
            }
        }
    }
    Operator::from_parts(m, OperatorKind::Hermitian)
}

/// Single-body field `Σ_j w_j S_axis^j`.
pub fn build_field(basis: &SpinBasis, axis: Axis, weights: &[f64]) -> Result<Operator> {
    if weights.len() != basis.n_spins() {
        return Err(Error::DimensionMismatch { expected: basis.n_spins(), actual: weights.len() });
    }
    let dim = basis.dim();
    let mut m = Array2::zeros((dim, dim));
    let s = single_spin_operator(axis);
    for (j, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let bj = basis.bit(j);
        for col in 0..dim {
            let sj = usize::from(col & bj != 0);
            for rj in 0..2 {
                let v = s[rj][sj];
                if v.norm_sqr() != 0.0 {
                    let row = if rj == 1 { col | bj } else { col & !bj };
                    m[[row, col]] += v * w;
                }
            }
        }
    }
    Ok(Operator::from_parts(m, OperatorKind::Hermitian))
}

/// Longitudinal on-site fields `Σ_j w_j S_z^j` (diagonal).
pub fn build_disorder_hamiltonian(basis: &SpinBasis, realization: &DisorderRealization) -> Result<Operator> {
    if realization.len() != basis.n_spins() {
        return Err(Error::DimensionMismatch { expected: basis.n_spins(), actual: realization.len() });
    }
    let dim = basis.dim();
    let mut m = Array2::zeros((dim, dim));
    for state in 0..dim {
        let e: f64 = realization
            .fields()
            .iter()
            .enumerate()
            .map(|(j, w)| if state & basis.bit(j) == 0 { 0.5 * w } else { -0.5 * w })
            .sum();
        m[[state, state]] = C64::new(e, 0.0);
    }
    Ok(Operator::from_parts(m, OperatorKind::Hermitian))
}
