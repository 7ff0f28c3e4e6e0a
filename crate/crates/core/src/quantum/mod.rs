//! Dense spin-1/2 operators: Hamiltonian construction, exponentials,
//! propagator fidelity and infinite-temperature autocorrelations.
//!
//! Basis states are labelled by integers `0..2^N`; spin `j` (0-based) is the
//! bit `1 << (N - 1 - j)`, with a cleared bit meaning spin up (`S_z = +1/2`).

mod hamiltonian;
mod expm;
mod fidelity;

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use hamiltonian::{
    build_collective, build_dipolar, build_disorder_hamiltonian, build_field, single_spin_operator,
};
pub use expm::{expm_hermitian, BlockSpectrum, LocalGate};
pub(crate) use expm::BlockUnitary;
pub use fidelity::{
    autocorrelation, autocorrelations, average_correlation, infidelity_of_eigenphases,
    matrix_power, propagator_fidelity, propagator_infidelity, reward, root_eigenphases,
    unitary_power, Correlations, INFIDELITY_FLOOR,
};

pub type C64 = Complex64;
pub type CMatrix = Array2<C64>;

/// Largest chain handled by the dense representation (2^12 = 4096 states).
pub const MAX_SPINS: usize = 12;

const HERMITIAN_REL_TOL: f64 = 1e-12;
const UNITARY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

/// Number of spins and chain boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinBasis {
    n_spins: usize,
    boundary: Boundary,
}

impl SpinBasis {
    pub fn new(n_spins: usize, boundary: Boundary) -> Result<Self> {
        if !(2..=MAX_SPINS).contains(&n_spins) {
            return Err(Error::SpinCount(n_spins));
        }
        Ok(Self { n_spins, boundary })
    }

    pub fn open(n_spins: usize) -> Result<Self> {
        Self::new(n_spins, Boundary::Open)
    }

    pub fn periodic(n_spins: usize) -> Result<Self> {
        Self::new(n_spins, Boundary::Periodic)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Hilbert-space dimension `2^N`.
    pub fn dim(&self) -> usize {
        1 << self.n_spins
    }

    pub(crate) fn bit(&self, spin: usize) -> usize {
        1 << (self.n_spins - 1 - spin)
    }
}

/// Symmetric pairwise couplings `J_jk` (rad/s), stored once per unordered pair.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CouplingGraph {
    couplings: BTreeMap<(usize, usize), f64>,
}

impl CouplingGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `J_jk`; the pair is stored with the smaller index first.
    pub fn set(&mut self, j: usize, k: usize, strength: f64) -> Result<()> {
        if j == k {
            return Err(Error::SelfCoupling(j));
        }
        let key = if j < k { (j, k) } else { (k, j) };
        self.couplings.insert(key, strength);
        Ok(())
    }

    pub fn with(mut self, j: usize, k: usize, strength: f64) -> Result<Self> {
        self.set(j, k, strength)?;
        Ok(self)
    }

    /// Nearest-neighbour chain `J_jk = J δ_{j+1,k}`, closing the ring for
    /// periodic boundaries when `N > 2`.
    pub fn nearest_neighbor(basis: &SpinBasis, strength: f64) -> Self {
        let n = basis.n_spins();
        let mut couplings = BTreeMap::new();
        for j in 0..n - 1 {
            couplings.insert((j, j + 1), strength);
        }
        if basis.boundary() == Boundary::Periodic && n > 2 {
            couplings.insert((0, n - 1), strength);
        }
        Self { couplings }
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        let key = if j < k { (j, k) } else { (k, j) };
        self.couplings.get(&key).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.couplings.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.couplings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.couplings.is_empty()
    }

    pub(crate) fn check(&self, basis: &SpinBasis) -> Result<()> {
        for (&(j, k), _) in &self.couplings {
            for index in [j, k] {
                if index >= basis.n_spins() {
                    return Err(Error::IndexOutOfRange { index, n_spins: basis.n_spins() });
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Axis {
        Self::ALL[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Hermitian,
    Unitary,
    General,
}

/// A dense `2^N × 2^N` complex matrix tagged with the structure it is known to have.
#[derive(Clone, Debug)]
pub struct Operator {
    matrix: CMatrix,
    kind: OperatorKind,
}

impl Operator {
    /// Wraps a matrix after checking `‖A − A†‖_max ≤ 1e-12 ‖A‖_max`.
    pub fn hermitian(matrix: CMatrix) -> Result<Self> {
        check_square(&matrix)?;
        let dev = hermitian_deviation(&matrix);
        let scale = max_abs(&matrix).max(f64::MIN_POSITIVE);
        if dev > HERMITIAN_REL_TOL * scale {
            return Err(Error::NotHermitian(dev / scale));
        }
        Ok(Self { matrix, kind: OperatorKind::Hermitian })
    }

    /// Wraps a matrix after checking `‖U†U − I‖_max ≤ 1e-10`.
    pub fn unitary(matrix: CMatrix) -> Result<Self> {
        check_square(&matrix)?;
        let dev = unitarity_deviation(&matrix);
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self { matrix, kind: OperatorKind::Unitary })
    }

    pub fn general(matrix: CMatrix) -> Result<Self> {
        check_square(&matrix)?;
        Ok(Self { matrix, kind: OperatorKind::General })
    }

    pub(crate) fn from_parts(matrix: CMatrix, kind: OperatorKind) -> Self {
        Self { matrix, kind }
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: Array2::eye(dim), kind: OperatorKind::Unitary }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { matrix: Array2::zeros((dim, dim)), kind: OperatorKind::Hermitian }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn adjoint(&self) -> Operator {
        Operator { matrix: adjoint(&self.matrix), kind: self.kind }
    }

    /// Matrix product. Unitary times unitary stays unitary.
    pub fn mul(&self, other: &Operator) -> Operator {
        let kind = match (self.kind, other.kind) {
            (OperatorKind::Unitary, OperatorKind::Unitary) => OperatorKind::Unitary,
            _ => OperatorKind::General,
        };
        Operator { matrix: self.matrix.dot(&other.matrix), kind }
    }

    /// Real linear combination `a·self + b·other`; hermitian inputs stay hermitian.
    pub fn combine(&self, a: f64, other: &Operator, b: f64) -> Operator {
        let kind = match (self.kind, other.kind) {
            (OperatorKind::Hermitian, OperatorKind::Hermitian) => OperatorKind::Hermitian,
            _ => OperatorKind::General,
        };
        let matrix = &self.matrix * C64::new(a, 0.0) + &other.matrix * C64::new(b, 0.0);
        Operator { matrix, kind }
    }

    pub fn scale(&self, a: f64) -> Operator {
        Operator { matrix: &self.matrix * C64::new(a, 0.0), kind: self.kind }
    }

    /// Commutator `[self, other]`.
    pub fn commutator(&self, other: &Operator) -> Operator {
        Operator { matrix: commutator(&self.matrix, &other.matrix), kind: OperatorKind::General }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diag().sum()
    }

    pub fn max_norm(&self) -> f64 {
        max_abs(&self.matrix)
    }

    /// Elementwise maximum distance to another operator.
    pub fn max_distance(&self, other: &Operator) -> f64 {
        max_abs_diff(&self.matrix, &other.matrix)
    }

    pub fn unitarity_deviation(&self) -> f64 {
        unitarity_deviation(&self.matrix)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        hermitian_deviation(&self.matrix)
    }
}

/// On-site random fields `w_j` drawn uniformly from `[−W, W]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    fields: Vec<f64>,
    width: f64,
    seed: u64,
}

impl DisorderRealization {
    pub fn sample(n_spins: usize, width: f64, seed: u64) -> Result<Self> {
        if !(width >= 0.0) || !width.is_finite() {
            return Err(Error::InvalidArgument(format!("disorder width {width} must be finite and >= 0")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fields = (0..n_spins)
            .map(|_| if width > 0.0 { rng.random_range(-width..=width) } else { 0.0 })
            .collect();
        Ok(Self { fields, width, seed })
    }

    /// Explicit fields; `width` is taken as the largest magnitude.
    pub fn from_fields(fields: Vec<f64>) -> Self {
        let width = fields.iter().fold(0.0_f64, |m, w| m.max(w.abs()));
        Self { fields, width, seed: 0 }
    }

    /// The uniform realization `w_j = Δ`, i.e. a frequency offset.
    pub fn uniform(n_spins: usize, value: f64) -> Self {
        Self::from_fields(vec![value; n_spins])
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), actual: m.ncols() });
    }
    Ok(())
}

pub(crate) fn adjoint(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

pub(crate) fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.dot(b) - b.dot(a)
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub(crate) fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    dev
}

pub(crate) fn unitarity_deviation(m: &CMatrix) -> f64 {
    let prod = adjoint(m).dot(m);
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for ((i, j), z) in prod.indexed_iter() {
        let target = if i == j { 1.0 } else { 0.0 };
        dev = dev.max((z - C64::new(target, 0.0)).norm());
    }
    debug_assert_eq!(prod.nrows(), n);
    dev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_rejects_out_of_range_sizes() {
        assert!(SpinBasis::open(1).is_err());
        assert!(SpinBasis::open(MAX_SPINS + 1).is_err());
        assert_eq!(SpinBasis::periodic(10).unwrap().dim(), 1024);
    }

    #[test]
    fn coupling_graph_is_symmetric_and_rejects_self_loops() {
        let g = CouplingGraph::new().with(2, 0, 1.5).unwrap();
        assert_eq!(g.get(0, 2), 1.5);
        assert_eq!(g.get(2, 0), 1.5);
        assert!(CouplingGraph::new().with(1, 1, 1.0).is_err());
    }

    #[test]
    fn nearest_neighbor_ring_closes_only_for_periodic() {
        let open = CouplingGraph::nearest_neighbor(&SpinBasis::open(4).unwrap(), 1.0);
        let ring = CouplingGraph::nearest_neighbor(&SpinBasis::periodic(4).unwrap(), 1.0);
        assert_eq!(open.len(), 3);
        assert_eq!(ring.len(), 4);
        assert_eq!(ring.get(3, 0), 1.0);
        let pair = CouplingGraph::nearest_neighbor(&SpinBasis::periodic(2).unwrap(), 1.0);
        assert_eq!(pair.len(), 1);
    }

    #[test]
    fn disorder_fields_stay_within_width() {
        let r = DisorderRealization::sample(8, 2.5, 17).unwrap();
        assert_eq!(r.len(), 8);
        assert!(r.fields().iter().all(|w| w.abs() <= 2.5));
        assert_eq!(r, DisorderRealization::sample(8, 2.5, 17).unwrap());
    }

    #[test]
    fn operator_constructors_validate() {
        let mut m = CMatrix::zeros((2, 2));
        m[[0, 1]] = C64::new(0.0, 1.0);
        assert!(Operator::hermitian(m.clone()).is_err());
        m[[1, 0]] = C64::new(0.0, -1.0);
        assert!(Operator::hermitian(m.clone()).is_ok());
        assert!(Operator::unitary(m).is_ok());
        assert!(Operator::unitary(CMatrix::zeros((2, 2))).is_err());
    }
}
