use ndarray::{s, Array1, Array2, Axis as NdAxis, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};

use super::{hermitian_deviation, max_abs, CMatrix, Operator, OperatorKind, SpinBasis, C64};
use crate::error::{Error, Result};

/// Eigendecomposition of a hermitian matrix, split into the connected
/// blocks of its sparsity pattern so that block-diagonal generators (for
/// instance anything conserving total `S_z`) are diagonalized sector by sector.
#[derive(Clone, Debug)]
pub struct BlockSpectrum {
    dim: usize,
    blocks: Vec<SpectralBlock>,
}

#[derive(Clone, Debug)]
struct SpectralBlock {
    indices: Vec<usize>,
    values: Array1<f64>,
    vectors: CMatrix,
}

/// A block-diagonal unitary, applied without forming the dense matrix.
#[derive(Clone, Debug)]
pub(crate) struct BlockUnitary {
    dim: usize,
    blocks: Vec<(Vec<usize>, CMatrix)>,
}

impl BlockSpectrum {
    pub fn new(h: &Operator) -> Result<Self> {
        let m = h.matrix();
        let scale = max_abs(m).max(f64::MIN_POSITIVE);
        let dev = hermitian_deviation(m);
        if dev > 1e-12 * scale {
            return Err(Error::NotHermitian(dev / scale));
        }
        let dim = m.nrows();
        let blocks = connected_blocks(m)
            .into_iter()
            .map(|indices| {
                // Column-major: the row-major complex path of `eigh` returns conjugated eigenvectors.
                let k = indices.len();
                let sub = Array2::from_shape_fn((k, k).f(), |(a, b)| m[[indices[a], indices[b]]]);
                let (values, vectors) = sub.eigh(UPLO::Lower)?;
                Ok(SpectralBlock { indices, values, vectors })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dim, blocks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// All eigenvalues, unsorted.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.values.iter().copied()).collect()
    }

    pub(crate) fn unitary_blocks(&self, t: f64) -> BlockUnitary {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let phases = b.values.mapv(|e| C64::from_polar(1.0, -e * t));
                let scaled = &b.vectors * &phases.view().insert_axis(NdAxis(0));
                let adj = b.vectors.t().mapv(|z| z.conj());
                (b.indices.clone(), scaled.dot(&adj))
            })
            .collect();
        BlockUnitary { dim: self.dim, blocks }
    }

    /// `e^{−iHt}` as a dense operator.
    pub fn propagator(&self, t: f64) -> Operator {
        Operator::from_parts(self.unitary_blocks(t).to_dense(), OperatorKind::Unitary)
    }
}

impl BlockUnitary {
    pub(crate) fn to_dense(&self) -> CMatrix {
        let mut out = Array2::zeros((self.dim, self.dim));
        for (idx, block) in &self.blocks {
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    out[[i, j]] = block[[a, b]];
                }
            }
        }
        out
    }

    /// `target ← self · target`.
    pub(crate) fn apply_left(&self, target: &mut CMatrix) {
        for (idx, block) in &self.blocks {
            if idx.len() == 1 {
                let z = block[[0, 0]];
                target.row_mut(idx[0]).mapv_inplace(|v| v * z);
                continue;
            }
            let rows = target.select(NdAxis(0), idx);
            let updated = block.dot(&rows);
            for (a, &i) in idx.iter().enumerate() {
                target.row_mut(i).assign(&updated.row(a));
            }
        }
    }
}

/// Union-find over the nonzero pattern of `m`.
fn connected_blocks(m: &CMatrix) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if m[[i, j]].norm_sqr() != 0.0 || m[[j, i]].norm_sqr() != 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// `e^{−iHt}` for hermitian `H`, via eigendecomposition.
pub fn expm_hermitian(h: &Operator, t: f64) -> Result<Operator> {
    Ok(BlockSpectrum::new(h)?.propagator(t))
}

/// A product of identical single-spin unitaries `u^{⊗N}`, the form every
/// collective rotation takes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalGate {
    u: [[C64; 2]; 2],
}

impl LocalGate {
    pub fn identity() -> Self {
        let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        Self { u: [[o, z], [z, o]] }
    }

    /// `exp(−i θ (n·S))` for a unit vector `n` on a single spin.
    pub fn rotation(axis: [f64; 3], angle: f64) -> Self {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if norm == 0.0 || angle == 0.0 {
            return Self::identity();
        }
        let [nx, ny, nz] = axis.map(|a| a / norm);
        let (c, sn) = ((angle / 2.0).cos(), (angle / 2.0).sin());
        // cos(θ/2) I − i sin(θ/2) (n·σ)
        let u = [
            [C64::new(c, -sn * nz), C64::new(-sn * ny, -sn * nx)],
            [C64::new(sn * ny, -sn * nx), C64::new(c, sn * nz)],
        ];
        Self { u }
    }

    pub fn matrix(&self) -> [[C64; 2]; 2] {
        self.u
    }

    /// `self · other` (other acts first).
    pub fn then_after(&self, other: &LocalGate) -> LocalGate {
        let (a, b) = (&self.u, &other.u);
        let mut u = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                u[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        LocalGate { u }
    }

    /// `target ← u^{⊗N} · target`.
    pub fn apply_left(&self, basis: &SpinBasis, target: &mut CMatrix) {
        let dim = basis.dim();
        let [[a, b], [c, d]] = self.u;
        let ncols = target.ncols();
        for spin in 0..basis.n_spins() {
            let bit = basis.bit(spin);
            for r0 in 0..dim {
                if r0 & bit != 0 {
                    continue;
                }
                let r1 = r0 | bit;
                let (mut row0, mut row1) = target.multi_slice_mut((s![r0, ..], s![r1, ..]));
                for col in 0..ncols {
                    let (x, y) = (row0[col], row1[col]);
                    row0[col] = a * x + b * y;
                    row1[col] = c * x + d * y;
                }
            }
        }
    }

    pub fn to_operator(&self, basis: &SpinBasis) -> Operator {
        let mut m = Array2::eye(basis.dim());
        self.apply_left(basis, &mut m);
        Operator::from_parts(m, OperatorKind::Unitary)
    }
}
