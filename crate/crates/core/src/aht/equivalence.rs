use serde::{Deserialize, Serialize};

use super::frame::trajectory;
use super::order::{field_weights, interval_coefficients, ordered_products, zeroth_order_of, AhtBasis, TermSelector};
use crate::error::{Error, Result};
use crate::quantum::{build_field, Axis, CouplingGraph, DisorderRealization, SpinBasis};
use crate::sequence::{yxx_signs, ImperfectionSet, PulseSequence};

/// First-order field terms for one field configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldTerms {
    /// Disorder seed; `None` for the uniform offset.
    pub seed: Option<u64>,
    pub zeroth_norm: f64,
    pub cross_norm: f64,
    pub field_norm: f64,
    /// Norm of the within-block sum `Σ_{k>k'} [H^{j,k}, H^{j,k'}]` (cross
    /// and field parts) for each 3-interval block `j`.
    pub block_norms: Vec<f64>,
    /// Norm of the sum of all inter-block commutators.
    pub inter_block_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub tokens: String,
    pub n_spins: usize,
    pub offset: FieldTerms,
    pub disorder: Vec<FieldTerms>,
    pub tolerance: f64,
    /// Zeroth- and first-order field terms vanish for the offset and every
    /// disorder realization.
    pub equivalent: bool,
}

/// Compares the field-dependent zeroth- and first-order terms of a yxx
/// sequence under a uniform offset and under random on-site disorder.
///
/// `D` has unit coupling, fields have unit scale and `τ = 1`; the tolerance
/// is absolute in those units.
pub fn offset_disorder_equivalence(
    seq: &PulseSequence,
    basis: &SpinBasis,
    graph: &CouplingGraph,
    realizations: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    const TOL: f64 = 1e-12;
    if yxx_signs(seq).is_none() {
        return Err(Error::Precondition("sequence does not have the yxx pattern".into()));
    }
    let traj = trajectory(seq);
    let zeroth = zeroth_order_of(&traj, seq.actions());
    if !zeroth.field_vanishes() {
        return Err(Error::Precondition(format!("zeroth-order offset field is nonzero: {:?}", zeroth.field)));
    }
    let seq = seq.clone().with_tau(1.0)?;
    let coeffs = interval_coefficients(&traj);
    let evaluate = |imp: &ImperfectionSet, seed: Option<u64>| -> Result<FieldTerms> {
        let weights = field_weights(basis, imp)?;
        let ops = AhtBasis::new(basis, graph, &weights)?;
        let m = seq.len();
        let mut zeroth_op = build_field(basis, Axis::X, &weights)?.scale(0.0);
        for a in Axis::ALL {
            zeroth_op = zeroth_op.combine(1.0, &build_field(basis, a, &weights)?, zeroth.field[a.index()]);
        }
        let total = ordered_products(&coeffs);
        let mut inter = total;
        let mut block_norms = Vec::with_capacity(m / 3);
        for block in coeffs.chunks(3) {
            let c = ordered_products(block);
            for p in 0..6 {
                for q in 0..6 {
                    inter[p][q] -= c[p][q];
                }
            }
            let within = ops.assemble(&c, 1.0, m, TermSelector::Cross).combine(
                1.0,
                &ops.assemble(&c, 1.0, m, TermSelector::Field),
                1.0,
            );
            block_norms.push(within.max_norm());
        }
        let inter_op = ops
            .assemble(&inter, 1.0, m, TermSelector::Cross)
            .combine(1.0, &ops.assemble(&inter, 1.0, m, TermSelector::Field), 1.0);
        Ok(FieldTerms {
            seed,
            zeroth_norm: zeroth_op.max_norm(),
            cross_norm: ops.assemble(&total, 1.0, m, TermSelector::Cross).max_norm(),
            field_norm: ops.assemble(&total, 1.0, m, TermSelector::Field).max_norm(),
            block_norms,
            inter_block_norm: inter_op.max_norm(),
        })
    };
    let offset = evaluate(&ImperfectionSet::ideal().with_offset(1.0), None)?;
    let mut disorder = Vec::with_capacity(realizations);
    for r in 0..realizations as u64 {
        let s = seed.wrapping_add(r);
        let d = DisorderRealization::sample(basis.n_spins(), 1.0, s)?;
        disorder.push(evaluate(&ImperfectionSet::ideal().with_disorder(d), Some(s))?);
    }
    let vanishes = |t: &FieldTerms| t.zeroth_norm <= TOL && t.cross_norm <= TOL && t.field_norm <= TOL;
    let equivalent = vanishes(&offset) && disorder.iter().all(vanishes);
    Ok(EquivalenceReport {
        tokens: seq.tokens(),
        n_spins: basis.n_spins(),
        offset,
        disorder,
        tolerance: TOL,
        equivalent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{sequence_library, yxx_expand};

    fn system() -> (SpinBasis, CouplingGraph) {
        let b = SpinBasis::open(4).unwrap();
        let g = CouplingGraph::nearest_neighbor(&b, 1.0);
        (b, g)
    }

    #[test]
    fn library_yxx_sequences_are_equivalent() {
        let (b, g) = system();
        for name in ["yxx48", "yxx24"] {
            let r = offset_disorder_equivalence(&sequence_library(name).unwrap(), &b, &g, 5, 1).unwrap();
            assert!(r.equivalent, "{name}: {:?}", r.disorder[0]);
            assert_eq!(r.offset.block_norms.len(), r.tokens.split(' ').count() / 3);
        }
    }

    #[test]
    fn nonzero_field_is_rejected() {
        let (b, g) = system();
        let s = yxx_expand(&[true, true, true, true, false, false], 1.0).unwrap();
        assert!(!crate::aht::zeroth_order(&s).field_vanishes());
        assert!(matches!(offset_disorder_equivalence(&s, &b, &g, 1, 0), Err(Error::Precondition(_))));
        let not_yxx = sequence_library("WAHUHA").unwrap();
        assert!(matches!(offset_disorder_equivalence(&not_yxx, &b, &g, 1, 0), Err(Error::Precondition(_))));
    }
}
