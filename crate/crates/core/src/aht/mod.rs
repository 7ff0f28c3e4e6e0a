//! Average Hamiltonian theory for ideal π/2 pulse sequences: toggling-frame
//! tracking, zeroth- and first-order terms, exhaustive searches and the
//! offset/disorder comparison for yxx sequences.

mod enumerate;
mod equivalence;
mod frame;
mod order;

pub use enumerate::{theorem1_enumerate, LengthReport, Theorem1Report, MAX_ENUMERATION_LENGTH};
pub use equivalence::{offset_disorder_equivalence, EquivalenceReport, FieldTerms};
pub use frame::{frame_after, trajectory, FrameElement, Interval, SignedAxis, TogglingTrajectory};
pub use order::{
    avg_hamiltonian_report, first_order_numeric, verify_trajectory, zeroth_order, AvgHamiltonianReport,
    FirstOrderNorms, TermSelector, ZerothOrder, MAX_AHT_SPINS,
};
