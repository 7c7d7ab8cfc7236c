//! Labeled multipartite linear algebra.

mod layout;
mod ops;
pub mod random;
mod state;

pub(crate) use layout::ensure_disjoint;
pub use layout::{Factor, SystemLayout};
pub use ops::{QuantumChannel, UnitaryInteraction, CHANNEL_TOL, UNITARY_TOL};
pub use random::{haar_unitary, random_density};
pub(crate) use state::permutation as state_permutation;
pub use state::{
    fidelity, purify, tensor, DensityMatrix, PureState, NORM_TOL, PURIFY_CUTOFF, STATE_TOL,
};
