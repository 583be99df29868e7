//! Sparse complex state vectors over atom levels and photon Fock modes.

mod basis;
mod ensemble;
pub mod ops;
mod state;

pub use basis::{AtomLevel, MAX_OCCUPATION, BasisLabel, PhotonMode, PolBasis, Polarization};
pub use ensemble::{Branch, MixedEnsemble};
pub use ops::LocalOp;
pub use state::{EmissionBranch, ModeImage, SparseHybridState, PRUNE_EPS};

/// Fidelity of a pure state against a normalized reference.
pub fn fidelity(state: &SparseHybridState, reference: &SparseHybridState) -> crate::Result<f64> {
    state.fidelity(reference)
}
