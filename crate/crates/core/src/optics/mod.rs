//! Linear-optics networks acting on photon rails, threshold detection and
//! Pauli correction of the heralded atom states.

mod apply;
mod correction;
mod detect;
mod element;
pub mod networks;

pub use apply::{apply_balanced_splitter, apply_beam_splitter, apply_hwp, apply_loss, apply_pbs, apply_qwp};
pub use correction::{apply_paulis, best_correction, Correction, Pauli, PauliKind, CORRECTABLE_THRESHOLD};
pub use detect::{detect_all, DetectorInfo, OutcomePattern, OutcomeTable, OutcomeTableEntry, Reading};
pub use element::{DetectorSpec, MeasurementBasis, NetworkConfig, OpticalElement};
pub use networks::{default_four_atom_network, fusion_network, parity_check_network, two_pair_network};
