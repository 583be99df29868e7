use alloc::format;
use alloc::vec::Vec;

use crate::dynamics::TwoLevelEmitter;
use crate::hilbert::{AtomLevel, EmissionBranch, MixedEnsemble, PolBasis, Polarization, SparseHybridState};
use crate::math::re;
use crate::optics::networks::FUSION_RAILS;
use crate::optics::{apply_loss, fusion_network, OutcomeTable, CORRECTABLE_THRESHOLD};
use crate::{Error, Result};

use super::chain::{build_encoded_chain, fused_layout, ChainState};
use super::model::{temporal_modes, ImperfectionModel};

/// Unmonitored rails that absorb the photon of an end atom whose cavity did
/// not leak (the spontaneous photon still carries which-level information).
const LOST_RAILS: [u32; 2] = [201, 202];

/// `g′ → α′` with an `R` photon, `e′ → α′` with an `L` photon.
pub fn fusion_branches() -> [EmissionBranch; 2] {
    [
        EmissionBranch { from: AtomLevel::GPrime, to: AtomLevel::AlphaPrime, pol: Polarization::R, amp: re(1.0) },
        EmissionBranch { from: AtomLevel::EPrime, to: AtomLevel::AlphaPrime, pol: Polarization::L, amp: re(1.0) },
    ]
}

/// Exact fusion result.
#[derive(Clone, Debug)]
pub struct FusionResult {
    /// Outcomes over the fused chain's atoms; corrections attached against
    /// `target`.
    pub table: OutcomeTable,
    pub target: ChainState,
    /// Emission probability of each end atom.
    pub emission: [f64; 2],
}

impl FusionResult {
    pub fn acceptance(&self) -> f64 {
        self.table.accepted_probability()
    }
}

fn reversed(chain: &ChainState) -> Result<ChainState> {
    let mut ids = chain.atom_ids.clone();
    ids.reverse();
    let mut layout = chain.layout.clone();
    layout.reverse();
    let state = chain.state.permute_atoms(&ids)?;
    ChainState::new(ids, layout, state)
}

/// Fuses the last atom of `a` with the first atom of `b`.
pub fn fuse(a: &ChainState, b: &ChainState, model: &ImperfectionModel) -> Result<FusionResult> {
    fuse_at(a, b, a.last_atom(), b.first_atom(), model)
}

/// Fuses atom `end_a` of `a` with atom `end_b` of `b`. Each must sit at an
/// end of its chain; chains are reversed as needed so that the result reads
/// `a … | … b`.
pub fn fuse_at(a: &ChainState, b: &ChainState, end_a: u32, end_b: u32, model: &ImperfectionModel) -> Result<FusionResult> {
    model.validate()?;
    if model.cavities.len() != 2 {
        return Err(Error::InvalidParameter(format!("fusion needs 2 cavities, got {}", model.cavities.len())));
    }
    let a = if end_a == a.last_atom() {
        a.clone()
    } else if end_a == a.first_atom() {
        reversed(a)?
    } else {
        return Err(Error::NotChainEnd(end_a));
    };
    let b = if end_b == b.first_atom() {
        b.clone()
    } else if end_b == b.last_atom() {
        reversed(b)?
    } else {
        return Err(Error::NotChainEnd(end_b));
    };
    let layout = fused_layout(&a.layout, &b.layout)?;
    let mut ids: Vec<u32> = a.atom_ids[..a.len() - 1].to_vec();
    ids.extend_from_slice(&b.atom_ids[1..]);
    let target_state = build_encoded_chain(&layout)?.state.relabel_atoms(ids.clone())?;
    let target = ChainState::new(ids, layout, target_state)?;

    let emitters: Vec<TwoLevelEmitter> = model.cavities.iter().map(|p| p.reset_emitter()).collect();
    let emission = [0, 1].map(|k| if model.force_emission { 1.0 } else { emitters[k].leak_within(model.window) });
    let tmodes = temporal_modes(&emitters)?;
    let dressed = model.dress(&fusion_network(), &FUSION_RAILS)?;

    let mut joint = a.state.tensor(&b.state)?;
    for rail in FUSION_RAILS.into_iter().chain(LOST_RAILS) {
        joint = joint.with_rail(rail, PolBasis::Circular)?;
    }
    let ends = [a.last_atom(), b.first_atom()];
    for atom in ends {
        joint = joint.relabel_atom_levels(atom, &[(AtomLevel::G, AtomLevel::GPrime), (AtomLevel::E, AtomLevel::EPrime)])?;
    }

    let branches = fusion_branches();
    let mut parts = Vec::new();
    for mask in 0u32..4 {
        let weight: f64 = (0..2).map(|k| if mask >> k & 1 == 1 { emission[k] } else { 1.0 - emission[k] }).product();
        if weight <= 0.0 {
            continue;
        }
        let mut ens = MixedEnsemble::pure(joint.clone());
        for k in 0..2 {
            let leaked = mask >> k & 1 == 1;
            let rail = if leaked { FUSION_RAILS[k] } else { LOST_RAILS[k] };
            let modes: &[(u8, crate::C64)] = if leaked { &tmodes[k] } else { &[(0, re(1.0))] };
            ens = ens.try_map(|s| s.emit(ends[k], rail, &branches, modes))?;
            if !leaked {
                ens = apply_loss(&ens, rail, 0.0)?;
            }
        }
        for atom in ends {
            ens = ens.try_map(|s| s.drop_atom(atom, AtomLevel::AlphaPrime))?;
        }
        parts.push((weight, dressed.run(&ens)?));
    }
    let mut table = OutcomeTable::merge_weighted(parts)?;
    table.attach_corrections(&target.state, CORRECTABLE_THRESHOLD)?;
    Ok(FusionResult { table, target, emission })
}

/// Drops the state of an atom measured in the `{g, e}` basis and keeps the
/// rest, for callers that discard a chain end after a failed fusion.
pub fn measure_out(state: &SparseHybridState, atom: u32, level: AtomLevel) -> Result<(SparseHybridState, f64)> {
    let (proj, p) = state.project_atom(atom, level)?;
    if p == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((proj.drop_atom(atom, level)?.normalized()?, p))
}
