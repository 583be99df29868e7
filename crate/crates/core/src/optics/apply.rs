use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::hilbert::{BasisLabel, MixedEnsemble, ModeImage, PhotonMode, PolBasis, Polarization, SparseHybridState};
use crate::math::{c, cos, powi, re, sin, sqrt, PI};
use crate::{Error, Result};

fn rail_basis(state: &SparseHybridState, rail: u32) -> Result<PolBasis> {
    state.rails().get(&rail).copied().ok_or(Error::UnknownRail(rail))
}

fn require_linear(state: &SparseHybridState, rail: u32, op: &'static str) -> Result<()> {
    match rail_basis(state, rail)? {
        PolBasis::Linear => Ok(()),
        PolBasis::Circular => Err(Error::WrongBasis { rail, op }),
    }
}

/// Quarter-wave plate taking the circular pair to the linear one,
/// `L → H`, `R → V`. The rail switches to the linear basis.
pub fn apply_qwp(state: &SparseHybridState, rail: u32) -> Result<SparseHybridState> {
    if rail_basis(state, rail)? != PolBasis::Circular {
        return Err(Error::WrongBasis { rail, op: "qwp" });
    }
    let mut out = state.apply_mode_map(|m| {
        if m.rail != rail {
            return None;
        }
        let pol = if m.pol == Polarization::L { Polarization::H } else { Polarization::V };
        Some(ModeImage::one(PhotonMode::with_tmode(rail, pol, m.tmode), re(1.0)))
    })?;
    out.rails_mut().insert(rail, PolBasis::Linear);
    Ok(out)
}

/// Half-wave plate with its fast axis at `angle_deg`:
/// `H → cos2θ H + sin2θ V`, `V → sin2θ H − cos2θ V`.
pub fn apply_hwp(state: &SparseHybridState, rail: u32, angle_deg: f64) -> Result<SparseHybridState> {
    require_linear(state, rail, "hwp")?;
    let t = 2.0 * angle_deg * PI / 180.0;
    let (c2, s2) = (cos(t), sin(t));
    let m = [[re(c2), re(s2)], [re(s2), re(-c2)]];
    state.apply_rail_op(rail, &m)
}

/// Polarizing beam splitter: horizontal light is transmitted and vertical
/// reflected, so `H_a, V_b → out_1` and `V_a, H_b → out_2`.
pub fn apply_pbs(state: &SparseHybridState, in_a: u32, in_b: u32, out_1: u32, out_2: u32) -> Result<SparseHybridState> {
    if in_a == in_b || out_1 == out_2 {
        return Err(Error::InvalidParameter(alloc::string::String::from("PBS ports must be distinct")));
    }
    require_linear(state, in_a, "pbs")?;
    require_linear(state, in_b, "pbs")?;
    for rail in [out_1, out_2] {
        if state.rails().contains_key(&rail) {
            return Err(Error::RailExists(rail));
        }
    }
    let mut out = state.apply_mode_map(|m| {
        let target = match (m.rail == in_a, m.rail == in_b, m.pol) {
            (true, _, Polarization::H) | (_, true, Polarization::V) => out_1,
            (true, _, _) | (_, true, _) => out_2,
            _ => return None,
        };
        Some(ModeImage::one(PhotonMode::with_tmode(target, m.pol, m.tmode), re(1.0)))
    })?;
    let rails = out.rails_mut();
    rails.remove(&in_a);
    rails.remove(&in_b);
    rails.insert(out_1, PolBasis::Linear);
    rails.insert(out_2, PolBasis::Linear);
    Ok(out)
}

/// Generic two-input unitary on the linear modes of two rails, used for
/// tests of beam-splitter algebra: `(H_a, H_b) → U (H_a, H_b)` and the same
/// for `V`.
pub fn apply_beam_splitter(state: &SparseHybridState, a: u32, b: u32, theta: f64, phase: f64) -> Result<SparseHybridState> {
    require_linear(state, a, "beam splitter")?;
    require_linear(state, b, "beam splitter")?;
    let (ct, st) = (cos(theta), sin(theta));
    let ph = c(cos(phase), sin(phase));
    state.apply_mode_map(|m| {
        if m.rail == a {
            Some(ModeImage::two(
                (PhotonMode::with_tmode(a, m.pol, m.tmode), re(ct)),
                (PhotonMode::with_tmode(b, m.pol, m.tmode), ph * st),
            ))
        } else if m.rail == b {
            Some(ModeImage::two(
                (PhotonMode::with_tmode(a, m.pol, m.tmode), -ph.conj() * st),
                (PhotonMode::with_tmode(b, m.pol, m.tmode), re(ct)),
            ))
        } else {
            None
        }
    })
}

/// 50:50 beam splitter, the `θ = π/4` case of [`apply_beam_splitter`].
pub fn apply_balanced_splitter(state: &SparseHybridState, a: u32, b: u32) -> Result<SparseHybridState> {
    apply_beam_splitter(state, a, b, PI / 4.0, 0.0)
}

fn binomial(n: u8, k: u8) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Photon loss on `rail` with the given transmission. Each photon survives
/// independently; terms are grouped by which photons were lost (the state of
/// the environment), and each group becomes one mixture branch.
pub fn apply_loss(ens: &MixedEnsemble, rail: u32, transmission: f64) -> Result<MixedEnsemble> {
    if !(0.0..=1.0).contains(&transmission) {
        return Err(Error::InvalidParameter(alloc::format!("transmission {transmission} outside [0, 1]")));
    }
    ens.try_flat_map(|state| lose(state, rail, transmission))
}

fn lose(state: &SparseHybridState, rail: u32, eta: f64) -> Result<MixedEnsemble> {
    rail_basis(state, rail)?;
    if eta == 1.0 {
        return Ok(MixedEnsemble::pure(state.clone()));
    }
    let mut groups: BTreeMap<Vec<(PhotonMode, u8)>, SparseHybridState> = BTreeMap::new();
    for (label, amp) in state.terms() {
        let on_rail: Vec<(PhotonMode, u8)> = label.photons_on_rail(rail).copied().collect();
        let others: Vec<(PhotonMode, u8)> = label.photons().iter().filter(|(m, _)| m.rail != rail).copied().collect();
        // Enumerate the surviving count of every mode on the rail.
        let mut kept = alloc::vec![0u8; on_rail.len()];
        loop {
            let mut coef = 1.0;
            let mut photons = others.clone();
            let mut lost = Vec::new();
            for (i, &(mode, n)) in on_rail.iter().enumerate() {
                let k = kept[i];
                coef *= sqrt(binomial(n, k) * powi(eta, k as i32) * powi(1.0 - eta, (n - k) as i32));
                if k > 0 {
                    photons.push((mode, k));
                }
                if n > k {
                    lost.push((mode, n - k));
                }
            }
            if coef > 0.0 {
                photons.sort_unstable_by_key(|x| x.0);
                let nl = BasisLabel::new(label.atoms().to_vec(), &photons)?;
                groups.entry(lost).or_insert_with(|| state.zero_like()).insert_raw(nl, *amp * coef);
            }
            // Odometer increment.
            let mut i = 0;
            while i < on_rail.len() {
                if kept[i] < on_rail[i].1 {
                    kept[i] += 1;
                    break;
                }
                kept[i] = 0;
                i += 1;
            }
            if i == on_rail.len() {
                break;
            }
        }
    }
    let mut out = MixedEnsemble::new();
    for (_, mut s) in groups {
        s.finish();
        let w = s.norm_sqr();
        if w > 0.0 {
            out.push(w, s.normalized()?)?;
        }
    }
    Ok(out)
}
