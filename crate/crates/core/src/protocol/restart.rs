use alloc::format;

use rand_core::RngCore;

use crate::dynamics::{reset_leak_probability, PhysicalParams};
use crate::hilbert::{AtomLevel, SparseHybridState};
use crate::math::uniform;
use crate::{Error, Result};

/// Record of a restart attempt sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RestartReport {
    /// `true` once the atom is back in `α`.
    pub success: bool,
    /// Excitation attempts made (at least one).
    pub attempts: u32,
    /// Attempts that ended in spontaneous emission instead of a cavity leak.
    pub spontaneous: u32,
    pub final_level: AtomLevel,
}

/// Probability that one reset excitation ends with a cavity leak into `α′`.
pub fn restart_success_probability(params: &PhysicalParams) -> Result<f64> {
    reset_leak_probability(params.h / 2.0, params.gamma / 2.0, params.kappa)
}

/// Returns an atom in `g` or `e` to `α`: π pulse to the primed level, decay
/// to `α′` through the cavity, π pulse to `α`. A spontaneous decay instead
/// drops the atom back into `g` or `e` at random and the sequence is tried
/// again, at most `max_retries` more times.
pub fn restart<R: RngCore + ?Sized>(
    level: AtomLevel,
    params: &PhysicalParams,
    max_retries: u32,
    rng: &mut R,
) -> Result<RestartReport> {
    if !level.is_qubit() {
        return Err(Error::InvalidParameter(format!("restart needs an atom in g or e, got {}", level.symbol())));
    }
    let p = restart_success_probability(params)?;
    let mut level = level;
    let mut spontaneous = 0;
    for attempt in 1..=max_retries.saturating_add(1) {
        // π pulse g → g′ (e → e′); the primed level then decays.
        if uniform(rng) < p {
            return Ok(RestartReport { success: true, attempts: attempt, spontaneous, final_level: AtomLevel::Alpha });
        }
        spontaneous += 1;
        level = if uniform(rng) < 0.5 { AtomLevel::G } else { AtomLevel::E };
    }
    Ok(RestartReport { success: false, attempts: max_retries.saturating_add(1), spontaneous, final_level: level })
}

/// [`restart`] on an atom of a state; the atom must be in one qubit level
/// in every term.
pub fn restart_atom<R: RngCore + ?Sized>(
    state: &SparseHybridState,
    atom: u32,
    params: &PhysicalParams,
    max_retries: u32,
    rng: &mut R,
) -> Result<(SparseHybridState, RestartReport)> {
    let pos = state.atom_position(atom)?;
    let level = state.terms().next().map(|(k, _)| k.atoms()[pos]).ok_or(Error::ZeroNorm)?;
    if state.terms().any(|(k, _)| k.atoms()[pos] != level) {
        return Err(Error::InvalidParameter(format!("atom {atom} is entangled; measure it before restarting")));
    }
    if !level.is_qubit() {
        return Err(Error::UnexpectedLevel { atom, level: level.symbol() });
    }
    let report = restart(level, params, max_retries, rng)?;
    Ok((state.relabel_atom_levels(atom, &[(level, report.final_level)])?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_core::SeedableRng;

    #[test]
    fn ideal_restart_always_succeeds() {
        let p = PhysicalParams::new(50.0, 10.0, 0.0, 1.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for level in [AtomLevel::G, AtomLevel::E] {
            let r = restart(level, &p, 0, &mut rng).unwrap();
            assert_eq!(r, RestartReport { success: true, attempts: 1, spontaneous: 0, final_level: AtomLevel::Alpha });
        }
        assert!(restart(AtomLevel::Alpha, &p, 0, &mut rng).is_err());
    }

    #[test]
    fn success_probability_at_reference_rates() {
        let p = restart_success_probability(&PhysicalParams::rubidium()).unwrap();
        assert!((p - 0.427553).abs() < 1e-5, "{p}");
    }

    #[test]
    fn restart_on_state() {
        let s = SparseHybridState::atom(3, AtomLevel::E);
        let p = PhysicalParams::new(50.0, 10.0, 0.0, 1.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let (out, r) = restart_atom(&s, 3, &p, 2, &mut rng).unwrap();
        assert!(r.success);
        assert_eq!(out.atom_amplitude(&[AtomLevel::Alpha]), crate::math::re(1.0));
    }
}
