use alloc::format;
use alloc::vec::Vec;

use crate::hilbert::{AtomLevel, LocalOp, MixedEnsemble, SparseHybridState};
use crate::math::re;
use crate::{Error, Result, C64};

use super::detect::OutcomeTable;

/// Default fidelity above which an outcome counts as correctable.
pub const CORRECTABLE_THRESHOLD: f64 = 1.0 - 1e-9;

/// Single-atom Pauli. `Y` stands for `X·Z` (Z applied first), which is `iY`
/// up to a global phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PauliKind {
    X,
    Z,
    Y,
}

impl PauliKind {
    pub fn symbol(self) -> char {
        match self {
            PauliKind::X => 'X',
            PauliKind::Z => 'Z',
            PauliKind::Y => 'Y',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pauli {
    pub atom: u32,
    pub kind: PauliKind,
}

/// Local Pauli product mapping a measured state onto the target.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Correction {
    pub paulis: Vec<Pauli>,
    pub fidelity: f64,
    pub correctable: bool,
}

impl Correction {
    /// `Z3 X5` style label, `I` when empty.
    pub fn label(&self) -> alloc::string::String {
        if self.paulis.is_empty() {
            return alloc::string::String::from("I");
        }
        let parts: Vec<alloc::string::String> = self.paulis.iter().map(|p| format!("{}{}", p.kind.symbol(), p.atom)).collect();
        parts.join(" ")
    }
}

/// Applies the Paulis in order.
pub fn apply_paulis(state: &SparseHybridState, paulis: &[Pauli]) -> Result<SparseHybridState> {
    let mut s = state.clone();
    for p in paulis {
        s = match p.kind {
            PauliKind::X => s.apply_atom_op(p.atom, &LocalOp::pauli_x())?,
            PauliKind::Z => s.apply_atom_op(p.atom, &LocalOp::pauli_z())?,
            PauliKind::Y => s.apply_atom_op(p.atom, &LocalOp::pauli_z())?.apply_atom_op(p.atom, &LocalOp::pauli_x())?,
        };
    }
    Ok(s)
}

/// Searches all `4^n` products of `{I, X, Z, XZ}` over the atoms for the one
/// maximizing the ensemble fidelity of `P·post` with `target`. Ties go to
/// the product with fewer Paulis, then fewer `X` factors, then the first in
/// enumeration order.
pub fn best_correction(post: &MixedEnsemble, target: &SparseHybridState, threshold: f64) -> Result<Correction> {
    let ids = target.atom_ids();
    if ids.len() > 12 {
        return Err(Error::Unsupported(format!("correction search over {} atoms", ids.len())));
    }
    for b in post.branches() {
        if b.state.atom_ids() != ids {
            return Err(Error::ShapeMismatch(format!("post atoms {:?} vs target {:?}", b.state.atom_ids(), ids)));
        }
    }
    let total = post.total_probability();
    if total == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let n = ids.len();
    let terms: Vec<(Vec<AtomLevel>, C64)> = target.terms().map(|(k, a)| (k.atoms().to_vec(), *a)).collect();
    let mut best: Option<(f64, u32, u32, u32, u32)> = None;
    let mut scratch = Vec::with_capacity(n);
    for xm in 0..(1u32 << n) {
        for zm in 0..(1u32 << n) {
            // ⟨t|P|ψ⟩ = ⟨P†t|ψ⟩ with P† = Z^z X^x.
            let mut f = 0.0;
            for b in post.branches() {
                let mut ov = re(0.0);
                for (levels, amp) in &terms {
                    scratch.clear();
                    let mut sign = 1.0;
                    for (i, &l) in levels.iter().enumerate() {
                        let mut l = l;
                        if xm >> i & 1 == 1 {
                            l = match l {
                                AtomLevel::G => AtomLevel::E,
                                AtomLevel::E => AtomLevel::G,
                                other => other,
                            };
                        }
                        if zm >> i & 1 == 1 && l == AtomLevel::E {
                            sign = -sign;
                        }
                        scratch.push(l);
                    }
                    ov += (amp * sign).conj() * b.state.atom_amplitude(&scratch);
                }
                f += b.weight * ov.norm_sqr();
            }
            let f = f / total;
            let count = (xm | zm).count_ones();
            let xs = xm.count_ones();
            let better = match best {
                None => true,
                Some((bf, bc, bx, _, _)) => f > bf + 1e-12 || ((f - bf).abs() <= 1e-12 && (count, xs) < (bc, bx)),
            };
            if better {
                best = Some((f, count, xs, xm, zm));
            }
        }
    }
    let (fidelity, _, _, xm, zm) = best.expect("at least the identity");
    let mut paulis = Vec::new();
    for (i, &atom) in ids.iter().enumerate() {
        let kind = match (xm >> i & 1, zm >> i & 1) {
            (1, 1) => PauliKind::Y,
            (1, 0) => PauliKind::X,
            (0, 1) => PauliKind::Z,
            _ => continue,
        };
        paulis.push(Pauli { atom, kind });
    }
    Ok(Correction { paulis, fidelity, correctable: fidelity >= threshold })
}

impl OutcomeTable {
    /// Fills `correction` on every accepted entry.
    pub fn attach_corrections(&mut self, target: &SparseHybridState, threshold: f64) -> Result<()> {
        for e in self.entries.iter_mut().filter(|e| e.accepted) {
            e.correction = Some(best_correction(&e.post, target, threshold)?);
        }
        Ok(())
    }

    /// Accepted probability restricted to correctable outcomes.
    pub fn correctable_probability(&self) -> f64 {
        self.accepted()
            .filter(|e| e.correction.as_ref().is_some_and(|c| c.correctable))
            .map(|e| e.probability)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::FRAC_1_SQRT_2;
    use AtomLevel::{E, G};

    fn bell(sign: f64) -> SparseHybridState {
        SparseHybridState::from_atom_terms(
            alloc::vec![1, 2],
            [(&[G, G][..], re(FRAC_1_SQRT_2)), (&[E, E][..], re(sign * FRAC_1_SQRT_2))],
        )
        .unwrap()
    }

    #[test]
    fn identity_when_already_on_target() {
        let c = best_correction(&bell(1.0).into(), &bell(1.0), CORRECTABLE_THRESHOLD).unwrap();
        assert!(c.paulis.is_empty());
        assert!(c.correctable);
        assert_eq!(c.label(), "I");
    }

    #[test]
    fn finds_single_z() {
        let c = best_correction(&bell(-1.0).into(), &bell(1.0), CORRECTABLE_THRESHOLD).unwrap();
        assert_eq!(c.paulis.len(), 1);
        assert_eq!(c.paulis[0].kind, PauliKind::Z);
        assert!((c.fidelity - 1.0).abs() < 1e-14);
        let fixed = apply_paulis(&bell(-1.0), &c.paulis).unwrap();
        assert!((fixed.fidelity(&bell(1.0)).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn finds_flip_and_phase() {
        let odd = SparseHybridState::from_atom_terms(
            alloc::vec![1, 2],
            [(&[G, E][..], re(FRAC_1_SQRT_2)), (&[E, G][..], re(-FRAC_1_SQRT_2))],
        )
        .unwrap();
        let c = best_correction(&odd.clone().into(), &bell(1.0), CORRECTABLE_THRESHOLD).unwrap();
        assert!(c.correctable);
        let fixed = apply_paulis(&odd, &c.paulis).unwrap();
        assert!((fixed.fidelity(&bell(1.0)).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mixture_is_not_correctable() {
        let mut m = MixedEnsemble::new();
        m.push(0.5, bell(1.0)).unwrap();
        m.push(0.5, bell(-1.0)).unwrap();
        let c = best_correction(&m, &bell(1.0), CORRECTABLE_THRESHOLD).unwrap();
        assert!((c.fidelity - 0.5).abs() < 1e-14);
        assert!(!c.correctable);
    }
}
