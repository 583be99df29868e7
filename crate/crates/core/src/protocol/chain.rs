use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::hilbert::{AtomLevel, LocalOp, SparseHybridState};
use crate::math::{powi, re, FRAC_1_SQRT_2};
use crate::{Error, Result};

/// Largest chain for which dense target construction is allowed.
pub const MAX_TARGET_ATOMS: usize = 24;

/// A linear cluster chain of atoms.
///
/// `layout` records how atoms encode the chain's logical qubits: the atoms of
/// one group always agree (`|g…g⟩` or `|e…e⟩`) and consecutive groups are
/// linked by a controlled phase. Heralded four-atom blocks have layout
/// `[2, 2]`; a plain chain has every group of size one.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub atom_ids: Vec<u32>,
    pub layout: Vec<usize>,
    pub state: SparseHybridState,
}

impl ChainState {
    pub fn new(atom_ids: Vec<u32>, layout: Vec<usize>, state: SparseHybridState) -> Result<Self> {
        if layout.iter().sum::<usize>() != atom_ids.len() || layout.contains(&0) {
            return Err(Error::ShapeMismatch(format!("layout {layout:?} does not cover {} atoms", atom_ids.len())));
        }
        if state.atom_ids() != atom_ids.as_slice() || !state.rails().is_empty() {
            return Err(Error::ShapeMismatch(String::from("chain state must hold exactly the chain's atoms")));
        }
        if (state.norm_sqr() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("chain state norm² {}", state.norm_sqr())));
        }
        Ok(ChainState { atom_ids, layout, state })
    }

    /// Atom count.
    pub fn len(&self) -> usize {
        self.atom_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atom_ids.is_empty()
    }

    pub fn first_atom(&self) -> u32 {
        self.atom_ids[0]
    }

    pub fn last_atom(&self) -> u32 {
        self.atom_ids[self.atom_ids.len() - 1]
    }

    /// Same chain with atoms renamed to `first, first+1, …`.
    pub fn renumbered(&self, first: u32) -> Result<Self> {
        let ids: Vec<u32> = (0..self.len() as u32).map(|i| first + i).collect();
        let state = self.state.relabel_atoms(ids.clone())?;
        Ok(ChainState { atom_ids: ids, layout: self.layout.clone(), state })
    }

    /// Applies a Hadamard to each listed atom.
    pub fn with_hadamards(&self, atoms: &[u32]) -> Result<Self> {
        let mut state = self.state.clone();
        for &a in atoms {
            state = state.apply_atom_op(a, &LocalOp::hadamard())?;
        }
        Ok(ChainState { atom_ids: self.atom_ids.clone(), layout: self.layout.clone(), state })
    }
}

fn check_size(atoms: usize) -> Result<()> {
    if atoms == 0 {
        return Err(Error::InvalidParameter(String::from("a chain needs at least one atom")));
    }
    if atoms > MAX_TARGET_ATOMS {
        return Err(Error::Unsupported(format!("dense target over {atoms} atoms")));
    }
    Ok(())
}

/// Chain whose logical qubit `j` is carried by `layout[j]` atoms, with atom
/// ids `1..=n`. Amplitudes are `(−1)^{Σ b_j b_{j+1}} / 2^{k/2}` over the
/// logical bit strings `b`.
pub fn build_encoded_chain(layout: &[usize]) -> Result<ChainState> {
    let n: usize = layout.iter().sum();
    check_size(n)?;
    if layout.is_empty() || layout.contains(&0) {
        return Err(Error::InvalidParameter(format!("bad layout {layout:?}")));
    }
    let k = layout.len();
    let ids: Vec<u32> = (1..=n as u32).collect();
    let amp = powi(FRAC_1_SQRT_2, k as i32);
    let mut state = SparseHybridState::new(ids.clone(), [])?;
    let mut levels = Vec::with_capacity(n);
    for bits in 0u32..(1 << k) {
        let b = |j: usize| (bits >> j) & 1;
        let links: u32 = (0..k.saturating_sub(1)).map(|j| b(j) & b(j + 1)).sum();
        let sign = if links.is_multiple_of(2) { 1.0 } else { -1.0 };
        levels.clear();
        for (j, &size) in layout.iter().enumerate() {
            let l = if b(j) == 1 { AtomLevel::E } else { AtomLevel::G };
            levels.extend(core::iter::repeat_n(l, size));
        }
        state.add_term(&levels, &[], re(sign * amp))?;
    }
    ChainState::new(ids, layout.to_vec(), state)
}

/// The standard `N`-qubit linear cluster `⊗ₐ(|g⟩ + |e⟩Z_{a+1})/√2`.
pub fn build_briegel_cluster(n: usize) -> Result<ChainState> {
    build_encoded_chain(&alloc::vec![1; n])
}

/// The four-atom state heralded by the default network:
/// `(|gggg⟩ + |eegg⟩ + |ggee⟩ − |eeee⟩)/2`.
pub fn build_four_atom_cluster() -> Result<ChainState> {
    build_encoded_chain(&[2, 2])
}

/// Layout after fusing the last atom of `a` with the first atom of `b`.
pub fn fused_layout(a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    let (Some(&last), Some(&first)) = (a.last(), b.first()) else {
        return Err(Error::InvalidParameter(String::from("cannot fuse an empty chain")));
    };
    let middle = last + first - 2;
    if middle == 0 {
        return Err(Error::Unsupported(String::from(
            "fusing two single-atom end qubits leaves no atom to carry the joint qubit",
        )));
    }
    let mut out = a[..a.len() - 1].to_vec();
    out.push(middle);
    out.extend_from_slice(&b[1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use AtomLevel::{E, G};

    #[test]
    fn single_and_pair() {
        let one = build_briegel_cluster(1).unwrap();
        assert!((one.state.atom_amplitude(&[G]) - re(FRAC_1_SQRT_2)).norm() < 1e-15);
        let two = build_briegel_cluster(2).unwrap();
        assert!((two.state.atom_amplitude(&[E, E]) - re(-0.5)).norm() < 1e-15);
        assert!((two.state.atom_amplitude(&[G, E]) - re(0.5)).norm() < 1e-15);
        assert!(build_briegel_cluster(0).is_err());
    }

    #[test]
    fn four_atom_cluster_terms() {
        let s = build_four_atom_cluster().unwrap().state;
        assert_eq!(s.len(), 4);
        assert!((s.atom_amplitude(&[E, E, E, E]) - re(-0.5)).norm() < 1e-15);
        assert!((s.atom_amplitude(&[E, E, G, G]) - re(0.5)).norm() < 1e-15);
        assert_eq!(s.atom_amplitude(&[G, E, G, G]), re(0.0));
    }

    #[test]
    fn layouts_merge() {
        assert_eq!(fused_layout(&[2, 2], &[2, 2]).unwrap(), alloc::vec![2, 2, 2]);
        assert_eq!(fused_layout(&[2, 2, 2], &[2, 2]).unwrap(), alloc::vec![2, 2, 2, 2]);
        assert_eq!(fused_layout(&[1, 2], &[3]).unwrap(), alloc::vec![1, 3]);
        assert!(fused_layout(&[1, 1], &[1, 1]).is_err());
    }

    #[test]
    fn chain_validation() {
        let c = build_four_atom_cluster().unwrap();
        assert!(ChainState::new(c.atom_ids.clone(), alloc::vec![3, 2], c.state.clone()).is_err());
        let r = c.renumbered(10).unwrap();
        assert_eq!(r.atom_ids, alloc::vec![10, 11, 12, 13]);
        assert_eq!(r.first_atom(), 10);
        assert_eq!(r.last_atom(), 13);
    }
}
