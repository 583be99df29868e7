use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::basis::BasisLabel;

use super::state::{check_reference, SparseHybridState};
use crate::{Error, Result};

/// One weighted pure component of a mixture. Its probability mass is
/// `weight * ‖state‖²`.
#[derive(Clone, Debug)]
pub struct Branch {
    pub weight: f64,
    pub state: SparseHybridState,
}

impl Branch {
    pub fn probability(&self) -> f64 {
        self.weight * self.state.norm_sqr()
    }
}

/// Mixture kept as an explicit list of weighted pure branches.
#[derive(Clone, Debug, Default)]
pub struct MixedEnsemble {
    branches: Vec<Branch>,
}

impl MixedEnsemble {
    pub fn new() -> Self {
        MixedEnsemble { branches: Vec::new() }
    }

    pub fn pure(state: SparseHybridState) -> Self {
        MixedEnsemble { branches: alloc::vec![Branch { weight: 1.0, state }] }
    }

    pub fn push(&mut self, weight: f64, state: SparseHybridState) -> Result<()> {
        if !(weight >= 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("negative branch weight {weight}")));
        }
        if weight > 0.0 && !state.is_empty() {
            self.branches.push(Branch { weight, state });
        }
        Ok(())
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn into_branches(self) -> Vec<Branch> {
        self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// `Σ wᵢ‖sᵢ‖²`.
    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(Branch::probability).sum()
    }

    /// Rescales so that the total probability is one and every branch state
    /// is normalized.
    pub fn normalized(&self) -> Result<Self> {
        let total = self.total_probability();
        if total == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let mut out = MixedEnsemble::new();
        for b in &self.branches {
            let p = b.probability();
            if p > 0.0 {
                out.push(p / total, b.state.normalized()?)?;
            }
        }
        Ok(out)
    }

    /// Multiplies every weight by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        for b in &mut self.branches {
            b.weight *= factor;
        }
        self.branches.retain(|b| b.weight > 0.0);
        self
    }

    pub fn extend(&mut self, other: MixedEnsemble) {
        self.branches.extend(other.branches);
    }

    /// Merges branches that hold the same state up to a global phase. The
    /// mixture is unchanged; only its representation shrinks.
    pub fn compressed(&self) -> Result<Self> {
        type Key = (Vec<u32>, Vec<(BasisLabel, i64, i64)>);
        let mut groups: BTreeMap<Key, (f64, SparseHybridState)> = BTreeMap::new();
        for b in &self.branches {
            let p = b.probability();
            if p <= 0.0 {
                continue;
            }
            let unit = b.state.normalized()?;
            let Some(lead) = unit.terms().next().map(|(_, a)| *a) else { continue };
            let phase = lead.conj() / lead.norm();
            let unit = unit.scaled(phase);
            let key: Vec<(BasisLabel, i64, i64)> = unit
                .terms()
                .map(|(l, a)| (l.clone(), libm::round(a.re * 1e11) as i64, libm::round(a.im * 1e11) as i64))
                .collect();
            groups.entry((unit.atom_ids().to_vec(), key)).or_insert((0.0, unit)).0 += p;
        }
        let mut out = MixedEnsemble::new();
        for (_, (w, s)) in groups {
            out.push(w, s)?;
        }
        Ok(out)
    }

    /// Applies a state map to every branch.
    pub fn try_map(&self, mut f: impl FnMut(&SparseHybridState) -> Result<SparseHybridState>) -> Result<Self> {
        let mut out = MixedEnsemble::new();
        for b in &self.branches {
            out.push(b.weight, f(&b.state)?)?;
        }
        Ok(out)
    }

    /// Applies a branch-splitting map to every branch.
    pub fn try_flat_map(&self, mut f: impl FnMut(&SparseHybridState) -> Result<MixedEnsemble>) -> Result<Self> {
        let mut out = MixedEnsemble::new();
        for b in &self.branches {
            for sub in f(&b.state)?.branches {
                out.push(b.weight * sub.weight, sub.state)?;
            }
        }
        Ok(out)
    }

    /// `Σ wᵢ|⟨ref|sᵢ⟩|² / Σ wᵢ‖sᵢ‖²`.
    pub fn fidelity(&self, reference: &SparseHybridState) -> Result<f64> {
        check_reference(reference)?;
        let total = self.total_probability();
        if total == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let mut acc = 0.0;
        for b in &self.branches {
            acc += b.weight * reference.inner(&b.state)?.norm_sqr();
        }
        Ok(acc / total)
    }
}

impl From<SparseHybridState> for MixedEnsemble {
    fn from(state: SparseHybridState) -> Self {
        MixedEnsemble::pure(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::AtomLevel;
    use crate::math::re;

    #[test]
    fn compression_merges_equal_rays() {
        let g = SparseHybridState::atom(1, AtomLevel::G);
        let e = SparseHybridState::atom(1, AtomLevel::E);
        let mut m = MixedEnsemble::new();
        m.push(0.25, g.clone()).unwrap();
        m.push(0.25, g.scaled(re(-2.0))).unwrap();
        m.push(0.5, e.clone()).unwrap();
        let c = m.compressed().unwrap();
        assert_eq!(c.len(), 2);
        assert!((c.total_probability() - 1.75).abs() < 1e-15);
        assert!((c.fidelity(&g).unwrap() - m.fidelity(&g).unwrap()).abs() < 1e-15);
    }
}
