use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use super::basis::{AtomLevel, BasisLabel, PhotonMode, PolBasis, Polarization};
use super::ops::{mat2_deviation, LocalOp, Mat2};
use crate::math::{re, sqrt};
use crate::{Error, Result, C64};

/// Amplitudes below this magnitude are dropped after every operation.
pub const PRUNE_EPS: f64 = 1e-15;

const UNITARY_TOL: f64 = 1e-12;

/// Image of one photon mode under a linear mode transformation (at most two
/// output modes, which covers wave plates and beam splitters).
#[derive(Clone, Copy, Debug)]
pub struct ModeImage {
    out: [(PhotonMode, C64); 2],
    len: usize,
}

impl ModeImage {
    pub fn one(mode: PhotonMode, amp: C64) -> Self {
        ModeImage { out: [(mode, amp), (mode, re(0.0))], len: 1 }
    }

    pub fn two(a: (PhotonMode, C64), b: (PhotonMode, C64)) -> Self {
        ModeImage { out: [a, b], len: 2 }
    }

    fn as_slice(&self) -> &[(PhotonMode, C64)] {
        &self.out[..self.len]
    }
}

/// One branch of a photon-emitting transition `from → to` that creates a
/// photon of polarization `pol`.
#[derive(Clone, Copy, Debug)]
pub struct EmissionBranch {
    pub from: AtomLevel,
    pub to: AtomLevel,
    pub pol: Polarization,
    pub amp: C64,
}

/// Sparse hybrid atom/photon state. Atoms are addressed by id; photon rails
/// are registered with the polarization basis they currently use.
#[derive(Clone, Debug)]
pub struct SparseHybridState {
    atom_ids: Vec<u32>,
    rails: BTreeMap<u32, PolBasis>,
    terms: BTreeMap<BasisLabel, C64>,
    prune_eps: f64,
}

impl SparseHybridState {
    /// Zero state over the given atoms and rails.
    pub fn new(atom_ids: Vec<u32>, rails: impl IntoIterator<Item = (u32, PolBasis)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for &id in &atom_ids {
            if !seen.insert(id) {
                return Err(Error::AtomOverlap(id));
            }
        }
        let mut registry = BTreeMap::new();
        for (rail, basis) in rails {
            if registry.insert(rail, basis).is_some() {
                return Err(Error::RailExists(rail));
            }
        }
        Ok(SparseHybridState { atom_ids, rails: registry, terms: BTreeMap::new(), prune_eps: PRUNE_EPS })
    }

    /// Product basis state of atoms only, amplitude 1.
    pub fn product(atoms: &[(u32, AtomLevel)]) -> Result<Self> {
        let mut s = Self::new(atoms.iter().map(|a| a.0).collect(), [])?;
        let levels: Vec<AtomLevel> = atoms.iter().map(|a| a.1).collect();
        s.add_term(&levels, &[], re(1.0))?;
        Ok(s)
    }

    pub fn atom(id: u32, level: AtomLevel) -> Self {
        Self::product(&[(id, level)]).expect("single atom state")
    }

    /// Atoms-only state from `(levels, amplitude)` pairs.
    pub fn from_atom_terms<'a>(
        atom_ids: Vec<u32>,
        terms: impl IntoIterator<Item = (&'a [AtomLevel], C64)>,
    ) -> Result<Self> {
        let mut s = Self::new(atom_ids, [])?;
        for (levels, amp) in terms {
            s.add_term(levels, &[], amp)?;
        }
        Ok(s)
    }

    /// Empty copy with the same shape.
    pub fn zero_like(&self) -> Self {
        SparseHybridState {
            atom_ids: self.atom_ids.clone(),
            rails: self.rails.clone(),
            terms: BTreeMap::new(),
            prune_eps: self.prune_eps,
        }
    }

    /// Disables amplitude pruning (used to check that pruning is harmless).
    pub fn without_pruning(mut self) -> Self {
        self.prune_eps = 0.0;
        self
    }

    pub fn prune_eps(&self) -> f64 {
        self.prune_eps
    }

    /// Registers an empty rail.
    pub fn with_rail(mut self, rail: u32, basis: PolBasis) -> Result<Self> {
        if self.rails.insert(rail, basis).is_some() {
            return Err(Error::RailExists(rail));
        }
        Ok(self)
    }

    /// Adds `amp` to the amplitude of the given basis label.
    pub fn add_term(&mut self, atoms: &[AtomLevel], photons: &[(PhotonMode, u8)], amp: C64) -> Result<()> {
        if atoms.len() != self.atom_ids.len() {
            return Err(Error::ShapeMismatch(format!(
                "term has {} atoms, state has {}",
                atoms.len(),
                self.atom_ids.len()
            )));
        }
        for &(mode, _) in photons {
            let basis = *self.rails.get(&mode.rail).ok_or(Error::UnknownRail(mode.rail))?;
            if basis != mode.pol.basis() {
                return Err(Error::WrongBasis { rail: mode.rail, op: "add_term" });
            }
        }
        let label = BasisLabel::new(atoms.to_vec(), photons)?;
        *self.terms.entry(label).or_insert(re(0.0)) += amp;
        self.prune();
        Ok(())
    }

    pub fn atom_ids(&self) -> &[u32] {
        &self.atom_ids
    }

    pub fn rails(&self) -> &BTreeMap<u32, PolBasis> {
        &self.rails
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BasisLabel, &C64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn atom_position(&self, id: u32) -> Result<usize> {
        self.atom_ids.iter().position(|&a| a == id).ok_or(Error::UnknownAtom(id))
    }

    pub fn amplitude(&self, label: &BasisLabel) -> C64 {
        self.terms.get(label).copied().unwrap_or(re(0.0))
    }

    /// Amplitude of an atoms-only basis label.
    pub fn atom_amplitude(&self, levels: &[AtomLevel]) -> C64 {
        let label = BasisLabel { atoms: levels.to_vec(), photons: Vec::new() };
        self.amplitude(&label)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        sqrt(self.norm_sqr())
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.zero_like();
        for (k, a) in &self.terms {
            out.terms.insert(k.clone(), a * factor);
        }
        out.prune();
        out
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(re(1.0 / n)))
    }

    fn prune(&mut self) {
        let eps = self.prune_eps;
        if eps > 0.0 {
            self.terms.retain(|_, a| a.norm() >= eps);
        } else {
            self.terms.retain(|_, a| *a != re(0.0));
        }
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.atom_ids != other.atom_ids {
            return Err(Error::ShapeMismatch(format!("atoms {:?} vs {:?}", self.atom_ids, other.atom_ids)));
        }
        if self.rails.keys().ne(other.rails.keys()) {
            return Err(Error::ShapeMismatch(String::from("rail registries differ")));
        }
        Ok(())
    }

    /// `self ⊗ other` on disjoint atoms and rails.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        for id in &other.atom_ids {
            if self.atom_ids.contains(id) {
                return Err(Error::AtomOverlap(*id));
            }
        }
        for rail in other.rails.keys() {
            if self.rails.contains_key(rail) {
                return Err(Error::RailOverlap(*rail));
            }
        }
        let mut atom_ids = self.atom_ids.clone();
        atom_ids.extend_from_slice(&other.atom_ids);
        let mut rails = self.rails.clone();
        rails.extend(other.rails.iter().map(|(k, v)| (*k, *v)));
        let mut out = SparseHybridState {
            atom_ids,
            rails,
            terms: BTreeMap::new(),
            prune_eps: self.prune_eps.min(other.prune_eps),
        };
        for (ka, a) in &self.terms {
            for (kb, b) in &other.terms {
                let mut atoms = ka.atoms.clone();
                atoms.extend_from_slice(&kb.atoms);
                let mut photons = ka.photons.clone();
                photons.extend_from_slice(&kb.photons);
                photons.sort_unstable_by_key(|x| x.0);
                out.terms.insert(BasisLabel { atoms, photons }, a * b);
            }
        }
        out.prune();
        Ok(out)
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.check_same_shape(other)?;
        let (small, large, conj_small) = if self.terms.len() <= other.terms.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut acc = re(0.0);
        for (k, a) in &small.terms {
            if let Some(b) = large.terms.get(k) {
                acc += if conj_small { a.conj() * b } else { b.conj() * a };
            }
        }
        Ok(acc)
    }

    /// Superposition `self + other`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (k, a) in &other.terms {
            *out.terms.entry(k.clone()).or_insert(re(0.0)) += a;
        }
        out.prune();
        Ok(out)
    }

    /// Keeps the terms satisfying `keep`; returns the unnormalized projection
    /// and its probability.
    pub fn project(&self, keep: impl Fn(&BasisLabel) -> bool) -> (Self, f64) {
        let mut out = self.zero_like();
        for (k, a) in &self.terms {
            if keep(k) {
                out.terms.insert(k.clone(), *a);
            }
        }
        let p = out.norm_sqr();
        (out, p)
    }

    /// Projection onto `atom == level`.
    pub fn project_atom(&self, id: u32, level: AtomLevel) -> Result<(Self, f64)> {
        let pos = self.atom_position(id)?;
        Ok(self.project(|k| k.atoms[pos] == level))
    }

    /// Pure-state fidelity `|⟨ref|s⟩|² / ‖s‖²` against a normalized reference.
    pub fn fidelity(&self, reference: &Self) -> Result<f64> {
        check_reference(reference)?;
        let n = self.norm_sqr();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(reference.inner(self)?.norm_sqr() / n)
    }

    /// Applies a unitary to one atom.
    pub fn apply_atom_op(&self, id: u32, op: &LocalOp) -> Result<Self> {
        let deviation = op.unitarity_deviation();
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        self.apply_atom_map(id, op)
    }

    /// Applies a possibly non-unitary local map to one atom.
    pub fn apply_atom_map(&self, id: u32, op: &LocalOp) -> Result<Self> {
        let pos = self.atom_position(id)?;
        let mut out = self.zero_like();
        for (k, a) in &self.terms {
            let level = k.atoms[pos];
            match op {
                LocalOp::Qubit(m) => {
                    let col = match level {
                        AtomLevel::G => 0,
                        AtomLevel::E => 1,
                        _ => {
                            *out.terms.entry(k.clone()).or_insert(re(0.0)) += a;
                            continue;
                        }
                    };
                    for (row, to) in [AtomLevel::G, AtomLevel::E].into_iter().enumerate() {
                        let coef = m[row][col];
                        if coef != re(0.0) {
                            let mut nk = k.clone();
                            nk.atoms[pos] = to;
                            *out.terms.entry(nk).or_insert(re(0.0)) += a * coef;
                        }
                    }
                }
                LocalOp::Full(m) => {
                    let col = level.index();
                    for to in AtomLevel::ALL {
                        let coef = m[to.index()][col];
                        if coef != re(0.0) {
                            let mut nk = k.clone();
                            nk.atoms[pos] = to;
                            *out.terms.entry(nk).or_insert(re(0.0)) += a * coef;
                        }
                    }
                }
            }
        }
        out.prune();
        Ok(out)
    }

    /// Sets an atom's level in every term (an instantaneous π pulse on a
    /// closed transition set). Levels absent from `map` are rejected.
    pub fn relabel_atom_levels(&self, id: u32, map: &[(AtomLevel, AtomLevel)]) -> Result<Self> {
        let pos = self.atom_position(id)?;
        let mut out = self.zero_like();
        for (k, a) in &self.terms {
            let level = k.atoms[pos];
            let to = map
                .iter()
                .find(|(from, _)| *from == level)
                .map(|(_, to)| *to)
                .ok_or(Error::UnexpectedLevel { atom: id, level: level.symbol() })?;
            let mut nk = k.clone();
            nk.atoms[pos] = to;
            *out.terms.entry(nk).or_insert(re(0.0)) += a;
        }
        out.prune();
        Ok(out)
    }

    /// Applies a unitary on the polarization pair of `rail` (in the rail's
    /// current basis order, `[L, R]` or `[H, V]`).
    pub fn apply_rail_op(&self, rail: u32, m: &Mat2) -> Result<Self> {
        let deviation = mat2_deviation(m);
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        let basis = *self.rails.get(&rail).ok_or(Error::UnknownRail(rail))?;
        let pair = basis.pair();
        self.apply_mode_map(|mode| {
            if mode.rail != rail {
                return None;
            }
            let col = if mode.pol == pair[0] { 0 } else { 1 };
            Some(ModeImage::two(
                (PhotonMode::with_tmode(rail, pair[0], mode.tmode), m[0][col]),
                (PhotonMode::with_tmode(rail, pair[1], mode.tmode), m[1][col]),
            ))
        })
    }

    /// Applies a linear map on creation operators, `a†_m → Σ c_j a†_{m_j}`,
    /// to every mode for which `f` returns an image. Rail registry updates
    /// are the caller's business.
    pub fn apply_mode_map(&self, f: impl Fn(PhotonMode) -> Option<ModeImage>) -> Result<Self> {
        let mut out = self.zero_like();
        let mut ops: Vec<ModeImage> = Vec::new();
        for (k, a) in &self.terms {
            ops.clear();
            let mut kept = BasisLabel { atoms: k.atoms.clone(), photons: Vec::new() };
            let mut in_fact = 1.0;
            for &(mode, n) in &k.photons {
                match f(mode) {
                    Some(img) => {
                        for _ in 0..n {
                            ops.push(img);
                        }
                        in_fact *= factorial(n);
                    }
                    None => kept.photons.push((mode, n)),
                }
            }
            if ops.is_empty() {
                *out.terms.entry(kept).or_insert(re(0.0)) += a;
                continue;
            }
            let kept_fact: f64 = kept.photons.iter().map(|&(_, n)| factorial(n)).product();
            let scale = *a / sqrt(in_fact * kept_fact);
            expand(&ops, 0, kept, re(1.0), &mut |label, coef| {
                let out_fact: f64 = label.photons.iter().map(|&(_, n)| factorial(n)).product();
                *out.terms.entry(label).or_insert(re(0.0)) += scale * coef * sqrt(out_fact);
            })?;
        }
        out.prune();
        Ok(out)
    }

    /// Replaces `from` levels of an atom with `to` levels while creating a
    /// photon on `rail`, spread over temporal modes by `tmodes`.
    pub fn emit(&self, id: u32, rail: u32, branches: &[EmissionBranch], tmodes: &[(u8, C64)]) -> Result<Self> {
        let pos = self.atom_position(id)?;
        let basis = *self.rails.get(&rail).ok_or(Error::UnknownRail(rail))?;
        for b in branches {
            if b.pol.basis() != basis {
                return Err(Error::WrongBasis { rail, op: "emit" });
            }
        }
        let mut out = self.zero_like();
        for (k, a) in &self.terms {
            let level = k.atoms[pos];
            let mut matched = false;
            for b in branches.iter().filter(|b| b.from == level) {
                matched = true;
                for &(tm, tc) in tmodes {
                    let mut nk = k.clone();
                    nk.atoms[pos] = b.to;
                    let n = nk.add_photon(PhotonMode::with_tmode(rail, b.pol, tm))?;
                    *out.terms.entry(nk).or_insert(re(0.0)) += a * b.amp * tc * sqrt(n as f64);
                }
            }
            if !matched {
                return Err(Error::UnexpectedLevel { atom: id, level: level.symbol() });
            }
        }
        out.prune();
        Ok(out)
    }

    /// Removes an atom that is in `level` in every term.
    pub fn drop_atom(&self, id: u32, level: AtomLevel) -> Result<Self> {
        let pos = self.atom_position(id)?;
        let mut atom_ids = self.atom_ids.clone();
        atom_ids.remove(pos);
        let mut out = SparseHybridState {
            atom_ids,
            rails: self.rails.clone(),
            terms: BTreeMap::new(),
            prune_eps: self.prune_eps,
        };
        for (k, a) in &self.terms {
            if k.atoms[pos] != level {
                return Err(Error::UnexpectedLevel { atom: id, level: k.atoms[pos].symbol() });
            }
            let mut nk = k.clone();
            nk.atoms.remove(pos);
            out.terms.insert(nk, *a);
        }
        Ok(out)
    }

    /// Renames atoms positionally.
    pub fn relabel_atoms(&self, new_ids: Vec<u32>) -> Result<Self> {
        if new_ids.len() != self.atom_ids.len() {
            return Err(Error::ShapeMismatch(String::from("relabel length")));
        }
        let mut out = Self::new(new_ids, self.rails.iter().map(|(k, v)| (*k, *v)))?;
        out.prune_eps = self.prune_eps;
        out.terms = self.terms.clone();
        Ok(out)
    }

    /// Reorders atoms so that they appear in `order` (a permutation of the
    /// current ids).
    pub fn permute_atoms(&self, order: &[u32]) -> Result<Self> {
        if order.len() != self.atom_ids.len() {
            return Err(Error::ShapeMismatch(String::from("permutation length")));
        }
        let positions: Vec<usize> = order.iter().map(|&id| self.atom_position(id)).collect::<Result<_>>()?;
        let mut out = Self::new(order.to_vec(), self.rails.iter().map(|(k, v)| (*k, *v)))?;
        out.prune_eps = self.prune_eps;
        for (k, a) in &self.terms {
            let atoms = positions.iter().map(|&p| k.atoms[p]).collect();
            out.terms.insert(BasisLabel { atoms, photons: k.photons.clone() }, *a);
        }
        Ok(out)
    }

    pub(crate) fn rails_mut(&mut self) -> &mut BTreeMap<u32, PolBasis> {
        &mut self.rails
    }

    pub(crate) fn insert_raw(&mut self, label: BasisLabel, amp: C64) {
        *self.terms.entry(label).or_insert(re(0.0)) += amp;
    }

    pub(crate) fn finish(&mut self) {
        self.prune();
    }

    /// Deterministic text dump: a header line, then one sorted line per
    /// basis label with the amplitude as `re,im` to 12 significant digits.
    pub fn to_debug_text(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "atoms={:?} rails=[", self.atom_ids);
        for (i, (rail, basis)) in self.rails.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let tag = match basis {
                PolBasis::Circular => 'C',
                PolBasis::Linear => 'P',
            };
            let _ = write!(s, "{}:{}", rail, tag);
        }
        s.push_str("]\n");
        for (k, a) in &self.terms {
            let _ = writeln!(s, "{} {:.11e},{:.11e}", k, clean(a.re), clean(a.im));
        }
        s
    }
}

pub(crate) fn check_reference(reference: &SparseHybridState) -> Result<()> {
    let n = reference.norm_sqr();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("reference not normalized (norm² = {n})")));
    }
    Ok(())
}

fn clean(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

fn factorial(n: u8) -> f64 {
    (1..=n as u32).map(|k| k as f64).product()
}

fn expand(
    ops: &[ModeImage],
    i: usize,
    label: BasisLabel,
    coef: C64,
    emit: &mut impl FnMut(BasisLabel, C64),
) -> Result<()> {
    if i == ops.len() {
        emit(label, coef);
        return Ok(());
    }
    for &(mode, c) in ops[i].as_slice() {
        if c == re(0.0) {
            continue;
        }
        let mut next = label.clone();
        next.add_photon(mode)?;
        expand(ops, i + 1, next, coef * c, emit)?;
    }
    Ok(())
}
