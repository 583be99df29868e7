use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::hilbert::{BasisLabel, MixedEnsemble, PhotonMode, PolBasis, SparseHybridState};
use crate::{Error, Result};

use super::apply::apply_loss;
use super::correction::Correction;
use super::element::{DetectorSpec, MeasurementBasis, NetworkConfig};

/// What one detector reported. Resolving detectors read their two channels
/// separately; bare detectors only report `Click`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Reading {
    NoClick,
    /// First channel (`H`, or `D` when the detector is labelled diagonal).
    Plus,
    /// Second channel (`V` or `A`).
    Minus,
    /// Both channels fired.
    Both,
    Click,
}

impl Reading {
    fn from_channels(plus: bool, minus: bool, resolving: bool) -> Reading {
        match (plus || minus, resolving, plus, minus) {
            (false, _, _, _) => Reading::NoClick,
            (true, false, _, _) => Reading::Click,
            (true, true, true, true) => Reading::Both,
            (true, true, true, false) => Reading::Plus,
            _ => Reading::Minus,
        }
    }

    fn channels(self) -> (bool, bool) {
        match self {
            Reading::NoClick => (false, false),
            Reading::Plus => (true, false),
            Reading::Minus => (false, true),
            Reading::Both | Reading::Click => (true, true),
        }
    }

    /// Exactly one click in one channel.
    pub fn is_single(self) -> bool {
        matches!(self, Reading::Plus | Reading::Minus | Reading::Click)
    }

    pub fn symbol(self, basis: MeasurementBasis) -> &'static str {
        match (self, basis) {
            (Reading::NoClick, _) => "-",
            (Reading::Plus, MeasurementBasis::Hv) => "H",
            (Reading::Minus, MeasurementBasis::Hv) => "V",
            (Reading::Plus, MeasurementBasis::Da) => "D",
            (Reading::Minus, MeasurementBasis::Da) => "A",
            (Reading::Both, MeasurementBasis::Hv) => "HV",
            (Reading::Both, MeasurementBasis::Da) => "DA",
            (Reading::Click, _) => "C",
        }
    }
}

/// Readings of all detectors, in the order the network declares them.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OutcomePattern(pub Vec<Reading>);

impl OutcomePattern {
    pub fn readings(&self) -> &[Reading] {
        &self.0
    }

    pub fn is_accepted(&self) -> bool {
        self.0.iter().all(|r| r.is_single())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectorInfo {
    pub id: u32,
    pub rail: u32,
    pub basis: MeasurementBasis,
    pub resolving: bool,
}

impl From<&DetectorSpec> for DetectorInfo {
    fn from(d: &DetectorSpec) -> Self {
        DetectorInfo { id: d.id, rail: d.rail, basis: d.basis, resolving: d.resolving }
    }
}

#[derive(Clone, Debug)]
pub struct OutcomeTableEntry {
    pub pattern: OutcomePattern,
    pub accepted: bool,
    pub probability: f64,
    /// Normalized conditional state of the atoms.
    pub post: MixedEnsemble,
    pub correction: Option<Correction>,
}

/// Every detection pattern with nonzero probability.
#[derive(Clone, Debug)]
pub struct OutcomeTable {
    pub detectors: Vec<DetectorInfo>,
    pub entries: Vec<OutcomeTableEntry>,
}

impl OutcomeTable {
    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }

    pub fn accepted(&self) -> impl Iterator<Item = &OutcomeTableEntry> {
        self.entries.iter().filter(|e| e.accepted)
    }

    pub fn accepted_probability(&self) -> f64 {
        self.accepted().map(|e| e.probability).sum()
    }

    pub fn entry(&self, pattern: &OutcomePattern) -> Option<&OutcomeTableEntry> {
        self.entries.iter().find(|e| &e.pattern == pattern)
    }

    /// `D1=H D2=A ...` style label of a pattern.
    pub fn label(&self, pattern: &OutcomePattern) -> String {
        let mut s = String::new();
        for (i, (d, r)) in self.detectors.iter().zip(pattern.readings()).enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "D{}={}", d.id, r.symbol(d.basis));
        }
        s
    }

    /// Probability-weighted mean fidelity of the corrected accepted states,
    /// normalized to the accepted probability.
    pub fn mean_corrected_fidelity(&self) -> Option<f64> {
        let p = self.accepted_probability();
        if p == 0.0 {
            return None;
        }
        let mut acc = 0.0;
        for e in self.accepted() {
            acc += e.probability * e.correction.as_ref()?.fidelity;
        }
        Some(acc / p)
    }

    /// Merges tables over the same detectors, weighting each by `w`.
    /// Entries with equal patterns are combined into one mixture.
    pub fn merge_weighted(parts: Vec<(f64, OutcomeTable)>) -> Result<OutcomeTable> {
        let mut detectors: Option<Vec<DetectorInfo>> = None;
        let mut buckets: BTreeMap<OutcomePattern, MixedEnsemble> = BTreeMap::new();
        for (w, table) in parts {
            match &detectors {
                None => detectors = Some(table.detectors.clone()),
                Some(d) if *d != table.detectors => {
                    return Err(Error::ShapeMismatch(String::from("merged tables use different detectors")))
                }
                _ => {}
            }
            for e in table.entries {
                let p = w * e.probability;
                if p > 0.0 {
                    buckets.entry(e.pattern).or_default().extend(e.post.scaled(p));
                }
            }
        }
        finish(detectors.unwrap_or_default(), buckets)
    }

    /// Applies `f` to every post-measurement mixture (e.g. to trace out
    /// atoms left in a known product level).
    pub fn map_posts(&self, mut f: impl FnMut(&MixedEnsemble) -> Result<MixedEnsemble>) -> Result<OutcomeTable> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            entries.push(OutcomeTableEntry {
                pattern: e.pattern.clone(),
                accepted: e.accepted,
                probability: e.probability,
                post: f(&e.post)?,
                correction: None,
            });
        }
        Ok(OutcomeTable { detectors: self.detectors.clone(), entries })
    }
}

fn finish(detectors: Vec<DetectorInfo>, buckets: BTreeMap<OutcomePattern, MixedEnsemble>) -> Result<OutcomeTable> {
    let mut entries = Vec::with_capacity(buckets.len());
    for (pattern, ens) in buckets {
        let probability = ens.total_probability();
        if probability <= 0.0 {
            continue;
        }
        entries.push(OutcomeTableEntry {
            accepted: pattern.is_accepted(),
            pattern,
            probability,
            post: ens.compressed()?.normalized()?,
            correction: None,
        });
    }
    Ok(OutcomeTable { detectors, entries })
}

/// Measures every detector declared by `network` on the (already
/// propagated) ensemble and returns the table of outcomes. Detector
/// efficiency acts as a loss in front of an ideal threshold detector;
/// dark counts add a click to either channel with probability `p/2` each.
pub fn detect_all(ens: &MixedEnsemble, network: &NetworkConfig) -> Result<OutcomeTable> {
    let specs: Vec<DetectorSpec> = network.detectors().copied().collect();
    let mut ens = ens.clone();
    for d in &specs {
        if d.efficiency < 1.0 {
            ens = apply_loss(&ens, d.rail, d.efficiency)?;
        }
    }
    let detector_rails: Vec<u32> = specs.iter().map(|d| d.rail).collect();

    // Split every branch by photon configuration; photon-number patterns are
    // orthogonal, so each becomes its own weighted atom state.
    let mut clean: BTreeMap<Vec<Reading>, MixedEnsemble> = BTreeMap::new();
    for b in ens.branches() {
        let mut groups: BTreeMap<Vec<(PhotonMode, u8)>, SparseHybridState> = BTreeMap::new();
        let atoms_only = SparseHybridState::new(b.state.atom_ids().to_vec(), [])?;
        for (label, amp) in b.state.terms() {
            for (mode, _) in label.photons() {
                if !detector_rails.contains(&mode.rail) {
                    return Err(Error::UnterminatedRail(mode.rail));
                }
            }
            let atoms = BasisLabel::new(label.atoms().to_vec(), &[])?;
            groups.entry(label.photons().to_vec()).or_insert_with(|| atoms_only.clone()).insert_raw(atoms, *amp);
        }
        for (photons, mut st) in groups {
            st.finish();
            let w = st.norm_sqr();
            if w == 0.0 {
                continue;
            }
            let readings = specs
                .iter()
                .map(|d| {
                    let basis = b.state.rails().get(&d.rail).copied().unwrap_or(PolBasis::Linear);
                    let pair = basis.pair();
                    let mut plus = false;
                    let mut minus = false;
                    for (m, n) in photons.iter().filter(|(m, _)| m.rail == d.rail) {
                        if *n > 0 {
                            if m.pol == pair[0] {
                                plus = true;
                            } else {
                                minus = true;
                            }
                        }
                    }
                    Reading::from_channels(plus, minus, d.resolving)
                })
                .collect();
            clean.entry(readings).or_default().push(b.weight * w, st.normalized()?)?;
        }
    }

    let mut buckets: BTreeMap<OutcomePattern, MixedEnsemble> = BTreeMap::new();
    for (readings, ens) in clean {
        let ens = ens.compressed()?;
        with_dark_counts(&specs, &readings, 1.0, &mut |pattern, p| {
            buckets.entry(OutcomePattern(pattern)).or_default().extend(ens.clone().scaled(p));
            Ok(())
        })?;
    }
    finish(specs.iter().map(DetectorInfo::from).collect(), buckets)
}

fn with_dark_counts(
    specs: &[DetectorSpec],
    readings: &[Reading],
    weight: f64,
    sink: &mut impl FnMut(Vec<Reading>, f64) -> Result<()>,
) -> Result<()> {
    fn rec(
        specs: &[DetectorSpec],
        readings: &[Reading],
        i: usize,
        acc: &mut Vec<Reading>,
        p: f64,
        sink: &mut impl FnMut(Vec<Reading>, f64) -> Result<()>,
    ) -> Result<()> {
        if i == specs.len() {
            return sink(acc.clone(), p);
        }
        let d = &specs[i];
        let pd = d.dark_probability;
        let (plus, minus) = readings[i].channels();
        let mut options: [(Reading, f64); 3] = [(readings[i], 1.0 - pd), (readings[i], 0.0), (readings[i], 0.0)];
        if pd > 0.0 {
            if d.resolving {
                options[1] = (Reading::from_channels(true, minus, true), pd / 2.0);
                options[2] = (Reading::from_channels(plus, true, true), pd / 2.0);
            } else {
                options[1] = (Reading::Click, pd);
            }
        }
        for (r, q) in options {
            if q > 0.0 {
                acc.push(r);
                rec(specs, readings, i + 1, acc, p * q, sink)?;
                acc.pop();
            }
        }
        Ok(())
    }
    let mut acc = Vec::with_capacity(specs.len());
    rec(specs, readings, 0, &mut acc, weight, sink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{AtomLevel, Polarization};
    use crate::math::{re, FRAC_1_SQRT_2};
    use crate::optics::element::OpticalElement;
    use Polarization::{H, V};

    fn atom_photon() -> SparseHybridState {
        let mut s = SparseHybridState::new(alloc::vec![0], [(1, PolBasis::Linear)]).unwrap();
        s.add_term(&[AtomLevel::G], &[(PhotonMode::new(1, H), 1)], re(FRAC_1_SQRT_2)).unwrap();
        s.add_term(&[AtomLevel::E], &[(PhotonMode::new(1, V), 1)], re(FRAC_1_SQRT_2)).unwrap();
        s
    }

    fn net(d: DetectorSpec) -> NetworkConfig {
        NetworkConfig::new(alloc::vec![OpticalElement::Detector(d)])
    }

    #[test]
    fn ideal_detection_projects_atom() {
        let t = net(DetectorSpec::ideal(1, 1, MeasurementBasis::Hv)).run(&atom_photon().into()).unwrap();
        assert_eq!(t.entries.len(), 2);
        assert!((t.total_probability() - 1.0).abs() < 1e-14);
        let h = t.entry(&OutcomePattern(alloc::vec![Reading::Plus])).unwrap();
        assert!((h.probability - 0.5).abs() < 1e-14);
        assert!((h.post.fidelity(&SparseHybridState::atom(0, AtomLevel::G)).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(t.label(&h.pattern), "D1=H");
    }

    #[test]
    fn efficiency_and_dark_counts() {
        let mut d = DetectorSpec::ideal(1, 7, MeasurementBasis::Hv);
        d.efficiency = 0.8;
        d.dark_probability = 0.1;
        let t = net(d).run(&atom_photon().into()).unwrap();
        assert!((t.total_probability() - 1.0).abs() < 1e-14);
        let none = t.entry(&OutcomePattern(alloc::vec![Reading::NoClick])).unwrap();
        assert!((none.probability - 0.2 * 0.9).abs() < 1e-14);
        let both = t.entry(&OutcomePattern(alloc::vec![Reading::Both])).unwrap();
        assert!((both.probability - 0.8 * 0.05).abs() < 1e-14);
        // H reading: true H with no dark count, dark H on a true H, or dark H after a loss.
        let h = t.entry(&OutcomePattern(alloc::vec![Reading::Plus])).unwrap();
        assert!((h.probability - (0.4 * 0.95 + 0.2 * 0.05)).abs() < 1e-14);
    }

    #[test]
    fn bare_detector_clicks() {
        let mut d = DetectorSpec::ideal(1, 1, MeasurementBasis::Hv);
        d.resolving = false;
        let t = net(d).run(&atom_photon().into()).unwrap();
        assert_eq!(t.entries.len(), 1);
        assert_eq!(t.entries[0].pattern.0, alloc::vec![Reading::Click]);
        assert!(t.entries[0].accepted);
    }

    #[test]
    fn unterminated_rail_is_an_error() {
        let s = atom_photon().with_rail(2, PolBasis::Linear).unwrap();
        let mut s2 = SparseHybridState::new(alloc::vec![0], [(1, PolBasis::Linear), (2, PolBasis::Linear)]).unwrap();
        s2.add_term(&[AtomLevel::G], &[(PhotonMode::new(2, H), 1)], re(1.0)).unwrap();
        assert!(net(DetectorSpec::ideal(1, 1, MeasurementBasis::Hv)).run(&s.into()).is_ok());
        assert_eq!(
            net(DetectorSpec::ideal(1, 1, MeasurementBasis::Hv)).run(&s2.into()).unwrap_err(),
            Error::UnterminatedRail(2)
        );
    }
}
