use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::hilbert::{MixedEnsemble, PolBasis};
use crate::{Error, Result};

use super::apply::{apply_hwp, apply_loss, apply_pbs, apply_qwp};
use super::detect::{detect_all, OutcomeTable};

/// Label set a detector reports its two channels in. Purely cosmetic: the
/// channels are always the `H`/`V` (or `L`/`R`) modes arriving at it, and a
/// preceding 22.5° wave plate makes them diagonal/antidiagonal outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MeasurementBasis {
    #[default]
    Hv,
    Da,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct DetectorSpec {
    pub rail: u32,
    pub id: u32,
    #[cfg_attr(feature = "serde", serde(default = "one"))]
    pub efficiency: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub dark_probability: f64,
    /// Polarization-resolving (two channels) versus bare click/no-click.
    #[cfg_attr(feature = "serde", serde(default = "yes"))]
    pub resolving: bool,
    #[cfg_attr(feature = "serde", serde(default))]
    pub basis: MeasurementBasis,
}

#[cfg(feature = "serde")]
fn one() -> f64 {
    1.0
}

#[cfg(feature = "serde")]
fn yes() -> bool {
    true
}

impl DetectorSpec {
    pub fn ideal(rail: u32, id: u32, basis: MeasurementBasis) -> Self {
        DetectorSpec { rail, id, efficiency: 1.0, dark_probability: 0.0, resolving: true, basis }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case", deny_unknown_fields))]
pub enum OpticalElement {
    /// Quarter-wave plate, `L → H`, `R → V`.
    Qwp { rail: u32 },
    /// Half-wave plate at `angle_deg` degrees.
    Hwp { rail: u32, angle_deg: f64 },
    /// Polarizing beam splitter: transmits H, reflects V.
    /// `H_a → out_1`, `V_a → out_2`, `H_b → out_2`, `V_b → out_1`.
    Pbs { in_a: u32, in_b: u32, out_1: u32, out_2: u32 },
    /// Photon loss with the given transmission.
    Loss { rail: u32, transmission: f64 },
    Detector(DetectorSpec),
}

impl OpticalElement {
    pub fn kind(&self) -> &'static str {
        match self {
            OpticalElement::Qwp { .. } => "qwp",
            OpticalElement::Hwp { .. } => "hwp",
            OpticalElement::Pbs { .. } => "pbs",
            OpticalElement::Loss { .. } => "loss",
            OpticalElement::Detector(_) => "detector",
        }
    }
}

/// Ordered optical elements wiring input rails to detectors. Acceptance is
/// exactly one click on every declared detector.
#[derive(Clone, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct NetworkConfig {
    pub elements: Vec<OpticalElement>,
}

fn unit_interval(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

impl NetworkConfig {
    pub fn new(elements: Vec<OpticalElement>) -> Self {
        NetworkConfig { elements }
    }

    pub fn detectors(&self) -> impl Iterator<Item = &DetectorSpec> {
        self.elements.iter().filter_map(|e| match e {
            OpticalElement::Detector(d) => Some(d),
            _ => None,
        })
    }

    pub fn count(&self, kind: &str) -> usize {
        self.elements.iter().filter(|e| e.kind() == kind).count()
    }

    /// Checks ranges and rail wiring against the rails (and their bases)
    /// present at the input. Errors name the offending element index.
    pub fn validate(&self, inputs: &BTreeMap<u32, PolBasis>) -> Result<()> {
        let mut live = inputs.clone();
        let mut used: BTreeSet<u32> = inputs.keys().copied().collect();
        let mut ids = BTreeSet::new();
        let fail = |index: usize, reason: String| Err(Error::Network { index, reason });
        for (index, el) in self.elements.iter().enumerate() {
            let need = |live: &BTreeMap<u32, PolBasis>, rail: u32| -> core::result::Result<PolBasis, String> {
                live.get(&rail).copied().ok_or_else(|| format!("rail {rail} is not live here"))
            };
            match *el {
                OpticalElement::Qwp { rail } => match need(&live, rail) {
                    Ok(PolBasis::Circular) => {
                        live.insert(rail, PolBasis::Linear);
                    }
                    Ok(PolBasis::Linear) => return fail(index, format!("rail {rail} is already linearly polarized")),
                    Err(e) => return fail(index, e),
                },
                OpticalElement::Hwp { rail, angle_deg } => {
                    if !(0.0..180.0).contains(&angle_deg) {
                        return fail(index, format!("angle {angle_deg} outside [0, 180)"));
                    }
                    match need(&live, rail) {
                        Ok(PolBasis::Linear) => {}
                        Ok(PolBasis::Circular) => return fail(index, format!("rail {rail} still circular; add a QWP")),
                        Err(e) => return fail(index, e),
                    }
                }
                OpticalElement::Pbs { in_a, in_b, out_1, out_2 } => {
                    if in_a == in_b || out_1 == out_2 {
                        return fail(index, String::from("PBS ports must be distinct"));
                    }
                    for rail in [in_a, in_b] {
                        match need(&live, rail) {
                            Ok(PolBasis::Linear) => {}
                            Ok(PolBasis::Circular) => return fail(index, format!("rail {rail} still circular; add a QWP")),
                            Err(e) => return fail(index, e),
                        }
                    }
                    for rail in [out_1, out_2] {
                        if used.contains(&rail) {
                            return fail(index, format!("output rail {rail} is not fresh"));
                        }
                    }
                    live.remove(&in_a);
                    live.remove(&in_b);
                    for rail in [out_1, out_2] {
                        live.insert(rail, PolBasis::Linear);
                        used.insert(rail);
                    }
                }
                OpticalElement::Loss { rail, transmission } => {
                    if !unit_interval(transmission) {
                        return fail(index, format!("transmission {transmission} outside [0, 1]"));
                    }
                    if let Err(e) = need(&live, rail) {
                        return fail(index, e);
                    }
                }
                OpticalElement::Detector(d) => {
                    if !unit_interval(d.efficiency) || !unit_interval(d.dark_probability) {
                        return fail(index, String::from("detector efficiency and dark probability must lie in [0, 1]"));
                    }
                    if !ids.insert(d.id) {
                        return fail(index, format!("duplicate detector id {}", d.id));
                    }
                    if let Err(e) = need(&live, d.rail) {
                        return fail(index, e);
                    }
                    live.remove(&d.rail);
                }
            }
        }
        Ok(())
    }

    /// Applies every non-detector element in order.
    pub fn propagate(&self, input: &MixedEnsemble) -> Result<MixedEnsemble> {
        let mut ens = input.clone();
        for el in &self.elements {
            ens = match *el {
                OpticalElement::Qwp { rail } => ens.try_map(|s| apply_qwp(s, rail))?,
                OpticalElement::Hwp { rail, angle_deg } => ens.try_map(|s| apply_hwp(s, rail, angle_deg))?,
                OpticalElement::Pbs { in_a, in_b, out_1, out_2 } => {
                    ens.try_map(|s| apply_pbs(s, in_a, in_b, out_1, out_2))?
                }
                OpticalElement::Loss { rail, transmission } => apply_loss(&ens, rail, transmission)?,
                OpticalElement::Detector(_) => ens,
            };
        }
        Ok(ens)
    }

    /// Validates against the input's rails, propagates, and enumerates every
    /// detection outcome.
    pub fn run(&self, input: &MixedEnsemble) -> Result<OutcomeTable> {
        if let Some(b) = input.branches().first() {
            self.validate(b.state.rails())?;
        }
        let out = self.propagate(input)?;
        detect_all(&out, self)
    }

    /// Copy with every detector's efficiency and dark-count probability
    /// replaced by `f(detector)`.
    pub fn with_detectors(&self, mut f: impl FnMut(&DetectorSpec) -> DetectorSpec) -> Self {
        let elements = self
            .elements
            .iter()
            .map(|e| match e {
                OpticalElement::Detector(d) => OpticalElement::Detector(f(d)),
                other => *other,
            })
            .collect();
        NetworkConfig { elements }
    }

    /// Copy with `Loss` elements prepended on the given rails.
    pub fn with_input_losses(&self, losses: &[(u32, f64)]) -> Self {
        let mut elements: Vec<OpticalElement> = losses
            .iter()
            .filter(|(_, t)| *t < 1.0)
            .map(|&(rail, transmission)| OpticalElement::Loss { rail, transmission })
            .collect();
        elements.extend_from_slice(&self.elements);
        NetworkConfig { elements }
    }
}
