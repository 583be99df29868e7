use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Atomic level. `G`/`E` span the qubit; `Alpha` is the excited ancilla the
/// emission starts from, `AlphaPrime` the ground ancilla reached after restart
/// or fusion emission. `GPrime`/`EPrime` are the excited shelving levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum AtomLevel {
    G,
    E,
    GPrime,
    EPrime,
    Alpha,
    AlphaPrime,
}

impl AtomLevel {
    pub const ALL: [AtomLevel; 6] = [
        AtomLevel::G,
        AtomLevel::E,
        AtomLevel::GPrime,
        AtomLevel::EPrime,
        AtomLevel::Alpha,
        AtomLevel::AlphaPrime,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_qubit(self) -> bool {
        matches!(self, AtomLevel::G | AtomLevel::E)
    }

    /// Levels subject to spontaneous decay at rate γ.
    pub fn is_excited(self) -> bool {
        matches!(self, AtomLevel::Alpha | AtomLevel::GPrime | AtomLevel::EPrime)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            AtomLevel::G => "g",
            AtomLevel::E => "e",
            AtomLevel::GPrime => "g'",
            AtomLevel::EPrime => "e'",
            AtomLevel::Alpha => "a",
            AtomLevel::AlphaPrime => "a'",
        }
    }
}

impl fmt::Display for AtomLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Polarization {
    L,
    R,
    H,
    V,
}

impl Polarization {
    pub fn basis(self) -> PolBasis {
        match self {
            Polarization::L | Polarization::R => PolBasis::Circular,
            Polarization::H | Polarization::V => PolBasis::Linear,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Polarization::L => 'L',
            Polarization::R => 'R',
            Polarization::H => 'H',
            Polarization::V => 'V',
        }
    }
}

/// Which label pair a rail currently uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum PolBasis {
    Circular,
    Linear,
}

impl PolBasis {
    /// The two polarizations of this basis in canonical order.
    pub fn pair(self) -> [Polarization; 2] {
        match self {
            PolBasis::Circular => [Polarization::L, Polarization::R],
            PolBasis::Linear => [Polarization::H, Polarization::V],
        }
    }
}

/// A single photonic mode: spatial rail, polarization and temporal mode.
///
/// `tmode` indexes an orthonormal set of temporal envelopes. Photons from
/// identical cavities all share `tmode == 0`; mismatched cavities spread
/// over several temporal modes (see `protocol::temporal_modes`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhotonMode {
    pub rail: u32,
    pub pol: Polarization,
    pub tmode: u8,
}

impl PhotonMode {
    pub const fn new(rail: u32, pol: Polarization) -> Self {
        PhotonMode { rail, pol, tmode: 0 }
    }

    pub const fn with_tmode(rail: u32, pol: Polarization, tmode: u8) -> Self {
        PhotonMode { rail, pol, tmode }
    }
}

impl fmt::Display for PhotonMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.rail, self.pol.symbol(), self.tmode)
    }
}

/// Largest photon number allowed in one mode. Four photons is the most a
/// generation round can put on any rail; more means a wiring error.
pub const MAX_OCCUPATION: u8 = 4;

/// Canonical basis label: one level per atom (in the owning state's atom
/// order) and a sorted list of occupied photon modes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisLabel {
    pub(crate) atoms: Vec<AtomLevel>,
    pub(crate) photons: Vec<(PhotonMode, u8)>,
}

impl BasisLabel {
    pub fn new(atoms: Vec<AtomLevel>, photons: &[(PhotonMode, u8)]) -> crate::Result<Self> {
        let mut label = BasisLabel { atoms, photons: Vec::new() };
        for &(mode, n) in photons {
            for _ in 0..n {
                label.add_photon(mode)?;
            }
        }
        Ok(label)
    }

    pub fn atoms(&self) -> &[AtomLevel] {
        &self.atoms
    }

    pub fn photons(&self) -> &[(PhotonMode, u8)] {
        &self.photons
    }

    pub fn photon_count(&self) -> u32 {
        self.photons.iter().map(|&(_, n)| n as u32).sum()
    }

    pub fn occupation(&self, mode: PhotonMode) -> u8 {
        self.photons
            .binary_search_by(|(m, _)| m.cmp(&mode))
            .map(|i| self.photons[i].1)
            .unwrap_or(0)
    }

    /// Adds one photon to `mode` and returns the new occupation.
    pub(crate) fn add_photon(&mut self, mode: PhotonMode) -> crate::Result<u8> {
        match self.photons.binary_search_by(|(m, _)| m.cmp(&mode)) {
            Ok(i) => {
                let n = self.photons[i].1 + 1;
                if n > MAX_OCCUPATION {
                    return Err(crate::Error::OccupationOverflow { count: n as u32 });
                }
                self.photons[i].1 = n;
                Ok(n)
            }
            Err(i) => {
                self.photons.insert(i, (mode, 1));
                Ok(1)
            }
        }
    }

    pub fn photons_on_rail(&self, rail: u32) -> impl Iterator<Item = &(PhotonMode, u8)> {
        self.photons.iter().filter(move |(m, _)| m.rail == rail)
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("|")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(a.symbol())?;
        }
        f.write_str(";")?;
        for (i, (m, n)) in self.photons.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}", m, n)?;
        }
        f.write_str(">")
    }
}
