//! Ready-made networks. Source rails carry circularly polarized photons.

use alloc::vec;

use super::element::{DetectorSpec, MeasurementBasis, NetworkConfig, OpticalElement};

/// Source rails of the four cavities in generation order.
pub const SOURCE_RAILS: [u32; 4] = [1, 2, 3, 4];

pub const RAIL_A: u32 = 11;
pub const RAIL_B: u32 = 12;
pub const RAIL_C: u32 = 13;
pub const RAIL_D: u32 = 14;
pub const RAIL_E: u32 = 15;
pub const RAIL_F: u32 = 16;

/// Source rails of the two chain-end photons in a fusion attempt.
pub const FUSION_RAILS: [u32; 2] = [101, 102];
const FUSION_OUT: [u32; 2] = [103, 104];

fn det(rail: u32, id: u32) -> OpticalElement {
    OpticalElement::Detector(DetectorSpec::ideal(rail, id, MeasurementBasis::Da))
}

fn hwp(rail: u32) -> OpticalElement {
    OpticalElement::Hwp { rail, angle_deg: 22.5 }
}

/// Four photons, three PBS, detectors D1..D4 on rails A, E, F, D. Accepting
/// one click per detector heralds the four-atom cluster state.
pub fn default_four_atom_network() -> NetworkConfig {
    use OpticalElement::*;
    let [r1, r2, r3, r4] = SOURCE_RAILS;
    NetworkConfig::new(vec![
        Qwp { rail: r1 },
        Qwp { rail: r2 },
        Qwp { rail: r3 },
        Qwp { rail: r4 },
        Pbs { in_a: r1, in_b: r2, out_1: RAIL_A, out_2: RAIL_B },
        Pbs { in_a: r3, in_b: r4, out_1: RAIL_C, out_2: RAIL_D },
        hwp(RAIL_A),
        hwp(RAIL_B),
        hwp(RAIL_D),
        Pbs { in_a: RAIL_B, in_b: RAIL_C, out_1: RAIL_E, out_2: RAIL_F },
        hwp(RAIL_E),
        hwp(RAIL_F),
        det(RAIL_A, 1),
        det(RAIL_E, 2),
        det(RAIL_F, 3),
        det(RAIL_D, 4),
    ])
}

/// The four-photon network with the middle PBS removed (rails B and C go
/// straight to detectors); it only heralds two independent Bell pairs.
pub fn two_pair_network() -> NetworkConfig {
    use OpticalElement::*;
    let [r1, r2, r3, r4] = SOURCE_RAILS;
    NetworkConfig::new(vec![
        Qwp { rail: r1 },
        Qwp { rail: r2 },
        Qwp { rail: r3 },
        Qwp { rail: r4 },
        Pbs { in_a: r1, in_b: r2, out_1: RAIL_A, out_2: RAIL_B },
        Pbs { in_a: r3, in_b: r4, out_1: RAIL_C, out_2: RAIL_D },
        hwp(RAIL_A),
        hwp(RAIL_B),
        hwp(RAIL_C),
        hwp(RAIL_D),
        det(RAIL_A, 1),
        det(RAIL_B, 2),
        det(RAIL_C, 3),
        det(RAIL_D, 4),
    ])
}

/// Two-photon parity check on rails 1 and 2: a click in each output heralds
/// an even-parity Bell pair of the emitting atoms.
pub fn parity_check_network() -> NetworkConfig {
    use OpticalElement::*;
    let [r1, r2, ..] = SOURCE_RAILS;
    NetworkConfig::new(vec![
        Qwp { rail: r1 },
        Qwp { rail: r2 },
        Pbs { in_a: r1, in_b: r2, out_1: RAIL_A, out_2: RAIL_B },
        hwp(RAIL_A),
        hwp(RAIL_B),
        det(RAIL_A, 1),
        det(RAIL_B, 2),
    ])
}

/// Parity check on the two chain-end photons used for fusion.
pub fn fusion_network() -> NetworkConfig {
    use OpticalElement::*;
    let [a, b] = FUSION_RAILS;
    let [o1, o2] = FUSION_OUT;
    NetworkConfig::new(vec![
        Qwp { rail: a },
        Qwp { rail: b },
        Pbs { in_a: a, in_b: b, out_1: o1, out_2: o2 },
        hwp(o1),
        hwp(o2),
        det(o1, 1),
        det(o2, 2),
    ])
}
