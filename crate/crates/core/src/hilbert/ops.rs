use crate::math::{c, re, FRAC_1_SQRT_2};
use crate::C64;

pub type Mat2 = [[C64; 2]; 2];
pub type Mat6 = [[C64; 6]; 6];

/// A local operator on one atom: either on the `{g, e}` qubit (identity on
/// the remaining levels) or on all six levels in [`AtomLevel::ALL`] order.
///
/// [`AtomLevel::ALL`]: super::AtomLevel::ALL
#[derive(Clone, Debug, PartialEq)]
pub enum LocalOp {
    Qubit(Mat2),
    Full(Mat6),
}

impl LocalOp {
    pub fn hadamard() -> Self {
        LocalOp::Qubit(hadamard())
    }

    pub fn pauli_x() -> Self {
        LocalOp::Qubit(pauli_x())
    }

    pub fn pauli_z() -> Self {
        LocalOp::Qubit(pauli_z())
    }

    /// Largest entry of `U†U - I`.
    pub fn unitarity_deviation(&self) -> f64 {
        match self {
            LocalOp::Qubit(m) => deviation(m),
            LocalOp::Full(m) => deviation(m),
        }
    }
}

fn deviation<const N: usize>(m: &[[C64; N]; N]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..N {
        for j in 0..N {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..N {
                acc += m[k][i].conj() * m[k][j];
            }
            if i == j {
                acc -= re(1.0);
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

pub fn mat2_deviation(m: &Mat2) -> f64 {
    deviation(m)
}

pub fn hadamard() -> Mat2 {
    let s = re(FRAC_1_SQRT_2);
    [[s, s], [s, -s]]
}

pub fn pauli_x() -> Mat2 {
    [[re(0.0), re(1.0)], [re(1.0), re(0.0)]]
}

/// `σ_z` with `σ_z|g⟩ = |g⟩`, `σ_z|e⟩ = -|e⟩`.
pub fn pauli_z() -> Mat2 {
    [[re(1.0), re(0.0)], [re(0.0), re(-1.0)]]
}

pub fn identity2() -> Mat2 {
    [[re(1.0), c(0.0, 0.0)], [c(0.0, 0.0), re(1.0)]]
}
