use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("atom {0} appears in both operands")]
    AtomOverlap(u32),
    #[error("rail {0} appears in both operands")]
    RailOverlap(u32),
    #[error("states have different shapes: {0}")]
    ShapeMismatch(String),
    #[error("unknown atom id {0}")]
    UnknownAtom(u32),
    #[error("unknown rail {0}")]
    UnknownRail(u32),
    #[error("rail {0} already exists")]
    RailExists(u32),
    #[error("rail {rail} has the wrong polarization basis for {op}")]
    WrongBasis { rail: u32, op: &'static str },
    #[error("photon occupation {count} exceeds the per-mode cap of 4")]
    OccupationOverflow { count: u32 },
    #[error("operator is not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no stationary limit: {0}")]
    NoStationaryLimit(&'static str),
    #[error("atom {atom} is in level {level}, which the operation does not accept")]
    UnexpectedLevel { atom: u32, level: &'static str },
    #[error("element {index}: {reason}")]
    Network { index: usize, reason: String },
    #[error("rail {0} carries photons but is not terminated by a detector")]
    UnterminatedRail(u32),
    #[error("fusion atom {0} is not at a chain end")]
    NotChainEnd(u32),
    #[error("unsupported: {0}")]
    Unsupported(String),
}
