use jeaae_core::Error;

pub const USAGE: u8 = 2;
pub const CONFIG: u8 = 3;
pub const DATA: u8 = 4;
pub const DIVERGENCE: u8 = 5;
pub const INFEASIBLE: u8 = 6;
pub const IO: u8 = 7;
pub const CONSISTENCY: u8 = 8;

pub fn code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Budget { .. } => CONFIG,
        Error::Dimension(_)
        | Error::Parse { .. }
        | Error::Vocabulary { .. }
        | Error::DegenerateAttribute(_)
        | Error::InsufficientData(_)
        | Error::State(_)
        | Error::Serde(_) => DATA,
        Error::Divergence { .. } | Error::Numeric(_) => DIVERGENCE,
        Error::AttackInfeasible(_) => INFEASIBLE,
        Error::Io { .. } => IO,
        Error::Consistency(_) => CONSISTENCY,
    }
}
