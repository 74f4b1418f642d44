use thiserror::Error;

use crate::isa::{EncodeError, Reg};

#[derive(Debug, Error)]
pub enum Error {
    #[error("payload is empty")]
    EmptyPayload,
    #[error("payload of {len} bytes exceeds the {max}-byte budget")]
    PayloadTooLarge { len: usize, max: usize },
    #[error("register {0} has two roles")]
    RegisterConflict(Reg),
    #[error("no load sequence for {0:#06x}")]
    UnloadableValue(u16),
    #[error("no charset-valid jal reaches offset {0}")]
    NoValidJal(u64),
    #[error("fmadd solver exhausted its polymorph stream")]
    SolverExhausted,
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("no charset-valid encoding of {0}")]
    NoEncoding(String),
    #[error("layout did not converge")]
    NoFixpoint,
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

pub type Result<T> = std::result::Result<T, Error>;
