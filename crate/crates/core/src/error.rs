use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("delay {tau:e} s is outside the model domain (|tau| <= {limit:e} s)")]
    OutOfModelDomain { tau: f64, limit: f64 },
    #[error("degenerate data: {0}")]
    DegenerateData(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, name: &'static str, reason: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason })
    }
}
