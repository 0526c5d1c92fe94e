pub mod bs;
pub mod kpoint;
pub mod sphere;
pub mod transport;
pub mod zeros;

use crate::error::{HResult, HarnessError};

pub(crate) fn require(cond: bool, msg: impl Into<String>) -> HResult<()> {
    if cond {
        Ok(())
    } else {
        Err(HarnessError::Config(msg.into()))
    }
}

/// Strictly decreasing.
pub(crate) fn decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}
