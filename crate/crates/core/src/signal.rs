//! Shared signal type and validation helpers.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Dense real vector: unknown signals, solver iterates and measurements.
pub type Signal = DVector<f64>;

/// True when every entry is finite (no NaN, no infinity).
pub fn is_finite(x: &Signal) -> bool {
    x.iter().all(|v| v.is_finite())
}

pub(crate) fn ensure_finite(name: &str, x: &Signal) -> Result<()> {
    if x.is_empty() {
        return Err(Error::InvalidInput(format!("{name} must have length >= 1")));
    }
    if !is_finite(x) {
        return Err(Error::InvalidInput(format!(
            "{name} contains a non-finite entry"
        )));
    }
    Ok(())
}

pub(crate) fn ensure_len(name: &str, x: &Signal, expected: usize) -> Result<()> {
    if x.len() != expected {
        return Err(Error::InvalidInput(format!(
            "{name} has length {}, expected {expected}",
            x.len()
        )));
    }
    Ok(())
}
