// Copyright 2026 The fraclat Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid lattice function: {0}")]
    InvalidFunction(String),

    #[error("time quadrature failed: {0}")]
    Quadrature(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Rejects orders outside the open interval (0, 1).
pub(crate) fn check_order(s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::param("s", format!("order must lie in (0, 1), got {s}")))
    }
}

/// Rejects exponents outside (1, 2].
pub(crate) fn check_q_low(q: f64) -> Result<()> {
    if q.is_finite() && q > 1.0 && q <= 2.0 {
        Ok(())
    } else {
        Err(Error::param("q", format!("exponent must lie in (1, 2], got {q}")))
    }
}
