// Copyright 2026 The fraclat Authors
// SPDX-License-Identifier: Apache-2.0

//! Fractional discrete Laplacians on the integer lattice: the kernel, its
//! heat semigroup, vertical square functions, pseudo-gradients, a jump
//! process simulator and a Schrödinger variant with nonnegative potential.

pub mod error;
pub mod gradients;
pub mod jumpsim;
pub mod kernel;
pub mod lattice;
pub mod oracle;
pub mod quadrature;
pub mod report;
pub mod schrodinger;
pub mod semigroup;
pub mod special;
pub mod squarefn;
pub mod verify;

pub use error::{Error, Result};
pub use lattice::{in_ds, lq_norm, LatticeFunction, Window};
pub use report::VerificationReport;
