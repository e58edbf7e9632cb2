//! Exact tail asymptotics for two-node Markov-modulated queueing networks.
//!
//! The level (queue 1) is the additive part of a Markov additive process and
//! the phase (queue 2) is a nearest-neighbour walk with a distinguished
//! boundary phase. The crate classifies such a walk into the bridge,
//! null-recurrent or jitter regime, computes the decay rate, polynomial
//! exponent, phase profile and every constant in closed form, and carries
//! brute-force oracles to check all of it.
//!
//! Module map:
//!
//! - [`laurent`]: finite-support displacement transforms.
//! - [`kernel`]: free kernels, exponential twists, h-transforms, phase measures.
//! - [`spectral`]: twist-point solvers, regime classification, spectral radius.
//! - [`greens`]: return transform `F(z)`, Green's function constants.
//! - [`models`]: modified Jackson network and bathroom model builders.
//! - [`asymptotics`]: the assembled tail law.
//! - [`verify`]: independent oracles (Green's series, quadrant solves, Monte Carlo).
//!
//! The crate is `no_std` and needs only `alloc`.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose so that NaN takes the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod asymptotics;
pub mod error;
pub mod greens;
pub mod kernel;
pub mod laurent;
mod linalg;
pub mod models;
mod num;
pub mod spectral;
pub mod verify;

pub use crate::asymptotics::{analyze, TailLaw};
pub use crate::error::{Error, ErrorKind, Result};
pub use crate::kernel::{FreeKernel, TwistedConstants};
pub use crate::laurent::LaurentPoly;
pub use crate::spectral::{classify, Regime, TwistPoint};
