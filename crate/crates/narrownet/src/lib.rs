//! Compiler and verification toolkit for deep, narrow feedforward networks.
//!
//! The crate builds explicit networks of bounded width (`n + m + 1` or
//! `n + m + 2` for `n` inputs and `m` outputs) and arbitrary depth that
//! approximate a given target function, then measures how well they do it.
//!
//! It is organised as a small compiler stack:
//!
//! * [`net`] is the intermediate representation: affine layers with
//!   per-neuron activation tags, plus evaluation and structural audits.
//! * [`act`] is the activation registry: evaluation functions together with
//!   the derivative data the constructions need.
//! * [`gadgets`] holds the small reusable fragments (approximate identity,
//!   exact multiplication, trapezoid bumps, reciprocal chains, ...).
//! * [`compile`] turns targets into networks: the register model for
//!   general activations, the square model for polynomial targets, plus the
//!   staged lowering passes that replace ideal identity and square neurons
//!   by realisable ones.
//! * [`verify`] estimates sup-norm and `L^p` errors on boxes and runs
//!   parameter sweeps.
//!
//! Design notes:
//!
//! * Everything is `f64`. The gadget chains are numerically delicate and
//!   32-bit floats are not enough at the tolerances the test suite pins.
//! * Networks are immutable after construction and evaluation is pure, so
//!   one network may be evaluated from many threads concurrently.
//! * The crate is `no_std`-compatible (with `alloc`); the `std` feature
//!   (default) only adds `std::error::Error` impls. Transcendentals go
//!   through `libm` in both modes so results are bit-identical.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod act;
pub mod compile;
pub mod error;
pub mod gadgets;
pub mod math;
pub mod net;
pub mod poly;
pub mod verify;

pub use act::{builtin_registry, probe_derivatives, ActivationSpec, Registry};
pub use error::Error;
pub use net::{ActivationTag, AffineMap, Audit, Box as DomainBox, Layer, Network};

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
