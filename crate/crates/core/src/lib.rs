//! Interaction-induced optical lattices for Rydberg-dressed three-level atoms.
//!
//! The crate computes the effective two-atom trapping potential that forms
//! when ground-state atoms are dressed to a Rydberg level by a two-photon
//! ladder `g -> p -> e` whose upper leg is a standing wave. The pieces are:
//!
//! - [`quantum`]: single- and two-atom Hamiltonians, the Lindblad generator
//!   and its dissipative steady state.
//! - [`lattice`]: the standing-wave Rabi profile, numeric and closed-form
//!   effective interactions, the Lorentzian trap model, resonance maps,
//!   soft-core radius, collective depth and loss rate.
//! - [`spectrum`]: pre-diagonalized single- and double-excitation subspaces.
//! - [`motional`]: imaginary-time two-atom ground states on a potential
//!   surface and their normal-mode structure (requires `std`).
//! - [`decoherence`]: loss calibration of the lower Rabi frequency and the
//!   black-body collective-decoherence budget.
//! - [`blockade`]: unitary blockade-leakage dynamics through a manifold of
//!   dipole-coupled Rydberg pair states.
//!
//! All energies and rates are angular frequencies in rad/s (ħ = 1). Lengths
//! are in metres. The single-atom basis order is `(g, p, e)` everywhere and
//! the pair basis is the row-major tensor product `(gg, gp, ge, pg, ..., ee)`.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature; the FFT-based motional solver is only available with `std`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod blockade;
pub mod decoherence;
pub mod error;
pub mod lattice;
#[cfg(feature = "std")]
pub mod motional;
pub mod params;
pub mod quantum;
pub mod spectrum;
pub mod units;

mod fit;
pub mod math;

pub use error::{Error, Result};
pub use params::{DressingParams, RegimeFlags};

/// Complex scalar used for all operator and state entries.
pub type C64 = num_complex::Complex<f64>;
