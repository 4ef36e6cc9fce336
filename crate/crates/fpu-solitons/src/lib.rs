//! Numerical laboratory for Fermi–Pasta–Ulam-type lattices: solitary waves,
//! their modulation, and asymptotic multi-soliton states built by backward
//! shooting.
//!
//! The lattice state is a pair of real sequences `u = (r, p)` on a finite
//! window of integer sites, evolving under the Hamiltonian system
//!
//! ```text
//! dr/dt(n) = p(n+1) - p(n)
//! dp/dt(n) = V'(r(n)) - V'(r(n-1))
//! ```
//!
//! with `H(u) = sum_n p(n)^2/2 + V(r(n))` and a potential normalized so that
//! `V(0) = V'(0) = 0`, `V''(0) = 1`, `V'''(0) = 1/6`. In this normalization the
//! sound speed is 1 and the lattice carries a family of supersonic solitary
//! waves `u_c(x - ct)`, `c > 1`, that collapse onto KdV solitons in the
//! small-amplitude limit.
//!
//! The crate provides, in rough dependency order:
//!
//! * [`field`], [`potential`], [`ops`], [`weights`]: the lattice state, the
//!   built-in potentials, the symplectic structure `J`, its inverse, and the
//!   exponentially weighted norms used by all diagnostics;
//! * [`integrate`]: a time-reversible kick–drift–kick splitting integrator;
//! * [`profile`]: a spectral (Petviashvili) solver for solitary-wave profiles
//!   plus an interpolating family over a range of speeds;
//! * [`toda`], [`kdv`]: closed-form integrable references (Toda lattice
//!   solitons, KdV Cauchy-matrix N-solitons) used as oracles;
//! * [`shooting`]: glued multi-soliton terminal data, backward shooting, the
//!   Cauchy-sequence construction of asymptotically pure multi-soliton states
//!   and its forward validation;
//! * [`modulation`]: symplectically orthogonal decomposition of a state into
//!   soliton parameters plus residual, and parameter tracking along
//!   trajectories;
//! * [`diagnostics`]: interaction-size measurements, virial-localized energy,
//!   residual decay curves, and linearized (frozen-coefficient) decay rates;
//! * [`config`], [`experiment`]: the plain-text experiment configuration and
//!   the deterministic file-emitting runners behind the command-line tool.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod field;
pub mod fit;
pub mod integrate;
pub mod kdv;
pub mod modulation;
pub mod ops;
pub mod potential;
pub mod profile;
pub mod shooting;
pub mod toda;
pub mod weights;

pub use error::Error;
pub use field::LatticeField;
pub use potential::Potential;

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;
