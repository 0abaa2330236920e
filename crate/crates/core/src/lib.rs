//! Exact diagonalization of two parallel suspended nanotubes, each hosting four
//! quantum dots at half filling, coupled to the fundamental flexural mode of
//! its tube and to each other through an inter-tube Coulomb term.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no I/O. It contains
//!
//! - [`basis`]: occupation-number bases for electrons and truncated phonons and
//!   the composite index arithmetic,
//! - [`hamiltonian`] and [`sparse`]: model parameters, couplings and the
//!   compressed-row operators for one and two tubes,
//! - [`lang_firsov`]: the analytic atomic-limit engine (effective attraction,
//!   ground manifolds, critical couplings, phonon estimates, rescaling),
//! - [`eigen`]: thick-restart Lanczos, a dense oracle and the iterative shift
//!   solver,
//! - [`observables`]: reduced density matrices, entropies, negativity and the
//!   per-point observable record,
//! - [`point`]: the one-call pipeline used by sweeps and the command line.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
#[macro_use]
extern crate std;

pub mod basis;
pub mod eigen;
mod error;
pub mod hamiltonian;
pub mod lang_firsov;
mod math;
pub mod observables;
pub mod point;
pub mod sparse;

pub use error::{Error, Result};
