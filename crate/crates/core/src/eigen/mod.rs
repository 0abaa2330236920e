//! Ground-state solvers.
//!
//! [`ground_state_lanczos`] is the production path for large operators,
//! [`ground_state_dense`] is the brute-force oracle for small ones, and
//! [`iterative_shift_solve`] wraps the Krylov solver in a self-consistent
//! coherent displacement of each tube's phonon frame.

mod dense;
mod lanczos;
mod shift;

pub use dense::{dense_spectrum, ground_state_dense, DenseSpectrum, DEFAULT_DENSE_CAP};
pub use lanczos::{ground_state_lanczos, random_unit_vector, GroundStateResult, LanczosSettings, NotConverged};
pub use shift::{iterative_shift_solve, ShiftOutcome, ShiftSettings, ShiftState, ShiftStep};
