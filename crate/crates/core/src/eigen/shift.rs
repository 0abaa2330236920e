//! Self-consistent phonon frame displacement.
//!
//! Each outer step diagonalizes the model in the frame `a = b + alpha` (one
//! real `alpha` per tube), measures `<b>` in the ground state and moves the
//! frame by it. At the fixed point the ground state has `<b> = 0`, so its
//! phonon content sits around the vacuum of the displaced frame and a small
//! Fock cutoff suffices even when the lab-frame phonon number is large.

use alloc::vec::Vec;

use super::lanczos::GroundStateResult;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShiftSettings {
    /// Convergence threshold on `|<b>|` for both tubes.
    pub tol: f64,
    pub max_outer: usize,
    /// Initial frame for point solves; `None` uses the atomic-limit estimate.
    pub start: Option<[f64; 2]>,
}

impl Default for ShiftSettings {
    fn default() -> Self {
        Self { tol: 1e-8, max_outer: 50, start: None }
    }
}

/// One outer iteration: the frame used and what was measured in it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShiftStep {
    pub alpha: [f64; 2],
    pub mean_b: [f64; 2],
    pub energy: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ShiftState {
    /// Frame of the last solve.
    pub alpha: [f64; 2],
    pub history: Vec<ShiftStep>,
}

impl ShiftState {
    /// Number of frame updates performed (solves minus one on success).
    pub fn updates(&self) -> usize {
        self.history.len().saturating_sub(1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShiftOutcome {
    /// Ground state in the final frame; `shift` holds that frame.
    pub result: GroundStateResult,
    pub state: ShiftState,
    /// `<b>` of the returned state, below `tol` in magnitude.
    pub mean_b: [f64; 2],
}

/// Runs the fixed-point iteration `alpha <- alpha + <b>` from `start`.
///
/// `solve(alpha, previous_vector)` must return the ground state in the frame
/// `alpha` together with its `<b>` per tube. A single-tube problem simply
/// reports zero for the second tube.
pub fn iterative_shift_solve<F>(start: [f64; 2], settings: &ShiftSettings, mut solve: F) -> Result<ShiftOutcome>
where
    F: FnMut(&[f64; 2], Option<&[f64]>) -> Result<(GroundStateResult, [f64; 2])>,
{
    if !(settings.tol > 0.0) || settings.max_outer == 0 {
        return Err(Error::InvalidParameter("shift tolerance must be positive and max_outer >= 1".into()));
    }
    let mut state = ShiftState { alpha: start, history: Vec::new() };
    let mut previous: Option<GroundStateResult> = None;
    for _ in 0..settings.max_outer {
        let alpha = state.alpha;
        if !alpha.iter().all(|a| a.is_finite()) {
            break;
        }
        let (mut result, mean_b) = solve(&alpha, previous.as_ref().map(|r| r.vector.as_slice()))?;
        state.history.push(ShiftStep { alpha, mean_b, energy: result.energy });
        if mean_b.iter().all(|m| libm::fabs(*m) < settings.tol) {
            result.shift = Some(alpha);
            return Ok(ShiftOutcome { result, state, mean_b });
        }
        state.alpha = [alpha[0] + mean_b[0], alpha[1] + mean_b[1]];
        previous = Some(result);
    }
    let last = state.history.last().map_or(f64::NAN, |s| s.mean_b[0].abs().max(s.mean_b[1].abs()));
    Err(Error::ShiftNotConverged { iterations: state.history.len(), last_mean: last })
}
