//! Thick-restart Lanczos for the lowest eigenpair of a real symmetric operator.
//!
//! The Krylov basis is bounded by `krylov_dim` vectors and every new vector is
//! fully reorthogonalized against it (two classical Gram-Schmidt passes), so
//! the projected matrix is exactly `V^T A V` up to rounding and no ghost
//! eigenvalues appear. When the basis is full the `keep` lowest Ritz vectors
//! plus the current residual direction are retained; the projected matrix then
//! starts with their dense `keep x keep` block bordered by the residual couplings.
//!
//! Convergence is declared on the true residual `||A psi - E psi||`, which is
//! recomputed with one extra matvec whenever the Ritz estimate drops below the
//! tolerance. The whole computation is sequential and therefore bitwise
//! reproducible for a given seed or start vector.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::math::{axpy, dot, norm, scale};
use crate::sparse::LinearOperator;
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LanczosSettings {
    /// Absolute residual tolerance, in energy units.
    pub tol: f64,
    /// Budget of operator applications.
    pub max_matvecs: usize,
    pub krylov_dim: usize,
    /// Ritz vectors retained at a restart.
    pub keep: usize,
    /// Seed of the pseudo-random start vector.
    pub seed: u64,
}

impl Default for LanczosSettings {
    fn default() -> Self {
        Self { tol: 1e-10, max_matvecs: 30_000, krylov_dim: 48, keep: 12, seed: 0x5eed }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundStateResult {
    pub energy: f64,
    /// Unit-norm ground vector.
    pub vector: Vec<f64>,
    /// `||H psi - E psi||`, recomputed from the returned vector.
    pub residual: f64,
    /// Operator applications used.
    pub iterations: usize,
    /// Estimate of `E1 - E0` from the second Ritz value, if the Krylov space allowed one.
    pub gap: Option<f64>,
    /// `gap < 10 * tol`: the ground space may be degenerate at solver resolution.
    pub near_degenerate: bool,
    /// Phonon frame displacements when produced by the shift solver.
    pub shift: Option<[f64; 2]>,
}

/// Solver stopped on its matvec budget; carries the best iterate found.
#[derive(Clone, Debug, PartialEq)]
pub struct NotConverged {
    pub best: GroundStateResult,
}

impl fmt::Display for NotConverged {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Lanczos did not converge after {} matvecs (residual {:e})", self.best.iterations, self.best.residual)
    }
}

impl From<NotConverged> for Error {
    fn from(e: NotConverged) -> Self {
        Error::NotConverged { energy: e.best.energy, residual: e.best.residual, iterations: e.best.iterations }
    }
}

/// Deterministic unit vector with entries drawn uniformly from `[-1, 1)`.
pub fn random_unit_vector(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> =
        (0..dim).map(|_| ((rng.next_u64() >> 11) as f64) * (1.0 / (1u64 << 53) as f64) * 2.0 - 1.0).collect();
    let n = norm(&v);
    if n > 0.0 {
        scale(1.0 / n, &mut v);
    }
    v
}

struct Ritz {
    values: Vec<f64>,
    /// Columns are the Ritz vectors in the Krylov basis, lowest first.
    vectors: DMatrix<f64>,
    /// `||T y0 - theta0 y0||` of the lowest pair after refinement.
    in_space: f64,
}

fn ritz(t: &DMatrix<f64>, size: usize) -> Ritz {
    let sub = t.view((0, 0), (size, size)).into_owned();
    let eig = SymmetricEigen::new(sub.clone());
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::from_fn(size, size, |r, c| eig.eigenvectors[(r, order[c])]);
    // The QR eigensolver can leave eigenvector residuals far above rounding
    // level; two inverse-iteration steps restore the lowest pair.
    let (y0, theta0) = refine_lowest(&sub, values[0], vectors.column(0).into_owned());
    let in_space = (&sub * &y0 - &y0 * theta0).norm();
    vectors.set_column(0, &y0);
    values[0] = theta0;
    Ritz { values, vectors, in_space }
}

fn refine_lowest(t: &DMatrix<f64>, theta: f64, y: DVector<f64>) -> (DVector<f64>, f64) {
    let n = t.nrows();
    let scale = t.amax().max(1.0);
    let (mut y, mut theta) = (y, theta);
    for _ in 0..2 {
        let shifted = t - DMatrix::<f64>::identity(n, n) * (theta - 64.0 * f64::EPSILON * scale);
        let Some(z) = shifted.lu().solve(&y) else { break };
        let nz = z.norm();
        if !(nz.is_finite() && nz > 0.0) {
            break;
        }
        y = z / nz;
        theta = y.dot(&(t * &y));
    }
    (y, theta)
}

/// Orthonormal copy of the first `keep` columns (two modified Gram-Schmidt passes).
fn orthonormal_columns(y: &DMatrix<f64>, keep: usize) -> DMatrix<f64> {
    let mut q = y.columns(0, keep).into_owned();
    for i in 0..keep {
        for _pass in 0..2 {
            for k in 0..i {
                let c = q.column(k).dot(&q.column(i));
                let qk = q.column(k).into_owned();
                q.column_mut(i).axpy(-c, &qk, 1.0);
            }
        }
        let n = q.column(i).norm();
        q.column_mut(i).unscale_mut(n);
    }
    q
}

/// Overwrites the first `keep` basis vectors with `V * Y[:, ..keep]`, row block by row block.
fn rotate_basis(basis: &mut [Vec<f64>], y: &DMatrix<f64>, keep: usize) {
    let m = y.nrows();
    let n = basis[0].len();
    const BLOCK: usize = 1024;
    let mut old = vec![0.0; m * BLOCK];
    let mut start = 0;
    while start < n {
        let len = BLOCK.min(n - start);
        for l in 0..m {
            old[l * BLOCK..l * BLOCK + len].copy_from_slice(&basis[l][start..start + len]);
        }
        for i in 0..keep {
            let out = &mut basis[i][start..start + len];
            out.fill(0.0);
            for l in 0..m {
                let c = y[(l, i)];
                if c != 0.0 {
                    axpy(c, &old[l * BLOCK..l * BLOCK + len], out);
                }
            }
        }
        start += len;
    }
}

fn combine(basis: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for (v, &c) in basis.iter().zip(coeffs) {
        axpy(c, v, &mut out);
    }
    let n = norm(&out);
    scale(1.0 / n, &mut out);
    out
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>], coef: &mut [f64]) {
    coef.iter_mut().for_each(|c| *c = 0.0);
    for _pass in 0..2 {
        for (i, v) in basis.iter().enumerate() {
            let h = dot(v, w);
            axpy(-h, v, w);
            coef[i] += h;
        }
    }
}

/// Lowest eigenpair of `op`.
///
/// `start` overrides the seeded random start vector. `projector`, when given,
/// is applied to the start vector and after every operator application; it
/// must commute with `op` (used to stay inside a symmetry sector).
pub fn ground_state_lanczos<O: LinearOperator + ?Sized>(
    op: &O,
    settings: &LanczosSettings,
    start: Option<&[f64]>,
    projector: Option<&dyn Fn(&mut [f64])>,
) -> Result<GroundStateResult, NotConverged> {
    let n = op.dim();
    assert!(n > 0, "empty operator");
    let project = |v: &mut [f64]| {
        if let Some(p) = projector {
            p(v)
        }
    };

    let m = settings.krylov_dim.max(3).min(n);
    let keep = settings.keep.clamp(1, m.saturating_sub(2).max(1));

    let mut v0 = match start {
        Some(s) if s.len() == n => s.to_vec(),
        _ => random_unit_vector(n, settings.seed),
    };
    project(&mut v0);
    let mut nv = norm(&v0);
    if !(nv > 0.0) {
        v0 = random_unit_vector(n, settings.seed);
        project(&mut v0);
        nv = norm(&v0);
    }
    scale(1.0 / nv, &mut v0);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    basis.push(v0);
    let mut t = DMatrix::<f64>::zeros(m, m);
    let mut coef = vec![0.0; m];
    let mut w = vec![0.0; n];
    let mut check = vec![0.0; n];
    let mut matvecs = 0usize;
    let mut j = 0usize;
    let mut check_below = settings.tol;
    let mut best: Option<GroundStateResult> = None;
    let mut extra_seed = settings.seed;

    loop {
        op.apply(&basis[j], &mut w);
        matvecs += 1;
        project(&mut w);
        orthogonalize(&mut w, &basis, &mut coef[..=j]);
        for i in 0..j {
            t[(i, j)] = coef[i];
            t[(j, i)] = coef[i];
        }
        t[(j, j)] = coef[j];
        let beta = norm(&w);

        let size = j + 1;
        let r = ritz(&t, size);
        let (theta, y) = (&r.values, &r.vectors);
        let estimate = libm::hypot(r.in_space, beta * y[(j, 0)]);
        let exhausted = size == n || beta <= 1e-14 * theta.iter().fold(1.0f64, |a, &x| a.max(libm::fabs(x)));

        if estimate <= check_below || exhausted || matvecs >= settings.max_matvecs {
            let coeffs: Vec<f64> = (0..size).map(|r| y[(r, 0)]).collect();
            let psi = combine(&basis, &coeffs);
            op.apply(&psi, &mut check);
            matvecs += 1;
            let energy = dot(&psi, &check);
            axpy(-energy, &psi, &mut check);
            let residual = norm(&check);
            let gap = (size > 1).then(|| theta[1] - theta[0]);
            let result = GroundStateResult {
                energy,
                vector: psi,
                residual,
                iterations: matvecs,
                gap,
                near_degenerate: gap.is_some_and(|g| g < 10.0 * settings.tol),
                shift: None,
            };
            if residual <= settings.tol {
                return Ok(result);
            }
            if best.as_ref().is_none_or(|b| residual < b.residual) {
                best = Some(result);
            }
            if matvecs >= settings.max_matvecs {
                return Err(NotConverged { best: best.expect("at least one iterate") });
            }
            check_below = estimate.min(check_below) * 0.1;
        }

        if beta <= 1e-14 {
            // Invariant subspace: continue with a fresh direction.
            extra_seed = extra_seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
            w = random_unit_vector(n, extra_seed);
            project(&mut w);
            orthogonalize(&mut w, &basis, &mut coef[..=j]);
            let nw = norm(&w);
            if !(nw > 0.0) {
                return Err(NotConverged { best: best.expect("at least one iterate") });
            }
            scale(1.0 / nw, &mut w);
        } else {
            scale(1.0 / beta, &mut w);
        }

        if size < m {
            basis.push(core::mem::replace(&mut w, vec![0.0; n]));
            j += 1;
            continue;
        }

        // Thick restart: lowest `keep` Ritz vectors + the residual direction.
        // The kept block is the exact projection `Y^T T Y` rather than the
        // Ritz values, so eigenvector error cannot leak out of the basis.
        let yk = orthonormal_columns(y, keep);
        let block = yk.transpose() * t.view((0, 0), (m, m)) * &yk;
        rotate_basis(&mut basis, &yk, keep);
        basis.truncate(keep);
        basis.push(core::mem::replace(&mut w, vec![0.0; n]));
        t.fill(0.0);
        for i in 0..keep {
            for k in 0..keep {
                t[(i, k)] = 0.5 * (block[(i, k)] + block[(k, i)]);
            }
            let s = if beta <= 1e-14 { 0.0 } else { beta * yk[(m - 1, i)] };
            t[(i, keep)] = s;
            t[(keep, i)] = s;
        }
        j = keep;
    }
}
