//! Small self-checks run by `cntsim validate`: Krylov against dense, the
//! V = 0 factorization and the atomic limit.

use std::f64::consts::PI;

use cntsim_core::basis::{enumerate_sector, PhononBasis, Sector, Statistics};
use cntsim_core::eigen::{ground_state_dense, ground_state_lanczos, LanczosSettings, DEFAULT_DENSE_CAP};
use cntsim_core::hamiltonian::{build_single_tube, mode_force, BuildOptions, ModelParams, DEFAULT_OMEGA0_OVER_U, DOTS};
use cntsim_core::lang_firsov::{atomic_ground_manifold, critical_lambdas};
use cntsim_core::observables::{subsystem_entropy, FactorMask, DEFAULT_RDM_CAP};
use cntsim_core::point::{solve_ground_state, PointSettings, PointSpec, TwoTubeSystem};

use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// Single-tube ground energy from Lanczos and from full diagonalization.
pub fn single_tube_energies(lambda: f64, t_over_u: f64, n_ph: usize) -> Result<(f64, f64)> {
    let p = ModelParams::from_ratios(lambda, t_over_u, 0.0, DEFAULT_OMEGA0_OVER_U, Statistics::Charge)?;
    let e = enumerate_sector(DOTS, Sector::half_filling(Statistics::Charge, DOTS))?;
    let h = build_single_tube(&p, &e, &PhononBasis::new(n_ph)?, &BuildOptions::default())?;
    let krylov = ground_state_lanczos(&h, &LanczosSettings::default(), None, None).map_err(cntsim_core::Error::from)?;
    let dense = ground_state_dense(&h, DEFAULT_DENSE_CAP)?;
    Ok((krylov.energy, dense.ground_energy()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Factorization {
    pub two_tube: f64,
    pub single_tube: f64,
    /// Entanglement entropy between the tubes.
    pub entropy_ab: f64,
}

/// Two tubes at `V = 0` against one tube, same phonon truncation.
pub fn factorization(lambda: f64, t_over_u: f64, n_ph: usize) -> Result<Factorization> {
    let spec = PointSpec { lambda, t_over_u, v_over_u: 0.0, n_ph, ..Default::default() };
    let system = TwoTubeSystem::new(spec.params()?, n_ph)?;
    let (ground, _) = solve_ground_state(&system, &spec, &PointSettings::default(), None)?;
    let entropy_ab = subsystem_entropy(&ground.vector, FactorMask::TUBE_A, system.space(), DEFAULT_RDM_CAP)?;
    let (single, _) = single_tube_energies(lambda, t_over_u, n_ph)?;
    Ok(Factorization { two_tube: ground.energy, single_tube: single, entropy_ab })
}

/// Lowest `U d - F^2 / omega0` over single-tube charge configurations.
fn single_tube_atomic(p: &ModelParams) -> Result<f64> {
    let e = enumerate_sector(DOTS, Sector::half_filling(Statistics::Charge, DOTS))?;
    Ok(e.configs()
        .iter()
        .map(|c| {
            let f = mode_force(c, p.g0);
            p.u * c.double_occupancy() as f64 - f * f / p.omega0
        })
        .fold(f64::INFINITY, f64::min))
}

pub fn run_all() -> Vec<Check> {
    let mut checks = Vec::new();
    let mut push = |name: &str, r: Result<(bool, String)>| {
        checks.push(match r {
            Ok((ok, detail)) => Check::new(name, ok, detail),
            Err(e) => Check::new(name, false, format!("error: {e}")),
        })
    };

    push(
        "single-mode critical coupling",
        (|| {
            let c = critical_lambdas(0.0, 1)?;
            let want = PI * PI / 32.0;
            Ok(((c.lambda_c1 - want).abs() < 1e-9, format!("lambda_c1 = {:.9}, expected {want:.9}", c.lambda_c1)))
        })(),
    );

    for &(lambda, t) in &[(0.1, 0.01), (0.31, 0.01), (0.6, 0.01), (0.2, 0.1), (0.5, 0.1)] {
        push(
            &format!("dense vs Krylov (lambda={lambda}, t/U={t})"),
            (|| {
                let (k, d) = single_tube_energies(lambda, t, 8)?;
                Ok(((k - d).abs() < 1e-8, format!("krylov {k:.12}, dense {d:.12}")))
            })(),
        );
    }

    for &(lambda, t) in &[(0.15, 0.05), (0.45, 0.02)] {
        push(
            &format!("V = 0 factorization (lambda={lambda}, t/U={t})"),
            (|| {
                let f = factorization(lambda, t, 5)?;
                let rel = (f.two_tube - 2.0 * f.single_tube).abs() / f.two_tube.abs().max(1.0);
                Ok((
                    rel < 1e-8 && f.entropy_ab < 1e-6,
                    format!(
                        "E = {:.12}, 2 E_1 = {:.12}, S(A:B) = {:.2e}",
                        f.two_tube,
                        2.0 * f.single_tube,
                        f.entropy_ab
                    ),
                ))
            })(),
        );
    }

    push(
        "atomic limit, one tube",
        (|| {
            let p = ModelParams::from_ratios(0.2, 0.0, 0.0, DEFAULT_OMEGA0_OVER_U, Statistics::Charge)?;
            let e = enumerate_sector(DOTS, Sector::half_filling(Statistics::Charge, DOTS))?;
            let h = build_single_tube(&p, &e, &PhononBasis::new(40)?, &BuildOptions::default())?;
            let exact = ground_state_dense(&h, DEFAULT_DENSE_CAP)?.ground_energy();
            let want = single_tube_atomic(&p)?;
            Ok(((exact - want).abs() < 1e-9, format!("diagonalized {exact:.12}, closed form {want:.12}")))
        })(),
    );

    push(
        "atomic limit, two tubes",
        (|| {
            let spec = PointSpec { lambda: 0.2, t_over_u: 0.0, v_over_u: 0.02, n_ph: 20, ..Default::default() };
            let system = TwoTubeSystem::new(spec.params()?, spec.n_ph)?;
            let (g, _) = solve_ground_state(&system, &spec, &PointSettings::default(), None)?;
            let want = atomic_ground_manifold(system.params(), 1)?.energy;
            Ok(((g.energy - want).abs() < 1e-8, format!("Lanczos {:.12}, manifold {want:.12}", g.energy)))
        })(),
    );

    checks
}
