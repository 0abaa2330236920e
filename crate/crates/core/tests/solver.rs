use cntsim_core::basis::Statistics;
use cntsim_core::eigen::{ground_state_dense, ground_state_lanczos, LanczosSettings};
use cntsim_core::hamiltonian::ModelParams;
use cntsim_core::point::{solve_ground_state, PointSettings, PointSpec, TwoTubeSystem};
use cntsim_core::sparse::symmetric_from_entries;
use proptest::prelude::*;

fn random_symmetric() -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
    (2usize..90).prop_flat_map(|n| {
        let entry = (0..n, 0..n, -1.0f64..1.0).prop_map(|(r, c, v)| (r.min(c), r.max(c), v));
        (Just(n), prop::collection::vec(entry, n..4 * n))
    })
}

fn dedup(mut e: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    e.sort_by_key(|&(r, c, _)| (r, c));
    e.dedup_by_key(|&mut (r, c, _)| (r, c));
    e
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lanczos_agrees_with_dense((n, entries) in random_symmetric(), krylov in 4usize..40, seed in any::<u64>()) {
        let op = symmetric_from_entries(n, &dedup(entries)).unwrap();
        let settings = LanczosSettings { krylov_dim: krylov, keep: krylov / 3, seed, ..Default::default() };
        let k = ground_state_lanczos(&op, &settings, None, None).unwrap();
        let d = ground_state_dense(&op, 1000).unwrap().ground_energy();
        prop_assert!((k.energy - d).abs() < 1e-8, "lanczos {} dense {}", k.energy, d);
        prop_assert!(k.residual <= settings.tol * 1.01);
        let norm: f64 = k.vector.iter().map(|x| x * x).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }
}

// Strong coupling, small hopping, exchange-symmetric sector: once stalled near 1e-7.
#[test]
fn projected_strong_coupling_converges_quickly() {
    let spec = PointSpec { lambda: 0.6, t_over_u: 0.01, v_over_u: 0.02, n_ph: 6, ..Default::default() };
    let system = TwoTubeSystem::new(spec.params().unwrap(), spec.n_ph).unwrap();
    let (g, _) = solve_ground_state(&system, &spec, &PointSettings::default(), None).unwrap();
    assert!(g.residual < 1e-10, "residual {:e}", g.residual);
    assert!(g.iterations < 1000, "{} matvecs", g.iterations);
}

#[test]
fn symmetric_sector_reaches_the_unrestricted_ground_energy() {
    for &(lambda, t) in &[(0.1, 0.05), (0.45, 0.02)] {
        let spec = PointSpec { lambda, t_over_u: t, v_over_u: 0.02, n_ph: 4, ..Default::default() };
        let system = TwoTubeSystem::new(spec.params().unwrap(), spec.n_ph).unwrap();
        let open = PointSettings { exchange_symmetric: false, ..Default::default() };
        let (a, _) = solve_ground_state(&system, &spec, &PointSettings::default(), None).unwrap();
        let (b, _) = solve_ground_state(&system, &spec, &open, None).unwrap();
        assert!((a.energy - b.energy).abs() < 1e-9, "{} vs {}", a.energy, b.energy);
    }
}

#[test]
fn shift_solver_matches_large_cutoff() {
    let base = PointSpec { lambda: 0.4, t_over_u: 0.03, v_over_u: 0.02, ..Default::default() };
    let system = |n| TwoTubeSystem::new(base.params().unwrap(), n).unwrap();
    let shifted = PointSpec { n_ph: 10, shift: true, ..base };
    let plain = PointSpec { n_ph: 40, ..base };
    let (a, state) = solve_ground_state(&system(10), &shifted, &PointSettings::default(), None).unwrap();
    let (b, _) = solve_ground_state(&system(40), &plain, &PointSettings::default(), None).unwrap();
    assert!(state.is_some());
    assert!((a.energy - b.energy).abs() < 1e-8, "{} vs {}", a.energy, b.energy);
}

#[test]
fn spinful_and_charge_agree_without_hopping() {
    // at t = 0 only site charges matter; cutoff 20 leaves ~1e-12 truncation at this coupling
    for stats in [Statistics::Spinful, Statistics::Charge] {
        let p = ModelParams::from_ratios(0.2, 0.0, 0.02, 0.65, stats).unwrap();
        let spec = PointSpec { lambda: 0.2, t_over_u: 0.0, n_ph: 20, statistics: stats, ..Default::default() };
        let (g, _) =
            solve_ground_state(&TwoTubeSystem::new(p, 20).unwrap(), &spec, &PointSettings::default(), None).unwrap();
        let want = cntsim_core::lang_firsov::atomic_ground_manifold(&p, 1).unwrap().energy;
        assert!((g.energy - want).abs() < 1e-9, "{stats:?}: {} vs {want}", g.energy);
    }
}
