//! One grid point end to end: build, solve, measure.

use alloc::vec;
use alloc::vec::Vec;

use crate::basis::{enumerate_sector, ElectronBasis, HilbertSpace, PhononBasis, Sector, Statistics};
use crate::eigen::{
    ground_state_lanczos, iterative_shift_solve, random_unit_vector, GroundStateResult, LanczosSettings, ShiftSettings,
    ShiftState,
};
use crate::hamiltonian::{
    build_two_tube, mode_force, BuildOptions, ModelParams, DEFAULT_MAX_DIMENSION, DEFAULT_OMEGA0_OVER_U, DOTS,
};
use crate::lang_firsov::atomic_ground_manifold;
use crate::math::{norm, scale};
use crate::observables::{measure_point, phonon_moments, MeasureSettings, ObservableRecord};
use crate::sparse::SparseOperator;
use crate::Result;

/// Two identical tubes at half filling with one phonon mode each.
#[derive(Clone, Debug)]
pub struct TwoTubeSystem {
    params: ModelParams,
    electrons: ElectronBasis,
    phonons: PhononBasis,
    space: HilbertSpace,
}

impl TwoTubeSystem {
    /// `phonon_states` kets per tube.
    pub fn new(params: ModelParams, phonon_states: usize) -> Result<Self> {
        params.validate()?;
        let electrons = enumerate_sector(DOTS, Sector::half_filling(params.statistics, DOTS))?;
        let phonons = PhononBasis::new(phonon_states)?;
        let space = HilbertSpace::from_bases(&electrons, &electrons, phonons, phonons)?;
        Ok(Self { params, electrons, phonons, space })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn electrons(&self) -> &ElectronBasis {
        &self.electrons
    }

    pub fn phonons(&self) -> &PhononBasis {
        &self.phonons
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn hamiltonian(&self, shift: [f64; 2], max_dimension: usize) -> Result<SparseOperator> {
        let opts = BuildOptions { max_dimension, shift };
        build_two_tube(&self.params, &self.electrons, &self.electrons, &self.phonons, &self.phonons, &opts)
    }

    /// Coherent displacement `-sum_i g_i n_i / omega0` of every electronic configuration.
    pub fn displacements(&self) -> Vec<f64> {
        self.electrons.configs().iter().map(|c| -mode_force(c, self.params.g0) / self.params.omega0).collect()
    }

    /// Replaces `v` by `(v + S v) / 2`, `S` exchanging the tubes.
    pub fn symmetrize(&self, v: &mut [f64]) {
        let [ne, _, np, _] = self.space.factor_dims();
        for ea in 0..ne {
            for eb in ea..ne {
                for pa in 0..np {
                    let pb_start = if ea == eb { pa } else { 0 };
                    for pb in pb_start..np {
                        let i = self.space.index_unchecked(ea, eb, pa, pb);
                        let j = self.space.index_unchecked(eb, ea, pb, pa);
                        let m = 0.5 * (v[i] + v[j]);
                        v[i] = m;
                        v[j] = m;
                    }
                }
            }
        }
    }

    /// Frame displacements of the `t = 0` ground manifold, averaged over its members.
    pub fn atomic_shift(&self) -> Result<[f64; 2]> {
        let manifold = atomic_ground_manifold(&self.params, 1)?;
        let (g0, w) = (self.params.g0, self.params.omega0);
        let x = |c: &crate::lang_firsov::ChargeVector| {
            let f: f64 = crate::hamiltonian::fundamental_couplings(g0)
                .iter()
                .zip(c.charges())
                .map(|(g, n)| g * f64::from(n))
                .sum();
            -f / w
        };
        let k = manifold.members.len() as f64;
        let a = manifold.members.iter().map(|(a, _)| x(a)).sum::<f64>() / k;
        let b = manifold.members.iter().map(|(_, b)| x(b)).sum::<f64>() / k;
        Ok([a, b])
    }

    /// Equal-weight mix of the `t = 0` ground manifold (with coherent phonons
    /// in the frame `shift`) and a seeded random unit vector.
    pub fn atomic_start(&self, shift: [f64; 2], seed: u64) -> Result<Vec<f64>> {
        let manifold = atomic_ground_manifold(&self.params, 1)?;
        let np = self.phonons.dim();
        let x = self.displacements();
        let mut atomic = vec![0.0; self.space.dim()];
        for (ca, cb) in &manifold.members {
            for ea in self.electrons.indices_with_charges(&ca.charges()) {
                for eb in self.electrons.indices_with_charges(&cb.charges()) {
                    let pa = coherent_amplitudes(np, x[ea] - shift[0]);
                    let pb = coherent_amplitudes(np, x[eb] - shift[1]);
                    for (i, &u) in pa.iter().enumerate() {
                        for (j, &v) in pb.iter().enumerate() {
                            atomic[self.space.index_unchecked(ea, eb, i, j)] += u * v;
                        }
                    }
                }
            }
        }
        let n = norm(&atomic);
        let random = random_unit_vector(self.space.dim(), seed);
        if n > 0.0 {
            scale(1.0 / n, &mut atomic);
            for (a, r) in atomic.iter_mut().zip(&random) {
                *a += r;
            }
            Ok(atomic)
        } else {
            Ok(random)
        }
    }
}

/// Truncated coherent state `exp(-b^2/2) b^n / sqrt(n!)`.
fn coherent_amplitudes(states: usize, beta: f64) -> Vec<f64> {
    let mut c = Vec::with_capacity(states);
    let mut v = libm::exp(-0.5 * beta * beta);
    for n in 0..states {
        if n > 0 {
            v *= beta / libm::sqrt(n as f64);
        }
        c.push(v);
    }
    c
}

/// Physical inputs of one point, all energies in units of `U`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointSpec {
    pub lambda: f64,
    pub t_over_u: f64,
    pub v_over_u: f64,
    pub omega0_over_u: f64,
    /// Phonon states per tube.
    pub n_ph: usize,
    pub statistics: Statistics,
    /// Use the iterative shift solver.
    pub shift: bool,
    pub seed: u64,
}

impl Default for PointSpec {
    fn default() -> Self {
        Self {
            lambda: 0.315,
            t_over_u: 1e-3,
            v_over_u: 0.02,
            omega0_over_u: DEFAULT_OMEGA0_OVER_U,
            n_ph: 50,
            statistics: Statistics::Charge,
            shift: false,
            seed: 1,
        }
    }
}

impl PointSpec {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::from_ratios(self.lambda, self.t_over_u, self.v_over_u, self.omega0_over_u, self.statistics)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointSettings {
    pub lanczos: LanczosSettings,
    pub shift: ShiftSettings,
    pub measure: MeasureSettings,
    pub max_dimension: usize,
    /// Restrict charge-only solves to the tube-exchange-symmetric sector.
    pub exchange_symmetric: bool,
    /// Gap below which a record is flagged near-degenerate.
    pub degeneracy_gap: f64,
}

impl Default for PointSettings {
    fn default() -> Self {
        Self {
            lanczos: LanczosSettings::default(),
            shift: ShiftSettings::default(),
            measure: MeasureSettings::default(),
            max_dimension: DEFAULT_MAX_DIMENSION,
            exchange_symmetric: true,
            degeneracy_gap: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PointSolution {
    pub record: ObservableRecord,
    pub ground: GroundStateResult,
    pub shift: Option<ShiftState>,
}

/// Ground state of `system`, optionally through the shift solver.
///
/// In charge-only mode the Hamiltonian is stoquastic after the phonon gauge
/// `(-1)^(pa + pb)`, so its ground state is unique within a connected block
/// and even under tube exchange; solving in that sector removes the
/// near-degenerate odd partner that otherwise mixes in at the Bell point.
pub fn solve_ground_state(
    system: &TwoTubeSystem,
    spec: &PointSpec,
    settings: &PointSettings,
    start: Option<&[f64]>,
) -> Result<(GroundStateResult, Option<ShiftState>)> {
    let symmetric = settings.exchange_symmetric && system.params().statistics == Statistics::Charge;
    let project = |v: &mut [f64]| system.symmetrize(v);
    let projector: Option<&dyn Fn(&mut [f64])> = if symmetric { Some(&project) } else { None };
    let lanczos = LanczosSettings { seed: spec.seed, ..settings.lanczos };

    let finish = |mut r: GroundStateResult| {
        r.near_degenerate |= r.gap.is_some_and(|g| g < settings.degeneracy_gap);
        r
    };

    if !spec.shift {
        let h = system.hamiltonian([0.0; 2], settings.max_dimension)?;
        let owned;
        let start = match start {
            Some(s) if s.len() == h.dim() => s,
            _ => {
                owned = system.atomic_start([0.0; 2], spec.seed)?;
                &owned
            }
        };
        let r = ground_state_lanczos(&h, &lanczos, Some(start), projector)?;
        return Ok((finish(r), None));
    }

    let mut alpha0 = match settings.shift.start {
        Some(a) => a,
        None => system.atomic_shift()?,
    };
    if symmetric {
        let m = 0.5 * (alpha0[0] + alpha0[1]);
        alpha0 = [m, m];
    }
    let outcome = iterative_shift_solve(alpha0, &settings.shift, |alpha, previous| {
        let h = system.hamiltonian(*alpha, settings.max_dimension)?;
        let owned;
        let start = match previous.or(start) {
            Some(s) if s.len() == h.dim() => s,
            _ => {
                owned = system.atomic_start(*alpha, spec.seed)?;
                &owned
            }
        };
        let r = ground_state_lanczos(&h, &lanczos, Some(start), projector)?;
        let m = phonon_moments(&r.vector, system.space())?;
        let mut mean = [m[0].mean, m[1].mean];
        if symmetric {
            let avg = 0.5 * (mean[0] + mean[1]);
            mean = [avg, avg];
        }
        Ok((r, mean))
    })?;
    Ok((finish(outcome.result), Some(outcome.state)))
}

/// Solves and measures one point.
pub fn solve_point(spec: &PointSpec, settings: &PointSettings, start: Option<&[f64]>) -> Result<PointSolution> {
    let system = TwoTubeSystem::new(spec.params()?, spec.n_ph)?;
    let (ground, shift) = solve_ground_state(&system, spec, settings, start)?;
    let mut record = measure_point(&ground, &system, spec.seed, &settings.measure)?;
    record.lambda = spec.lambda;
    record.t_over_u = spec.t_over_u;
    record.v_over_u = spec.v_over_u;
    Ok(PointSolution { record, ground, shift })
}
