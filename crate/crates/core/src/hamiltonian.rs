//! Model parameters and operator assembly for one tube and for the coupled pair.
//!
//! One tube (four dots, open chain, single flexural mode `a`):
//!
//! ```text
//! H = -t sum_{i,s} (c+_{i,s} c_{i+1,s} + h.c.) + w0 a+a + U sum_i n_{i,up} n_{i,dn}
//!     + sum_i g_i n_i (a+ + a)
//! ```
//!
//! and the pair adds `V sum_i n_i^A n_i^B`. All finite-hopping numerics keep
//! only the fundamental mode; several modes appear only in [`crate::lang_firsov`].
//!
//! Single-tube operators use the index `e * phonon_dim + p`; two-tube operators
//! use [`HilbertSpace`]. Both may be built in a displaced phonon frame
//! `a = b + alpha` (one real `alpha` per tube), which is what the shift solver
//! diagonalizes.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::basis::{ElectronBasis, ElectronConfig, HilbertSpace, PhononBasis, Spin, Statistics};
use crate::sparse::{CsrBuilder, SparseOperator};
use crate::{Error, Result};

/// Quantum dots per tube.
pub const DOTS: usize = 4;

/// Phonon frequency of the rescaled working regime, in units of `U`.
pub const DEFAULT_OMEGA0_OVER_U: f64 = 0.65;

/// Default refusal threshold for operator dimensions.
pub const DEFAULT_MAX_DIMENSION: usize = 4_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Hopping energy.
    pub t: f64,
    /// On-site repulsion.
    pub u: f64,
    /// Inter-tube repulsion between facing dots.
    pub v: f64,
    /// Electron-phonon coupling scale.
    pub g0: f64,
    /// Fundamental phonon energy; mode `mu` has energy `mu * omega0`.
    pub omega0: f64,
    /// Number of flexural modes used by the analytic engine.
    pub modes: usize,
    pub statistics: Statistics,
}

impl ModelParams {
    pub fn new(t: f64, u: f64, v: f64, g0: f64, omega0: f64, modes: usize, statistics: Statistics) -> Result<Self> {
        let p = Self { t, u, v, g0, omega0, modes, statistics };
        p.validate()?;
        Ok(p)
    }

    /// Parameters in units of `U = 1` with `g0 = sqrt(lambda * U * omega0)`.
    pub fn from_ratios(
        lambda: f64,
        t_over_u: f64,
        v_over_u: f64,
        omega0_over_u: f64,
        statistics: Statistics,
    ) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda = {lambda} must be finite and >= 0")));
        }
        let u = 1.0;
        let omega0 = omega0_over_u * u;
        let g0 = libm::sqrt(lambda * u * omega0);
        Self::new(t_over_u * u, u, v_over_u * u, g0, omega0, 1, statistics)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.t, self.u, self.v, self.g0, self.omega0].iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("non-finite energy".into()));
        }
        if !(self.u > 0.0) || !(self.omega0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "U = {} and omega0 = {} must be positive",
                self.u, self.omega0
            )));
        }
        if self.g0 < 0.0 || self.t < 0.0 || self.v < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "t = {}, V = {}, g0 = {} must be non-negative",
                self.t, self.v, self.g0
            )));
        }
        if self.modes == 0 {
            return Err(Error::InvalidParameter("mode count must be >= 1".into()));
        }
        Ok(())
    }

    /// `g0^2 / (U omega0)`.
    #[inline]
    pub fn lambda(&self) -> f64 {
        self.g0 * self.g0 / (self.u * self.omega0)
    }

    /// Every energy multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::InvalidParameter(format!("scale factor {s} must be positive")));
        }
        Self::new(self.t * s, self.u * s, self.v * s, self.g0 * s, self.omega0 * s, self.modes, self.statistics)
    }
}

/// `g_{i,mu} = g0 (8/pi) mu^{-3/2} sin(pi mu (2i-1)/8) sin(pi mu/8)` for dot `i` in `1..=4`.
pub fn coupling_constant(site: usize, mode: usize, g0: f64) -> Result<f64> {
    if !(1..=DOTS).contains(&site) {
        return Err(Error::OutOfRange { what: "dot (1-based)", index: site, bound: DOTS });
    }
    if mode == 0 {
        return Err(Error::OutOfRange { what: "mode (1-based)", index: 0, bound: usize::MAX });
    }
    if mode % 8 == 0 {
        return Ok(0.0);
    }
    let mu = mode as f64;
    let i = site as f64;
    Ok(g0 * (8.0 / PI) * libm::pow(mu, -1.5) * libm::sin(PI * mu * (2.0 * i - 1.0) / 8.0) * libm::sin(PI * mu / 8.0))
}

/// Fundamental-mode couplings of dots 1..=4.
pub fn fundamental_couplings(g0: f64) -> [f64; DOTS] {
    core::array::from_fn(|i| coupling_constant(i + 1, 1, g0).expect("valid dot"))
}

/// `sum_i g_{i,1} n_i`: the force a configuration exerts on the fundamental mode.
pub fn mode_force(config: &ElectronConfig, g0: f64) -> f64 {
    let g = fundamental_couplings(g0);
    (0..DOTS).map(|s| g[s] * f64::from(config.charge(s))).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuildOptions {
    pub max_dimension: usize,
    /// Phonon frame displacement per tube (`a = b + alpha`).
    pub shift: [f64; 2],
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { max_dimension: DEFAULT_MAX_DIMENSION, shift: [0.0; 2] }
    }
}

/// Per-configuration data of one tube, computed once per build.
#[derive(Clone, Debug)]
pub(crate) struct TubeTerms {
    pub onsite: Vec<f64>,
    pub force: Vec<f64>,
    pub charges: Vec<[u8; DOTS]>,
    /// `(target, <target|H_hop|source>)` per source configuration.
    pub hops: Vec<Vec<(usize, f64)>>,
}

impl TubeTerms {
    pub fn new(params: &ModelParams, basis: &ElectronBasis) -> Result<Self> {
        if basis.sites() != DOTS {
            return Err(Error::InvalidParameter(format!(
                "the coupling profile is defined for {DOTS} dots, basis has {}",
                basis.sites()
            )));
        }
        if basis.statistics() != params.statistics {
            return Err(Error::InvalidParameter(format!(
                "basis statistics {:?} differ from parameters {:?}",
                basis.statistics(),
                params.statistics
            )));
        }
        let spins: &[Option<Spin>] = match basis.statistics() {
            Statistics::Spinful => &[Some(Spin::Up), Some(Spin::Down)],
            Statistics::Charge => &[None],
        };
        let mut terms = Self {
            onsite: Vec::with_capacity(basis.len()),
            force: Vec::with_capacity(basis.len()),
            charges: Vec::with_capacity(basis.len()),
            hops: Vec::with_capacity(basis.len()),
        };
        for config in basis.configs() {
            terms.onsite.push(params.u * config.double_occupancy() as f64);
            terms.force.push(mode_force(config, params.g0));
            terms.charges.push(core::array::from_fn(|s| config.charge(s)));
            let mut hops = Vec::new();
            if params.t != 0.0 {
                for i in 0..DOTS - 1 {
                    for (from, to) in [(i, i + 1), (i + 1, i)] {
                        for &spin in spins {
                            if let Some((target, amp)) = config.hop(from, to, spin)? {
                                let j = basis
                                    .index_of(&target)
                                    .ok_or_else(|| Error::InvalidSector("hop left the sector".into()))?;
                                hops.push((j, -params.t * amp));
                            }
                        }
                    }
                }
            }
            terms.hops.push(hops);
        }
        Ok(terms)
    }
}

fn check_dimension(dim: usize, cap: usize) -> Result<()> {
    if dim > cap {
        return Err(Error::DimensionTooLarge {
            dim,
            cap,
            hint: "lower the phonon cutoff (or enable the shift solver with a small cutoff)",
        });
    }
    Ok(())
}

/// One tube, single mode, index `e * phonons.dim() + p`. Uses `options.shift[0]`.
pub fn build_single_tube(
    params: &ModelParams,
    electrons: &ElectronBasis,
    phonons: &PhononBasis,
    options: &BuildOptions,
) -> Result<SparseOperator> {
    params.validate()?;
    let np = phonons.dim();
    let dim = electrons.len().checked_mul(np).ok_or(Error::InvalidParameter("dimension overflow".into()))?;
    check_dimension(dim, options.max_dimension)?;
    let terms = TubeTerms::new(params, electrons)?;
    let alpha = options.shift[0];
    let w = params.omega0;
    let sqrt_n: Vec<f64> = (0..=np).map(|n| libm::sqrt(n as f64)).collect();

    let mut builder = CsrBuilder::new(dim, dim * 6)?;
    for e in 0..electrons.len() {
        let force = terms.force[e] + w * alpha;
        let diag_e = terms.onsite[e] + w * alpha * alpha + 2.0 * alpha * terms.force[e];
        for p in 0..np {
            let row = e * np + p;
            builder.push(row, diag_e + w * p as f64);
            if p > 0 {
                builder.push(row - 1, force * sqrt_n[p]);
            }
            if p + 1 < np {
                builder.push(row + 1, force * sqrt_n[p + 1]);
            }
            for &(target, amp) in &terms.hops[e] {
                builder.push(target * np + p, amp);
            }
            builder.finish_row();
        }
    }
    builder.build()
}

/// Both tubes plus `V sum_i n_i^A n_i^B` over [`HilbertSpace`] ordering.
pub fn build_two_tube(
    params: &ModelParams,
    electrons_a: &ElectronBasis,
    electrons_b: &ElectronBasis,
    phonons_a: &PhononBasis,
    phonons_b: &PhononBasis,
    options: &BuildOptions,
) -> Result<SparseOperator> {
    params.validate()?;
    let space = HilbertSpace::from_bases(electrons_a, electrons_b, *phonons_a, *phonons_b)?;
    check_dimension(space.dim(), options.max_dimension)?;
    let ta = TubeTerms::new(params, electrons_a)?;
    let tb = TubeTerms::new(params, electrons_b)?;
    let (na, nb) = (phonons_a.dim(), phonons_b.dim());
    let w = params.omega0;
    let [alpha_a, alpha_b] = options.shift;
    let sqrt_n: Vec<f64> = (0..=na.max(nb)).map(|n| libm::sqrt(n as f64)).collect();

    let overlap: Vec<f64> = ta
        .charges
        .iter()
        .flat_map(|ca| {
            tb.charges.iter().map(move |cb| (0..DOTS).map(|s| f64::from(ca[s]) * f64::from(cb[s])).sum::<f64>())
        })
        .collect();

    let avg_hops = |t: &TubeTerms| t.hops.iter().map(Vec::len).sum::<usize>() / t.hops.len().max(1);
    let nnz_hint = space.dim() * (5 + avg_hops(&ta) + avg_hops(&tb));
    let mut builder = CsrBuilder::new(space.dim(), nnz_hint)?;

    for ea in 0..electrons_a.len() {
        let force_a = ta.force[ea] + w * alpha_a;
        let shift_a = w * alpha_a * alpha_a + 2.0 * alpha_a * ta.force[ea];
        for eb in 0..electrons_b.len() {
            let force_b = tb.force[eb] + w * alpha_b;
            let shift_b = w * alpha_b * alpha_b + 2.0 * alpha_b * tb.force[eb];
            let diag_e =
                ta.onsite[ea] + tb.onsite[eb] + params.v * overlap[ea * electrons_b.len() + eb] + shift_a + shift_b;
            for pa in 0..na {
                for pb in 0..nb {
                    let row = space.index_unchecked(ea, eb, pa, pb);
                    builder.push(row, diag_e + w * (pa + pb) as f64);
                    if pa > 0 {
                        builder.push(row - nb, force_a * sqrt_n[pa]);
                    }
                    if pa + 1 < na {
                        builder.push(row + nb, force_a * sqrt_n[pa + 1]);
                    }
                    if pb > 0 {
                        builder.push(row - 1, force_b * sqrt_n[pb]);
                    }
                    if pb + 1 < nb {
                        builder.push(row + 1, force_b * sqrt_n[pb + 1]);
                    }
                    for &(target, amp) in &ta.hops[ea] {
                        builder.push(space.index_unchecked(target, eb, pa, pb), amp);
                    }
                    for &(target, amp) in &tb.hops[eb] {
                        builder.push(space.index_unchecked(ea, target, pa, pb), amp);
                    }
                    builder.finish_row();
                }
            }
        }
    }
    builder.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{enumerate_sector, Sector};

    #[test]
    fn coupling_values() {
        // closed forms: g_1 = (8/pi) sin^2(pi/8), g_2 = 2 sqrt(2) / pi
        let g1 = coupling_constant(1, 1, 1.0).unwrap();
        let g2 = coupling_constant(2, 1, 1.0).unwrap();
        assert!((g1 - 0.372_923_228_578_056_6).abs() < 1e-14);
        assert!((g2 - 0.900_316_316_157_106_1).abs() < 1e-14);
        assert!((g1 + g2 - 4.0 / PI).abs() < 1e-14);
        for i in 1..=4 {
            assert_eq!(coupling_constant(i, 8, 1.0).unwrap(), 0.0);
            assert_eq!(coupling_constant(i, 16, 3.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn coupling_mirror_symmetry() {
        for mu in 1..40 {
            let g: Vec<f64> = (1..=4).map(|i| coupling_constant(i, mu, 1.0).unwrap()).collect();
            assert!((g[0].abs() - g[3].abs()).abs() < 1e-14, "mu={mu}");
            assert!((g[1].abs() - g[2].abs()).abs() < 1e-14, "mu={mu}");
        }
    }

    #[test]
    fn coupling_range_checks() {
        assert!(coupling_constant(0, 1, 1.0).is_err());
        assert!(coupling_constant(5, 1, 1.0).is_err());
        assert!(coupling_constant(1, 0, 1.0).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(ModelParams::new(0.0, 0.0, 0.0, 0.0, 1.0, 1, Statistics::Charge).is_err());
        assert!(ModelParams::new(0.0, 1.0, -0.1, 0.0, 1.0, 1, Statistics::Charge).is_err());
        assert!(ModelParams::new(0.0, 1.0, 0.0, 0.0, 0.0, 1, Statistics::Charge).is_err());
        let p = ModelParams::from_ratios(0.5, 1e-3, 0.02, 0.65, Statistics::Charge).unwrap();
        assert!((p.lambda() - 0.5).abs() < 1e-15);
        assert!((p.g0 - 0.570_087_712_549_569).abs() < 1e-12);
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let p = ModelParams::from_ratios(0.3, 0.01, 0.02, 0.65, Statistics::Charge).unwrap();
        let eb = enumerate_sector(4, Sector::Charge { total: 4 }).unwrap();
        let pb = PhononBasis::new(50).unwrap();
        let opts = BuildOptions { max_dimension: 100_000, ..Default::default() };
        let err = build_two_tube(&p, &eb, &eb, &pb, &pb, &opts).unwrap_err();
        assert!(matches!(err, Error::DimensionTooLarge { dim: 902_500, .. }));
    }

    #[test]
    fn wrong_site_count_is_rejected() {
        let p = ModelParams::from_ratios(0.3, 0.01, 0.02, 0.65, Statistics::Charge).unwrap();
        let eb = enumerate_sector(3, Sector::Charge { total: 3 }).unwrap();
        let pb = PhononBasis::new(4).unwrap();
        assert!(build_single_tube(&p, &eb, &pb, &BuildOptions::default()).is_err());
    }

    #[test]
    fn single_tube_is_symmetric_with_expected_diagonal() {
        for stats in [Statistics::Charge, Statistics::Spinful] {
            let p = ModelParams::from_ratios(0.4, 0.05, 0.0, 0.65, stats).unwrap();
            let eb = enumerate_sector(4, Sector::half_filling(stats, 4)).unwrap();
            let pb = PhononBasis::new(6).unwrap();
            let h = build_single_tube(&p, &eb, &pb, &BuildOptions::default()).unwrap();
            assert_eq!(h.dim(), eb.len() * 6);
            assert_eq!(h.asymmetry(), 0.0);
            for e in 0..eb.len() {
                for ph in 0..6 {
                    let expect = p.u * eb.config(e).double_occupancy() as f64 + p.omega0 * ph as f64;
                    assert!((h.get(e * 6 + ph, e * 6 + ph) - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn v_term_on_mott_paired_pair() {
        let p = ModelParams::new(0.0, 1.0, 0.03, 0.0, 0.65, 1, Statistics::Charge).unwrap();
        let eb = enumerate_sector(4, Sector::Charge { total: 4 }).unwrap();
        let pb = PhononBasis::new(2).unwrap();
        let h = build_two_tube(&p, &eb, &eb, &pb, &pb, &BuildOptions::default()).unwrap();
        let space = HilbertSpace::from_bases(&eb, &eb, pb, pb).unwrap();
        let m = eb.index_of(&ElectronConfig::from_charges(&[1, 1, 1, 1]).unwrap()).unwrap();
        let pp = eb.index_of(&ElectronConfig::from_charges(&[0, 2, 2, 0]).unwrap()).unwrap();
        let row = space.index(m, pp, 0, 0).unwrap();
        // U * 2 (two doubles on B) + V * (1*0 + 1*2 + 1*2 + 1*0)
        assert!((h.get(row, row) - (2.0 + 4.0 * 0.03)).abs() < 1e-14);
    }
}
