//! Atomic limit (`t = 0`) of the polaron-transformed model.
//!
//! Removing the linear electron-phonon coupling with the displacement
//! generator `S = sum_{i,mu} g_{i,mu} n_i (a+_mu - a_mu) / omega_mu` leaves the
//! density-density attraction `-sum_{ij} U~_{ij} n_i n_j` with
//! `U~_{ij} = sum_mu g_{i,mu} g_{j,mu} / omega_mu` and `omega_mu = mu omega0`.
//! At `t = 0` the electronic charges are good quantum numbers and every state is
//! a charge configuration times phonon coherent states, so ground manifolds and
//! phase boundaries follow from comparing a finite set of energies.
//!
//! Each tube's charges are given as a [`ChargeVector`] (site charges summing to
//! four, each at most two).

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::hamiltonian::{coupling_constant, fundamental_couplings, ModelParams, DOTS};
use crate::{Error, Result};

/// Default cutoff standing in for the infinite-mode sum.
pub const DEFAULT_MODE_CUTOFF: usize = 256;

/// Relative tolerance for treating two atomic energies as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChargeVector([u8; DOTS]);

impl ChargeVector {
    /// `|1,1,1,1>`
    pub const MOTT: ChargeVector = ChargeVector([1, 1, 1, 1]);
    /// `|0,2,2,0>`
    pub const PAIRED: ChargeVector = ChargeVector([0, 2, 2, 0]);
    /// `|1,2,1,0>`
    pub const INTERMEDIATE_LEFT: ChargeVector = ChargeVector([1, 2, 1, 0]);
    /// `|0,1,2,1>`
    pub const INTERMEDIATE_RIGHT: ChargeVector = ChargeVector([0, 1, 2, 1]);

    pub fn new(charges: [u8; DOTS]) -> Result<Self> {
        if charges.iter().any(|&q| q > 2) {
            return Err(Error::InvalidOccupation(format!("{charges:?} has a site charge above 2")));
        }
        let total: u32 = charges.iter().map(|&q| u32::from(q)).sum();
        if total != DOTS as u32 {
            return Err(Error::InvalidOccupation(format!("{charges:?} holds {total} electrons, expected {DOTS}")));
        }
        Ok(Self(charges))
    }

    pub fn from_slice(charges: &[u8]) -> Result<Self> {
        let arr: [u8; DOTS] = charges
            .try_into()
            .map_err(|_| Error::InvalidOccupation(format!("expected {DOTS} site charges, got {}", charges.len())))?;
        Self::new(arr)
    }

    #[inline]
    pub fn charges(&self) -> [u8; DOTS] {
        self.0
    }

    pub fn double_occupancy(&self) -> usize {
        self.0.iter().filter(|&&q| q == 2).count()
    }

    /// Short label for the named configurations.
    pub fn label(&self) -> Option<&'static str> {
        match *self {
            Self::MOTT => Some("M"),
            Self::PAIRED => Some("P"),
            Self::INTERMEDIATE_LEFT => Some("Il"),
            Self::INTERMEDIATE_RIGHT => Some("Ir"),
            _ => None,
        }
    }

    fn as_f64(&self) -> [f64; DOTS] {
        self.0.map(f64::from)
    }
}

impl fmt::Display for ChargeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        match self.label() {
            Some(l) => write!(f, "|{a},{b},{c},{d}>({l})"),
            None => write!(f, "|{a},{b},{c},{d}>"),
        }
    }
}

/// All 19 half-filled charge vectors in lexicographic order.
pub fn all_charge_vectors() -> Vec<ChargeVector> {
    let mut out = Vec::with_capacity(19);
    for a in 0..=2u8 {
        for b in 0..=2u8 {
            for c in 0..=2u8 {
                for d in 0..=2u8 {
                    if let Ok(v) = ChargeVector::new([a, b, c, d]) {
                        out.push(v);
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveAttraction {
    matrix: [[f64; DOTS]; DOTS],
    modes: usize,
}

impl EffectiveAttraction {
    /// Entry `U~_{ij}` with zero-based dots.
    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i][j]
    }

    pub fn matrix(&self) -> &[[f64; DOTS]; DOTS] {
        &self.matrix
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// `sum_{ij} U~_{ij} n_i n_j`.
    pub fn quadratic_form(&self, charges: &ChargeVector) -> f64 {
        let n = charges.as_f64();
        let mut acc = 0.0;
        for i in 0..DOTS {
            for j in 0..DOTS {
                acc += self.matrix[i][j] * n[i] * n[j];
            }
        }
        acc
    }
}

pub fn effective_attraction(g0: f64, omega0: f64, modes: usize) -> Result<EffectiveAttraction> {
    if modes == 0 {
        return Err(Error::InvalidParameter("mode cutoff must be >= 1".into()));
    }
    if !(omega0 > 0.0) {
        return Err(Error::InvalidParameter(format!("omega0 = {omega0} must be positive")));
    }
    let mut matrix = [[0.0; DOTS]; DOTS];
    // Smallest terms first keeps the long sums stable.
    for mu in (1..=modes).rev() {
        let g: [f64; DOTS] = core::array::from_fn(|i| coupling_constant(i + 1, mu, g0).expect("valid dot"));
        let w = mu as f64 * omega0;
        for i in 0..DOTS {
            for j in 0..DOTS {
                matrix[i][j] += g[i] * g[j] / w;
            }
        }
    }
    Ok(EffectiveAttraction { matrix, modes })
}

/// Upper bound `(8/pi)^2 (g0^2/omega0) sum_{mu > modes} mu^-4` on any entry's truncation error.
pub fn mode_tail_bound(modes: usize, g0: f64, omega0: f64) -> f64 {
    let zeta4 = PI * PI * PI * PI / 90.0;
    let head: f64 = (1..=modes).rev().map(|mu| 1.0 / libm::pow(mu as f64, 4.0)).sum();
    64.0 / (PI * PI) * g0 * g0 / omega0 * (zeta4 - head).max(0.0)
}

/// `U (d_A + d_B) - n_A U~ n_A - n_B U~ n_B + V sum_i n_i^A n_i^B`.
pub fn atomic_energy(charges_a: &[u8], charges_b: &[u8], params: &ModelParams, modes: usize) -> Result<f64> {
    let a = ChargeVector::from_slice(charges_a)?;
    let b = ChargeVector::from_slice(charges_b)?;
    let attraction = effective_attraction(params.g0, params.omega0, modes)?;
    Ok(pair_energy(&a, &b, params, &attraction))
}

fn overlap(a: &ChargeVector, b: &ChargeVector) -> f64 {
    let (na, nb) = (a.as_f64(), b.as_f64());
    (0..DOTS).map(|i| na[i] * nb[i]).sum()
}

fn pair_energy(a: &ChargeVector, b: &ChargeVector, params: &ModelParams, attraction: &EffectiveAttraction) -> f64 {
    params.u * (a.double_occupancy() + b.double_occupancy()) as f64
        - attraction.quadratic_form(a)
        - attraction.quadratic_form(b)
        + params.v * overlap(a, b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomicManifold {
    /// Degenerate `(tube A, tube B)` charge pairs, sorted.
    pub members: Vec<(ChargeVector, ChargeVector)>,
    pub energy: f64,
}

impl AtomicManifold {
    pub fn degeneracy(&self) -> usize {
        self.members.len()
    }

    /// Average number of doubly occupied dots per tube over the manifold members.
    pub fn mean_double_occupancy(&self) -> f64 {
        let total: usize = self.members.iter().map(|(a, b)| a.double_occupancy() + b.double_occupancy()).sum();
        total as f64 / (2 * self.members.len()) as f64
    }

    pub fn contains(&self, a: ChargeVector, b: ChargeVector) -> bool {
        self.members.contains(&(a, b))
    }
}

/// Exhaustive minimum over all 19 x 19 charge pairs.
pub fn atomic_ground_manifold(params: &ModelParams, modes: usize) -> Result<AtomicManifold> {
    params.validate()?;
    let attraction = effective_attraction(params.g0, params.omega0, modes)?;
    let vectors = all_charge_vectors();
    let mut energies = Vec::with_capacity(vectors.len() * vectors.len());
    for a in &vectors {
        for b in &vectors {
            energies.push((pair_energy(a, b, params, &attraction), *a, *b));
        }
    }
    let min = energies.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
    let tol = DEGENERACY_TOLERANCE * min.abs().max(params.u);
    let members = energies.iter().filter(|e| e.0 - min <= tol).map(|e| (e.1, e.2)).collect();
    Ok(AtomicManifold { members, energy: min })
}

/// One vertex of the lower envelope of atomic energies as a function of `lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeBreakpoint {
    pub lambda: f64,
    /// Ground pair just above `lambda` (one representative of a degenerate set).
    pub ground: (ChargeVector, ChargeVector),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalCouplings {
    /// Where the Mott pair stops being the ground state.
    pub lambda_c1: f64,
    /// Where the final (paired) ground state takes over.
    pub lambda_c2: f64,
    pub breakpoints: Vec<EnvelopeBreakpoint>,
    pub modes: usize,
    /// [`mode_tail_bound`] in units of `lambda U` (i.e. with `g0^2/omega0 = 1`).
    pub tail_bound: f64,
}

/// Phase boundaries at `t = 0` from exact crossings of the atomic energies.
///
/// In units of `U` every pair energy is a line `b - lambda * k` with
/// `b = d_A + d_B + (V/U) overlap` and `k` the attraction quadratic form at
/// `g0 = omega0 = 1`; the boundaries are the vertices of their lower envelope.
pub fn critical_lambdas(v_over_u: f64, modes: usize) -> Result<CriticalCouplings> {
    if !(v_over_u >= 0.0) || !v_over_u.is_finite() {
        return Err(Error::InvalidParameter(format!("V/U = {v_over_u} must be finite and >= 0")));
    }
    let unit = effective_attraction(1.0, 1.0, modes)?;
    let vectors = all_charge_vectors();
    let mut lines = Vec::with_capacity(vectors.len() * vectors.len());
    for a in &vectors {
        for b in &vectors {
            let base = (a.double_occupancy() + b.double_occupancy()) as f64 + v_over_u * overlap(a, b);
            let slope = unit.quadratic_form(a) + unit.quadratic_form(b);
            lines.push((base, slope, *a, *b));
        }
    }
    const TIE: f64 = 1e-13;
    let mut current = lines[0];
    for &l in &lines[1..] {
        if l.0 < current.0 - TIE || (libm::fabs(l.0 - current.0) <= TIE && l.1 > current.1) {
            current = l;
        }
    }
    let initial_is_mott = (current.2, current.3) == (ChargeVector::MOTT, ChargeVector::MOTT);
    let mut lambda = 0.0;
    let mut breakpoints = Vec::new();
    loop {
        let mut best: Option<(f64, (f64, f64, ChargeVector, ChargeVector))> = None;
        for &l in &lines {
            if l.1 <= current.1 + TIE {
                continue;
            }
            let x = (l.0 - current.0) / (l.1 - current.1);
            if x < lambda - TIE {
                continue;
            }
            best = match best {
                None => Some((x, l)),
                Some((bx, bl)) if x < bx - TIE || (libm::fabs(x - bx) <= TIE && l.1 > bl.1) => Some((x, l)),
                keep => keep,
            };
        }
        match best {
            Some((x, l)) => {
                lambda = x.max(lambda);
                current = l;
                breakpoints.push(EnvelopeBreakpoint { lambda, ground: (l.2, l.3) });
            }
            None => break,
        }
    }
    // With V near U other pairs can tie with the Mott pair already at lambda = 0.
    let starts_mott = initial_is_mott;
    let lambda_c1 = if starts_mott { breakpoints.first().map_or(f64::INFINITY, |b| b.lambda) } else { 0.0 };
    let lambda_c2 = breakpoints.last().map_or(f64::INFINITY, |b| b.lambda);
    Ok(CriticalCouplings { lambda_c1, lambda_c2, breakpoints, modes, tail_bound: mode_tail_bound(modes, 1.0, 1.0) })
}

/// Coherent amplitude `-sum_i n_i g_{i,1} / omega0` of the fundamental mode.
pub fn coherent_displacement(charges: &[u8], g0: f64, omega0: f64) -> Result<f64> {
    let c = ChargeVector::from_slice(charges)?;
    let g = fundamental_couplings(g0);
    let n = c.as_f64();
    Ok(-(0..DOTS).map(|i| n[i] * g[i]).sum::<f64>() / omega0)
}

/// Single-mode phonon number `(sum_i n_i g_{i,1} / omega0)^2` of a charge configuration.
pub fn phonon_number_estimate(charges: &[u8], g0: f64, omega0: f64) -> Result<f64> {
    let alpha = coherent_displacement(charges, g0, omega0)?;
    Ok(alpha * alpha)
}

/// `omega0 -> k omega0`, `U -> U / k`; `g0`, `t`, `V` and therefore `lambda` unchanged.
pub fn rescale(params: &ModelParams, k: f64) -> Result<ModelParams> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidParameter(format!("rescale factor {k} must be positive")));
    }
    ModelParams::new(params.t, params.u / k, params.v, params.g0, params.omega0 * k, params.modes, params.statistics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Statistics;

    const G1: f64 = 0.372_923_228_578_056_6;
    const G2: f64 = 0.900_316_316_157_106_1;

    fn params(lambda: f64, v: f64) -> ModelParams {
        ModelParams::from_ratios(lambda, 0.0, v, 0.65, Statistics::Charge).unwrap()
    }

    #[test]
    fn single_mode_attraction_entries() {
        let u = effective_attraction(1.0, 1.0, 1).unwrap();
        assert!((u.entry(1, 1) - G2 * G2).abs() < 1e-14);
        assert!((u.entry(0, 1) - G1 * G2).abs() < 1e-14);
        assert!((u.entry(1, 1) - 0.810_569).abs() < 1e-6);
        assert!((u.entry(0, 1) - 0.335_749).abs() < 1e-6);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(u.entry(i, j), u.entry(j, i));
            }
        }
    }

    #[test]
    fn attraction_tail_bound_holds() {
        let a = effective_attraction(1.0, 1.0, 32).unwrap();
        let b = effective_attraction(1.0, 1.0, 64).unwrap();
        let bound: f64 = (33..100_000).map(|m| (m as f64).powi(-4)).sum::<f64>() * (8.0 / PI).powi(2);
        for i in 0..4 {
            for j in 0..4 {
                assert!((b.entry(i, j) - a.entry(i, j)).abs() < bound);
            }
        }
        assert!((mode_tail_bound(32, 1.0, 1.0) - bound).abs() < 1e-12);
    }

    #[test]
    fn malformed_charges_are_rejected() {
        let p = params(0.2, 0.0);
        assert!(atomic_energy(&[1, 1, 1], &[1, 1, 1, 1], &p, 1).is_err());
        assert!(atomic_energy(&[3, 1, 0, 0], &[1, 1, 1, 1], &p, 1).is_err());
        assert!(atomic_energy(&[2, 2, 1, 0], &[1, 1, 1, 1], &p, 1).is_err());
    }

    #[test]
    fn named_pair_energies() {
        let (lam, v) = (0.27, 0.02);
        let p = params(lam, v);
        let mm = atomic_energy(&[1, 1, 1, 1], &[1, 1, 1, 1], &p, 1).unwrap();
        let mp = atomic_energy(&[1, 1, 1, 1], &[0, 2, 2, 0], &p, 1).unwrap();
        let ii = atomic_energy(&[1, 2, 1, 0], &[0, 1, 2, 1], &p, 1).unwrap();
        // (2 (g1 + g2))^2 = 64 / pi^2, (4 g2)^2 = 128 / pi^2
        assert!((mm - (-2.0 * 64.0 / (PI * PI) * lam + 4.0 * v)).abs() < 1e-12);
        assert!((mp - (2.0 - 192.0 / (PI * PI) * lam + 4.0 * v)).abs() < 1e-12);
        let k_i = 2.0 * (G1 + 3.0 * G2).powi(2);
        assert!((ii - (2.0 - k_i * lam + 4.0 * v)).abs() < 1e-12);
        assert!((64.0 / (PI * PI) - 6.484_555).abs() < 1e-6);
        assert!((192.0 / (PI * PI) - 19.453_667).abs() < 1e-6);
        assert!((k_i - 18.897_380).abs() < 1e-6);
        assert!(ii > mp);
    }

    #[test]
    fn manifolds_at_named_points() {
        let m = atomic_ground_manifold(&params(0.10, 0.02), 1).unwrap();
        assert_eq!(m.members, vec![(ChargeVector::MOTT, ChargeVector::MOTT)]);
        assert_eq!(m.mean_double_occupancy(), 0.0);

        let b = atomic_ground_manifold(&params(0.315, 0.02), 1).unwrap();
        assert_eq!(b.degeneracy(), 2);
        assert!(b.contains(ChargeVector::MOTT, ChargeVector::PAIRED));
        assert!(b.contains(ChargeVector::PAIRED, ChargeVector::MOTT));
        assert_eq!(b.mean_double_occupancy(), 1.0);

        let p = atomic_ground_manifold(&params(0.60, 0.02), 1).unwrap();
        assert_eq!(p.members, vec![(ChargeVector::PAIRED, ChargeVector::PAIRED)]);
    }

    #[test]
    fn single_mode_critical_values() {
        let c = critical_lambdas(0.0, 1).unwrap();
        assert!((c.lambda_c1 - PI * PI / 32.0).abs() < 1e-12);
        assert!((c.lambda_c2 - PI * PI / 32.0).abs() < 1e-12);
        let c = critical_lambdas(0.02, 1).unwrap();
        assert!((c.lambda_c1 - 0.308_425).abs() < 1e-6);
        assert!((c.lambda_c2 - 0.320_762).abs() < 1e-6);
    }

    #[test]
    fn c1_is_v_independent_and_window_linear() {
        let base = critical_lambdas(0.0, 1).unwrap().lambda_c1;
        for v in [0.0, 0.01, 0.02, 0.04, 0.5] {
            let c = critical_lambdas(v, 1).unwrap();
            assert!((c.lambda_c1 - base).abs() < 1e-12, "v={v}");
            assert!((c.lambda_c2 - c.lambda_c1 - PI * PI / 16.0 * v).abs() < 1e-12, "v={v}");
        }
        // at V = U the Mott pair is already degenerate with |0,0,2,2>|2,2,0,0> at lambda = 0
        let c = critical_lambdas(1.0, 1).unwrap();
        assert_eq!(c.lambda_c1, 0.0);
    }

    #[test]
    fn intermediate_gap_shrinks_with_modes() {
        let mut last = f64::INFINITY;
        for m in [1, 4, 16, 64, 256] {
            let p = params(0.3, 0.02);
            let gap = (atomic_energy(&[1, 2, 1, 0], &[0, 1, 2, 1], &p, m).unwrap()
                - atomic_energy(&[1, 1, 1, 1], &[0, 2, 2, 0], &p, m).unwrap())
            .abs();
            assert!(gap < last, "M={m}: {gap} !< {last}");
            last = gap;
        }
    }

    #[test]
    fn phonon_estimates() {
        let n = phonon_number_estimate(&[0, 2, 2, 0], 1.0, 1.0).unwrap();
        assert!((n - 128.0 / (PI * PI)).abs() < 1e-12);
        let g0 = (0.5f64 * 0.65).sqrt();
        let n = phonon_number_estimate(&[0, 2, 2, 0], g0, 0.65).unwrap();
        assert!((n - 9.977).abs() < 1e-3);
        assert_eq!(phonon_number_estimate(&[0, 2, 2, 0], 0.0, 0.65).unwrap(), 0.0);
        let big = phonon_number_estimate(&[0, 2, 2, 0], 278.0, 1.0).unwrap();
        assert!((big / 1.0e6 - 1.0).abs() < 0.01, "{big}");
    }

    #[test]
    fn rescale_preserves_lambda() {
        let p = ModelParams::new(0.01, 1.0, 0.02, 0.3, 0.4, 1, Statistics::Charge).unwrap();
        let r = rescale(&p, 1e3).unwrap();
        assert_eq!(r.omega0, 400.0);
        assert_eq!(r.u, 1e-3);
        assert!((r.lambda() - p.lambda()).abs() < 1e-15 * p.lambda());
        assert_eq!(rescale(&p, 1.0).unwrap(), p);
        assert!(rescale(&p, 0.0).is_err());
        assert!(rescale(&p, -2.0).is_err());
    }
}
