//! Occupation-number bases.
//!
//! Electrons on one tube are stored as a packed `u32` code. In spinful mode
//! bit `2 * site + spin` is the occupation of fermionic mode `(site, spin)`
//! (site-major, spin-minor, up before down), which is also the canonical
//! operator ordering used for Jordan-Wigner signs. In charge-only mode each
//! site holds a two-bit charge in `0..=2` at bits `2 * site .. 2 * site + 2`.
//!
//! Bases are ordered by ascending code and are immutable once built, so they
//! can be shared freely between threads.
//!
//! Sites are numbered from zero here. Tube A modes precede tube B modes in the
//! global ordering; since each tube always carries an even number of electrons
//! the Jordan-Wigner string of a tube-B hop over tube A is `+1`, so signs are
//! purely intra-tube.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Largest supported chain length (two code bits per site).
pub const MAX_SITES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Statistics {
    /// Spin-1/2 fermions with fixed `n_up`, `n_down`.
    Spinful,
    /// Spinless per-site charge in `0..=2` with bosonic-style hopping amplitudes.
    Charge,
}

impl Statistics {
    pub fn as_str(&self) -> &'static str {
        match self {
            Statistics::Spinful => "spinful",
            Statistics::Charge => "charge",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    #[inline]
    fn offset(self) -> u32 {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sector {
    Spinful { n_up: usize, n_down: usize },
    Charge { total: usize },
}

impl Sector {
    /// Half filling (one electron per site on average); `Sz = 0` in spinful mode.
    pub fn half_filling(statistics: Statistics, sites: usize) -> Sector {
        match statistics {
            Statistics::Spinful => Sector::Spinful { n_up: sites / 2, n_down: sites - sites / 2 },
            Statistics::Charge => Sector::Charge { total: sites },
        }
    }

    pub fn statistics(&self) -> Statistics {
        match self {
            Sector::Spinful { .. } => Statistics::Spinful,
            Sector::Charge { .. } => Statistics::Charge,
        }
    }

    pub fn electrons(&self) -> usize {
        match *self {
            Sector::Spinful { n_up, n_down } => n_up + n_down,
            Sector::Charge { total } => total,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElectronConfig {
    code: u32,
    sites: u8,
    statistics: Statistics,
}

impl ElectronConfig {
    /// Spinful configuration from per-spin site masks (bit `i` = site `i`).
    pub fn spinful(sites: usize, up: u32, down: u32) -> Result<Self> {
        check_sites(sites)?;
        let limit = 1u32 << sites;
        if up >= limit || down >= limit {
            return Err(Error::InvalidOccupation(format!("spin masks {up:#b}/{down:#b} exceed {sites} sites")));
        }
        let mut code = 0u32;
        for s in 0..sites {
            code |= ((up >> s) & 1) << (2 * s);
            code |= ((down >> s) & 1) << (2 * s + 1);
        }
        Ok(Self { code, sites: sites as u8, statistics: Statistics::Spinful })
    }

    /// Charge-only configuration from per-site charges.
    pub fn from_charges(charges: &[u8]) -> Result<Self> {
        check_sites(charges.len())?;
        let mut code = 0u32;
        for (s, &q) in charges.iter().enumerate() {
            if q > 2 {
                return Err(Error::InvalidOccupation(format!("site {s} holds charge {q} > 2")));
            }
            code |= u32::from(q) << (2 * s);
        }
        Ok(Self { code, sites: charges.len() as u8, statistics: Statistics::Charge })
    }

    #[inline]
    pub fn code(&self) -> u32 {
        self.code
    }

    #[inline]
    pub fn sites(&self) -> usize {
        self.sites as usize
    }

    #[inline]
    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    /// Number of electrons on `site` (0, 1 or 2).
    #[inline]
    pub fn charge(&self, site: usize) -> u8 {
        let field = (self.code >> (2 * site)) & 0b11;
        match self.statistics {
            Statistics::Spinful => (field & 1) as u8 + (field >> 1) as u8,
            Statistics::Charge => field as u8,
        }
    }

    /// Occupation of `(site, spin)`; `None` in charge-only mode.
    pub fn occupied(&self, site: usize, spin: Spin) -> Option<bool> {
        match self.statistics {
            Statistics::Spinful => Some((self.code >> (2 * site as u32 + spin.offset())) & 1 == 1),
            Statistics::Charge => None,
        }
    }

    pub fn charges(&self) -> Vec<u8> {
        (0..self.sites()).map(|s| self.charge(s)).collect()
    }

    pub fn total_charge(&self) -> usize {
        (0..self.sites()).map(|s| self.charge(s) as usize).sum()
    }

    /// Number of doubly occupied sites.
    pub fn double_occupancy(&self) -> usize {
        (0..self.sites()).filter(|&s| self.charge(s) == 2).count()
    }

    /// Moves one electron from `from` to `to` (nearest neighbours, open chain).
    ///
    /// Spinful mode returns the fermionic sign of `c†_{to,σ} c_{from,σ}` and
    /// requires `spin`. Charge-only mode ignores `spin` and returns the
    /// amplitude `sqrt(n_from (n_to + 1))`. `Ok(None)` means the move is blocked.
    pub fn hop(&self, from: usize, to: usize, spin: Option<Spin>) -> Result<Option<(Self, f64)>> {
        let sites = self.sites();
        for &s in &[from, to] {
            if s >= sites {
                return Err(Error::OutOfRange { what: "site", index: s, bound: sites });
            }
        }
        if from.abs_diff(to) != 1 {
            return Err(Error::NotAdjacent { from, to });
        }
        match self.statistics {
            Statistics::Spinful => {
                let spin = spin.ok_or_else(|| Error::InvalidParameter("spinful hop needs a spin".into()))?;
                let src = 2 * from as u32 + spin.offset();
                let dst = 2 * to as u32 + spin.offset();
                if (self.code >> src) & 1 == 0 || (self.code >> dst) & 1 == 1 {
                    return Ok(None);
                }
                let below = |code: u32, mode: u32| (code & ((1u32 << mode) - 1)).count_ones();
                let mut parity = below(self.code, src);
                let removed = self.code & !(1 << src);
                parity += below(removed, dst);
                let code = removed | (1 << dst);
                let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
                Ok(Some((Self { code, ..*self }, sign)))
            }
            Statistics::Charge => {
                let nf = self.charge(from);
                let nt = self.charge(to);
                if nf == 0 || nt == 2 {
                    return Ok(None);
                }
                let code = self.code - (1 << (2 * from)) + (1 << (2 * to));
                let amp = libm::sqrt(f64::from(nf) * f64::from(nt + 1));
                Ok(Some((Self { code, ..*self }, amp)))
            }
        }
    }
}

fn check_sites(sites: usize) -> Result<()> {
    if sites == 0 || sites > MAX_SITES {
        return Err(Error::InvalidSector(format!("{sites} sites (supported: 1..={MAX_SITES})")));
    }
    Ok(())
}

/// Complete, duplicate-free basis of one particle-number sector.
#[derive(Clone, Debug, PartialEq)]
pub struct ElectronBasis {
    sites: usize,
    sector: Sector,
    configs: Vec<ElectronConfig>,
}

impl ElectronBasis {
    #[inline]
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn statistics(&self) -> Statistics {
        self.sector.statistics()
    }

    #[inline]
    pub fn config(&self, index: usize) -> ElectronConfig {
        self.configs[index]
    }

    pub fn configs(&self) -> &[ElectronConfig] {
        &self.configs
    }

    /// Dense index of `config`, if it belongs to this sector.
    pub fn index_of(&self, config: &ElectronConfig) -> Option<usize> {
        if config.statistics != self.statistics() || config.sites() != self.sites {
            return None;
        }
        self.configs.binary_search_by_key(&config.code, |c| c.code).ok()
    }

    /// Indices of every configuration whose site charges equal `charges`.
    pub fn indices_with_charges(&self, charges: &[u8]) -> Vec<usize> {
        self.configs
            .iter()
            .enumerate()
            .filter(|(_, c)| (0..self.sites).all(|s| charges.get(s) == Some(&c.charge(s))))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Enumerates a fixed-number sector on an open chain of `sites` dots.
pub fn enumerate_sector(sites: usize, sector: Sector) -> Result<ElectronBasis> {
    check_sites(sites)?;
    let mut configs = Vec::new();
    match sector {
        Sector::Spinful { n_up, n_down } => {
            if n_up > sites || n_down > sites {
                return Err(Error::InvalidSector(format!(
                    "{n_up} up / {n_down} down electrons do not fit on {sites} sites"
                )));
            }
            let masks =
                |n: usize| -> Vec<u32> { (0u32..(1 << sites)).filter(|m| m.count_ones() as usize == n).collect() };
            let ups = masks(n_up);
            let downs = masks(n_down);
            for &up in &ups {
                for &down in &downs {
                    configs.push(ElectronConfig::spinful(sites, up, down)?);
                }
            }
        }
        Sector::Charge { total } => {
            if total > 2 * sites {
                return Err(Error::InvalidSector(format!(
                    "total charge {total} exceeds capacity {} of {sites} sites",
                    2 * sites
                )));
            }
            let mut charges = alloc::vec![0u8; sites];
            fill_charges(&mut charges, 0, total, &mut configs)?;
        }
    }
    configs.sort_unstable();
    Ok(ElectronBasis { sites, sector, configs })
}

fn fill_charges(charges: &mut [u8], site: usize, remaining: usize, out: &mut Vec<ElectronConfig>) -> Result<()> {
    if site == charges.len() {
        if remaining == 0 {
            out.push(ElectronConfig::from_charges(charges)?);
        }
        return Ok(());
    }
    let capacity_after = 2 * (charges.len() - site - 1);
    for q in 0..=2usize.min(remaining) {
        if remaining - q > capacity_after {
            continue;
        }
        charges[site] = q as u8;
        fill_charges(charges, site + 1, remaining - q, out)?;
    }
    charges[site] = 0;
    Ok(())
}

/// Single-mode phonon Fock space `|0>, ..., |states - 1>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhononBasis {
    states: usize,
}

impl PhononBasis {
    /// `states` basis kets, i.e. occupations up to `states - 1`.
    pub fn new(states: usize) -> Result<Self> {
        if states < 2 {
            return Err(Error::InvalidParameter(format!(
                "phonon basis needs at least 2 states (cutoff >= 1), got {states}"
            )));
        }
        Ok(Self { states })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.states
    }

    #[inline]
    pub fn max_occupation(&self) -> usize {
        self.states - 1
    }
}

/// Row-major tensor layout `(electrons A, electrons B, phonons A, phonons B)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HilbertSpace {
    dims: [usize; 4],
    strides: [usize; 4],
    total: usize,
}

impl HilbertSpace {
    pub const ELECTRONS_A: usize = 0;
    pub const ELECTRONS_B: usize = 1;
    pub const PHONONS_A: usize = 2;
    pub const PHONONS_B: usize = 3;

    pub fn new(electrons_a: usize, electrons_b: usize, phonons_a: usize, phonons_b: usize) -> Result<Self> {
        let dims = [electrons_a, electrons_b, phonons_a, phonons_b];
        if dims.contains(&0) {
            return Err(Error::InvalidParameter("empty tensor factor".into()));
        }
        let mut strides = [1usize; 4];
        for k in (0..3).rev() {
            strides[k] =
                strides[k + 1].checked_mul(dims[k + 1]).ok_or(Error::InvalidParameter("dimension overflow".into()))?;
        }
        let total = strides[0].checked_mul(dims[0]).ok_or(Error::InvalidParameter("dimension overflow".into()))?;
        Ok(Self { dims, strides, total })
    }

    pub fn from_bases(a: &ElectronBasis, b: &ElectronBasis, pa: PhononBasis, pb: PhononBasis) -> Result<Self> {
        Self::new(a.len(), b.len(), pa.dim(), pb.dim())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.total
    }

    #[inline]
    pub fn factor_dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn index(&self, ea: usize, eb: usize, pa: usize, pb: usize) -> Result<usize> {
        let f = [ea, eb, pa, pb];
        const NAMES: [&str; 4] = ["electron A", "electron B", "phonon A", "phonon B"];
        for k in 0..4 {
            if f[k] >= self.dims[k] {
                return Err(Error::OutOfRange { what: NAMES[k], index: f[k], bound: self.dims[k] });
            }
        }
        Ok(self.index_unchecked(ea, eb, pa, pb))
    }

    #[inline]
    pub fn index_unchecked(&self, ea: usize, eb: usize, pa: usize, pb: usize) -> usize {
        ea * self.strides[0] + eb * self.strides[1] + pa * self.strides[2] + pb
    }

    /// Inverse of [`HilbertSpace::index`].
    pub fn factors(&self, index: usize) -> Result<[usize; 4]> {
        if index >= self.total {
            return Err(Error::OutOfRange { what: "composite", index, bound: self.total });
        }
        let mut rest = index;
        let mut out = [0usize; 4];
        for k in 0..4 {
            out[k] = rest / self.strides[k];
            rest %= self.strides[k];
        }
        Ok(out)
    }

    /// Index of the tube-exchanged state `(eb, ea, pb, pa)`; requires identical tubes.
    #[inline]
    pub fn swap_tubes(&self, index: usize) -> usize {
        let [ea, eb, pa, pb] = self.factors(index).expect("index in range");
        self.index_unchecked(eb, ea, pb, pa)
    }

    pub fn tubes_identical(&self) -> bool {
        self.dims[0] == self.dims[1] && self.dims[2] == self.dims[3]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn spinful_half_filling_has_36_states() {
        let b = enumerate_sector(4, Sector::Spinful { n_up: 2, n_down: 2 }).unwrap();
        assert_eq!(b.len(), binomial(4, 2) * binomial(4, 2));
        assert_eq!(b.len(), 36);
    }

    #[test]
    fn fully_occupied_sector_is_single_state() {
        let b = enumerate_sector(4, Sector::Spinful { n_up: 4, n_down: 4 }).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.config(0).double_occupancy(), 4);
    }

    #[test]
    fn charge_sector_matches_brute_force_count() {
        // Coefficient of x^4 in (1 + x + x^2)^4, counted by brute force.
        let mut brute = 0;
        for code in 0..81usize {
            let digits: Vec<usize> = (0..4).map(|k| (code / 3usize.pow(k)) % 3).collect();
            if digits.iter().sum::<usize>() == 4 {
                brute += 1;
            }
        }
        let b = enumerate_sector(4, Sector::Charge { total: 4 }).unwrap();
        assert_eq!(b.len(), brute);
        assert_eq!(b.len(), 19);
    }

    #[test]
    fn inconsistent_sectors_are_rejected() {
        assert!(matches!(enumerate_sector(4, Sector::Spinful { n_up: 5, n_down: 0 }), Err(Error::InvalidSector(_))));
        assert!(enumerate_sector(4, Sector::Charge { total: 9 }).is_err());
        assert!(enumerate_sector(0, Sector::Charge { total: 0 }).is_err());
    }

    #[test]
    fn ordering_is_sorted_and_indexable() {
        for sector in [Sector::Spinful { n_up: 2, n_down: 2 }, Sector::Charge { total: 4 }] {
            let b = enumerate_sector(4, sector).unwrap();
            for w in b.configs().windows(2) {
                assert!(w[0].code() < w[1].code());
            }
            for (i, c) in b.configs().iter().enumerate() {
                assert_eq!(b.index_of(c), Some(i));
                assert_eq!(c.total_charge(), 4);
            }
        }
    }

    #[test]
    fn pauli_blocked_hop_is_empty() {
        // up electrons on sites 0 and 1
        let c = ElectronConfig::spinful(4, 0b0011, 0b0100).unwrap();
        assert_eq!(c.hop(0, 1, Some(Spin::Up)).unwrap(), None);
        // empty source
        assert_eq!(c.hop(3, 2, Some(Spin::Up)).unwrap(), None);
    }

    #[test]
    fn non_adjacent_hop_is_rejected() {
        let c = ElectronConfig::from_charges(&[1, 1, 1, 1]).unwrap();
        assert_eq!(c.hop(0, 2, None), Err(Error::NotAdjacent { from: 0, to: 2 }));
        assert!(c.hop(3, 4, None).is_err());
    }

    #[test]
    fn charge_hop_amplitudes() {
        let c = ElectronConfig::from_charges(&[0, 2, 2, 0]).unwrap();
        let (d, amp) = c.hop(1, 0, None).unwrap().unwrap();
        assert_eq!(d.charges(), vec![1, 1, 2, 0]);
        assert!((amp - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.hop(1, 2, None).unwrap(), None);
    }

    #[test]
    fn hop_there_and_back_restores_with_positive_sign() {
        for sector in [Sector::Spinful { n_up: 2, n_down: 2 }, Sector::Charge { total: 4 }] {
            let b = enumerate_sector(4, sector).unwrap();
            let spins: &[Option<Spin>] = match sector {
                Sector::Spinful { .. } => &[Some(Spin::Up), Some(Spin::Down)],
                Sector::Charge { .. } => &[None],
            };
            for c in b.configs() {
                for i in 0..3 {
                    for (from, to) in [(i, i + 1), (i + 1, i)] {
                        for &spin in spins {
                            if let Some((d, s1)) = c.hop(from, to, spin).unwrap() {
                                let (back, s2) = d.hop(to, from, spin).unwrap().unwrap();
                                assert_eq!(back, *c);
                                assert!(s1 * s2 > 0.0);
                                if sector.statistics() == Statistics::Spinful {
                                    assert_eq!(s1 * s2, 1.0);
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn phonon_basis_rejects_trivial_cutoff() {
        assert!(PhononBasis::new(1).is_err());
        let p = PhononBasis::new(50).unwrap();
        assert_eq!((p.dim(), p.max_occupation()), (50, 49));
    }

    #[test]
    fn composite_index_corners_and_errors() {
        let h = HilbertSpace::new(19, 19, 50, 50).unwrap();
        assert_eq!(h.dim(), 902_500);
        assert_eq!(h.index(0, 0, 0, 0).unwrap(), 0);
        assert_eq!(h.index(18, 18, 49, 49).unwrap(), h.dim() - 1);
        assert!(h.index(19, 0, 0, 0).is_err());
        assert!(h.factors(h.dim()).is_err());
        let spinful = HilbertSpace::new(36, 36, 50, 50).unwrap();
        assert_eq!(spinful.dim(), 3_240_000);
    }
}
