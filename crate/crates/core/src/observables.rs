//! Ground-state observables: charge statistics, phonon moments, reduced
//! density matrices, entropies, negativity, Bell fidelity and the phase label.
//!
//! State vectors use the [`HilbertSpace`] layout, so for a fixed electronic
//! pair `(ea, eb)` the phonon amplitudes form one contiguous row-major
//! `phonons_a x phonons_b` block. Spectra of reduced states are taken from
//! whichever of `Psi Psi^T` and `Psi^T Psi` is smaller; both share their
//! nonzero eigenvalues.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::basis::{ElectronBasis, HilbertSpace, Statistics};
use crate::eigen::GroundStateResult;
use crate::hamiltonian::{mode_force, ModelParams, DOTS};
use crate::lang_firsov::ChargeVector;
use crate::math::entropy_of;
use crate::point::TwoTubeSystem;
use crate::{Error, Result};

/// Largest kept dimension a reduced density matrix may have by default.
pub const DEFAULT_RDM_CAP: usize = 6_000;

/// Subset of the four tensor factors of [`HilbertSpace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FactorMask(u8);

impl FactorMask {
    pub const ELECTRONS_A: FactorMask = FactorMask(1);
    pub const ELECTRONS_B: FactorMask = FactorMask(2);
    pub const PHONONS_A: FactorMask = FactorMask(4);
    pub const PHONONS_B: FactorMask = FactorMask(8);
    /// Electrons and phonon of tube A.
    pub const TUBE_A: FactorMask = FactorMask(1 | 4);
    pub const TUBE_B: FactorMask = FactorMask(2 | 8);
    pub const ELECTRONS: FactorMask = FactorMask(1 | 2);
    pub const PHONONS: FactorMask = FactorMask(4 | 8);

    pub fn from_bits(bits: u8) -> Result<Self> {
        if bits == 0 || bits > 15 {
            return Err(Error::InvalidParameter(format!("factor mask {bits:#06b} must select 1 to 4 factors")));
        }
        Ok(Self(bits))
    }

    #[inline]
    pub fn bits(self) -> u8 {
        self.0
    }

    pub const fn union(self, other: FactorMask) -> FactorMask {
        FactorMask(self.0 | other.0)
    }

    /// Whether factor `k` (a `HilbertSpace::*` constant) is kept.
    #[inline]
    pub fn contains(self, k: usize) -> bool {
        self.0 & (1 << k) != 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub matrix: DMatrix<f64>,
    /// Dimensions of the kept factors, in layout order.
    pub dims: Vec<usize>,
}

impl DensityMatrix {
    pub fn new(matrix: DMatrix<f64>, dims: Vec<usize>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if !matrix.is_square() || matrix.nrows() != n {
            return Err(Error::LengthMismatch { expected: n, found: matrix.nrows() });
        }
        Ok(Self { matrix, dims })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        sorted_eigenvalues(self.matrix.clone())
    }
}

fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `psi` as a (kept x traced) matrix plus the kept factor dimensions.
fn reshape(psi: &[f64], space: &HilbertSpace, keep: FactorMask) -> Result<(DMatrix<f64>, Vec<usize>)> {
    if psi.len() != space.dim() {
        return Err(Error::LengthMismatch { expected: space.dim(), found: psi.len() });
    }
    let dims = space.factor_dims();
    let mut ks = [0usize; 4];
    let mut ts = [0usize; 4];
    let (mut kd, mut td) = (1usize, 1usize);
    for f in (0..4).rev() {
        if keep.contains(f) {
            ks[f] = kd;
            kd *= dims[f];
        } else {
            ts[f] = td;
            td *= dims[f];
        }
    }
    let mut m = DMatrix::<f64>::zeros(kd, td);
    let out = m.as_mut_slice();
    let mut idx = 0;
    for a in 0..dims[0] {
        for b in 0..dims[1] {
            for c in 0..dims[2] {
                let k0 = a * ks[0] + b * ks[1] + c * ks[2];
                let t0 = a * ts[0] + b * ts[1] + c * ts[2];
                for d in 0..dims[3] {
                    out[k0 + d * ks[3] + (t0 + d * ts[3]) * kd] = psi[idx];
                    idx += 1;
                }
            }
        }
    }
    let kept = (0..4).filter(|&f| keep.contains(f)).map(|f| dims[f]).collect();
    Ok((m, kept))
}

/// Partial trace of `|psi><psi|` over the factors not in `keep`.
pub fn reduced_density_matrix(
    psi: &[f64],
    keep: FactorMask,
    space: &HilbertSpace,
    cap: usize,
) -> Result<DensityMatrix> {
    let (m, dims) = reshape(psi, space, keep)?;
    if m.nrows() > cap {
        return Err(Error::DimensionTooLarge {
            dim: m.nrows(),
            cap,
            hint: "reduced density matrix too large; use subsystem_spectrum for entropies",
        });
    }
    let matrix = &m * m.transpose();
    DensityMatrix::new(matrix, dims)
}

/// Nonzero-capable spectrum of the reduced state on `keep`, computed on the smaller Gram side.
pub fn subsystem_spectrum(psi: &[f64], keep: FactorMask, space: &HilbertSpace, cap: usize) -> Result<Vec<f64>> {
    let (m, _) = reshape(psi, space, keep)?;
    let small = m.nrows().min(m.ncols());
    if small > cap {
        return Err(Error::DimensionTooLarge { dim: small, cap, hint: "both sides of the bipartition are too large" });
    }
    let gram = if m.nrows() <= m.ncols() { &m * m.transpose() } else { m.transpose() * &m };
    Ok(sorted_eigenvalues(gram))
}

/// `-Tr rho ln rho`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of(rho.eigenvalues())
}

pub fn subsystem_entropy(psi: &[f64], keep: FactorMask, space: &HilbertSpace, cap: usize) -> Result<f64> {
    Ok(entropy_of(subsystem_spectrum(psi, keep, space, cap)?))
}

/// `S(A_p) + S(B_p) - S(A_p B_p)` between the two phonon modes.
pub fn mutual_information_phonons(psi: &[f64], space: &HilbertSpace, cap: usize) -> Result<f64> {
    let sa = subsystem_entropy(psi, FactorMask::PHONONS_A, space, cap)?;
    let sb = subsystem_entropy(psi, FactorMask::PHONONS_B, space, cap)?;
    let sab = subsystem_entropy(psi, FactorMask::PHONONS, space, cap)?;
    Ok((sa + sb - sab).max(0.0))
}

/// `(||rho^{T_B}||_1 - 1) / 2`, evaluated as the total weight of negative eigenvalues.
pub fn negativity(rho: &DMatrix<f64>, dims: [usize; 2]) -> Result<f64> {
    let [da, db] = dims;
    if !rho.is_square() || rho.nrows() != da * db {
        return Err(Error::LengthMismatch { expected: da * db, found: rho.nrows() });
    }
    let pt = DMatrix::from_fn(da * db, da * db, |r, c| {
        let (i, j) = (r / db, r % db);
        let (k, l) = (c / db, c % db);
        rho[(i * db + l, k * db + j)]
    });
    let ev = sorted_eigenvalues(pt);
    let abs: f64 = ev.iter().map(|x| x.abs()).sum();
    let sum: f64 = ev.iter().sum();
    Ok((0.5 * (abs - sum)).max(0.0))
}

fn support_basis(rho: DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(rho);
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let cols: Vec<_> = (0..eig.eigenvalues.len())
        .filter(|&k| eig.eigenvalues[k] > rel_tol * max)
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect();
    DMatrix::from_columns(&cols)
}

/// Phonon-phonon negativity.
///
/// The partial transpose of `rho_{A_p B_p}` lives on `supp(rho_A) x supp(rho_B)`
/// (all matrices are real), so the state is first compressed onto the
/// eigenvectors of the single-mode states whose weight exceeds `support_tol`
/// times the largest one. Dropped weight bounds the error.
pub fn phonon_negativity(psi: &[f64], space: &HilbertSpace, support_tol: f64, cap: usize) -> Result<f64> {
    let [ne_a, ne_b, npa, npb] = space.factor_dims();
    let rho_a = reduced_density_matrix(psi, FactorMask::PHONONS_A, space, cap)?;
    let rho_b = reduced_density_matrix(psi, FactorMask::PHONONS_B, space, cap)?;
    let ua = support_basis(rho_a.matrix, support_tol);
    let ub = support_basis(rho_b.matrix, support_tol);
    let (ra, rb) = (ua.ncols(), ub.ncols());
    if ra * rb > cap {
        return Err(Error::DimensionTooLarge { dim: ra * rb, cap, hint: "phonon support too large for negativity" });
    }
    let ne = ne_a * ne_b;
    let block = npa * npb;
    let mut x = DMatrix::<f64>::zeros(ra * rb, ne);
    let ua_t = ua.transpose();
    for e in 0..ne {
        let phi = DMatrix::from_row_slice(npa, npb, &psi[e * block..(e + 1) * block]);
        if phi.iter().all(|&v| v == 0.0) {
            continue;
        }
        let reduced = &ua_t * phi * &ub;
        for a in 0..ra {
            for b in 0..rb {
                x[(a * rb + b, e)] = reduced[(a, b)];
            }
        }
    }
    let rho = &x * x.transpose();
    negativity(&rho, [ra, rb])
}

/// Charge statistics of one tube.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ChargeStatistics {
    /// Expected number of doubly occupied dots.
    pub double_occupancy: f64,
    pub density: [f64; DOTS],
    /// `<n_i n_j> - <n_i><n_j>`.
    pub correlation: [[f64; DOTS]; DOTS],
}

impl ChargeStatistics {
    /// Unweighted mean of `C_ij` over the six pairs `i < j`.
    pub fn average_correlation(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..DOTS {
            for j in i + 1..DOTS {
                acc += self.correlation[i][j];
            }
        }
        acc / (DOTS * (DOTS - 1) / 2) as f64
    }
}

/// Probability of each electronic pair `(ea, eb)`, flattened as `ea * ne_b + eb`.
pub fn electronic_weights(psi: &[f64], space: &HilbertSpace) -> Result<Vec<f64>> {
    if psi.len() != space.dim() {
        return Err(Error::LengthMismatch { expected: space.dim(), found: psi.len() });
    }
    let [_, _, npa, npb] = space.factor_dims();
    Ok(psi.chunks_exact(npa * npb).map(|c| c.iter().map(|v| v * v).sum()).collect())
}

pub fn charge_statistics(
    psi: &[f64],
    electrons: &ElectronBasis,
    space: &HilbertSpace,
) -> Result<[ChargeStatistics; 2]> {
    let [ne_a, ne_b, _, _] = space.factor_dims();
    if electrons.len() != ne_a || electrons.len() != ne_b {
        return Err(Error::LengthMismatch { expected: ne_a, found: electrons.len() });
    }
    let w = electronic_weights(psi, space)?;
    let mut marginals = [vec![0.0; ne_a], vec![0.0; ne_b]];
    for ea in 0..ne_a {
        for eb in 0..ne_b {
            let p = w[ea * ne_b + eb];
            marginals[0][ea] += p;
            marginals[1][eb] += p;
        }
    }
    let stats = |marginal: &[f64]| {
        let mut s = ChargeStatistics::default();
        let mut second = [[0.0; DOTS]; DOTS];
        for (e, &p) in marginal.iter().enumerate() {
            let c = electrons.config(e);
            let n: [f64; DOTS] = core::array::from_fn(|i| f64::from(c.charge(i)));
            s.double_occupancy += p * c.double_occupancy() as f64;
            for i in 0..DOTS {
                s.density[i] += p * n[i];
                for j in 0..DOTS {
                    second[i][j] += p * n[i] * n[j];
                }
            }
        }
        for i in 0..DOTS {
            for j in 0..DOTS {
                s.correlation[i][j] = second[i][j] - s.density[i] * s.density[j];
            }
        }
        s
    };
    Ok([stats(&marginals[0]), stats(&marginals[1])])
}

/// `<b>` and `<b+ b>` of one tube's mode in the frame the vector is expressed in.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhononMoments {
    pub mean: f64,
    pub number: f64,
}

impl PhononMoments {
    /// Lab-frame `<a+ a>` for `a = b + alpha`.
    pub fn lab_number(&self, alpha: f64) -> f64 {
        self.number + 2.0 * alpha * self.mean + alpha * alpha
    }

    /// `<a+ a> - <a+><a>`; frame independent.
    pub fn variance(&self) -> f64 {
        self.number - self.mean * self.mean
    }
}

pub fn phonon_moments(psi: &[f64], space: &HilbertSpace) -> Result<[PhononMoments; 2]> {
    if psi.len() != space.dim() {
        return Err(Error::LengthMismatch { expected: space.dim(), found: psi.len() });
    }
    let [_, _, npa, npb] = space.factor_dims();
    let sa: Vec<f64> = (0..npa).map(|n| libm::sqrt(n as f64)).collect();
    let sb: Vec<f64> = (0..npb).map(|n| libm::sqrt(n as f64)).collect();
    let mut m = [PhononMoments::default(); 2];
    for block in psi.chunks_exact(npa * npb) {
        for pa in 0..npa {
            let row = &block[pa * npb..(pa + 1) * npb];
            for pb in 0..npb {
                let v = row[pb];
                let p = v * v;
                m[0].number += pa as f64 * p;
                m[1].number += pb as f64 * p;
                if pa > 0 {
                    m[0].mean += sa[pa] * v * block[(pa - 1) * npb + pb];
                }
                if pb > 0 {
                    m[1].mean += sb[pb] * v * row[pb - 1];
                }
            }
        }
    }
    Ok(m)
}

/// `<m| exp(delta (a+ - a)) |n>` for `m, n < states`, entries of the untruncated operator.
///
/// Closed form `sqrt(n!/m!) e^{-x/2} delta^{m-n} L_n^{(m-n)}(x)` with `x = delta^2`
/// for `m >= n`; the other triangle follows from `D(delta)^T = D(-delta)`.
pub fn displacement_matrix(states: usize, delta: f64) -> DMatrix<f64> {
    let x = delta * delta;
    let mut d = DMatrix::<f64>::zeros(states, states);
    for k in 0..states {
        // L_n^{(k)}(x) for n = 0..states-k by the three-term recurrence
        let mut prev = 0.0;
        let mut cur = 1.0;
        for n in 0..states - k {
            let m = n + k;
            let log_mag = 0.5 * (libm::lgamma((n + 1) as f64) - libm::lgamma((m + 1) as f64)) - 0.5 * x
                + if k > 0 { k as f64 * libm::log(libm::fabs(delta)) } else { 0.0 };
            let value = if k > 0 && delta == 0.0 { 0.0 } else { libm::exp(log_mag) * cur };
            let sign = if delta < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
            d[(m, n)] = sign * value;
            if k > 0 {
                // D_{n,m}(delta) = D_{m,n}(-delta)
                d[(n, m)] = if k % 2 == 1 { -sign * value } else { sign * value };
            }
            let nf = n as f64;
            let next = ((2.0 * nf + 1.0 + k as f64 - x) * cur - (nf + k as f64) * prev) / (nf + 1.0);
            prev = cur;
            cur = next;
        }
    }
    d
}

/// Frame in which the electronic state is compared against the Bell state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FidelityFrame {
    /// Plain partial trace over both phonon modes.
    Lab,
    /// After undoing each configuration's coherent displacement (Lang-Firsov frame).
    Polaron,
}

/// `<Phi| rho_el |Phi>` with `|Phi> = (|M,P> + |P,M>)/sqrt(2)`.
///
/// In spinful mode the Mott charge pattern spans several spin configurations;
/// the result is the maximum over all normalized spin superpositions `m` of
/// `(|m,P> + |P,m>)/sqrt(2)`.
pub fn bell_fidelity(
    psi: &[f64],
    electrons: &ElectronBasis,
    space: &HilbertSpace,
    params: &ModelParams,
    frame: FidelityFrame,
) -> Result<f64> {
    let [ne_a, ne_b, npa, npb] = space.factor_dims();
    if psi.len() != space.dim() {
        return Err(Error::LengthMismatch { expected: space.dim(), found: psi.len() });
    }
    if electrons.len() != ne_a || electrons.len() != ne_b {
        return Err(Error::LengthMismatch { expected: ne_a, found: electrons.len() });
    }
    let mott = electrons.indices_with_charges(&ChargeVector::MOTT.charges());
    let paired = electrons.indices_with_charges(&ChargeVector::PAIRED.charges());
    if mott.is_empty() || paired.len() != 1 {
        return Err(Error::InvalidSector("basis lacks the Mott or Paired charge pattern".into()));
    }
    let p = paired[0];
    let x = |e: usize| -mode_force(&electrons.config(e), params.g0) / params.omega0;
    let block = npa * npb;
    let phi = |ea: usize, eb: usize| {
        let s = (ea * ne_b + eb) * block;
        DMatrix::from_row_slice(npa, npb, &psi[s..s + block])
    };
    // <c|rho|c'> = <phi_c'| D_A(dA) D_B(dB) |phi_c>, d = x(c') - x(c)
    let element = |c: (usize, usize), cp: (usize, usize)| {
        let (fc, fcp) = (phi(c.0, c.1), phi(cp.0, cp.1));
        match frame {
            FidelityFrame::Lab => fc.dot(&fcp),
            FidelityFrame::Polaron => {
                let da = displacement_matrix(npa, x(cp.0) - x(c.0));
                let db = displacement_matrix(npb, x(cp.1) - x(c.1));
                fcp.dot(&(da * fc * db.transpose()))
            }
        }
    };
    let k = mott.len();
    let mut r = DMatrix::<f64>::zeros(k, k);
    for (i, &mi) in mott.iter().enumerate() {
        for (j, &mj) in mott.iter().enumerate() {
            let aa = element((mi, p), (mj, p));
            let bb = element((p, mi), (p, mj));
            let ab = element((mi, p), (p, mj));
            let ba = element((p, mi), (mj, p));
            r[(i, j)] = aa + bb + ab + ba;
        }
    }
    let r = 0.5 * (&r + r.transpose());
    let top = sorted_eigenvalues(r).last().copied().unwrap_or(0.0);
    Ok((0.5 * top).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Mott,
    Bell,
    Paired,
    Delocalized,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::Mott, Phase::Bell, Phase::Paired, Phase::Delocalized];

    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Mott => "Mott",
            Phase::Bell => "Bell",
            Phase::Paired => "Paired",
            Phase::Delocalized => "Delocalized",
        }
    }

    pub fn parse(s: &str) -> Option<Phase> {
        Phase::ALL.into_iter().find(|p| p.as_str().eq_ignore_ascii_case(s))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseThresholds {
    /// Mott below this double occupancy.
    pub mott_max: f64,
    /// Paired above this double occupancy.
    pub paired_min: f64,
    /// Bell needs `|D - 1|` below this ...
    pub bell_window: f64,
    /// ... and a Bell fidelity above this.
    pub bell_fidelity: f64,
    /// `|C|` bound for the insulating phases.
    pub charge_corr: f64,
}

impl Default for PhaseThresholds {
    fn default() -> Self {
        Self { mott_max: 0.25, paired_min: 1.75, bell_window: 0.25, bell_fidelity: 0.8, charge_corr: 0.02 }
    }
}

/// Label from tube-averaged `D`, `C` and the Bell fidelity.
///
/// `C` is a mean of connected correlators of a fixed-charge tube and therefore
/// never positive; its magnitude is compared.
pub fn classify_phase(d: f64, c_avg: f64, fidelity: f64, th: &PhaseThresholds) -> Phase {
    let quiet = c_avg.abs() < th.charge_corr;
    if d < th.mott_max && quiet {
        Phase::Mott
    } else if d > th.paired_min && quiet {
        Phase::Paired
    } else if (d - 1.0).abs() < th.bell_window && fidelity > th.bell_fidelity {
        Phase::Bell
    } else {
        Phase::Delocalized
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasureSettings {
    pub rdm_cap: usize,
    /// Relative eigenvalue cut defining the phonon supports for the negativity.
    pub support_tol: f64,
    pub fidelity_frame: FidelityFrame,
    pub thresholds: PhaseThresholds,
}

impl Default for MeasureSettings {
    fn default() -> Self {
        Self {
            rdm_cap: DEFAULT_RDM_CAP,
            support_tol: 1e-13,
            fidelity_frame: FidelityFrame::Polaron,
            thresholds: PhaseThresholds::default(),
        }
    }
}

/// Everything measured at one grid point. Index 0 is tube A, 1 is tube B.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableRecord {
    pub lambda: f64,
    pub t_over_u: f64,
    pub v_over_u: f64,
    /// Phonon basis states per tube.
    pub n_ph: usize,
    pub statistics: Statistics,
    pub seed: u64,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub near_degenerate: bool,
    /// Final phonon frame when the shift solver was used.
    pub shift: Option<[f64; 2]>,
    pub double_occupancy: [f64; 2],
    /// Lab-frame `<a+ a>`.
    pub phonon_number: [f64; 2],
    pub charge_corr_avg: [f64; 2],
    pub charge_corr_matrix: [[[f64; DOTS]; DOTS]; 2],
    pub phonon_variance: [f64; 2],
    pub mutual_info_phonon: f64,
    /// Von Neumann entropy of tube A (electrons and phonon).
    pub ent_entropy_ab: f64,
    pub negativity_phonon: f64,
    pub bell_fidelity: f64,
    pub phase: Phase,
}

impl ObservableRecord {
    pub fn mean_double_occupancy(&self) -> f64 {
        0.5 * (self.double_occupancy[0] + self.double_occupancy[1])
    }

    pub fn mean_charge_corr(&self) -> f64 {
        0.5 * (self.charge_corr_avg[0] + self.charge_corr_avg[1])
    }
}

/// Fills an [`ObservableRecord`] from a converged ground state of `system`.
pub fn measure_point(
    result: &GroundStateResult,
    system: &TwoTubeSystem,
    seed: u64,
    settings: &MeasureSettings,
) -> Result<ObservableRecord> {
    let psi = result.vector.as_slice();
    let space = system.space();
    let electrons = system.electrons();
    let params = system.params();
    let alpha = result.shift.unwrap_or([0.0; 2]);

    let charges = charge_statistics(psi, electrons, space)?;
    let moments = phonon_moments(psi, space)?;
    let mutual_info_phonon = mutual_information_phonons(psi, space, settings.rdm_cap)?;
    let ent_entropy_ab = subsystem_entropy(psi, FactorMask::TUBE_A, space, settings.rdm_cap)?;
    let negativity_phonon = phonon_negativity(psi, space, settings.support_tol, settings.rdm_cap)?;
    let bell = bell_fidelity(psi, electrons, space, params, settings.fidelity_frame)?;

    let double_occupancy = [charges[0].double_occupancy, charges[1].double_occupancy];
    let charge_corr_avg = [charges[0].average_correlation(), charges[1].average_correlation()];
    let d = 0.5 * (double_occupancy[0] + double_occupancy[1]);
    let c = 0.5 * (charge_corr_avg[0] + charge_corr_avg[1]);
    Ok(ObservableRecord {
        lambda: params.lambda(),
        t_over_u: params.t / params.u,
        v_over_u: params.v / params.u,
        n_ph: system.phonons().dim(),
        statistics: params.statistics,
        seed,
        energy: result.energy,
        residual: result.residual,
        iterations: result.iterations,
        near_degenerate: result.near_degenerate,
        shift: result.shift,
        double_occupancy,
        phonon_number: [moments[0].lab_number(alpha[0]), moments[1].lab_number(alpha[1])],
        charge_corr_avg,
        charge_corr_matrix: [charges[0].correlation, charges[1].correlation],
        phonon_variance: [moments[0].variance().max(0.0), moments[1].variance().max(0.0)],
        mutual_info_phonon,
        ent_entropy_ab,
        negativity_phonon,
        bell_fidelity: bell,
        phase: classify_phase(d, c, bell, &settings.thresholds),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{enumerate_sector, ElectronConfig, PhononBasis, Sector};
    use core::f64::consts::LN_2;

    fn charge_basis() -> ElectronBasis {
        enumerate_sector(4, Sector::Charge { total: 4 }).unwrap()
    }

    fn idx(b: &ElectronBasis, c: [u8; 4]) -> usize {
        b.index_of(&ElectronConfig::from_charges(&c).unwrap()).unwrap()
    }

    fn coherent(states: usize, beta: f64) -> Vec<f64> {
        displacement_matrix(states, beta).column(0).iter().copied().collect()
    }

    /// (|M,P> (x) |xM,xP> + |P,M> (x) |xP,xM>)/sqrt(2) with coherent phonons.
    fn bell_state(b: &ElectronBasis, space: &HilbertSpace, xm: f64, xp: f64) -> Vec<f64> {
        let n = space.factor_dims()[2];
        let (m, p) = (idx(b, [1, 1, 1, 1]), idx(b, [0, 2, 2, 0]));
        let (cm, cp) = (coherent(n, xm), coherent(n, xp));
        let mut psi = vec![0.0; space.dim()];
        for pa in 0..n {
            for pb in 0..n {
                psi[space.index(m, p, pa, pb).unwrap()] += cm[pa] * cp[pb] / 2f64.sqrt();
                psi[space.index(p, m, pa, pb).unwrap()] += cp[pa] * cm[pb] / 2f64.sqrt();
            }
        }
        psi
    }

    #[test]
    fn product_state_rdm_is_pure() {
        let b = charge_basis();
        let space = HilbertSpace::new(19, 19, 3, 3).unwrap();
        let mut psi = vec![0.0; space.dim()];
        psi[space.index(2, 5, 1, 0).unwrap()] = 0.6;
        psi[space.index(2, 5, 2, 0).unwrap()] = 0.8;
        let rho = reduced_density_matrix(&psi, FactorMask::TUBE_A, &space, 1000).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-14);
        assert!(von_neumann_entropy(&rho) < 1e-12);
        let ev = rho.eigenvalues();
        assert!((ev[ev.len() - 1] - 1.0).abs() < 1e-14);
        assert!(mutual_information_phonons(&psi, &space, 1000).unwrap() < 1e-12);
        let _ = b;
    }

    #[test]
    fn schmidt_pair_gives_ln2() {
        let b = charge_basis();
        let space = HilbertSpace::new(19, 19, 2, 2).unwrap();
        let mut psi = vec![0.0; space.dim()];
        let (m, p) = (idx(&b, [1, 1, 1, 1]), idx(&b, [0, 2, 2, 0]));
        psi[space.index(m, p, 0, 0).unwrap()] = 0.5f64.sqrt();
        psi[space.index(p, m, 0, 0).unwrap()] = 0.5f64.sqrt();
        let rho = reduced_density_matrix(&psi, FactorMask::ELECTRONS_A, &space, 100).unwrap();
        assert!((rho.matrix[(m, m)] - 0.5).abs() < 1e-15);
        assert!((rho.matrix[(p, p)] - 0.5).abs() < 1e-15);
        assert_eq!(rho.matrix[(m, p)], 0.0);
        assert!((von_neumann_entropy(&rho) - LN_2).abs() < 1e-14);
        assert!((subsystem_entropy(&psi, FactorMask::TUBE_A, &space, 100).unwrap() - LN_2).abs() < 1e-14);
    }

    #[test]
    fn maximally_mixed_entropy() {
        for d in [2usize, 3, 7] {
            let rho = DensityMatrix::new(DMatrix::identity(d, d) / d as f64, vec![d]).unwrap();
            assert!((von_neumann_entropy(&rho) - (d as f64).ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn negativity_reference_states() {
        let bell = {
            let v = [0.5f64.sqrt(), 0.0, 0.0, 0.5f64.sqrt()];
            DMatrix::from_fn(4, 4, |r, c| v[r] * v[c])
        };
        assert!((negativity(&bell, [2, 2]).unwrap() - 0.5).abs() < 1e-14);
        let classical = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 0.0, 0.0, 0.5]));
        assert!(negativity(&classical, [2, 2]).unwrap() < 1e-15);
        let product = {
            let a = [0.6, 0.8];
            let b = [0.8, -0.6];
            let v: Vec<f64> = (0..4).map(|k| a[k / 2] * b[k % 2]).collect();
            DMatrix::from_fn(4, 4, |r, c| v[r] * v[c])
        };
        assert!(negativity(&product, [2, 2]).unwrap() < 1e-15);
        assert!(negativity(&product, [3, 2]).is_err());
    }

    #[test]
    fn two_pointer_mixture_mutual_information() {
        // electrons carry which-path: phonons are |0,1> or |1,0> -> I = ln 2
        let b = charge_basis();
        let space = HilbertSpace::new(19, 19, 2, 2).unwrap();
        let (m, p) = (idx(&b, [1, 1, 1, 1]), idx(&b, [0, 2, 2, 0]));
        let mut psi = vec![0.0; space.dim()];
        psi[space.index(m, p, 0, 1).unwrap()] = 0.5f64.sqrt();
        psi[space.index(p, m, 1, 0).unwrap()] = 0.5f64.sqrt();
        let i = mutual_information_phonons(&psi, &space, 100).unwrap();
        assert!((i - LN_2).abs() < 1e-14);
        assert!(phonon_negativity(&psi, &space, 1e-13, 100).unwrap() < 1e-14);
    }

    #[test]
    fn displacement_matrix_is_unitary_and_shifts_vacuum() {
        let big = 80;
        for delta in [-1.3, -0.4, 0.0, 0.7, 2.2] {
            let d = displacement_matrix(big, delta);
            let back = displacement_matrix(big, -delta);
            let prod = &back * &d;
            for r in 0..30 {
                for c in 0..30 {
                    let expect = if r == c { 1.0 } else { 0.0 };
                    assert!((prod[(r, c)] - expect).abs() < 1e-12, "delta={delta} ({r},{c})");
                }
            }
            // D|0> is the coherent state with <a> = delta
            let col: Vec<f64> = d.column(0).iter().copied().collect();
            let mean: f64 = (1..big).map(|n| (n as f64).sqrt() * col[n] * col[n - 1]).sum();
            assert!((mean - delta).abs() < 1e-12);
        }
    }

    #[test]
    fn moments_of_coherent_product() {
        let space = HilbertSpace::new(1, 1, 40, 40).unwrap();
        let (a, b) = (1.5, -0.75);
        let (ca, cb) = (coherent(40, a), coherent(40, b));
        let psi: Vec<f64> = (0..1600).map(|k| ca[k / 40] * cb[k % 40]).collect();
        let m = phonon_moments(&psi, &space).unwrap();
        assert!((m[0].mean - a).abs() < 1e-12 && (m[1].mean - b).abs() < 1e-12);
        assert!((m[0].number - a * a).abs() < 1e-12);
        assert!(m[0].variance().abs() < 1e-12);
        assert!((m[1].lab_number(0.25) - (b + 0.25) * (b + 0.25)).abs() < 1e-12);
    }

    #[test]
    fn bell_fidelity_frames() {
        let b = charge_basis();
        let p = ModelParams::from_ratios(0.315, 0.0, 0.02, 0.65, Statistics::Charge).unwrap();
        let space = HilbertSpace::new(19, 19, 30, 30).unwrap();
        let x = |c: [u8; 4]| crate::lang_firsov::coherent_displacement(&c, p.g0, p.omega0).unwrap();
        let (xm, xp) = (x([1, 1, 1, 1]), x([0, 2, 2, 0]));
        let psi = bell_state(&b, &space, xm, xp);
        let polaron = bell_fidelity(&psi, &b, &space, &p, FidelityFrame::Polaron).unwrap();
        assert!((polaron - 1.0).abs() < 1e-10, "{polaron}");
        // lab frame: (1 + <xM,xP|xP,xM>)/2 = (1 + exp(-(xM - xP)^2))/2
        let lab = bell_fidelity(&psi, &b, &space, &p, FidelityFrame::Lab).unwrap();
        let expect = 0.5 * (1.0 + (-(xm - xp).powi(2)).exp());
        assert!((lab - expect).abs() < 1e-10, "{lab} vs {expect}");
        // antisymmetric combination is orthogonal to the Bell state
        let mut anti = psi.clone();
        let pm = idx(&b, [0, 2, 2, 0]) * 19 + idx(&b, [1, 1, 1, 1]);
        for v in &mut anti[pm * 900..(pm + 1) * 900] {
            *v = -*v;
        }
        assert!(bell_fidelity(&anti, &b, &space, &p, FidelityFrame::Polaron).unwrap() < 1e-10);
    }

    #[test]
    fn spinful_fidelity_maximizes_over_spin_patterns() {
        let b = enumerate_sector(4, Sector::Spinful { n_up: 2, n_down: 2 }).unwrap();
        let p = ModelParams::from_ratios(0.0, 0.0, 0.0, 0.65, Statistics::Spinful).unwrap();
        let space = HilbertSpace::new(36, 36, 2, 2).unwrap();
        let mott = b.indices_with_charges(&[1, 1, 1, 1]);
        let pair = b.indices_with_charges(&[0, 2, 2, 0])[0];
        let w = [0.6, 0.8];
        let mut psi = vec![0.0; space.dim()];
        for (k, &mi) in mott.iter().take(2).enumerate() {
            psi[space.index(mi, pair, 0, 0).unwrap()] = w[k] / 2f64.sqrt();
            psi[space.index(pair, mi, 0, 0).unwrap()] = w[k] / 2f64.sqrt();
        }
        let f = bell_fidelity(&psi, &b, &space, &p, FidelityFrame::Lab).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn charge_statistics_of_bell_pair() {
        let b = charge_basis();
        let space = HilbertSpace::new(19, 19, 4, 4).unwrap();
        let psi = bell_state(&b, &space, -0.3, -0.5);
        let s = charge_statistics(&psi, &b, &space).unwrap();
        for t in 0..2 {
            assert!((s[t].double_occupancy - 1.0).abs() < 1e-3);
            // half M, half P: n = (1,1,1,1) or (0,2,2,0)
            assert!((s[t].density[0] - 0.5).abs() < 1e-3);
            assert!(s[t].average_correlation() <= 1e-15);
            for i in 0..4 {
                for j in 0..4 {
                    assert_eq!(s[t].correlation[i][j], s[t].correlation[j][i]);
                }
            }
        }
    }

    #[test]
    fn phase_rule_examples() {
        let th = PhaseThresholds::default();
        assert_eq!(classify_phase(0.02, 0.001, 0.0, &th), Phase::Mott);
        assert_eq!(classify_phase(1.97, 0.004, 0.0, &th), Phase::Paired);
        assert_eq!(classify_phase(1.01, -0.1, 0.97, &th), Phase::Bell);
        assert_eq!(classify_phase(1.01, -0.1, 0.5, &th), Phase::Delocalized);
        assert_eq!(classify_phase(0.1, -0.05, 0.0, &th), Phase::Delocalized);
        for p in Phase::ALL {
            assert_eq!(Phase::parse(p.as_str()), Some(p));
        }
    }

    #[test]
    fn support_reduced_negativity_matches_full() {
        let space = HilbertSpace::new(2, 1, 3, 3).unwrap();
        let psi: Vec<f64> = {
            let raw: Vec<f64> =
                (0..18).map(|k| ((k * 7 % 11) as f64 - 5.0) * if k % 4 == 0 { 0.0 } else { 1.0 }).collect();
            let n = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
            raw.iter().map(|v| v / n).collect()
        };
        let full = reduced_density_matrix(&psi, FactorMask::PHONONS, &space, 100).unwrap();
        let a = negativity(&full.matrix, [3, 3]).unwrap();
        let b = phonon_negativity(&psi, &space, 1e-13, 100).unwrap();
        assert!(a > 1e-3);
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        let _ = PhononBasis::new(3).unwrap();
    }
}
