//! The three Hamiltonian levels: qubits plus a Fock-truncated bus resonator,
//! the dispersive exchange model, and the uniform one-axis-twisting ladder.
//!
//! Every operator is stored in angular units (rad/ns).

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::io::Write;
use std::sync::Arc;

use crate::device::{effective_coupling_matrix, DeviceConfig};
use crate::error::{Error, Result};
use crate::sectors::{binomial, SectorIndex};
use crate::sparse::CsrMatrix;
use crate::states::{Basis, PureState};
use crate::units::mhz_to_rad_per_ns;

/// Largest N·(n_max+1)·2^N accepted by [`build_h1`] unless overridden.
pub const H1_DEFAULT_BUDGET: usize = 14 * 3 * (1 << 14);
/// Largest number of stored entries accepted by [`build_h2`].
pub const H2_ENTRY_BUDGET: usize = 20_000_000;

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub enum OperatorHandle {
    /// One sparse matrix over a product basis or the qubit-resonator space.
    FullSparse { basis: Basis, matrix: CsrMatrix },
    /// One sparse block per excitation number k, of dimension C(N, k), over
    /// the members of [`SectorIndex`] in increasing bitstring order.
    SectorBlocked {
        n: usize,
        index: Arc<SectorIndex>,
        blocks: Vec<CsrMatrix>,
    },
    /// Energy of each Dicke level k.
    DickeDiagonal { n: usize, rates: Vec<f64> },
}

impl OperatorHandle {
    pub fn full_sparse(basis: Basis, matrix: CsrMatrix) -> Result<Self> {
        if matrix.dim() != basis.dim() {
            return Err(Error::LengthMismatch {
                expected: basis.dim(),
                got: matrix.dim(),
            });
        }
        Ok(Self::FullSparse { basis, matrix })
    }

    pub fn qubits(&self) -> usize {
        match self {
            Self::FullSparse { basis, .. } => basis.qubits(),
            Self::SectorBlocked { n, .. } | Self::DickeDiagonal { n, .. } => *n,
        }
    }

    /// The basis states must be expressed in to be propagated by this operator.
    pub fn basis(&self) -> Basis {
        match self {
            Self::FullSparse { basis, .. } => *basis,
            Self::SectorBlocked { n, .. } => Basis::Full(*n),
            Self::DickeDiagonal { n, .. } => Basis::Dicke(*n),
        }
    }

    pub fn form_name(&self) -> &'static str {
        match self {
            Self::FullSparse { .. } => "full-sparse",
            Self::SectorBlocked { .. } => "sector-blocked",
            Self::DickeDiagonal { .. } => "dicke-diagonal",
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            Self::FullSparse { matrix, .. } => matrix.nnz(),
            Self::SectorBlocked { blocks, .. } => blocks.iter().map(CsrMatrix::nnz).sum(),
            Self::DickeDiagonal { rates, .. } => rates.len(),
        }
    }

    /// Largest entry-wise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        match self {
            Self::FullSparse { matrix, .. } => matrix.hermiticity_error(),
            Self::SectorBlocked { blocks, .. } => blocks
                .iter()
                .map(CsrMatrix::hermiticity_error)
                .fold(0.0, f64::max),
            Self::DickeDiagonal { .. } => 0.0,
        }
    }

    pub fn is_hermitian(&self) -> bool {
        let scale = match self {
            Self::FullSparse { matrix, .. } => matrix.max_abs(),
            Self::SectorBlocked { blocks, .. } => {
                blocks.iter().map(CsrMatrix::max_abs).fold(0.0, f64::max)
            }
            Self::DickeDiagonal { .. } => 0.0,
        };
        self.hermiticity_error() <= HERMITIAN_TOL * scale.max(1.0)
    }

    /// H x for a vector in [`Self::basis`].
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        match self {
            Self::FullSparse { matrix, .. } => matrix.matvec(x, &mut y),
            Self::SectorBlocked { index, blocks, .. } => {
                for (k, block) in blocks.iter().enumerate() {
                    let members = index.sector(k);
                    let xs: Vec<C64> = members.iter().map(|&m| x[m as usize]).collect();
                    let mut ys = vec![C64::new(0.0, 0.0); xs.len()];
                    block.matvec(&xs, &mut ys);
                    for (&m, v) in members.iter().zip(ys) {
                        y[m as usize] = v;
                    }
                }
            }
            Self::DickeDiagonal { rates, .. } => {
                for ((yi, xi), r) in y.iter_mut().zip(x).zip(rates) {
                    *yi = xi * r;
                }
            }
        }
        y
    }

    /// ⟨ψ|H|ψ⟩ in rad/ns.
    pub fn expectation(&self, s: &PureState) -> Result<f64> {
        if s.basis() != self.basis() {
            return Err(Error::BasisMismatch(format!(
                "{} operator on {:?} state",
                self.form_name(),
                s.basis()
            )));
        }
        let hx = self.apply(s.amplitudes());
        Ok(crate::sparse::dot(s.amplitudes(), &hx).re)
    }

    /// Expand a sector-blocked operator into one sparse matrix over the product
    /// basis. Other forms are returned unchanged.
    pub fn to_full_sparse(&self) -> Self {
        match self {
            Self::SectorBlocked { n, index, blocks } => {
                let entries = blocks
                    .iter()
                    .enumerate()
                    .flat_map(|(k, b)| {
                        let members = index.sector(k);
                        b.entries()
                            .map(|(r, c, v)| (members[r] as usize, members[c] as usize, v))
                            .collect::<Vec<_>>()
                    })
                    .collect();
                Self::FullSparse {
                    basis: Basis::Full(*n),
                    matrix: CsrMatrix::from_triplets(1 << n, entries),
                }
            }
            other => other.clone(),
        }
    }

    /// Coordinate dump, `row col re im` per entry; sector-blocked operators
    /// are written one `# sector k dim d` section per block in in-sector
    /// coordinates.
    pub fn write_dump<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        match self {
            Self::FullSparse { basis, matrix } => {
                writeln!(w, "# full dim {}", basis.dim())?;
                matrix.write_coordinate(w)
            }
            Self::SectorBlocked { blocks, .. } => {
                for (k, b) in blocks.iter().enumerate() {
                    writeln!(w, "# sector {k} dim {}", b.dim())?;
                    b.write_coordinate(w)?;
                }
                Ok(())
            }
            Self::DickeDiagonal { rates, .. } => {
                writeln!(w, "# dicke dim {}", rates.len())?;
                for (k, r) in rates.iter().enumerate() {
                    writeln!(w, "{k} {k} {r:.17e} 0.00000000000000000e0")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorSpec {
    /// Highest photon number kept.
    pub n_max: usize,
    pub omega_ghz: f64,
}

impl ResonatorSpec {
    pub fn new(n_max: usize, omega_ghz: f64) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidArgument("photon cutoff must be >= 1".into()));
        }
        Ok(Self { n_max, omega_ghz })
    }
}

/// Frequencies and options for [`build_h1`]. The operator is written in the
/// frame rotating at `frame_ghz` on every excitation, which commutes with it.
#[derive(Debug, Clone, PartialEq)]
pub struct H1Spec {
    pub qubit_ghz: Vec<f64>,
    pub frame_ghz: f64,
    pub resonator: ResonatorSpec,
    pub include_crosstalk: bool,
    pub budget: usize,
}

impl H1Spec {
    /// Every qubit parked at ω_B + Δ, in the frame of that common frequency.
    pub fn uniform_detuning(n: usize, resonator: ResonatorSpec, detuning_mhz: f64) -> Self {
        let qubit = resonator.omega_ghz + detuning_mhz * 1e-3;
        Self {
            qubit_ghz: vec![qubit; n],
            frame_ghz: qubit,
            resonator,
            include_crosstalk: false,
            budget: H1_DEFAULT_BUDGET,
        }
    }
}

fn ghz_difference_rad_per_ns(a: f64, b: f64) -> f64 {
    mhz_to_rad_per_ns((a - b) * 1e3)
}

/// Ring pairs over a subset of `n` qubits with their tabulated strengths. The
/// closing pair is omitted for n = 2, where it would repeat the open pair.
fn ring_pairs(cfg: &DeviceConfig, subset: &[usize]) -> Vec<(usize, usize, f64)> {
    let n = subset.len();
    let xt = cfg.ring_crosstalk_mhz(subset);
    match n {
        0 | 1 => Vec::new(),
        2 => vec![(0, 1, xt[0])],
        _ => (0..n).map(|i| (i, (i + 1) % n, xt[i])).collect(),
    }
}

/// Qubits coupled to a bus resonator, on the joint space with index
/// photon · 2^N + bits.
pub fn build_h1(cfg: &DeviceConfig, subset: &[usize], spec: &H1Spec) -> Result<OperatorHandle> {
    cfg.check_subset(subset)?;
    let n = subset.len();
    if spec.qubit_ghz.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: spec.qubit_ghz.len(),
        });
    }
    let photons = spec.resonator.n_max;
    if photons < 1 {
        return Err(Error::InvalidArgument("photon cutoff must be >= 1".into()));
    }
    let size = n.saturating_mul(photons + 1).saturating_mul(1usize << n);
    if size > spec.budget {
        return Err(Error::Budget(format!(
            "N·(n_max+1)·2^N = {size} exceeds {}",
            spec.budget
        )));
    }
    let basis = Basis::Cavity { qubits: n, photons };
    let reg = 1usize << n;
    let g: Vec<f64> = cfg
        .couplings_mhz(subset)
        .into_iter()
        .map(mhz_to_rad_per_ns)
        .collect();
    let eps: Vec<f64> = spec
        .qubit_ghz
        .iter()
        .map(|&w| ghz_difference_rad_per_ns(w, spec.frame_ghz))
        .collect();
    let cavity = ghz_difference_rad_per_ns(spec.resonator.omega_ghz, spec.frame_ghz);
    let ring: Vec<(usize, usize, f64)> = if spec.include_crosstalk {
        ring_pairs(cfg, subset)
            .into_iter()
            .map(|(a, b, v)| (a, b, mhz_to_rad_per_ns(v)))
            .collect()
    } else {
        Vec::new()
    };

    let entries: Vec<(usize, usize, C64)> = (0..basis.dim())
        .into_par_iter()
        .flat_map_iter(|i| {
            let (p, x) = (i / reg, i % reg);
            let mut out = Vec::with_capacity(2 * n + 2 * ring.len() + 1);
            let diag: f64 =
                p as f64 * cavity + (0..n).filter(|j| x >> j & 1 == 1).map(|j| eps[j]).sum::<f64>();
            out.push((i, i, C64::new(diag, 0.0)));
            for j in 0..n {
                let bit = 1 << j;
                // σ⁺_j a takes (p, x) with qubit j empty to (p − 1, x | bit)
                if x & bit == 0 && p > 0 {
                    let to = (p - 1) * reg + (x | bit);
                    let v = C64::new(g[j] * (p as f64).sqrt(), 0.0);
                    out.push((to, i, v));
                    out.push((i, to, v));
                }
            }
            for &(a, b, v) in &ring {
                if (x >> a & 1) != (x >> b & 1) {
                    let y = x ^ (1 << a) ^ (1 << b);
                    out.push((p * reg + y, i, C64::new(v, 0.0)));
                }
            }
            out.into_iter()
        })
        .collect();
    OperatorHandle::full_sparse(basis, CsrMatrix::from_triplets(basis.dim(), entries))
}

/// Dispersive exchange model: pair couplings g_j g_k / Δ, Stark shifts
/// g_j² / Δ and, optionally, the nearest-neighbour ring. One block per
/// excitation number.
pub fn build_h2(
    cfg: &DeviceConfig,
    subset: &[usize],
    detuning_mhz: f64,
    include_crosstalk: bool,
) -> Result<OperatorHandle> {
    let lam_mhz = effective_coupling_matrix(cfg, subset, detuning_mhz)?;
    let n = subset.len();
    let lam: Vec<Vec<f64>> = lam_mhz
        .iter()
        .map(|row| row.iter().map(|&v| mhz_to_rad_per_ns(v)).collect())
        .collect();
    let mut pair = lam.clone();
    for j in 0..n {
        pair[j][j] = 0.0;
    }
    if include_crosstalk {
        for (a, b, v) in ring_pairs(cfg, subset) {
            let w = mhz_to_rad_per_ns(v);
            pair[a][b] += w;
            pair[b][a] += w;
        }
    }

    let estimate: f64 = (0..=n)
        .map(|k| binomial(n, k) * (1.0 + (k * (n - k)) as f64))
        .sum();
    if estimate > H2_ENTRY_BUDGET as f64 {
        return Err(Error::Budget(format!(
            "about {estimate:.0} stored entries exceeds {H2_ENTRY_BUDGET}"
        )));
    }

    let index = Arc::new(SectorIndex::new(n));
    let blocks: Vec<CsrMatrix> = (0..=n)
        .into_par_iter()
        .map(|k| {
            let members = index.sector(k);
            let mut entries = Vec::with_capacity(members.len() * (1 + k * (n - k)));
            for (r, &x) in members.iter().enumerate() {
                let stark: f64 = (0..n).filter(|j| x >> j & 1 == 1).map(|j| lam[j][j]).sum();
                entries.push((r, r, C64::new(stark, 0.0)));
                for j in (0..n).filter(|j| x >> j & 1 == 1) {
                    for l in (0..n).filter(|l| x >> l & 1 == 0) {
                        let v = pair[j][l];
                        if v != 0.0 {
                            let y = x ^ (1 << j) ^ (1 << l);
                            entries.push((index.position(y), r, C64::new(v, 0.0)));
                        }
                    }
                }
            }
            CsrMatrix::from_triplets(members.len(), entries)
        })
        .collect();
    Ok(OperatorHandle::SectorBlocked { n, index, blocks })
}

/// Linear and constant parts kept alongside the −λ̄k² twisting term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OatFrame {
    /// λ̄·k(N−k+1): the uniform-coupling exchange model including Stark shifts.
    #[default]
    Exchange,
    /// −λ̄(N−2k)²/4 = −λ̄ S_z²/4 with no linear or constant part.
    Quadratic,
    /// λ̄·k(N−k−1): pair exchange only, with the collective ladder shifted so
    /// that the cat at t = π/2λ̄ is oriented as the reference state.
    Aligned,
}

impl std::str::FromStr for OatFrame {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exchange" => Ok(Self::Exchange),
            "quadratic" => Ok(Self::Quadratic),
            "aligned" => Ok(Self::Aligned),
            other => Err(Error::InvalidArgument(format!("unknown OAT frame {other:?}"))),
        }
    }
}

/// Dicke-diagonal one-axis-twisting model with twisting strength λ̄ (MHz).
pub fn build_oat_uniform(n: usize, lambda_mhz: f64, frame: OatFrame) -> Result<OperatorHandle> {
    if n == 0 {
        return Err(Error::InvalidArgument("OAT model needs at least one qubit".into()));
    }
    let lam = mhz_to_rad_per_ns(lambda_mhz);
    let nf = n as f64;
    let rates = (0..=n)
        .map(|k| {
            let kf = k as f64;
            match frame {
                OatFrame::Exchange => lam * kf * (nf - kf + 1.0),
                OatFrame::Quadratic => -lam * (nf - 2.0 * kf).powi(2) / 4.0,
                OatFrame::Aligned => lam * kf * (nf - kf - 1.0),
            }
        })
        .collect();
    Ok(OperatorHandle::DickeDiagonal { n, rates })
}

/// True iff every stored entry connects basis states with equal excitation
/// number (qubit excitations plus photons).
pub fn conserved_excitation_check(op: &OperatorHandle) -> bool {
    match op {
        OperatorHandle::FullSparse { basis, matrix } => matrix
            .entries()
            .all(|(r, c, _)| basis.excitations(r) == basis.excitations(c)),
        OperatorHandle::SectorBlocked { n, index, blocks } => {
            blocks.len() == n + 1
                && blocks.iter().enumerate().all(|(k, b)| {
                    b.dim() == index.sector(k).len()
                        && b.entries().all(|(r, c, _)| {
                            index.sector(k)[r].count_ones() == index.sector(k)[c].count_ones()
                        })
                })
        }
        OperatorHandle::DickeDiagonal { .. } => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn uniform_cfg(g: f64) -> DeviceConfig {
        DeviceConfig::table_s1().with_uniform_coupling(g).unwrap()
    }

    fn block_eigenvalues(b: &CsrMatrix) -> Vec<f64> {
        let d: DMatrix<C64> = b.to_dense();
        let mut ev: Vec<f64> = d
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    #[test]
    fn h2_pair_element_and_empty_sector() {
        let cfg = DeviceConfig::table_s1();
        let op = build_h2(&cfg, &[0, 1], -330.0, false).unwrap();
        let OperatorHandle::SectorBlocked { blocks, index, .. } = &op else {
            panic!("expected sector blocks");
        };
        assert_eq!(blocks[0].dim(), 1);
        assert_eq!(blocks[0].nnz(), 0);
        let g = cfg.couplings_mhz(&[0, 1]);
        let expect = mhz_to_rad_per_ns(g[0] * g[1] / -330.0);
        let (a, b) = (index.position(0b01), index.position(0b10));
        assert!((blocks[1].get(a, b).re - expect).abs() < 1e-15);
        assert!(op.is_hermitian());
        assert!(conserved_excitation_check(&op));
    }

    #[test]
    fn h2_block_dims_are_binomial() {
        let op = build_h2(&DeviceConfig::table_s1(), &(0..9).collect::<Vec<_>>(), -470.0, true)
            .unwrap();
        let OperatorHandle::SectorBlocked { blocks, .. } = &op else {
            unreachable!()
        };
        let dims: Vec<usize> = blocks.iter().map(CsrMatrix::dim).collect();
        assert_eq!(dims, (0..=9).map(|k| binomial(9, k) as usize).collect::<Vec<_>>());
        assert_eq!(dims.iter().sum::<usize>(), 512);
        assert!(op.is_hermitian());
    }

    #[test]
    fn h2_scales_as_inverse_detuning() {
        let cfg = DeviceConfig::table_s1();
        let a = build_h2(&cfg, &[0, 1, 2, 3], -300.0, false).unwrap().to_full_sparse();
        let b = build_h2(&cfg, &[0, 1, 2, 3], -600.0, false).unwrap().to_full_sparse();
        let (OperatorHandle::FullSparse { matrix: ma, .. }, OperatorHandle::FullSparse { matrix: mb, .. }) =
            (&a, &b)
        else {
            unreachable!()
        };
        for ((r1, c1, v1), (r2, c2, v2)) in ma.entries().zip(mb.entries()) {
            assert_eq!((r1, c1), (r2, c2));
            assert!((v1 - v2 * 2.0).norm() <= 1e-15 * v1.norm());
        }
    }

    #[test]
    fn uniform_h2_spectrum_contains_the_dicke_levels() {
        for n in 2..=8 {
            let cfg = uniform_cfg(27.5);
            let subset: Vec<usize> = (0..n).collect();
            let h2 = build_h2(&cfg, &subset, -400.0, false).unwrap();
            let lam = 27.5 * 27.5 / -400.0;
            let OperatorHandle::DickeDiagonal { rates, .. } =
                build_oat_uniform(n, lam, OatFrame::Exchange).unwrap()
            else {
                unreachable!()
            };
            let OperatorHandle::SectorBlocked { blocks, .. } = &h2 else {
                unreachable!()
            };
            for (k, b) in blocks.iter().enumerate() {
                let ev = block_eigenvalues(b);
                assert!(
                    ev.iter().any(|e| (e - rates[k]).abs() < 1e-12),
                    "N={n} k={k}: {ev:?} lacks {}",
                    rates[k]
                );
            }
        }
    }

    #[test]
    fn oat_frames_share_the_quadratic_coefficient() {
        let n = 7;
        let lam = 1.3;
        let get = |f| match build_oat_uniform(n, lam, f).unwrap() {
            OperatorHandle::DickeDiagonal { rates, .. } => rates,
            _ => unreachable!(),
        };
        let (e, q, a) = (get(OatFrame::Exchange), get(OatFrame::Quadratic), get(OatFrame::Aligned));
        let w = mhz_to_rad_per_ns(lam);
        for k in 0..=n {
            let kf = k as f64;
            let c = w * (n * n) as f64 / 4.0;
            assert!((e[k] - q[k] - (w * kf + c)).abs() < 1e-12);
            assert!((a[k] - e[k] + 2.0 * w * kf).abs() < 1e-12);
        }
        // one qubit: the quadratic part is a constant
        let one = get_one();
        assert!((one[0] - one[1]).abs() < 1e-15);
    }

    fn get_one() -> Vec<f64> {
        match build_oat_uniform(1, 2.0, OatFrame::Quadratic).unwrap() {
            OperatorHandle::DickeDiagonal { rates, .. } => rates,
            _ => unreachable!(),
        }
    }

    #[test]
    fn h1_conserves_excitations_and_is_hermitian() {
        let cfg = DeviceConfig::table_s1();
        let res = ResonatorSpec::new(2, cfg.resonator_ghz).unwrap();
        let mut spec = H1Spec::uniform_detuning(3, res, -330.0);
        spec.include_crosstalk = true;
        let op = build_h1(&cfg, &[0, 1, 2], &spec).unwrap();
        assert_eq!(op.basis(), Basis::Cavity { qubits: 3, photons: 2 });
        assert!(op.is_hermitian());
        assert!(conserved_excitation_check(&op));
    }

    #[test]
    fn h1_without_couplings_is_diagonal() {
        let mut cfg = DeviceConfig::table_s1();
        for q in &mut cfg.qubits {
            q.g_mhz = 1e-300;
        }
        let res = ResonatorSpec::new(1, cfg.resonator_ghz).unwrap();
        let spec = H1Spec::uniform_detuning(2, res, -100.0);
        let op = build_h1(&cfg, &[0, 1], &spec).unwrap();
        let OperatorHandle::FullSparse { matrix, .. } = &op else {
            unreachable!()
        };
        assert!(matrix.entries().all(|(r, c, v)| r == c || v.norm() < 1e-290));
    }

    #[test]
    fn h1_vacuum_rabi_splitting_is_twice_g() {
        let cfg = DeviceConfig::table_s1();
        let res = ResonatorSpec::new(1, cfg.resonator_ghz).unwrap();
        let spec = H1Spec::uniform_detuning(1, res, 0.0);
        let op = build_h1(&cfg, &[0], &spec).unwrap();
        let OperatorHandle::FullSparse { matrix, .. } = &op else {
            unreachable!()
        };
        // one-excitation manifold: |1, vac⟩ (index 1) and |0, 1 photon⟩ (index 2)
        let sub = DMatrix::from_fn(2, 2, |r, c| matrix.get(r + 1, c + 1));
        let ev = sub.symmetric_eigen().eigenvalues;
        let split = (ev[0] - ev[1]).abs();
        assert!((split - 2.0 * mhz_to_rad_per_ns(27.6)).abs() < 1e-12);
    }

    #[test]
    fn h1_budget_refuses_large_registers() {
        let cfg = DeviceConfig::table_s1();
        let res = ResonatorSpec::new(2, cfg.resonator_ghz).unwrap();
        let spec = H1Spec::uniform_detuning(15, res, -330.0);
        let subset: Vec<usize> = (0..15).collect();
        assert!(matches!(build_h1(&cfg, &subset, &spec), Err(Error::Budget(_))));
        assert!(ResonatorSpec::new(0, 5.5).is_err());
    }

    #[test]
    fn injected_sigma_x_breaks_conservation() {
        let entries = vec![(0, 1, C64::new(1.0, 0.0)), (1, 0, C64::new(1.0, 0.0))];
        let op = OperatorHandle::full_sparse(Basis::Full(1), CsrMatrix::from_triplets(2, entries))
            .unwrap();
        assert!(op.is_hermitian());
        assert!(!conserved_excitation_check(&op));
    }

    #[test]
    fn dump_lists_sectors() {
        let op = build_h2(&DeviceConfig::table_s1(), &[0, 1, 2], -330.0, false).unwrap();
        let mut out = Vec::new();
        op.write_dump(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("# sector")).count(), 4);
        assert!(text.contains("# sector 1 dim 3"));
    }
}
