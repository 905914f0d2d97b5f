//! Pure states in the product basis, the symmetric (Dicke) ladder, and the
//! joint qubit-resonator space, with the coherent-state and cat builders.
//!
//! Bit j of a product-basis index is qubit j of the selected subset, with 1
//! meaning excited. Amplitudes of the joint space are laid out photon-major:
//! index = photon · 2^N + qubit bits.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::device::MAX_QUBITS;
use crate::error::{Error, Result};
use crate::sectors::{binomial, binomial_weight};

pub type C64 = Complex64;

/// Largest ladder the Dicke representation accepts.
pub const MAX_DICKE_QUBITS: usize = 10_000;

const NORM_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    /// 2^N product states.
    Full(usize),
    /// N + 1 symmetric states indexed by excitation number.
    Dicke(usize),
    /// Product states tensored with a resonator truncated at `photons` quanta.
    Cavity { qubits: usize, photons: usize },
}

impl Basis {
    pub fn qubits(&self) -> usize {
        match *self {
            Basis::Full(n) | Basis::Dicke(n) => n,
            Basis::Cavity { qubits, .. } => qubits,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Basis::Full(n) => 1 << n,
            Basis::Dicke(n) => n + 1,
            Basis::Cavity { qubits, photons } => (1 << qubits) * (photons + 1),
        }
    }

    /// Excitation number of basis element `i` (qubit excitations plus photons).
    pub fn excitations(&self, i: usize) -> usize {
        match *self {
            Basis::Full(_) => i.count_ones() as usize,
            Basis::Dicke(_) => i,
            Basis::Cavity { qubits, .. } => {
                (i & ((1 << qubits) - 1)).count_ones() as usize + (i >> qubits)
            }
        }
    }

    fn check(&self) -> Result<()> {
        match *self {
            Basis::Full(n) | Basis::Cavity { qubits: n, .. } if n == 0 || n > MAX_QUBITS => {
                Err(Error::QubitCount(n))
            }
            Basis::Dicke(n) if n == 0 || n > MAX_DICKE_QUBITS => Err(Error::InvalidArgument(
                format!("Dicke ladder size {n} outside [1, {MAX_DICKE_QUBITS}]"),
            )),
            _ => Ok(()),
        }
    }
}

/// Polar and azimuthal angles of a Bloch direction. θ is clamped to [0, π];
/// φ is kept as given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochDirection {
    pub theta: f64,
    pub phi: f64,
}

impl BlochDirection {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self {
            theta: theta.clamp(0.0, PI),
            phi,
        }
    }

    /// Single-qubit amplitudes (cos θ/2, sin θ/2 · e^{iφ}).
    pub fn spinor(&self) -> [C64; 2] {
        let (s, c) = (self.theta / 2.0).sin_cos();
        [C64::new(c, 0.0), C64::from_polar(s, self.phi)]
    }

    /// Unit vector (x, y, z) on the Bloch sphere.
    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    basis: Basis,
    amps: Vec<C64>,
}

impl PureState {
    /// Wrap amplitudes that are already normalized (within 1e-10).
    pub fn new(basis: Basis, amps: Vec<C64>) -> Result<Self> {
        basis.check()?;
        if amps.len() != basis.dim() {
            return Err(Error::LengthMismatch {
                expected: basis.dim(),
                got: amps.len(),
            });
        }
        let norm2 = norm_sqr(&amps);
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "state norm² {norm2} differs from 1"
            )));
        }
        Ok(Self { basis, amps })
    }

    /// Normalize and wrap arbitrary nonzero amplitudes.
    pub fn normalized(basis: Basis, mut amps: Vec<C64>) -> Result<Self> {
        basis.check()?;
        if amps.len() != basis.dim() {
            return Err(Error::LengthMismatch {
                expected: basis.dim(),
                got: amps.len(),
            });
        }
        let norm = norm_sqr(&amps).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize a zero vector".into()));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { basis, amps })
    }

    pub(crate) fn from_parts_unchecked(basis: Basis, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), basis.dim());
        Self { basis, amps }
    }

    /// Computational basis state `index` (product-basis indices only).
    pub fn basis_state(n: usize, index: usize) -> Result<Self> {
        let basis = Basis::Full(n);
        basis.check()?;
        if index >= basis.dim() {
            return Err(Error::InvalidArgument(format!("index {index} out of range")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { basis, amps })
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn qubits(&self) -> usize {
        self.basis.qubits()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amps).sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Multiply by a global phase e^{iα}.
    pub fn with_global_phase(&self, alpha: f64) -> Self {
        let p = C64::from_polar(1.0, alpha);
        Self {
            basis: self.basis,
            amps: self.amps.iter().map(|a| a * p).collect(),
        }
    }

    /// Unnormalized qubit-register slices, one per photon number. A product-
    /// basis state is a single slice.
    pub fn qubit_slices(&self) -> Result<Vec<Vec<C64>>> {
        match self.basis {
            Basis::Full(_) => Ok(vec![self.amps.clone()]),
            Basis::Cavity { qubits, .. } => Ok(self
                .amps
                .chunks(1 << qubits)
                .map(<[C64]>::to_vec)
                .collect()),
            Basis::Dicke(_) => Err(Error::BasisMismatch(
                "qubit slices need a product-basis state".into(),
            )),
        }
    }

    /// Qubit-only state for the resonator vacuum component (renormalized),
    /// together with the vacuum weight.
    pub fn vacuum_component(&self) -> Result<(PureState, f64)> {
        match self.basis {
            Basis::Cavity { qubits, .. } => {
                let slice = self.amps[..1 << qubits].to_vec();
                let w = norm_sqr(&slice);
                Ok((PureState::normalized(Basis::Full(qubits), slice)?, w))
            }
            _ => Err(Error::BasisMismatch("state has no resonator".into())),
        }
    }

    /// Embed a product-basis state into the joint space with the resonator in
    /// vacuum.
    pub fn with_resonator_vacuum(&self, photons: usize) -> Result<PureState> {
        let Basis::Full(n) = self.basis else {
            return Err(Error::BasisMismatch("expected a product-basis state".into()));
        };
        let basis = Basis::Cavity { qubits: n, photons };
        let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
        amps[..self.amps.len()].copy_from_slice(&self.amps);
        Ok(PureState { basis, amps })
    }

    pub fn to_json(&self) -> String {
        let file = StateFile {
            basis: match self.basis {
                Basis::Full(_) => "full",
                Basis::Dicke(_) => "dicke",
                Basis::Cavity { .. } => "cavity",
            }
            .into(),
            n: self.qubits(),
            n_max: match self.basis {
                Basis::Cavity { photons, .. } => Some(photons),
                _ => None,
            },
            re: self.amps.iter().map(|a| a.re).collect(),
            im: self.amps.iter().map(|a| a.im).collect(),
        };
        serde_json::to_string(&file).expect("state serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: StateFile = serde_json::from_str(text)?;
        let basis = match (file.basis.as_str(), file.n_max) {
            ("full", None) => Basis::Full(file.n),
            ("dicke", None) => Basis::Dicke(file.n),
            ("cavity", Some(photons)) => Basis::Cavity {
                qubits: file.n,
                photons,
            },
            (b, _) => return Err(Error::Parse(format!("unknown basis tag {b:?}"))),
        };
        if file.re.len() != file.im.len() {
            return Err(Error::LengthMismatch {
                expected: file.re.len(),
                got: file.im.len(),
            });
        }
        let amps = file
            .re
            .iter()
            .zip(&file.im)
            .map(|(&re, &im)| C64::new(re, im))
            .collect();
        PureState::new(basis, amps)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    basis: String,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_max: Option<usize>,
    re: Vec<f64>,
    im: Vec<f64>,
}

pub(crate) fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// Dicke-ladder amplitudes of the coherent state |θ, φ⟩:
/// √C(N,k) cos^{N−k}(θ/2) sin^k(θ/2) e^{ikφ}.
pub fn coherent_dicke_amplitudes(n: usize, dir: BlochDirection) -> Vec<C64> {
    let (s, c) = (dir.theta / 2.0).sin_cos();
    (0..=n)
        .map(|k| C64::from_polar(binomial_weight(n, k, c.abs(), s.abs()), k as f64 * dir.phi))
        .collect()
}

/// Product-state amplitude of |θ,φ⟩ on a weight-k bitstring, per weight.
pub(crate) fn coherent_weight_amplitudes(n: usize, dir: BlochDirection) -> Vec<C64> {
    let [a0, a1] = dir.spinor();
    (0..=n)
        .map(|k| a0.powi((n - k) as i32) * a1.powi(k as i32))
        .collect()
}

/// Atomic coherent state [cos θ/2 |0⟩ + sin θ/2 e^{iφ} |1⟩]^{⊗N}.
pub fn atomic_coherent_state(n: usize, dir: BlochDirection, basis: Basis) -> Result<PureState> {
    match basis {
        Basis::Dicke(m) if m == n => {
            basis.check()?;
            Ok(PureState::from_parts_unchecked(
                basis,
                coherent_dicke_amplitudes(n, dir),
            ))
        }
        Basis::Full(m) if m == n => {
            basis.check()?;
            let per_weight = coherent_weight_amplitudes(n, dir);
            let amps = (0..basis.dim())
                .into_par_iter()
                .map(|x| per_weight[x.count_ones() as usize])
                .collect();
            Ok(PureState::from_parts_unchecked(basis, amps))
        }
        Basis::Cavity { .. } => Err(Error::BasisMismatch(
            "coherent states are built on the qubit register".into(),
        )),
        _ => Err(Error::BasisMismatch(format!(
            "basis {basis:?} does not hold {n} qubits"
        ))),
    }
}

/// Two-component cat reached at t = π/2|λ| from |θ, φ⟩:
/// e^{−i(N−½)π/2}/√2 · [|θ, φ − (N−1)π/2⟩ + e^{−iπ/2} |θ, φ − (N−3)π/2⟩],
/// renormalized (the components are orthogonal only on the equator).
pub fn ghz_reference_state(n: usize, dir: BlochDirection, basis: Basis) -> Result<PureState> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "cat reference needs at least 2 qubits, got {n}"
        )));
    }
    let nf = n as f64;
    let a = atomic_coherent_state(
        n,
        BlochDirection::new(dir.theta, dir.phi - (nf - 1.0) * FRAC_PI_2),
        basis,
    )?;
    let b = atomic_coherent_state(
        n,
        BlochDirection::new(dir.theta, dir.phi - (nf - 3.0) * FRAC_PI_2),
        basis,
    )?;
    let global = C64::from_polar(std::f64::consts::FRAC_1_SQRT_2, -(nf - 0.5) * FRAC_PI_2);
    let rel = C64::from_polar(1.0, -FRAC_PI_2);
    let amps = a
        .amps
        .iter()
        .zip(&b.amps)
        .map(|(x, y)| global * (x + rel * y))
        .collect();
    PureState::normalized(basis, amps)
}

/// ⟨a|b⟩.
pub fn overlap(a: &PureState, b: &PureState) -> Result<C64> {
    if a.basis != b.basis {
        return Err(Error::BasisMismatch(format!(
            "{:?} vs {:?}",
            a.basis, b.basis
        )));
    }
    Ok(a
        .amps
        .iter()
        .zip(&b.amps)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// |⟨a|b⟩|², the phase-insensitive comparison used throughout.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(overlap(a, b)?.norm_sqr())
}

/// Spread a Dicke-ladder state over the product basis.
pub fn dicke_embed(s: &PureState) -> Result<PureState> {
    let Basis::Dicke(n) = s.basis else {
        return Err(Error::BasisMismatch("expected a Dicke-basis state".into()));
    };
    if n > MAX_QUBITS {
        return Err(Error::QubitCount(n));
    }
    let scale: Vec<C64> = (0..=n)
        .map(|k| s.amps[k] / binomial(n, k).sqrt())
        .collect();
    let amps = (0..1usize << n)
        .into_par_iter()
        .map(|x| scale[x.count_ones() as usize])
        .collect();
    Ok(PureState::from_parts_unchecked(Basis::Full(n), amps))
}

/// Project a product-basis state onto the symmetric subspace. Returns the
/// Dicke state and the squared norm of the discarded non-symmetric part.
pub fn dicke_project_with_residual(s: &PureState) -> Result<(PureState, f64)> {
    let Basis::Full(n) = s.basis else {
        return Err(Error::BasisMismatch("expected a product-basis state".into()));
    };
    let mut sums = vec![C64::new(0.0, 0.0); n + 1];
    for (x, a) in s.amps.iter().enumerate() {
        sums[x.count_ones() as usize] += a;
    }
    let dicke: Vec<C64> = sums
        .iter()
        .enumerate()
        .map(|(k, v)| v / binomial(n, k).sqrt())
        .collect();
    let kept = norm_sqr(&dicke);
    let residual = (norm_sqr(&s.amps) - kept).max(0.0);
    let state = PureState::normalized(Basis::Dicke(n), dicke)?;
    Ok((state, residual))
}

/// Inverse of [`dicke_embed`] on symmetric states; errors when the
/// non-symmetric residual exceeds 1e-8.
pub fn dicke_project(s: &PureState) -> Result<PureState> {
    let (state, residual) = dicke_project_with_residual(s)?;
    if residual > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(residual));
    }
    Ok(state)
}

/// Per-qubit rotation exp(−iβ/2 (cos α X + sin α Y)) followed by the phase
/// gate diag(1, e^{iζ}) (ζ = `z_phase`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QubitRotation {
    pub axis: f64,
    pub angle: f64,
    pub z_phase: f64,
}

impl QubitRotation {
    pub fn equatorial(axis: f64, angle: f64) -> Self {
        Self {
            axis,
            angle,
            z_phase: 0.0,
        }
    }

    pub fn phase(z_phase: f64) -> Self {
        Self {
            axis: 0.0,
            angle: 0.0,
            z_phase,
        }
    }

    /// X_{π/2}.
    pub fn x_half() -> Self {
        Self::equatorial(0.0, FRAC_PI_2)
    }

    /// Y_{π/2}.
    pub fn y_half() -> Self {
        Self::equatorial(FRAC_PI_2, FRAC_PI_2)
    }

    /// 2×2 matrix in row-major order [[u00, u01], [u10, u11]].
    pub fn matrix(&self) -> [[C64; 2]; 2] {
        let (s, c) = (self.angle / 2.0).sin_cos();
        let i = C64::new(0.0, 1.0);
        let r = [
            [C64::new(c, 0.0), -i * s * C64::from_polar(1.0, -self.axis)],
            [-i * s * C64::from_polar(1.0, self.axis), C64::new(c, 0.0)],
        ];
        let z = C64::from_polar(1.0, self.z_phase);
        [r[0], [r[1][0] * z, r[1][1] * z]]
    }
}

/// One entry per qubit of the register.
pub type LocalRotation = Vec<QubitRotation>;

/// Apply one 2×2 unitary to bit `bit` of every index in `amps`.
pub(crate) fn apply_single_qubit(amps: &mut [C64], bit: usize, u: &[[C64; 2]; 2]) {
    let stride = 1usize << bit;
    amps.par_chunks_mut(stride * 2).for_each(|block| {
        let (lo, hi) = block.split_at_mut(stride);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x0, x1) = (*a0, *a1);
            *a0 = u[0][0] * x0 + u[0][1] * x1;
            *a1 = u[1][0] * x0 + u[1][1] * x1;
        }
    });
}

/// Apply per-qubit rotations to a product-basis (or joint qubit-resonator)
/// state.
pub fn apply_local_rotations(s: &PureState, rot: &[QubitRotation]) -> Result<PureState> {
    let n = match s.basis {
        Basis::Full(n) | Basis::Cavity { qubits: n, .. } => n,
        Basis::Dicke(_) => {
            return Err(Error::BasisMismatch(
                "local rotations act on product-basis states".into(),
            ))
        }
    };
    if rot.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: rot.len(),
        });
    }
    let mut amps = s.amps.clone();
    rotate_in_place(&mut amps, rot);
    Ok(PureState::from_parts_unchecked(s.basis, amps))
}

/// Rotation on a raw register vector (low bits are qubits).
pub(crate) fn rotate_in_place(amps: &mut [C64], rot: &[QubitRotation]) {
    for (j, r) in rot.iter().enumerate() {
        if r.angle == 0.0 && r.z_phase == 0.0 {
            continue;
        }
        apply_single_qubit(amps, j, &r.matrix());
    }
}
